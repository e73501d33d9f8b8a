//! Bott index of a disordered torus against the Fermi level, with the
//! compressed-matrix and full-size formulas side by side.
//!
//!     cargo run --release --example bott -- 12 6.0

use faer::Mat;
use num_complex::Complex64 as C64;
use topo_index::bott::{bott_index_large, bott_index_small, BottOptions, CompressedPair};
use topo_index::model::{periodic_observables, Boundary, ModelSpec, Sample};
use topo_index::spectral::{diagonalize, fermi_basis, projector};

fn main() -> topo_index::Result<()> {
    let mut args = std::env::args().skip(1);
    let side: usize = args.next().map_or(12, |s| s.parse().expect("side length"));
    let width: f64 = args.next().map_or(6.0, |s| s.parse().expect("disorder width"));

    let spec = ModelSpec::chern(side, Boundary::Periodic).with_disorder(width, 7);
    let sample = Sample::generate(&spec, 0)?;
    let obs = periodic_observables(&sample.lattice)?;
    let eig = diagonalize(&sample.hamiltonian)?;
    let n = obs.u.len();
    let diag = |d: &[C64]| Mat::<C64>::from_fn(n, n, |i, j| if i == j { d[i] } else { C64::default() });
    let (u, v) = (diag(&obs.u), diag(&obs.v));

    println!("{:>6} {:>6} {:>10} {:>10} {:>10}", "E_F", "index", "raw", "large", "int err");
    for k in 0..=8 {
        let ef = -4.0 + 0.5 * k as f64;
        let fermi = fermi_basis(&eig, ef);
        if fermi.is_degenerate() {
            continue;
        }
        let pair = CompressedPair::from_fermi(&fermi, &obs)?;
        let opts = BottOptions::default();
        match bott_index_small(pair.u1.as_ref(), pair.v1.as_ref(), opts) {
            Ok(small) => {
                let p = projector(&fermi).to_dense();
                let large = bott_index_large(u.as_ref(), v.as_ref(), p.as_ref(), opts)?;
                println!(
                    "{ef:>6.2} {:>6} {:>10.6} {:>10.6} {:>10.1e}",
                    small.index, small.raw, large.raw, small.integer_error
                );
            }
            Err(e) => println!("{ef:>6.2} {e}"),
        }
    }
    Ok(())
}
