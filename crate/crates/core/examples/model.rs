//! Builds a disordered sample and prints its size and the lowest energies.
//!
//!     cargo run --release --example model -- 12 4.0

use topo_index::model::{Boundary, ModelSpec, Sample};
use topo_index::spectral::eigenvalues;

fn main() -> topo_index::Result<()> {
    let mut args = std::env::args().skip(1);
    let side: usize = args.next().map_or(12, |s| s.parse().expect("side length"));
    let width: f64 = args.next().map_or(4.0, |s| s.parse().expect("disorder width"));

    let spec = ModelSpec::chern(side, Boundary::Open).with_disorder(width, 1);
    println!("{}", spec.to_json());
    let sample = Sample::generate(&spec, 0)?;
    let h = &sample.hamiltonian;
    println!("sites {}  dim {}  nnz {}", sample.lattice.num_sites(), h.dim(), h.nnz());

    let values = eigenvalues(h)?;
    let shown: Vec<String> = values.iter().take(6).map(|v| format!("{v:.4}")).collect();
    println!("lowest energies: {}", shown.join(" "));
    Ok(())
}
