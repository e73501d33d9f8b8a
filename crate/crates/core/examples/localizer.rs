//! Localizer index and gap at the centre of a clean open square as κ
//! varies. Very small and very large κ give index 0.
//!
//!     cargo run --release --example localizer -- 20

use std::time::Instant;

use topo_index::localizer::{localizer_index, LocalizerProbe};
use topo_index::model::{position_operators, Boundary, ModelSpec, PositionScaling, Sample};

fn main() -> topo_index::Result<()> {
    let side: usize = std::env::args().nth(1).map_or(20, |s| s.parse().expect("side length"));
    let sample = Sample::generate(&ModelSpec::chern(side, Boundary::Open), 0)?;
    let (x, y) = position_operators(&sample.lattice, PositionScaling::Raw)?;

    for kappa in [1e-6, 0.01, 0.1, 1.0, 10.0, 1e3] {
        let t = Instant::now();
        let r = localizer_index(&x, &y, &sample.hamiltonian, &LocalizerProbe::origin(kappa)?)?;
        println!(
            "κ={kappa:<8e} index {:>2}  gap {:.4e}  singular {}  ({:.2?})",
            r.index,
            r.gap,
            r.singular_flag,
            t.elapsed()
        );
    }
    Ok(())
}
