//! Gap field over a λ₃ = 0 slice of a clean open square, drawn as text:
//! digits are region indices, `.` marks points at or below τ.
//!
//!     cargo run --release --example pseudospectrum -- 12 25

use topo_index::model::{position_operators, Boundary, ModelSpec, PositionScaling, Sample};
use topo_index::pseudospectrum::{
    gap_slice, localizer_regions, GridSpec, LocalizerProblem, DEFAULT_PRUNING_CUTOFF, DEFAULT_TAU,
};

fn main() -> topo_index::Result<()> {
    let mut args = std::env::args().skip(1);
    let side: usize = args.next().map_or(12, |s| s.parse().expect("side length"));
    let n: usize = args.next().map_or(25, |s| s.parse().expect("grid resolution"));

    let sample = Sample::generate(&ModelSpec::chern(side, Boundary::Open), 0)?;
    let (x, y) = position_operators(&sample.lattice, PositionScaling::Raw)?;
    let problem = LocalizerProblem::new(&x, &y, &sample.hamiltonian, 1.0)?;
    let half = (side as f64 + 1.0) / 2.0;
    let grid = GridSpec::slice((-half, half), (-half, half), n, 0.0)?;

    let field = gap_slice(&problem, &grid, Some(DEFAULT_PRUNING_CUTOFF))?;
    let regions = localizer_regions(&field, &problem, DEFAULT_TAU)?;
    println!(
        "{} points, {} computed, min gap {:.3e}, {} regions",
        grid.len(),
        field.computed_count(),
        field.min_value(),
        regions.regions.len()
    );
    for row in (0..n).rev() {
        let line: String = (0..n)
            .map(|col| match regions.index_at(grid.flatten([col, row, 0])) {
                Some(i) => char::from_digit(i.unsigned_abs() as u32 % 10, 10).unwrap_or('?'),
                None => '.',
            })
            .collect();
        println!("{line}");
    }
    Ok(())
}
