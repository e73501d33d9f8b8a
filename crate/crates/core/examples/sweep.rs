//! Disorder-averaged Bott index against the Fermi level, written as CSV to
//! stdout.
//!
//!     cargo run --release --example sweep -- 12 40

use topo_index::experiments::{run_sweep, Method, SweepPlan};
use topo_index::model::{Boundary, ModelSpec};

fn main() -> topo_index::Result<()> {
    let mut args = std::env::args().skip(1);
    let side: usize = args.next().map_or(12, |s| s.parse().expect("side length"));
    let samples: usize = args.next().map_or(40, |s| s.parse().expect("sample count"));

    let plan = SweepPlan {
        method: Method::Bott,
        model: ModelSpec::chern(side, Boundary::Periodic).with_disorder(8.0, 1),
        fermi_levels: (0..=16).map(|i| -8.0 + 0.5 * i as f64).collect(),
        n_samples: samples,
        base_seed: 1,
        kappa_rule: None,
    };
    let table = run_sweep(&plan, None)?;
    eprintln!("{} diagonalizations", table.diagonalizations);
    table.write_csv(std::io::stdout().lock())
}
