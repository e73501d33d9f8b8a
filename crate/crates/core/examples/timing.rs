//! Phase timings and fitted log-log slopes for both methods.
//!
//!     cargo run --release --example timing -- 10,14,20 20,40,60

use topo_index::experiments::{loglog_slope, timing_study, Method, TimingPlan};
use topo_index::model::{Boundary, ModelSpec};

fn sides(arg: Option<String>, default: &[usize]) -> Vec<usize> {
    arg.map_or_else(
        || default.to_vec(),
        |s| s.split(',').map(|t| t.parse().expect("side length")).collect(),
    )
}

fn main() -> topo_index::Result<()> {
    let mut args = std::env::args().skip(1);
    let bott_sides = sides(args.next(), &[10, 14, 20]);
    let loc_sides = sides(args.next(), &[20, 40, 60]);
    let model = ModelSpec::chern(10, Boundary::Periodic).with_disorder(8.0, 3);

    for (method, sides) in [(Method::Bott, bott_sides), (Method::Localizer, loc_sides)] {
        let plan = TimingPlan {
            method,
            model: model.clone(),
            sides,
            samples_per_side: 1,
            kappa: 0.1,
            fermi_level: 0.0,
        };
        let table = timing_study(&plan)?;
        println!("{method:?}");
        for row in &table.rows {
            println!("  L={:<4} {:<12} {:.3}s", row.side, row.phase.as_str(), row.mean_seconds);
        }
        println!("  slope {:.2}", loglog_slope(&table.totals()));
    }
    Ok(())
}
