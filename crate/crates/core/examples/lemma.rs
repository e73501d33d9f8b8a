//! Random trials of the localizer perturbation bound
//! `|γ - γ₀| ≤ (C + E)γ + (C + E)D`.
//!
//!     cargo run --release --example lemma -- 50 40

use topo_index::localizer::lemma_trials;

fn main() -> topo_index::Result<()> {
    let mut args = std::env::args().skip(1);
    let trials: usize = args.next().map_or(50, |s| s.parse().expect("trial count"));
    let n: usize = args.next().map_or(40, |s| s.parse().expect("matrix size"));

    let certs = lemma_trials(trials, n, 7)?;
    for (i, c) in certs.iter().enumerate().take(10) {
        println!(
            "{i:>3}: γ {:.3e} γ₀ {:.3e} C+E {:.2e} D {:.2e} slack {:.2e} agree {:?}",
            c.gamma,
            c.gamma0,
            c.c + c.e,
            c.d,
            c.rhs - c.lhs,
            c.indices_agree
        );
    }
    let held = certs.iter().filter(|c| c.inequality_holds).count();
    let hyp = certs.iter().filter(|c| c.hypothesis_holds).count();
    let agree = certs.iter().filter(|c| c.indices_agree == Some(true)).count();
    println!("inequality {held}/{trials}, hypothesis {hyp}, indices agree {agree}");
    Ok(())
}
