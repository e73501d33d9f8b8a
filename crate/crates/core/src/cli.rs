//! Command-line front end. [`run`] parses arguments, executes one
//! subcommand and returns the process exit code:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | usage or configuration error |
//! | 2 | numerical failure (branch cut, indeterminate count, solver) |
//! | 3 | singular localizer |
//!
//! Query commands print JSON on stdout; diagnostics go to stderr.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::bott::{
    bott_index_large, bott_index_small, trig_method_index, BottOptions, BottResult, CompressedPair, TrigOptions,
    TrigPolynomialTriple,
};
use crate::error::{Error, Result};
use crate::experiments::{
    loglog_slope, run_sweep, timing_study, with_pool, KappaRule, Method, SweepPlan, TimingPlan,
};
use crate::localizer::{lemma_trials, localizer_index, LocalizerProbe};
use crate::model::{periodic_observables, position_operators, Boundary, ModelSpec, PositionScaling, Sample};
use crate::pseudospectrum::{
    gap_slice, gap_volume, localizer_regions, GridSpec, LocalizerProblem, DEFAULT_PRUNING_CUTOFF, DEFAULT_TAU,
};
use crate::spectral::{diagonalize, fermi_basis, projector, write_eigenvalues_csv};

#[derive(Parser, Debug)]
#[command(name = "topo-index", version, about = "Real-space topological indices of disordered lattice models")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build one sample and report its size; optionally write H and its spectrum.
    Model(ModelArgs),
    /// Bott index of a periodic sample at one Fermi level.
    Bott(BottArgs),
    /// Localizer index and gap at one probe.
    Localizer(LocalizerArgs),
    /// Gap field over a slice or volume of probes, with index regions.
    Pseudospectrum(PseudoArgs),
    /// Disorder-averaged index against the Fermi level.
    Sweep(SweepArgs),
    /// Phase timings across system sizes.
    Timing(TimingArgs),
    /// Random trials of the localizer perturbation bound.
    CheckLemma(LemmaArgs),
}

#[derive(Args, Debug)]
struct ModelArgs {
    config: PathBuf,
    #[arg(long, default_value_t = 0)]
    sample: u64,
    /// Directory for `hamiltonian.txt` and `eigenvalues.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BottFormula {
    Small,
    Large,
    Trig,
}

#[derive(Args, Debug)]
struct BottArgs {
    config: PathBuf,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    ef: f64,
    #[arg(long, default_value_t = 0)]
    sample: u64,
    #[arg(long, value_enum, default_value_t = BottFormula::Small)]
    formula: BottFormula,
}

#[derive(Args, Debug)]
struct LocalizerArgs {
    config: PathBuf,
    #[arg(long)]
    kappa: f64,
    /// Probe `x,y,E` (position in scaled units).
    #[arg(long, default_value = "0,0,0", allow_hyphen_values = true)]
    lambda: String,
    #[arg(long, default_value_t = 0)]
    sample: u64,
}

#[derive(Args, Debug)]
struct PseudoArgs {
    config: PathBuf,
    /// Energy of a 2D slice.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "volume")]
    slice: Option<f64>,
    /// 3D grid instead of a slice.
    #[arg(long)]
    volume: bool,
    #[arg(long, default_value_t = 21)]
    grid: usize,
    #[arg(long)]
    kappa: f64,
    #[arg(long, default_value_t = DEFAULT_TAU)]
    tau: f64,
    /// Pruning cutoff; 0 evaluates every point.
    #[arg(long, default_value_t = DEFAULT_PRUNING_CUTOFF)]
    cutoff: f64,
    /// Position range `lo,hi` in scaled units (default: the sample plus one site).
    #[arg(long, allow_hyphen_values = true)]
    range: Option<String>,
    /// Energy range `lo,hi` for volumes.
    #[arg(long, default_value = "-4,4", allow_hyphen_values = true)]
    energy_range: String,
    #[arg(long, default_value_t = 0)]
    sample: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SweepArgs {
    config: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::Bott)]
    method: MethodArg,
    /// Comma-separated Fermi levels; overrides the range flags.
    #[arg(long, allow_hyphen_values = true)]
    ef: Option<String>,
    #[arg(long, default_value_t = -8.0, allow_hyphen_values = true)]
    ef_min: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    ef_max: f64,
    #[arg(long, default_value_t = 17)]
    ef_steps: usize,
    #[arg(long)]
    samples: usize,
    /// Base seed (default: the config's seed).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, conflicts_with = "kappa_over_l")]
    kappa: Option<f64>,
    /// `κ = C / L`.
    #[arg(long)]
    kappa_over_l: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Bott,
    Localizer,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Bott => Method::Bott,
            MethodArg::Localizer => Method::Localizer,
        }
    }
}

#[derive(Args, Debug)]
struct TimingArgs {
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Comma-separated side lengths, ascending.
    #[arg(long = "L")]
    sides: String,
    #[arg(long, default_value_t = 1)]
    samples: usize,
    /// Model template (default: the standard constants with disorder width 8).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    kappa: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    ef: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct LemmaArgs {
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 40)]
    n: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure carrying its exit code.
struct Exit(i32, String);

impl From<Error> for Exit {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::BranchProximity { .. }
            | Error::IndeterminateCount { .. }
            | Error::NoConvergence { .. }
            | Error::Eigensolver(_)
            | Error::NotProjector(_)
            | Error::SingularPosition
            | Error::NonFinite
            | Error::NotHermitian => 2,
            _ => 1,
        };
        Exit(code, e.to_string())
    }
}

type CmdResult = std::result::Result<i32, Exit>;

/// Runs the command line `args` (including the program name).
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(stdout, "{text}");
            } else {
                let _ = write!(stderr, "{text}");
            }
            return code;
        }
    };
    let jobs = cli.jobs;
    let result = match cli.command {
        Command::Model(a) => cmd_model(a, stdout),
        Command::Bott(a) => cmd_bott(a, stdout),
        Command::Localizer(a) => cmd_localizer(a, stdout),
        Command::Pseudospectrum(a) => match with_pool(jobs, || cmd_pseudospectrum(a)) {
            Ok(Ok(summary)) => write_json(stdout, &summary).map(|_| 0),
            Ok(Err(e)) => Err(e),
            Err(e) => Err(e.into()),
        },
        Command::Sweep(a) => cmd_sweep(a, jobs, stdout),
        Command::Timing(a) => cmd_timing(a, stdout),
        Command::CheckLemma(a) => cmd_check_lemma(a, stdout),
    };
    match result {
        Ok(code) => code,
        Err(Exit(code, msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            code
        }
    }
}

fn load_config(path: &Path) -> std::result::Result<ModelSpec, Exit> {
    let text = fs::read_to_string(path).map_err(|e| Exit(1, format!("cannot read {}: {e}", path.display())))?;
    ModelSpec::from_json(&text).map_err(|e| Exit(1, format!("{}: {e}", path.display())))
}

/// SHA-256 of the compact JSON form of `value`.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("serializable");
    let digest = Sha256::digest(&bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn hardware_note() -> serde_json::Value {
    json!({
        "os": std::env::consts::OS,
        "arch": std::env::consts::ARCH,
        "threads": rayon::current_num_threads(),
    })
}

fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> std::result::Result<(), Exit> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Exit(1, e.to_string()))?;
    writeln!(out, "{text}").map_err(|e| Exit(1, e.to_string()))
}

fn create_dir(dir: &Path) -> std::result::Result<(), Exit> {
    fs::create_dir_all(dir).map_err(|e| Exit(1, format!("cannot create {}: {e}", dir.display())))
}

fn write_file(path: &Path, f: impl FnOnce(&mut fs::File) -> Result<()>) -> std::result::Result<(), Exit> {
    let mut file = fs::File::create(path).map_err(|e| Exit(1, format!("cannot write {}: {e}", path.display())))?;
    f(&mut file).map_err(Exit::from)
}

fn write_manifest(dir: &Path, manifest: serde_json::Value) -> std::result::Result<(), Exit> {
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Exit(1, e.to_string()))?;
    fs::write(dir.join("manifest.json"), text + "\n").map_err(|e| Exit(1, e.to_string()))
}

fn parse_list(s: &str, what: &str) -> std::result::Result<Vec<f64>, Exit> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Exit(1, format!("{what}: cannot parse {t:?}")))
        })
        .collect()
}

fn parse_pair(s: &str, what: &str) -> std::result::Result<(f64, f64), Exit> {
    match parse_list(s, what)?.as_slice() {
        [a, b] => Ok((*a, *b)),
        _ => Err(Exit(1, format!("{what}: expected two comma-separated numbers"))),
    }
}

fn cmd_model(a: ModelArgs, stdout: &mut dyn Write) -> CmdResult {
    let spec = load_config(&a.config)?;
    let sample = Sample::generate(&spec, a.sample)?;
    let h = &sample.hamiltonian;
    if let Some(dir) = &a.out {
        create_dir(dir)?;
        write_file(&dir.join("hamiltonian.txt"), |f| h.write_triplets(f))?;
        let eig = diagonalize(h)?;
        write_file(&dir.join("eigenvalues.csv"), |f| write_eigenvalues_csv(&eig.values, f))?;
        write_manifest(
            dir,
            json!({
                "command": "model",
                "config": spec,
                "config_hash": config_hash(&spec),
                "sample": a.sample,
            }),
        )?;
    }
    write_json(
        stdout,
        &json!({
            "sites": sample.lattice.num_sites(),
            "dim": h.dim(),
            "nnz": h.nnz(),
            "hermitian_defect": h.hermitian_defect(),
            "config_hash": config_hash(&spec),
        }),
    )?;
    Ok(0)
}

fn cmd_bott(a: BottArgs, stdout: &mut dyn Write) -> CmdResult {
    let spec = load_config(&a.config)?;
    if spec.boundary != Boundary::Periodic {
        return Err(Exit(1, "the Bott index needs a periodic config".into()));
    }
    let sample = Sample::generate(&spec, a.sample)?;
    let obs = periodic_observables(&sample.lattice)?;
    let eig = diagonalize(&sample.hamiltonian)?;
    let fermi = fermi_basis(&eig, a.ef);
    let opts = BottOptions::default();
    match a.formula {
        BottFormula::Small | BottFormula::Large if fermi.is_degenerate() => {
            write_json(stdout, &BottResult::degenerate())?;
        }
        BottFormula::Small => {
            let pair = CompressedPair::from_fermi(&fermi, &obs)?;
            write_json(stdout, &bott_index_small(pair.u1.as_ref(), pair.v1.as_ref(), opts)?)?;
        }
        BottFormula::Large => {
            let p = projector(&fermi).to_dense();
            let n = p.nrows();
            let diag = |d: &[crate::operator::C64]| {
                faer::Mat::from_fn(n, n, |i, j| if i == j { d[i] } else { Default::default() })
            };
            let r = bott_index_large(diag(&obs.u).as_ref(), diag(&obs.v).as_ref(), p.as_ref(), opts)?;
            write_json(stdout, &r)?;
        }
        BottFormula::Trig => {
            let pair = CompressedPair::from_fermi(&fermi, &obs)?;
            let triple = TrigPolynomialTriple::default_projector();
            let count = trig_method_index(pair.u1.as_ref(), pair.v1.as_ref(), &triple, TrigOptions::default())?;
            write_json(stdout, &json!({ "count": count, "triple": triple.validate() }))?;
        }
    }
    Ok(0)
}

fn cmd_localizer(a: LocalizerArgs, stdout: &mut dyn Write) -> CmdResult {
    let spec = load_config(&a.config)?;
    let lambda = parse_list(&a.lambda, "--lambda")?;
    let [l1, l2, l3] = lambda[..] else {
        return Err(Exit(1, "--lambda: expected x,y,E".into()));
    };
    let probe = LocalizerProbe::new([l1, l2, l3], a.kappa)?;
    let sample = Sample::generate(&spec, a.sample)?;
    let (x, y) = position_operators(&sample.lattice, PositionScaling::Raw)?;
    let r = localizer_index(&x, &y, &sample.hamiltonian, &probe)?;
    write_json(stdout, &r)?;
    Ok(if r.singular_flag { 3 } else { 0 })
}

fn cmd_pseudospectrum(a: PseudoArgs) -> std::result::Result<serde_json::Value, Exit> {
    let spec = load_config(&a.config)?;
    LocalizerProbe::origin(a.kappa)?;
    if !a.volume && a.slice.is_none() {
        return Err(Exit(1, "one of --slice E or --volume is required".into()));
    }
    let sample = Sample::generate(&spec, a.sample)?;
    let (x, y) = position_operators(&sample.lattice, PositionScaling::Raw)?;
    let range = match &a.range {
        Some(r) => parse_pair(r, "--range")?,
        None => {
            let half = a.kappa * (spec.side as f64 + 1.0) / 2.0;
            (-half, half)
        }
    };
    let grid = if a.volume {
        GridSpec::volume([range, range, parse_pair(&a.energy_range, "--energy-range")?], a.grid)?
    } else {
        GridSpec::slice(range, range, a.grid, a.slice.expect("checked"))?
    };
    let problem = LocalizerProblem::new(&x, &y, &sample.hamiltonian, a.kappa)?;
    let cutoff = (a.cutoff > 0.0).then_some(a.cutoff);
    let field = if a.volume {
        gap_volume(&problem, &grid, cutoff)?
    } else {
        gap_slice(&problem, &grid, cutoff)?
    };
    let regions = localizer_regions(&field, &problem, a.tau)?;
    create_dir(&a.out)?;
    write_file(&a.out.join("gap.csv"), |f| field.write_csv(f))?;
    write_file(&a.out.join("regions.csv"), |f| regions.write_csv(&grid, f))?;
    let summary: Vec<_> = regions
        .regions
        .iter()
        .enumerate()
        .map(|(i, r)| json!({ "region": i, "index": r.index, "size": r.size, "representative": grid.point(r.representative) }))
        .collect();
    write_manifest(
        &a.out,
        json!({
            "command": "pseudospectrum",
            "config": spec,
            "config_hash": config_hash(&spec),
            "sample": a.sample,
            "grid": grid,
            "kappa": a.kappa,
            "tau": a.tau,
            "pruning_cutoff": field.pruning_cutoff,
            "computed_points": field.computed_count(),
            "regions": summary,
            "hardware": hardware_note(),
        }),
    )?;
    Ok(json!({ "points": grid.len(), "computed": field.computed_count(), "regions": regions.regions.len() }))
}

fn cmd_sweep(a: SweepArgs, jobs: Option<usize>, stdout: &mut dyn Write) -> CmdResult {
    let spec = load_config(&a.config)?;
    let fermi_levels = match &a.ef {
        Some(list) => parse_list(list, "--ef")?,
        None => {
            if a.ef_steps < 1 {
                return Err(Exit(1, "--ef-steps must be at least 1".into()));
            }
            if a.ef_steps == 1 {
                vec![a.ef_min]
            } else {
                let h = (a.ef_max - a.ef_min) / (a.ef_steps - 1) as f64;
                (0..a.ef_steps).map(|i| a.ef_min + h * i as f64).collect()
            }
        }
    };
    let kappa_rule = match (a.kappa, a.kappa_over_l) {
        (Some(k), _) => Some(KappaRule::Fixed(k)),
        (None, Some(c)) => Some(KappaRule::OverL(c)),
        (None, None) => None,
    };
    let plan = SweepPlan {
        method: a.method.into(),
        base_seed: a.seed.unwrap_or(spec.seed),
        model: spec,
        fermi_levels,
        n_samples: a.samples,
        kappa_rule,
    };
    plan.validate()?;
    let table = run_sweep(&plan, jobs)?;
    create_dir(&a.out)?;
    write_file(&a.out.join("sweep.csv"), |f| table.write_csv(f))?;
    write_manifest(
        &a.out,
        json!({
            "command": "sweep",
            "plan": plan,
            "config_hash": config_hash(&plan.model),
            "sample_seeds": table.sample_seeds,
            "diagonalizations": table.diagonalizations,
            "hardware": hardware_note(),
        }),
    )?;
    write_json(stdout, &table.rows)?;
    Ok(0)
}

fn cmd_timing(a: TimingArgs, stdout: &mut dyn Write) -> CmdResult {
    let model = match &a.config {
        Some(p) => load_config(p)?,
        None => ModelSpec::chern(2, Boundary::Open).with_disorder(8.0, 0),
    };
    let sides = parse_list(&a.sides, "--L")?
        .into_iter()
        .map(|v| {
            if v >= 2.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Exit(1, format!("--L: invalid side {v}")))
            }
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let plan = TimingPlan {
        method: a.method.into(),
        model,
        sides,
        samples_per_side: a.samples,
        kappa: a.kappa,
        fermi_level: a.ef,
    };
    let table = timing_study(&plan)?;
    if let Some(dir) = &a.out {
        create_dir(dir)?;
        write_file(&dir.join("timing.csv"), |f| table.write_csv(f))?;
        write_manifest(
            dir,
            json!({
                "command": "timing",
                "plan": plan,
                "config_hash": config_hash(&plan.model),
                "raw": table.raw,
                "hardware": hardware_note(),
            }),
        )?;
    }
    let totals = table.totals();
    let slope = (totals.len() >= 2).then(|| loglog_slope(&totals));
    write_json(stdout, &json!({ "rows": table.rows, "loglog_slope": slope }))?;
    Ok(0)
}

fn cmd_check_lemma(a: LemmaArgs, stdout: &mut dyn Write) -> CmdResult {
    if a.n == 0 || a.trials == 0 {
        return Err(Exit(1, "--n and --trials must be positive".into()));
    }
    let certs = lemma_trials(a.trials, a.n, a.seed)?;
    let held = certs.iter().filter(|c| c.inequality_holds).count();
    let hypothesis = certs.iter().filter(|c| c.hypothesis_holds).count();
    let agree = certs.iter().filter(|c| c.indices_agree == Some(true)).count();
    let summary = json!({
        "trials": a.trials,
        "n": a.n,
        "seed": a.seed,
        "inequality_held": held,
        "hypothesis_held": hypothesis,
        "indices_agreed": agree,
    });
    if let Some(dir) = &a.out {
        create_dir(dir)?;
        write_manifest(dir, json!({ "command": "check-lemma", "summary": summary, "trials": certs }))?;
    }
    write_json(stdout, &summary)?;
    Ok(if held == a.trials && agree == hypothesis { 0 } else { 2 })
}
