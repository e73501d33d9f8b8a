//! Disorder-averaged index sweeps, timing and integer-error studies.
//!
//! Samples are independent jobs on a bounded rayon pool. Results are
//! gathered in sample order before summing, so every table is a function of
//! its plan alone, whatever the thread count.

use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bott::{BottOptions, CompressedPair};
use crate::error::{Error, Result};
use crate::localizer::{localizer_gap, localizer_index_only, LocalizerProbe};
use crate::model::{periodic_observables, position_operators, sample_seed, Boundary, ModelSpec, PositionScaling, Sample};
use crate::spectral::{diagonalize, occupied_count};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Bott,
    Localizer,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bott" => Ok(Method::Bott),
            "localizer" => Ok(Method::Localizer),
            other => Err(Error::Parse(format!("unknown method {other:?}"))),
        }
    }
}

/// How the localizer's `κ` is chosen for a lattice of side `L`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KappaRule {
    Fixed(f64),
    /// `κ = C / L`.
    OverL(f64),
}

impl KappaRule {
    pub fn kappa(&self, side: usize) -> f64 {
        match *self {
            KappaRule::Fixed(k) => k,
            KappaRule::OverL(c) => c / side as f64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub method: Method,
    pub model: ModelSpec,
    pub fermi_levels: Vec<f64>,
    pub n_samples: usize,
    pub base_seed: u64,
    /// Required for the localizer, ignored for Bott.
    #[serde(default)]
    pub kappa_rule: Option<KappaRule>,
}

impl SweepPlan {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.n_samples == 0 {
            return Err(Error::InvalidPlan("n_samples must be at least 1".into()));
        }
        if self.fermi_levels.is_empty() {
            return Err(Error::InvalidPlan("no Fermi levels".into()));
        }
        if self.fermi_levels.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidPlan("non-finite Fermi level".into()));
        }
        if self.fermi_levels.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidPlan("Fermi levels must be sorted".into()));
        }
        match self.method {
            Method::Bott if self.model.boundary != Boundary::Periodic => {
                Err(Error::WrongBoundary { required: "periodic" })
            }
            Method::Localizer => match self.kappa_rule {
                None => Err(Error::InvalidPlan("localizer sweep needs a kappa rule".into())),
                Some(rule) => {
                    let k = rule.kappa(self.model.side);
                    if k > 0.0 && k.is_finite() {
                        Ok(())
                    } else {
                        Err(Error::InvalidKappa(k))
                    }
                }
            },
            _ => Ok(()),
        }
    }

    fn sample_spec(&self) -> ModelSpec {
        ModelSpec {
            seed: self.base_seed,
            ..self.model.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub fermi_level: f64,
    pub mean_index: f64,
    pub sample_count: usize,
    /// Bott only.
    pub mean_integer_error: Option<f64>,
    pub failure_count: usize,
    /// Localizer only.
    pub kappa: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub plan: SweepPlan,
    pub rows: Vec<SweepRow>,
    /// Disorder seed of each sample, in sample order.
    pub sample_seeds: Vec<u64>,
    /// Hamiltonian diagonalizations performed.
    pub diagonalizations: usize,
}

impl SweepTable {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "fermi_level,mean_index,sample_count,mean_integer_error,failure_count,kappa")?;
        for r in &self.rows {
            let err = r.mean_integer_error.map(|e| format!("{e:e}")).unwrap_or_default();
            let kappa = r.kappa.map(|k| k.to_string()).unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.fermi_level, r.mean_index, r.sample_count, err, r.failure_count, kappa
            )?;
        }
        Ok(())
    }
}

/// Per-sample result at one Fermi level; `None` marks a failure.
type LevelOutcome = Option<(i64, f64)>;

/// Runs `f` on a pool of `jobs` threads (all cores when `None`).
pub fn with_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        b = b.num_threads(j.max(1));
    }
    let pool = b
        .build()
        .map_err(|e| Error::InvalidPlan(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

pub fn run_sweep(plan: &SweepPlan, jobs: Option<usize>) -> Result<SweepTable> {
    plan.validate()?;
    let spec = plan.sample_spec();
    let diagonalizations = AtomicUsize::new(0);
    let outcomes: Vec<Result<Vec<LevelOutcome>>> = with_pool(jobs, || {
        (0..plan.n_samples as u64)
            .into_par_iter()
            .map(|i| match plan.method {
                Method::Bott => bott_sample(&spec, i, &plan.fermi_levels, &diagonalizations),
                Method::Localizer => {
                    let kappa = plan.kappa_rule.expect("validated").kappa(spec.side);
                    localizer_sample(&spec, i, &plan.fermi_levels, kappa)
                }
            })
            .collect()
    })?;
    let outcomes: Vec<Vec<LevelOutcome>> = outcomes.into_iter().collect::<Result<_>>()?;

    let kappa = plan.kappa_rule.map(|r| r.kappa(spec.side));
    let rows = plan
        .fermi_levels
        .iter()
        .enumerate()
        .map(|(j, &ef)| {
            let mut sum = 0.0;
            let mut err = 0.0;
            let mut count = 0;
            for sample in &outcomes {
                if let Some((index, e)) = sample[j] {
                    sum += index as f64;
                    err += e;
                    count += 1;
                }
            }
            let mean = |s: f64| if count > 0 { s / count as f64 } else { f64::NAN };
            SweepRow {
                fermi_level: ef,
                mean_index: mean(sum),
                sample_count: count,
                mean_integer_error: (plan.method == Method::Bott).then(|| mean(err)),
                failure_count: plan.n_samples - count,
                kappa: if plan.method == Method::Localizer { kappa } else { None },
            }
        })
        .collect();
    Ok(SweepTable {
        plan: plan.clone(),
        rows,
        sample_seeds: (0..plan.n_samples as u64).map(|i| sample_seed(plan.base_seed, i)).collect(),
        diagonalizations: diagonalizations.into_inner(),
    })
}

/// One diagonalization, one compression at the largest occupied count, and
/// leading blocks for every lower level.
fn bott_sample(spec: &ModelSpec, index: u64, levels: &[f64], counter: &AtomicUsize) -> Result<Vec<LevelOutcome>> {
    let sample = Sample::generate(spec, index)?;
    let obs = periodic_observables(&sample.lattice)?;
    let eig = diagonalize(&sample.hamiltonian)?;
    counter.fetch_add(1, AtomicOrdering::Relaxed);
    let n = eig.values.len();
    let counts: Vec<usize> = levels.iter().map(|&ef| occupied_count(&eig.values, ef)).collect();
    let top = counts.iter().copied().filter(|&m| m < n).max().unwrap_or(0);
    let pair = CompressedPair::new(&eig, &obs, top)?;
    let opts = BottOptions::default();
    Ok(counts
        .iter()
        .map(|&m| {
            if m == 0 || m == n {
                return Some((0, 0.0));
            }
            pair.bott_leading(m, opts).ok().map(|r| (r.index, r.integer_error))
        })
        .collect())
}

fn localizer_sample(spec: &ModelSpec, index: u64, levels: &[f64], kappa: f64) -> Result<Vec<LevelOutcome>> {
    let sample = Sample::generate(spec, index)?;
    let (x, y) = position_operators(&sample.lattice, PositionScaling::Raw)?;
    levels
        .iter()
        .map(|&ef| {
            let probe = LocalizerProbe::new([0.0, 0.0, ef], kappa)?;
            let (idx, sig) = localizer_index_only(&x, &y, &sample.hamiltonian, &probe)?;
            Ok((!sig.singular_flag).then_some((idx, 0.0)))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Diagonalize,
    Index,
    Gap,
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::Diagonalize => "diagonalize",
            Phase::Index => "index",
            Phase::Gap => "gap",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub side: usize,
    pub phase: Phase,
    pub mean_seconds: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingTable {
    pub method: Method,
    pub rows: Vec<TimingRow>,
    /// `(L, phase, seconds)` for every timed run, warm-ups excluded.
    pub raw: Vec<(usize, Phase, f64)>,
}

impl TimingTable {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "L,phase,mean_seconds,samples")?;
        for r in &self.rows {
            writeln!(w, "{},{},{},{}", r.side, r.phase.as_str(), r.mean_seconds, r.samples)?;
        }
        Ok(())
    }

    /// Mean total time (all phases) per `L`.
    pub fn totals(&self) -> Vec<(usize, f64)> {
        let mut out: Vec<(usize, f64)> = Vec::new();
        for r in &self.rows {
            match out.last_mut() {
                Some((l, t)) if *l == r.side => *t += r.mean_seconds,
                _ => out.push((r.side, r.mean_seconds)),
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingPlan {
    pub method: Method,
    /// Template; side and boundary are set per run.
    pub model: ModelSpec,
    pub sides: Vec<usize>,
    pub samples_per_side: usize,
    /// Localizer `κ`.
    pub kappa: f64,
    pub fermi_level: f64,
}

/// Times the phases of one index evaluation, sequentially. Bott runs on the
/// torus (diagonalize, then index); the localizer on the open square
/// (index, then gap). A single warm-up run at the smallest size is discarded.
pub fn timing_study(plan: &TimingPlan) -> Result<TimingTable> {
    if plan.sides.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidPlan("sizes must be ascending".into()));
    }
    if plan.samples_per_side == 0 {
        return Err(Error::InvalidPlan("samples_per_side must be at least 1".into()));
    }
    let boundary = match plan.method {
        Method::Bott => Boundary::Periodic,
        Method::Localizer => Boundary::Open,
    };
    let mut rows = Vec::new();
    let mut raw = Vec::new();
    for (i, &side) in plan.sides.iter().enumerate() {
        let spec = ModelSpec {
            side,
            boundary,
            hole_radius: None,
            ..plan.model.clone()
        };
        spec.validate()?;
        let phases = match plan.method {
            Method::Bott => [Phase::Diagonalize, Phase::Index],
            Method::Localizer => [Phase::Index, Phase::Gap],
        };
        let mut sums = [0.0; 2];
        // one discarded warm-up run, at the smallest size only
        let first = if i == 0 { 0 } else { 1 };
        for run in first..=plan.samples_per_side {
            let sample = Sample::generate(&spec, run as u64)?;
            let times = match plan.method {
                Method::Bott => time_bott(&sample, plan.fermi_level)?,
                Method::Localizer => time_localizer(&sample, plan.fermi_level, plan.kappa)?,
            };
            if run == 0 {
                continue;
            }
            for (k, t) in times.iter().enumerate() {
                sums[k] += t;
                raw.push((side, phases[k], *t));
            }
        }
        for (k, phase) in phases.iter().enumerate() {
            rows.push(TimingRow {
                side,
                phase: *phase,
                mean_seconds: sums[k] / plan.samples_per_side as f64,
                samples: plan.samples_per_side,
            });
        }
    }
    Ok(TimingTable {
        method: plan.method,
        rows,
        raw,
    })
}

fn time_bott(sample: &Sample, ef: f64) -> Result<[f64; 2]> {
    let obs = periodic_observables(&sample.lattice)?;
    let t = Instant::now();
    let eig = diagonalize(&sample.hamiltonian)?;
    let diag = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let m = occupied_count(&eig.values, ef);
    let pair = CompressedPair::new(&eig, &obs, m)?;
    // A branch failure still costs the full evaluation; keep its timing.
    let _ = pair.bott_leading(m, BottOptions::default());
    Ok([diag, t.elapsed().as_secs_f64()])
}

fn time_localizer(sample: &Sample, ef: f64, kappa: f64) -> Result<[f64; 2]> {
    let (x, y) = position_operators(&sample.lattice, PositionScaling::Raw)?;
    let probe = LocalizerProbe::new([0.0, 0.0, ef], kappa)?;
    let t = Instant::now();
    localizer_index_only(&x, &y, &sample.hamiltonian, &probe)?;
    let index = t.elapsed().as_secs_f64();
    let t = Instant::now();
    localizer_gap(&x, &y, &sample.hamiltonian, &probe)?;
    Ok([index, t.elapsed().as_secs_f64()])
}

/// Least-squares slope of `ln t` against `ln L`.
pub fn loglog_slope(points: &[(usize, f64)]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|&(l, _)| (l as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, t)| t.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegerErrorRow {
    pub side: usize,
    pub mean_error: f64,
    pub max_error: f64,
    pub samples: usize,
    pub failures: usize,
}

/// Distance to the nearest integer of raw Bott values at `E_F = 0` on
/// disordered tori.
pub fn integer_error_study(
    model: &ModelSpec,
    sides: &[usize],
    samples_per_side: usize,
    jobs: Option<usize>,
) -> Result<Vec<IntegerErrorRow>> {
    let mut out = Vec::with_capacity(sides.len());
    for &side in sides {
        let plan = SweepPlan {
            method: Method::Bott,
            model: ModelSpec {
                side,
                boundary: Boundary::Periodic,
                hole_radius: None,
                ..model.clone()
            },
            fermi_levels: vec![0.0],
            n_samples: samples_per_side,
            base_seed: model.seed,
            kappa_rule: None,
        };
        plan.validate()?;
        let spec = plan.sample_spec();
        let counter = AtomicUsize::new(0);
        let errors: Vec<Option<f64>> = with_pool(jobs, || {
            (0..samples_per_side as u64)
                .into_par_iter()
                .map(|i| {
                    bott_sample(&spec, i, &[0.0], &counter)
                        .ok()
                        .and_then(|v| v[0])
                        .map(|(_, e)| e)
                })
                .collect()
        })?;
        let ok: Vec<f64> = errors.iter().flatten().copied().collect();
        out.push(IntegerErrorRow {
            side,
            mean_error: if ok.is_empty() { f64::NAN } else { ok.iter().sum::<f64>() / ok.len() as f64 },
            max_error: ok.iter().copied().fold(0.0, f64::max),
            samples: ok.len(),
            failures: samples_per_side - ok.len(),
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaStudyEntry {
    pub kappa: f64,
    pub side: usize,
    pub table: SweepTable,
}

/// One localizer sweep per `(κ, L)` pair.
pub fn kappa_study(
    model: &ModelSpec,
    pairs: &[(f64, usize)],
    fermi_levels: &[f64],
    n_samples: usize,
    jobs: Option<usize>,
) -> Result<Vec<KappaStudyEntry>> {
    pairs
        .iter()
        .map(|&(kappa, side)| {
            let plan = SweepPlan {
                method: Method::Localizer,
                model: ModelSpec {
                    side,
                    ..model.clone()
                },
                fermi_levels: fermi_levels.to_vec(),
                n_samples,
                base_seed: model.seed,
                kappa_rule: Some(KappaRule::Fixed(kappa)),
            };
            Ok(KappaStudyEntry {
                kappa,
                side,
                table: run_sweep(&plan, jobs)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clean_plan(levels: Vec<f64>) -> SweepPlan {
        SweepPlan {
            method: Method::Bott,
            model: ModelSpec::chern(8, Boundary::Periodic),
            fermi_levels: levels,
            n_samples: 1,
            base_seed: 0,
            kappa_rule: None,
        }
    }

    #[test]
    fn plan_validation() {
        let mut p = clean_plan(vec![0.0]);
        p.n_samples = 0;
        assert!(matches!(p.validate(), Err(Error::InvalidPlan(_))));
        let p = clean_plan(vec![1.0, 0.0]);
        assert!(p.validate().is_err());
        let p = clean_plan(vec![]);
        assert!(p.validate().is_err());
        let mut p = clean_plan(vec![0.0]);
        p.method = Method::Localizer;
        assert!(p.validate().is_err());
        p.kappa_rule = Some(KappaRule::OverL(2.0));
        p.validate().unwrap();
    }

    #[test]
    fn kappa_rule_bookkeeping() {
        assert_eq!(KappaRule::OverL(2.0).kappa(20), 0.1);
        assert_eq!(KappaRule::Fixed(0.3).kappa(20), 0.3);
    }

    #[test]
    fn clean_bott_sweep() {
        let t = run_sweep(&clean_plan(vec![-20.0, -1.0, 0.0, 1.0, 20.0]), Some(1)).unwrap();
        let means: Vec<f64> = t.rows.iter().map(|r| r.mean_index).collect();
        assert_eq!(means, vec![0.0, 1.0, 1.0, 1.0, 0.0]);
        assert_eq!(t.diagonalizations, 1);
        assert!(t.rows.iter().all(|r| r.sample_count + r.failure_count == 1));
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(usize, f64)> = [10usize, 20, 40].iter().map(|&l| (l, 3e-9 * (l as f64).powi(4))).collect();
        assert!((loglog_slope(&pts) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn method_parsing() {
        assert_eq!("bott".parse::<Method>().unwrap(), Method::Bott);
        assert!("trig".parse::<Method>().is_err());
    }
}
