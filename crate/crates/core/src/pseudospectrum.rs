//! Gridded gap fields of the localizer over probe space, with pruning by
//! the 1-Lipschitz property of `λ ↦ gap(λ)`, and constant-index regions.
//!
//! Once `gap(q)` is known, every `p` has `gap(p) ≥ gap(q) - ‖p - q‖₂`. A
//! point whose best such bound exceeds the pruning cutoff is stored with the
//! bound instead of being evaluated.

use std::collections::VecDeque;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::localizer::{localizer_gap_with, localizer_index_only, GapOptions, LocalizerProbe};
use crate::operator::HermitianOperator;

/// Default region threshold.
pub const DEFAULT_TAU: f64 = 1e-8;
/// Default pruning cutoff for display grids.
pub const DEFAULT_PRUNING_CUTOFF: f64 = 0.05;

/// Lipschitz bounds are shaved by this relative amount so that solver
/// rounding in the source gap cannot make a bound exceed the true value.
const BOUND_SAFETY: f64 = 1e-9;

/// Axis-aligned probe grid. An axis with resolution 1 is held at the lower
/// end of its range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub ranges: [(f64, f64); 3],
    pub resolution: [usize; 3],
}

impl GridSpec {
    /// `n × n` grid over `(λ₁, λ₂)` at fixed `λ₃`.
    pub fn slice(l1: (f64, f64), l2: (f64, f64), n: usize, l3: f64) -> Result<Self> {
        let g = Self {
            ranges: [l1, l2, (l3, l3)],
            resolution: [n, n, 1],
        };
        g.validate()?;
        Ok(g)
    }

    /// `n³` grid.
    pub fn volume(ranges: [(f64, f64); 3], n: usize) -> Result<Self> {
        let g = Self {
            ranges,
            resolution: [n; 3],
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        for (axis, (&(lo, hi), &n)) in self.ranges.iter().zip(&self.resolution).enumerate() {
            if !lo.is_finite() || !hi.is_finite() || hi < lo {
                return Err(Error::InvalidGrid(format!("axis {axis}: range [{lo}, {hi}]")));
            }
            if n == 0 {
                return Err(Error::InvalidGrid(format!("axis {axis}: resolution 0")));
            }
        }
        if self.resolution[0] < 2 || self.resolution[1] < 2 {
            return Err(Error::InvalidGrid("position axes need resolution ≥ 2".into()));
        }
        Ok(())
    }

    pub fn is_volume(&self) -> bool {
        self.resolution[2] > 1
    }

    pub fn len(&self) -> usize {
        self.resolution.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn step(&self, axis: usize) -> f64 {
        let (lo, hi) = self.ranges[axis];
        let n = self.resolution[axis];
        if n > 1 {
            (hi - lo) / (n - 1) as f64
        } else {
            0.0
        }
    }

    /// Grid index `(i₁, i₂, i₃)` of flat index `k` (axis 1 fastest).
    pub fn unflatten(&self, k: usize) -> [usize; 3] {
        let [n1, n2, _] = self.resolution;
        [k % n1, (k / n1) % n2, k / (n1 * n2)]
    }

    pub fn flatten(&self, ix: [usize; 3]) -> usize {
        let [n1, n2, _] = self.resolution;
        (ix[2] * n2 + ix[1]) * n1 + ix[0]
    }

    pub fn point(&self, k: usize) -> [f64; 3] {
        let ix = self.unflatten(k);
        let mut out = [0.0; 3];
        for a in 0..3 {
            out[a] = self.ranges[a].0 + ix[a] as f64 * self.step(a);
        }
        out
    }

    /// Face neighbours of `k`.
    pub fn neighbours(&self, k: usize) -> Vec<usize> {
        let ix = self.unflatten(k);
        let mut out = Vec::with_capacity(6);
        for a in 0..3 {
            if ix[a] > 0 {
                let mut j = ix;
                j[a] -= 1;
                out.push(self.flatten(j));
            }
            if ix[a] + 1 < self.resolution[a] {
                let mut j = ix;
                j[a] += 1;
                out.push(self.flatten(j));
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointStatus {
    Computed,
    PrunedLowerBound,
}

impl PointStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            PointStatus::Computed => "computed",
            PointStatus::PrunedLowerBound => "pruned",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapField {
    pub grid: GridSpec,
    /// Gap at computed points, certified lower bound at pruned ones.
    pub values: Vec<f64>,
    pub status: Vec<PointStatus>,
    /// `None` when pruning was disabled.
    pub pruning_cutoff: Option<f64>,
    pub kappa: f64,
}

impl GapField {
    pub fn computed_count(&self) -> usize {
        self.status.iter().filter(|s| **s == PointStatus::Computed).count()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Writes `l1,l2,l3,gap,status` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "l1,l2,l3,gap,status")?;
        for k in 0..self.grid.len() {
            let [a, b, c] = self.grid.point(k);
            writeln!(w, "{a},{b},{c},{},{}", self.values[k], self.status[k].as_str())?;
        }
        Ok(())
    }
}

/// `(X, Y, H, κ)` with diagonal positions, evaluated at probe points.
#[derive(Clone, Debug)]
pub struct LocalizerProblem<'a> {
    pub x: &'a HermitianOperator,
    pub y: &'a HermitianOperator,
    pub h: &'a HermitianOperator,
    pub kappa: f64,
    pub gap_options: GapOptions,
}

impl<'a> LocalizerProblem<'a> {
    pub fn new(x: &'a HermitianOperator, y: &'a HermitianOperator, h: &'a HermitianOperator, kappa: f64) -> Result<Self> {
        LocalizerProbe::origin(kappa)?;
        Ok(Self {
            x,
            y,
            h,
            kappa,
            gap_options: GapOptions::default(),
        })
    }

    pub fn probe(&self, lambda: [f64; 3]) -> LocalizerProbe {
        LocalizerProbe {
            lambda,
            kappa: self.kappa,
        }
    }

    pub fn gap(&self, lambda: [f64; 3]) -> Result<f64> {
        localizer_gap_with(self.x, self.y, self.h, &self.probe(lambda), self.gap_options)
    }

    /// Index, or `None` when the factorization flags the localizer as
    /// singular.
    pub fn index(&self, lambda: [f64; 3]) -> Result<Option<i64>> {
        let (index, sig) = localizer_index_only(self.x, self.y, self.h, &self.probe(lambda))?;
        Ok((!sig.singular_flag).then_some(index))
    }
}

fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Gap field over a grid, for any 1-Lipschitz gap function.
///
/// Points are visited on successively finer sub-lattices (stride `2^s`,
/// then `2^(s-1)`, … 1). Within a level every undecided point is either
/// pruned, when its bound exceeds `cutoff`, or evaluated; evaluations in a
/// level run in parallel and bounds are raised afterwards. Computed values
/// never depend on the visiting order. `cutoff = None` (or `≤ 0`) evaluates
/// every point.
pub fn gap_field<F>(grid: &GridSpec, kappa: f64, cutoff: Option<f64>, gap: F) -> Result<GapField>
where
    F: Fn([f64; 3]) -> Result<f64> + Sync,
{
    grid.validate()?;
    let cutoff = cutoff.filter(|c| *c > 0.0);
    let total = grid.len();
    let points: Vec<[f64; 3]> = (0..total).map(|k| grid.point(k)).collect();
    let mut values = vec![f64::NEG_INFINITY; total];
    let mut status: Vec<Option<PointStatus>> = vec![None; total];
    let mut bound = vec![f64::NEG_INFINITY; total];

    let max_res = *grid.resolution.iter().max().expect("three axes");
    let mut stride = 1usize;
    while stride * 2 < max_res {
        stride *= 2;
    }
    if cutoff.is_none() {
        stride = 1;
    }
    loop {
        let level: Vec<usize> = (0..total)
            .filter(|&k| status[k].is_none() && grid.unflatten(k).iter().all(|i| i % stride == 0))
            .collect();
        let (prune, compute): (Vec<usize>, Vec<usize>) = level
            .into_iter()
            .partition(|&k| cutoff.is_some_and(|c| bound[k] > c));
        for k in prune {
            values[k] = bound[k];
            status[k] = Some(PointStatus::PrunedLowerBound);
        }
        let results: Vec<Result<f64>> = compute.par_iter().map(|&k| gap(points[k])).collect();
        for (&k, r) in compute.iter().zip(results) {
            let g = r?;
            values[k] = g;
            status[k] = Some(PointStatus::Computed);
            if cutoff.is_some() {
                let reach = g * (1.0 - BOUND_SAFETY);
                if reach > 0.0 {
                    for (p, b) in points.iter().zip(bound.iter_mut()) {
                        let lb = reach - distance(*p, points[k]);
                        if lb > *b {
                            *b = lb;
                        }
                    }
                }
            }
        }
        if stride == 1 {
            break;
        }
        stride /= 2;
    }
    Ok(GapField {
        grid: grid.clone(),
        values,
        status: status.into_iter().map(|s| s.expect("every point decided")).collect(),
        pruning_cutoff: cutoff,
        kappa,
    })
}

/// Localizer gap over a 2D slice.
pub fn gap_slice(problem: &LocalizerProblem<'_>, grid: &GridSpec, cutoff: Option<f64>) -> Result<GapField> {
    if grid.is_volume() {
        return Err(Error::InvalidGrid("slice grid has an active λ₃ axis".into()));
    }
    gap_field(grid, problem.kappa, cutoff, |l| problem.gap(l))
}

/// Localizer gap over a 3D grid.
pub fn gap_volume(problem: &LocalizerProblem<'_>, grid: &GridSpec, cutoff: Option<f64>) -> Result<GapField> {
    gap_field(grid, problem.kappa, cutoff, |l| problem.gap(l))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    /// `None` when the localizer was singular at the representative point.
    pub index: Option<i64>,
    /// Largest-value grid point of the region.
    pub representative: usize,
    pub size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexedRegions {
    /// Region number per grid point; `None` where `gap ≤ τ`.
    pub labels: Vec<Option<usize>>,
    pub regions: Vec<Region>,
    pub tau: f64,
}

impl IndexedRegions {
    pub fn index_at(&self, k: usize) -> Option<i64> {
        self.labels[k].and_then(|r| self.regions[r].index)
    }

    /// Writes `l1,l2,l3,region,index` rows. Unlabeled points get region -1;
    /// the index column is empty where no index is known.
    pub fn write_csv<W: Write>(&self, grid: &GridSpec, mut w: W) -> Result<()> {
        writeln!(w, "l1,l2,l3,region,index")?;
        for k in 0..grid.len() {
            let [a, b, c] = grid.point(k);
            let region = self.labels[k].map_or(-1, |r| r as i64);
            let index = self.index_at(k).map(|i| i.to_string()).unwrap_or_default();
            writeln!(w, "{a},{b},{c},{region},{index}")?;
        }
        Ok(())
    }
}

/// Face-connected components of `{gap > τ}`, each given one index.
///
/// Two neighbouring points are first joined only when
/// `v(p) + v(q) > ‖p - q‖`, which with the Lipschitz bound keeps the gap
/// open along the segment between them; this stops a component from
/// stepping across a gap closing the grid does not resolve. The index is
/// then evaluated at each component's largest-gap point, and touching
/// components with equal indices are merged.
pub fn index_regions<F>(field: &GapField, tau: f64, index: F) -> Result<IndexedRegions>
where
    F: Fn([f64; 3]) -> Result<Option<i64>> + Sync,
{
    let grid = &field.grid;
    let n = grid.len();
    let open: Vec<bool> = field.values.iter().map(|&v| v > tau).collect();
    let mut labels: Vec<Option<usize>> = vec![None; n];
    let mut members: Vec<Vec<usize>> = Vec::new();
    for start in 0..n {
        if !open[start] || labels[start].is_some() {
            continue;
        }
        let id = members.len();
        let mut comp = vec![start];
        labels[start] = Some(id);
        let mut queue = VecDeque::from([start]);
        while let Some(k) = queue.pop_front() {
            let pk = grid.point(k);
            for j in grid.neighbours(k) {
                if open[j]
                    && labels[j].is_none()
                    && field.values[k] + field.values[j] > distance(pk, grid.point(j))
                {
                    labels[j] = Some(id);
                    comp.push(j);
                    queue.push_back(j);
                }
            }
        }
        members.push(comp);
    }
    let reps: Vec<usize> = members
        .iter()
        .map(|comp| {
            *comp
                .iter()
                .max_by(|&&a, &&b| field.values[a].total_cmp(&field.values[b]).then(b.cmp(&a)))
                .expect("nonempty component")
        })
        .collect();
    let indices: Vec<Option<i64>> = reps
        .par_iter()
        .map(|&k| index(grid.point(k)))
        .collect::<Result<_>>()?;

    // Components that touch and carry the same index are one region.
    let mut parent: Vec<usize> = (0..members.len()).collect();
    fn find(parent: &mut [usize], mut a: usize) -> usize {
        while parent[a] != a {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        a
    }
    for k in 0..n {
        let Some(a) = labels[k] else { continue };
        for j in grid.neighbours(k) {
            let Some(b) = labels[j] else { continue };
            if a != b && indices[a].is_some() && indices[a] == indices[b] {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let mut renumber = vec![usize::MAX; members.len()];
    let mut regions: Vec<Region> = Vec::new();
    for c in 0..members.len() {
        let root = find(&mut parent, c);
        if renumber[root] == usize::MAX {
            renumber[root] = regions.len();
            regions.push(Region {
                index: indices[root],
                representative: reps[root],
                size: 0,
            });
        }
        let r = &mut regions[renumber[root]];
        r.size += members[c].len();
        let better = field.values[reps[c]].total_cmp(&field.values[r.representative]);
        if better.is_gt() || (better.is_eq() && reps[c] < r.representative) {
            r.representative = reps[c];
        }
    }
    for l in labels.iter_mut().flatten() {
        *l = renumber[find(&mut parent, *l)];
    }
    Ok(IndexedRegions { labels, regions, tau })
}

/// Regions of a localizer gap field.
pub fn localizer_regions(field: &GapField, problem: &LocalizerProblem<'_>, tau: f64) -> Result<IndexedRegions> {
    index_regions(field, tau, |l| problem.index(l))
}
