//! Square-lattice Chern insulator with on-site disorder.
//!
//! Two orbitals per site. The on-site block is `(M - 4B) σ_z + W_j I`, and a
//! bond from site `j` to its neighbour `k` to the right (above) carries
//! `B σ_z - i A σ_x` (`B σ_z - i A σ_y`), with the adjoint block on the
//! reverse direction. In momentum space the clean model is
//! `d(k)·σ` with
//!
//! ```text
//! d(k) = (2A sin kx, 2A sin ky, M - 4B + 2B (cos kx + cos ky))
//! ```
//!
//! which is gapped at `E = 0` for the default constants
//! `A = 1, B = -1, C = 0, M = -2` and has a single band inversion at `Γ`.
//! `C` is carried for completeness and does not enter the Hamiltonian.

use std::collections::HashMap;
use std::f64::consts::PI;

use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{HermitianOperator, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Open,
}

/// Geometry, constants and disorder settings for one model family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(rename = "L")]
    pub side: usize,
    pub boundary: Boundary,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "C", default)]
    pub c: f64,
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(default)]
    pub disorder_width: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hole_radius: Option<f64>,
}

impl ModelSpec {
    /// Clean model at `A = 1, B = -1, C = 0, M = -2`.
    pub fn chern(side: usize, boundary: Boundary) -> Self {
        Self {
            side,
            boundary,
            a: 1.0,
            b: -1.0,
            c: 0.0,
            m: -2.0,
            disorder_width: 0.0,
            seed: 0,
            hole_radius: None,
        }
    }

    pub fn with_disorder(mut self, width: f64, seed: u64) -> Self {
        self.disorder_width = width;
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.side < 2 {
            return Err(Error::InvalidModel(format!("L must be at least 2, got {}", self.side)));
        }
        for (name, v) in [("A", self.a), ("B", self.b), ("C", self.c), ("M", self.m)] {
            if !v.is_finite() {
                return Err(Error::InvalidModel(format!("{name} is not finite")));
            }
        }
        if !(self.disorder_width >= 0.0 && self.disorder_width.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "disorder_width must be a nonnegative finite number, got {}",
                self.disorder_width
            )));
        }
        if let Some(r) = self.hole_radius {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(Error::InvalidModel(format!("hole_radius must be nonnegative, got {r}")));
            }
            if r > 0.0 && self.boundary != Boundary::Open {
                return Err(Error::InvalidModel(
                    "a hole requires open boundary conditions".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ModelSpec serializes")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Right,
    Up,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub direction: Direction,
}

/// Sites, centred positions and nearest-neighbour bonds.
#[derive(Clone, Debug)]
pub struct Lattice {
    pub side: usize,
    pub boundary: Boundary,
    /// Integer grid coordinates `(ix, iy)` with `0 <= ix, iy < side`.
    pub sites: Vec<(usize, usize)>,
    /// Positions `ix - (L-1)/2`, `iy - (L-1)/2`.
    pub positions: Vec<(f64, f64)>,
    pub edges: Vec<Edge>,
}

pub const ORBITALS_PER_SITE: usize = 2;

impl Lattice {
    pub fn num_sites(&self) -> usize {
        self.sites.len()
    }

    /// Hilbert-space dimension (two orbitals per site).
    pub fn dim(&self) -> usize {
        ORBITALS_PER_SITE * self.sites.len()
    }
}

fn centre(side: usize) -> f64 {
    (side as f64 - 1.0) / 2.0
}

pub fn build_lattice(spec: &ModelSpec) -> Result<Lattice> {
    spec.validate()?;
    let l = spec.side;
    let c = centre(l);
    let hole = spec.hole_radius.unwrap_or(0.0);
    let mut sites = Vec::new();
    let mut positions = Vec::new();
    let mut index = HashMap::new();
    for iy in 0..l {
        for ix in 0..l {
            let (x, y) = (ix as f64 - c, iy as f64 - c);
            if hole > 0.0 && x.hypot(y) <= hole {
                continue;
            }
            index.insert((ix, iy), sites.len());
            sites.push((ix, iy));
            positions.push((x, y));
        }
    }
    if sites.is_empty() {
        return Err(Error::EmptyLattice);
    }

    let periodic = spec.boundary == Boundary::Periodic;
    let mut edges = Vec::new();
    for (j, &(ix, iy)) in sites.iter().enumerate() {
        let neighbours = [
            (ix + 1, iy, Direction::Right),
            (ix, iy + 1, Direction::Up),
        ];
        for (nx, ny, direction) in neighbours {
            let (nx, ny) = if periodic { (nx % l, ny % l) } else { (nx, ny) };
            if let Some(&k) = index.get(&(nx, ny)) {
                edges.push(Edge {
                    from: j,
                    to: k,
                    direction,
                });
            }
        }
    }
    Ok(Lattice {
        side: l,
        boundary: spec.boundary,
        sites,
        positions,
        edges,
    })
}

/// Per-site on-site energies `W_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct DisorderField {
    pub w: Vec<f64>,
}

impl DisorderField {
    pub fn clean(sites: usize) -> Self {
        Self { w: vec![0.0; sites] }
    }
}

/// Seed for disorder sample `index` drawn from a run keyed by `base`.
///
/// A SplitMix64 finaliser over both words, so neighbouring indices give
/// unrelated streams and any sample can be regenerated on its own.
pub fn sample_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draws `W_j` uniformly from `[-width/2, width/2]`, one value per grid cell
/// in row-major order, then keeps the cells that are lattice sites. The
/// values at a given cell therefore do not depend on the hole mask.
pub fn sample_disorder(spec: &ModelSpec, lattice: &Lattice, sample_index: u64) -> DisorderField {
    let half = spec.disorder_width / 2.0;
    if half == 0.0 {
        return DisorderField::clean(lattice.num_sites());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(sample_seed(spec.seed, sample_index));
    let dist = Uniform::new_inclusive(-half, half).expect("finite nonnegative width");
    let l = lattice.side;
    let grid: Vec<f64> = (0..l * l).map(|_| dist.sample(&mut rng)).collect();
    DisorderField {
        w: lattice.sites.iter().map(|&(ix, iy)| grid[iy * l + ix]).collect(),
    }
}

fn block(a: [[C64; 2]; 2], row: usize, col: usize) -> impl Iterator<Item = (usize, usize, C64)> {
    (0..2).flat_map(move |p| (0..2).map(move |q| (2 * row + p, 2 * col + q, a[p][q])))
}

fn adjoint(a: [[C64; 2]; 2]) -> [[C64; 2]; 2] {
    [
        [a[0][0].conj(), a[1][0].conj()],
        [a[0][1].conj(), a[1][1].conj()],
    ]
}

/// Hopping block for a bond pointing in `direction`.
pub fn hopping_block(spec: &ModelSpec, direction: Direction) -> [[C64; 2]; 2] {
    let b = C64::new(spec.b, 0.0);
    let a = C64::new(spec.a, 0.0);
    let ia = C64::new(0.0, spec.a);
    match direction {
        // B σ_z - i A σ_x
        Direction::Right => [[b, -ia], [-ia, -b]],
        // B σ_z - i A σ_y, with σ_y = [[0, -i], [i, 0]]
        Direction::Up => [[b, -a], [a, -b]],
    }
}

pub fn build_hamiltonian(spec: &ModelSpec, lattice: &Lattice, w: &DisorderField) -> Result<HermitianOperator> {
    if w.w.len() != lattice.num_sites() {
        return Err(Error::DimensionMismatch {
            expected: lattice.num_sites(),
            got: w.w.len(),
        });
    }
    let mass = spec.m - 4.0 * spec.b;
    let zero = C64::new(0.0, 0.0);
    let mut trips = Vec::with_capacity(4 * lattice.num_sites() + 8 * lattice.edges.len());
    for (j, &wj) in w.w.iter().enumerate() {
        let onsite = [
            [C64::new(mass + wj, 0.0), zero],
            [zero, C64::new(-mass + wj, 0.0)],
        ];
        trips.extend(block(onsite, j, j));
    }
    for e in &lattice.edges {
        let t = hopping_block(spec, e.direction);
        trips.extend(block(t, e.from, e.to));
        trips.extend(block(adjoint(t), e.to, e.from));
    }
    HermitianOperator::from_triplets(lattice.dim(), trips)
}

/// How position operators are scaled.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PositionScaling {
    Raw,
    TwoOverL,
    Kappa(f64),
}

/// Diagonal position operators `(X, Y)`, each site's coordinate repeated on
/// both orbitals.
pub fn position_operators(lattice: &Lattice, scaling: PositionScaling) -> Result<(HermitianOperator, HermitianOperator)> {
    let s = match scaling {
        PositionScaling::Raw => 1.0,
        PositionScaling::TwoOverL => 2.0 / lattice.side as f64,
        PositionScaling::Kappa(k) => {
            if !(k > 0.0 && k.is_finite()) {
                return Err(Error::InvalidKappa(k));
            }
            k
        }
    };
    let mut xs = Vec::with_capacity(lattice.dim());
    let mut ys = Vec::with_capacity(lattice.dim());
    for &(x, y) in &lattice.positions {
        for _ in 0..ORBITALS_PER_SITE {
            xs.push(s * x);
            ys.push(s * y);
        }
    }
    Ok((HermitianOperator::diagonal(&xs), HermitianOperator::diagonal(&ys)))
}

/// Exponentiated positions `U = exp(2πiX/L)`, `V = exp(2πiY/L)` on a torus,
/// stored as their diagonals.
#[derive(Clone, Debug)]
pub struct PeriodicObservables {
    pub u: Vec<C64>,
    pub v: Vec<C64>,
}

impl PeriodicObservables {
    /// `M1 = (U + U†)/2`.
    pub fn m1(&self) -> HermitianOperator {
        HermitianOperator::diagonal(&self.u.iter().map(|z| z.re).collect::<Vec<_>>())
    }
    /// `M2 = (U - U†)/2i`.
    pub fn m2(&self) -> HermitianOperator {
        HermitianOperator::diagonal(&self.u.iter().map(|z| z.im).collect::<Vec<_>>())
    }
    pub fn m3(&self) -> HermitianOperator {
        HermitianOperator::diagonal(&self.v.iter().map(|z| z.re).collect::<Vec<_>>())
    }
    pub fn m4(&self) -> HermitianOperator {
        HermitianOperator::diagonal(&self.v.iter().map(|z| z.im).collect::<Vec<_>>())
    }
}

pub fn periodic_observables(lattice: &Lattice) -> Result<PeriodicObservables> {
    if lattice.boundary != Boundary::Periodic {
        return Err(Error::WrongBoundary { required: "periodic" });
    }
    let scale = 2.0 * PI / lattice.side as f64;
    let mut u = Vec::with_capacity(lattice.dim());
    let mut v = Vec::with_capacity(lattice.dim());
    for &(x, y) in &lattice.positions {
        for _ in 0..ORBITALS_PER_SITE {
            u.push(C64::from_polar(1.0, scale * x));
            v.push(C64::from_polar(1.0, scale * y));
        }
    }
    Ok(PeriodicObservables { u, v })
}

/// Everything needed to study one disorder sample.
#[derive(Clone, Debug)]
pub struct Sample {
    pub lattice: Lattice,
    pub disorder: DisorderField,
    pub hamiltonian: HermitianOperator,
}

impl Sample {
    pub fn generate(spec: &ModelSpec, sample_index: u64) -> Result<Self> {
        let lattice = build_lattice(spec)?;
        let disorder = sample_disorder(spec, &lattice, sample_index);
        let hamiltonian = build_hamiltonian(spec, &lattice, &disorder)?;
        Ok(Self {
            lattice,
            disorder,
            hamiltonian,
        })
    }
}
