//! Bott index of the compressed exponentiated positions, its large-matrix
//! variant, and the trig-method eigenvalue count.
//!
//! The trace of the matrix logarithm is never formed: for a matrix with no
//! spectrum on `(-∞, 0]`,
//!
//! ```text
//! Re( Tr log(X) / 2πi ) = Σ arg(λ_k) / 2π
//! ```
//!
//! summed over the eigenvalues listed with multiplicity (principal branch).

use std::f64::consts::PI;

use faer::{Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PeriodicObservables;
use crate::operator::C64;
use crate::spectral::{compress_cols, DiagonalOperator, EigenDecomposition, FermiData};

/// Distance from `±π` below which an eigenvalue argument counts as touching
/// the branch cut.
pub const DEFAULT_BRANCH_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BottOptions {
    pub branch_tolerance: f64,
}

impl Default for BottOptions {
    fn default() -> Self {
        Self {
            branch_tolerance: DEFAULT_BRANCH_TOLERANCE,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BottResult {
    /// Value before rounding.
    pub raw: f64,
    pub index: i64,
    /// `|raw - index|`.
    pub integer_error: f64,
    /// Smaller of the estimated `‖U₁†U₁ - I‖`, `‖V₁†V₁ - I‖`.
    pub min_unitarity_defect: f64,
    /// Set when the occupied space is empty (or everything), where the
    /// index is 0 by convention.
    #[serde(default)]
    pub degenerate: bool,
}

impl BottResult {
    pub fn from_raw(raw: f64, min_unitarity_defect: f64) -> Self {
        // f64::round rounds half away from zero.
        let rounded = raw.round();
        Self {
            raw,
            index: rounded as i64,
            integer_error: (raw - rounded).abs(),
            min_unitarity_defect,
            degenerate: false,
        }
    }

    pub fn degenerate() -> Self {
        Self {
            raw: 0.0,
            index: 0,
            integer_error: 0.0,
            min_unitarity_defect: 0.0,
            degenerate: true,
        }
    }
}

/// `Σ arg(λ)/2π` over the eigenvalues of `x`.
pub fn log_eig_trace(x: MatRef<'_, C64>, branch_tolerance: f64) -> Result<f64> {
    if x.nrows() != x.ncols() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            got: x.ncols(),
        });
    }
    if x.nrows() == 0 {
        return Ok(0.0);
    }
    let eigenvalues = x
        .eigenvalues()
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    log_eig_sum(&eigenvalues, branch_tolerance)
}

pub(crate) fn log_eig_sum(eigenvalues: &[C64], branch_tolerance: f64) -> Result<f64> {
    let mut sum = 0.0;
    for &lambda in eigenvalues {
        let arg = lambda.arg();
        if lambda.norm() == 0.0 || !arg.is_finite() || arg.abs() > PI - branch_tolerance {
            return Err(Error::BranchProximity {
                eigenvalue: lambda,
                tolerance: branch_tolerance,
            });
        }
        sum += arg;
    }
    Ok(sum / (2.0 * PI))
}

/// Bott index from the compressed pair `U₁ = W†UW`, `V₁ = W†VW`:
/// `Re Tr log(U₁V₁U₁†V₁†) / 2πi`.
pub fn bott_index_small(u1: MatRef<'_, C64>, v1: MatRef<'_, C64>, opts: BottOptions) -> Result<BottResult> {
    if u1.nrows() != u1.ncols() || v1.nrows() != v1.ncols() || u1.nrows() != v1.nrows() {
        return Err(Error::DimensionMismatch {
            expected: u1.nrows(),
            got: v1.nrows(),
        });
    }
    if u1.nrows() == 0 {
        return Ok(BottResult::degenerate());
    }
    let commutator = group_commutator(u1, v1);
    let raw = log_eig_trace(commutator.as_ref(), opts.branch_tolerance)?;
    let defect = unitarity_defect(u1).min(unitarity_defect(v1));
    Ok(BottResult::from_raw(raw, defect))
}

/// `A B A† B†`.
pub fn group_commutator(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> Mat<C64> {
    let ab = a * b;
    let aba = &ab * a.adjoint();
    &aba * b.adjoint()
}

/// Bott index from the full-size almost-unitaries `A = PUP + (I - P)`,
/// `B = PVP + (I - P)`.
///
/// In an orthonormal basis adapted to `P` these are `U₁ ⊕ I` and `V₁ ⊕ I`,
/// so the commutator is taken in the same order as the compressed formula
/// (`A B A† B†`) and the two routes agree.
pub fn bott_index_large(
    u: MatRef<'_, C64>,
    v: MatRef<'_, C64>,
    p: MatRef<'_, C64>,
    opts: BottOptions,
) -> Result<BottResult> {
    let n = p.nrows();
    for m in [u, v, p] {
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: m.nrows(),
            });
        }
    }
    let defect = projector_defect(p);
    if defect > 1e-8 {
        return Err(Error::NotProjector(defect));
    }
    let trace: f64 = (0..n).map(|i| p[(i, i)].re).sum();
    if trace.round() == 0.0 || trace.round() as usize == n {
        return Ok(BottResult::degenerate());
    }
    let a = almost_unitary(u, p);
    let b = almost_unitary(v, p);
    let raw = log_eig_trace(group_commutator(a.as_ref(), b.as_ref()).as_ref(), opts.branch_tolerance)?;
    let defect = unitarity_defect(a.as_ref()).min(unitarity_defect(b.as_ref()));
    Ok(BottResult::from_raw(raw, defect))
}

/// `P U P + (I - P)`.
fn almost_unitary(u: MatRef<'_, C64>, p: MatRef<'_, C64>) -> Mat<C64> {
    let pup = p * (u * p);
    Mat::from_fn(p.nrows(), p.ncols(), |i, j| {
        let id = if i == j { C64::new(1.0, 0.0) } else { C64::default() };
        pup[(i, j)] + id - p[(i, j)]
    })
}

/// Largest entry of `P² - P` and `P - P†`.
pub fn projector_defect(p: MatRef<'_, C64>) -> f64 {
    let p2 = p * p;
    let mut worst = 0.0f64;
    for j in 0..p.ncols() {
        for i in 0..p.nrows() {
            worst = worst
                .max((p2[(i, j)] - p[(i, j)]).norm())
                .max((p[(i, j)] - p[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Estimate of `‖A†A - I‖₂` by power iteration on the Hermitian matrix
/// `A†A - I`. A lower bound that is tight after a few dozen steps for the
/// well-separated spectra met here.
pub fn unitarity_defect(a: MatRef<'_, C64>) -> f64 {
    let m = a.nrows();
    if m == 0 {
        return 0.0;
    }
    let mut x = Mat::<C64>::from_fn(m, 1, |i, _| C64::new(1.0 + 0.37 * ((i * 7919) % 101) as f64 / 101.0, 0.0));
    let mut estimate = 0.0;
    for _ in 0..40 {
        let nx = x.norm_l2();
        if nx == 0.0 {
            return 0.0;
        }
        x = Mat::from_fn(m, 1, |i, _| x[(i, 0)] / nx);
        let ax = a * &x;
        let gx = a.adjoint() * &ax;
        let y = Mat::from_fn(m, 1, |i, _| gx[(i, 0)] - x[(i, 0)]);
        estimate = y.norm_l2();
        x = y;
    }
    estimate
}

/// Compressed exponentiated positions for the lowest `m` eigenvectors.
///
/// Leading principal `k × k` blocks are the compressions for the lowest `k`
/// states, so a whole Fermi-level sweep needs one compression.
#[derive(Clone, Debug)]
pub struct CompressedPair {
    pub u1: Mat<C64>,
    pub v1: Mat<C64>,
}

impl CompressedPair {
    pub fn new(eig: &EigenDecomposition, obs: &PeriodicObservables, m: usize) -> Result<Self> {
        let w = eig.vectors.as_ref().subcols(0, m);
        Ok(Self {
            u1: compress_cols(w, &DiagonalOperator(&obs.u))?,
            v1: compress_cols(w, &DiagonalOperator(&obs.v))?,
        })
    }

    pub fn from_fermi(fermi: &FermiData, obs: &PeriodicObservables) -> Result<Self> {
        Ok(Self {
            u1: compress_cols(fermi.w.as_ref(), &DiagonalOperator(&obs.u))?,
            v1: compress_cols(fermi.w.as_ref(), &DiagonalOperator(&obs.v))?,
        })
    }

    pub fn size(&self) -> usize {
        self.u1.nrows()
    }

    /// Bott index for the lowest `k` states.
    pub fn bott_leading(&self, k: usize, opts: BottOptions) -> Result<BottResult> {
        assert!(k <= self.size());
        if k == 0 {
            return Ok(BottResult::degenerate());
        }
        bott_index_small(
            self.u1.as_ref().submatrix(0, 0, k, k),
            self.v1.as_ref().submatrix(0, 0, k, k),
            opts,
        )
    }
}

/// Bott index of a periodic sample at one Fermi level.
pub fn bott_at_fermi_level(
    eig: &EigenDecomposition,
    obs: &PeriodicObservables,
    fermi_level: f64,
    opts: BottOptions,
) -> Result<BottResult> {
    let m = crate::spectral::occupied_count(&eig.values, fermi_level);
    if m == 0 || m == eig.values.len() {
        return Ok(BottResult::degenerate());
    }
    CompressedPair::new(eig, obs, m)?.bott_leading(m, opts)
}

/// A real-valued trigonometric polynomial `Σ_{|k|≤K} c_k z^k` on the unit
/// circle, stored as `c_{-K}, …, c_K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigPolynomial {
    coeffs: Vec<C64>,
}

impl TrigPolynomial {
    pub fn new(coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len().is_multiple_of(2) {
            return Err(Error::InvalidTriple("coefficient list must have odd length".into()));
        }
        let k = coeffs.len() / 2;
        for j in 0..=k {
            let lo = coeffs[k - j];
            let hi = coeffs[k + j];
            if (lo - hi.conj()).norm() > 1e-14 * (1.0 + hi.norm()) {
                return Err(Error::InvalidTriple(format!(
                    "coefficients of z^{j} and z^-{j} are not conjugate"
                )));
            }
        }
        Ok(Self { coeffs })
    }

    pub fn zero() -> Self {
        Self { coeffs: vec![C64::default()] }
    }

    pub fn constant(c: f64) -> Self {
        Self { coeffs: vec![C64::new(c, 0.0)] }
    }

    /// `a0 + Σ a_k cos kθ + b_k sin kθ`.
    pub fn from_fourier(a0: f64, cos: &[f64], sin: &[f64]) -> Self {
        let k = cos.len().max(sin.len());
        let mut coeffs = vec![C64::default(); 2 * k + 1];
        coeffs[k] = C64::new(a0, 0.0);
        for j in 1..=k {
            let a = cos.get(j - 1).copied().unwrap_or(0.0);
            let b = sin.get(j - 1).copied().unwrap_or(0.0);
            // a cos + b sin = (a - ib)/2 z + (a + ib)/2 z^-1
            let c = C64::new(a / 2.0, -b / 2.0);
            coeffs[k + j] = c;
            coeffs[k - j] = c.conj();
        }
        Self { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() / 2
    }

    pub fn coeff(&self, k: i64) -> C64 {
        let d = self.degree() as i64;
        if k.abs() > d {
            C64::default()
        } else {
            self.coeffs[(k + d) as usize]
        }
    }

    pub fn eval(&self, theta: f64) -> f64 {
        let d = self.degree() as i64;
        (-d..=d)
            .map(|k| self.coeff(k) * C64::from_polar(1.0, k as f64 * theta))
            .sum::<C64>()
            .re
    }

    /// `f(V)`, with `z^{-k}` evaluated as `(V†)^k`.
    pub fn apply(&self, v: MatRef<'_, C64>) -> Mat<C64> {
        let m = v.nrows();
        let mut out = Mat::<C64>::from_fn(m, m, |i, j| if i == j { self.coeff(0) } else { C64::default() });
        let mut pos = Mat::<C64>::identity(m, m);
        let mut neg = Mat::<C64>::identity(m, m);
        for k in 1..=self.degree() as i64 {
            pos = &pos * v;
            neg = &neg * v.adjoint();
            let (cp, cn) = (self.coeff(k), self.coeff(-k));
            out = Mat::from_fn(m, m, |i, j| out[(i, j)] + cp * pos[(i, j)] + cn * neg[(i, j)]);
        }
        out
    }

    /// Least-squares fit of degree `degree` to samples on a uniform grid.
    pub fn fit(samples: &[f64], degree: usize) -> Self {
        let n = samples.len() as f64;
        let mut coeffs = vec![C64::default(); 2 * degree + 1];
        for k in 0..=degree {
            let c: C64 = samples
                .iter()
                .enumerate()
                .map(|(j, &s)| s * C64::from_polar(1.0, -(k as f64) * grid_angle(j, samples.len())))
                .sum::<C64>()
                / n;
            if k == 0 {
                coeffs[degree] = C64::new(c.re, 0.0);
            } else {
                coeffs[degree + k] = c;
                coeffs[degree - k] = c.conj();
            }
        }
        Self { coeffs }
    }
}

fn grid_angle(j: usize, n: usize) -> f64 {
    2.0 * PI * j as f64 / n as f64
}

/// Points on the unit circle used to validate a triple.
pub const VALIDATION_GRID: usize = 256;

/// `(f, g, h)` defining an approximate projection-valued map on the torus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigPolynomialTriple {
    pub f: TrigPolynomial,
    pub g: TrigPolynomial,
    pub h: TrigPolynomial,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TripleReport {
    /// `max |g h|` over the grid. This cross term is what spoils `p² = p`
    /// for the assembled 2×2 symbol.
    pub product_residual: f64,
    /// `max |f² + g² + h² - f|` over the grid.
    pub projection_residual: f64,
    /// `f` is identically 0 or identically 1 on the grid.
    pub degenerate: bool,
}

impl TripleReport {
    pub fn max_residual(&self) -> f64 {
        self.product_residual.max(self.projection_residual)
    }
}

impl TrigPolynomialTriple {
    /// `f = (1 + cos θ)/2`, `h` the degree-8 fit to `max(sin θ, 0)/2` and `g`
    /// the degree-8 fit to `sqrt(max(f - f² - h², 0))`.
    ///
    /// `h` is kept to one half of the circle so that `θ ↦ (f, g, h)` winds
    /// once around the sphere. With `h = sin θ / 2` the map folds back on
    /// itself, has degree zero, and every count comes out 0.
    pub fn default_projector() -> Self {
        let f = TrigPolynomial::from_fourier(0.5, &[0.5], &[]);
        let half_sine: Vec<f64> = (0..VALIDATION_GRID)
            .map(|j| 0.5 * grid_angle(j, VALIDATION_GRID).sin().max(0.0))
            .collect();
        let h = TrigPolynomial::fit(&half_sine, 8);
        let samples: Vec<f64> = (0..VALIDATION_GRID)
            .map(|j| {
                let t = grid_angle(j, VALIDATION_GRID);
                let (fv, hv) = (f.eval(t), h.eval(t));
                (fv - fv * fv - hv * hv).max(0.0).sqrt()
            })
            .collect();
        let g = TrigPolynomial::fit(&samples, 8);
        Self { f, g, h }
    }

    /// The triple with `g = 0`, `h = sin θ / 2`. It satisfies both identities
    /// exactly but has degree zero.
    pub fn folded() -> Self {
        Self {
            f: TrigPolynomial::from_fourier(0.5, &[0.5], &[]),
            g: TrigPolynomial::zero(),
            h: TrigPolynomial::from_fourier(0.0, &[], &[0.5]),
        }
    }

    pub fn validate(&self) -> TripleReport {
        let mut product = 0.0f64;
        let mut projection = 0.0f64;
        let mut all_zero = true;
        let mut all_one = true;
        for j in 0..VALIDATION_GRID {
            let t = grid_angle(j, VALIDATION_GRID);
            let (f, g, h) = (self.f.eval(t), self.g.eval(t), self.h.eval(t));
            product = product.max((g * h).abs());
            projection = projection.max((f * f + g * g + h * h - f).abs());
            all_zero &= f.abs() < 1e-12;
            all_one &= (f - 1.0).abs() < 1e-12;
        }
        TripleReport {
            product_residual: product,
            projection_residual: projection,
            degenerate: all_zero || all_one,
        }
    }
}

pub fn validate_triple(triple: &TrigPolynomialTriple) -> TripleReport {
    triple.validate()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrigOptions {
    /// Largest allowed validation residual.
    pub residual_limit: f64,
    /// Eigenvalues closer than this to ½ make the count indeterminate.
    pub half_tolerance: f64,
}

impl Default for TrigOptions {
    fn default() -> Self {
        Self {
            residual_limit: 0.1,
            half_tolerance: 1e-8,
        }
    }
}

/// Eigenvalues above ½ minus eigenvalues below ½ of the Hermitian part of
///
/// ```text
/// [ f(V₁)                 g(V₁) + i h(V₁) U₁ ]
/// [ g(V₁) - i U₁† h(V₁)   1 - f(V₁)          ]
/// ```
///
/// When the matrix is close to a projector of rank `m + k` the count is
/// `2k`. With [`TrigPolynomialTriple::default_projector`] it comes out as
/// `-2` times the Bott index.
pub fn trig_method_index(
    u1: MatRef<'_, C64>,
    v1: MatRef<'_, C64>,
    triple: &TrigPolynomialTriple,
    opts: TrigOptions,
) -> Result<i64> {
    let report = triple.validate();
    if report.max_residual() > opts.residual_limit {
        return Err(Error::TripleResidual {
            residual: report.max_residual(),
            limit: opts.residual_limit,
        });
    }
    let m = u1.nrows();
    if u1.ncols() != m || v1.nrows() != m || v1.ncols() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: v1.nrows(),
        });
    }
    let i = C64::new(0.0, 1.0);
    let f = triple.f.apply(v1);
    let g = triple.g.apply(v1);
    let h = triple.h.apply(v1);
    let hu = &h * u1;
    let uh = u1.adjoint() * &h;
    let raw = Mat::<C64>::from_fn(2 * m, 2 * m, |r, c| match (r < m, c < m) {
        (true, true) => f[(r, c)],
        (true, false) => g[(r, c - m)] + i * hu[(r, c - m)],
        (false, true) => g[(r - m, c)] - i * uh[(r - m, c)],
        (false, false) => {
            let id = if r == c { C64::new(1.0, 0.0) } else { C64::default() };
            id - f[(r - m, c - m)]
        }
    });
    let herm = Mat::<C64>::from_fn(2 * m, 2 * m, |r, c| (raw[(r, c)] + raw[(c, r)].conj()) * 0.5);
    let values = crate::spectral::hermitian_eigenvalues(herm.as_ref())?;
    let mut above = 0i64;
    let mut below = 0i64;
    for v in values {
        if (v - 0.5).abs() < opts.half_tolerance {
            return Err(Error::IndeterminateCount {
                tolerance: opts.half_tolerance,
            });
        }
        if v > 0.5 {
            above += 1;
        } else {
            below += 1;
        }
    }
    Ok(above - below)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn diag(values: &[C64]) -> Mat<C64> {
        Mat::from_fn(values.len(), values.len(), |i, j| if i == j { values[i] } else { C64::default() })
    }

    fn random_unitary(n: usize, rng: &mut ChaCha8Rng) -> Mat<C64> {
        let a = Mat::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let h = Mat::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5);
        let e = h.self_adjoint_eigen(faer::Side::Lower).unwrap();
        // exp(iH)
        let phases: Vec<C64> = (0..n).map(|k| C64::from_polar(1.0, e.S()[k].re)).collect();
        e.U() * diag(&phases) * e.U().adjoint()
    }

    #[test]
    fn identity_has_zero_log_trace() {
        let id = Mat::<C64>::identity(4, 4);
        assert_eq!(log_eig_trace(id.as_ref(), 1e-6).unwrap(), 0.0);
    }

    #[test]
    fn quarter_turns_add_to_half() {
        let x = diag(&[C64::new(0.0, 1.0), C64::new(0.0, 1.0)]);
        assert!((log_eig_trace(x.as_ref(), 1e-6).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn negative_axis_is_rejected() {
        let x = diag(&[C64::new(-1.0, 1e-9), C64::new(1.0, 0.0)]);
        match log_eig_trace(x.as_ref(), 1e-6) {
            Err(Error::BranchProximity { eigenvalue, .. }) => assert!(eigenvalue.re < 0.0),
            other => panic!("expected branch error, got {other:?}"),
        }
    }

    #[test]
    fn commuting_unitaries_give_zero() {
        let u = diag(&[C64::from_polar(1.0, 0.4), C64::from_polar(1.0, -2.0), C64::from_polar(1.0, 3.0)]);
        let v = diag(&[C64::from_polar(1.0, 1.4), C64::from_polar(1.0, 0.2), C64::from_polar(1.0, -1.0)]);
        let r = bott_index_small(u.as_ref(), v.as_ref(), BottOptions::default()).unwrap();
        assert!(r.raw.abs() <= 1e-10);
        assert_eq!(r.index, 0);
        assert!(r.min_unitarity_defect < 1e-12);
    }

    #[test]
    fn empty_pair_is_degenerate() {
        let e = Mat::<C64>::zeros(0, 0);
        let r = bott_index_small(e.as_ref(), e.as_ref(), BottOptions::default()).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.index, 0);
    }

    #[test]
    fn swap_and_conjugation_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 8;
        // Nearly commuting: small random perturbations of commuting diagonals.
        let base_u = diag(&(0..n).map(|k| C64::from_polar(1.0, 0.7 * k as f64)).collect::<Vec<_>>());
        let base_v = diag(&(0..n).map(|k| C64::from_polar(1.0, -0.3 * k as f64)).collect::<Vec<_>>());
        let small = Mat::from_fn(n, n, |_, _| C64::new(rng.random_range(-0.05..0.05), rng.random_range(-0.05..0.05)));
        let u = &base_u + &small;
        let v = base_v.clone();
        let opts = BottOptions::default();
        let uv = bott_index_small(u.as_ref(), v.as_ref(), opts).unwrap();
        let vu = bott_index_small(v.as_ref(), u.as_ref(), opts).unwrap();
        assert!((uv.raw + vu.raw).abs() < 1e-10);

        let q = random_unitary(n, &mut rng);
        let uq = q.adjoint() * &u * &q;
        let vq = q.adjoint() * &v * &q;
        let conj = bott_index_small(uq.as_ref(), vq.as_ref(), opts).unwrap();
        assert!((conj.raw - uv.raw).abs() < 1e-10);
    }

    #[test]
    fn large_formula_trivial_cases() {
        let n = 6;
        let u = diag(&(0..n).map(|k| C64::from_polar(1.0, 0.5 * k as f64)).collect::<Vec<_>>());
        let v = diag(&(0..n).map(|k| C64::from_polar(1.0, 0.9 * k as f64)).collect::<Vec<_>>());
        let zero = Mat::<C64>::zeros(n, n);
        let r = bott_index_large(u.as_ref(), v.as_ref(), zero.as_ref(), BottOptions::default()).unwrap();
        assert_eq!(r.index, 0);
        // P = I: A = U, B = V commute exactly. Degenerate by occupancy.
        let id = Mat::<C64>::identity(n, n);
        let r = bott_index_large(u.as_ref(), v.as_ref(), id.as_ref(), BottOptions::default()).unwrap();
        assert_eq!(r.index, 0);
        // Direct evaluation of the formula at P = I.
        let raw = log_eig_trace(group_commutator(u.as_ref(), v.as_ref()).as_ref(), 1e-6).unwrap();
        assert!(raw.abs() < 1e-12);
    }

    #[test]
    fn large_formula_rejects_non_projector() {
        let n = 3;
        let half = Mat::<C64>::from_fn(n, n, |i, j| if i == j { C64::new(0.5, 0.0) } else { C64::default() });
        let id = Mat::<C64>::identity(n, n);
        assert!(matches!(
            bott_index_large(id.as_ref(), id.as_ref(), half.as_ref(), BottOptions::default()),
            Err(Error::NotProjector(_))
        ));
    }

    #[test]
    fn folded_triple_is_exact() {
        let r = validate_triple(&TrigPolynomialTriple::folded());
        assert!(r.max_residual() <= 1e-12, "{r:?}");
        assert!(!r.degenerate);
    }

    #[test]
    fn default_triple_residuals_are_small() {
        let r = validate_triple(&TrigPolynomialTriple::default_projector());
        assert!(r.product_residual < 0.01, "{r:?}");
        assert!(r.projection_residual < 0.005, "{r:?}");
        assert!(!r.degenerate);
    }

    #[test]
    fn degenerate_triples() {
        let zero = TrigPolynomialTriple {
            f: TrigPolynomial::zero(),
            g: TrigPolynomial::zero(),
            h: TrigPolynomial::zero(),
        };
        let r = validate_triple(&zero);
        assert_eq!((r.product_residual, r.projection_residual), (0.0, 0.0));
        assert!(r.degenerate);

        let one = TrigPolynomialTriple {
            f: TrigPolynomial::constant(1.0),
            g: TrigPolynomial::zero(),
            h: TrigPolynomial::zero(),
        };
        let r = validate_triple(&one);
        assert_eq!((r.product_residual, r.projection_residual), (0.0, 0.0));
        assert!(r.degenerate);
    }

    #[test]
    fn trig_method_on_identity_pair() {
        let id = Mat::<C64>::identity(5, 5);
        let t = TrigPolynomialTriple::default_projector();
        assert_eq!(trig_method_index(id.as_ref(), id.as_ref(), &t, TrigOptions::default()).unwrap(), 0);
    }

    #[test]
    fn trig_method_rejects_bad_triple() {
        let bad = TrigPolynomialTriple {
            f: TrigPolynomial::constant(0.5),
            g: TrigPolynomial::zero(),
            h: TrigPolynomial::zero(),
        };
        // f² - f = -1/4 everywhere; widen with g to reach 1/2.
        let worse = TrigPolynomialTriple {
            g: TrigPolynomial::constant(1.0),
            ..bad
        };
        let r = validate_triple(&worse);
        assert!(r.max_residual() >= 0.5);
        let id = Mat::<C64>::identity(2, 2);
        assert!(matches!(
            trig_method_index(id.as_ref(), id.as_ref(), &worse, TrigOptions::default()),
            Err(Error::TripleResidual { .. })
        ));
    }

    #[test]
    fn trig_polynomial_application_matches_scalar_eval() {
        let p = TrigPolynomial::from_fourier(0.2, &[0.3, -0.1], &[0.4]);
        let thetas = [0.1, 1.3, -2.2];
        let v = diag(&thetas.map(|t| C64::from_polar(1.0, t)));
        let pv = p.apply(v.as_ref());
        for (k, &t) in thetas.iter().enumerate() {
            assert!((pv[(k, k)] - C64::new(p.eval(t), 0.0)).norm() < 1e-14);
        }
        assert!(TrigPolynomial::new(vec![C64::new(1.0, 0.0), C64::default(), C64::new(2.0, 0.0)]).is_err());
    }

    #[test]
    fn rounding_is_half_away_from_zero() {
        assert_eq!(BottResult::from_raw(0.5, 0.0).index, 1);
        assert_eq!(BottResult::from_raw(-0.5, 0.0).index, -1);
        let r = BottResult::from_raw(0.9999, 0.0);
        assert_eq!(r.index, 1);
        assert!((r.integer_error - 1e-4).abs() < 1e-12);
    }
}
