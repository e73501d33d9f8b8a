//! Spectral localizer
//!
//! ```text
//! L_λ(X, Y, H) = [ H - λ₃                 (κX - λ₁) - i(κY - λ₂) ]
//!                [ (κX - λ₁) + i(κY - λ₂)  -(H - λ₃)             ]
//! ```
//!
//! its index `Sig(L)/2` and its gap `min |spec(L)|`.
//!
//! Probes `λ₁, λ₂` live in the scaled coordinates `κX, κY`.

use faer::{Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ldlt::{factor_complex, LdlFactor, Ordering, SignatureResult};
use crate::operator::{HermitianOperator, C64};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizerProbe {
    pub lambda: [f64; 3],
    pub kappa: f64,
}

impl LocalizerProbe {
    pub fn new(lambda: [f64; 3], kappa: f64) -> Result<Self> {
        let p = Self { lambda, kappa };
        p.validate()?;
        Ok(p)
    }

    pub fn origin(kappa: f64) -> Result<Self> {
        Self::new([0.0; 3], kappa)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::InvalidKappa(self.kappa));
        }
        if self.lambda.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(())
    }

    pub fn with_lambda(&self, lambda: [f64; 3]) -> Self {
        Self { lambda, ..*self }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizerReport {
    pub probe: [f64; 3],
    pub kappa: f64,
    pub index: i64,
    pub gap: f64,
    pub singular_flag: bool,
    pub signature: i64,
    pub min_block_magnitude: f64,
}

/// Controls for the gap computation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapOptions {
    /// Matrices up to this dimension use a dense eigensolver.
    pub dense_threshold: usize,
    /// Lanczos stops once the residual of the extreme Ritz pair is below
    /// this times its Ritz value.
    pub relative_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for GapOptions {
    fn default() -> Self {
        Self {
            dense_threshold: 256,
            relative_tolerance: 1e-10,
            max_iterations: 400,
        }
    }
}

fn check_dims(x: &HermitianOperator, y: &HermitianOperator, h: &HermitianOperator) -> Result<()> {
    for m in [x, y] {
        if m.dim() != h.dim() {
            return Err(Error::DimensionMismatch {
                expected: h.dim(),
                got: m.dim(),
            });
        }
    }
    Ok(())
}

/// Assembles the `2n × 2n` localizer. `X` and `Y` must be diagonal.
pub fn assemble_localizer(
    x: &HermitianOperator,
    y: &HermitianOperator,
    h: &HermitianOperator,
    probe: &LocalizerProbe,
) -> Result<HermitianOperator> {
    if !x.is_diagonal() {
        return Err(Error::NotDiagonal("X"));
    }
    if !y.is_diagonal() {
        return Err(Error::NotDiagonal("Y"));
    }
    assemble_general(x, y, h, probe)
}

/// Same as [`assemble_localizer`] for any Hermitian `X`, `Y`.
pub fn assemble_general(
    x: &HermitianOperator,
    y: &HermitianOperator,
    h: &HermitianOperator,
    probe: &LocalizerProbe,
) -> Result<HermitianOperator> {
    probe.validate()?;
    check_dims(x, y, h)?;
    let n = h.dim();
    let [l1, l2, l3] = probe.lambda;
    let k = probe.kappa;
    let i = C64::new(0.0, 1.0);
    let mut t = Vec::with_capacity(2 * h.nnz() + 2 * x.nnz() + 2 * y.nnz() + 4 * n);
    for (r, c, v) in h.triplets() {
        t.push((r, c, v));
        t.push((n + r, n + c, -v));
    }
    for r in 0..n {
        t.push((r, r, C64::new(-l3, 0.0)));
        t.push((n + r, n + r, C64::new(l3, 0.0)));
        // Off-diagonal shift -(λ₁ - iλ₂) and its adjoint.
        t.push((r, n + r, C64::new(-l1, l2)));
        t.push((n + r, r, C64::new(-l1, -l2)));
    }
    for (r, c, v) in x.triplets() {
        t.push((r, n + c, v * k));
        t.push((n + r, c, v * k));
    }
    for (r, c, v) in y.triplets() {
        t.push((r, n + c, -i * v * k));
        t.push((n + r, c, i * v * k));
    }
    HermitianOperator::from_triplets(2 * n, t)
}

/// Ordering that places entry `i` of each half next to entry `i` of the
/// other half, unless reverse Cuthill–McKee gives a smaller envelope.
pub fn localizer_ordering(l: &HermitianOperator) -> Ordering {
    Ordering::best_of(
        l,
        vec![Ordering::interleaved(l.dim()), Ordering::reverse_cuthill_mckee(l)],
    )
}

fn signature_from(f: &LdlFactor<C64>) -> SignatureResult {
    SignatureResult {
        signature: f.signature(),
        min_block_magnitude: f.min_block_magnitude,
        singular_flag: f.singular_flag,
    }
}

fn half_signature(s: &SignatureResult) -> Result<i64> {
    if s.signature % 2 != 0 && !s.singular_flag {
        return Err(Error::Eigensolver(format!(
            "odd signature {} of an even-dimensional nonsingular matrix",
            s.signature
        )));
    }
    Ok(s.signature / 2)
}

/// Signature of the localizer only, without keeping the factor.
pub fn localizer_signature(
    x: &HermitianOperator,
    y: &HermitianOperator,
    h: &HermitianOperator,
    probe: &LocalizerProbe,
) -> Result<SignatureResult> {
    let l = assemble_localizer(x, y, h, probe)?;
    let f = factor_complex(&l, &localizer_ordering(&l), false);
    Ok(signature_from(&f))
}

/// Index and gap at one probe from a single factorization.
pub fn localizer_index(
    x: &HermitianOperator,
    y: &HermitianOperator,
    h: &HermitianOperator,
    probe: &LocalizerProbe,
) -> Result<LocalizerReport> {
    localizer_index_with(x, y, h, probe, GapOptions::default())
}

pub fn localizer_index_with(
    x: &HermitianOperator,
    y: &HermitianOperator,
    h: &HermitianOperator,
    probe: &LocalizerProbe,
    opts: GapOptions,
) -> Result<LocalizerReport> {
    let l = assemble_localizer(x, y, h, probe)?;
    let dense = l.dim() <= opts.dense_threshold;
    let f = factor_complex(&l, &localizer_ordering(&l), !dense);
    let sig = signature_from(&f);
    let gap = if dense {
        dense_min_abs_eigenvalue(&l)?
    } else if f.singular_flag {
        0.0
    } else {
        lanczos_min_abs(&f, opts)?
    };
    Ok(LocalizerReport {
        probe: probe.lambda,
        kappa: probe.kappa,
        index: half_signature(&sig)?,
        gap,
        singular_flag: sig.singular_flag,
        signature: sig.signature,
        min_block_magnitude: sig.min_block_magnitude,
    })
}

/// Index only.
pub fn localizer_index_only(
    x: &HermitianOperator,
    y: &HermitianOperator,
    h: &HermitianOperator,
    probe: &LocalizerProbe,
) -> Result<(i64, SignatureResult)> {
    let s = localizer_signature(x, y, h, probe)?;
    Ok((half_signature(&s)?, s))
}

/// `‖L⁻¹‖⁻¹`. `X` and `Y` may be any Hermitian operators here.
pub fn localizer_gap(
    x: &HermitianOperator,
    y: &HermitianOperator,
    h: &HermitianOperator,
    probe: &LocalizerProbe,
) -> Result<f64> {
    localizer_gap_with(x, y, h, probe, GapOptions::default())
}

pub fn localizer_gap_with(
    x: &HermitianOperator,
    y: &HermitianOperator,
    h: &HermitianOperator,
    probe: &LocalizerProbe,
    opts: GapOptions,
) -> Result<f64> {
    let l = assemble_general(x, y, h, probe)?;
    min_abs_eigenvalue(&l, &localizer_ordering(&l), opts)
}

/// Smallest `|eigenvalue|` of a Hermitian matrix: dense below the
/// threshold, otherwise Lanczos on the inverse through an LDLᴴ factor.
/// Returns 0 when the factorization flags the matrix as singular.
pub fn min_abs_eigenvalue(m: &HermitianOperator, ordering: &Ordering, opts: GapOptions) -> Result<f64> {
    if m.dim() <= opts.dense_threshold {
        return dense_min_abs_eigenvalue(m);
    }
    let f = factor_complex(m, ordering, true);
    if f.singular_flag {
        return Ok(0.0);
    }
    lanczos_min_abs(&f, opts)
}

pub fn dense_min_abs_eigenvalue(m: &HermitianOperator) -> Result<f64> {
    let values = crate::spectral::hermitian_eigenvalues(m.to_dense().as_ref())?;
    Ok(values.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min))
}

/// Largest `|θ|` of `A⁻¹` by Lanczos with full reorthogonalization, returned
/// as `1/|θ|`. Works in the factor's ordering; the spectrum is unchanged by
/// the permutation.
fn lanczos_min_abs(f: &LdlFactor<C64>, opts: GapOptions) -> Result<f64> {
    let n = f.dim();
    if n == 0 {
        return Ok(f64::INFINITY);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x6c61_6e63_7a6f_7321);
    let mut q: Vec<C64> = (0..n)
        .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    normalize(&mut q);
    let max_iter = opts.max_iterations.min(n);
    let mut basis: Vec<Vec<C64>> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut last_residual = f64::INFINITY;
    for j in 0..max_iter {
        let mut w = q.clone();
        f.solve_in_place(&mut w);
        let alpha = dot(&q, &w).re;
        axpy(&mut w, -alpha, &q);
        if let (Some(prev), Some(&b)) = (basis.last(), betas.last()) {
            axpy(&mut w, -b, prev);
        }
        basis.push(q);
        alphas.push(alpha);
        for _ in 0..2 {
            for v in &basis {
                let c = dot(v, &w);
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= c * vi;
                }
            }
        }
        let beta = norm(&w);
        let steps = j + 1;
        if steps == max_iter || steps % 5 == 0 || beta == 0.0 {
            let (theta, last) = extreme_ritz(&alphas, &betas)?;
            let residual = beta * last.abs();
            last_residual = residual / theta.abs();
            if residual <= opts.relative_tolerance * theta.abs() || steps == n {
                return Ok(1.0 / theta.abs());
            }
        }
        if beta <= f64::EPSILON * alpha.abs().max(1.0) * 1e-3 {
            let (theta, _) = extreme_ritz(&alphas, &betas)?;
            return Ok(1.0 / theta.abs());
        }
        betas.push(beta);
        q = w.into_iter().map(|v| v / beta).collect();
    }
    Err(Error::NoConvergence {
        residual: last_residual,
        iterations: max_iter,
    })
}

/// Ritz value of largest magnitude and the last component of its vector.
fn extreme_ritz(alphas: &[f64], betas: &[f64]) -> Result<(f64, f64)> {
    let k = alphas.len();
    let t = Mat::<f64>::from_fn(k, k, |i, j| {
        if i == j {
            alphas[i]
        } else if i == j + 1 {
            betas[j]
        } else if j == i + 1 {
            betas[i]
        } else {
            0.0
        }
    });
    let e = t
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let mut best = 0;
    for i in 0..k {
        if e.S()[i].abs() > e.S()[best].abs() {
            best = i;
        }
    }
    Ok((e.S()[best], e.U()[(k - 1, best)]))
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn axpy(y: &mut [C64], a: f64, x: &[C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += xi * a;
    }
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

fn normalize(a: &mut [C64]) {
    let s = norm(a);
    for v in a {
        *v /= s;
    }
}

/// Quantities in the perturbation bound for the localizer at the origin
/// with `κ = 1`:
///
/// ```text
/// γ  = ‖L(X, Y, H)⁻¹‖⁻²         γ₀ = ‖L(X, Y, H + H₀)⁻¹‖⁻²
/// C  = ‖|Z|⁻¹ (H H₀ + H₀ H + H₀²) |Z|⁻¹‖
/// D  = ‖[Z, H]‖
/// E  = ‖|Z|⁻¹ [Z, H₀] |Z|⁻¹‖
/// ```
///
/// with `Z = X + iY`. The bound is `|γ - γ₀| ≤ (C + E)γ + (C + E)D`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaCertificate {
    pub gamma: f64,
    pub gamma0: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    /// `|γ - γ₀|`.
    pub lhs: f64,
    /// `(C + E)γ + (C + E)D`.
    pub rhs: f64,
    pub inequality_holds: bool,
    /// `C + E < 1`.
    pub hypothesis_applicable: bool,
    /// `γ > (C + E)D / (1 - (C + E))`, only evaluated when applicable.
    pub hypothesis_holds: bool,
    pub index: i64,
    pub index_perturbed: i64,
    /// Whether the two indices agree; `None` unless the hypothesis holds.
    pub indices_agree: Option<bool>,
}

/// Relative slack allowed for rounding when comparing the two sides.
const LEMMA_SLACK: f64 = 1e-10;

pub fn perturbation_bound_check(
    x: &HermitianOperator,
    y: &HermitianOperator,
    h: &HermitianOperator,
    h0: &HermitianOperator,
) -> Result<LemmaCertificate> {
    check_dims(x, y, h)?;
    if h0.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            got: h0.dim(),
        });
    }
    let xs = x.diagonal_values().ok_or(Error::NotDiagonal("X"))?;
    let ys = y.diagonal_values().ok_or(Error::NotDiagonal("Y"))?;
    let z: Vec<C64> = xs.iter().zip(&ys).map(|(&a, &b)| C64::new(a, b)).collect();
    if z.iter().any(|v| v.norm() == 0.0) {
        return Err(Error::SingularPosition);
    }
    let n = h.dim();
    let hd = h.to_dense();
    let h0d = h0.to_dense();
    let inv_abs: Vec<f64> = z.iter().map(|v| 1.0 / v.norm()).collect();

    let probe = LocalizerProbe::origin(1.0)?;
    let hp = h.add(h0)?;
    let l = assemble_localizer(x, y, h, &probe)?;
    let lp = assemble_localizer(x, y, &hp, &probe)?;
    let gap = dense_min_abs_eigenvalue(&l)?;
    let gap0 = dense_min_abs_eigenvalue(&lp)?;
    let gamma = gap * gap;
    let gamma0 = gap0 * gap0;

    let anti = &hd * &h0d + &h0d * &hd + &h0d * &h0d;
    let c = spectral_norm(&Mat::from_fn(n, n, |i, j| anti[(i, j)] * inv_abs[i] * inv_abs[j]))?;
    let d = spectral_norm(&Mat::from_fn(n, n, |i, j| (z[i] - z[j]) * hd[(i, j)]))?;
    let e = spectral_norm(&Mat::from_fn(n, n, |i, j| {
        (z[i] - z[j]) * h0d[(i, j)] * inv_abs[i] * inv_abs[j]
    }))?;

    let lhs = (gamma - gamma0).abs();
    let rhs = (c + e) * gamma + (c + e) * d;
    let inequality_holds = lhs <= rhs + LEMMA_SLACK * (1.0 + gamma.max(gamma0));
    let hypothesis_applicable = c + e < 1.0;
    let hypothesis_holds = hypothesis_applicable && gamma > (c + e) * d / (1.0 - (c + e));

    let index = half_signature(&crate::ldlt::signature(&l)?)?;
    let index_perturbed = half_signature(&crate::ldlt::signature(&lp)?)?;
    Ok(LemmaCertificate {
        gamma,
        gamma0,
        c,
        d,
        e,
        lhs,
        rhs,
        inequality_holds,
        hypothesis_applicable,
        hypothesis_holds,
        index,
        index_perturbed,
        indices_agree: hypothesis_holds.then_some(index == index_perturbed),
    })
}

fn spectral_norm(m: &Mat<C64>) -> Result<f64> {
    let s = m
        .singular_values()
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    Ok(s.iter().copied().fold(0.0, f64::max))
}

/// One random instance for the perturbation bound: diagonal positions with
/// `1 ≤ |z| ≤ 3`, a random Hermitian `H` of size log-uniform in
/// `[1e-2, 1]`, and a random Hermitian `H₀` smaller than `H` by a factor
/// log-uniform in `[1e-8, 1e-1]`. The spread makes both outcomes of the
/// index hypothesis common.
pub fn random_lemma_instance(
    n: usize,
    rng: &mut ChaCha8Rng,
) -> (HermitianOperator, HermitianOperator, HermitianOperator, HermitianOperator) {
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    while xs.len() < n {
        let (a, b): (f64, f64) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let r = a.hypot(b);
        if (1.0..=3.0).contains(&r) {
            xs.push(a);
            ys.push(b);
        }
    }
    let h_scale = 10f64.powf(rng.random_range(-2.0..0.0));
    let h = random_hermitian(n, h_scale, rng);
    let h0_scale = h_scale * 10f64.powf(rng.random_range(-8.0..-1.0));
    let h0 = random_hermitian(n, h0_scale, rng);
    (
        HermitianOperator::diagonal(&xs),
        HermitianOperator::diagonal(&ys),
        h,
        h0,
    )
}

fn random_hermitian(n: usize, scale: f64, rng: &mut ChaCha8Rng) -> HermitianOperator {
    let a = Mat::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let m = Mat::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)].conj()) * (0.5 * scale));
    HermitianOperator::from_dense(m).expect("finite")
}

/// Runs `trials` random certificates of dimension `n`.
pub fn lemma_trials(trials: usize, n: usize, seed: u64) -> Result<Vec<LemmaCertificate>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials)
        .map(|_| {
            let (x, y, h, h0) = random_lemma_instance(n, &mut rng);
            perturbation_bound_check(&x, &y, &h, &h0)
        })
        .collect()
}
