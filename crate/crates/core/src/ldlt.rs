//! Symmetric-indefinite LDLᴴ factorization with Bunch–Kaufman pivoting on a
//! variable-band (envelope) layout, and the matrix signature it yields
//! through Sylvester's law of inertia.
//!
//! Column `j` of the active matrix is stored from the diagonal down to row
//! `last[j]`, with `last` kept nondecreasing. Elimination then never fills
//! outside the envelope. A symmetric interchange of rows `p < q` widens
//! columns `p..=q` to `last[q]`.
//!
//! The factor is kept in LAPACK product form `A = P₁L₁P₂L₂⋯ D ⋯`: interchanges
//! are applied to the trailing matrix only, and solves replay them in order.

use std::collections::VecDeque;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{HermitianOperator, C64};

/// Bunch–Kaufman growth constant `(1 + √17) / 8`.
const ALPHA: f64 = 0.640_388_203_202_208_4;

/// Pivots smaller than this times `‖M‖∞` set the singular flag.
pub const SINGULAR_RELATIVE_TOLERANCE: f64 = 1e-12;

/// Real or complex scalar the factorization runs over.
pub trait Scalar:
    Copy
    + Default
    + Send
    + Sync
    + PartialEq
    + std::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
{
    fn conj(self) -> Self;
    fn modulus(self) -> f64;
    fn modulus_sqr(self) -> f64;
    fn real(self) -> f64;
    fn from_real(x: f64) -> Self;
}

impl Scalar for f64 {
    fn conj(self) -> Self {
        self
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn modulus_sqr(self) -> f64 {
        self * self
    }
    fn real(self) -> f64 {
        self
    }
    fn from_real(x: f64) -> Self {
        x
    }
}

impl Scalar for C64 {
    fn conj(self) -> Self {
        C64::conj(&self)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn modulus_sqr(self) -> f64 {
        self.norm_sqr()
    }
    fn real(self) -> f64 {
        self.re
    }
    fn from_real(x: f64) -> Self {
        C64::new(x, 0.0)
    }
}

/// Outcome of a signature computation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignatureResult {
    pub signature: i64,
    /// Smallest `|pivot|` or smallest 2×2 block eigenvalue magnitude seen.
    pub min_block_magnitude: f64,
    pub singular_flag: bool,
}

/// Symmetric matrix in envelope layout, lower triangle, ready to factor.
#[derive(Clone, Debug)]
pub struct EnvelopeMatrix<T> {
    n: usize,
    cols: Vec<Vec<T>>,
    last: Vec<usize>,
    norm: f64,
}

impl<T: Scalar> EnvelopeMatrix<T> {
    /// Builds from lower-triangle entries `(row, col, value)` with
    /// `row >= col`, already in the target ordering. Duplicates are summed
    /// and upper-triangle entries are ignored. `norm` is the `∞`-norm used
    /// for the singularity threshold.
    pub fn from_lower<I>(n: usize, entries: I, norm: f64) -> Self
    where
        I: IntoIterator<Item = (usize, usize, T)> + Clone,
    {
        let mut last: Vec<usize> = (0..n).collect();
        for (r, c, _) in entries.clone() {
            if r >= c && r > last[c] {
                last[c] = r;
            }
        }
        for j in 1..n {
            if last[j] < last[j - 1] {
                last[j] = last[j - 1];
            }
        }
        let mut cols: Vec<Vec<T>> = (0..n).map(|j| vec![T::default(); last[j] - j + 1]).collect();
        for (r, c, v) in entries {
            if r >= c {
                cols[c][r - c] += v;
            }
        }
        Self { n, cols, last, norm }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored entries, `Σ (last[j] - j + 1)`.
    pub fn profile(&self) -> usize {
        self.cols.iter().map(Vec::len).sum()
    }

    fn widen(&mut self, from: usize, to: usize, ext: usize) {
        for j in from..=to {
            if self.last[j] < ext {
                self.cols[j].resize(ext - j + 1, T::default());
                self.last[j] = ext;
            }
        }
    }

    /// Symmetric interchange of rows and columns `p < q` of the trailing
    /// matrix starting at `from`.
    fn swap(&mut self, from: usize, p: usize, q: usize) {
        debug_assert!(from <= p && p < q);
        let ext = self.last[q];
        self.widen(from, q, ext);
        for j in from..p {
            self.cols[j].swap(p - j, q - j);
        }
        let (left, right) = self.cols.split_at_mut(q);
        let (cp, cq) = (&mut left[p], &mut right[0]);
        std::mem::swap(&mut cp[0], &mut cq[0]);
        for i in q + 1..=ext {
            std::mem::swap(&mut cp[i - p], &mut cq[i - q]);
        }
        for j in p + 1..q {
            let tmp = self.cols[p][j - p];
            self.cols[p][j - p] = self.cols[j][q - j].conj();
            self.cols[j][q - j] = tmp.conj();
        }
        self.cols[p][q - p] = self.cols[p][q - p].conj();
    }

    /// `|A[i, j]|` for `i != j` in the trailing matrix (entries inside the
    /// envelope).
    fn offdiag_row_max(&self, from: usize, r: usize) -> (f64, usize) {
        let mut best = 0.0;
        let mut arg = r;
        for j in from..r {
            if r <= self.last[j] {
                let v = self.cols[j][r - j].modulus();
                if v > best {
                    best = v;
                    arg = j;
                }
            }
        }
        for i in r + 1..=self.last[r] {
            let v = self.cols[r][i - r].modulus();
            if v > best {
                best = v;
                arg = i;
            }
        }
        (best, arg)
    }
}

#[derive(Clone, Copy, Debug)]
enum Pivot {
    One { d: f64, swap: usize },
    Two { a: f64, c: f64, swap: usize },
}

/// `P L D Lᴴ Pᵀ` factor of an [`EnvelopeMatrix`].
///
/// When built with `keep_factor == false` the `L` columns are dropped as soon
/// as they are used, leaving only `D` and its inertia.
#[derive(Clone, Debug)]
pub struct LdlFactor<T> {
    n: usize,
    /// `L` columns below the diagonal, or empty if not kept.
    l: Vec<Vec<T>>,
    /// Pivot kind at each block's leading column; `None` for the second
    /// column of a 2×2 block.
    pivots: Vec<Option<Pivot>>,
    /// Off-diagonal entry `D[k+1, k]` of 2×2 blocks.
    offdiag: Vec<T>,
    pub positive: usize,
    pub negative: usize,
    pub singular_flag: bool,
    pub min_block_magnitude: f64,
    /// Number of 2×2 blocks.
    pub two_by_two: usize,
}

impl<T: Scalar> LdlFactor<T> {
    pub fn factor(mut a: EnvelopeMatrix<T>, keep_factor: bool) -> Self {
        let n = a.n;
        let tol = SINGULAR_RELATIVE_TOLERANCE * a.norm;
        let mut out = LdlFactor {
            n,
            l: Vec::with_capacity(if keep_factor { n } else { 0 }),
            pivots: vec![None; n],
            offdiag: vec![T::default(); n],
            positive: 0,
            negative: 0,
            singular_flag: false,
            min_block_magnitude: f64::INFINITY,
            two_by_two: 0,
        };
        let mut k = 0;
        while k < n {
            let absakk = a.cols[k][0].real().abs();
            let (colmax, imax) = {
                let mut best = 0.0;
                let mut arg = k;
                for (off, v) in a.cols[k].iter().enumerate().skip(1) {
                    let m = v.modulus();
                    if m > best {
                        best = m;
                        arg = k + off;
                    }
                }
                (best, arg)
            };

            let mut two = false;
            let mut kp = k;
            if absakk.max(colmax) > 0.0 && absakk < ALPHA * colmax {
                let (rowmax, _) = a.offdiag_row_max(k, imax);
                if absakk * rowmax >= ALPHA * colmax * colmax {
                    kp = k;
                } else if a.cols[imax][0].real().abs() >= ALPHA * rowmax {
                    kp = imax;
                } else {
                    kp = imax;
                    two = true;
                }
            }

            let kk = if two { k + 1 } else { k };
            if kp != kk {
                a.swap(k, kk, kp);
            }

            if two {
                out.eliminate_two(&mut a, k, kp, tol, keep_factor);
                k += 2;
            } else {
                out.eliminate_one(&mut a, k, kp, tol, keep_factor);
                k += 1;
            }
        }
        if n == 0 {
            out.min_block_magnitude = 0.0;
        }
        out
    }

    fn eliminate_one(&mut self, a: &mut EnvelopeMatrix<T>, k: usize, kp: usize, tol: f64, keep: bool) {
        let mut col = std::mem::take(&mut a.cols[k]);
        let d = col[0].real();
        self.min_block_magnitude = self.min_block_magnitude.min(d.abs());
        if d.abs() <= tol {
            self.singular_flag = true;
        }
        // Zero counts as positive.
        if d >= 0.0 {
            self.positive += 1;
        } else {
            self.negative += 1;
        }
        let last = a.last[k];
        if d != 0.0 {
            let inv = 1.0 / d;
            for j in k + 1..=last {
                let coef = col[j - k].conj() * T::from_real(inv);
                if coef == T::default() {
                    continue;
                }
                let cj = &mut a.cols[j][..=last - j];
                for (x, &w) in cj.iter_mut().zip(&col[j - k..=last - k]) {
                    *x -= w * coef;
                }
            }
            for v in col.iter_mut().skip(1) {
                *v = *v * T::from_real(inv);
            }
        } else {
            // The column is exactly zero below the diagonal.
            for v in col.iter_mut().skip(1) {
                *v = T::default();
            }
        }
        self.pivots[k] = Some(Pivot::One { d, swap: kp });
        if keep {
            col[0] = T::default();
            self.l.push(col);
        }
    }

    fn eliminate_two(&mut self, a: &mut EnvelopeMatrix<T>, k: usize, kp: usize, tol: f64, keep: bool) {
        let mut c0 = std::mem::take(&mut a.cols[k]);
        let mut c1 = std::mem::take(&mut a.cols[k + 1]);
        let av = c0[0].real();
        let bv = c0[1];
        let cv = c1[0].real();
        let det = av * cv - bv.modulus_sqr();
        let mid = 0.5 * (av + cv);
        let rad = (0.25 * (av - cv) * (av - cv) + bv.modulus_sqr()).sqrt();
        for mu in [mid + rad, mid - rad] {
            self.min_block_magnitude = self.min_block_magnitude.min(mu.abs());
            if mu.abs() <= tol {
                self.singular_flag = true;
            }
            if mu >= 0.0 {
                self.positive += 1;
            } else {
                self.negative += 1;
            }
        }
        self.two_by_two += 1;
        let last = a.last[k + 1];
        // Column k may end before column k + 1.
        c0.resize(last - k + 1, T::default());
        if det != 0.0 {
            let inv = 1.0 / det;
            // Rows of L for this block: [l0, l1] = [w0, w1] D⁻¹.
            let mut l0 = vec![T::default(); last.saturating_sub(k + 1)];
            let mut l1 = vec![T::default(); last.saturating_sub(k + 1)];
            for i in k + 2..=last {
                let w0 = c0[i - k];
                let w1 = c1[i - k - 1];
                l0[i - k - 2] = (w0 * T::from_real(cv) - w1 * bv) * T::from_real(inv);
                l1[i - k - 2] = (w1 * T::from_real(av) - w0 * bv.conj()) * T::from_real(inv);
            }
            for j in k + 2..=last {
                let w0j = c0[j - k].conj();
                let w1j = c1[j - k - 1].conj();
                if w0j == T::default() && w1j == T::default() {
                    continue;
                }
                let cj = &mut a.cols[j][..=last - j];
                let (l0j, l1j) = (&l0[j - k - 2..], &l1[j - k - 2..]);
                for ((x, &u0), &u1) in cj.iter_mut().zip(l0j).zip(l1j) {
                    *x -= u0 * w0j + u1 * w1j;
                }
            }
            for i in k + 2..=last {
                c0[i - k] = l0[i - k - 2];
                c1[i - k - 1] = l1[i - k - 2];
            }
        } else {
            self.singular_flag = true;
            for v in c0.iter_mut().skip(2) {
                *v = T::default();
            }
            for v in c1.iter_mut().skip(1) {
                *v = T::default();
            }
        }
        self.pivots[k] = Some(Pivot::Two {
            a: av,
            c: cv,
            swap: kp,
        });
        self.offdiag[k] = bv;
        if keep {
            c0[0] = T::default();
            c0[1] = T::default();
            c1[0] = T::default();
            self.l.push(c0);
            self.l.push(c1);
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn signature(&self) -> i64 {
        self.positive as i64 - self.negative as i64
    }

    pub fn has_factor(&self) -> bool {
        self.l.len() == self.n
    }

    /// Solves `A x = b` in place (in the ordering the matrix was built in).
    /// Requires the factor to be kept and nonsingular.
    pub fn solve_in_place(&self, b: &mut [T]) {
        assert!(self.has_factor(), "factor was not kept");
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let mut k = 0;
        while k < n {
            match self.pivots[k].expect("leading pivot") {
                Pivot::One { swap, .. } => {
                    b.swap(k, swap);
                    let col = &self.l[k];
                    let bk = b[k];
                    for (off, &l) in col.iter().enumerate().skip(1) {
                        b[k + off] -= l * bk;
                    }
                    k += 1;
                }
                Pivot::Two { swap, .. } => {
                    b.swap(k + 1, swap);
                    let (c0, c1) = (&self.l[k], &self.l[k + 1]);
                    let (b0, b1) = (b[k], b[k + 1]);
                    for off in 2..c0.len() {
                        b[k + off] -= c0[off] * b0 + c1[off - 1] * b1;
                    }
                    k += 2;
                }
            }
        }
        let mut k = 0;
        while k < n {
            match self.pivots[k].expect("leading pivot") {
                Pivot::One { d, .. } => {
                    b[k] = b[k] * T::from_real(1.0 / d);
                    k += 1;
                }
                Pivot::Two { a, c, .. } => {
                    let bv = self.offdiag[k];
                    let det = a * c - bv.modulus_sqr();
                    let (x0, x1) = (b[k], b[k + 1]);
                    b[k] = (x0 * T::from_real(c) - x1 * bv.conj()) * T::from_real(1.0 / det);
                    b[k + 1] = (x1 * T::from_real(a) - x0 * bv) * T::from_real(1.0 / det);
                    k += 2;
                }
            }
        }
        let mut starts = Vec::with_capacity(n);
        let mut k = 0;
        while k < n {
            starts.push(k);
            k += match self.pivots[k] {
                Some(Pivot::Two { .. }) => 2,
                _ => 1,
            };
        }
        for &k in starts.iter().rev() {
            match self.pivots[k].expect("leading pivot") {
                Pivot::One { swap, .. } => {
                    let col = &self.l[k];
                    let mut acc = T::default();
                    for (off, &l) in col.iter().enumerate().skip(1) {
                        acc += l.conj() * b[k + off];
                    }
                    b[k] -= acc;
                    b.swap(k, swap);
                }
                Pivot::Two { swap, .. } => {
                    let (c0, c1) = (&self.l[k], &self.l[k + 1]);
                    let mut acc0 = T::default();
                    let mut acc1 = T::default();
                    for off in 2..c0.len() {
                        let x = b[k + off];
                        acc0 += c0[off].conj() * x;
                        acc1 += c1[off - 1].conj() * x;
                    }
                    b[k] -= acc0;
                    b[k + 1] -= acc1;
                    b.swap(k + 1, swap);
                }
            }
        }
    }
}

/// Symmetric reordering of the rows and columns: `perm[new] = old`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ordering {
    pub perm: Vec<usize>,
}

impl Ordering {
    pub fn natural(n: usize) -> Self {
        Self { perm: (0..n).collect() }
    }

    /// Pairs index `i` with `n/2 + i`, placing them next to each other.
    /// Suited to 2×2 block operators whose blocks share a sparsity pattern.
    pub fn interleaved(n: usize) -> Self {
        assert!(n.is_multiple_of(2));
        let h = n / 2;
        Self {
            perm: (0..n).map(|k| if k % 2 == 0 { k / 2 } else { h + k / 2 }).collect(),
        }
    }

    /// Reverse Cuthill–McKee ordering of the sparsity graph.
    pub fn reverse_cuthill_mckee(m: &HermitianOperator) -> Self {
        let n = m.dim();
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (r, c, _) in m.triplets() {
            if r != c {
                adj[r].push(c);
                adj[c].push(r);
            }
        }
        for a in &mut adj {
            a.sort_unstable();
            a.dedup();
        }
        let mut visited = vec![false; n];
        let mut order = Vec::with_capacity(n);
        let mut by_degree: Vec<usize> = (0..n).collect();
        by_degree.sort_by_key(|&v| (adj[v].len(), v));
        for &seed in &by_degree {
            if visited[seed] {
                continue;
            }
            let start = pseudo_peripheral(&adj, seed);
            let mut queue = VecDeque::from([start]);
            visited[start] = true;
            while let Some(v) = queue.pop_front() {
                order.push(v);
                let mut next: Vec<usize> = adj[v].iter().copied().filter(|&u| !visited[u]).collect();
                next.sort_by_key(|&u| (adj[u].len(), u));
                for u in next {
                    visited[u] = true;
                    queue.push_back(u);
                }
            }
        }
        order.reverse();
        Self { perm: order }
    }

    pub fn inverse(&self) -> Vec<usize> {
        let mut inv = vec![0; self.perm.len()];
        for (new, &old) in self.perm.iter().enumerate() {
            inv[old] = new;
        }
        inv
    }

    /// Envelope size `Σ (last[j] - j + 1)` of `m` in this ordering.
    pub fn profile(&self, m: &HermitianOperator) -> usize {
        let inv = self.inverse();
        let n = m.dim();
        let mut last: Vec<usize> = (0..n).collect();
        for (r, c, _) in m.triplets() {
            let (r, c) = (inv[r], inv[c]);
            let (r, c) = if r >= c { (r, c) } else { (c, r) };
            last[c] = last[c].max(r);
        }
        let mut total = 0;
        let mut run = 0;
        for (j, &l) in last.iter().enumerate() {
            run = run.max(l);
            total += run - j + 1;
        }
        total
    }

    /// Whichever of the candidates has the smallest profile.
    pub fn best_of(m: &HermitianOperator, candidates: Vec<Ordering>) -> Self {
        candidates
            .into_iter()
            .min_by_key(|o| o.profile(m))
            .expect("at least one candidate")
    }
}

fn bfs_levels(adj: &[Vec<usize>], start: usize) -> (usize, Vec<usize>) {
    let mut depth = vec![usize::MAX; adj.len()];
    depth[start] = 0;
    let mut queue = VecDeque::from([start]);
    let mut last_level = vec![start];
    let mut height = 0;
    while let Some(v) = queue.pop_front() {
        for &u in &adj[v] {
            if depth[u] == usize::MAX {
                depth[u] = depth[v] + 1;
                if depth[u] > height {
                    height = depth[u];
                    last_level.clear();
                }
                if depth[u] == height {
                    last_level.push(u);
                }
                queue.push_back(u);
            }
        }
    }
    (height, last_level)
}

fn pseudo_peripheral(adj: &[Vec<usize>], seed: usize) -> usize {
    let mut v = seed;
    let (mut height, mut level) = bfs_levels(adj, v);
    loop {
        let Some(&u) = level.iter().min_by_key(|&&u| (adj[u].len(), u)) else {
            return v;
        };
        let (h, l) = bfs_levels(adj, u);
        if h <= height {
            return v;
        }
        v = u;
        height = h;
        level = l;
    }
}

/// Lower-triangle entries of `m` in the new ordering.
fn permuted_lower(m: &HermitianOperator, ordering: &Ordering) -> Vec<(usize, usize, C64)> {
    let inv = ordering.inverse();
    m.triplets()
        .into_iter()
        .filter_map(|(r, c, v)| {
            let (nr, nc) = (inv[r], inv[c]);
            (nr >= nc).then_some((nr, nc, v))
        })
        .collect()
}

/// Complex factorization of `m` in the given ordering.
pub fn factor_complex(m: &HermitianOperator, ordering: &Ordering, keep_factor: bool) -> LdlFactor<C64> {
    let entries = permuted_lower(m, ordering);
    let a = EnvelopeMatrix::from_lower(m.dim(), entries, m.inf_norm());
    LdlFactor::factor(a, keep_factor)
}

fn check_hermitian(m: &HermitianOperator) -> Result<()> {
    let scale = m.inf_norm().max(f64::MIN_POSITIVE);
    if m.hermitian_defect() > 1e-12 * scale {
        return Err(Error::NotHermitian);
    }
    Ok(())
}

/// Signature of a Hermitian matrix through a complex LDLᴴ factorization.
/// The ordering is the smaller-profile one of natural and reverse
/// Cuthill–McKee.
pub fn signature(m: &HermitianOperator) -> Result<SignatureResult> {
    check_hermitian(m)?;
    let ordering = Ordering::best_of(
        m,
        vec![Ordering::natural(m.dim()), Ordering::reverse_cuthill_mckee(m)],
    );
    Ok(signature_with_ordering(m, &ordering))
}

pub fn signature_with_ordering(m: &HermitianOperator, ordering: &Ordering) -> SignatureResult {
    let f = factor_complex(m, ordering, false);
    SignatureResult {
        signature: f.signature(),
        min_block_magnitude: f.min_block_magnitude,
        singular_flag: f.singular_flag,
    }
}

/// Signature through a real symmetric factorization of the doubled matrix
/// `[[Re M, Im M], [-Im M, Re M]]`, whose inertia is twice that of `M`.
/// Each real/imaginary pair of indices is kept adjacent.
pub fn signature_real_embedding(m: &HermitianOperator) -> Result<SignatureResult> {
    check_hermitian(m)?;
    let ordering = Ordering::best_of(
        m,
        vec![Ordering::natural(m.dim()), Ordering::reverse_cuthill_mckee(m)],
    );
    Ok(signature_real_embedding_with_ordering(m, &ordering))
}

pub fn signature_real_embedding_with_ordering(m: &HermitianOperator, ordering: &Ordering) -> SignatureResult {
    let n = m.dim();
    let mut entries = Vec::with_capacity(2 * m.nnz());
    for (r, c, v) in permuted_lower(m, ordering) {
        // Block (a, b) of the doubled matrix lives at (2r + a, 2c + b).
        entries.push((2 * r, 2 * c, v.re));
        entries.push((2 * r + 1, 2 * c + 1, v.re));
        entries.push((2 * r, 2 * c + 1, v.im));
        entries.push((2 * r + 1, 2 * c, -v.im));
    }
    let entries: Vec<(usize, usize, f64)> = entries.into_iter().filter(|&(r, c, _)| r >= c).collect();
    let a = EnvelopeMatrix::from_lower(2 * n, entries, m.inf_norm());
    let f = LdlFactor::factor(a, false);
    SignatureResult {
        signature: f.signature() / 2,
        min_block_magnitude: f.min_block_magnitude,
        singular_flag: f.singular_flag,
    }
}
