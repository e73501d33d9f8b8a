//! Square complex Hermitian operators in dense or sparse-triplet layout.
//!
//! The sparse layout keeps both triangles, sorted by `(row, col)`, with a row
//! pointer so matrix-vector products stream through memory once. The text
//! exchange format stores the lower triangle only:
//!
//! ```text
//! n nnz
//! row col re im
//! ...
//! ```
//!
//! with 0-based indices and `row >= col` on every line.

use std::io::{BufRead, Write};

use faer::{Mat, MatRef};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

#[derive(Clone, Debug)]
enum Repr {
    Dense(Mat<C64>),
    Sparse {
        entries: Vec<(usize, usize, C64)>,
        row_ptr: Vec<usize>,
    },
}

/// A square complex matrix that is Hermitian by construction.
#[derive(Clone, Debug)]
pub struct HermitianOperator {
    n: usize,
    repr: Repr,
}

impl HermitianOperator {
    /// Builds a sparse operator from `(row, col, value)` triplets.
    ///
    /// Duplicate coordinates are summed. Explicit zeros are kept so block
    /// structure survives. Hermiticity is not checked here; see
    /// [`HermitianOperator::hermitian_defect`].
    pub fn from_triplets<I>(n: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, C64)>,
    {
        let mut entries: Vec<(usize, usize, C64)> = Vec::new();
        for (r, c, v) in triplets {
            if r >= n || c >= n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: r.max(c) + 1,
                });
            }
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::NonFinite);
            }
            entries.push((r, c, v));
        }
        entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(usize, usize, C64)> = Vec::with_capacity(entries.len());
        for (r, c, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        let mut row_ptr = vec![0usize; n + 1];
        for &(r, _, _) in &merged {
            row_ptr[r + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self {
            n,
            repr: Repr::Sparse {
                entries: merged,
                row_ptr,
            },
        })
    }

    /// Real diagonal operator.
    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        let entries: Vec<_> = values
            .iter()
            .enumerate()
            .map(|(i, &v)| (i, i, C64::new(v, 0.0)))
            .collect();
        let row_ptr = (0..=n).collect();
        Self {
            n,
            repr: Repr::Sparse { entries, row_ptr },
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            repr: Repr::Sparse {
                entries: Vec::new(),
                row_ptr: vec![0; n + 1],
            },
        }
    }

    /// Wraps a dense matrix. The matrix must be square with finite entries.
    pub fn from_dense(m: Mat<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let v = m[(i, j)];
                if !v.re.is_finite() || !v.im.is_finite() {
                    return Err(Error::NonFinite);
                }
            }
        }
        Ok(Self {
            n: m.nrows(),
            repr: Repr::Dense(m),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.repr, Repr::Sparse { .. })
    }

    /// Number of stored entries (both triangles).
    pub fn nnz(&self) -> usize {
        match &self.repr {
            Repr::Dense(m) => m.nrows() * m.ncols(),
            Repr::Sparse { entries, .. } => entries.len(),
        }
    }

    /// Stored entries as `(row, col, value)`, row-major. Dense operators
    /// report every entry whose value is nonzero.
    pub fn triplets(&self) -> Vec<(usize, usize, C64)> {
        match &self.repr {
            Repr::Sparse { entries, .. } => entries.clone(),
            Repr::Dense(m) => {
                let mut out = Vec::new();
                for i in 0..self.n {
                    for j in 0..self.n {
                        let v = m[(i, j)];
                        if v != C64::new(0.0, 0.0) {
                            out.push((i, j, v));
                        }
                    }
                }
                out
            }
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        match &self.repr {
            Repr::Dense(m) => m[(i, j)],
            Repr::Sparse { entries, row_ptr } => {
                let row = &entries[row_ptr[i]..row_ptr[i + 1]];
                row.binary_search_by_key(&j, |&(_, c, _)| c)
                    .map(|k| row[k].2)
                    .unwrap_or_default()
            }
        }
    }

    pub fn to_dense(&self) -> Mat<C64> {
        match &self.repr {
            Repr::Dense(m) => m.clone(),
            Repr::Sparse { entries, .. } => {
                let mut m = Mat::<C64>::zeros(self.n, self.n);
                for &(r, c, v) in entries {
                    m[(r, c)] += v;
                }
                m
            }
        }
    }

    /// Largest `|a_ij - conj(a_ji)|` over all entries.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        match &self.repr {
            Repr::Dense(m) => {
                for i in 0..self.n {
                    for j in 0..=i {
                        worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
                    }
                }
            }
            Repr::Sparse { entries, .. } => {
                for &(r, c, v) in entries {
                    worst = worst.max((v - self.entry(c, r).conj()).norm());
                }
            }
        }
        worst
    }

    /// Bit-exact conjugate symmetry.
    pub fn is_exactly_hermitian(&self) -> bool {
        match &self.repr {
            Repr::Dense(m) => (0..self.n).all(|i| (0..=i).all(|j| m[(i, j)] == m[(j, i)].conj())),
            Repr::Sparse { entries, .. } => entries
                .iter()
                .all(|&(r, c, v)| v == self.entry(c, r).conj()),
        }
    }

    /// `Some(real diagonal)` when every off-diagonal entry is zero.
    pub fn diagonal_values(&self) -> Option<Vec<f64>> {
        let mut d = vec![0.0; self.n];
        match &self.repr {
            Repr::Dense(m) => {
                for i in 0..self.n {
                    for j in 0..self.n {
                        let v = m[(i, j)];
                        if i == j {
                            d[i] = v.re;
                        } else if v != C64::default() {
                            return None;
                        }
                    }
                }
            }
            Repr::Sparse { entries, .. } => {
                for &(r, c, v) in entries {
                    if r == c {
                        d[r] = v.re;
                    } else if v != C64::default() {
                        return None;
                    }
                }
            }
        }
        Some(d)
    }

    pub fn is_diagonal(&self) -> bool {
        self.diagonal_values().is_some()
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        match &self.repr {
            Repr::Dense(m) => {
                for (i, yi) in y.iter_mut().enumerate() {
                    let mut acc = C64::default();
                    for (j, xj) in x.iter().enumerate() {
                        acc += m[(i, j)] * xj;
                    }
                    *yi = acc;
                }
            }
            Repr::Sparse { entries, row_ptr } => {
                for (i, yi) in y.iter_mut().enumerate() {
                    let mut acc = C64::default();
                    for &(_, c, v) in &entries[row_ptr[i]..row_ptr[i + 1]] {
                        acc += v * x[c];
                    }
                    *yi = acc;
                }
            }
        }
    }

    /// `A * B` for a dense block of columns `B`.
    pub fn apply_mat(&self, b: MatRef<'_, C64>) -> Result<Mat<C64>> {
        if b.nrows() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: b.nrows(),
            });
        }
        match &self.repr {
            Repr::Dense(m) => Ok(m * b),
            Repr::Sparse { entries, row_ptr } => {
                let mut out = Mat::<C64>::zeros(self.n, b.ncols());
                for j in 0..b.ncols() {
                    for i in 0..self.n {
                        let mut acc = C64::default();
                        for &(_, c, v) in &entries[row_ptr[i]..row_ptr[i + 1]] {
                            acc += v * b[(c, j)];
                        }
                        out[(i, j)] = acc;
                    }
                }
                Ok(out)
            }
        }
    }

    /// Entrywise scaling by a real factor (keeps Hermiticity).
    pub fn scaled(&self, s: f64) -> Self {
        match &self.repr {
            Repr::Dense(m) => Self {
                n: self.n,
                repr: Repr::Dense(Mat::from_fn(self.n, self.n, |i, j| m[(i, j)] * s)),
            },
            Repr::Sparse { entries, row_ptr } => Self {
                n: self.n,
                repr: Repr::Sparse {
                    entries: entries.iter().map(|&(r, c, v)| (r, c, v * s)).collect(),
                    row_ptr: row_ptr.clone(),
                },
            },
        }
    }

    /// `self + other`; sparse if both are sparse.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        if self.is_sparse() && other.is_sparse() {
            Self::from_triplets(self.n, self.triplets().into_iter().chain(other.triplets()))
        } else {
            let a = self.to_dense();
            let b = other.to_dense();
            Self::from_dense(Mat::from_fn(self.n, self.n, |i, j| a[(i, j)] + b[(i, j)]))
        }
    }

    /// Maximum absolute row sum, an upper bound on the spectral norm.
    pub fn inf_norm(&self) -> f64 {
        match &self.repr {
            Repr::Dense(m) => (0..self.n)
                .map(|i| (0..self.n).map(|j| m[(i, j)].norm()).sum::<f64>())
                .fold(0.0, f64::max),
            Repr::Sparse { entries, row_ptr } => (0..self.n)
                .map(|i| {
                    entries[row_ptr[i]..row_ptr[i + 1]]
                        .iter()
                        .map(|e| e.2.norm())
                        .sum::<f64>()
                })
                .fold(0.0, f64::max),
        }
    }

    /// Writes the lower triangle in the text triplet format.
    pub fn write_triplets<W: Write>(&self, mut w: W) -> Result<()> {
        let lower: Vec<_> = self
            .triplets()
            .into_iter()
            .filter(|&(r, c, _)| r >= c)
            .collect();
        writeln!(w, "{} {}", self.n, lower.len())?;
        for (r, c, v) in lower {
            writeln!(w, "{} {} {} {}", r, c, v.re, v.im)?;
        }
        Ok(())
    }

    /// Reads the lower-triangle text format and mirrors it into a full
    /// Hermitian sparse operator.
    pub fn read_triplets<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("missing header".into()))??;
        let mut it = header.split_whitespace();
        let n: usize = parse_field(it.next(), "n")?;
        let nnz: usize = parse_field(it.next(), "nnz")?;
        let mut trips = Vec::with_capacity(2 * nnz);
        let mut count = 0usize;
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut f = line.split_whitespace();
            let row: usize = parse_field(f.next(), "row")?;
            let col: usize = parse_field(f.next(), "col")?;
            let re: f64 = parse_field(f.next(), "re")?;
            let im: f64 = parse_field(f.next(), "im")?;
            if row < col {
                return Err(Error::Parse(format!(
                    "entry ({row}, {col}) is above the diagonal"
                )));
            }
            let v = C64::new(re, im);
            trips.push((row, col, v));
            if row != col {
                trips.push((col, row, v.conj()));
            }
            count += 1;
        }
        if count != nnz {
            return Err(Error::Parse(format!(
                "header declares {nnz} entries, found {count}"
            )));
        }
        Self::from_triplets(n, trips)
    }
}

fn parse_field<T: std::str::FromStr>(s: Option<&str>, name: &str) -> Result<T> {
    s.ok_or_else(|| Error::Parse(format!("missing field `{name}`")))?
        .parse()
        .map_err(|_| Error::Parse(format!("bad value for `{name}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn duplicates_are_summed() {
        let op = HermitianOperator::from_triplets(2, [(0, 1, c(1.0, 0.0)), (0, 1, c(0.5, 1.0))])
            .unwrap();
        assert_eq!(op.entry(0, 1), c(1.5, 1.0));
        assert_eq!(op.nnz(), 1);
    }

    #[test]
    fn out_of_range_is_rejected() {
        assert!(HermitianOperator::from_triplets(2, [(2, 0, c(1.0, 0.0))]).is_err());
    }

    #[test]
    fn triplet_text_round_trip() {
        let op = HermitianOperator::from_triplets(
            3,
            [
                (0, 0, c(2.0, 0.0)),
                (1, 0, c(0.25, -1.5)),
                (0, 1, c(0.25, 1.5)),
                (2, 2, c(-1.0, 0.0)),
            ],
        )
        .unwrap();
        let mut buf = Vec::new();
        op.write_triplets(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("3 3\n"));
        let back = HermitianOperator::read_triplets(&buf[..]).unwrap();
        assert_eq!(back.triplets(), op.triplets());
        assert!(back.is_exactly_hermitian());
    }

    #[test]
    fn upper_entries_are_rejected_on_read() {
        let text = "2 1\n0 1 1 0\n";
        assert!(HermitianOperator::read_triplets(text.as_bytes()).is_err());
    }

    #[test]
    fn diagonal_detection() {
        let d = HermitianOperator::diagonal(&[1.0, -2.0]);
        assert_eq!(d.diagonal_values(), Some(vec![1.0, -2.0]));
        let off = HermitianOperator::from_triplets(2, [(0, 1, c(1.0, 0.0)), (1, 0, c(1.0, 0.0))])
            .unwrap();
        assert!(off.diagonal_values().is_none());
    }
}
