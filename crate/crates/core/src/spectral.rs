//! Dense Hermitian eigendecomposition, Fermi projection and compression of
//! observables onto the occupied subspace.

use std::io::Write;

use faer::{Mat, MatRef, Side};

use crate::error::{Error, Result};
use crate::operator::{HermitianOperator, C64};

/// Eigenvalues in ascending order with matching orthonormal columns.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: Mat<C64>,
}

pub fn diagonalize(h: &HermitianOperator) -> Result<EigenDecomposition> {
    diagonalize_dense(h.to_dense().as_ref())
}

pub(crate) fn diagonalize_dense(m: MatRef<'_, C64>) -> Result<EigenDecomposition> {
    check_finite(m)?;
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let values = (0..m.nrows()).map(|i| evd.S()[i].re).collect();
    Ok(EigenDecomposition {
        values,
        vectors: evd.U().to_owned(),
    })
}

/// Eigenvalues only, ascending.
pub fn eigenvalues(h: &HermitianOperator) -> Result<Vec<f64>> {
    hermitian_eigenvalues(h.to_dense().as_ref())
}

pub(crate) fn hermitian_eigenvalues(m: MatRef<'_, C64>) -> Result<Vec<f64>> {
    check_finite(m)?;
    m.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))
}

fn check_finite(m: MatRef<'_, C64>) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::NonFinite);
            }
        }
    }
    Ok(())
}

/// Occupied states below a Fermi level.
#[derive(Clone, Debug)]
pub struct FermiData {
    pub fermi_level: f64,
    /// Number of occupied states.
    pub occupied: usize,
    /// `n × m` partial isometry whose columns span the occupied subspace.
    pub w: Mat<C64>,
}

impl FermiData {
    pub fn dim(&self) -> usize {
        self.w.nrows()
    }

    /// True when no state or every state is occupied; index routines
    /// return 0 in that case.
    pub fn is_degenerate(&self) -> bool {
        self.occupied == 0 || self.occupied == self.dim()
    }
}

/// Selects eigenvectors with `λ < E_F` (strict, so a level sitting exactly at
/// `E_F` is empty).
pub fn fermi_basis(eig: &EigenDecomposition, fermi_level: f64) -> FermiData {
    let m = occupied_count(&eig.values, fermi_level);
    let w = eig.vectors.as_ref().subcols(0, m).to_owned();
    FermiData {
        fermi_level,
        occupied: m,
        w,
    }
}

pub fn occupied_count(sorted_values: &[f64], fermi_level: f64) -> usize {
    sorted_values.partition_point(|&v| v < fermi_level)
}

/// Anything that can act on the columns of `W`.
pub trait Observable {
    fn dim(&self) -> usize;
    fn apply_cols(&self, w: MatRef<'_, C64>) -> Result<Mat<C64>>;
}

impl Observable for HermitianOperator {
    fn dim(&self) -> usize {
        HermitianOperator::dim(self)
    }

    fn apply_cols(&self, w: MatRef<'_, C64>) -> Result<Mat<C64>> {
        self.apply_mat(w)
    }
}

/// A diagonal (typically unitary) operator given by its diagonal.
#[derive(Clone, Debug)]
pub struct DiagonalOperator<'a>(pub &'a [C64]);

impl Observable for DiagonalOperator<'_> {
    fn dim(&self) -> usize {
        self.0.len()
    }

    fn apply_cols(&self, w: MatRef<'_, C64>) -> Result<Mat<C64>> {
        if w.nrows() != self.0.len() {
            return Err(Error::DimensionMismatch {
                expected: self.0.len(),
                got: w.nrows(),
            });
        }
        Ok(Mat::from_fn(w.nrows(), w.ncols(), |i, j| self.0[i] * w[(i, j)]))
    }
}

impl Observable for Mat<C64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply_cols(&self, w: MatRef<'_, C64>) -> Result<Mat<C64>> {
        if w.nrows() != self.ncols() {
            return Err(Error::DimensionMismatch {
                expected: self.ncols(),
                got: w.nrows(),
            });
        }
        Ok(self * w)
    }
}

/// `W† Op W`, with no unitarization.
pub fn compress<O: Observable + ?Sized>(fermi: &FermiData, op: &O) -> Result<Mat<C64>> {
    compress_cols(fermi.w.as_ref(), op)
}

pub(crate) fn compress_cols<O: Observable + ?Sized>(w: MatRef<'_, C64>, op: &O) -> Result<Mat<C64>> {
    if op.dim() != w.nrows() {
        return Err(Error::DimensionMismatch {
            expected: w.nrows(),
            got: op.dim(),
        });
    }
    let ow = op.apply_cols(w)?;
    Ok(w.adjoint() * &ow)
}

/// Fermi projector `P = W W†` as a dense operator.
pub fn projector(fermi: &FermiData) -> HermitianOperator {
    let p = &fermi.w * fermi.w.adjoint();
    HermitianOperator::from_dense(p).expect("finite square projector")
}

/// Largest absolute entry of `A - I`.
pub fn identity_defect(a: MatRef<'_, C64>) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((a[(i, j)] - C64::new(target, 0.0)).norm());
        }
    }
    worst
}

/// Writes `index,eigenvalue` rows.
pub fn write_eigenvalues_csv<W: Write>(values: &[f64], mut w: W) -> Result<()> {
    writeln!(w, "index,eigenvalue")?;
    for (i, v) in values.iter().enumerate() {
        writeln!(w, "{i},{v}")?;
    }
    Ok(())
}
