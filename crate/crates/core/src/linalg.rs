//! Small dense helpers shared by the geometry modules.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub fn commutator(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a * b - b * a
}

/// Row-major flattening of a square matrix.
pub fn flatten(m: &DMatrix<f64>) -> DVector<f64> {
    let (r, c) = m.shape();
    DVector::from_iterator(r * c, (0..r).flat_map(|i| (0..c).map(move |j| m[(i, j)])))
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Largest `|m_ij - m_ji|`, relative to the largest entry.
pub fn symmetry_defect(m: &DMatrix<f64>) -> f64 {
    let scale = max_abs(m);
    if scale == 0.0 {
        return 0.0;
    }
    let d = (m - m.transpose())
        .iter()
        .fold(0.0_f64, |acc, x| acc.max(x.abs()));
    d / scale
}

/// Smallest and largest eigenvalue of a symmetric matrix.
pub fn eigen_bounds(m: &DMatrix<f64>) -> (f64, f64) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigenvalues();
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let max = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (min, max)
}

/// Validates a symmetric positive-definite matrix (symmetric within 1e-12).
pub fn check_spd(a: &DMatrix<f64>) -> Result<()> {
    if !a.is_square() {
        return Err(Error::NotSpd(format!(
            "matrix is {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let asym = (a - a.transpose())
        .iter()
        .fold(0.0_f64, |acc, x| acc.max(x.abs()));
    if asym > 1e-12 {
        return Err(Error::NotSpd(format!("asymmetry {asym:e}")));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::NotSpd("non-finite entry".into()));
    }
    let (min, _) = eigen_bounds(a);
    if min <= 0.0 {
        return Err(Error::NotSpd(format!("smallest eigenvalue {min:e}")));
    }
    Ok(())
}

pub fn rank(m: &DMatrix<f64>, tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    m.clone().svd(false, false).rank(tol)
}

/// Least-squares coordinates with respect to a fixed column basis.
#[derive(Debug, Clone)]
pub struct SpanSolver {
    basis: DMatrix<f64>,
    pinv: DMatrix<f64>,
}

impl SpanSolver {
    /// `basis` holds one spanning vector per column; columns must be independent.
    pub fn new(basis: DMatrix<f64>) -> Result<Self> {
        let k = basis.ncols();
        if k == 0 {
            return Ok(Self {
                pinv: DMatrix::zeros(0, basis.nrows()),
                basis,
            });
        }
        if rank(&basis, 1e-10) < k {
            return Err(Error::InvalidArgument(
                "basis vectors are linearly dependent".into(),
            ));
        }
        // (B^T B)^-1 B^T through LU keeps exact coordinates exact for the
        // orthogonal integer bases of the catalog.
        let gram = basis.transpose() * &basis;
        let inv = gram
            .lu()
            .try_inverse()
            .ok_or_else(|| Error::Internal("singular Gram matrix".into()))?;
        let pinv = inv * basis.transpose();
        Ok(Self { basis, pinv })
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Returns `(coords, residual)` where residual is `|basis * coords - x|`.
    pub fn solve(&self, x: &DVector<f64>) -> (DVector<f64>, f64) {
        let c = &self.pinv * x;
        let r = (&self.basis * &c - x).norm();
        (c, r)
    }
}
