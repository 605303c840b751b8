//! Minkowski norms on coordinate space.
//!
//! A Minkowski norm is a nonnegative, positively 1-homogeneous function that
//! is smooth away from the origin and whose fundamental tensor (the Hessian of
//! half its square) is positive-definite at every nonzero direction. Three
//! kinds are supported: Euclidean (Riemannian) norms `sqrt(y^T a y)`, Randers
//! norms `sqrt(y^T a y) + b.y` with `|b|_a < 1`, and custom evaluators.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{check_spd, eigen_bounds, max_abs, symmetry_defect};
use crate::sampling::{self, sharded_reduce};

/// Randers drifts with `|b|_a >= 1 - RANDERS_MARGIN` are rejected.
pub const RANDERS_MARGIN: f64 = 1e-9;

/// Directions shorter than this have no fundamental tensor.
pub const ORIGIN_TOLERANCE: f64 = 1e-12;

/// Relative tolerance used for the `F(-y) = F(y)` symmetry flag.
pub const REVERSIBILITY_TOLERANCE: f64 = 1e-12;

pub type Evaluator = Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum NormKind {
    Euclidean { a: DMatrix<f64> },
    Randers { a: DMatrix<f64>, b: DVector<f64> },
    Custom { name: String, evaluator: Evaluator },
}

impl fmt::Debug for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormKind::Euclidean { a } => f.debug_struct("Euclidean").field("a", a).finish(),
            NormKind::Randers { a, b } => f
                .debug_struct("Randers")
                .field("a", a)
                .field("b", b)
                .finish(),
            NormKind::Custom { name, .. } => f.debug_struct("Custom").field("name", name).finish(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MinkowskiNorm {
    dim: usize,
    kind: NormKind,
}

impl MinkowskiNorm {
    pub fn euclidean(a: DMatrix<f64>) -> Result<Self> {
        check_spd(&a)?;
        Ok(Self {
            dim: a.nrows(),
            kind: NormKind::Euclidean { a },
        })
    }

    pub fn euclidean_identity(dim: usize) -> Self {
        Self {
            dim,
            kind: NormKind::Euclidean {
                a: DMatrix::identity(dim, dim),
            },
        }
    }

    pub fn randers(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        check_spd(&a)?;
        if b.len() != a.nrows() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                got: b.len(),
            });
        }
        let a_inv = a
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NotSpd("cholesky failed".into()))?
            .inverse();
        let b_norm = b.dot(&(&a_inv * &b)).sqrt();
        if b_norm.is_nan() || b_norm >= 1.0 - RANDERS_MARGIN {
            return Err(Error::RandersDrift(b_norm));
        }
        Ok(Self {
            dim: a.nrows(),
            kind: NormKind::Randers { a, b },
        })
    }

    /// A norm given by an arbitrary evaluator. Smoothness and convexity are
    /// the caller's responsibility; `check_minkowski_axioms` samples them.
    pub fn custom(dim: usize, name: impl Into<String>, evaluator: Evaluator) -> Self {
        Self {
            dim,
            kind: NormKind::Custom {
                name: name.into(),
                evaluator,
            },
        }
    }

    /// `(sum y_i^4)^(1/4)`.
    pub fn quartic(dim: usize) -> Self {
        Self::custom(
            dim,
            "quartic",
            Arc::new(|y: &DVector<f64>| y.iter().map(|v| v.powi(4)).sum::<f64>().sqrt().sqrt()),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &NormKind {
        &self.kind
    }

    /// True when the fundamental tensor has a closed form.
    pub fn has_analytic_tensor(&self) -> bool {
        !matches!(self.kind, NormKind::Custom { .. })
    }

    fn check_dim(&self, y: &DVector<f64>) -> Result<()> {
        if y.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: y.len(),
            });
        }
        Ok(())
    }

    pub fn evaluate(&self, y: &DVector<f64>) -> Result<f64> {
        self.check_dim(y)?;
        if y.iter().all(|v| *v == 0.0) {
            return Ok(0.0);
        }
        Ok(match &self.kind {
            NormKind::Euclidean { a } => quadratic(a, y).sqrt(),
            NormKind::Randers { a, b } => quadratic(a, y).sqrt() + b.dot(y),
            NormKind::Custom { evaluator, .. } => evaluator(y),
        })
    }

    fn half_square(&self, y: &DVector<f64>) -> f64 {
        match &self.kind {
            NormKind::Euclidean { a } => 0.5 * quadratic(a, y),
            NormKind::Randers { a, b } => {
                let f = quadratic(a, y).sqrt() + b.dot(y);
                0.5 * f * f
            }
            NormKind::Custom { evaluator, .. } => {
                let f = evaluator(y);
                0.5 * f * f
            }
        }
    }

    pub fn fundamental_tensor(&self, y: &DVector<f64>) -> Result<FundamentalTensor> {
        self.check_dim(y)?;
        if y.norm() <= ORIGIN_TOLERANCE {
            return Err(Error::TensorAtOrigin);
        }
        let matrix = match &self.kind {
            NormKind::Euclidean { a } => a.clone(),
            NormKind::Randers { a, b } => {
                // g = (F/alpha)(a - l l^T) + (l + b)(l + b)^T, l = a y / alpha
                let ay = a * y;
                let alpha = y.dot(&ay).sqrt();
                let l = ay / alpha;
                let f = alpha + b.dot(y);
                let lb = &l + b;
                (a - &l * l.transpose()) * (f / alpha) + &lb * lb.transpose()
            }
            NormKind::Custom { .. } => finite_difference_hessian(|v| self.half_square(v), y),
        };
        Ok(FundamentalTensor {
            at: y.clone(),
            matrix,
        })
    }

    /// Finite-difference Hessian of `F^2 / 2`, regardless of kind.
    pub fn finite_difference_tensor(&self, y: &DVector<f64>) -> Result<FundamentalTensor> {
        self.check_dim(y)?;
        if y.norm() <= ORIGIN_TOLERANCE {
            return Err(Error::TensorAtOrigin);
        }
        let matrix = finite_difference_hessian(|v| self.half_square(v), y);
        Ok(FundamentalTensor {
            at: y.clone(),
            matrix,
        })
    }

    /// `y / |y|_a` for Euclidean and Randers kinds, `y / |y|` otherwise.
    fn normalize(&self, y: &DVector<f64>) -> DVector<f64> {
        let len = match &self.kind {
            NormKind::Euclidean { a } | NormKind::Randers { a, .. } => quadratic(a, y).sqrt(),
            NormKind::Custom { .. } => y.norm(),
        };
        y / len
    }
}

fn quadratic(a: &DMatrix<f64>, y: &DVector<f64>) -> f64 {
    y.dot(&(a * y))
}

/// Base step of `finite_difference_hessian`, before scaling by `max(1, |y|)`.
pub const FINITE_DIFFERENCE_STEP: f64 = 1e-3;

pub fn finite_difference_step() -> f64 {
    FINITE_DIFFERENCE_STEP
}

/// Central-difference Hessian with step `h = 1e-3 * max(1, |y|)` on every
/// axis, improved by one Richardson step: `(4 D(h) - D(2h)) / 3`.
pub fn finite_difference_hessian<F: Fn(&DVector<f64>) -> f64>(
    f: F,
    y: &DVector<f64>,
) -> DMatrix<f64> {
    let h = finite_difference_step() * y.norm().max(1.0);
    (central_hessian(&f, y, h) * 4.0 - central_hessian(&f, y, 2.0 * h)) / 3.0
}

fn central_hessian<F: Fn(&DVector<f64>) -> f64>(f: &F, y: &DVector<f64>, h: f64) -> DMatrix<f64> {
    let n = y.len();
    let f0 = f(y);
    let shifted = |moves: &[(usize, f64)]| {
        let mut p = y.clone();
        for &(i, d) in moves {
            p[i] += d;
        }
        f(&p)
    };
    let mut hess = DMatrix::zeros(n, n);
    for i in 0..n {
        hess[(i, i)] = (shifted(&[(i, h)]) - 2.0 * f0 + shifted(&[(i, -h)])) / (h * h);
        for j in 0..i {
            let v = (shifted(&[(i, h), (j, h)])
                - shifted(&[(i, h), (j, -h)])
                - shifted(&[(i, -h), (j, h)])
                + shifted(&[(i, -h), (j, -h)]))
                / (4.0 * h * h);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    hess
}

/// The matrix `g_ij(y)` at a nonzero direction `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalTensor {
    pub at: DVector<f64>,
    pub matrix: DMatrix<f64>,
}

impl FundamentalTensor {
    pub fn asymmetry(&self) -> f64 {
        symmetry_defect(&self.matrix)
    }

    pub fn eigenvalue_bounds(&self) -> (f64, f64) {
        eigen_bounds(&self.matrix)
    }

    /// Smallest eigenvalue exceeds `1e-10` times the largest.
    pub fn is_positive_definite(&self) -> bool {
        let (min, max) = self.eigenvalue_bounds();
        min > 1e-10 * max && max > 0.0
    }
}

/// Sampled summary of the Minkowski-norm axioms.
#[derive(Debug, Clone, PartialEq)]
pub struct AxiomReport {
    pub samples: usize,
    /// Largest `|F(l y) - l F(y)| / (l F(y))` over samples.
    pub max_homogeneity_deviation: f64,
    /// Smallest eigenvalue of `g_ij` over unit-direction samples.
    pub min_eigenvalue: f64,
    /// Smallest `lambda_min / lambda_max` of `g_ij` over samples.
    pub min_eigenvalue_ratio: f64,
    pub max_tensor_asymmetry: f64,
    /// Largest `|y^T g y - F^2| / F^2`.
    pub max_euler_deviation: f64,
    /// Largest entrywise gap between the analytic and finite-difference
    /// tensors at unit a-norm directions; `None` for custom norms.
    pub max_fd_discrepancy: Option<f64>,
    /// Whether `F(-y) = F(y)` held on every sample.
    pub symmetric: bool,
    pub max_reversibility_gap: f64,
}

impl AxiomReport {
    pub fn identity(analytic: bool) -> Self {
        Self {
            samples: 0,
            max_homogeneity_deviation: 0.0,
            min_eigenvalue: f64::INFINITY,
            min_eigenvalue_ratio: f64::INFINITY,
            max_tensor_asymmetry: 0.0,
            max_euler_deviation: 0.0,
            max_fd_discrepancy: analytic.then_some(0.0),
            symmetric: true,
            max_reversibility_gap: 0.0,
        }
    }

    pub fn merge(self, o: Self) -> Self {
        Self {
            samples: self.samples + o.samples,
            max_homogeneity_deviation: nan_max(
                self.max_homogeneity_deviation,
                o.max_homogeneity_deviation,
            ),
            min_eigenvalue: nan_min(self.min_eigenvalue, o.min_eigenvalue),
            min_eigenvalue_ratio: nan_min(self.min_eigenvalue_ratio, o.min_eigenvalue_ratio),
            max_tensor_asymmetry: nan_max(self.max_tensor_asymmetry, o.max_tensor_asymmetry),
            max_euler_deviation: nan_max(self.max_euler_deviation, o.max_euler_deviation),
            max_fd_discrepancy: match (self.max_fd_discrepancy, o.max_fd_discrepancy) {
                (Some(a), Some(b)) => Some(nan_max(a, b)),
                (a, b) => a.or(b),
            },
            symmetric: self.symmetric && o.symmetric,
            max_reversibility_gap: nan_max(self.max_reversibility_gap, o.max_reversibility_gap),
        }
    }

    pub fn positive_definite(&self) -> bool {
        self.min_eigenvalue > 0.0
    }
}

fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::INFINITY
    } else {
        a.max(b)
    }
}

fn nan_min(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NEG_INFINITY
    } else {
        a.min(b)
    }
}

/// One sampled direction `y` on the Euclidean unit sphere and scale factor
/// `lambda` in `(0, 10]`.
pub fn draw_axiom_sample<R: rand::Rng + ?Sized>(rng: &mut R, dim: usize) -> (DVector<f64>, f64) {
    let y = sampling::unit_sphere(rng, dim);
    let lambda = 10.0 * (1.0 - rng.random::<f64>());
    (y, lambda)
}

/// Axiom summary of a single direction and scale factor.
pub fn axiom_sample(norm: &MinkowskiNorm, y: &DVector<f64>, lambda: f64) -> AxiomReport {
    let mut r = AxiomReport::identity(norm.has_analytic_tensor());
    r.samples = 1;
    // Dimensions always match here; the sampler draws `norm.dim()` coordinates.
    let f = norm.evaluate(y).unwrap_or(f64::NAN);
    let f_scaled = norm.evaluate(&(y * lambda)).unwrap_or(f64::NAN);
    r.max_homogeneity_deviation = (f_scaled - lambda * f).abs() / (lambda * f);

    let f_rev = norm.evaluate(&(-y)).unwrap_or(f64::NAN);
    r.max_reversibility_gap = (f_rev - f).abs() / f.max(f_rev);
    r.symmetric = r.max_reversibility_gap <= REVERSIBILITY_TOLERANCE;

    match norm.fundamental_tensor(y) {
        Ok(g) => {
            let (min, max) = g.eigenvalue_bounds();
            r.min_eigenvalue = min;
            r.min_eigenvalue_ratio = min / max;
            r.max_tensor_asymmetry = g.asymmetry();
            r.max_euler_deviation = (y.dot(&(&g.matrix * y)) - f * f).abs() / (f * f);
        }
        Err(_) => {
            r.min_eigenvalue = f64::NEG_INFINITY;
            r.max_euler_deviation = f64::INFINITY;
        }
    }

    if norm.has_analytic_tensor() {
        let u = norm.normalize(y);
        let gap = match (
            norm.fundamental_tensor(&u),
            norm.finite_difference_tensor(&u),
        ) {
            (Ok(a), Ok(b)) => max_abs(&(a.matrix - b.matrix)),
            _ => f64::INFINITY,
        };
        r.max_fd_discrepancy = Some(gap);
    }
    r
}

/// Samples unit directions and scale factors `lambda` in `(0, 10]` and
/// summarizes homogeneity, fundamental-tensor shape, and reversibility.
pub fn check_minkowski_axioms(norm: &MinkowskiNorm, sample_count: usize, seed: u64) -> AxiomReport {
    sharded_reduce(
        sample_count,
        seed,
        sampling::stream::AXIOMS,
        AxiomReport::identity(norm.has_analytic_tensor()),
        |rng, _| {
            let (y, lambda) = draw_axiom_sample(rng, norm.dim());
            axiom_sample(norm, &y, lambda)
        },
        AxiomReport::merge,
    )
}

/// Norm description as it appears in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum NormSpec {
    Euclidean { a: Vec<Vec<f64>> },
    Randers { a: Vec<Vec<f64>>, b: Vec<f64> },
    Quartic {},
}

pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().find(|row| row.len() != c) {
        return Err(Error::DimensionMismatch {
            expected: c,
            got: bad.len(),
        });
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

pub fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

impl NormSpec {
    /// Builds the norm on `dim`-dimensional coordinates.
    pub fn build(&self, dim: usize) -> Result<MinkowskiNorm> {
        let norm = match self {
            NormSpec::Euclidean { a } => MinkowskiNorm::euclidean(matrix_from_rows(a)?)?,
            NormSpec::Randers { a, b } => {
                MinkowskiNorm::randers(matrix_from_rows(a)?, DVector::from_column_slice(b))?
            }
            NormSpec::Quartic {} => MinkowskiNorm::quartic(dim),
        };
        if norm.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: norm.dim(),
            });
        }
        Ok(norm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    fn randers_half() -> MinkowskiNorm {
        MinkowskiNorm::randers(DMatrix::identity(2, 2), v(&[0.5, 0.0])).unwrap()
    }

    // Test-only oracle: central differences with the fourth-root step, which
    // is independent of the step used by the implementation.
    fn oracle_hessian(norm: &MinkowskiNorm, y: &DVector<f64>) -> DMatrix<f64> {
        let f = |p: &DVector<f64>| 0.5 * norm.evaluate(p).unwrap().powi(2);
        let n = y.len();
        let h = 1e-4;
        DMatrix::from_fn(n, n, |i, j| {
            let mut pp = y.clone();
            let mut pm = y.clone();
            let mut mp = y.clone();
            let mut mm = y.clone();
            pp[i] += h;
            pp[j] += h;
            pm[i] += h;
            pm[j] -= h;
            mp[i] -= h;
            mp[j] += h;
            mm[i] -= h;
            mm[j] -= h;
            (f(&pp) - f(&pm) - f(&mp) + f(&mm)) / (4.0 * h * h)
        })
    }

    #[test]
    fn evaluate_examples() {
        let e = MinkowskiNorm::euclidean_identity(2);
        assert_eq!(e.evaluate(&v(&[3.0, 4.0])).unwrap(), 5.0);
        let r = randers_half();
        assert_eq!(r.evaluate(&v(&[1.0, 0.0])).unwrap(), 1.5);
        assert_relative_eq!(
            r.evaluate(&v(&[2.0, 3.0])).unwrap(),
            13f64.sqrt() + 1.0,
            epsilon = 1e-14
        );
        assert_relative_eq!(
            r.evaluate(&v(&[2.0, 3.0])).unwrap(),
            4.60555,
            epsilon = 1e-5
        );
    }

    #[test]
    fn evaluate_origin_is_zero() {
        assert_eq!(randers_half().evaluate(&v(&[0.0, 0.0])).unwrap(), 0.0);
        assert_eq!(
            MinkowskiNorm::quartic(3)
                .evaluate(&v(&[0.0, 0.0, 0.0]))
                .unwrap(),
            0.0
        );
    }

    #[test]
    fn evaluate_dimension_mismatch() {
        let err = randers_half().evaluate(&v(&[1.0, 2.0, 3.0])).unwrap_err();
        assert!(err.to_string().contains("dimension mismatch"));
    }

    #[test]
    fn euclidean_tensor_is_a_exactly() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let e = MinkowskiNorm::euclidean(a.clone()).unwrap();
        assert_eq!(e.fundamental_tensor(&v(&[0.3, -7.0])).unwrap().matrix, a);
    }

    #[test]
    fn randers_tensor_matches_oracle() {
        let r = randers_half();
        let y = v(&[1.0, 0.0]);
        let g = r.fundamental_tensor(&y).unwrap();
        let oracle = oracle_hessian(&r, &y);
        assert!(max_abs(&(&g.matrix - oracle)) < 1e-5);
        // Frozen from the oracle: at (1,0), g = diag(F^2/1, F/alpha) = diag(2.25, 1.5).
        assert_relative_eq!(g.matrix[(0, 0)], 2.25, epsilon = 1e-14);
        assert_relative_eq!(g.matrix[(1, 1)], 1.5, epsilon = 1e-14);
        assert_relative_eq!(g.matrix[(0, 1)], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn randers_tensor_positive_definite_off_axis() {
        let g = randers_half().fundamental_tensor(&v(&[0.0, 1.0])).unwrap();
        let (min, _) = g.eigenvalue_bounds();
        assert!(min > 0.0);
        assert!(g.is_positive_definite());
    }

    #[test]
    fn tensor_at_origin_is_error() {
        let err = randers_half()
            .fundamental_tensor(&v(&[0.0, 0.0]))
            .unwrap_err();
        assert_eq!(err, Error::TensorAtOrigin);
        assert_eq!(err.to_string(), "fundamental tensor undefined at origin");
    }

    #[test]
    fn randers_rejects_large_drift() {
        assert!(matches!(
            MinkowskiNorm::randers(DMatrix::identity(2, 2), v(&[1.0, 0.0])),
            Err(Error::RandersDrift(_))
        ));
        assert!(MinkowskiNorm::randers(DMatrix::identity(2, 2), v(&[1.0 - 1e-10, 0.0])).is_err());
        assert!(MinkowskiNorm::randers(DMatrix::identity(2, 2), v(&[0.999, 0.0])).is_ok());
        // |b|_a uses a^{-1}: a = 4 I halves the drift norm.
        assert!(MinkowskiNorm::randers(DMatrix::identity(2, 2) * 4.0, v(&[1.5, 0.0])).is_ok());
    }

    #[test]
    fn euclidean_rejects_non_spd() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(MinkowskiNorm::euclidean(a), Err(Error::NotSpd(_))));
    }

    #[test]
    fn axioms_euclidean() {
        let r = check_minkowski_axioms(&MinkowskiNorm::euclidean_identity(2), 100, 0);
        assert_eq!(r.samples, 100);
        assert!(r.max_homogeneity_deviation <= 1e-12);
        assert!(r.symmetric);
        assert!(r.positive_definite());
    }

    #[test]
    fn axioms_randers_is_not_reversible() {
        let r = check_minkowski_axioms(&randers_half(), 100, 0);
        assert!(!r.symmetric);
        assert!(r.max_fd_discrepancy.unwrap() < 1e-7);
        assert!(r.positive_definite());
    }

    #[test]
    fn axioms_quartic() {
        let r = check_minkowski_axioms(&MinkowskiNorm::quartic(3), 100, 0);
        assert!(r.max_homogeneity_deviation <= 1e-9);
        assert!(r.symmetric);
        assert!(r.max_fd_discrepancy.is_none());
    }

    #[test]
    fn norm_spec_parses() {
        let s: NormSpec =
            serde_json::from_str(r#"{"type":"randers","a":[[1,0],[0,1]],"b":[0.5,0]}"#).unwrap();
        let n = s.build(2).unwrap();
        assert_eq!(n.evaluate(&v(&[1.0, 0.0])).unwrap(), 1.5);
        let q: NormSpec = serde_json::from_str(r#"{"type":"quartic"}"#).unwrap();
        assert_eq!(q.build(4).unwrap().dim(), 4);
        assert!(serde_json::from_str::<NormSpec>(r#"{"type":"quartic","x":1}"#).is_err());
        let e: NormSpec =
            serde_json::from_str(r#"{"type":"euclidean","a":[[1,0],[0,1]]}"#).unwrap();
        assert!(matches!(e.build(3), Err(Error::DimensionMismatch { .. })));
    }
}
