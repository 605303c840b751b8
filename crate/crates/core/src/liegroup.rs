//! Matrix Lie groups, their translation differentials, and invariant Finsler
//! metrics built from a Minkowski norm on the Lie algebra.
//!
//! Tangent vectors are kept in ambient form: a base element `z` and an `m x m`
//! matrix `A` with `A z^-1` in the Lie algebra. Translation differentials are
//! then plain matrix products, and algebra coordinates are recovered on demand
//! by least squares against the flattened basis.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{commutator, flatten, rank, SpanSolver};
use crate::minkowski::MinkowskiNorm;
use crate::sampling::{self, relative_deviation, sharded_reduce, DeviationReport, Sample, Witness};

/// Tolerance on the defining equations of catalog groups.
pub const MEMBERSHIP_TOLERANCE: f64 = 1e-9;
/// Largest algebra-span residual accepted for a tangent vector.
pub const TANGENCY_TOLERANCE: f64 = 1e-9;
/// Residual above which `algebra_coordinates` rejects its input.
pub const COORDINATE_RESIDUAL_LIMIT: f64 = 1e-8;

/// Which translation a frame or metric is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricSide {
    Left,
    Right,
    /// A claimed bi-invariant metric; evaluated with the right convention.
    Bi,
}

impl MetricSide {
    pub fn frame_side(self) -> Side {
        match self {
            MetricSide::Left => Side::Left,
            MetricSide::Right | MetricSide::Bi => Side::Right,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupKind {
    /// 3x3 unipotent upper triangular matrices.
    Heisenberg3,
    /// 3x3 upper triangular matrices with positive diagonal.
    Ut3Pos,
    /// R^n as (n+1)x(n+1) unipotent translation matrices.
    Rn(usize),
    /// Rigid motions of the plane in homogeneous coordinates.
    Se2,
}

pub const CATALOG_GROUPS: &[&str] = &["heisenberg3", "ut3pos", "rn", "se2"];

pub struct MatrixLieGroup {
    name: String,
    kind: GroupKind,
    m: usize,
    basis: Vec<DMatrix<f64>>,
    /// `c[(i * n + j) * n + k]` with `[E_i, E_j] = sum_k c^k_ij E_k`.
    structure_constants: Vec<f64>,
    solver: SpanSolver,
}

impl fmt::Debug for MatrixLieGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MatrixLieGroup")
            .field("name", &self.name)
            .field("n", &self.dim())
            .field("m", &self.m)
            .finish()
    }
}

fn unit(m: usize, i: usize, j: usize) -> DMatrix<f64> {
    let mut e = DMatrix::zeros(m, m);
    e[(i, j)] = 1.0;
    e
}

impl MatrixLieGroup {
    fn build(
        name: String,
        kind: GroupKind,
        m: usize,
        basis: Vec<DMatrix<f64>>,
        brackets: &[(usize, usize, usize, f64)],
    ) -> Arc<Self> {
        let n = basis.len();
        let mut c = vec![0.0; n * n * n];
        for &(i, j, k, v) in brackets {
            c[(i * n + j) * n + k] = v;
            c[(j * n + i) * n + k] = -v;
        }
        let flat = DMatrix::from_columns(&basis.iter().map(flatten).collect::<Vec<_>>());
        let solver = SpanSolver::new(flat).expect("catalog bases are independent");
        Arc::new(Self {
            name,
            kind,
            m,
            basis,
            structure_constants: c,
            solver,
        })
    }

    pub fn heisenberg3() -> Arc<Self> {
        let basis = vec![unit(3, 0, 1), unit(3, 1, 2), unit(3, 0, 2)];
        Self::build(
            "heisenberg3".into(),
            GroupKind::Heisenberg3,
            3,
            basis,
            &[(0, 1, 2, 1.0)],
        )
    }

    /// Basis order: `e00, e11, e22, e01, e12, e02`.
    pub fn ut3pos() -> Arc<Self> {
        let basis = vec![
            unit(3, 0, 0),
            unit(3, 1, 1),
            unit(3, 2, 2),
            unit(3, 0, 1),
            unit(3, 1, 2),
            unit(3, 0, 2),
        ];
        let brackets = [
            (0, 3, 3, 1.0),
            (1, 3, 3, -1.0),
            (1, 4, 4, 1.0),
            (2, 4, 4, -1.0),
            (0, 5, 5, 1.0),
            (2, 5, 5, -1.0),
            (3, 4, 5, 1.0),
        ];
        Self::build("ut3pos".into(), GroupKind::Ut3Pos, 3, basis, &brackets)
    }

    pub fn rn(n: usize) -> Arc<Self> {
        let basis = (0..n).map(|i| unit(n + 1, i, n)).collect();
        Self::build(format!("rn({n})"), GroupKind::Rn(n), n + 1, basis, &[])
    }

    /// Basis order: rotation generator, x translation, y translation.
    pub fn se2() -> Arc<Self> {
        let rot = unit(3, 1, 0) - unit(3, 0, 1);
        let basis = vec![rot, unit(3, 0, 2), unit(3, 1, 2)];
        Self::build(
            "se2".into(),
            GroupKind::Se2,
            3,
            basis,
            &[(0, 1, 2, 1.0), (0, 2, 1, -1.0)],
        )
    }

    /// Looks up a catalog group; `n` is required for `rn`.
    pub fn from_catalog(id: &str, n: Option<usize>) -> Result<Arc<Self>> {
        match id {
            "heisenberg3" => Ok(Self::heisenberg3()),
            "ut3pos" => Ok(Self::ut3pos()),
            "se2" => Ok(Self::se2()),
            "rn" => match n {
                Some(n) if n >= 1 => Ok(Self::rn(n)),
                _ => Err(Error::InvalidArgument(
                    "group `rn` needs group_params.n >= 1".into(),
                )),
            },
            other => Err(Error::UnknownCatalog(other.to_string())),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    /// Group dimension `n`.
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Matrix size `m`.
    pub fn matrix_size(&self) -> usize {
        self.m
    }

    pub fn basis(&self) -> &[DMatrix<f64>] {
        &self.basis
    }

    pub fn structure_constant(&self, i: usize, j: usize, k: usize) -> f64 {
        let n = self.dim();
        self.structure_constants[(i * n + j) * n + k]
    }

    pub fn is_nilpotent(&self) -> bool {
        matches!(self.kind, GroupKind::Heisenberg3 | GroupKind::Rn(_))
    }

    pub fn is_abelian(&self) -> bool {
        self.structure_constants.iter().all(|c| *c == 0.0)
    }

    /// `sum_i coords_i E_i`.
    pub fn algebra_matrix(&self, coords: &DVector<f64>) -> Result<DMatrix<f64>> {
        if coords.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: coords.len(),
            });
        }
        Ok(self
            .basis
            .iter()
            .zip(coords.iter())
            .fold(DMatrix::zeros(self.m, self.m), |acc, (e, c)| acc + e * *c))
    }

    /// Coordinates of an algebra matrix and the least-squares residual.
    pub fn algebra_solve(&self, a: &DMatrix<f64>) -> (DVector<f64>, f64) {
        self.solver.solve(&flatten(a))
    }

    /// Worst gap between direct commutators and the structure constants.
    pub fn structure_constant_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                let direct = commutator(&self.basis[i], &self.basis[j]);
                let coords = DVector::from_fn(n, |k, _| self.structure_constant(i, j, k));
                let rebuilt = self.algebra_matrix(&coords).expect("length n");
                worst = worst.max((direct - rebuilt).amax());
            }
        }
        worst
    }

    pub fn basis_rank(&self) -> usize {
        let flat = DMatrix::from_columns(&self.basis.iter().map(flatten).collect::<Vec<_>>());
        rank(&flat, 1e-10)
    }

    /// Membership predicate on the defining equations.
    pub fn contains(&self, x: &DMatrix<f64>) -> bool {
        let m = self.m;
        let tol = MEMBERSHIP_TOLERANCE;
        if x.shape() != (m, m) || x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        let lower_zero = || (0..m).all(|i| (0..i).all(|j| x[(i, j)].abs() <= tol));
        match self.kind {
            GroupKind::Heisenberg3 => {
                lower_zero() && (0..m).all(|i| (x[(i, i)] - 1.0).abs() <= tol)
            }
            GroupKind::Ut3Pos => lower_zero() && (0..m).all(|i| x[(i, i)] > tol),
            GroupKind::Rn(n) => (0..=n).all(|i| {
                (0..n).all(|j| (x[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs() <= tol)
                    && (i < n || (x[(n, n)] - 1.0).abs() <= tol)
            }),
            GroupKind::Se2 => {
                let bottom = x[(2, 0)].abs() <= tol
                    && x[(2, 1)].abs() <= tol
                    && (x[(2, 2)] - 1.0).abs() <= tol;
                let r = x.view((0, 0), (2, 2)).into_owned();
                let orth = (r.transpose() * &r - DMatrix::<f64>::identity(2, 2)).amax() <= tol;
                bottom && orth && r.determinant() > 0.0
            }
        }
    }

    /// Group exponential of `sum_i coords_i E_i`. Nilpotent groups use the
    /// terminating power series; the others use scaling and squaring.
    pub fn exp_matrix(&self, coords: &DVector<f64>) -> Result<DMatrix<f64>> {
        let a = self.algebra_matrix(coords)?;
        let x = if self.is_nilpotent() {
            let mut term = DMatrix::identity(self.m, self.m);
            let mut sum = term.clone();
            for k in 1..=self.m {
                term = &term * &a / k as f64;
                sum += &term;
            }
            sum
        } else {
            a.exp()
        };
        Ok(x)
    }

    pub fn sample_coords<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        sampling::uniform_vector(rng, self.dim(), -1.0, 1.0)
    }
}

impl PartialEq for MatrixLieGroup {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
    }
}

fn same_group(a: &MatrixLieGroup, b: &MatrixLieGroup) -> Result<()> {
    if a != b {
        return Err(Error::GroupMismatch {
            left: a.name.clone(),
            right: b.name.clone(),
        });
    }
    Ok(())
}

/// `exp_element`: exponential chart from algebra coordinates.
pub fn exp_element(group: &Arc<MatrixLieGroup>, coords: &DVector<f64>) -> Result<GroupElement> {
    let x = group.exp_matrix(coords)?;
    if !group.contains(&x) {
        return Err(Error::Internal(format!(
            "exp left the group {}",
            group.name
        )));
    }
    Ok(GroupElement {
        group: Arc::clone(group),
        matrix: x,
    })
}

#[derive(Debug, Clone)]
pub struct GroupElement {
    group: Arc<MatrixLieGroup>,
    matrix: DMatrix<f64>,
}

impl GroupElement {
    pub fn new(group: &Arc<MatrixLieGroup>, matrix: DMatrix<f64>) -> Result<Self> {
        if !group.contains(&matrix) {
            return Err(Error::NotGroupElement {
                group: group.name.clone(),
            });
        }
        Ok(Self {
            group: Arc::clone(group),
            matrix,
        })
    }

    pub fn identity(group: &Arc<MatrixLieGroup>) -> Self {
        let m = group.m;
        Self {
            group: Arc::clone(group),
            matrix: DMatrix::identity(m, m),
        }
    }

    pub fn group(&self) -> &Arc<MatrixLieGroup> {
        &self.group
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn inverse(&self) -> Self {
        let inv = self
            .matrix
            .clone()
            .lu()
            .try_inverse()
            .expect("group elements are invertible");
        Self {
            group: Arc::clone(&self.group),
            matrix: inv,
        }
    }

    pub fn compose(&self, other: &Self) -> Result<Self> {
        same_group(&self.group, &other.group)?;
        Ok(Self {
            group: Arc::clone(&self.group),
            matrix: &self.matrix * &other.matrix,
        })
    }

    pub fn is_valid(&self) -> bool {
        self.group.contains(&self.matrix)
    }
}

#[derive(Debug, Clone)]
pub struct TangentVector {
    base: GroupElement,
    matrix: DMatrix<f64>,
}

impl TangentVector {
    /// Checks that `matrix * base^-1` lies in the Lie algebra.
    pub fn new(base: GroupElement, matrix: DMatrix<f64>) -> Result<Self> {
        let m = base.group.m;
        if matrix.shape() != (m, m) {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: matrix.nrows(),
            });
        }
        let v = Self { base, matrix };
        let residual = v.tangency_residual();
        if residual > TANGENCY_TOLERANCE {
            return Err(Error::NotTangent { residual });
        }
        Ok(v)
    }

    #[cfg(test)]
    pub(crate) fn from_parts(base: GroupElement, matrix: DMatrix<f64>) -> Self {
        Self { base, matrix }
    }

    pub fn zero(base: GroupElement) -> Self {
        let m = base.group.m;
        Self {
            base,
            matrix: DMatrix::zeros(m, m),
        }
    }

    pub fn base(&self) -> &GroupElement {
        &self.base
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn group(&self) -> &Arc<MatrixLieGroup> {
        &self.base.group
    }

    /// Relative residual of `A z^-1` against the algebra span.
    pub fn tangency_residual(&self) -> f64 {
        let a = &self.matrix * self.base.inverse().matrix;
        let (_, r) = self.base.group.algebra_solve(&a);
        r / a.norm().max(1.0)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            base: self.base.clone(),
            matrix: &self.matrix * s,
        }
    }

    /// Sum of two vectors at the same base point.
    pub fn add(&self, other: &Self) -> Result<Self> {
        same_group(&self.base.group, &other.base.group)?;
        let gap = (&self.base.matrix - &other.base.matrix).amax();
        if gap > MEMBERSHIP_TOLERANCE {
            return Err(Error::InvalidArgument(
                "vectors live at different base points".into(),
            ));
        }
        Ok(Self {
            base: self.base.clone(),
            matrix: &self.matrix + &other.matrix,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }
}

/// `T_x L_g`: `(x, A) -> (g x, g A)`.
pub fn left_translate_diff(g: &GroupElement, v: &TangentVector) -> Result<TangentVector> {
    same_group(&g.group, &v.base.group)?;
    Ok(TangentVector {
        base: g.compose(&v.base)?,
        matrix: &g.matrix * &v.matrix,
    })
}

/// `T_x R_g`: `(x, A) -> (x g, A g)`.
pub fn right_translate_diff(g: &GroupElement, v: &TangentVector) -> Result<TangentVector> {
    same_group(&g.group, &v.base.group)?;
    Ok(TangentVector {
        base: v.base.compose(g)?,
        matrix: &v.matrix * &g.matrix,
    })
}

/// `T_x nu`: `(x, A) -> (x^-1, -x^-1 A x^-1)`.
pub fn inversion_diff(v: &TangentVector) -> TangentVector {
    let inv = v.base.inverse();
    let matrix = -(&inv.matrix * &v.matrix * &inv.matrix);
    TangentVector { base: inv, matrix }
}

/// Identity values of `nu^* X_i` for the left-invariant fields with
/// `X_i(e) = E_i`. Since `T_e nu = -id` this is `-E_i`.
pub fn inversion_pullback_frame(basis: &[DMatrix<f64>]) -> Vec<DMatrix<f64>> {
    basis.iter().map(|e| -e).collect()
}

/// Value at `z` of the invariant field generated by the algebra matrix `e`:
/// `e z` for right-invariant fields, `z e` for left-invariant fields.
pub fn invariant_field_value(
    e: &DMatrix<f64>,
    z: &GroupElement,
    side: Side,
) -> Result<TangentVector> {
    let (_, residual) = z.group.algebra_solve(e);
    let residual = residual / e.norm().max(1.0);
    if residual > TANGENCY_TOLERANCE {
        return Err(Error::NotInAlgebra { residual });
    }
    let matrix = match side {
        Side::Right => e * &z.matrix,
        Side::Left => &z.matrix * e,
    };
    Ok(TangentVector {
        base: z.clone(),
        matrix,
    })
}

/// Algebra coordinates of `A z^-1` (right) or `z^-1 A` (left).
pub fn algebra_coordinates(v: &TangentVector, side: Side) -> Result<DVector<f64>> {
    let inv = v.base.inverse();
    let a = match side {
        Side::Right => &v.matrix * &inv.matrix,
        Side::Left => &inv.matrix * &v.matrix,
    };
    let (c, residual) = v.base.group.algebra_solve(&a);
    if residual > COORDINATE_RESIDUAL_LIMIT * a.norm().max(1.0) {
        return Err(Error::NotTangent { residual });
    }
    Ok(c)
}

/// Tangent vector at `z` with the given invariant-frame coordinates.
pub fn tangent_from_coords(
    z: &GroupElement,
    coords: &DVector<f64>,
    side: Side,
) -> Result<TangentVector> {
    let e = z.group.algebra_matrix(coords)?;
    invariant_field_value(&e, z, side)
}

/// A left-, right-, or (claimed) bi-invariant Finsler metric on a group.
#[derive(Debug, Clone)]
pub struct InvariantMetric {
    group: Arc<MatrixLieGroup>,
    norm0: MinkowskiNorm,
    side: MetricSide,
}

impl InvariantMetric {
    pub fn new(
        group: &Arc<MatrixLieGroup>,
        norm0: MinkowskiNorm,
        side: MetricSide,
    ) -> Result<Self> {
        if norm0.dim() != group.dim() {
            return Err(Error::DimensionMismatch {
                expected: group.dim(),
                got: norm0.dim(),
            });
        }
        Ok(Self {
            group: Arc::clone(group),
            norm0,
            side,
        })
    }

    pub fn group(&self) -> &Arc<MatrixLieGroup> {
        &self.group
    }

    pub fn norm0(&self) -> &MinkowskiNorm {
        &self.norm0
    }

    pub fn side(&self) -> MetricSide {
        self.side
    }

    /// `F(x, y) = F0(T_x L_{x^-1} y)` or `F0(T_x R_{x^-1} y)`.
    pub fn eval(&self, v: &TangentVector) -> Result<f64> {
        same_group(&self.group, &v.base.group)?;
        let c = algebra_coordinates(v, self.side.frame_side())?;
        self.norm0.evaluate(&c)
    }

    fn translation_deviation(
        &self,
        v: &TangentVector,
        g: &GroupElement,
        side: Side,
    ) -> Result<f64> {
        let moved = match side {
            Side::Left => left_translate_diff(g, v)?,
            Side::Right => right_translate_diff(g, v)?,
        };
        Ok(relative_deviation(self.eval(&moved)?, self.eval(v)?))
    }

    fn draw_translation_sample<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
    ) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
        let x = self.group.sample_coords(rng);
        let y = self.group.sample_coords(rng);
        let g = self.group.sample_coords(rng);
        (x, y, g)
    }

    fn translation_sample(
        &self,
        xc: &DVector<f64>,
        yc: &DVector<f64>,
        gc: &DVector<f64>,
        side: Side,
    ) -> f64 {
        let run = || -> Result<f64> {
            let x = exp_element(&self.group, xc)?;
            let g = exp_element(&self.group, gc)?;
            let v = tangent_from_coords(&x, yc, Side::Right)?;
            self.translation_deviation(&v, &g, side)
        };
        run().unwrap_or(f64::INFINITY)
    }

    /// Max relative change of `F` under the translation differentials of one
    /// side. Zero up to rounding when `side` matches the metric's own side.
    pub fn verify_translation_invariance(
        &self,
        side: Side,
        samples: usize,
        seed: u64,
    ) -> DeviationReport {
        let stream = sampling::stream::PULLBACK + if side == Side::Left { 0 } else { 100 };
        sampling::max_deviation(samples, seed, stream, |rng, i| {
            let (x, y, g) = self.draw_translation_sample(rng);
            let deviation = self.translation_sample(&x, &y, &g, side);
            Sample {
                deviation,
                witness: Witness::new(i).with("z", &x).with("y", &y).with("g", &g),
            }
        })
    }

    /// Checks invariance under both left and right translations.
    pub fn verify_bi_invariance(&self, samples: usize, seed: u64) -> InvarianceReport {
        let empty = (DeviationReport::empty(), DeviationReport::empty());
        let (left, right) = sharded_reduce(
            samples,
            seed,
            sampling::stream::BI_INVARIANCE,
            empty,
            |rng, i| {
                let (x, y, g) = self.draw_translation_sample(rng);
                let w = Witness::new(i).with("z", &x).with("y", &y).with("g", &g);
                let l = Sample {
                    deviation: self.translation_sample(&x, &y, &g, Side::Left),
                    witness: w.clone(),
                };
                let r = Sample {
                    deviation: self.translation_sample(&x, &y, &g, Side::Right),
                    witness: w,
                };
                (DeviationReport::from(l), DeviationReport::from(r))
            },
            |a, b| (a.0.merge(b.0), a.1.merge(b.1)),
        );
        InvarianceReport { left, right }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceReport {
    pub left: DeviationReport,
    pub right: DeviationReport,
}

impl InvarianceReport {
    pub fn max_deviation(&self) -> f64 {
        self.left.max_deviation.max(self.right.max_deviation)
    }

    pub fn holds(&self, tolerance: f64) -> bool {
        self.left.passes(tolerance) && self.right.passes(tolerance)
    }

    /// Whichever side attains the larger deviation.
    pub fn worst(&self) -> &DeviationReport {
        if self.right.max_deviation > self.left.max_deviation {
            &self.right
        } else {
            &self.left
        }
    }
}

/// Matrix logarithm by inverse scaling and squaring, for elements in the
/// identity component with no eigenvalues on the closed negative real axis.
pub fn matrix_log(x: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let m = x.nrows();
    let id = DMatrix::<f64>::identity(m, m);
    let mut y = x.clone();
    let mut squarings = 0;
    while (&y - &id).norm() > 0.25 {
        y = sqrt_denman_beavers(&y)?;
        squarings += 1;
        if squarings > 60 {
            return None;
        }
    }
    let d = &y - &id;
    let mut power = d.clone();
    let mut log = DMatrix::zeros(m, m);
    for k in 1..=80 {
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        log += &power * (sign / k as f64);
        power = &power * &d;
        if power.norm() < 1e-18 {
            break;
        }
    }
    Some(log * 2f64.powi(squarings))
}

fn sqrt_denman_beavers(x: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let m = x.nrows();
    let mut y = x.clone();
    let mut z = DMatrix::<f64>::identity(m, m);
    for _ in 0..100 {
        let y_inv = y.clone().try_inverse()?;
        let z_inv = z.clone().try_inverse()?;
        let next_y = (&y + z_inv) * 0.5;
        let next_z = (&z + y_inv) * 0.5;
        let step = (&next_y - &y).norm();
        y = next_y;
        z = next_z;
        if step <= 1e-15 * y.norm() {
            return Some(y);
        }
    }
    Some(y)
}
