//! Quotient groups `M = G/H` of left cosets and the Finsler metric induced
//! on them by an invariant metric on `G`.
//!
//! The Lie algebra is split as `g = V + h`, with the subgroup basis first
//! (indices `0..k`) and the complement after (`k..n`). A quotient tangent
//! vector is stored as a coset representative `z` together with its
//! horizontal coordinates `mu` in the invariant frame restricted to `V`. The
//! horizontal lift of `(z, mu)` is `sum_i mu_i X_i(z)` and the induced metric
//! evaluates the upstairs metric on that lift.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::liegroup::{
    algebra_coordinates, exp_element, invariant_field_value, left_translate_diff, matrix_log,
    right_translate_diff, GroupElement, GroupKind, InvariantMetric, MatrixLieGroup, MetricSide,
    Side, TangentVector, MEMBERSHIP_TOLERANCE,
};
use crate::linalg::{check_spd, commutator, flatten, rank, SpanSolver};
use crate::minkowski::MinkowskiNorm;
use crate::sampling::{self, relative_deviation, DeviationReport, Sample, Witness};

/// Threshold for the subalgebra and ideal flags.
pub const IDEAL_TOLERANCE: f64 = 1e-9;
/// Threshold for `V` being the `a`-orthogonal complement of `h`.
pub const ORTHOGONALITY_TOLERANCE: f64 = 1e-10;
/// Two horizontal coordinate vectors are equal within this tolerance.
pub const COORDINATE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdealCheck {
    pub is_subalgebra: bool,
    pub is_ideal: bool,
    /// Largest out-of-span residual of `[E, h_j]` over all basis `E` of `g`.
    pub max_residual: f64,
}

/// Tests `[h, h] ⊆ h` and `[g, h] ⊆ h` on basis commutators.
pub fn check_ideal(group: &MatrixLieGroup, h_basis: &[DMatrix<f64>]) -> Result<IdealCheck> {
    if h_basis.is_empty() {
        return Ok(IdealCheck {
            is_subalgebra: true,
            is_ideal: true,
            max_residual: 0.0,
        });
    }
    let solver = SpanSolver::new(DMatrix::from_columns(
        &h_basis.iter().map(flatten).collect::<Vec<_>>(),
    ))?;
    let residual = |a: &DMatrix<f64>, b: &DMatrix<f64>| solver.solve(&flatten(&commutator(a, b))).1;
    let sub = h_basis
        .iter()
        .flat_map(|a| h_basis.iter().map(move |b| (a, b)))
        .map(|(a, b)| residual(a, b))
        .fold(0.0_f64, f64::max);
    let ideal = group
        .basis()
        .iter()
        .flat_map(|e| h_basis.iter().map(move |b| (e, b)))
        .map(|(e, b)| residual(e, b))
        .fold(0.0_f64, f64::max);
    Ok(IdealCheck {
        is_subalgebra: sub <= IDEAL_TOLERANCE,
        is_ideal: ideal <= IDEAL_TOLERANCE,
        max_residual: ideal.max(sub),
    })
}

/// How to decide whether a group element lies in `H`.
#[derive(Debug, Clone, PartialEq)]
pub enum SubgroupMembership {
    /// `G` intersected with a set of fixed matrix entries `(row, col, value)`.
    Pattern(Vec<(usize, usize, f64)>),
    /// The identity component: `log h` lies in the span of the subgroup basis.
    LogSpan,
}

/// Choice of the complement `V`.
#[derive(Debug, Clone, PartialEq)]
pub enum Complement {
    /// The orthogonal complement of `h` with respect to an SPD form on
    /// algebra coordinates.
    Orthogonal(DMatrix<f64>),
    /// Explicit algebra coordinate vectors.
    Basis(Vec<DVector<f64>>),
}

impl Complement {
    pub fn orthogonal_identity(n: usize) -> Self {
        Complement::Orthogonal(DMatrix::identity(n, n))
    }
}

/// A named subgroup: `(name, basis indices, fixed entries)`.
type CatalogEntry = (&'static str, Vec<usize>, Vec<(usize, usize, f64)>);

fn catalog_entries(kind: GroupKind) -> Vec<CatalogEntry> {
    match kind {
        GroupKind::Heisenberg3 => vec![
            ("center", vec![2], vec![(0, 1, 0.0), (1, 2, 0.0)]),
            ("line_e1", vec![0], vec![(1, 2, 0.0), (0, 2, 0.0)]),
        ],
        GroupKind::Ut3Pos => vec![
            (
                "unipotent",
                vec![3, 4, 5],
                vec![(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0)],
            ),
            (
                "diagonal",
                vec![0, 1, 2],
                vec![(0, 1, 0.0), (1, 2, 0.0), (0, 2, 0.0)],
            ),
        ],
        GroupKind::Rn(n) => vec![("first_axis", vec![0], (1..n).map(|i| (i, n, 0.0)).collect())],
        GroupKind::Se2 => vec![
            (
                "translations",
                vec![1, 2],
                vec![(0, 0, 1.0), (0, 1, 0.0), (1, 0, 0.0), (1, 1, 1.0)],
            ),
            ("rotations", vec![0], vec![(0, 2, 0.0), (1, 2, 0.0)]),
        ],
    }
}

pub fn catalog_subgroup_names(kind: GroupKind) -> Vec<&'static str> {
    catalog_entries(kind)
        .into_iter()
        .map(|(name, _, _)| name)
        .collect()
}

fn standard_vector(n: usize, i: usize) -> DVector<f64> {
    let mut e = DVector::zeros(n);
    e[i] = 1.0;
    e
}

/// The decomposition `g = V + h` for a connected subgroup `H`.
#[derive(Debug, Clone)]
pub struct SubgroupSplit {
    group: Arc<MatrixLieGroup>,
    name: String,
    h_coords: Vec<DVector<f64>>,
    v_coords: Vec<DVector<f64>>,
    h_basis: Vec<DMatrix<f64>>,
    v_basis: Vec<DMatrix<f64>>,
    /// Maps algebra coordinates to split coordinates (h part, then V part).
    to_split: DMatrix<f64>,
    membership: SubgroupMembership,
    ideal: IdealCheck,
}

impl SubgroupSplit {
    pub fn new(
        group: &Arc<MatrixLieGroup>,
        name: impl Into<String>,
        h_coords: Vec<DVector<f64>>,
        complement: &Complement,
        membership: SubgroupMembership,
    ) -> Result<Self> {
        let n = group.dim();
        let k = h_coords.len();
        if let Some(bad) = h_coords.iter().find(|c| c.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: bad.len(),
            });
        }
        let h_mat = DMatrix::from_columns(&h_coords);
        if k > 0 && rank(&h_mat, 1e-10) < k {
            return Err(Error::InvalidArgument(
                "subgroup basis is linearly dependent".into(),
            ));
        }
        let v_coords = match complement {
            Complement::Orthogonal(form) => orthogonal_complement(&h_coords, form, n)?,
            Complement::Basis(vs) => {
                if let Some(bad) = vs.iter().find(|c| c.len() != n) {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: bad.len(),
                    });
                }
                if vs.len() != n - k {
                    return Err(Error::NotComplementary(format!(
                        "complement has {} vectors, need {}",
                        vs.len(),
                        n - k
                    )));
                }
                vs.clone()
            }
        };
        let all: Vec<DVector<f64>> = h_coords.iter().chain(v_coords.iter()).cloned().collect();
        let joint = DMatrix::from_columns(&all);
        if rank(&joint, 1e-10) < n {
            return Err(Error::NotComplementary(
                "subgroup and complement bases do not span the algebra".into(),
            ));
        }
        let to_split = joint
            .try_inverse()
            .ok_or_else(|| Error::NotComplementary("split basis is singular".into()))?;
        let h_basis = h_coords
            .iter()
            .map(|c| group.algebra_matrix(c))
            .collect::<Result<Vec<_>>>()?;
        let v_basis = v_coords
            .iter()
            .map(|c| group.algebra_matrix(c))
            .collect::<Result<Vec<_>>>()?;
        let ideal = check_ideal(group, &h_basis)?;
        Ok(Self {
            group: Arc::clone(group),
            name: name.into(),
            h_coords,
            v_coords,
            h_basis,
            v_basis,
            to_split,
            membership,
            ideal,
        })
    }

    /// A catalog subgroup by name, e.g. `"center"` of `heisenberg3`.
    pub fn named(group: &Arc<MatrixLieGroup>, name: &str, complement: &Complement) -> Result<Self> {
        let (_, indices, pattern) = catalog_entries(group.kind())
            .into_iter()
            .find(|(n, _, _)| *n == name)
            .ok_or_else(|| {
                Error::UnknownCatalog(format!("{name} (subgroup of {})", group.name()))
            })?;
        let n = group.dim();
        let h = indices.iter().map(|&i| standard_vector(n, i)).collect();
        Self::new(
            group,
            name,
            h,
            complement,
            SubgroupMembership::Pattern(pattern),
        )
    }

    /// The connected subgroup generated by the given algebra basis elements.
    pub fn from_indices(
        group: &Arc<MatrixLieGroup>,
        indices: &[usize],
        complement: &Complement,
    ) -> Result<Self> {
        let n = group.dim();
        if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
            return Err(Error::InvalidArgument(format!(
                "basis index {bad} out of range for dimension {n}"
            )));
        }
        let h = indices.iter().map(|&i| standard_vector(n, i)).collect();
        Self::new(
            group,
            format!("indices{indices:?}"),
            h,
            complement,
            SubgroupMembership::LogSpan,
        )
    }

    pub fn group(&self) -> &Arc<MatrixLieGroup> {
        &self.group
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Subgroup dimension `k`.
    pub fn k(&self) -> usize {
        self.h_coords.len()
    }

    pub fn quotient_dim(&self) -> usize {
        self.v_coords.len()
    }

    pub fn h_basis(&self) -> &[DMatrix<f64>] {
        &self.h_basis
    }

    pub fn v_basis(&self) -> &[DMatrix<f64>] {
        &self.v_basis
    }

    pub fn h_coords(&self) -> &[DVector<f64>] {
        &self.h_coords
    }

    pub fn v_coords(&self) -> &[DVector<f64>] {
        &self.v_coords
    }

    pub fn ideal_check(&self) -> IdealCheck {
        self.ideal
    }

    pub fn is_subalgebra(&self) -> bool {
        self.ideal.is_subalgebra
    }

    pub fn is_ideal(&self) -> bool {
        self.ideal.is_ideal
    }

    /// Membership of `h` in `H`.
    pub fn contains(&self, h: &GroupElement) -> bool {
        if h.group().as_ref() != self.group.as_ref() || !h.is_valid() {
            return false;
        }
        let x = h.matrix();
        match &self.membership {
            SubgroupMembership::Pattern(entries) => entries
                .iter()
                .all(|&(i, j, v)| (x[(i, j)] - v).abs() <= MEMBERSHIP_TOLERANCE),
            SubgroupMembership::LogSpan => {
                let Some(log) = matrix_log(x) else {
                    return false;
                };
                let (c, r) = self.group.algebra_solve(&log);
                let scale = log.norm().max(1.0);
                if r > 1e-8 * scale {
                    return false;
                }
                let split = &self.to_split * c;
                split.rows(self.k(), self.quotient_dim()).amax() <= 1e-8 * scale
            }
        }
    }

    /// `exp(sum_j w_j h_j)`.
    pub fn subgroup_element(&self, weights: &DVector<f64>) -> Result<GroupElement> {
        exp_element(&self.group, &self.h_algebra_coords(weights)?)
    }

    fn h_algebra_coords(&self, weights: &DVector<f64>) -> Result<DVector<f64>> {
        if weights.len() != self.k() {
            return Err(Error::DimensionMismatch {
                expected: self.k(),
                got: weights.len(),
            });
        }
        Ok(self
            .h_coords
            .iter()
            .zip(weights.iter())
            .fold(DVector::zeros(self.group.dim()), |acc, (h, w)| acc + h * *w))
    }

    fn v_algebra_coords(&self, mu: &DVector<f64>) -> Result<DVector<f64>> {
        if mu.len() != self.quotient_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.quotient_dim(),
                got: mu.len(),
            });
        }
        Ok(self
            .v_coords
            .iter()
            .zip(mu.iter())
            .fold(DVector::zeros(self.group.dim()), |acc, (v, m)| acc + v * *m))
    }

    /// The tangent vector `z * sum_j w_j h_j` to the coset `zH` at `z`.
    pub fn coset_tangent(&self, z: &GroupElement, weights: &DVector<f64>) -> Result<TangentVector> {
        let e = self
            .group
            .algebra_matrix(&self.h_algebra_coords(weights)?)?;
        invariant_field_value(&e, z, Side::Left)
    }

    /// `X_{k+1}(z), ..., X_n(z)` for the frame of the given side.
    pub fn horizontal_space_frame(
        &self,
        z: &GroupElement,
        side: Side,
    ) -> Result<Vec<TangentVector>> {
        self.v_basis
            .iter()
            .map(|e| invariant_field_value(e, z, side))
            .collect()
    }

    /// Splits `v` along the invariant frame into its `h` and `V` parts.
    pub fn split_tangent(&self, v: &TangentVector, side: Side) -> Result<TangentSplit> {
        let c = algebra_coordinates(v, side)?;
        let s = &self.to_split * c;
        let k = self.k();
        let weights = s.rows(0, k).into_owned();
        let mu = s.rows(k, self.quotient_dim()).into_owned();
        let z = v.base();
        let vertical = invariant_field_value(
            &self
                .group
                .algebra_matrix(&self.h_algebra_coords(&weights)?)?,
            z,
            side,
        )?;
        let horizontal = invariant_field_value(
            &self.group.algebra_matrix(&self.v_algebra_coords(&mu)?)?,
            z,
            side,
        )?;
        Ok(TangentSplit {
            vertical,
            horizontal,
            mu,
        })
    }

    /// Coordinate realization of `T_z p(v)`.
    pub fn project_tangent(&self, v: &TangentVector, side: Side) -> Result<QuotientTangent> {
        let s = self.split_tangent(v, side)?;
        Ok(QuotientTangent {
            representative: v.base().clone(),
            mu: s.mu,
            side,
        })
    }

    /// The horizontal lift `sum_i mu_i X_i(z)`.
    pub fn lift(&self, q: &QuotientTangent) -> Result<TangentVector> {
        let e = self.group.algebra_matrix(&self.v_algebra_coords(&q.mu)?)?;
        invariant_field_value(&e, &q.representative, q.side)
    }

    /// Moves `q` to the representative `z h` of the same coset, keeping `mu`.
    pub fn transport_representative(
        &self,
        q: &QuotientTangent,
        h: &GroupElement,
    ) -> Result<QuotientTangent> {
        if !self.contains(h) {
            return Err(Error::NotInSubgroup);
        }
        Ok(QuotientTangent {
            representative: q.representative.compose(h)?,
            mu: q.mu.clone(),
            side: q.side,
        })
    }

    /// Whether two quotient tangents denote the same vector of `M`:
    /// `z1^-1 z2` in `H` and equal coordinates.
    pub fn same_tangent(&self, a: &QuotientTangent, b: &QuotientTangent) -> bool {
        if a.side != b.side || a.mu.len() != b.mu.len() {
            return false;
        }
        let Ok(rel) = a.representative.inverse().compose(&b.representative) else {
            return false;
        };
        self.contains(&rel) && (&a.mu - &b.mu).amax() <= COORDINATE_TOLERANCE
    }

    /// Largest `|v_i^T a h_j|`, normalized by the a-lengths.
    pub fn orthogonality_defect(&self, a: &DMatrix<f64>) -> f64 {
        let len = |x: &DVector<f64>| x.dot(&(a * x)).sqrt();
        self.v_coords
            .iter()
            .flat_map(|v| self.h_coords.iter().map(move |h| (v, h)))
            .map(|(v, h)| v.dot(&(a * h)).abs() / (len(v) * len(h)))
            .fold(0.0, f64::max)
    }

    fn sample_quotient<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        sampling::uniform_vector(rng, self.quotient_dim(), -1.0, 1.0)
    }

    fn sample_weights<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        sampling::uniform_vector(rng, self.k(), -1.0, 1.0)
    }
}

/// Greedy basis of the `form`-orthogonal complement of `span(h)`: the
/// projections of `e_1, ..., e_n` onto it, kept in index order while they
/// stay independent.
fn orthogonal_complement(
    h: &[DVector<f64>],
    form: &DMatrix<f64>,
    n: usize,
) -> Result<Vec<DVector<f64>>> {
    if form.shape() != (n, n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: form.nrows(),
        });
    }
    check_spd(form)?;
    let id = DMatrix::<f64>::identity(n, n);
    let projector = if h.is_empty() {
        DMatrix::zeros(n, n)
    } else {
        let hm = DMatrix::from_columns(h);
        let gram = hm.transpose() * form * &hm;
        let gram_inv = gram
            .try_inverse()
            .ok_or_else(|| Error::InvalidArgument("singular subgroup Gram matrix".into()))?;
        &hm * gram_inv * hm.transpose() * form
    };
    let q = id - projector;
    let mut chosen: Vec<DVector<f64>> = h.to_vec();
    let mut out = Vec::new();
    for i in 0..n {
        if out.len() == n - h.len() {
            break;
        }
        let cand = q.column(i).into_owned();
        let mut trial = chosen.clone();
        trial.push(cand.clone());
        if rank(&DMatrix::from_columns(&trial), 1e-10) == trial.len() {
            chosen.push(cand.clone());
            out.push(cand);
        }
    }
    if out.len() != n - h.len() {
        return Err(Error::Internal(
            "orthogonal complement construction failed".into(),
        ));
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct TangentSplit {
    pub vertical: TangentVector,
    pub horizontal: TangentVector,
    pub mu: DVector<f64>,
}

/// A tangent vector of `M` in coordinates: representative `z` and
/// horizontal coordinates `mu` in the frame of `side`.
#[derive(Debug, Clone)]
pub struct QuotientTangent {
    pub representative: GroupElement,
    pub mu: DVector<f64>,
    pub side: Side,
}

impl QuotientTangent {
    pub fn new(representative: GroupElement, mu: DVector<f64>, side: Side) -> Self {
        Self {
            representative,
            mu,
            side,
        }
    }
}

/// The Finsler metric on `G/H` obtained by evaluating the upstairs metric on
/// horizontal lifts.
#[derive(Debug, Clone)]
pub struct InducedMetric {
    upstairs: InvariantMetric,
    split: SubgroupSplit,
}

impl InducedMetric {
    /// Requires `h` to be an ideal.
    pub fn new(upstairs: InvariantMetric, split: SubgroupSplit) -> Result<Self> {
        if !split.is_ideal() {
            return Err(Error::NotIdeal {
                residual: split.ideal.max_residual,
            });
        }
        Self::without_normality_check(upstairs, split)
    }

    /// Same construction without the ideal requirement, so that the
    /// verification routines can document what breaks for non-normal `H`.
    pub fn without_normality_check(
        upstairs: InvariantMetric,
        split: SubgroupSplit,
    ) -> Result<Self> {
        if upstairs.group().as_ref() != split.group.as_ref() {
            return Err(Error::GroupMismatch {
                left: upstairs.group().name().into(),
                right: split.group.name().into(),
            });
        }
        Ok(Self { upstairs, split })
    }

    pub fn upstairs(&self) -> &InvariantMetric {
        &self.upstairs
    }

    pub fn split(&self) -> &SubgroupSplit {
        &self.split
    }

    pub fn frame_side(&self) -> Side {
        self.upstairs.side().frame_side()
    }

    /// `F(X) := F(Z)` with `Z` the horizontal lift of `q`.
    pub fn induced_eval(&self, q: &QuotientTangent) -> Result<f64> {
        if q.side != self.frame_side() {
            return Err(Error::SideMismatch(format!(
                "{} quotient tangent under a {}-frame induced metric",
                q.side,
                self.frame_side()
            )));
        }
        if q.representative.group().as_ref() != self.split.group.as_ref() {
            return Err(Error::GroupMismatch {
                left: q.representative.group().name().into(),
                right: self.split.group.name().into(),
            });
        }
        self.upstairs.eval(&self.split.lift(q)?)
    }

    /// Representative independence for one sample.
    ///
    /// The quotient vector `X = T p(Z1)` with `Z1` the lift of `(z1, mu)` is
    /// re-expressed at `z2 = z1 h` twice: by keeping `mu`, and by projecting
    /// an independent preimage of `X` at `z2`, namely `Z1 h` (valid since
    /// `p o R_h = p`) plus a vector tangent to the coset `z2 H`. Also compares
    /// the projected frame coordinates of `X_i(z2)` and `X_i(z1) h`.
    pub fn well_defined_deviation(
        &self,
        z1_coords: &DVector<f64>,
        h_weights: &DVector<f64>,
        vertical_weights: &DVector<f64>,
        mu: &DVector<f64>,
    ) -> Result<f64> {
        let side = self.frame_side();
        let split = &self.split;
        let z1 = exp_element(split.group(), z1_coords)?;
        let h = split.subgroup_element(h_weights)?;
        let q1 = QuotientTangent::new(z1.clone(), mu.clone(), side);
        let f1 = self.induced_eval(&q1)?;

        let q2 = split.transport_representative(&q1, &h)?;
        let z2 = q2.representative.clone();
        let direct = relative_deviation(f1, self.induced_eval(&q2)?);

        let preimage = right_translate_diff(&h, &split.lift(&q1)?)?
            .add(&split.coset_tangent(&z2, vertical_weights)?)?;
        let reprojected = split.project_tangent(&preimage, side)?;
        let via_preimage = relative_deviation(f1, self.induced_eval(&reprojected)?);

        let mut frame_gap = 0.0_f64;
        let frame1 = split.horizontal_space_frame(&z1, side)?;
        let frame2 = split.horizontal_space_frame(&z2, side)?;
        for (x1, x2) in frame1.iter().zip(&frame2) {
            let a = split
                .project_tangent(&right_translate_diff(&h, x1)?, side)?
                .mu;
            let b = split.project_tangent(x2, side)?.mu;
            frame_gap = frame_gap.max((a - b).amax());
        }
        Ok(direct.max(via_preimage).max(frame_gap))
    }

    /// Samples `z1` in `G`, `h` in `H`, `mu`, and a coset-tangent
    /// perturbation; reports the worst representative dependence.
    pub fn verify_well_defined(&self, samples: usize, seed: u64) -> DeviationReport {
        let group = self.split.group();
        sampling::max_deviation(samples, seed, sampling::stream::WELL_DEFINED, |rng, i| {
            let z = group.sample_coords(rng);
            let h = self.split.sample_weights(rng);
            let w = self.split.sample_weights(rng);
            let mu = self.split.sample_quotient(rng);
            let deviation = self
                .well_defined_deviation(&z, &h, &w, &mu)
                .unwrap_or(f64::INFINITY);
            Sample {
                deviation,
                witness: Witness::new(i)
                    .with("z", &z)
                    .with("h", &h)
                    .with("vertical", &w)
                    .with("mu", &mu),
            }
        })
    }

    /// Relative change of the induced norm under `(zH) g = zgH` (right) or
    /// `g (zH) = gzH` (left), for one sample.
    pub fn action_deviation(
        &self,
        action: Side,
        z_coords: &DVector<f64>,
        g_coords: &DVector<f64>,
        mu: &DVector<f64>,
    ) -> Result<f64> {
        let side = self.frame_side();
        let z = exp_element(self.split.group(), z_coords)?;
        let g = exp_element(self.split.group(), g_coords)?;
        let q = QuotientTangent::new(z, mu.clone(), side);
        let lifted = self.split.lift(&q)?;
        let moved = match action {
            Side::Right => right_translate_diff(&g, &lifted)?,
            Side::Left => left_translate_diff(&g, &lifted)?,
        };
        let q_moved = self.split.project_tangent(&moved, side)?;
        Ok(relative_deviation(
            self.induced_eval(&q)?,
            self.induced_eval(&q_moved)?,
        ))
    }

    /// Invariance of the induced metric under the natural action of one side.
    pub fn verify_induced_invariance(
        &self,
        action: Side,
        samples: usize,
        seed: u64,
    ) -> DeviationReport {
        let group = self.split.group();
        let stream = match action {
            Side::Left => sampling::stream::INVARIANCE_LEFT,
            Side::Right => sampling::stream::INVARIANCE_RIGHT,
        };
        sampling::max_deviation(samples, seed, stream, |rng, i| {
            let z = group.sample_coords(rng);
            let g = group.sample_coords(rng);
            let mu = self.split.sample_quotient(rng);
            let deviation = self
                .action_deviation(action, &z, &g, &mu)
                .unwrap_or(f64::INFINITY);
            Sample {
                deviation,
                witness: Witness::new(i).with("z", &z).with("g", &g).with("mu", &mu),
            }
        })
    }
}

/// Compares the induced metric of a right-invariant `euclidean(a)` with the
/// Riemannian quotient construction: the `a`-length of the `a`-orthogonal
/// projection of a tangent vector's right-frame coordinates off `h`.
pub fn verify_riemannian_compatibility(
    split: &SubgroupSplit,
    a: &DMatrix<f64>,
    samples: usize,
    seed: u64,
) -> Result<DeviationReport> {
    let group = split.group();
    let n = group.dim();
    if a.shape() != (n, n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.nrows(),
        });
    }
    let norm = MinkowskiNorm::euclidean(a.clone())?;
    let residual = split.orthogonality_defect(a);
    if residual > ORTHOGONALITY_TOLERANCE {
        return Err(Error::NotOrthogonal { residual });
    }
    let upstairs = InvariantMetric::new(group, norm, MetricSide::Right)?;
    let induced = InducedMetric::without_normality_check(upstairs, split.clone())?;

    let projector = if split.k() == 0 {
        DMatrix::zeros(n, n)
    } else {
        let hm = DMatrix::from_columns(split.h_coords());
        let gram = (hm.transpose() * a * &hm)
            .try_inverse()
            .ok_or_else(|| Error::InvalidArgument("singular subgroup Gram matrix".into()))?;
        &hm * gram * hm.transpose() * a
    };
    let orth = DMatrix::<f64>::identity(n, n) - projector;

    let sample = |z_coords: &DVector<f64>, c: &DVector<f64>| -> Result<f64> {
        let z = exp_element(group, z_coords)?;
        let v = invariant_field_value(&group.algebra_matrix(c)?, &z, Side::Right)?;
        let q = split.project_tangent(&v, Side::Right)?;
        let induced_value = induced.induced_eval(&q)?;
        let perp = &orth * c;
        let oracle = perp.dot(&(a * &perp)).max(0.0).sqrt();
        Ok(relative_deviation(induced_value, oracle))
    };
    Ok(sampling::max_deviation(
        samples,
        seed,
        sampling::stream::RIEMANN,
        |rng, i| {
            let z = group.sample_coords(rng);
            let c = group.sample_coords(rng);
            let deviation = sample(&z, &c).unwrap_or(f64::INFINITY);
            Sample {
                deviation,
                witness: Witness::new(i).with("z", &z).with("y", &c),
            }
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liegroup::tangent_from_coords;
    use approx::assert_relative_eq;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    fn heis_center() -> SubgroupSplit {
        let g = MatrixLieGroup::heisenberg3();
        SubgroupSplit::named(&g, "center", &Complement::orthogonal_identity(3)).unwrap()
    }

    fn induced(split: &SubgroupSplit, norm: MinkowskiNorm, side: MetricSide) -> InducedMetric {
        let up = InvariantMetric::new(split.group(), norm, side).unwrap();
        InducedMetric::without_normality_check(up, split.clone()).unwrap()
    }

    #[test]
    fn catalog_splits_have_expected_flags() {
        let cases = [
            (MatrixLieGroup::heisenberg3(), "center", true),
            (MatrixLieGroup::heisenberg3(), "line_e1", false),
            (MatrixLieGroup::ut3pos(), "unipotent", true),
            (MatrixLieGroup::ut3pos(), "diagonal", false),
            (MatrixLieGroup::rn(3), "first_axis", true),
            (MatrixLieGroup::se2(), "translations", true),
            (MatrixLieGroup::se2(), "rotations", false),
        ];
        for (g, name, ideal) in cases {
            let s =
                SubgroupSplit::named(&g, name, &Complement::orthogonal_identity(g.dim())).unwrap();
            assert!(s.is_subalgebra(), "{name}");
            assert_eq!(s.is_ideal(), ideal, "{name}");
            assert_eq!(s.k() + s.quotient_dim(), g.dim());
        }
    }

    #[test]
    fn check_ideal_examples() {
        let g = MatrixLieGroup::heisenberg3();
        let center = check_ideal(&g, &[g.basis()[2].clone()]).unwrap();
        assert_eq!(
            (center.is_subalgebra, center.is_ideal, center.max_residual),
            (true, true, 0.0)
        );
        let line = check_ideal(&g, &[g.basis()[0].clone()]).unwrap();
        assert!(line.is_subalgebra && !line.is_ideal);
        assert_relative_eq!(line.max_residual, 1.0, epsilon = 1e-12);
        let rn = MatrixLieGroup::rn(4);
        let any = check_ideal(&rn, &[rn.basis()[1].clone() + rn.basis()[3].clone() * 2.0]).unwrap();
        assert_eq!(
            (any.is_subalgebra, any.is_ideal, any.max_residual),
            (true, true, 0.0)
        );
        let se2 = MatrixLieGroup::se2();
        let bad = check_ideal(
            &se2,
            &[
                se2.basis()[0].clone() + se2.basis()[1].clone(),
                se2.basis()[2].clone(),
            ],
        )
        .unwrap();
        assert!(!bad.is_subalgebra);
    }

    #[test]
    fn orthogonal_complement_is_canonical() {
        let s = heis_center();
        assert_eq!(s.v_coords(), &[v(&[1.0, 0.0, 0.0]), v(&[0.0, 1.0, 0.0])]);
        let g = MatrixLieGroup::heisenberg3();
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 0.0, 0.5, 0.0, 1.0, 0.3, 0.5, 0.3, 3.0]);
        let s = SubgroupSplit::named(&g, "center", &Complement::Orthogonal(a.clone())).unwrap();
        assert!(s.orthogonality_defect(&a) < 1e-14);
        assert!(s.orthogonality_defect(&DMatrix::identity(3, 3)) > 1e-3);
    }

    #[test]
    fn complement_must_be_complementary() {
        let g = MatrixLieGroup::heisenberg3();
        let bad = Complement::Basis(vec![v(&[1.0, 0.0, 0.0]), v(&[1.0, 0.0, 1.0])]);
        assert!(matches!(
            SubgroupSplit::named(&g, "center", &bad),
            Err(Error::NotComplementary(_))
        ));
        let short = Complement::Basis(vec![v(&[1.0, 0.0, 0.0])]);
        assert!(matches!(
            SubgroupSplit::named(&g, "center", &short),
            Err(Error::NotComplementary(_))
        ));
        let skew = Complement::Basis(vec![v(&[1.0, 0.0, 1.0]), v(&[0.0, 1.0, -2.0])]);
        assert!(SubgroupSplit::named(&g, "center", &skew).is_ok());
    }

    #[test]
    fn horizontal_frame_examples() {
        let s = heis_center();
        let g = s.group().clone();
        let e = GroupElement::identity(&g);
        let frame = s.horizontal_space_frame(&e, Side::Right).unwrap();
        assert_eq!(frame[0].matrix(), &g.basis()[0]);
        assert_eq!(frame[1].matrix(), &g.basis()[1]);

        let z = exp_element(&g, &v(&[1.0, 0.0, 0.0])).unwrap();
        let frame = s.horizontal_space_frame(&z, Side::Right).unwrap();
        assert_eq!(frame[0].matrix(), &(&g.basis()[0] * z.matrix()));
        assert_eq!(frame[1].matrix(), &(&g.basis()[1] * z.matrix()));

        let mut rng = sampling::shard_rng(1, 0, 0);
        for _ in 0..100 {
            let z = exp_element(&g, &g.sample_coords(&mut rng)).unwrap();
            let frame = s.horizontal_space_frame(&z, Side::Right).unwrap();
            let cols: Vec<_> = frame.iter().map(|t| flatten(t.matrix())).collect();
            assert_eq!(rank(&DMatrix::from_columns(&cols), 1e-10), 2);
        }
    }

    #[test]
    fn split_tangent_examples() {
        let s = heis_center();
        let g = s.group().clone();
        let e = GroupElement::identity(&g);
        let v0 = TangentVector::new(
            e.clone(),
            &g.basis()[0] * 2.0 + &g.basis()[1] * 3.0 + &g.basis()[2] * 7.0,
        )
        .unwrap();
        let sp = s.split_tangent(&v0, Side::Right).unwrap();
        assert_eq!(sp.vertical.matrix(), &(&g.basis()[2] * 7.0));
        assert_eq!(
            sp.horizontal.matrix(),
            &(&g.basis()[0] * 2.0 + &g.basis()[1] * 3.0)
        );
        assert_eq!(sp.mu, v(&[2.0, 3.0]));

        let hz = TangentVector::new(e, &g.basis()[0] * 2.0).unwrap();
        let sp = s.split_tangent(&hz, Side::Right).unwrap();
        assert_eq!(sp.vertical.matrix().amax(), 0.0);
        assert_eq!(sp.horizontal.matrix(), hz.matrix());
    }

    #[test]
    fn split_reconstructs_random_vectors() {
        for s in [
            heis_center(),
            SubgroupSplit::named(
                &MatrixLieGroup::ut3pos(),
                "unipotent",
                &Complement::orthogonal_identity(6),
            )
            .unwrap(),
        ] {
            let g = s.group().clone();
            let mut rng = sampling::shard_rng(4, 0, 0);
            for _ in 0..1000 {
                let z = exp_element(&g, &g.sample_coords(&mut rng)).unwrap();
                let t = tangent_from_coords(&z, &g.sample_coords(&mut rng), Side::Right).unwrap();
                for side in [Side::Left, Side::Right] {
                    let sp = s.split_tangent(&t, side).unwrap();
                    let sum = sp.vertical.add(&sp.horizontal).unwrap();
                    assert!((sum.matrix() - t.matrix()).amax() <= 1e-10);
                }
            }
        }
    }

    #[test]
    fn project_tangent_examples() {
        let s = heis_center();
        let g = s.group().clone();
        let e = GroupElement::identity(&g);
        let q = s
            .project_tangent(
                &TangentVector::new(
                    e,
                    &g.basis()[0] * 2.0 + &g.basis()[1] * 3.0 + &g.basis()[2] * 7.0,
                )
                .unwrap(),
                Side::Right,
            )
            .unwrap();
        assert_eq!(q.mu, v(&[2.0, 3.0]));

        let z = exp_element(&g, &v(&[0.4, -0.9, 0.2])).unwrap();
        let vertical = s.coset_tangent(&z, &v(&[1.7])).unwrap();
        let q = s.project_tangent(&vertical, Side::Right).unwrap();
        assert!(q.mu.amax() <= 1e-15);

        let mut rng = sampling::shard_rng(8, 0, 0);
        for _ in 0..100 {
            let z = exp_element(&g, &g.sample_coords(&mut rng)).unwrap();
            let a = tangent_from_coords(&z, &g.sample_coords(&mut rng), Side::Right).unwrap();
            let b = tangent_from_coords(&z, &g.sample_coords(&mut rng), Side::Right).unwrap();
            let (alpha, beta) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let combo = a.scale(alpha).add(&b.scale(beta)).unwrap();
            let lhs = s.project_tangent(&combo, Side::Right).unwrap().mu;
            let rhs = s.project_tangent(&a, Side::Right).unwrap().mu * alpha
                + s.project_tangent(&b, Side::Right).unwrap().mu * beta;
            assert!((lhs - rhs).amax() <= 1e-10);
        }
    }

    #[test]
    fn lift_examples() {
        let s = heis_center();
        let g = s.group().clone();
        let z = exp_element(&g, &v(&[0.3, 0.1, -0.7])).unwrap();
        let zero = s
            .lift(&QuotientTangent::new(
                z.clone(),
                v(&[0.0, 0.0]),
                Side::Right,
            ))
            .unwrap();
        assert_eq!(zero.matrix().amax(), 0.0);
        for side in [Side::Left, Side::Right] {
            let q = QuotientTangent::new(z.clone(), v(&[2.0, -3.0]), side);
            let l = s.lift(&q).unwrap();
            let back = s.project_tangent(&l, side).unwrap();
            assert!((back.mu - &q.mu).amax() <= 1e-12);
            assert!(s.split_tangent(&l, side).unwrap().vertical.matrix().amax() <= 1e-12);
        }
    }

    #[test]
    fn transport_examples() {
        let s = heis_center();
        let g = s.group().clone();
        let e = GroupElement::identity(&g);
        let q = QuotientTangent::new(e.clone(), v(&[2.0, 3.0]), Side::Right);
        let same = s.transport_representative(&q, &e).unwrap();
        assert_eq!(same.mu, q.mu);
        assert_eq!(same.representative.matrix(), e.matrix());

        let h = exp_element(&g, &v(&[0.0, 0.0, 5.0])).unwrap();
        let moved = s.transport_representative(&q, &h).unwrap();
        assert_eq!(moved.mu, v(&[2.0, 3.0]));
        assert_eq!(moved.representative.matrix(), h.matrix());
        assert!(s.same_tangent(&q, &moved));

        let outside = exp_element(&g, &v(&[1.0, 0.0, 0.0])).unwrap();
        let err = s.transport_representative(&q, &outside).unwrap_err();
        assert_eq!(
            err.to_string(),
            "representative change must stay in the coset"
        );
        assert!(!s.same_tangent(
            &q,
            &QuotientTangent::new(outside, q.mu.clone(), Side::Right)
        ));
    }

    #[test]
    fn transport_agrees_with_right_translated_lift() {
        let s = SubgroupSplit::named(
            &MatrixLieGroup::ut3pos(),
            "unipotent",
            &Complement::orthogonal_identity(6),
        )
        .unwrap();
        let g = s.group().clone();
        let mut rng = sampling::shard_rng(6, 0, 0);
        for _ in 0..200 {
            let z1 = exp_element(&g, &g.sample_coords(&mut rng)).unwrap();
            let h = s
                .subgroup_element(&sampling::uniform_vector(&mut rng, 3, -1.0, 1.0))
                .unwrap();
            let q = QuotientTangent::new(
                z1,
                sampling::uniform_vector(&mut rng, 3, -1.0, 1.0),
                Side::Right,
            );
            let translated = right_translate_diff(&h, &s.lift(&q).unwrap()).unwrap();
            let other = s
                .lift(&s.transport_representative(&q, &h).unwrap())
                .unwrap();
            let diff = s
                .split_tangent(&translated.sub(&other).unwrap(), Side::Right)
                .unwrap();
            assert!(diff.mu.amax() <= 1e-10);
        }
    }

    #[test]
    fn induced_eval_examples() {
        let s = heis_center();
        let g = s.group().clone();
        let im = InducedMetric::new(
            InvariantMetric::new(&g, MinkowskiNorm::euclidean_identity(3), MetricSide::Right)
                .unwrap(),
            s.clone(),
        )
        .unwrap();
        for zc in [
            v(&[0.0, 0.0, 0.0]),
            v(&[0.5, -0.2, 0.9]),
            v(&[0.0, 0.0, 5.0]),
        ] {
            let z = exp_element(&g, &zc).unwrap();
            let value = im
                .induced_eval(&QuotientTangent::new(
                    z.clone(),
                    v(&[2.0, 3.0]),
                    Side::Right,
                ))
                .unwrap();
            assert_relative_eq!(value, 13f64.sqrt(), epsilon = 1e-14);
            assert_eq!(
                im.induced_eval(&QuotientTangent::new(z, v(&[0.0, 0.0]), Side::Right))
                    .unwrap(),
                0.0
            );
        }
        let randers = MinkowskiNorm::randers(DMatrix::identity(3, 3), v(&[0.5, 0.0, 0.0])).unwrap();
        let im = induced(&s, randers, MetricSide::Right);
        let e = GroupElement::identity(&g);
        let value = im
            .induced_eval(&QuotientTangent::new(
                e.clone(),
                v(&[2.0, 3.0]),
                Side::Right,
            ))
            .unwrap();
        assert_relative_eq!(value, 13f64.sqrt() + 1.0, epsilon = 1e-14);

        let err = im
            .induced_eval(&QuotientTangent::new(e, v(&[2.0, 3.0]), Side::Left))
            .unwrap_err();
        assert!(matches!(err, Error::SideMismatch(_)));
    }

    #[test]
    fn induced_requires_ideal() {
        let g = MatrixLieGroup::se2();
        let s = SubgroupSplit::named(&g, "rotations", &Complement::orthogonal_identity(3)).unwrap();
        let up = InvariantMetric::new(&g, MinkowskiNorm::euclidean_identity(3), MetricSide::Right)
            .unwrap();
        assert!(matches!(
            InducedMetric::new(up, s),
            Err(Error::NotIdeal { .. })
        ));
    }

    #[test]
    fn well_defined_with_trivial_h() {
        let im = induced(&heis_center(), MinkowskiNorm::quartic(3), MetricSide::Right);
        let z = v(&[0.3, -0.6, 0.8]);
        let mu = v(&[0.4, -0.1]);
        // Representative unchanged, no coset perturbation.
        let split = im.split();
        let z1 = exp_element(split.group(), &z).unwrap();
        let q1 = QuotientTangent::new(z1, mu.clone(), Side::Right);
        let e = GroupElement::identity(split.group());
        let q2 = split.transport_representative(&q1, &e).unwrap();
        assert_eq!(im.induced_eval(&q1).unwrap(), im.induced_eval(&q2).unwrap());
        assert!(
            im.well_defined_deviation(&z, &v(&[0.0]), &v(&[0.0]), &mu)
                .unwrap()
                <= 1e-15
        );
    }

    #[test]
    fn well_defined_for_ideal_fails_for_rotations() {
        let good = induced(
            &heis_center(),
            MinkowskiNorm::euclidean_identity(3),
            MetricSide::Right,
        );
        assert!(good.verify_well_defined(300, 0).max_deviation <= 1e-9);
        let left = induced(
            &heis_center(),
            MinkowskiNorm::euclidean_identity(3),
            MetricSide::Left,
        );
        assert!(left.verify_well_defined(300, 0).max_deviation <= 1e-9);

        let g = MatrixLieGroup::se2();
        let rot =
            SubgroupSplit::named(&g, "rotations", &Complement::orthogonal_identity(3)).unwrap();
        let bad = induced(
            &rot,
            MinkowskiNorm::euclidean_identity(3),
            MetricSide::Right,
        );
        let r = bad.verify_well_defined(300, 0);
        assert!(r.max_deviation > 1e-3);
        assert!(r.worst.is_some());
    }

    #[test]
    fn identity_action_is_trivial() {
        let im = induced(
            &heis_center(),
            MinkowskiNorm::euclidean_identity(3),
            MetricSide::Right,
        );
        for action in [Side::Left, Side::Right] {
            let d = im
                .action_deviation(
                    action,
                    &v(&[0.2, 0.5, -0.1]),
                    &v(&[0.0, 0.0, 0.0]),
                    &v(&[0.7, 0.3]),
                )
                .unwrap();
            assert!(d <= 1e-15);
        }
    }

    #[test]
    fn riemannian_compatibility_example() {
        let s = heis_center();
        let a = DMatrix::identity(3, 3);
        let r = verify_riemannian_compatibility(&s, &a, 200, 1).unwrap();
        assert!(r.max_deviation <= 1e-9);

        let g = s.group().clone();
        let z = exp_element(&g, &v(&[0.1, 0.2, 0.3])).unwrap();
        let up = InvariantMetric::new(
            &g,
            MinkowskiNorm::euclidean(a.clone()).unwrap(),
            MetricSide::Right,
        )
        .unwrap();
        let im = InducedMetric::new(up, s.clone()).unwrap();
        let value = im
            .induced_eval(&QuotientTangent::new(z, v(&[2.0, 3.0]), Side::Right))
            .unwrap();
        assert_relative_eq!(value, 13f64.sqrt(), epsilon = 1e-14);

        let skew = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.4, 0.0, 1.0, 0.0, 0.4, 0.0, 1.0]);
        assert!(matches!(
            verify_riemannian_compatibility(&s, &skew, 10, 0),
            Err(Error::NotOrthogonal { .. })
        ));
    }

    #[test]
    fn log_span_membership_matches_pattern() {
        let g = MatrixLieGroup::se2();
        let by_index =
            SubgroupSplit::from_indices(&g, &[1, 2], &Complement::orthogonal_identity(3)).unwrap();
        let by_name =
            SubgroupSplit::named(&g, "translations", &Complement::orthogonal_identity(3)).unwrap();
        let mut rng = sampling::shard_rng(12, 0, 0);
        for _ in 0..50 {
            let h = by_name
                .subgroup_element(&sampling::uniform_vector(&mut rng, 2, -1.0, 1.0))
                .unwrap();
            assert!(by_index.contains(&h) && by_name.contains(&h));
            let x = exp_element(&g, &g.sample_coords(&mut rng)).unwrap();
            assert_eq!(by_index.contains(&x), by_name.contains(&x));
        }
        assert!(
            SubgroupSplit::from_indices(&g, &[3], &Complement::orthogonal_identity(3)).is_err()
        );
    }
}
