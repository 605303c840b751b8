//! Orchestration: build the geometry from a config and run the checks.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde_json::{json, Value};

use super::config::{CheckName, ComplementSpec, RunConfig, SubgroupSpec};
use super::report::{CheckRecord, VerificationReport};
use super::HarnessError;
use crate::liegroup::{exp_element, InvariantMetric, MatrixLieGroup, Side};
use crate::minkowski::{
    axiom_sample, draw_axiom_sample, matrix_from_rows, AxiomReport, MinkowskiNorm, NormSpec,
};
use crate::quotient::{
    verify_riemannian_compatibility, Complement, InducedMetric, QuotientTangent, SubgroupSplit,
};
use crate::sampling::{self, DeviationReport, Sample, Witness};

/// Thresholds of the axiom sub-criteria besides homogeneity, whose
/// tolerance comes from the config.
pub const AXIOM_SYMMETRY_TOLERANCE: f64 = 1e-10;
pub const AXIOM_EULER_TOLERANCE: f64 = 1e-8;
pub const AXIOM_FD_TOLERANCE: f64 = 1e-5;

/// Everything a run needs, built once from the config.
#[derive(Debug, Clone)]
pub struct Setup {
    pub group: Arc<MatrixLieGroup>,
    pub split: SubgroupSplit,
    pub norm: MinkowskiNorm,
    pub upstairs: InvariantMetric,
}

impl Setup {
    pub fn build(cfg: &RunConfig) -> Result<Self, HarnessError> {
        let n_param = cfg.group_params.as_ref().map(|p| p.n);
        if cfg.group != "rn" && n_param.is_some() {
            return Err(HarnessError::invalid(
                "group_params",
                format!("group `{}` takes no parameters", cfg.group),
            ));
        }
        let group = MatrixLieGroup::from_catalog(&cfg.group, n_param)
            .map_err(|e| HarnessError::build("group", e))?;
        let n = group.dim();

        let matrix = |key: &str, rows: &[Vec<f64>]| {
            matrix_from_rows(rows).map_err(|e| HarnessError::build(key, e))
        };
        let vectors = |key: &str, rows: &[Vec<f64>]| -> Result<Vec<DVector<f64>>, HarnessError> {
            rows.iter()
                .enumerate()
                .map(|(i, r)| {
                    if r.len() == n {
                        Ok(DVector::from_column_slice(r))
                    } else {
                        Err(HarnessError::build(
                            format!("{key}[{i}]"),
                            crate::Error::DimensionMismatch {
                                expected: n,
                                got: r.len(),
                            },
                        ))
                    }
                })
                .collect()
        };

        let complement = match &cfg.complement {
            ComplementSpec::Orthogonal => Complement::orthogonal_identity(n),
            ComplementSpec::OrthogonalTo(form) => {
                Complement::Orthogonal(matrix("complement.orthogonal", form)?)
            }
            ComplementSpec::Basis(rows) => Complement::Basis(vectors("complement.basis", rows)?),
        };
        let split = match &cfg.subgroup {
            SubgroupSpec::Named(name) => SubgroupSplit::named(&group, name, &complement),
            SubgroupSpec::Indices { basis_indices } => {
                SubgroupSplit::from_indices(&group, basis_indices, &complement)
            }
            SubgroupSpec::Basis { basis } => {
                let h = vectors("subgroup.basis", basis)?;
                SubgroupSplit::new(
                    &group,
                    "basis",
                    h,
                    &complement,
                    crate::quotient::SubgroupMembership::LogSpan,
                )
            }
        }
        .map_err(|e| {
            let key = match e {
                crate::Error::NotComplementary(_) | crate::Error::NotSpd(_) => "complement",
                _ => "subgroup",
            };
            HarnessError::build(key, e)
        })?;
        if split.k() > 0 && !split.is_subalgebra() {
            return Err(HarnessError::invalid(
                "subgroup",
                "basis does not span a subalgebra",
            ));
        }

        let norm = cfg
            .norm
            .build(n)
            .map_err(|e| HarnessError::build("norm", e))?;
        let upstairs = InvariantMetric::new(&group, norm.clone(), cfg.metric_side)
            .map_err(|e| HarnessError::build("norm", e))?;
        Ok(Self {
            group,
            split,
            norm,
            upstairs,
        })
    }

    /// The induced metric without the ideal requirement; checks on
    /// non-normal subgroups report what breaks instead of refusing to run.
    fn induced_unchecked(&self) -> InducedMetric {
        InducedMetric::without_normality_check(self.upstairs.clone(), self.split.clone())
            .expect("setup uses one group throughout")
    }

    /// The induced metric proper, which demands an ideal.
    pub fn induced(&self) -> Result<InducedMetric, HarnessError> {
        InducedMetric::new(self.upstairs.clone(), self.split.clone())
            .map_err(|e| HarnessError::build("subgroup", e))
    }
}

/// Builds everything and runs the requested checks in order.
pub fn run(cfg: &RunConfig) -> Result<VerificationReport, HarnessError> {
    cfg.validate_values()?;
    let setup = Setup::build(cfg)?;
    // Construction errors of individual checks surface before any sampling.
    let checks = cfg.requested_checks();
    if checks.contains(&CheckName::RiemannCompat) {
        riemann_form(cfg)?;
    }
    let mut records = Vec::with_capacity(checks.len());
    for check in checks {
        records.push(run_check(cfg, &setup, check)?);
    }
    Ok(VerificationReport::new(cfg.clone(), records))
}

fn run_check(
    cfg: &RunConfig,
    setup: &Setup,
    check: CheckName,
) -> Result<CheckRecord, HarnessError> {
    let tol = cfg.tolerance(check);
    let (samples, seed) = (cfg.samples, cfg.seed);
    let record = match check {
        CheckName::Axioms => axioms_record(&setup.norm, samples, seed, tol),
        CheckName::Ideal => {
            let ic = setup.split.ideal_check();
            let deviation = ic.max_residual;
            let pass = ic.is_ideal && deviation <= tol;
            let details = BTreeMap::from([
                ("is_subalgebra".to_string(), json!(ic.is_subalgebra)),
                ("is_ideal".to_string(), json!(ic.is_ideal)),
            ]);
            let worst = (!pass).then(|| {
                BTreeMap::from([(
                    "h_basis".to_string(),
                    json!(coords_rows(setup.split.h_coords())),
                )])
            });
            CheckRecord {
                name: check,
                samples_run: 0,
                max_deviation: deviation,
                tolerance: tol,
                pass,
                details,
                worst_case: worst,
            }
        }
        CheckName::WellDefined => {
            let r = setup.induced_unchecked().verify_well_defined(samples, seed);
            sampled_record(check, r, tol, ideal_details(setup))
        }
        CheckName::InvarianceLeft | CheckName::InvarianceRight => {
            let action = if check == CheckName::InvarianceLeft {
                Side::Left
            } else {
                Side::Right
            };
            let r = setup
                .induced_unchecked()
                .verify_induced_invariance(action, samples, seed);
            sampled_record(check, r, tol, ideal_details(setup))
        }
        CheckName::RiemannCompat => {
            let a = riemann_form(cfg)?;
            let r = verify_riemannian_compatibility(&setup.split, &a, samples, seed)
                .map_err(|e| HarnessError::build("complement", e))?;
            sampled_record(check, r, tol, BTreeMap::new())
        }
        CheckName::BiInvariance => {
            let r = setup.upstairs.verify_bi_invariance(samples, seed);
            let details = BTreeMap::from([
                (
                    "left_max_deviation".to_string(),
                    json!(r.left.max_deviation),
                ),
                (
                    "right_max_deviation".to_string(),
                    json!(r.right.max_deviation),
                ),
            ]);
            let (worst_side, worst) = if r.left.max_deviation >= r.right.max_deviation {
                ("left", r.left)
            } else {
                ("right", r.right)
            };
            let mut rec = sampled_record(
                check,
                DeviationReport {
                    samples_run: samples,
                    ..worst
                },
                tol,
                details,
            );
            if let Some(w) = rec.worst_case.as_mut() {
                w.insert("translation".to_string(), json!(worst_side));
            }
            rec
        }
    };
    Ok(record)
}

fn riemann_form(cfg: &RunConfig) -> Result<DMatrix<f64>, HarnessError> {
    match &cfg.norm {
        NormSpec::Euclidean { a } => {
            matrix_from_rows(a).map_err(|e| HarnessError::build("norm.a", e))
        }
        _ => Err(HarnessError::invalid(
            "norm",
            "riemann_compat needs a euclidean norm",
        )),
    }
}

fn ideal_details(setup: &Setup) -> BTreeMap<String, Value> {
    BTreeMap::from([(
        "subgroup_is_ideal".to_string(),
        json!(setup.split.is_ideal()),
    )])
}

fn coords_rows(v: &[DVector<f64>]) -> Vec<Vec<f64>> {
    v.iter().map(|c| c.iter().copied().collect()).collect()
}

fn witness_json(w: &Witness) -> BTreeMap<String, Value> {
    let mut out: BTreeMap<String, Value> = w
        .inputs
        .iter()
        .map(|(k, v)| (k.clone(), json!(v)))
        .collect();
    out.insert("sample".to_string(), json!(w.index));
    out
}

fn sampled_record(
    name: CheckName,
    r: DeviationReport,
    tol: f64,
    details: BTreeMap<String, Value>,
) -> CheckRecord {
    let pass = r.passes(tol);
    let worst_case = if pass {
        None
    } else {
        Some(r.worst.as_ref().map(witness_json).unwrap_or_default())
    };
    CheckRecord {
        name,
        samples_run: r.samples_run,
        max_deviation: r.max_deviation,
        tolerance: tol,
        pass,
        details,
        worst_case,
    }
}

/// Per-sample axiom summaries, plus the sample that violates its criteria
/// the most (scores normalized by their thresholds).
fn axioms_record(norm: &MinkowskiNorm, samples: usize, seed: u64, tol: f64) -> CheckRecord {
    let analytic = norm.has_analytic_tensor();
    let score = |r: &AxiomReport| -> f64 {
        if r.min_eigenvalue.is_nan() || r.min_eigenvalue <= 0.0 {
            return f64::INFINITY;
        }
        let mut s = (r.max_homogeneity_deviation / tol)
            .max(r.max_tensor_asymmetry / AXIOM_SYMMETRY_TOLERANCE)
            .max(r.max_euler_deviation / AXIOM_EULER_TOLERANCE);
        if let Some(fd) = r.max_fd_discrepancy {
            s = s.max(fd / AXIOM_FD_TOLERANCE);
        }
        if s.is_nan() {
            f64::INFINITY
        } else {
            s
        }
    };
    let (summary, worst) = sampling::sharded_reduce(
        samples,
        seed,
        sampling::stream::AXIOMS,
        (AxiomReport::identity(analytic), DeviationReport::empty()),
        |rng, i| {
            let (y, lambda) = draw_axiom_sample(rng, norm.dim());
            let r = axiom_sample(norm, &y, lambda);
            let s = score(&r);
            let witness = Witness::new(i)
                .with("y", &y)
                .with("lambda", &DVector::from_element(1, lambda));
            (
                r,
                DeviationReport::from(Sample {
                    deviation: s,
                    witness,
                }),
            )
        },
        |(a, x), (b, y)| (a.merge(b), x.merge(y)),
    );
    let fd_ok = summary
        .max_fd_discrepancy
        .is_none_or(|fd| fd <= AXIOM_FD_TOLERANCE);
    let pass = summary.max_homogeneity_deviation <= tol
        && summary.max_tensor_asymmetry <= AXIOM_SYMMETRY_TOLERANCE
        && summary.max_euler_deviation <= AXIOM_EULER_TOLERANCE
        && summary.positive_definite()
        && fd_ok;
    let mut details = BTreeMap::from([
        ("min_eigenvalue".to_string(), json!(summary.min_eigenvalue)),
        (
            "min_eigenvalue_ratio".to_string(),
            json!(summary.min_eigenvalue_ratio),
        ),
        (
            "max_tensor_asymmetry".to_string(),
            json!(summary.max_tensor_asymmetry),
        ),
        (
            "max_euler_deviation".to_string(),
            json!(summary.max_euler_deviation),
        ),
        ("symmetric".to_string(), json!(summary.symmetric)),
        (
            "max_reversibility_gap".to_string(),
            json!(summary.max_reversibility_gap),
        ),
    ]);
    if let Some(fd) = summary.max_fd_discrepancy {
        details.insert("max_fd_discrepancy".to_string(), json!(fd));
    }
    let worst_case = (!pass).then(|| worst.worst.as_ref().map(witness_json).unwrap_or_default());
    CheckRecord {
        name: CheckName::Axioms,
        samples_run: summary.samples,
        max_deviation: summary.max_homogeneity_deviation,
        tolerance: tol,
        pass,
        details,
        worst_case,
    }
}

/// A single evaluation point for `eval`.
#[derive(Debug, Clone, PartialEq, serde::Deserialize, serde::Serialize)]
#[serde(deny_unknown_fields)]
pub struct PointSpec {
    pub base_coords: Vec<f64>,
    pub mu: Vec<f64>,
}

/// Evaluates the induced metric at `(exp(base_coords), mu)`.
pub fn eval_point(cfg: &RunConfig, point: &PointSpec) -> Result<f64, HarnessError> {
    let setup = Setup::build(cfg)?;
    let induced = setup.induced()?;
    let n = setup.group.dim();
    if point.base_coords.len() != n {
        return Err(HarnessError::build(
            "base_coords",
            crate::Error::DimensionMismatch {
                expected: n,
                got: point.base_coords.len(),
            },
        ));
    }
    let z = exp_element(
        &setup.group,
        &DVector::from_column_slice(&point.base_coords),
    )
    .map_err(|e| HarnessError::build("base_coords", e))?;
    let q = QuotientTangent::new(
        z,
        DVector::from_column_slice(&point.mu),
        induced.frame_side(),
    );
    induced
        .induced_eval(&q)
        .map_err(|e| HarnessError::build("mu", e))
}

/// The printed form of an `eval` result: shortest decimal that reads back
/// as the same double.
pub fn format_eval(value: f64) -> String {
    format!("{value}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn heis(checks: &str) -> RunConfig {
        RunConfig::from_json(&format!(
            r#"{{"group":"heisenberg3","subgroup":"center","norm":{{"type":"euclidean","a":[[1,0,0],[0,1,0],[0,0,1]]}},
                "metric_side":"right","checks":{checks},"samples":200}}"#
        ))
        .unwrap()
    }

    #[test]
    fn heisenberg_center_passes_all_checks() {
        let cfg = heis(r#"["axioms","ideal","well_defined","invariance_right","riemann_compat"]"#);
        let report = run(&cfg).unwrap();
        for rec in &report.checks {
            assert!(rec.pass, "{rec:?}");
            assert!(rec.worst_case.is_none());
        }
        assert!(report.overall);
    }

    #[test]
    fn empty_checks_are_vacuous() {
        let report = run(&heis("[]")).unwrap();
        assert!(report.checks.is_empty() && report.overall);
    }

    #[test]
    fn rotations_fail_well_definedness() {
        let cfg = RunConfig::from_json(
            r#"{"group":"se2","subgroup":"rotations","norm":{"type":"euclidean","a":[[1,0,0],[0,1,0],[0,0,1]]},
                "metric_side":"right","checks":["ideal","well_defined"]}"#,
        )
        .unwrap();
        let report = run(&cfg).unwrap();
        assert!(!report.overall);
        let wd = &report.checks[1];
        assert!(!wd.pass && wd.max_deviation > 1e-3);
        let worst = wd.worst_case.as_ref().unwrap();
        assert!(worst.contains_key("z") && worst.contains_key("h") && worst.contains_key("mu"));
    }

    #[test]
    fn construction_errors_name_the_key() {
        let mut cfg = heis(r#"["ideal"]"#);
        cfg.subgroup = SubgroupSpec::Named("nope".into());
        assert!(run(&cfg).unwrap_err().to_string().starts_with("subgroup"));
        let mut cfg = heis(r#"["riemann_compat"]"#);
        cfg.norm = NormSpec::Quartic {};
        assert!(run(&cfg).unwrap_err().to_string().starts_with("norm"));
        let mut cfg = heis("[]");
        cfg.group = "so3".into();
        assert!(run(&cfg).unwrap_err().to_string().starts_with("group"));
    }

    #[test]
    fn eval_examples() {
        let cfg = heis("[]");
        let at = |base: [f64; 3], mu: [f64; 2]| {
            eval_point(
                &cfg,
                &PointSpec {
                    base_coords: base.to_vec(),
                    mu: mu.to_vec(),
                },
            )
            .unwrap()
        };
        assert_eq!(
            format_eval(at([0.0, 0.0, 0.0], [2.0, 3.0])),
            "3.605551275463989"
        );
        assert_eq!(format_eval(at([0.0, 0.0, 0.0], [0.0, 0.0])), "0");
        assert_eq!(
            at([0.0, 0.0, 5.0], [2.0, 3.0]),
            at([0.0, 0.0, 0.0], [2.0, 3.0])
        );
    }
}
