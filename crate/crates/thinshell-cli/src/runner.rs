//! Check drivers: the verify suite and the operator/convergence sweeps.
//!
//! Every check produces one [`CheckRecord`] per applicable
//! (surface, profile, field, point) tuple. Geometry errors do not abort
//! a run; they are recorded as failed checks with a note.

use nalgebra::{DMatrix, DVector};

use thinshell::fields;
use thinshell::geometry::{self, GeometryError};
use thinshell::oracle;
use thinshell::shell::{self, BoundaryProfile, ShellField};

use crate::config::CompiledConfig;
use crate::report::{CheckRecord, ConvergenceRow, OperatorRow, Report};

fn rel(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm() / (1.0 + b.norm())
}

/// Outcome of one check evaluation before it is stamped with identity
/// columns. Carries the tolerance that was actually applied (the
/// anisotropy check picks between two depending on the point).
struct Outcome {
    residual: f64,
    order: Option<f64>,
    pass: bool,
    tolerance: f64,
}

impl Outcome {
    fn residual_under(residual: f64, tolerance: f64) -> Outcome {
        Outcome {
            residual,
            order: None,
            pass: residual <= tolerance,
            tolerance,
        }
    }
}

struct Recorder<'a> {
    cc: &'a CompiledConfig,
    records: Vec<CheckRecord>,
}

impl<'a> Recorder<'a> {
    fn push(
        &mut self,
        check_id: &str,
        profile: Option<BoundaryProfile>,
        field: Option<usize>,
        point: &[f64],
        outcome: Result<Outcome, GeometryError>,
    ) {
        if !self.cc.check_enabled(check_id) {
            return;
        }
        let (profile_label, alpha) = match profile {
            Some(p) => (p.to_string(), Some(p.alpha())),
            None => ("-".to_string(), None),
        };
        let record = match outcome {
            Ok(out) => CheckRecord {
                check_id: check_id.into(),
                surface: self.cc.surface_label.clone(),
                profile: profile_label,
                alpha,
                field,
                point: point.to_vec(),
                residual: out.residual,
                tolerance: out.tolerance,
                pass: out.pass,
                order: out.order,
                note: None,
            },
            Err(err) => CheckRecord {
                check_id: check_id.into(),
                surface: self.cc.surface_label.clone(),
                profile: profile_label,
                alpha,
                field,
                point: point.to_vec(),
                residual: f64::NAN,
                tolerance: self.cc.tolerances.try_get(check_id).unwrap_or(f64::NAN),
                pass: false,
                order: None,
                note: Some(err.to_string()),
            },
        };
        self.records.push(record);
    }
}

pub fn run_verify(cc: &CompiledConfig) -> Report {
    let mut rec = Recorder {
        cc,
        records: Vec::new(),
    };
    let chart = &cc.chart;
    let n = chart.dim();
    let tol = |name: &str| cc.tolerances.get(name);

    // geometry checks: per point
    for point in &cc.points {
        rec.push(
            "gauss_identity",
            None,
            None,
            point,
            (|| {
                let ex = geometry::extrinsic_at(chart, point)?;
                let data = geometry::intrinsic_at(chart, point)?;
                let gap = (&data.ricci_mixed - geometry::gauss_ricci(&ex, n))
                    .abs()
                    .max();
                Ok(Outcome::residual_under(gap, tol("gauss_identity")))
            })(),
        );
        rec.push(
            "shape_self_adjoint",
            None,
            None,
            point,
            (|| {
                let ex = geometry::extrinsic_at(chart, point)?;
                let data = geometry::intrinsic_at(chart, point)?;
                let gs = &data.metric * &ex.shape;
                let gap = (&gs - gs.transpose()).abs().max();
                Ok(Outcome::residual_under(gap, tol("shape_self_adjoint")))
            })(),
        );
        rec.push(
            "metric_inverse",
            None,
            None,
            point,
            (|| {
                let data = geometry::intrinsic_at(chart, point)?;
                let gap = (&data.metric * &data.metric_inv - DMatrix::identity(n, n))
                    .abs()
                    .max();
                Ok(Outcome::residual_under(gap, tol("metric_inverse")))
            })(),
        );
        rec.push(
            "bianchi",
            None,
            None,
            point,
            (|| {
                let data = geometry::intrinsic_at(chart, point)?;
                let mut worst = 0.0f64;
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            for l in 0..n {
                                let cyc = data.riemann[[i, j, k, l]]
                                    + data.riemann[[i, k, l, j]]
                                    + data.riemann[[i, l, j, k]];
                                worst = worst.max(cyc.abs());
                            }
                        }
                    }
                }
                Ok(Outcome::residual_under(worst, tol("bianchi")))
            })(),
        );
        rec.push(
            "shape_radial",
            None,
            None,
            point,
            (|| {
                let report = geometry::shape_radial_derivative(chart, point)?;
                Ok(Outcome {
                    residual: report.residual,
                    order: report.observed_order,
                    pass: report.residual <= tol("shape_radial"),
                    tolerance: tol("shape_radial"),
                })
            })(),
        );
        rec.push(
            "metric_expansion_order",
            None,
            None,
            point,
            (|| {
                let focal = geometry::extrinsic_at(chart, point)?
                    .focal_radius()
                    .min(10.0);
                let report =
                    shell::metric_expansion_check(chart, point, &[0.05 * focal, 0.02 * focal])?;
                let min_order = report.min_order();
                Ok(Outcome {
                    residual: report.max_residual(),
                    order: min_order.is_finite().then_some(min_order),
                    pass: min_order >= tol("metric_expansion_order"),
                    tolerance: tol("metric_expansion_order"),
                })
            })(),
        );
        rec.push(
            "christoffel_table",
            None,
            None,
            point,
            (|| {
                let table = shell::ambient_christoffel(chart, point)?;
                Ok(Outcome::residual_under(
                    table.residual,
                    tol("christoffel_table"),
                ))
            })(),
        );
        rec.push(
            "fermi_block",
            None,
            None,
            point,
            (|| {
                let metric = shell::ShellMetric::new(chart.clone());
                let focal = geometry::extrinsic_at(chart, point)?
                    .focal_radius()
                    .min(10.0);
                let mut worst = 0.0f64;
                for r in [0.0, 0.05 * focal] {
                    let block = metric.block_at(r, point)?;
                    worst = worst.max((block[(0, 0)] - 1.0).abs());
                    for i in 1..=n {
                        worst = worst.max(block[(0, i)].abs());
                        worst = worst.max(block[(i, 0)].abs());
                    }
                }
                Ok(Outcome::residual_under(worst, tol("fermi_block")))
            })(),
        );
        rec.push(
            "offset_consistency",
            None,
            None,
            point,
            (|| {
                let focal = geometry::extrinsic_at(chart, point)?
                    .focal_radius()
                    .min(10.0);
                let r = 0.05 * focal;
                let via_offset = geometry::intrinsic_at(&chart.offset(r), point)?.metric;
                let via_shell = shell::ShellMetric::new(chart.clone()).tangential_at(r, point)?;
                let gap = (via_offset - via_shell).abs().max();
                Ok(Outcome::residual_under(gap, tol("offset_consistency")))
            })(),
        );
    }

    // field checks: per (field, point)
    for (fi, cf) in cc.fields.iter().enumerate() {
        let field = &cf.field;
        for point in &cc.points {
            rec.push(
                "weitzenbock",
                None,
                Some(fi),
                point,
                (|| {
                    let hodge = fields::hodge(field, chart, point)?;
                    let bochner = fields::bochner(field, chart, point)?;
                    let ric = geometry::intrinsic_at(chart, point)?.ricci_mixed;
                    let expected = &bochner - &(ric * field.values(point)?);
                    let gap = (&hodge - &expected).norm() / (1.0 + bochner.norm());
                    Ok(Outcome::residual_under(gap, tol("weitzenbock")))
                })(),
            );
            rec.push(
                "endpoint_collapse",
                None,
                Some(fi),
                point,
                (|| {
                    let deformation = fields::deformation(field, chart, point)?;
                    let hodge = fields::hodge(field, chart, point)?;
                    let a0 = fields::alpha_operator(field, chart, point, 0.0)?;
                    let a1 = fields::alpha_operator(field, chart, point, 1.0)?;
                    let gap = rel(&a0, &deformation).max(rel(&a1, &hodge));
                    Ok(Outcome::residual_under(gap, tol("endpoint_collapse")))
                })(),
            );
            rec.push(
                "extrinsic_residual",
                None,
                Some(fi),
                point,
                (|| {
                    let alpha = 0.5;
                    let deformation = fields::deformation(field, chart, point)?;
                    let ric = geometry::intrinsic_at(chart, point)?.ricci_mixed;
                    let s2 = geometry::extrinsic_at(chart, point)?.shape_squared;
                    let v = field.values(point)?;
                    let op = fields::alpha_operator(field, chart, point, alpha)?;
                    let residual = op - (&deformation - &(&ric * &v) * (2.0 * alpha));
                    let expected = -(&s2 * &v) * (4.0 * alpha * (1.0 - alpha));
                    let gap = (&residual - &expected).norm() / (1.0 + expected.norm());
                    Ok(Outcome::residual_under(gap, tol("extrinsic_residual")))
                })(),
            );
            rec.push(
                "linearity",
                None,
                Some(fi),
                point,
                (|| {
                    // a V + b W against the partner field, evaluated
                    // through the heaviest operator in the family
                    let partner = &cc.fields[(fi + 1) % cc.fields.len()].field;
                    let (a, b) = (1.375, -0.625);
                    let lhs_v = fields::alpha_operator(field, chart, point, 0.4)?;
                    let lhs_w = fields::alpha_operator(partner, chart, point, 0.4)?;
                    let combo = thinshell::fields::TangentField::new(
                        (0..n)
                            .map(|i| {
                                let f1 = field.clone();
                                let f2 = partner.clone();
                                thinshell::analytic::AnalyticFn::closure(
                                    move |p: &thinshell::jet::JetPoint| {
                                        let j1 = f1.eval_jets(p).expect("field evaluates");
                                        let j2 = f2.eval_jets(p).expect("field evaluates");
                                        Ok(&j1[i].scale(a) + &j2[i].scale(b))
                                    },
                                )
                            })
                            .collect(),
                    );
                    let lhs = fields::alpha_operator(&combo, chart, point, 0.4)?;
                    let rhs = lhs_v * a + lhs_w * b;
                    Ok(Outcome::residual_under(rel(&lhs, &rhs), tol("linearity")))
                })(),
            );
            rec.push(
                "anisotropy",
                None,
                Some(fi),
                point,
                (|| {
                    // Δ_{1/2} − Δ_H = Ric − S²: must vanish where Ric and
                    // S² agree (sphere-like points) and be present
                    // otherwise, scaled by the field size
                    let half = fields::alpha_operator(field, chart, point, 0.5)?;
                    let hodge = fields::hodge(field, chart, point)?;
                    let gap = (&half - &hodge).norm();
                    let ric = geometry::intrinsic_at(chart, point)?.ricci_mixed;
                    let s2 = geometry::extrinsic_at(chart, point)?.shape_squared;
                    let sphere_like = (&ric - &s2).abs().max() <= 1e-6 * (1.0 + s2.abs().max());
                    let v_norm = field.values(point)?.norm();
                    if sphere_like {
                        Ok(Outcome::residual_under(gap, tol("anisotropy_umbilic")))
                    } else {
                        Ok(Outcome {
                            residual: gap / v_norm.max(1e-300),
                            order: None,
                            pass: gap > tol("anisotropy_min_gap") * v_norm,
                            tolerance: tol("anisotropy_min_gap"),
                        })
                    }
                })(),
            );
        }
    }

    // shell and oracle checks: per (profile, field, point)
    for &profile in &cc.profiles {
        for (fi, cf) in cc.fields.iter().enumerate() {
            let field = &cf.field;
            let sf = ShellField::new(field.clone(), profile);
            let mut order_measured = fi != 0;
            for point in &cc.points {
                rec.push(
                    "decomposition",
                    Some(profile),
                    Some(fi),
                    point,
                    (|| {
                        let ambient = shell::ambient_bochner_tangential(&sf, chart, point)?;
                        let deformation = fields::deformation(field, chart, point)?;
                        let f_rad = shell::f_rad(&profile, chart, point, field)?;
                        let gap = rel(&ambient, &(deformation + f_rad));
                        Ok(Outcome::residual_under(gap, tol("decomposition")))
                    })(),
                );
                let (limit_id, intrinsic): (&str, Result<DVector<f64>, GeometryError>) =
                    match profile {
                        BoundaryProfile::Slip => {
                            ("slip_limit", fields::deformation(field, chart, point))
                        }
                        BoundaryProfile::Hodge => {
                            ("hodge_limit", fields::hodge(field, chart, point))
                        }
                        BoundaryProfile::Alpha(a) => (
                            "alpha_family",
                            fields::alpha_operator(field, chart, point, a),
                        ),
                    };
                rec.push(
                    limit_id,
                    Some(profile),
                    Some(fi),
                    point,
                    (|| {
                        let ambient = shell::ambient_bochner_tangential(&sf, chart, point)?;
                        Ok(Outcome::residual_under(
                            rel(&ambient, &intrinsic?),
                            tol(limit_id),
                        ))
                    })(),
                );
                match profile {
                    BoundaryProfile::Slip => {
                        rec.push(
                            "f_rad_slip",
                            Some(profile),
                            Some(fi),
                            point,
                            (|| {
                                let f = shell::f_rad(&profile, chart, point, field)?;
                                let worst = f.abs().max();
                                Ok(Outcome {
                                    residual: worst,
                                    order: None,
                                    pass: worst == 0.0,
                                    tolerance: tol("f_rad_slip"),
                                })
                            })(),
                        );
                        rec.push(
                            "stress_slip",
                            Some(profile),
                            Some(fi),
                            point,
                            (|| {
                                let stress =
                                    shell::deformation_normal_tangential(&sf, chart, point)?;
                                Ok(Outcome::residual_under(
                                    stress.abs().max(),
                                    tol("stress_slip"),
                                ))
                            })(),
                        );
                    }
                    BoundaryProfile::Hodge => {
                        rec.push(
                            "f_rad_hodge",
                            Some(profile),
                            Some(fi),
                            point,
                            (|| {
                                let f = shell::f_rad(&profile, chart, point, field)?;
                                let ric = geometry::intrinsic_at(chart, point)?.ricci_mixed;
                                let expected = -(ric * field.values(point)?) * 2.0;
                                Ok(Outcome::residual_under(
                                    rel(&f, &expected),
                                    tol("f_rad_hodge"),
                                ))
                            })(),
                        );
                    }
                    BoundaryProfile::Alpha(a) => {
                        rec.push(
                            "f_rad_alpha",
                            Some(profile),
                            Some(fi),
                            point,
                            (|| {
                                let f = shell::f_rad(&profile, chart, point, field)?;
                                let ric = geometry::intrinsic_at(chart, point)?.ricci_mixed;
                                let s2 = geometry::extrinsic_at(chart, point)?.shape_squared;
                                let v = field.values(point)?;
                                let expected =
                                    -(&ric * &v) * (2.0 * a) - (&s2 * &v) * (4.0 * a * (1.0 - a));
                                Ok(Outcome::residual_under(
                                    rel(&f, &expected),
                                    tol("f_rad_alpha"),
                                ))
                            })(),
                        );
                    }
                }
                rec.push(
                    "radial_constancy",
                    Some(profile),
                    Some(fi),
                    point,
                    (|| {
                        let res = shell::covariant_radial_constancy(&sf, chart, point)?;
                        let ii = geometry::extrinsic_at(chart, point)?.second_fundamental;
                        let expected = (ii * field.values(point)?) * (2.0 * profile.alpha() - 2.0);
                        Ok(Outcome::residual_under(
                            rel(&res, &expected),
                            tol("radial_constancy"),
                        ))
                    })(),
                );
                rec.push(
                    "radial_trace_consistency",
                    Some(profile),
                    Some(fi),
                    point,
                    (|| {
                        let trace = shell::radial_trace(&sf, chart, point)?;
                        Ok(Outcome::residual_under(
                            trace.consistency_gap,
                            tol("radial_trace_consistency"),
                        ))
                    })(),
                );
                rec.push(
                    "tangential_trace_consistency",
                    Some(profile),
                    Some(fi),
                    point,
                    (|| {
                        let trace = shell::tangential_trace(&sf, chart, point)?;
                        Ok(Outcome::residual_under(
                            trace.consistency_gap,
                            tol("tangential_trace_consistency"),
                        ))
                    })(),
                );
                rec.push(
                    "oracle_equivalence",
                    Some(profile),
                    Some(fi),
                    point,
                    (|| {
                        let reference = shell::ambient_bochner_tangential(&sf, chart, point)?;
                        let h = oracle::default_stencil_step(chart, point)?;
                        let lap = oracle::cartesian_laplacian(&sf, chart, point, h)
                            .map_err(oracle_to_geometry)?;
                        Ok(Outcome::residual_under(
                            rel(&lap.value, &reference),
                            tol("oracle_equivalence"),
                        ))
                    })(),
                );
                if !order_measured && cc.check_enabled("oracle_order_deviation") {
                    order_measured = true;
                    rec.push(
                        "oracle_order_deviation",
                        Some(profile),
                        Some(fi),
                        point,
                        (|| {
                            let reference = shell::ambient_bochner_tangential(&sf, chart, point)?;
                            let h = 20.0 * oracle::default_stencil_step(chart, point)?;
                            let lap = oracle::cartesian_laplacian(&sf, chart, point, h)
                                .map_err(oracle_to_geometry)?;
                            let err_coarse = (&lap.coarse - &reference).norm();
                            let err_fine = (&lap.fine - &reference).norm();
                            if err_fine < 1e-9 * (1.0 + reference.norm()) {
                                // stencil already exact (flat cases)
                                return Ok(Outcome {
                                    residual: 0.0,
                                    order: None,
                                    pass: true,
                                    tolerance: tol("oracle_order_deviation"),
                                });
                            }
                            let order = (err_coarse / err_fine).log2();
                            let deviation = (order - 2.0).abs();
                            Ok(Outcome {
                                residual: deviation,
                                order: Some(order),
                                pass: deviation <= tol("oracle_order_deviation"),
                                tolerance: tol("oracle_order_deviation"),
                            })
                        })(),
                    );
                }
            }
        }
    }

    Report::new(
        cc.seed,
        cc.config_hash.clone(),
        cc.surface_label.clone(),
        cc.fields.iter().map(|f| f.label.clone()).collect(),
        cc.profiles.iter().map(|p| p.to_string()).collect(),
        cc.points.len(),
        rec.records,
    )
}

fn oracle_to_geometry(err: oracle::OracleError) -> GeometryError {
    match err {
        oracle::OracleError::Geometry(g) => g,
        other => GeometryError::ConsistencyFailure {
            check: other.to_string(),
            residual: f64::NAN,
            tolerance: f64::NAN,
        },
    }
}

/// Evaluates the requested operators at every (field, point, alpha).
pub fn run_operator(cc: &CompiledConfig) -> Result<Vec<OperatorRow>, GeometryError> {
    let grid = cc
        .document
        .alpha_grid
        .clone()
        .unwrap_or_else(|| (0..=10).map(|k| k as f64 / 10.0).collect());
    let operators = cc
        .document
        .operators
        .clone()
        .unwrap_or_else(|| vec!["alpha".to_string()]);
    let chart = &cc.chart;
    let mut rows = Vec::new();
    for (fi, cf) in cc.fields.iter().enumerate() {
        for point in &cc.points {
            for op in &operators {
                match op.as_str() {
                    "alpha" => {
                        for &alpha in &grid {
                            let value = fields::alpha_operator(&cf.field, chart, point, alpha)?;
                            rows.push(OperatorRow {
                                operator: "alpha".into(),
                                alpha: Some(alpha),
                                field: fi,
                                point: point.clone(),
                                components: value.iter().copied().collect(),
                            });
                        }
                    }
                    "deformation" | "hodge" | "bochner" => {
                        let value = match op.as_str() {
                            "deformation" => fields::deformation(&cf.field, chart, point)?,
                            "hodge" => fields::hodge(&cf.field, chart, point)?,
                            _ => fields::bochner(&cf.field, chart, point)?,
                        };
                        rows.push(OperatorRow {
                            operator: op.clone(),
                            alpha: None,
                            field: fi,
                            point: point.clone(),
                            components: value.iter().copied().collect(),
                        });
                    }
                    other => {
                        return Err(GeometryError::Construction(format!(
                            "unknown operator `{other}` (alpha | deformation | hodge | bochner)"
                        )))
                    }
                }
            }
        }
    }
    Ok(rows)
}

/// Convergence sweeps: metric-expansion remainder, radial shape
/// derivative, and the oracle stencil, each with observed orders.
pub fn run_convergence(cc: &CompiledConfig) -> Result<Vec<ConvergenceRow>, GeometryError> {
    let chart = &cc.chart;
    let mut rows = Vec::new();
    for point in &cc.points {
        let focal = geometry::extrinsic_at(chart, point)?
            .focal_radius()
            .min(10.0);
        let report = shell::metric_expansion_check(chart, point, &[0.05 * focal, 0.02 * focal])?;
        for row in &report.rows {
            rows.push(ConvergenceRow {
                check: "metric_expansion".into(),
                profile: "-".into(),
                point: point.clone(),
                step: row.r,
                residual: row.residual,
                order: row.observed_order,
            });
        }

        let shape = geometry::shape_radial_derivative(chart, point)?;
        rows.push(ConvergenceRow {
            check: "shape_radial".into(),
            profile: "-".into(),
            point: point.clone(),
            step: shape.step,
            residual: shape.residual,
            order: shape.observed_order,
        });

        for &profile in &cc.profiles {
            let sf = ShellField::new(cc.fields[0].field.clone(), profile);
            let reference = shell::ambient_bochner_tangential(&sf, chart, point)?;
            let h = 20.0 * oracle::default_stencil_step(chart, point)?;
            let lap =
                oracle::cartesian_laplacian(&sf, chart, point, h).map_err(oracle_to_geometry)?;
            let err_coarse = (&lap.coarse - &reference).norm();
            let err_fine = (&lap.fine - &reference).norm();
            let order = (err_fine > 1e-9 * (1.0 + reference.norm()))
                .then(|| (err_coarse / err_fine).log2());
            rows.push(ConvergenceRow {
                check: "oracle_stencil".into(),
                profile: profile.to_string(),
                point: point.clone(),
                step: h,
                residual: err_fine,
                order,
            });
        }
    }
    Ok(rows)
}
