//! Tangential vector fields and the intrinsic vector Laplacians.
//!
//! Three second-order operators act on a tangent field `V` here:
//!
//! - `bochner`: the rough Laplacian `g^{jk} ∇_j ∇_k V^i`, the literal
//!   trace of the second covariant derivative. On a flat chart this is
//!   the component-wise `+∂²` (analyst's sign).
//! - `hodge`: assembled from the exterior derivative and codifferential
//!   on the associated 1-form — a genuinely different route, so the
//!   Weitzenböck identity `Δ_H = Δ_B − Ric` is a cross-check between
//!   two independent computations rather than a definition. The overall
//!   sign is fixed so that the identity holds with the `Δ_B` above
//!   (equivalently: the plane case reduces to `+∂²` component-wise).
//! - `deformation`: `Δ_B + Ric`, the operator produced by the
//!   divergence of the symmetrized velocity gradient.
//!
//! `alpha_operator` is the one-parameter family
//! `Δ_α = Δ_Def − 2α Ric − 4α(1−α) S²` interpolating between the
//! deformation (α = 0) and Hodge (α = 1) operators; its `S²` term is
//! the only extrinsic coupling and vanishes at both endpoints.

use nalgebra::{DMatrix, DVector};

use crate::analytic::{seeded_rng, AnalyticFn, TrigPoly};
use crate::expr::{Expr, ParseError};
use crate::geometry::{
    extrinsic_from_frame, intrinsic_from_frame, Chart, ChartFrame, GeometryError,
};
use crate::jet::{Jet, JetPoint};

/// Contravariant components of an operator applied to a field at a
/// point.
pub type OperatorValue = DVector<f64>;

/// A tangential vector field given by contravariant component functions
/// of the chart variables.
#[derive(Debug, Clone)]
pub struct TangentField {
    components: Vec<AnalyticFn>,
}

impl TangentField {
    pub fn new(components: Vec<AnalyticFn>) -> TangentField {
        assert!(!components.is_empty());
        TangentField { components }
    }

    /// Field from component expressions in `u1..un`.
    pub fn from_exprs(sources: &[String]) -> Result<TangentField, ParseError> {
        let names: Vec<String> = (1..=sources.len()).map(|i| format!("u{i}")).collect();
        let name_refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        let components = sources
            .iter()
            .map(|s| Ok(AnalyticFn::Expr(Expr::parse(s, &name_refs)?)))
            .collect::<Result<Vec<_>, ParseError>>()?;
        Ok(TangentField { components })
    }

    /// Seeded random field: each component a small trigonometric
    /// polynomial in the chart variables.
    pub fn random_trig(dim: usize, seed: u64) -> TangentField {
        let mut rng = seeded_rng(seed, 0xF1E1D);
        let components = (0..dim)
            .map(|_| AnalyticFn::Trig(TrigPoly::random(&mut rng, dim, 3, 2, 1.0)))
            .collect();
        TangentField { components }
    }

    /// A reproducible family of random fields (the caller records the
    /// seed in reports).
    pub fn random_set(dim: usize, count: usize, seed: u64) -> Vec<TangentField> {
        (0..count)
            .map(|k| TangentField::random_trig(dim, seed.wrapping_add(k as u64)))
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn eval_jets(&self, point: &JetPoint) -> Result<Vec<Jet>, GeometryError> {
        self.components
            .iter()
            .map(|c| c.eval(point).map_err(GeometryError::from))
            .collect()
    }

    pub fn values(&self, u: &[f64]) -> Result<DVector<f64>, GeometryError> {
        let jets = self.eval_jets(&JetPoint::new(u))?;
        Ok(DVector::from_iterator(
            jets.len(),
            jets.iter().map(|j| j.value()),
        ))
    }
}

/// Everything the intrinsic operators need at one point: the chart
/// frame, field jets, and Christoffel symbols as jets so one more
/// spatial derivative stays exact.
struct FieldContext {
    n: usize,
    frame: ChartFrame,
    v: Vec<Jet>,
    gamma: Vec<Jet>,
}

impl FieldContext {
    fn new(field: &TangentField, chart: &Chart, u: &[f64]) -> Result<FieldContext, GeometryError> {
        assert_eq!(field.dim(), chart.dim(), "field/chart dimension mismatch");
        let point = chart.jet_point(u);
        let frame = ChartFrame::new(chart, point)?;
        let v = field.eval_jets(&frame.point)?;
        let n = chart.dim();
        let mut gamma = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut acc: Option<Jet> = None;
                    for l in 0..n {
                        let dj_glk = frame.metric.get(l, k).derivative(frame.point.var(j));
                        let dk_glj = frame.metric.get(l, j).derivative(frame.point.var(k));
                        let dl_gjk = frame.metric.get(j, k).derivative(frame.point.var(l));
                        let term = frame.metric_inv.get(i, l) * &(&(&dj_glk + &dk_glj) - &dl_gjk);
                        acc = Some(match acc {
                            Some(a) => &a + &term,
                            None => term,
                        });
                    }
                    gamma.push(acc.unwrap().scale(0.5));
                }
            }
        }
        Ok(FieldContext { n, frame, v, gamma })
    }

    fn gamma(&self, i: usize, j: usize, k: usize) -> &Jet {
        &self.gamma[(i * self.n + j) * self.n + k]
    }

    fn var(&self, k: usize) -> usize {
        self.frame.point.var(k)
    }

    /// `∇_j V^i = ∂_j V^i + Γ^i_{jk} V^k` as jets, indexed `[i][j]`.
    fn covariant_derivative_jets(&self) -> Vec<Vec<Jet>> {
        let n = self.n;
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let mut acc = self.v[i].derivative(self.var(j));
                        for k in 0..n {
                            acc = &acc + &(self.gamma(i, j, k) * &self.v[k]);
                        }
                        acc
                    })
                    .collect()
            })
            .collect()
    }

    /// Trace of the second covariant derivative.
    fn bochner_value(&self) -> OperatorValue {
        let n = self.n;
        let w = self.covariant_derivative_jets();
        let ginv = self.frame.metric_inv.values();
        let gamma_val = |i: usize, j: usize, k: usize| self.gamma(i, j, k).value();
        DVector::from_fn(n, |i, _| {
            let mut acc = 0.0;
            for j in 0..n {
                for k in 0..n {
                    // ∇_j (∇V)^i_k = ∂_j W^i_k + Γ^i_{jm} W^m_k - Γ^m_{jk} W^i_m
                    let mut h = w[i][k].partial(&[self.var(j)]);
                    for (m, row) in w.iter().enumerate() {
                        h += gamma_val(i, j, m) * row[k].value();
                        h -= gamma_val(m, j, k) * w[i][m].value();
                    }
                    acc += ginv[(j, k)] * h;
                }
            }
            acc
        })
    }

    /// Hodge Laplacian of `V♭` through `d` and `δ`, raised back.
    fn hodge_value(&self) -> OperatorValue {
        let n = self.n;
        // ω_j = g_{jk} V^k
        let omega: Vec<Jet> = (0..n)
            .map(|j| {
                let mut acc = self.frame.metric.get(j, 0) * &self.v[0];
                for k in 1..n {
                    acc = &acc + &(self.frame.metric.get(j, k) * &self.v[k]);
                }
                acc
            })
            .collect();

        // δω = -g^{ij} (∂_i ω_j - Γ^m_{ij} ω_m), kept as a jet so its
        // exterior derivative below stays exact
        let mut codiff: Option<Jet> = None;
        for i in 0..n {
            for j in 0..n {
                let mut covariant = omega[j].derivative(self.var(i));
                for (m, om) in omega.iter().enumerate() {
                    covariant = &covariant - &(self.gamma(m, i, j) * om);
                }
                let term = self.frame.metric_inv.get(i, j) * &covariant;
                codiff = Some(match codiff {
                    Some(a) => &a + &term,
                    None => term,
                });
            }
        }
        let codiff = -&codiff.unwrap();

        // (dδω)_j = ∂_j δω
        let d_codiff: Vec<f64> = (0..n).map(|j| codiff.partial(&[self.var(j)])).collect();

        // (dω)_{kj} = ∂_k ω_j - ∂_j ω_k
        let domega: Vec<Vec<Jet>> = (0..n)
            .map(|k| {
                (0..n)
                    .map(|j| &omega[j].derivative(self.var(k)) - &omega[k].derivative(self.var(j)))
                    .collect()
            })
            .collect();

        // (δ dω)_j = -g^{ik} ∇_i (dω)_{kj}
        let ginv = self.frame.metric_inv.values();
        let gamma_val = |i: usize, j: usize, k: usize| self.gamma(i, j, k).value();
        let codiff_d: Vec<f64> = (0..n)
            .map(|j| {
                let mut acc = 0.0;
                for i in 0..n {
                    for k in 0..n {
                        let mut nabla = domega[k][j].partial(&[self.var(i)]);
                        for (m, row) in domega.iter().enumerate() {
                            nabla -= gamma_val(m, i, k) * row[j].value();
                            nabla -= gamma_val(m, i, j) * domega[k][m].value();
                        }
                        acc -= ginv[(i, k)] * nabla;
                    }
                }
                acc
            })
            .collect();

        // sum, raise the index, and fix the overall sign so the plane
        // case is +∂² component-wise
        let total = DVector::from_fn(n, |j, _| d_codiff[j] + codiff_d[j]);
        -(&ginv * total)
    }
}

/// `∇_j V^i` as a matrix with row `i`, column `j`.
pub fn covariant_derivative(
    field: &TangentField,
    chart: &Chart,
    u: &[f64],
) -> Result<DMatrix<f64>, GeometryError> {
    let ctx = FieldContext::new(field, chart, u)?;
    let w = ctx.covariant_derivative_jets();
    Ok(DMatrix::from_fn(ctx.n, ctx.n, |i, j| w[i][j].value()))
}

/// Bochner (rough) Laplacian `g^{jk} ∇_j ∇_k V^i`.
pub fn bochner(
    field: &TangentField,
    chart: &Chart,
    u: &[f64],
) -> Result<OperatorValue, GeometryError> {
    Ok(FieldContext::new(field, chart, u)?.bochner_value())
}

/// Hodge Laplacian via the exterior derivative and codifferential on
/// `V♭`, raised back to a vector. An independent route from `bochner`,
/// so the Weitzenböck identity `hodge = bochner − Ric` is a real check.
pub fn hodge(
    field: &TangentField,
    chart: &Chart,
    u: &[f64],
) -> Result<OperatorValue, GeometryError> {
    Ok(FieldContext::new(field, chart, u)?.hodge_value())
}

/// Deformation Laplacian `Δ_B + Ric`.
pub fn deformation(
    field: &TangentField,
    chart: &Chart,
    u: &[f64],
) -> Result<OperatorValue, GeometryError> {
    let ctx = FieldContext::new(field, chart, u)?;
    let intrinsic = intrinsic_from_frame(&ctx.frame);
    let v = DVector::from_fn(ctx.n, |i, _| ctx.v[i].value());
    Ok(ctx.bochner_value() + intrinsic.ricci_mixed * v)
}

/// The interpolating family `Δ_α = Δ_Def − 2α Ric − 4α(1−α) S²`.
/// Values of `alpha` outside `[0, 1]` are accepted (the formula is
/// polynomial in α); [`alpha_in_range`] lets callers warn about them.
pub fn alpha_operator(
    field: &TangentField,
    chart: &Chart,
    u: &[f64],
    alpha: f64,
) -> Result<OperatorValue, GeometryError> {
    let ctx = FieldContext::new(field, chart, u)?;
    let intrinsic = intrinsic_from_frame(&ctx.frame);
    let extrinsic = extrinsic_from_frame(&ctx.frame);
    let v = DVector::from_fn(ctx.n, |i, _| ctx.v[i].value());
    let ric_v = &intrinsic.ricci_mixed * &v;
    let s2_v = &extrinsic.shape_squared * &v;
    Ok(ctx.bochner_value() + &ric_v - ric_v * (2.0 * alpha) - s2_v * (4.0 * alpha * (1.0 - alpha)))
}

/// Whether `alpha` lies in the physically meaningful interval `[0, 1]`.
pub fn alpha_in_range(alpha: f64) -> bool {
    (0.0..=1.0).contains(&alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{
        custom, ellipsoid, extrinsic_at, graph_expr, intrinsic_at, sphere, torus,
    };
    use crate::sample::sample_interior;

    fn plane() -> Chart {
        custom(
            &["u1".into(), "u2".into(), "0".into()],
            vec![(-2.0, 2.0), (-2.0, 2.0)],
        )
        .unwrap()
    }

    fn field(exprs: &[&str]) -> TangentField {
        TangentField::from_exprs(&exprs.iter().map(|s| s.to_string()).collect::<Vec<_>>()).unwrap()
    }

    fn rel_gap(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        (a - b).norm() / (1.0 + b.norm())
    }

    #[test]
    fn plane_covariant_derivative() {
        let chart = plane();
        let constant = field(&["1", "0"]);
        let grad = covariant_derivative(&constant, &chart, &[0.3, 0.7]).unwrap();
        assert!(grad.abs().max() < 1e-14);

        let linear = field(&["u1", "0"]);
        let grad = covariant_derivative(&linear, &chart, &[0.3, 0.7]).unwrap();
        assert!((grad[(0, 0)] - 1.0).abs() < 1e-14);
        assert!(grad[(0, 1)].abs() < 1e-14);
        assert!(grad[(1, 0)].abs() < 1e-14);
        assert!(grad[(1, 1)].abs() < 1e-14);
    }

    #[test]
    fn plane_bochner_is_componentwise_laplacian() {
        let chart = plane();
        let quadratic = field(&["u1^2", "0"]);
        let lap = bochner(&quadratic, &chart, &[0.4, -0.2]).unwrap();
        assert!((lap[0] - 2.0).abs() < 1e-12);
        assert!(lap[1].abs() < 1e-12);

        let linear = field(&["u1 + 3*u2", "u2 - u1"]);
        let lap = bochner(&linear, &chart, &[0.4, -0.2]).unwrap();
        assert!(lap.norm() < 1e-12);

        // Ric = 0 on the plane, so the Hodge route matches Bochner
        let wavy = field(&["sin(u1)*u2", "cos(u2)"]);
        let via_forms = hodge(&wavy, &chart, &[0.4, -0.2]).unwrap();
        let via_trace = bochner(&wavy, &chart, &[0.4, -0.2]).unwrap();
        assert!(rel_gap(&via_forms, &via_trace) < 1e-12);
    }

    #[test]
    fn sphere_rotation_field_is_killing() {
        // the azimuth coordinate field generates rotations about the
        // z-axis: an isometry, so its symmetrized gradient vanishes,
        // Δ_B V = -Ric V = -V on the unit sphere, and Δ_Def V = 0
        let chart = sphere(1.0).unwrap();
        let rotation = field(&["1", "0"]);
        for u in sample_interior(&chart, 6, 21, 0.05) {
            let grad = covariant_derivative(&rotation, &chart, &u).unwrap();
            let g = intrinsic_at(&chart, &u).unwrap().metric;
            let lowered = &g * &grad;
            let killing = &lowered + &lowered.transpose();
            assert!(killing.abs().max() < 1e-12, "not Killing at {u:?}");

            let lap = bochner(&rotation, &chart, &u).unwrap();
            let v = rotation.values(&u).unwrap();
            assert!((lap + &v).norm() < 1e-11, "Δ_B V != -V at {u:?}");
            let def = deformation(&rotation, &chart, &u).unwrap();
            assert!(def.norm() < 1e-11, "Δ_Def V != 0 at {u:?}");
        }
    }

    #[test]
    fn weitzenbock_identity_across_surfaces() {
        let charts: Vec<Chart> = vec![
            sphere(1.0).unwrap(),
            ellipsoid(1.0, 1.3, 2.0).unwrap(),
            torus(2.0, 0.7).unwrap(),
            graph_expr("sin(u1)*cos(u2)", None).unwrap(),
        ];
        for chart in &charts {
            let fields = TangentField::random_set(2, 10, 1234);
            for (fi, f) in fields.iter().enumerate() {
                for u in sample_interior(chart, 10, 40 + fi as u64, 0.05) {
                    let h = hodge(f, chart, &u).unwrap();
                    let b = bochner(f, chart, &u).unwrap();
                    let ric = intrinsic_at(chart, &u).unwrap().ricci_mixed;
                    let v = f.values(&u).unwrap();
                    let expected = &b - &(ric * v);
                    let gap = (&h - &expected).norm() / (1.0 + b.norm());
                    assert!(
                        gap < 1e-7,
                        "Weitzenböck fails on {} at {u:?}: {gap:e}",
                        chart.name()
                    );
                }
            }
        }
    }

    #[test]
    fn codifferential_of_gradient_matches_laplacian() {
        // V = grad f has an exact 1-form, so the Hodge route reduces to
        // d(δV♭) with δV♭ = -Δf; on the plane with f = u1³ that makes
        // Δ_H V = grad(Δf) = (6, 0) at every point
        let chart = plane();
        let gradient = field(&["3*u1^2", "0"]);
        for u in [[0.5, -0.3], [-1.1, 0.9]] {
            let h = hodge(&gradient, &chart, &u).unwrap();
            assert!((h[0] - 6.0).abs() < 1e-12);
            assert!(h[1].abs() < 1e-12);
        }
    }

    #[test]
    fn deformation_hodge_gap_is_twice_ricci() {
        // Δ_Def − Δ_H = 2 Ric: scalar 2·Id on the unit sphere, a
        // genuine endomorphism on the ellipsoid
        let f = TangentField::random_trig(2, 55);
        let round = sphere(1.0).unwrap();
        for u in sample_interior(&round, 5, 81, 0.05) {
            let gap = deformation(&f, &round, &u).unwrap() - hodge(&f, &round, &u).unwrap();
            let v = f.values(&u).unwrap();
            assert!((gap - &v * 2.0).norm() < 1e-10 * (1.0 + v.norm()));
        }
        let ell = ellipsoid(1.0, 1.3, 2.0).unwrap();
        for u in sample_interior(&ell, 5, 82, 0.05) {
            let gap = deformation(&f, &ell, &u).unwrap() - hodge(&f, &ell, &u).unwrap();
            let ric = intrinsic_at(&ell, &u).unwrap().ricci_mixed;
            let expected = ric * f.values(&u).unwrap() * 2.0;
            assert!((gap - &expected).norm() < 1e-10 * (1.0 + expected.norm()));
        }
    }

    #[test]
    fn alpha_family_endpoints_collapse() {
        let chart = ellipsoid(1.0, 1.3, 2.0).unwrap();
        let f = TangentField::random_trig(2, 99);
        for u in sample_interior(&chart, 8, 60, 0.05) {
            let def = deformation(&f, &chart, &u).unwrap();
            let a0 = alpha_operator(&f, &chart, &u, 0.0).unwrap();
            assert!(
                rel_gap(&a0, &def) < 1e-13,
                "α=0 is the deformation operator"
            );

            let hod = hodge(&f, &chart, &u).unwrap();
            let a1 = alpha_operator(&f, &chart, &u, 1.0).unwrap();
            assert!(rel_gap(&a1, &hod) < 1e-11, "α=1 is the Hodge operator");
        }
    }

    #[test]
    fn alpha_family_extrinsic_residual() {
        let chart = ellipsoid(1.0, 1.3, 2.0).unwrap();
        let f = TangentField::random_trig(2, 5);
        let u = [0.9, 1.2];
        let ric = intrinsic_at(&chart, &u).unwrap().ricci_mixed;
        let s2 = extrinsic_at(&chart, &u).unwrap().shape_squared;
        let v = f.values(&u).unwrap();
        let def = deformation(&f, &chart, &u).unwrap();
        for alpha in [0.0, 0.3, 0.5, 0.77, 1.0] {
            let a = alpha_operator(&f, &chart, &u, alpha).unwrap();
            let residual = &a - &(&def - &(&ric * &v) * (2.0 * alpha));
            let expected = -(&s2 * &v) * (4.0 * alpha * (1.0 - alpha));
            assert!((residual - expected).norm() < 1e-12);
        }
        // the extrinsic coefficient 4α(1-α) vanishes at the endpoints
        // and is maximal at α = 1/2
        let coeff = |a: f64| 4.0 * a * (1.0 - a);
        assert_eq!(coeff(0.0), 0.0);
        assert_eq!(coeff(1.0), 0.0);
        assert!(coeff(0.5) > coeff(0.3) && coeff(0.5) > coeff(0.77));
    }

    #[test]
    fn operators_are_linear() {
        let chart = torus(2.0, 0.7).unwrap();
        let f1 = TangentField::random_trig(2, 7);
        let f2 = TangentField::random_trig(2, 8);
        let (a, b) = (1.7, -0.6);
        // a f1 + b f2 assembled as closures over the two fields
        let combo = TangentField::new(
            (0..2)
                .map(|i| {
                    let f1 = f1.clone();
                    let f2 = f2.clone();
                    AnalyticFn::closure(move |p: &JetPoint| {
                        let j1 = f1.eval_jets(p).expect("trig fields are total");
                        let j2 = f2.eval_jets(p).expect("trig fields are total");
                        Ok(&j1[i].scale(a) + &j2[i].scale(b))
                    })
                })
                .collect(),
        );
        for u in sample_interior(&chart, 4, 77, 0.05) {
            for alpha in [None, Some(0.4)] {
                let op = |f: &TangentField| match alpha {
                    None => hodge(f, &chart, &u).unwrap(),
                    Some(al) => alpha_operator(f, &chart, &u, al).unwrap(),
                };
                let lhs = op(&combo);
                let rhs = op(&f1) * a + op(&f2) * b;
                assert!(
                    (&lhs - &rhs).norm() < 1e-12 * (1.0 + rhs.norm()),
                    "operator not linear at {u:?}"
                );
            }
        }
    }

    #[test]
    fn half_slip_gap_vanishes_only_on_the_sphere() {
        // Δ_{1/2} − Δ_H = Ric − S²: zero everywhere on the unit sphere,
        // nonzero at generic (non-umbilic) ellipsoid points
        let f = TangentField::random_trig(2, 31);
        let round = sphere(1.0).unwrap();
        let u = [1.3, 1.1];
        let gap =
            (alpha_operator(&f, &round, &u, 0.5).unwrap() - hodge(&f, &round, &u).unwrap()).norm();
        assert!(gap < 1e-10, "sphere gap {gap:e}");

        let ell = ellipsoid(1.0, 1.3, 2.0).unwrap();
        let v = f.values(&u).unwrap();
        let gap =
            (alpha_operator(&f, &ell, &u, 0.5).unwrap() - hodge(&f, &ell, &u).unwrap()).norm();
        assert!(gap > 1e-4 * v.norm(), "ellipsoid gap too small: {gap:e}");
    }
}
