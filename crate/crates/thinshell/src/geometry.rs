//! Intrinsic and extrinsic geometry of parametrized hypersurfaces.
//!
//! A [`Chart`] is an analytic immersion `X: U ⊂ ℝⁿ → ℝ^{n+1}`. At any
//! interior point this module produces the unit normal, first and
//! second fundamental forms, shape operator ([`ExtrinsicData`]) and the
//! metric, Christoffel symbols, Riemann and Ricci tensors
//! ([`IntrinsicData`]), all from exact jet derivatives of the chart.
//!
//! Orientation convention: the normal is the normalized generalized
//! cross product of the chart tangents in variable order. With the
//! catalog's sphere chart (azimuth first, colatitude second) this makes
//! the shape operator of a radius-R sphere `+Id/R` and the mean
//! curvature `+1/R`; the signed normal distance is then positive toward
//! the center of curvature. Every identity verified downstream is even
//! under a global flip of this choice, which the test suite confirms by
//! swapping chart variables.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

use crate::analytic::{seeded_rng, AnalyticFn, TrigPoly};
use crate::expr::{Expr, ParseError};
use crate::jet::{jet_dot, Jet, JetError, JetPoint};
use crate::tensor::{christoffel_from_metric, JetMatrix, Tensor3, Tensor4};

/// Scale-free threshold on the relative Gram determinant below which a
/// parametrization no longer counts as an immersion.
pub const IMMERSION_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone, Error)]
pub enum GeometryError {
    #[error("degenerate immersion at {point:?} (relative Gram determinant {gram_ratio:.3e})")]
    DegenerateImmersion { point: Vec<f64>, gram_ratio: f64 },
    #[error("offset {r:.3e} at {point:?} reaches focal radius {focal:.3e}")]
    FocalDegeneracy { point: Vec<f64>, r: f64, focal: f64 },
    #[error("consistency failure in {check}: residual {residual:.3e} exceeds {tolerance:.1e}")]
    ConsistencyFailure {
        check: String,
        residual: f64,
        tolerance: f64,
    },
    #[error(transparent)]
    Eval(#[from] JetError),
    #[error("invalid chart: {0}")]
    Construction(String),
}

impl From<ParseError> for GeometryError {
    fn from(e: ParseError) -> Self {
        GeometryError::Construction(e.to_string())
    }
}

#[derive(Clone, Debug)]
enum ChartKind {
    /// Ambient components as scalar functions of the chart variables.
    Components(Vec<AnalyticFn>),
    /// Normal offset `X + r N` of a base chart.
    Offset { base: Arc<Chart>, r: f64 },
    /// Chart-variable permutation of a base chart (odd permutations
    /// flip the orientation of the computed normal).
    Permuted { base: Arc<Chart>, perm: Vec<usize> },
}

/// An analytic parametrization of a hypersurface patch, together with
/// its parameter box.
#[derive(Clone, Debug)]
pub struct Chart {
    name: String,
    domain: Vec<(f64, f64)>,
    kind: ChartKind,
}

impl Chart {
    pub fn new(
        name: impl Into<String>,
        components: Vec<AnalyticFn>,
        domain: Vec<(f64, f64)>,
    ) -> Result<Chart, GeometryError> {
        if domain.is_empty() {
            return Err(GeometryError::Construction(
                "chart needs at least one variable".into(),
            ));
        }
        if components.len() != domain.len() + 1 {
            return Err(GeometryError::Construction(format!(
                "{} chart variables need {} ambient components, got {}",
                domain.len(),
                domain.len() + 1,
                components.len()
            )));
        }
        for (lo, hi) in &domain {
            if lo.partial_cmp(hi) != Some(std::cmp::Ordering::Less) {
                return Err(GeometryError::Construction(format!(
                    "empty domain interval [{lo}, {hi}]"
                )));
            }
        }
        Ok(Chart {
            name: name.into(),
            domain,
            kind: ChartKind::Components(components),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Number of chart variables `n`.
    pub fn dim(&self) -> usize {
        self.domain.len()
    }

    /// Ambient dimension `n + 1`.
    pub fn ambient_dim(&self) -> usize {
        self.dim() + 1
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    /// The normal offset surface `u ↦ X(u) + r N(u)`.
    pub fn offset(self: &Arc<Chart>, r: f64) -> Chart {
        Chart {
            name: format!("{}+offset({r})", self.name),
            domain: self.domain.clone(),
            kind: ChartKind::Offset {
                base: self.clone(),
                r,
            },
        }
    }

    /// Same surface with the first two chart variables swapped; for
    /// `n = 2` this flips the orientation of the computed normal.
    pub fn swapped(self: &Arc<Chart>) -> Chart {
        assert!(self.dim() >= 2, "swapping needs at least two variables");
        let mut perm: Vec<usize> = (0..self.dim()).collect();
        perm.swap(0, 1);
        Chart {
            name: format!("{}+swapped", self.name),
            domain: perm.iter().map(|&i| self.domain[i]).collect(),
            kind: ChartKind::Permuted {
                base: self.clone(),
                perm,
            },
        }
    }

    /// Evaluates the ambient components as jets at the given point.
    pub fn eval(&self, point: &JetPoint) -> Result<Vec<Jet>, GeometryError> {
        assert_eq!(point.dim(), self.dim(), "point arity mismatch");
        match &self.kind {
            ChartKind::Components(comps) => comps
                .iter()
                .map(|c| c.eval(point).map_err(GeometryError::from))
                .collect(),
            ChartKind::Offset { base, r } => {
                let comps = base.eval(point)?;
                let normal = unit_normal_jets(&comps, point)?;
                Ok(comps
                    .iter()
                    .zip(&normal)
                    .map(|(x, n)| x + &n.scale(*r))
                    .collect())
            }
            ChartKind::Permuted { base, perm } => {
                let permuted = permute_point(point, perm);
                base.eval(&permuted)
            }
        }
    }

    /// Jet point for chart coordinates in a fresh `n`-variable space.
    pub fn jet_point(&self, u: &[f64]) -> JetPoint {
        assert_eq!(u.len(), self.dim());
        JetPoint::new(u)
    }

    /// Ambient position as plain values.
    pub fn position(&self, u: &[f64]) -> Result<DVector<f64>, GeometryError> {
        let comps = self.eval(&self.jet_point(u))?;
        Ok(DVector::from_iterator(
            comps.len(),
            comps.iter().map(|c| c.value()),
        ))
    }

    /// Whether `u` lies inside the domain box shrunk by `margin`
    /// (fraction of each side length).
    pub fn contains(&self, u: &[f64], margin: f64) -> bool {
        u.iter().zip(&self.domain).all(|(&x, &(lo, hi))| {
            let pad = margin * (hi - lo);
            x >= lo + pad && x <= hi - pad
        })
    }
}

fn permute_point(point: &JetPoint, perm: &[usize]) -> JetPoint {
    // base coordinate i is our coordinate perm[i]
    let vars: Vec<usize> = perm.iter().map(|&i| point.var(i)).collect();
    let coords: Vec<f64> = perm.iter().map(|&i| point.coords()[i]).collect();
    JetPoint::embedded(point.space(), &vars, &coords)
}

/// Tangent jets `∂_i X^A`, indexed `[i][A]`.
fn tangent_jets(components: &[Jet], point: &JetPoint) -> Vec<Vec<Jet>> {
    (0..point.dim())
        .map(|i| {
            components
                .iter()
                .map(|c| c.derivative(point.var(i)))
                .collect()
        })
        .collect()
}

fn immersion_ratio(tangents: &[Vec<Jet>]) -> f64 {
    let n = tangents.len();
    let ambient = tangents[0].len();
    let m = DMatrix::from_fn(ambient, n, |a, i| tangents[i][a].value());
    let sv = m.singular_values();
    let smax = sv[0];
    if smax == 0.0 {
        return 0.0;
    }
    sv.iter().map(|s| s / smax).product()
}

/// Generalized cross product of the `n` tangent vectors in `ℝ^{n+1}`,
/// normalized to unit length. Fails where the parametrization is not an
/// immersion.
fn unit_normal_jets(components: &[Jet], point: &JetPoint) -> Result<Vec<Jet>, GeometryError> {
    let tangents = tangent_jets(components, point);
    let ratio = immersion_ratio(&tangents);
    if ratio <= IMMERSION_THRESHOLD {
        return Err(GeometryError::DegenerateImmersion {
            point: point.coords().to_vec(),
            gram_ratio: ratio,
        });
    }
    let space = point.space();
    let n = point.dim();
    let ambient = n + 1;
    let mut normal = Vec::with_capacity(ambient);
    for axis in 0..ambient {
        // minor of the (n+1)×n tangent matrix with ambient row `axis`
        // removed, cofactor sign (-1)^axis
        let minor: Vec<Vec<Jet>> = (0..ambient)
            .filter(|&a| a != axis)
            .map(|a| (0..n).map(|i| tangents[i][a].clone()).collect())
            .collect();
        let det = crate::tensor::jet_determinant(&minor, space);
        normal.push(if axis % 2 == 0 { det } else { -&det });
    }
    let norm = jet_dot(&normal, &normal).sqrt()?;
    normal.iter().map(|c| Ok(c.try_div(&norm)?)).collect()
}

/// Jets of everything first-order at a chart point: components,
/// tangents, unit normal, and the induced metric with its inverse.
/// This is the shared substrate for the intrinsic operators and the
/// shell machinery, which evaluate it inside larger jet spaces.
pub struct ChartFrame {
    pub point: JetPoint,
    pub components: Vec<Jet>,
    pub tangents: Vec<Vec<Jet>>,
    pub normal: Vec<Jet>,
    pub metric: JetMatrix,
    pub metric_inv: JetMatrix,
}

impl ChartFrame {
    pub fn new(chart: &Chart, point: JetPoint) -> Result<ChartFrame, GeometryError> {
        let components = chart.eval(&point)?;
        let normal = unit_normal_jets(&components, &point)?;
        let tangents = tangent_jets(&components, &point);
        let n = point.dim();
        let metric = JetMatrix::from_fn(n, n, |i, j| jet_dot(&tangents[i], &tangents[j]));
        let metric_inv = metric.inverse(point.space())?;
        Ok(ChartFrame {
            point,
            components,
            tangents,
            normal,
            metric,
            metric_inv,
        })
    }

    pub fn dim(&self) -> usize {
        self.point.dim()
    }

    /// Second fundamental form `II_ij = ⟨∂²_{ij} X, N⟩` as jets.
    pub fn second_fundamental_jets(&self) -> JetMatrix {
        let n = self.dim();
        JetMatrix::from_fn(n, n, |i, j| {
            let vj = self.point.var(j);
            let second: Vec<Jet> = self.tangents[i].iter().map(|t| t.derivative(vj)).collect();
            jet_dot(&second, &self.normal)
        })
    }

    /// Shape operator `S^i_j = g^{ik} II_kj` as jets.
    pub fn shape_jets(&self) -> JetMatrix {
        self.metric_inv.mul(&self.second_fundamental_jets())
    }
}

/// Unit normal, second fundamental form, shape operator, mean
/// curvature, and principal curvatures at a chart point.
#[derive(Debug, Clone)]
pub struct ExtrinsicData {
    pub normal: DVector<f64>,
    /// `II_ij`, symmetric, lowered indices.
    pub second_fundamental: DMatrix<f64>,
    /// `S^i_j`, mixed indices.
    pub shape: DMatrix<f64>,
    /// `(S²)^i_j`.
    pub shape_squared: DMatrix<f64>,
    /// `H = tr(S)/n`.
    pub mean_curvature: f64,
    /// Eigenvalues of the shape operator, ascending.
    pub principal_curvatures: Vec<f64>,
}

impl ExtrinsicData {
    /// `1 / max|κ|`: the largest normal offset before the nearest focal
    /// point; infinite for flat points.
    pub fn focal_radius(&self) -> f64 {
        let max_kappa = self
            .principal_curvatures
            .iter()
            .fold(0.0f64, |m, k| m.max(k.abs()));
        if max_kappa < 1e-14 {
            f64::INFINITY
        } else {
            1.0 / max_kappa
        }
    }
}

/// Metric, Christoffel symbols, and curvature tensors at a chart point.
#[derive(Debug, Clone)]
pub struct IntrinsicData {
    pub metric: DMatrix<f64>,
    pub metric_inv: DMatrix<f64>,
    /// `∂_k g_ij` as `[[i, j, k]]`.
    pub metric_deriv: Tensor3,
    /// `∂²_{kl} g_ij` as `[[i, j, k, l]]` with the derivative pair in
    /// the last two slots.
    pub metric_second: Tensor4,
    /// `Γ^i_{jk}` as `[[i, j, k]]`.
    pub christoffel: Tensor3,
    /// `∂_l Γ^i_{jk}` as `[[i, j, k, l]]`.
    pub christoffel_deriv: Tensor4,
    /// `R^i_{jkl}` as `[[i, j, k, l]]`.
    pub riemann: Tensor4,
    /// `Ric_ij = R^k_{ikj}`, lowered.
    pub ricci: DMatrix<f64>,
    /// `Ric^i_j = g^{ik} Ric_kj`, mixed.
    pub ricci_mixed: DMatrix<f64>,
}

/// Extrinsic geometry at `u`.
pub fn extrinsic_at(chart: &Chart, u: &[f64]) -> Result<ExtrinsicData, GeometryError> {
    let frame = ChartFrame::new(chart, chart.jet_point(u))?;
    Ok(extrinsic_from_frame(&frame))
}

pub(crate) fn extrinsic_from_frame(frame: &ChartFrame) -> ExtrinsicData {
    let n = frame.dim();
    let normal = DVector::from_iterator(n + 1, frame.normal.iter().map(|c| c.value()));
    let second_fundamental = frame.second_fundamental_jets().values();
    let g = frame.metric.values();
    let g_inv = frame.metric_inv.values();
    let shape = &g_inv * &second_fundamental;
    let shape_squared = &shape * &shape;
    let mean_curvature = shape.trace() / n as f64;

    // eigenvalues of S via the symmetrized pencil g^{-1/2} II g^{-1/2}
    let eig_g = SymmetricEigen::new(g.clone());
    let g_inv_sqrt = &eig_g.eigenvectors
        * DMatrix::from_diagonal(&eig_g.eigenvalues.map(|l| 1.0 / l.max(1e-300).sqrt()))
        * eig_g.eigenvectors.transpose();
    let symmetrized = &g_inv_sqrt * &second_fundamental * &g_inv_sqrt;
    let mut principal_curvatures: Vec<f64> = SymmetricEigen::new(symmetrized)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    principal_curvatures.sort_by(|a, b| a.partial_cmp(b).unwrap());

    ExtrinsicData {
        normal,
        second_fundamental,
        shape,
        shape_squared,
        mean_curvature,
        principal_curvatures,
    }
}

/// Intrinsic geometry at `u`.
pub fn intrinsic_at(chart: &Chart, u: &[f64]) -> Result<IntrinsicData, GeometryError> {
    let frame = ChartFrame::new(chart, chart.jet_point(u))?;
    Ok(intrinsic_from_frame(&frame))
}

pub(crate) fn intrinsic_from_frame(frame: &ChartFrame) -> IntrinsicData {
    let n = frame.dim();
    let metric = frame.metric.values();
    let metric_inv = frame.metric_inv.values();
    let var = |k: usize| frame.point.var(k);
    let metric_deriv = Tensor3::from_fn(n, |i, j, k| frame.metric.get(i, j).partial(&[var(k)]));
    let metric_second = Tensor4::from_fn(n, |i, j, k, l| {
        frame.metric.get(i, j).partial(&[var(k), var(l)])
    });
    let (christoffel, christoffel_deriv) =
        christoffel_from_metric(&metric, &metric_inv, &metric_deriv, &metric_second);

    // R^i_{jkl} = ∂_k Γ^i_{lj} - ∂_l Γ^i_{kj} + Γ^i_{km} Γ^m_{lj} - Γ^i_{lm} Γ^m_{kj}
    let riemann = Tensor4::from_fn(n, |i, j, k, l| {
        let mut acc = christoffel_deriv[[i, l, j, k]] - christoffel_deriv[[i, k, j, l]];
        for m in 0..n {
            acc += christoffel[[i, k, m]] * christoffel[[m, l, j]]
                - christoffel[[i, l, m]] * christoffel[[m, k, j]];
        }
        acc
    });
    let ricci = DMatrix::from_fn(n, n, |j, l| (0..n).map(|k| riemann[[k, j, k, l]]).sum());
    let ricci_mixed = &metric_inv * &ricci;

    IntrinsicData {
        metric,
        metric_inv,
        metric_deriv,
        metric_second,
        christoffel,
        christoffel_deriv,
        riemann,
        ricci,
        ricci_mixed,
    }
}

/// Right-hand side of the Gauss equation for hypersurfaces in flat
/// space: the mixed tensor `nH S^i_j - (S²)^i_j`, which must equal the
/// mixed intrinsic Ricci tensor.
pub fn gauss_ricci(ex: &ExtrinsicData, n: usize) -> DMatrix<f64> {
    &ex.shape * (n as f64 * ex.mean_curvature) - &ex.shape_squared
}

/// Radial derivative of the shape operator at `r = 0`, computed from
/// offset surfaces by central differences with one Richardson step.
#[derive(Debug, Clone)]
pub struct RadialShapeDerivative {
    /// Richardson-extrapolated `∂_r S` at `r = 0`.
    pub derivative: DMatrix<f64>,
    /// `‖D(h) - S²‖∞` against the exact limit.
    pub coarse_residual: f64,
    /// `‖D(h/2) - S²‖∞`.
    pub fine_residual: f64,
    /// `‖extrapolated - S²‖∞`.
    pub residual: f64,
    /// `log2(coarse/fine)`; `None` when both residuals sit at the
    /// roundoff floor (exact agreement, e.g. on a plane).
    pub observed_order: Option<f64>,
    pub step: f64,
}

pub fn shape_radial_derivative(
    chart: &Arc<Chart>,
    u: &[f64],
) -> Result<RadialShapeDerivative, GeometryError> {
    let ex = extrinsic_at(chart, u)?;
    let step = radial_step(&ex);
    let shape_at = |r: f64| -> Result<DMatrix<f64>, GeometryError> {
        Ok(extrinsic_at(&chart.offset(r), u)?.shape)
    };
    let diff = |h: f64| -> Result<DMatrix<f64>, GeometryError> {
        Ok((shape_at(h)? - shape_at(-h)?) / (2.0 * h))
    };
    let coarse = diff(step)?;
    let fine = diff(step / 2.0)?;
    let derivative = (&fine * 4.0 - &coarse) / 3.0;

    let target = &ex.shape_squared;
    let coarse_residual = (&coarse - target).abs().max();
    let fine_residual = (&fine - target).abs().max();
    let residual = (&derivative - target).abs().max();
    let floor = 1e-11 * (1.0 + target.abs().max());
    let observed_order = if coarse_residual < floor || fine_residual < floor {
        None
    } else {
        Some((coarse_residual / fine_residual).log2())
    };
    Ok(RadialShapeDerivative {
        derivative,
        coarse_residual,
        fine_residual,
        residual,
        observed_order,
        step,
    })
}

/// Finite-difference step for radial sweeps: a small fraction of the
/// focal radius, capped so flat surfaces get a sane step too.
pub fn radial_step(ex: &ExtrinsicData) -> f64 {
    1e-3 * ex.focal_radius().min(10.0)
}

// ---------------------------------------------------------------------------
// Built-in surface catalog
// ---------------------------------------------------------------------------

/// Round sphere of the given radius, chart `(u1, u2)` = (azimuth,
/// colatitude). With this variable order the computed normal points
/// toward the center, so `S = Id/R` and `H = 1/R`.
pub fn sphere(radius: f64) -> Result<Chart, GeometryError> {
    let mut chart = ellipsoid_chart(radius, radius, radius)?;
    chart.name = "sphere".into();
    Ok(chart)
}

/// Axis-aligned ellipsoid with semi-axes `(a, b, c)`; same chart and
/// orientation conventions as [`sphere`].
pub fn ellipsoid(a: f64, b: f64, c: f64) -> Result<Chart, GeometryError> {
    ellipsoid_chart(a, b, c)
}

fn ellipsoid_chart(a: f64, b: f64, c: f64) -> Result<Chart, GeometryError> {
    if a <= 0.0 || b <= 0.0 || c <= 0.0 {
        return Err(GeometryError::Construction(
            "ellipsoid semi-axes must be positive".into(),
        ));
    }
    let components = vec![
        AnalyticFn::closure(move |p: &JetPoint| {
            Ok((&p.jets()[1].sin() * &p.jets()[0].cos()).scale(a))
        }),
        AnalyticFn::closure(move |p: &JetPoint| {
            Ok((&p.jets()[1].sin() * &p.jets()[0].sin()).scale(b))
        }),
        AnalyticFn::closure(move |p: &JetPoint| Ok(p.jets()[1].cos().scale(c))),
    ];
    Chart::new(
        "ellipsoid",
        components,
        vec![(0.0, std::f64::consts::TAU), (0.0, std::f64::consts::PI)],
    )
}

/// Torus of revolution with major radius `major` and tube radius
/// `minor`; chart `(u1, u2)` = (major angle, tube angle).
pub fn torus(major: f64, minor: f64) -> Result<Chart, GeometryError> {
    if !(major > minor && minor > 0.0) {
        return Err(GeometryError::Construction(
            "torus needs major > minor > 0".into(),
        ));
    }
    let components = vec![
        AnalyticFn::closure(move |p: &JetPoint| {
            Ok(&p.jets()[1].cos().scale(minor).add_scalar(major) * &p.jets()[0].cos())
        }),
        AnalyticFn::closure(move |p: &JetPoint| {
            Ok(&p.jets()[1].cos().scale(minor).add_scalar(major) * &p.jets()[0].sin())
        }),
        AnalyticFn::closure(move |p: &JetPoint| Ok(p.jets()[1].sin().scale(minor))),
    ];
    Chart::new(
        "torus",
        components,
        vec![(0.0, std::f64::consts::TAU), (0.0, std::f64::consts::TAU)],
    )
}

/// Graph surface `(u1, u2, f(u1, u2))`.
pub fn graph(f: AnalyticFn, domain: Option<Vec<(f64, f64)>>) -> Result<Chart, GeometryError> {
    let components = vec![
        AnalyticFn::closure(|p: &JetPoint| Ok(p.jets()[0].clone())),
        AnalyticFn::closure(|p: &JetPoint| Ok(p.jets()[1].clone())),
        f,
    ];
    Chart::new(
        "graph",
        components,
        domain.unwrap_or_else(|| vec![(-1.0, 1.0), (-1.0, 1.0)]),
    )
}

/// Graph surface from an expression in `u1, u2`.
pub fn graph_expr(source: &str, domain: Option<Vec<(f64, f64)>>) -> Result<Chart, GeometryError> {
    let f = Expr::parse(source, &["u1", "u2"])?;
    graph(AnalyticFn::Expr(f), domain)
}

/// Surface from explicit ambient component expressions in `u1..un`.
pub fn custom(sources: &[String], domain: Vec<(f64, f64)>) -> Result<Chart, GeometryError> {
    let names: Vec<String> = (1..=domain.len()).map(|i| format!("u{i}")).collect();
    let name_refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    let components = sources
        .iter()
        .map(|s| Ok(AnalyticFn::Expr(Expr::parse(s, &name_refs)?)))
        .collect::<Result<Vec<_>, ParseError>>()?;
    Chart::new("custom", components, domain)
}

/// Seeded random smooth surface: a graph whose horizontal coordinates
/// are sheared by small trigonometric terms. Amplitudes are kept small
/// enough that the parametrization stays an immersion on the whole
/// domain.
pub fn random_custom(seed: u64) -> Chart {
    let mut rng = seeded_rng(seed, 0xC0FFEE);
    let mut component = |linear: [f64; 2], amp: f64| {
        let mut poly = TrigPoly::random(&mut rng, 2, 3, 2, amp);
        poly.linear = linear.to_vec();
        AnalyticFn::Trig(poly)
    };
    let components = vec![
        component([1.0, 0.0], 0.04),
        component([0.0, 1.0], 0.04),
        component([0.0, 0.0], 0.12),
    ];
    Chart::new(
        format!("custom-seed{seed}"),
        components,
        vec![(-1.0, 1.0), (-1.0, 1.0)],
    )
    .expect("random custom chart is well-formed")
}

/// Descriptor for one catalog entry, for CLI listings.
pub struct CatalogEntry {
    pub name: &'static str,
    pub parameters: &'static str,
    pub chart: &'static str,
    pub domain: &'static str,
}

pub fn catalog() -> Vec<CatalogEntry> {
    vec![
        CatalogEntry {
            name: "sphere",
            parameters: "R (radius, default 1)",
            chart: "(u1, u2) = (azimuth, colatitude)",
            domain: "[0, 2pi] x [0, pi]",
        },
        CatalogEntry {
            name: "ellipsoid",
            parameters: "a, b, c (semi-axes, default 1, 1.3, 2)",
            chart: "(u1, u2) = (azimuth, colatitude)",
            domain: "[0, 2pi] x [0, pi]",
        },
        CatalogEntry {
            name: "torus",
            parameters: "R, r (major/minor radii, default 2, 0.7)",
            chart: "(u1, u2) = (major angle, tube angle)",
            domain: "[0, 2pi] x [0, 2pi]",
        },
        CatalogEntry {
            name: "graph",
            parameters: "f (expression in u1, u2)",
            chart: "(u1, u2, f(u1, u2))",
            domain: "[-1, 1]^2 unless overridden",
        },
        CatalogEntry {
            name: "custom",
            parameters: "n+1 component expressions in u1..un plus a domain box, or seed=<k> for a seeded random surface",
            chart: "(X1(u), ..., Xn+1(u))",
            domain: "as configured",
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane() -> Arc<Chart> {
        Arc::new(
            custom(
                &["u1".into(), "u2".into(), "0".into()],
                vec![(-2.0, 2.0), (-2.0, 2.0)],
            )
            .unwrap(),
        )
    }

    fn interior_points(chart: &Chart, count: usize, seed: u64) -> Vec<Vec<f64>> {
        use rand::Rng;
        let mut rng = seeded_rng(seed, 1);
        (0..count)
            .map(|_| {
                chart
                    .domain()
                    .iter()
                    .map(|&(lo, hi)| {
                        let pad = 0.05 * (hi - lo);
                        rng.random_range(lo + pad..hi - pad)
                    })
                    .collect()
            })
            .collect()
    }

    fn max_abs(m: &DMatrix<f64>) -> f64 {
        m.abs().max()
    }

    #[test]
    fn unit_sphere_shape_operator_is_identity() {
        let chart = sphere(1.0).unwrap();
        for u in interior_points(&chart, 8, 3) {
            let ex = extrinsic_at(&chart, &u).unwrap();
            let id = DMatrix::identity(2, 2);
            assert!(max_abs(&(&ex.shape - &id)) < 1e-11, "S != Id at {u:?}");
            assert!((ex.mean_curvature - 1.0).abs() < 1e-11);
            assert!(max_abs(&(&ex.shape_squared - &id)) < 1e-10);
            assert!((ex.normal.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sphere_curvature_scales_with_radius() {
        let chart = sphere(2.5).unwrap();
        let u = [1.1, 1.9];
        let ex = extrinsic_at(&chart, &u).unwrap();
        assert!((ex.mean_curvature - 1.0 / 2.5).abs() < 1e-12);
        let expected = DMatrix::identity(2, 2) / 2.5;
        assert!(max_abs(&(&ex.shape - &expected)) < 1e-12);
    }

    #[test]
    fn normal_is_orthonormal_to_tangents() {
        let chart = ellipsoid(1.0, 1.3, 2.0).unwrap();
        for u in interior_points(&chart, 10, 4) {
            let frame = ChartFrame::new(&chart, chart.jet_point(&u)).unwrap();
            let normal: Vec<f64> = frame.normal.iter().map(|c| c.value()).collect();
            let norm: f64 = normal.iter().map(|x| x * x).sum::<f64>();
            assert!((norm - 1.0).abs() < 1e-12);
            for i in 0..2 {
                let dot: f64 = (0..3)
                    .map(|a| frame.tangents[i][a].value() * normal[a])
                    .sum();
                assert!(dot.abs() < 1e-12, "N not orthogonal at {u:?}");
            }
        }
    }

    #[test]
    fn ellipsoid_pole_principal_curvatures() {
        // the pole is a coordinate degeneracy of the angular chart, so
        // probe it on the graph chart of the upper cap where it is a
        // regular interior point; for semi-axes (a, b, c) the principal
        // curvatures there are c/a² and c/b²
        let (a, b, c): (f64, f64, f64) = (1.0, 1.3, 2.0);
        let src = format!("{c}*sqrt(1 - u1^2/{} - u2^2/{})", a * a, b * b);
        let chart = graph_expr(&src, Some(vec![(-0.5, 0.5), (-0.5, 0.5)])).unwrap();
        let ex = extrinsic_at(&chart, &[0.0, 0.0]).unwrap();
        let mut expected = [c / (a * a), c / (b * b)];
        expected.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let mut got: Vec<f64> = ex.principal_curvatures.iter().map(|k| k.abs()).collect();
        got.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert!(
            (got[0] - expected[0]).abs() < 1e-10,
            "{got:?} vs {expected:?}"
        );
        assert!((got[1] - expected[1]).abs() < 1e-10);
        // (1, 1, 2): both curvatures equal c/a² = 2
        let chart = graph_expr(
            "2*sqrt(1 - u1^2 - u2^2)",
            Some(vec![(-0.5, 0.5), (-0.5, 0.5)]),
        )
        .unwrap();
        let ex = extrinsic_at(&chart, &[0.0, 0.0]).unwrap();
        for k in &ex.principal_curvatures {
            assert!((k.abs() - 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn plane_is_intrinsically_flat() {
        let chart = plane();
        let data = intrinsic_at(&chart, &[0.3, -0.8]).unwrap();
        assert!(data.christoffel.norm_inf() < 1e-14);
        assert!(max_abs(&data.ricci) < 1e-14);
        let ex = extrinsic_at(&chart, &[0.3, -0.8]).unwrap();
        assert!(max_abs(&ex.shape) < 1e-14);
    }

    #[test]
    fn unit_sphere_ricci_equals_metric() {
        let chart = sphere(1.0).unwrap();
        for u in interior_points(&chart, 6, 5) {
            let data = intrinsic_at(&chart, &u).unwrap();
            assert!(
                max_abs(&(&data.ricci - &data.metric)) < 1e-10,
                "Ric != g at {u:?}"
            );
        }
    }

    #[test]
    fn torus_outer_equator_curvature() {
        // K = cos θ / (r (R + r cos θ)); at the outer equator θ = 0 with
        // (R, r) = (2, 1) this is 1/3, and Ric^i_j = K δ^i_j in 2D
        let chart = torus(2.0, 1.0).unwrap();
        let data = intrinsic_at(&chart, &[0.9, 0.0]).unwrap();
        let expected = DMatrix::identity(2, 2) / 3.0;
        assert!(max_abs(&(&data.ricci_mixed - &expected)) < 1e-10);
    }

    #[test]
    fn gauss_identity_across_catalog() {
        let charts: Vec<Arc<Chart>> = vec![
            Arc::new(sphere(1.0).unwrap()),
            Arc::new(ellipsoid(1.0, 1.3, 2.0).unwrap()),
            Arc::new(torus(2.0, 0.7).unwrap()),
            Arc::new(graph_expr("sin(u1)*cos(u2)", None).unwrap()),
            Arc::new(random_custom(11)),
        ];
        for chart in &charts {
            for u in interior_points(chart, 20, 7) {
                let ex = extrinsic_at(chart, &u).unwrap();
                let data = intrinsic_at(chart, &u).unwrap();
                let rhs = gauss_ricci(&ex, chart.dim());
                let gap = max_abs(&(&data.ricci_mixed - &rhs));
                assert!(
                    gap < 1e-8,
                    "Gauss identity fails on {} at {u:?}: {gap:e}",
                    chart.name()
                );
            }
        }
    }

    #[test]
    fn gauss_ricci_is_orientation_invariant() {
        let chart = Arc::new(ellipsoid(1.0, 1.3, 2.0).unwrap());
        let flipped = Arc::new(chart.swapped());
        let u = [0.8, 1.2];
        let v = [1.2, 0.8];
        let a = gauss_ricci(&extrinsic_at(&chart, &u).unwrap(), 2);
        let b = gauss_ricci(&extrinsic_at(&flipped, &v).unwrap(), 2);
        // mixed-index entries transpose under the variable swap
        assert!((a[(0, 0)] - b[(1, 1)]).abs() < 1e-10);
        assert!((a[(1, 1)] - b[(0, 0)]).abs() < 1e-10);
        assert!((a[(0, 1)] - b[(1, 0)]).abs() < 1e-10);
        // the normal itself flips
        let na = extrinsic_at(&chart, &u).unwrap().normal;
        let nb = extrinsic_at(&flipped, &v).unwrap().normal;
        assert!((na + nb).norm() < 1e-12);
    }

    #[test]
    fn shape_operator_self_adjoint_and_consistent() {
        let chart = ellipsoid(1.0, 1.3, 2.0).unwrap();
        for u in interior_points(&chart, 10, 8) {
            let ex = extrinsic_at(&chart, &u).unwrap();
            let frame = ChartFrame::new(&chart, chart.jet_point(&u)).unwrap();
            let g = frame.metric.values();
            let gs = &g * &ex.shape;
            assert!(
                max_abs(&(&gs - &gs.transpose())) < 1e-10,
                "S not self-adjoint"
            );
            assert!(
                max_abs(&(&gs - &ex.second_fundamental)) < 1e-10,
                "II != g S"
            );
        }
    }

    #[test]
    fn riemann_first_bianchi() {
        let chart = torus(2.0, 0.7).unwrap();
        for u in interior_points(&chart, 6, 9) {
            let data = intrinsic_at(&chart, &u).unwrap();
            let n = 2;
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        for l in 0..n {
                            let cyc = data.riemann[[i, j, k, l]]
                                + data.riemann[[i, k, l, j]]
                                + data.riemann[[i, l, j, k]];
                            assert!(cyc.abs() < 1e-9);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn metric_inverse_identity() {
        let chart = random_custom(5);
        for u in interior_points(&chart, 6, 10) {
            let data = intrinsic_at(&chart, &u).unwrap();
            let id = DMatrix::identity(2, 2);
            assert!(max_abs(&(&data.metric * &data.metric_inv - &id)) < 1e-12);
        }
    }

    #[test]
    fn shape_radial_derivative_matches_shape_squared() {
        let round = Arc::new(sphere(1.0).unwrap());
        let report = shape_radial_derivative(&round, &[1.0, 1.3]).unwrap();
        let id = DMatrix::identity(2, 2);
        assert!(max_abs(&(&report.derivative - &id)) < 1e-9);

        let flat = plane();
        let report = shape_radial_derivative(&flat, &[0.2, 0.4]).unwrap();
        assert!(max_abs(&report.derivative) < 1e-12);
        assert!(report.observed_order.is_none(), "flat case is exact");

        let ell = Arc::new(ellipsoid(1.0, 1.3, 2.0).unwrap());
        for u in interior_points(&ell, 5, 12) {
            let report = shape_radial_derivative(&ell, &u).unwrap();
            assert!(
                report.residual < 1e-6,
                "residual {:e} at {u:?}",
                report.residual
            );
            let order = report.observed_order.expect("curved case has a signal");
            assert!(
                (1.6..2.4).contains(&order),
                "unexpected convergence order {order} at {u:?}"
            );
        }
    }

    #[test]
    fn degenerate_immersion_detected() {
        let chart = custom(
            &["u1".into(), "u1".into(), "0".into()],
            vec![(-1.0, 1.0), (-1.0, 1.0)],
        )
        .unwrap();
        match extrinsic_at(&chart, &[0.1, 0.2]) {
            Err(GeometryError::DegenerateImmersion { .. }) => {}
            other => panic!("expected degeneracy, got {other:?}"),
        }
        // sphere pole: the azimuth tangent collapses
        let pole = sphere(1.0).unwrap();
        assert!(matches!(
            extrinsic_at(&pole, &[0.3, 0.0]),
            Err(GeometryError::DegenerateImmersion { .. })
        ));
    }

    #[test]
    fn offset_chart_beyond_focal_radius_degenerates() {
        let chart = Arc::new(sphere(1.0).unwrap());
        // the normal points toward the center, so the offset surface
        // collapses to a point at r = +1 (the focal radius)
        let inside = chart.offset(1.0);
        assert!(matches!(
            extrinsic_at(&inside, &[1.0, 1.3]),
            Err(GeometryError::DegenerateImmersion { .. })
        ));
        let outside = chart.offset(-0.5);
        let ex = extrinsic_at(&outside, &[1.0, 1.3]).unwrap();
        // sphere of radius 1.5 with the same orientation convention
        assert!((ex.mean_curvature - 1.0 / 1.5).abs() < 1e-10);
    }
}
