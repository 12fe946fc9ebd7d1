//! The thin shell around a hypersurface in Fermi coordinates.
//!
//! Points near the surface are written `Y(r, u) = X(u) + r N(u)` with
//! `r` the signed normal distance. The ambient metric is then the block
//! `dr² + g_ij(r, u) du^i du^j`; since the ambient space is flat the
//! tangential block is exactly quadratic in `r`:
//! `g(r) = g − 2r II + r² (S²)♭` with no cubic remainder.
//!
//! A [`ShellField`] extends a tangential surface field `V` into the
//! shell as `U^i = V^i + r A^i + r²/2 B^i`, `U^r = 0`, where the radial
//! coefficients come from a [`BoundaryProfile`]:
//!
//! - `Slip` (stress-free wall): `A = 0, B = 0`,
//! - `Hodge` (covariant components constant in `r`): `A = 2SV, B = 6S²V`,
//! - `Alpha(α)` (partial slip): `A = 2αSV, B = 2α(1+2α)S²V`,
//!
//! so `Alpha(0)` and `Alpha(1)` reproduce the Slip and Hodge pairs
//! exactly. The module computes the tangential components of the
//! ambient Bochner Laplacian of `U` at `r = 0` directly from jets of
//! the exact shell metric, plus the closed-form radial/tangential
//! traces and the boundary-shear term `F_rad = ∂²_r U − (nH + 2S) ∂_r U`
//! that the decomposition splits off. Closed forms are always checked
//! against the direct computation before being returned.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::fields::{self, OperatorValue, TangentField};
use crate::geometry::{
    extrinsic_from_frame, radial_step, Chart, ChartFrame, ExtrinsicData, GeometryError,
};
use crate::jet::{jet_dot, Jet, JetPoint, JetSpace};
use crate::tensor::{christoffel_from_metric, JetMatrix, Tensor3, Tensor4};

/// Agreement required between a closed-form trace and its direct
/// shell-metric computation.
pub const TRACE_CONSISTENCY_TOL: f64 = 1e-6;

/// Boundary condition at the shell walls, reduced to the first and
/// second radial derivatives it forces on the extension at `r = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryProfile {
    /// Stress-free (Navier slip): `∂_r U = 0`, `∂²_r U = 0`.
    Slip,
    /// Zero tangential vorticity: `∂_r U = 2SU`, `∂²_r U = 6S²U`.
    Hodge,
    /// Partial slip: `∂_r U = 2αSU`, `∂²_r U = 2α(1+2α)S²U`.
    Alpha(f64),
}

impl BoundaryProfile {
    /// Coefficients `(c1, c2)` with `∂_r U = c1·SV` and
    /// `∂²_r U = c2·S²V`. `Alpha(0)` and `Alpha(1)` produce exactly the
    /// Slip and Hodge pairs.
    pub fn radial_coefficients(&self) -> (f64, f64) {
        match *self {
            BoundaryProfile::Slip => (0.0, 0.0),
            BoundaryProfile::Hodge => (2.0, 6.0),
            BoundaryProfile::Alpha(a) => (2.0 * a, 2.0 * a * (1.0 + 2.0 * a)),
        }
    }

    /// Equivalent position in the interpolating family.
    pub fn alpha(&self) -> f64 {
        match *self {
            BoundaryProfile::Slip => 0.0,
            BoundaryProfile::Hodge => 1.0,
            BoundaryProfile::Alpha(a) => a,
        }
    }

    /// `∂_r U` at `r = 0` as values.
    pub fn first_radial(&self, shape: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
        let (c1, _) = self.radial_coefficients();
        if c1 == 0.0 {
            DVector::zeros(v.len())
        } else {
            shape * v * c1
        }
    }

    /// `∂²_r U` at `r = 0` as values.
    pub fn second_radial(&self, shape_squared: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
        let (_, c2) = self.radial_coefficients();
        if c2 == 0.0 {
            DVector::zeros(v.len())
        } else {
            shape_squared * v * c2
        }
    }
}

impl fmt::Display for BoundaryProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryProfile::Slip => write!(f, "slip"),
            BoundaryProfile::Hodge => write!(f, "hodge"),
            BoundaryProfile::Alpha(a) => write!(f, "alpha:{a}"),
        }
    }
}

/// A tangential surface field together with the boundary profile that
/// fixes its quadratic-in-`r` extension into the shell.
#[derive(Debug, Clone)]
pub struct ShellField {
    pub velocity: TangentField,
    pub profile: BoundaryProfile,
}

impl ShellField {
    pub fn new(velocity: TangentField, profile: BoundaryProfile) -> ShellField {
        ShellField { velocity, profile }
    }
}

/// Evaluator for the exact shell metric `dr² + g_ij(r, u)`.
pub struct ShellMetric {
    chart: Arc<Chart>,
}

impl ShellMetric {
    pub fn new(chart: Arc<Chart>) -> ShellMetric {
        ShellMetric { chart }
    }

    /// Full `(n+1) × (n+1)` metric values at `(r, u)`, radial slot
    /// first.
    pub fn block_at(&self, r: f64, u: &[f64]) -> Result<DMatrix<f64>, GeometryError> {
        Ok(ShellEvaluation::new(&self.chart, u, r)?.gbar_val)
    }

    /// Tangential block `g_ij(r, u)`.
    pub fn tangential_at(&self, r: f64, u: &[f64]) -> Result<DMatrix<f64>, GeometryError> {
        let full = self.block_at(r, u)?;
        let n = self.chart.dim();
        Ok(full.view((1, 1), (n, n)).into_owned())
    }
}

/// All shell data at a base point `(r0, u)`: jets of the extension
/// coordinates, the exact metric, and its Christoffel symbols with
/// first derivatives. Ambient index 0 is the radial direction,
/// `1..=n` the chart directions.
pub(crate) struct ShellEvaluation {
    n: usize,
    r0: f64,
    space: Arc<JetSpace>,
    frame: ChartFrame,
    extrinsic: ExtrinsicData,
    gbar: JetMatrix,
    gbar_val: DMatrix<f64>,
    gbar_inv: DMatrix<f64>,
    christoffel: Tensor3,
    christoffel_deriv: Tensor4,
}

impl ShellEvaluation {
    pub(crate) fn new(chart: &Chart, u: &[f64], r0: f64) -> Result<ShellEvaluation, GeometryError> {
        let n = chart.dim();
        let space = JetSpace::shared(n + 1);
        let vars: Vec<usize> = (1..=n).collect();
        let point = JetPoint::embedded(&space, &vars, u);
        let frame = ChartFrame::new(chart, point)?;
        let extrinsic = extrinsic_from_frame(&frame);
        let focal = extrinsic.focal_radius();
        if r0.abs() >= 0.999 * focal {
            return Err(GeometryError::FocalDegeneracy {
                point: u.to_vec(),
                r: r0,
                focal,
            });
        }

        let r_jet = Jet::seed_variable(&space, 0, r0).expect("radial slot exists");
        let y: Vec<Jet> = frame
            .components
            .iter()
            .zip(&frame.normal)
            .map(|(x, nrm)| x + &(&r_jet * nrm))
            .collect();
        let dy: Vec<Vec<Jet>> = (0..=n)
            .map(|a| y.iter().map(|c| c.derivative(a)).collect::<Vec<_>>())
            .collect();
        let gbar = JetMatrix::from_fn(n + 1, n + 1, |a, b| jet_dot(&dy[a], &dy[b]));
        let gbar_val = gbar.values();
        let gbar_inv = gbar_val
            .clone()
            .try_inverse()
            .ok_or(GeometryError::FocalDegeneracy {
                point: u.to_vec(),
                r: r0,
                focal,
            })?;
        let dgbar = Tensor3::from_fn(n + 1, |a, b, c| gbar.get(a, b).partial(&[c]));
        let d2gbar = Tensor4::from_fn(n + 1, |a, b, c, d| gbar.get(a, b).partial(&[c, d]));
        let (christoffel, christoffel_deriv) =
            christoffel_from_metric(&gbar_val, &gbar_inv, &dgbar, &d2gbar);

        Ok(ShellEvaluation {
            n,
            r0,
            space,
            frame,
            extrinsic,
            gbar,
            gbar_val,
            gbar_inv,
            christoffel,
            christoffel_deriv,
        })
    }

    /// Extension components as jets, radial slot first (`U^r = 0`).
    fn field_jets(&self, sf: &ShellField) -> Result<Vec<Jet>, GeometryError> {
        let v = sf.velocity.eval_jets(&self.frame.point)?;
        let (c1, c2) = sf.profile.radial_coefficients();
        let mut jets = vec![Jet::constant(&self.space, 0.0)];
        if c1 == 0.0 && c2 == 0.0 {
            jets.extend(v);
            return Ok(jets);
        }
        let shape = self.frame.shape_jets();
        let sv = shape.mul_vec(&v);
        let s2v = shape.mul_vec(&sv);
        let r_jet = Jet::seed_variable(&self.space, 0, self.r0).expect("radial slot exists");
        let half_r_sq = (&r_jet * &r_jet).scale(0.5);
        for i in 0..self.n {
            let linear = &r_jet * &sv[i].scale(c1);
            let quadratic = &half_r_sq * &s2v[i].scale(c2);
            jets.push(&(&v[i] + &linear) + &quadratic);
        }
        Ok(jets)
    }

    /// Full second covariant derivative `∇̄_a ∇̄_b U^c` of the extension
    /// under the exact shell metric, one matrix per component `c`.
    fn second_covariant(&self, u_jets: &[Jet]) -> Vec<DMatrix<f64>> {
        let dim = self.n + 1;
        let uval: Vec<f64> = u_jets.iter().map(|j| j.value()).collect();
        let du: Vec<Vec<f64>> = u_jets
            .iter()
            .map(|j| (0..dim).map(|a| j.partial(&[a])).collect())
            .collect();
        let d2u: Vec<Vec<Vec<f64>>> = u_jets
            .iter()
            .map(|j| {
                (0..dim)
                    .map(|a| (0..dim).map(|b| j.partial(&[a, b])).collect())
                    .collect()
            })
            .collect();
        let gam = &self.christoffel;
        let dgam = &self.christoffel_deriv;
        // first covariant derivative W^c_b = ∂_b U^c + Γ̄^c_{bd} U^d
        let w = |c: usize, b: usize| -> f64 {
            let mut acc = du[c][b];
            for (d, &uv) in uval.iter().enumerate() {
                acc += gam[[c, b, d]] * uv;
            }
            acc
        };
        (0..dim)
            .map(|c| {
                DMatrix::from_fn(dim, dim, |a, b| {
                    // ∂_a W^c_b
                    let mut acc = d2u[c][a][b];
                    for (d, &uv) in uval.iter().enumerate() {
                        acc += dgam[[c, b, d, a]] * uv + gam[[c, b, d]] * du[d][a];
                    }
                    // + Γ̄^c_{am} W^m_b − Γ̄^m_{ab} W^c_m
                    for m in 0..dim {
                        acc += gam[[c, a, m]] * w(m, b);
                        acc -= gam[[m, a, b]] * w(c, m);
                    }
                    acc
                })
            })
            .collect()
    }

    /// `∇̄_r U^i` values at this base radius (tangential components;
    /// the radial component vanishes identically in Fermi coordinates).
    fn radial_covariant_derivative(&self, u_jets: &[Jet]) -> DVector<f64> {
        DVector::from_fn(self.n, |i, _| {
            let c = i + 1;
            let mut acc = u_jets[c].partial(&[0]);
            for (d, jet) in u_jets.iter().enumerate() {
                acc += self.christoffel[[c, 0, d]] * jet.value();
            }
            acc
        })
    }
}

/// Residuals of the exact shell metric against the quadratic expansion
/// `g − 2r II + r² (S²)♭` at one radius pair `(r, r/2)`.
#[derive(Debug, Clone)]
pub struct MetricExpansionRow {
    pub r: f64,
    pub residual: f64,
    pub residual_half: f64,
    /// `log2(residual / residual_half)`; `None` when both sit at the
    /// roundoff floor — in flat ambient space the expansion is exact,
    /// so this is the expected outcome.
    pub observed_order: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct MetricExpansionReport {
    pub rows: Vec<MetricExpansionRow>,
    pub floor: f64,
}

impl MetricExpansionReport {
    /// Smallest observed order, with exact rows counting as infinite.
    pub fn min_order(&self) -> f64 {
        self.rows
            .iter()
            .map(|row| row.observed_order.unwrap_or(f64::INFINITY))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_residual(&self) -> f64 {
        self.rows
            .iter()
            .map(|row| row.residual.max(row.residual_half))
            .fold(0.0, f64::max)
    }
}

/// Measures the remainder of the quadratic metric expansion at each
/// requested radius (and half of it). The remainder is `O(r³)` by
/// general theory; for a flat ambient space it vanishes identically,
/// which reports as residuals at the roundoff floor and no finite
/// order.
pub fn metric_expansion_check(
    chart: &Arc<Chart>,
    u: &[f64],
    r_values: &[f64],
) -> Result<MetricExpansionReport, GeometryError> {
    let base = ShellEvaluation::new(chart, u, 0.0)?;
    let n = base.n;
    let g0 = base.gbar_val.view((1, 1), (n, n)).into_owned();
    let ii = &base.extrinsic.second_fundamental;
    let third = ii * &g0.clone().try_inverse().expect("surface metric invertible") * ii;
    let metric = ShellMetric::new(chart.clone());
    let floor = 1e-12 * (1.0 + g0.abs().max());

    let residual_at = |r: f64| -> Result<f64, GeometryError> {
        let expansion = &g0 - ii * (2.0 * r) + &third * (r * r);
        Ok((metric.tangential_at(r, u)? - expansion).abs().max())
    };

    let mut rows = Vec::with_capacity(r_values.len());
    for &r in r_values {
        let residual = residual_at(r)?;
        let residual_half = residual_at(r / 2.0)?;
        let observed_order = if residual < floor || residual_half < floor {
            None
        } else {
            Some((residual / residual_half).log2())
        };
        rows.push(MetricExpansionRow {
            r,
            residual,
            residual_half,
            observed_order,
        });
    }
    Ok(MetricExpansionReport { rows, floor })
}

/// Christoffel symbols of the shell metric at `r = 0`, with the largest
/// deviation from their surface-quantity values (`Γ̄^r_{ij} = II_ij`,
/// `Γ̄^i_{rj} = -S^i_j`, `Γ̄^i_{jk} = Γ^i_{jk}`, and vanishing
/// `Γ̄^r_{rr}, Γ̄^i_{rr}, Γ̄^r_{ri}`).
#[derive(Debug, Clone)]
pub struct AmbientChristoffel {
    /// Index 0 is radial; `table[[a, b, c]] = Γ̄^a_{bc}`.
    pub table: Tensor3,
    /// Max absolute deviation from the surface-quantity table.
    pub residual: f64,
}

pub fn ambient_christoffel(chart: &Chart, u: &[f64]) -> Result<AmbientChristoffel, GeometryError> {
    let ev = ShellEvaluation::new(chart, u, 0.0)?;
    let n = ev.n;
    let intrinsic = crate::geometry::intrinsic_from_frame(&ev.frame);
    let ii = &ev.extrinsic.second_fundamental;
    let shape = &ev.extrinsic.shape;

    let mut residual = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            residual = residual.max((ev.christoffel[[0, i + 1, j + 1]] - ii[(i, j)]).abs());
            residual = residual.max((ev.christoffel[[i + 1, 0, j + 1]] + shape[(i, j)]).abs());
            for k in 0..n {
                residual = residual.max(
                    (ev.christoffel[[i + 1, j + 1, k + 1]] - intrinsic.christoffel[[i, j, k]])
                        .abs(),
                );
            }
        }
        residual = residual.max(ev.christoffel[[i + 1, 0, 0]].abs());
        residual = residual.max(ev.christoffel[[0, 0, i + 1]].abs());
    }
    residual = residual.max(ev.christoffel[[0, 0, 0]].abs());

    Ok(AmbientChristoffel {
        table: ev.christoffel,
        residual,
    })
}

/// Closed-form value of a trace together with the direct shell-metric
/// computation it was checked against.
#[derive(Debug, Clone)]
pub struct TraceResult {
    /// The closed-form value (the returned quantity of record).
    pub value: OperatorValue,
    /// The direct computation through the exact shell metric.
    pub direct: OperatorValue,
    /// `‖direct − value‖ / (1 + ‖value‖)`.
    pub consistency_gap: f64,
}

/// `∇̄_r ∇̄_r U` at `r = 0`: returns the closed form `∂²_r U − 2S ∂_r U`
/// after checking it against a direct Richardson sweep of the covariant
/// radial derivative through the exact shell metric.
pub fn radial_trace(
    sf: &ShellField,
    chart: &Chart,
    u: &[f64],
) -> Result<TraceResult, GeometryError> {
    let base = ShellEvaluation::new(chart, u, 0.0)?;
    let v = sf.velocity.values(u)?;
    let first = sf.profile.first_radial(&base.extrinsic.shape, &v);
    let second = sf.profile.second_radial(&base.extrinsic.shape_squared, &v);
    let closed = &second - &base.extrinsic.shape * &first * 2.0;

    let w_at = |r: f64| -> Result<DVector<f64>, GeometryError> {
        let ev = ShellEvaluation::new(chart, u, r)?;
        let jets = ev.field_jets(sf)?;
        Ok(ev.radial_covariant_derivative(&jets))
    };
    let h = radial_step(&base.extrinsic);
    let diff =
        |h: f64| -> Result<DVector<f64>, GeometryError> { Ok((w_at(h)? - w_at(-h)?) / (2.0 * h)) };
    let extrapolated = (diff(h / 2.0)? * 4.0 - diff(h)?) / 3.0;
    // ∇̄_r (∇̄_r U)^i = ∂_r W^i + Γ̄^i_{r m} W^m with W = ∇̄_r U
    let w0 = base.radial_covariant_derivative(&base.field_jets(sf)?);
    let mut direct = extrapolated;
    for i in 0..base.n {
        for m in 0..base.n {
            direct[i] += base.christoffel[[i + 1, 0, m + 1]] * w0[m];
        }
    }

    let gap = (&direct - &closed).norm() / (1.0 + closed.norm());
    if gap > TRACE_CONSISTENCY_TOL {
        return Err(GeometryError::ConsistencyFailure {
            check: "radial trace closed form vs direct".into(),
            residual: gap,
            tolerance: TRACE_CONSISTENCY_TOL,
        });
    }
    Ok(TraceResult {
        value: closed,
        direct,
        consistency_gap: gap,
    })
}

/// `g^{jk} ∇̄_j ∇̄_k U` at `r = 0`: returns the closed form
/// `Δ_B V − S²V + nH SV − nH ∂_r U` after checking it against the
/// direct contraction of the shell-metric covariant derivatives.
pub fn tangential_trace(
    sf: &ShellField,
    chart: &Chart,
    u: &[f64],
) -> Result<TraceResult, GeometryError> {
    let ev = ShellEvaluation::new(chart, u, 0.0)?;
    let n = ev.n;
    let v = sf.velocity.values(u)?;
    let bochner = fields::bochner(&sf.velocity, chart, u)?;
    let first = sf.profile.first_radial(&ev.extrinsic.shape, &v);
    let nh = n as f64 * ev.extrinsic.mean_curvature;
    let closed =
        &bochner - &ev.extrinsic.shape_squared * &v + &ev.extrinsic.shape * &v * nh - &first * nh;

    let jets = ev.field_jets(sf)?;
    let hess = ev.second_covariant(&jets);
    let direct = DVector::from_fn(n, |i, _| {
        let mut acc = 0.0;
        for j in 0..n {
            for k in 0..n {
                acc += ev.gbar_inv[(j + 1, k + 1)] * hess[i + 1][(j + 1, k + 1)];
            }
        }
        acc
    });

    let gap = (&direct - &closed).norm() / (1.0 + closed.norm());
    if gap > TRACE_CONSISTENCY_TOL {
        return Err(GeometryError::ConsistencyFailure {
            check: "tangential trace closed form vs direct".into(),
            residual: gap,
            tolerance: TRACE_CONSISTENCY_TOL,
        });
    }
    Ok(TraceResult {
        value: closed,
        direct,
        consistency_gap: gap,
    })
}

/// The radial boundary-shear term `F_rad = ∂²_r U − (nH·Id + 2S) ∂_r U`
/// evaluated from the profile's radial derivative pair. For the Slip
/// profile both derivatives vanish, so the result is exactly zero.
pub fn f_rad(
    profile: &BoundaryProfile,
    chart: &Chart,
    u: &[f64],
    velocity: &TangentField,
) -> Result<OperatorValue, GeometryError> {
    let ex = crate::geometry::extrinsic_at(chart, u)?;
    let v = velocity.values(u)?;
    let first = profile.first_radial(&ex.shape, &v);
    let second = profile.second_radial(&ex.shape_squared, &v);
    let nh = chart.dim() as f64 * ex.mean_curvature;
    Ok(&second - &first * nh - &ex.shape * &first * 2.0)
}

/// Tangential components of the ambient Bochner Laplacian of the
/// extension at `r = 0`, computed entirely from jets of the exact shell
/// metric — no closed forms. This is the quantity the decomposition and
/// the boundary-condition theorems are about.
pub fn ambient_bochner_tangential(
    sf: &ShellField,
    chart: &Chart,
    u: &[f64],
) -> Result<OperatorValue, GeometryError> {
    let ev = ShellEvaluation::new(chart, u, 0.0)?;
    let jets = ev.field_jets(sf)?;
    let hess = ev.second_covariant(&jets);
    let dim = ev.n + 1;
    Ok(DVector::from_fn(ev.n, |i, _| {
        let mut acc = 0.0;
        for a in 0..dim {
            for b in 0..dim {
                acc += ev.gbar_inv[(a, b)] * hess[i + 1][(a, b)];
            }
        }
        acc
    }))
}

/// Normal-tangential component of the deformation (rate-of-strain)
/// tensor of the extension at `r = 0`:
/// `(Def U)_{ri} = ½(∇̄_r U_i + ∇̄_i U_r)`. The Slip profile is defined
/// by the vanishing of exactly this covector.
pub fn deformation_normal_tangential(
    sf: &ShellField,
    chart: &Chart,
    u: &[f64],
) -> Result<DVector<f64>, GeometryError> {
    let ev = ShellEvaluation::new(chart, u, 0.0)?;
    let n = ev.n;
    let jets = ev.field_jets(sf)?;
    // lowered components U_a = ḡ_ab U^b as jets
    let lowered = ev.gbar.mul_vec(&jets);
    Ok(DVector::from_fn(n, |i, _| {
        let ci = i + 1;
        // ∇̄_r U_i + ∇̄_i U_r = ∂_r U_i + ∂_i U_r − 2 Γ̄^c_{ri} U_c
        let mut acc = lowered[ci].partial(&[0]) + lowered[0].partial(&[ci]);
        for (c, low) in lowered.iter().enumerate() {
            acc -= 2.0 * ev.christoffel[[c, 0, ci]] * low.value();
        }
        0.5 * acc
    }))
}

/// `∂_r (g_ij(r) U^j(r))` at `r = 0`: the covariant components' radial
/// rate of change. Zero exactly for the Hodge profile (its defining
/// property); equal to `(2α − 2) II·V` for `Alpha(α)` and thus
/// `−2 II·V` for Slip.
pub fn covariant_radial_constancy(
    sf: &ShellField,
    chart: &Chart,
    u: &[f64],
) -> Result<DVector<f64>, GeometryError> {
    let ev = ShellEvaluation::new(chart, u, 0.0)?;
    let n = ev.n;
    let jets = ev.field_jets(sf)?;
    // U^r = 0, so the full contraction ḡ_ab U^b is the lowered field
    let lowered = ev.gbar.mul_vec(&jets);
    Ok(DVector::from_fn(n, |i, _| lowered[i + 1].partial(&[0])))
}
