//! Independent Cartesian check of the shell computation.
//!
//! In flat ambient space the Bochner Laplacian of a vector field is the
//! component-wise scalar Laplacian of its Cartesian components. This
//! module therefore evaluates the boundary-profile extension at a
//! central finite-difference stencil of ambient points — each mapped
//! back to Fermi coordinates by a Newton closest-point solve, with the
//! field pushed to Cartesian components through the exact frame
//! `{∂_i Y, N}` — and compares the stencil Laplacian against the
//! Fermi-coordinate computation in [`crate::shell`]. Nothing here
//! touches the shell-metric Christoffel machinery, so agreement is a
//! genuine two-sided check.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::fields::OperatorValue;
use crate::geometry::{extrinsic_at, extrinsic_from_frame, Chart, ChartFrame, GeometryError};
use crate::shell::ShellField;

#[derive(Debug, Clone, Error)]
pub enum OracleError {
    #[error("closest-point iteration did not converge after {iterations} steps (last step {last_step:.3e})")]
    NoConvergence { iterations: usize, last_step: f64 },
    #[error(
        "point lies outside the tubular neighborhood: |r| = {r:.3e} vs focal radius {focal:.3e}"
    )]
    OutsideTube { r: f64, focal: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Result of inverting the Fermi map: foot-point chart parameters,
/// signed normal distance, and the reconstruction residual
/// `|p − (X(u) + r N(u))|`.
#[derive(Debug, Clone)]
pub struct ClosestPointResult {
    pub u: Vec<f64>,
    pub signed_distance: f64,
    pub residual: f64,
    pub iterations: usize,
}

const MAX_NEWTON_ITERATIONS: usize = 50;
const NEWTON_STEP_TOL: f64 = 1e-12;

/// Newton iteration on the stationarity of `|p − X(u)|²` from the given
/// seed. The signed distance follows the chart's normal orientation
/// (positive toward the center of curvature for the catalog sphere).
pub fn closest_point(
    chart: &Chart,
    p: &DVector<f64>,
    seed: &[f64],
) -> Result<ClosestPointResult, OracleError> {
    let n = chart.dim();
    let mut u = seed.to_vec();
    let mut converged = false;
    let mut iterations = 0;
    let mut last_step = f64::INFINITY;
    for iter in 0..MAX_NEWTON_ITERATIONS {
        iterations = iter + 1;
        let comps = chart.eval(&chart.jet_point(&u))?;
        let diff: Vec<f64> = comps
            .iter()
            .zip(p.iter())
            .map(|(c, &pa)| c.value() - pa)
            .collect();
        // gradient and Hessian of ½|X(u) − p|²
        let grad = DVector::from_fn(n, |i, _| {
            comps
                .iter()
                .zip(&diff)
                .map(|(c, d)| d * c.partial(&[i]))
                .sum()
        });
        let hess = DMatrix::from_fn(n, n, |i, j| {
            comps
                .iter()
                .zip(&diff)
                .map(|(c, d)| c.partial(&[i]) * c.partial(&[j]) + d * c.partial(&[i, j]))
                .sum()
        });
        let step = hess
            .lu()
            .solve(&(-grad))
            .ok_or(OracleError::NoConvergence {
                iterations,
                last_step,
            })?;
        for (ui, si) in u.iter_mut().zip(step.iter()) {
            *ui += si;
        }
        last_step = step.norm();
        if last_step < NEWTON_STEP_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(OracleError::NoConvergence {
            iterations,
            last_step,
        });
    }

    let ex = extrinsic_at(chart, &u)?;
    let x = chart.position(&u)?;
    let signed_distance = (p - &x).dot(&ex.normal);
    let focal = ex.focal_radius();
    if signed_distance.abs() >= focal {
        return Err(OracleError::OutsideTube {
            r: signed_distance,
            focal,
        });
    }
    let residual = (p - &x - &ex.normal * signed_distance).norm();
    Ok(ClosestPointResult {
        u,
        signed_distance,
        residual,
        iterations,
    })
}

/// Stencil Laplacian of the extension's Cartesian components, projected
/// back to tangential chart components at `u`.
#[derive(Debug, Clone)]
pub struct CartesianLaplacian {
    /// Richardson combination of the two stencil widths (order 4).
    pub value: OperatorValue,
    /// Plain second-difference result at width `h`.
    pub coarse: OperatorValue,
    /// Plain second-difference result at width `h/2`.
    pub fine: OperatorValue,
    pub step: f64,
}

/// Cartesian components of the extension at an ambient point `p` inside
/// the tube: find the Fermi coordinates of `p`, evaluate the profile
/// extension there, and push through the frame `∂_i Y = (I − rS) ∂_i X`.
fn extension_cartesian(
    sf: &ShellField,
    chart: &Chart,
    p: &DVector<f64>,
    seed: &[f64],
) -> Result<DVector<f64>, OracleError> {
    let cp = closest_point(chart, p, seed)?;
    let frame = ChartFrame::new(chart, chart.jet_point(&cp.u))?;
    let ex = extrinsic_from_frame(&frame);
    let r = cp.signed_distance;
    let n = chart.dim();

    let v = sf.velocity.values(&cp.u)?;
    let first = sf.profile.first_radial(&ex.shape, &v);
    let second = sf.profile.second_radial(&ex.shape_squared, &v);
    let fermi = &v + &first * r + &second * (0.5 * r * r);

    let ambient = n + 1;
    let mut w = DVector::zeros(ambient);
    for i in 0..n {
        // ∂_i Y = Σ_k (δ_ki − r S^k_i) ∂_k X
        for a in 0..ambient {
            let mut frame_a = frame.tangents[i][a].value();
            for k in 0..n {
                frame_a -= r * ex.shape[(k, i)] * frame.tangents[k][a].value();
            }
            w[a] += fermi[i] * frame_a;
        }
    }
    Ok(w)
}

/// Central-stencil flat Laplacian of the extension around `Y(0, u)`,
/// with one Richardson step over widths `(h, h/2)`. The result is
/// projected tangentially and returned in chart components, directly
/// comparable with [`crate::shell::ambient_bochner_tangential`].
pub fn cartesian_laplacian(
    sf: &ShellField,
    chart: &Chart,
    u: &[f64],
    h: f64,
) -> Result<CartesianLaplacian, OracleError> {
    let frame = ChartFrame::new(chart, chart.jet_point(u))?;
    let n = chart.dim();
    let ambient = n + 1;
    let center = DVector::from_iterator(ambient, frame.components.iter().map(|c| c.value()));
    let w_center = extension_cartesian(sf, chart, &center, u)?;

    let stencil = |width: f64| -> Result<DVector<f64>, OracleError> {
        let mut acc = DVector::zeros(ambient);
        for axis in 0..ambient {
            let mut e = DVector::zeros(ambient);
            e[axis] = width;
            let plus = extension_cartesian(sf, chart, &(&center + &e), u)?;
            let minus = extension_cartesian(sf, chart, &(&center - &e), u)?;
            acc += plus + minus - &w_center * 2.0;
        }
        Ok(acc / (width * width))
    };

    let project = |flat: DVector<f64>| -> OperatorValue {
        let g_inv = frame.metric_inv.values();
        let lowered = DVector::from_fn(n, |k, _| {
            (0..ambient)
                .map(|a| flat[a] * frame.tangents[k][a].value())
                .sum()
        });
        g_inv * lowered
    };

    let coarse = project(stencil(h)?);
    let fine = project(stencil(h / 2.0)?);
    let value = (&fine * 4.0 - &coarse) / 3.0;
    Ok(CartesianLaplacian {
        value,
        coarse,
        fine,
        step: h,
    })
}

/// The default stencil width at `u`: a small fraction of the focal
/// radius, the same scale the radial sweeps use.
pub fn default_stencil_step(chart: &Chart, u: &[f64]) -> Result<f64, GeometryError> {
    Ok(crate::geometry::radial_step(&extrinsic_at(chart, u)?))
}
