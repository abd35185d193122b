//! Gaussian mollification and the tail-splice recovery construction.
//!
//! The splice of `rho0` (tails) and `rho1` (interior) at radius `M` with blend
//! width `a` is
//!
//! ```text
//! k = g1 (1 - |g2|_1) / |g1|_1 + g2
//! ```
//!
//! where `g1` is the mollified restriction of `rho1` to `[-M, M]`, continued
//! by quadratic ramps down to zero on `M < |x| < M + a`, and `g2` equals
//! `rho0` for `|x| >= M`, ramps quadratically from zero on
//! `M - a < |x| < M`, and vanishes inside. Beyond `M + a` only `g2`
//! survives, so `k` coincides with `rho0` there.

use super::{DensityMeasure, DENSITY_FLOOR};
use crate::error::{Error, Result};
use crate::grid::Grid;

/// Kernel support in standard deviations.
const KERNEL_WIDTH: f64 = 8.0;

/// Discrete convolution with a centered Gaussian of standard deviation `eps`.
/// The stencil weights are normalized to sum to one; no renormalization of
/// the output.
pub(crate) fn convolve_gaussian(values: &[f64], h: f64, eps: f64) -> Vec<f64> {
    let n = values.len();
    let half = ((KERNEL_WIDTH * eps / h).ceil() as usize).min(n - 1);
    let mut w: Vec<f64> = (0..=half)
        .map(|k| {
            let z = k as f64 * h / eps;
            (-0.5 * z * z).exp()
        })
        .collect();
    let total = w[0] + 2.0 * w[1..].iter().sum::<f64>();
    w.iter_mut().for_each(|v| *v /= total);
    (0..n)
        .map(|j| {
            let lo = j.saturating_sub(half);
            let hi = (j + half).min(n - 1);
            (lo..=hi).map(|i| w[i.abs_diff(j)] * values[i]).sum()
        })
        .collect()
}

/// `rho * theta_eps` with `theta_eps` the normal density of standard
/// deviation `eps`, renormalized on the grid.
pub fn mollify(rho: &DensityMeasure, eps: f64) -> Result<DensityMeasure> {
    let h = rho.grid().spacing();
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::param("eps", format!("must be positive, got {eps}")));
    }
    if eps < 0.5 * h {
        return Err(Error::KernelUnderResolved { eps, half_h: 0.5 * h });
    }
    let out = convolve_gaussian(rho.values(), h, eps);
    let result = DensityMeasure::new(*rho.grid(), out)?;
    result.warn_boundary("mollify");
    Ok(result)
}

/// Blend width used by [`tail_splice`] for radius `m_radius`:
/// `min(1, margin / 2)` with `margin` the distance from `M` to the nearer
/// grid end.
pub fn splice_margin(grid: &Grid, m_radius: f64) -> f64 {
    let margin = (grid.x_max() - m_radius).min(-grid.x_min() - m_radius);
    (0.5 * margin).min(1.0)
}

/// Recovery density that carries `rho1` on `[-M, M]` and `rho0` beyond
/// `M + a`; see the module docs. The result is not rescaled, so its values
/// beyond `M + a` are bit-identical to those of `rho0`.
pub fn tail_splice(
    rho0: &DensityMeasure,
    rho1: &DensityMeasure,
    m_radius: f64,
    eps: f64,
) -> Result<DensityMeasure> {
    let grid = *rho0.grid();
    grid.ensure_same(rho1.grid())?;
    let h = grid.spacing();
    if !(m_radius.is_finite() && m_radius > 0.0) {
        return Err(Error::param("M", format!("must be positive, got {m_radius}")));
    }
    let a = splice_margin(&grid, m_radius);
    if a < 2.0 * h {
        return Err(Error::Precondition(format!(
            "splice radius {m_radius} leaves a blend width {a} < 2h inside [{}, {}]",
            grid.x_min(),
            grid.x_max()
        )));
    }
    if m_radius <= a {
        return Err(Error::Precondition(format!(
            "splice radius {m_radius} must exceed the blend width {a}"
        )));
    }
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::param("eps", format!("must be positive, got {eps}")));
    }
    if eps < 0.5 * h {
        return Err(Error::KernelUnderResolved { eps, half_h: 0.5 * h });
    }

    let r0_left = rho0.interpolate(-m_radius);
    let r0_right = rho0.interpolate(m_radius);
    if r0_left < DENSITY_FLOOR || r0_right < DENSITY_FLOOR {
        return Err(Error::Precondition(format!(
            "rho0 vanishes at the splice points (rho0(-M) = {r0_left:e}, rho0(M) = {r0_right:e}); it must be bounded below near |x| = M"
        )));
    }

    let centers = grid.centers();
    let truncated: Vec<f64> = rho1
        .values()
        .iter()
        .zip(&centers)
        .map(|(&r, &x)| if x.abs() <= m_radius { r } else { 0.0 })
        .collect();
    let smoothed = convolve_gaussian(&truncated, h, eps);
    let smoothed = DensityMeasure::from_raw(grid, smoothed);
    let s_left = smoothed.interpolate(-m_radius);
    let s_right = smoothed.interpolate(m_radius);

    let mut g1 = vec![0.0; grid.len()];
    let mut g2 = vec![0.0; grid.len()];
    for (i, &x) in centers.iter().enumerate() {
        let ax = x.abs();
        let (s_edge, r0_edge) = if x < 0.0 {
            (s_left, r0_left)
        } else {
            (s_right, r0_right)
        };
        g1[i] = if ax <= m_radius {
            smoothed.values()[i]
        } else if ax < m_radius + a {
            s_edge * ((m_radius + a - ax) / a).powi(2)
        } else {
            0.0
        };
        g2[i] = if ax >= m_radius {
            rho0.values()[i]
        } else if ax > m_radius - a {
            r0_edge * ((ax - m_radius + a) / a).powi(2)
        } else {
            0.0
        };
    }
    let norm1 = h * super::pairwise_sum(&g1);
    let norm2 = h * super::pairwise_sum(&g2);
    if !(norm1 > 0.0) {
        return Err(Error::Precondition(
            "rho1 carries no mass inside [-M, M]".into(),
        ));
    }
    if norm2 >= 1.0 {
        return Err(Error::Precondition(format!(
            "tail block of rho0 carries mass {norm2} >= 1; increase M"
        )));
    }
    let scale = (1.0 - norm2) / norm1;
    let values = g1
        .iter()
        .zip(&g2)
        .map(|(&u, &v)| if u == 0.0 { v } else { u * scale + v })
        .collect();
    DensityMeasure::from_normalized(grid, values)
}

impl DensityMeasure {
    /// Wraps values without validation or normalization; for intermediate
    /// quantities that only need interpolation.
    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        Self { grid, values }
    }
}
