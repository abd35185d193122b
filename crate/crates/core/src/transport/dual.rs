//! The weighted dual norm, the gradient of the free energy, and the path
//! action.
//!
//! A tangent vector is a cell array `s` with `h sum s = 0`. Its antiderivative
//! `S` lives on the interior faces; the velocity `v = -S / rho` solves the
//! continuity equation `s + (rho v)' = 0` and
//!
//! ```text
//! ||s||^2_{-1,rho} = integral of |v|^2 rho = integral of S^2 / rho,
//! ```
//!
//! with `rho` at a face taken as the mean of its two cells. The convention
//! carries no factor one half, so that `||rho''||^2_{-1,rho}` is the Fisher
//! information and the path action of a geodesic is `W2^2`.
//!
//! For the free energy `F = S + E`, `grad F(rho) = -(rho'' + (rho psi')')`;
//! its antiderivative is minus the flux `J = rho' + rho psi'`, so
//! `||grad F||^2 = integral of J^2 / rho`, the relative Fisher information.

use serde::Serialize;

use super::{monotone_map, MeasurePath};
use crate::error::{Error, Result};
use crate::measures::{
    free_energy, from_quantile, pairwise_sum, DensityMeasure, QuantileMeasure, DENSITY_FLOOR,
};
use crate::potentials::Potential;

/// Density at the `n - 1` interior faces.
pub(crate) fn face_density(rho: &DensityMeasure) -> Vec<f64> {
    rho.values().windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
}

/// `S` at the `n - 1` interior faces: `S_f = h sum_{j <= f} s_j`.
///
/// For a tangent vector this also equals `-h sum_{j > f} s_j`; each face
/// takes the sum over the side carrying less absolute mass, so that the
/// rounding error of the bulk does not swamp the small values of `S` in the
/// right tail, where `S^2 / rho` amplifies it.
pub(crate) fn antiderivative(s: &[f64], h: f64) -> Vec<f64> {
    let n = s.len();
    let (mut left, mut left_abs) = (vec![0.0; n - 1], vec![0.0; n - 1]);
    let (mut acc, mut acc_abs) = (0.0, 0.0);
    for f in 0..n - 1 {
        acc += h * s[f];
        acc_abs += h * s[f].abs();
        left[f] = acc;
        left_abs[f] = acc_abs;
    }
    let (mut acc, mut acc_abs) = (0.0, 0.0);
    let mut out = left;
    for f in (0..n - 1).rev() {
        acc -= h * s[f + 1];
        acc_abs += h * s[f + 1].abs();
        if acc_abs < left_abs[f] {
            out[f] = acc;
        }
    }
    out
}

fn check_tangent(s: &[f64], rho: &DensityMeasure) -> Result<()> {
    if s.len() != rho.values().len() {
        return Err(Error::param(
            "s",
            format!("length {} differs from the grid ({})", s.len(), rho.values().len()),
        ));
    }
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("s", "non-finite entry"));
    }
    let h = rho.grid().spacing();
    let total = h * pairwise_sum(s);
    let scale = h * s.iter().map(|v| v.abs()).sum::<f64>();
    if total.abs() > 1e-8 * scale.max(1.0) {
        return Err(Error::Precondition(format!(
            "not a tangent vector: h * sum(s) = {total:e}"
        )));
    }
    Ok(())
}

/// `sum over faces of h S^2 / rho`, faces below the floor skipped.
fn weighted_sq(flux: &[f64], rho_f: &[f64], h: f64, context: &str) -> f64 {
    let mut uncovered: f64 = 0.0;
    let mut largest: f64 = 0.0;
    let terms: Vec<f64> = flux
        .iter()
        .zip(rho_f)
        .map(|(&f, &r)| {
            largest = largest.max(f.abs());
            if r < DENSITY_FLOOR {
                uncovered = uncovered.max(f.abs());
                0.0
            } else {
                f * f / r
            }
        })
        .collect();
    if uncovered > 1e-8 * largest && uncovered > 0.0 {
        log::warn!("{context}: rate of size {uncovered:e} on faces where the density is below the floor was ignored");
    }
    h * pairwise_sum(&terms)
}

/// `||s||^2_{-1,rho}` for a tangent vector `s`.
pub fn dual_norm_sq(s: &[f64], rho: &DensityMeasure) -> Result<f64> {
    check_tangent(s, rho)?;
    let h = rho.grid().spacing();
    Ok(weighted_sq(&antiderivative(s, h), &face_density(rho), h, "dual_norm_sq"))
}

/// `<s1, s2>_{-1,rho}` by polarization of [`dual_norm_sq`].
pub fn metric_pairing(s1: &[f64], s2: &[f64], rho: &DensityMeasure) -> Result<f64> {
    let plus: Vec<f64> = s1.iter().zip(s2).map(|(a, b)| a + b).collect();
    let minus: Vec<f64> = s1.iter().zip(s2).map(|(a, b)| a - b).collect();
    Ok(0.25 * (dual_norm_sq(&plus, rho)? - dual_norm_sq(&minus, rho)?))
}

/// Velocity field `v = -S / rho` at the faces, realizing a tangent vector.
#[derive(Debug, Clone, Serialize)]
pub struct TangentField {
    base: DensityMeasure,
    /// Velocity at the `n + 1` faces; zero at the two outer faces.
    v: Vec<f64>,
}

impl TangentField {
    pub fn from_rate(s: &[f64], rho: &DensityMeasure) -> Result<Self> {
        check_tangent(s, rho)?;
        let h = rho.grid().spacing();
        let mut v = vec![0.0];
        v.extend(
            antiderivative(s, h)
                .iter()
                .zip(face_density(rho))
                .map(|(&f, r)| if r < DENSITY_FLOOR { 0.0 } else { -f / r }),
        );
        v.push(0.0);
        Ok(Self {
            base: rho.clone(),
            v,
        })
    }

    pub fn base(&self) -> &DensityMeasure {
        &self.base
    }

    pub fn velocity(&self) -> &[f64] {
        &self.v
    }

    /// `integral of |v|^2 rho`.
    pub fn kinetic_energy(&self) -> f64 {
        let rf = face_density(&self.base);
        let terms: Vec<f64> = self.v[1..self.v.len() - 1]
            .iter()
            .zip(&rf)
            .map(|(v, r)| v * v * r)
            .collect();
        self.base.grid().spacing() * pairwise_sum(&terms)
    }
}

/// Flux `J = rho' + rho psi'` at the interior faces.
pub(crate) fn drift_flux(rho: &DensityMeasure, psi: &Potential) -> Vec<f64> {
    let g = rho.grid();
    let h = g.spacing();
    rho.values()
        .windows(2)
        .enumerate()
        .map(|(i, w)| (w[1] - w[0]) / h + 0.5 * (w[0] + w[1]) * psi.grad(g.face(i + 1)))
        .collect()
}

/// Divergence of a face flux with zero flux at the outer faces.
fn divergence(flux: &[f64], h: f64) -> Vec<f64> {
    let n = flux.len() + 1;
    (0..n)
        .map(|i| {
            let right = if i + 1 < n { flux[i] } else { 0.0 };
            let left = if i > 0 { flux[i - 1] } else { 0.0 };
            (right - left) / h
        })
        .collect()
}

/// `rho''` with no-flux ends.
pub fn laplacian(rho: &DensityMeasure) -> Vec<f64> {
    let h = rho.grid().spacing();
    let grad: Vec<f64> = rho.values().windows(2).map(|w| (w[1] - w[0]) / h).collect();
    divergence(&grad, h)
}

/// Fokker-Planck right-hand side `rho'' + (rho psi')'`.
pub fn fp_rate(rho: &DensityMeasure, psi: &Potential) -> Vec<f64> {
    divergence(&drift_flux(rho, psi), rho.grid().spacing())
}

/// `grad F(rho) = -(rho'' + (rho psi')')` as a tangent vector.
pub fn grad_free_energy(rho: &DensityMeasure, psi: &Potential) -> Vec<f64> {
    fp_rate(rho, psi).into_iter().map(|v| -v).collect()
}

/// `||grad F(rho)||^2_{-1,rho} = integral of |rho'/rho + psi'|^2 rho`.
pub fn grad_free_energy_norm_sq(rho: &DensityMeasure, psi: &Potential) -> f64 {
    let h = rho.grid().spacing();
    weighted_sq(&drift_flux(rho, psi), &face_density(rho), h, "grad_free_energy_norm_sq")
}

/// `integral of |psi'|^2 rho`.
pub fn drift_energy(rho: &DensityMeasure, psi: &Potential) -> f64 {
    let g = rho.grid();
    let terms: Vec<f64> = rho
        .values()
        .iter()
        .enumerate()
        .map(|(i, &r)| psi.grad(g.center(i)).powi(2) * r)
        .collect();
    g.spacing() * pairwise_sum(&terms)
}

/// Midpoint density between states `k` and `k + 1`: their displacement
/// midpoint when the path carries a quantile chart, the arithmetic mean
/// otherwise.
pub(crate) fn interval_midpoint(path: &MeasurePath, k: usize) -> Result<DensityMeasure> {
    let s = path.states();
    match path.quantiles() {
        // displacement midpoint of the two states, so that its tails match
        // theirs; the chart midpoint only if the map is refused
        Some(q) => match monotone_map(&s[k], &s[k + 1]) {
            Ok(map) => map.interpolate(0.5),
            Err(_) => {
                let mid: QuantileMeasure = q[k].interpolate(&q[k + 1], 0.5)?;
                from_quantile(&mid, path.grid())
            }
        },
        None => s[k].mix(&s[k + 1], 0.5),
    }
}

/// Finite-difference rate `(rho_{k+1} - rho_k) / dt` of interval `k`.
pub(crate) fn interval_rate(path: &MeasurePath, k: usize) -> Vec<f64> {
    let s = path.states();
    let dt = path.times()[k + 1] - path.times()[k];
    s[k + 1]
        .values()
        .iter()
        .zip(s[k].values())
        .map(|(b, a)| (b - a) / dt)
        .collect()
}

/// `sum_k dt_k ||(rho_{k+1} - rho_k)/dt_k||^2_{-1, rho_mid}`, the discrete
/// Benamou-Brenier action; needs at least four intervals.
pub fn path_action(path: &MeasurePath) -> Result<f64> {
    if path.intervals() < 4 {
        return Err(Error::param(
            "K",
            format!("path action needs at least 4 intervals, got {}", path.intervals()),
        ));
    }
    let mut terms = Vec::with_capacity(path.intervals());
    for k in 0..path.intervals() {
        let dt = path.times()[k + 1] - path.times()[k];
        let mid = interval_midpoint(path, k)?;
        terms.push(dt * dual_norm_sq(&interval_rate(path, k), &mid)?);
    }
    Ok(pairwise_sum(&terms))
}

/// `dF/dt` by central differences against `<grad F, d rho/dt>` at one
/// interior state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainRuleSample {
    pub t: f64,
    pub dfdt: f64,
    pub pairing: f64,
}

/// Chain-rule samples at every interior state of the path.
pub fn chain_rule_samples(path: &MeasurePath, psi: &Potential) -> Result<Vec<ChainRuleSample>> {
    let s = path.states();
    let t = path.times();
    let f: Vec<f64> = s.iter().map(|r| free_energy(r, psi)).collect();
    (1..path.intervals())
        .map(|k| {
            let dt = t[k + 1] - t[k - 1];
            let rate: Vec<f64> = s[k + 1]
                .values()
                .iter()
                .zip(s[k - 1].values())
                .map(|(b, a)| (b - a) / dt)
                .collect();
            let pairing = metric_pairing(&grad_free_energy(&s[k], psi), &rate, &s[k])?;
            Ok(ChainRuleSample {
                t: t[k],
                dfdt: (f[k + 1] - f[k - 1]) / dt,
                pairing,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::measures::fisher_information;
    use crate::transport::{geodesic, w2};
    use approx::assert_relative_eq;

    fn gauss(g: Grid, m: f64, s: f64) -> DensityMeasure {
        DensityMeasure::gaussian(g, m, s).unwrap()
    }

    #[test]
    fn zero_rate_has_zero_norm() {
        let g = Grid::symmetric(8.0, 256).unwrap();
        let rho = gauss(g, 0.0, 1.0);
        assert_eq!(dual_norm_sq(&vec![0.0; 256], &rho).unwrap(), 0.0);
    }

    #[test]
    fn non_tangent_rejected() {
        let g = Grid::symmetric(8.0, 256).unwrap();
        let rho = gauss(g, 0.0, 1.0);
        assert!(matches!(
            dual_norm_sq(&vec![1.0; 256], &rho),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn laplacian_norm_is_fisher() {
        let g = Grid::symmetric(10.0, 1 << 14).unwrap();
        for &s in &[0.5, 1.0, 2.0] {
            let rho = gauss(g, 0.2, s);
            let d = dual_norm_sq(&laplacian(&rho), &rho).unwrap();
            assert_relative_eq!(d, 1.0 / (s * s), max_relative = 1e-3);
            assert_relative_eq!(d, fisher_information(&rho), max_relative = 2e-2);
        }
    }

    #[test]
    fn translation_rate() {
        let g = Grid::symmetric(10.0, 4096).unwrap();
        let rho = gauss(g, 0.0, 1.0);
        let c = 0.7;
        // s = -(rho c)'
        let s: Vec<f64> = {
            let h = g.spacing();
            let flux: Vec<f64> = face_density(&rho).iter().map(|r| r * c).collect();
            divergence(&flux, h).into_iter().map(|v| -v).collect()
        };
        assert_relative_eq!(dual_norm_sq(&s, &rho).unwrap(), c * c, max_relative = 1e-6);
        let field = TangentField::from_rate(&s, &rho).unwrap();
        assert_relative_eq!(field.kinetic_energy(), c * c, max_relative = 1e-6);
        assert_relative_eq!(field.velocity()[2048], c, max_relative = 1e-9);
    }

    #[test]
    fn relative_fisher_information() {
        let g = Grid::symmetric(10.0, 4096).unwrap();
        let quad = Potential::quadratic(1.0);
        assert!(grad_free_energy_norm_sq(&gauss(g, 0.0, 1.0), &quad) < 1e-4);
        assert_relative_eq!(
            grad_free_energy_norm_sq(&gauss(g, 0.8, 1.0), &quad),
            0.64,
            max_relative = 1e-3
        );
        let rho = gauss(g, 0.3, 0.7);
        assert_relative_eq!(
            grad_free_energy_norm_sq(&rho, &Potential::zero()),
            fisher_information(&rho),
            max_relative = 1e-3
        );
        assert_relative_eq!(drift_energy(&rho, &quad), 0.09 + 0.49, max_relative = 1e-6);
    }

    #[test]
    fn polarization_is_bilinear() {
        let g = Grid::symmetric(8.0, 512).unwrap();
        let rho = gauss(g, 0.0, 1.0);
        let a = laplacian(&rho);
        let b = grad_free_energy(&rho, &Potential::quadratic(2.0));
        let p = metric_pairing(&a, &b, &rho).unwrap();
        let p2 = metric_pairing(&a, &b.iter().map(|v| 2.0 * v).collect::<Vec<_>>(), &rho).unwrap();
        assert_relative_eq!(p2, 2.0 * p, max_relative = 1e-10);
        assert_relative_eq!(metric_pairing(&a, &a, &rho).unwrap(), dual_norm_sq(&a, &rho).unwrap(), max_relative = 1e-12);
    }

    #[test]
    fn geodesic_action_is_w2_squared() {
        let g = Grid::symmetric(12.0, 4096).unwrap();
        let a = gauss(g, 0.0, 1.0);
        let b = gauss(g, 1.0, 1.0);
        let path = geodesic(&a, &b, 32).unwrap();
        let action = path_action(&path).unwrap();
        assert!((action - 1.0).abs() < 0.03, "action {action}");

        // a detour through a wider state costs more
        let wide = gauss(g, 0.5, 1.6);
        let first = geodesic(&a, &wide, 16).unwrap();
        let second = geodesic(&wide, &b, 16).unwrap();
        let mut states = first.states().to_vec();
        states.extend_from_slice(&second.states()[1..]);
        let times: Vec<f64> = (0..=32).map(|k| k as f64 / 32.0).collect();
        let detour = MeasurePath::new(times, states).unwrap();
        let d = w2(&a, &b, 8192).unwrap();
        assert!(path_action(&detour).unwrap() >= d * d * 0.97);
    }

    #[test]
    fn chain_rule_on_geodesic() {
        let g = Grid::symmetric(12.0, 2048).unwrap();
        let quad = Potential::quadratic(1.0);
        let path = geodesic(&gauss(g, 1.0, 0.8), &gauss(g, -0.5, 1.4), 32).unwrap();
        let samples = chain_rule_samples(&path, &quad).unwrap();
        let scale = samples.iter().map(|s| s.dfdt.abs()).fold(0.0, f64::max);
        for s in samples {
            assert!((s.dfdt - s.pairing).abs() <= 0.05 * scale, "{s:?}");
        }
    }
}
