//! Uniform bounds along the geodesic between tail-matched densities.
//!
//! When `rho0 = rho1` outside `[-M, M]` the optimal map is the identity
//! there, so `T'` is bounded. For convex `psi` the free energy, the Fisher
//! information and the drift energy `integral of |psi'|^2 rho_t` then stay
//! bounded along the whole geodesic; for the Fisher information the bound
//! reads `I(rho_t) <= C (I(rho0) + I(rho1))` with `C` controlled by `T'`.

use serde::Serialize;

use super::{geodesic, monotone_map};
use crate::error::{Error, Result};
use crate::measures::{fisher_information, free_energy, DensityMeasure};
use crate::potentials::Potential;
use crate::transport::drift_energy;

/// Relative slack on the Fisher comparison.
const FISHER_SLACK: f64 = 0.1;

/// Maxima over the geodesic of the three functionals and the comparison
/// bound for the Fisher information.
#[derive(Debug, Clone, Serialize)]
pub struct BoundsReport {
    pub max_free_energy: f64,
    pub max_fisher: f64,
    pub max_drift_energy: f64,
    /// `C = max(sup T', 1 / inf T')` over the bulk of `rho0`.
    pub comparison_constant: f64,
    pub fisher_endpoints: (f64, f64),
    pub free_energy_endpoints: (f64, f64),
    /// `C (I(rho0) + I(rho1))`.
    pub fisher_bound: f64,
    pub fisher_bound_holds: bool,
    /// Radius beyond which the two inputs coincide.
    pub match_radius: f64,
    pub samples: usize,
}

/// Radius outside of which `rho0` and `rho1` agree cell by cell.
fn match_radius(rho0: &DensityMeasure, rho1: &DensityMeasure) -> Result<f64> {
    let g = rho0.grid();
    g.ensure_same(rho1.grid())?;
    let n = g.len();
    let differs = |i: usize| {
        let (a, b) = (rho0.values()[i], rho1.values()[i]);
        (a - b).abs() > 1e-12 * a.abs().max(b.abs())
    };
    let first = (0..n).find(|&i| differs(i));
    let last = (0..n).rev().find(|&i| differs(i));
    match (first, last) {
        (None, _) | (_, None) => Ok(0.0),
        (Some(f), Some(l)) => {
            if f < 2 || l + 2 >= n {
                return Err(Error::Precondition(
                    "inputs are not tail-matched: they differ up to the edge of the grid".into(),
                ));
            }
            Ok(g.center(f).abs().max(g.center(l).abs()))
        }
    }
}

/// Evaluates `F`, `I` and `integral of |psi'|^2 rho_t` at `K + 1` points of
/// the geodesic and compares `max I` against `C (I0 + I1)`.
pub fn geodesic_functional_bounds(
    rho0: &DensityMeasure,
    rho1: &DensityMeasure,
    psi: &Potential,
    k: usize,
) -> Result<BoundsReport> {
    let radius = match_radius(rho0, rho1)?;
    if !psi.is_convex_on(rho0.grid()) {
        return Err(Error::Precondition(format!(
            "potential `{psi}` is not convex on the grid"
        )));
    }
    let map = monotone_map(rho0, rho1)?;
    let dt = map.derivative();
    let peak = rho0.values().iter().copied().fold(0.0, f64::max);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for (&r, &d) in rho0.values().iter().zip(&dt) {
        if r >= 1e-6 * peak {
            lo = lo.min(d);
            hi = hi.max(d);
        }
    }
    let c = if lo > 0.0 { hi.max(1.0 / lo) } else { f64::INFINITY };

    let path = geodesic(rho0, rho1, k)?;
    let (mut max_f, mut max_i, mut max_d) = (f64::NEG_INFINITY, 0.0f64, 0.0f64);
    for s in path.states() {
        max_f = max_f.max(free_energy(s, psi));
        max_i = max_i.max(fisher_information(s));
        max_d = max_d.max(drift_energy(s, psi));
    }
    let i0 = fisher_information(rho0);
    let i1 = fisher_information(rho1);
    let bound = c * (i0 + i1);
    Ok(BoundsReport {
        max_free_energy: max_f,
        max_fisher: max_i,
        max_drift_energy: max_d,
        comparison_constant: c,
        fisher_endpoints: (i0, i1),
        free_energy_endpoints: (free_energy(rho0, psi), free_energy(rho1, psi)),
        fisher_bound: bound,
        fisher_bound_holds: max_i <= bound * (1.0 + FISHER_SLACK),
        match_radius: radius,
        samples: k + 1,
    })
}
