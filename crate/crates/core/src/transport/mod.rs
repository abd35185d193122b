//! Quadratic optimal transport on the line.
//!
//! In one dimension the optimal map between `rho0` and `rho1` is the monotone
//! rearrangement `T = G^{-1} o F`, with `F`, `G` the two CDFs, and
//!
//! ```text
//! W2^2(rho0, rho1) = integral over (0,1) of |F^{-1}(u) - G^{-1}(u)|^2 du.
//! ```
//!
//! The displacement geodesic is `rho_t = ((1 - t) id + t T)_# rho0`. The
//! weighted dual norm `||s||^2_{-1,rho} = integral of |v|^2 d rho` with
//! `rho v = -S`, `S' = s`, is the metric tensor of this geometry; see
//! [`dual_norm_sq`].

mod bounds;
mod dual;

pub use bounds::{geodesic_functional_bounds, BoundsReport};
pub use dual::{
    chain_rule_samples, drift_energy, dual_norm_sq, fp_rate, grad_free_energy,
    grad_free_energy_norm_sq, laplacian, metric_pairing, path_action, ChainRuleSample,
    TangentField,
};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::measures::{
    density_from_cdf_pieces, to_quantile, Cdf, DensityMeasure, EndSlopes, QuantileMeasure,
    DENSITY_FLOOR,
};

/// Quantile levels used by [`w2`] unless the caller asks otherwise.
pub const DEFAULT_CHART: usize = 1 << 14;

/// `W2(rho0, rho1)` from `m`-level quantile charts.
pub fn w2(rho0: &DensityMeasure, rho1: &DensityMeasure, m: usize) -> Result<f64> {
    Ok(w2_sq(rho0, rho1, m)?.sqrt())
}

/// `W2^2(rho0, rho1)` from `m`-level quantile charts.
pub fn w2_sq(rho0: &DensityMeasure, rho1: &DensityMeasure, m: usize) -> Result<f64> {
    let q0 = to_quantile(rho0, m)?;
    let q1 = to_quantile(rho1, m)?;
    q0.w2_sq(&q1)
}

/// `W2` between a density and a quantile chart (e.g. sorted particles),
/// evaluated at the chart's levels.
pub fn w2_to_chart(rho: &DensityMeasure, chart: &QuantileMeasure) -> Result<f64> {
    let q = to_quantile(rho, chart.len())?;
    Ok(q.w2_sq(chart)?.sqrt())
}

/// Monotone map `T = G^{-1} o F` sampled on the source grid.
#[derive(Debug, Clone, Serialize)]
pub struct TransportMap {
    source: DensityMeasure,
    target_grid: Grid,
    /// `T` at cell centers.
    at_centers: Vec<f64>,
    /// `T` at cell faces, `n + 1` values.
    at_faces: Vec<f64>,
}

impl TransportMap {
    pub fn grid(&self) -> &Grid {
        self.source.grid()
    }

    pub fn source(&self) -> &DensityMeasure {
        &self.source
    }

    /// `T(x_i)` at the cell centers.
    pub fn values(&self) -> &[f64] {
        &self.at_centers
    }

    /// `T` at the `n + 1` cell faces.
    pub fn face_values(&self) -> &[f64] {
        &self.at_faces
    }

    /// Central difference of `T` at the centers, one-sided at the ends.
    pub fn derivative(&self) -> Vec<f64> {
        crate::measures::central_difference(&self.at_centers, self.grid().spacing())
    }

    /// Map with `T` replaced at the centers; used to probe the residual.
    pub fn with_values(&self, at_centers: Vec<f64>) -> Result<TransportMap> {
        if at_centers.len() != self.at_centers.len() {
            return Err(Error::param("T", "length differs from the grid"));
        }
        Ok(TransportMap {
            at_centers,
            ..self.clone()
        })
    }

    /// `((1 - t) id + t T)_# rho0`, with the pushed CDF interpolated
    /// monotonically between the images of the cell faces.
    pub fn interpolate(&self, t: f64) -> Result<DensityMeasure> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::param("t", format!("must lie in [0, 1], got {t}")));
        }
        let g = self.grid();
        if !g.same_as(&self.target_grid) {
            return Err(Error::GridMismatch(
                "displacement interpolation needs source and target on one grid".into(),
            ));
        }
        let cdf = Cdf::new(&self.source);
        let mut knots: Vec<f64> = (0..=g.len())
            .map(|i| (1.0 - t) * g.face(i) + t * self.at_faces[i])
            .collect();
        for i in 1..knots.len() {
            if knots[i] < knots[i - 1] {
                knots[i] = knots[i - 1];
            }
        }
        let dc: Vec<f64> = (0..g.len()).map(|i| cdf.cell_mass(i)).collect();
        density_from_cdf_pieces(&knots, &dc, g, EndSlopes::Extrapolated)
    }

    /// `T_# rho0`.
    pub fn push_forward(&self) -> Result<DensityMeasure> {
        self.interpolate(1.0)
    }
}

/// Optimal map from `rho0` to `rho1`.
///
/// Fails with [`Error::FlatCdf`] when source mass has to cross a stretch of
/// more than ten cells where `rho1` vanishes inside its support.
pub fn monotone_map(rho0: &DensityMeasure, rho1: &DensityMeasure) -> Result<TransportMap> {
    let g0 = *rho0.grid();
    let g1 = *rho1.grid();
    let c0 = Cdf::new(rho0);
    let c1 = Cdf::new(rho1);
    check_gaps(&c0, &c1)?;

    let n = g0.len();
    let invert = |p: f64, q: f64| -> f64 {
        if p <= 0.5 {
            c1.invert_left(p).x
        } else {
            c1.invert_right(q).x
        }
    };
    let at_faces: Vec<f64> = (0..=n)
        .map(|i| invert(c0.left_of_face(i), c0.right_of_face(i)))
        .collect();
    let mut at_centers: Vec<f64> = (0..n)
        .map(|i| {
            let half = 0.5 * c0.cell_mass(i);
            invert(c0.left_of_face(i) + half, c0.right_of_face(i + 1) + half)
        })
        .collect();
    for i in 1..n {
        if at_centers[i] < at_centers[i - 1] {
            at_centers[i] = at_centers[i - 1];
        }
    }
    let mut at_faces = at_faces;
    for i in 1..=n {
        if at_faces[i] < at_faces[i - 1] {
            at_faces[i] = at_faces[i - 1];
        }
    }
    Ok(TransportMap {
        source: rho0.clone(),
        target_grid: g1,
        at_centers,
        at_faces,
    })
}

/// Rejects inversions through interior zero-mass stretches of the target
/// wider than ten cells.
fn check_gaps(c0: &Cdf, c1: &Cdf) -> Result<()> {
    let g1 = c1.grid();
    let n1 = g1.len();
    let h1 = g1.spacing();
    let n0 = c0.grid().len();
    let empty = |i: usize| c1.cell_mass(i) < DENSITY_FLOOR * h1;
    let mut i = 0;
    while i < n1 {
        if !empty(i) {
            i += 1;
            continue;
        }
        let start = i;
        while i < n1 && empty(i) {
            i += 1;
        }
        let end = i;
        let interior = start > 0 && end < n1;
        let width = (end - start) as f64 * h1;
        if !interior || width <= 10.0 * h1 {
            continue;
        }
        let level = c1.left_of_face(start);
        let faces: Vec<f64> = (0..=n0).map(|k| c0.left_of_face(k)).collect();
        let k = faces.partition_point(|&c| c < level);
        let crosses = if k <= n0 && faces[k] == level {
            k > 0 && k < n0 && c0.cell_mass(k - 1) > 0.0 && c0.cell_mass(k) > 0.0
        } else {
            k > 0 && c0.cell_mass(k - 1) > 0.0
        };
        if crosses {
            return Err(Error::FlatCdf {
                from: g1.face(start),
                to: g1.face(end),
                width,
            });
        }
    }
    Ok(())
}

/// `sup |rho0(x) - rho1(T(x)) T'(x)|` over cells where `rho0` is above the
/// density floor.
pub fn monge_ampere_residual(map: &TransportMap, rho1: &DensityMeasure) -> f64 {
    let dt = map.derivative();
    map.source
        .values()
        .iter()
        .zip(map.values())
        .zip(&dt)
        .filter(|((&r0, _), _)| r0 >= DENSITY_FLOOR)
        .map(|((&r0, &t), &d)| (r0 - rho1.interpolate(t) * d).abs())
        .fold(0.0, f64::max)
}

/// Time-indexed family of densities on one grid, with an optional quantile
/// chart per state.
#[derive(Debug, Clone, Serialize)]
pub struct MeasurePath {
    times: Vec<f64>,
    states: Vec<DensityMeasure>,
    quantiles: Option<Vec<QuantileMeasure>>,
}

impl MeasurePath {
    pub fn new(times: Vec<f64>, states: Vec<DensityMeasure>) -> Result<Self> {
        if times.is_empty() || times.len() != states.len() {
            return Err(Error::param(
                "path",
                format!("{} times for {} states", times.len(), states.len()),
            ));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::param("times", "must be strictly increasing"));
        }
        let g = *states[0].grid();
        for s in &states[1..] {
            g.ensure_same(s.grid())?;
        }
        Ok(Self {
            times,
            states,
            quantiles: None,
        })
    }

    /// Attaches a quantile chart, one monotone row per state.
    pub fn with_quantiles(mut self, quantiles: Vec<QuantileMeasure>) -> Result<Self> {
        if quantiles.len() != self.states.len() {
            return Err(Error::param("quantiles", "one chart row per state required"));
        }
        let m = quantiles[0].len();
        if quantiles.iter().any(|q| q.len() != m) {
            return Err(Error::param("quantiles", "rows must share one length"));
        }
        self.quantiles = Some(quantiles);
        Ok(self)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[DensityMeasure] {
        &self.states
    }

    pub fn quantiles(&self) -> Option<&[QuantileMeasure]> {
        self.quantiles.as_deref()
    }

    pub fn grid(&self) -> &Grid {
        self.states[0].grid()
    }

    /// Number of states.
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Number of time intervals `K`.
    pub fn intervals(&self) -> usize {
        self.states.len() - 1
    }

    pub fn first(&self) -> &DensityMeasure {
        &self.states[0]
    }

    pub fn last(&self) -> &DensityMeasure {
        &self.states[self.states.len() - 1]
    }
}

/// Displacement geodesic with `K + 1` states at `t = k/K`. The two end states
/// are the inputs themselves; a quantile chart at `max(4n, 1024)` levels is
/// attached.
pub fn geodesic(rho0: &DensityMeasure, rho1: &DensityMeasure, k: usize) -> Result<MeasurePath> {
    if k == 0 {
        return Err(Error::param("K", "need at least one interval"));
    }
    rho0.grid().ensure_same(rho1.grid())?;
    let map = monotone_map(rho0, rho1)?;
    let times: Vec<f64> = (0..=k).map(|j| j as f64 / k as f64).collect();
    let mut states = Vec::with_capacity(k + 1);
    states.push(rho0.clone());
    for &t in &times[1..k] {
        states.push(map.interpolate(t)?);
    }
    states.push(rho1.clone());

    let m = (4 * rho0.grid().len()).max(1024);
    let q0 = to_quantile(rho0, m)?;
    let q1 = to_quantile(rho1, m)?;
    let charts = times
        .iter()
        .map(|&t| q0.interpolate(&q1, t))
        .collect::<Result<Vec<_>>>()?;
    MeasurePath::new(times, states)?.with_quantiles(charts)
}
