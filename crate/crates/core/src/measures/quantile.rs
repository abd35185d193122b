//! Quantile chart: CDF inversion and reconstruction of densities from
//! quantile vectors.
//!
//! Level `i` (zero-based) of an `m`-point chart is `u_i = (i + 1/2)/m`. The
//! CDF of a [`DensityMeasure`] is piecewise linear between faces. To keep full
//! relative precision in both tails, levels above one half are inverted
//! through the survival function, whose values are accumulated from the
//! right.

use serde::{Deserialize, Serialize};

use super::{pairwise_sum, DensityMeasure};
use crate::error::{Error, Result};
use crate::grid::Grid;

/// Monotone vector `X_0 <= ... <= X_{m-1}` with `X_i ~ F^{-1}((i + 1/2)/m)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileMeasure {
    values: Vec<f64>,
}

impl QuantileMeasure {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::param("m", "quantile chart must not be empty"));
        }
        if let Some(i) = values.iter().position(|x| !x.is_finite()) {
            return Err(Error::param("quantiles", format!("non-finite value at {i}")));
        }
        if let Some(i) = values.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::NotMonotone { index: i + 1 });
        }
        Ok(Self { values })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Level `(i + 1/2)/m` of entry `i`.
    pub fn level(&self, i: usize) -> f64 {
        (i as f64 + 0.5) / self.len() as f64
    }

    pub fn mean(&self) -> f64 {
        pairwise_sum(&self.values) / self.len() as f64
    }

    pub fn second_moment(&self) -> f64 {
        let sq: Vec<f64> = self.values.iter().map(|x| x * x).collect();
        pairwise_sum(&sq) / self.len() as f64
    }

    /// `(1/m) sum |X_i - Y_i|^2`, the squared W2 distance in this chart.
    pub fn w2_sq(&self, other: &QuantileMeasure) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::param(
                "m",
                format!("chart sizes differ: {} vs {}", self.len(), other.len()),
            ));
        }
        let sq: Vec<f64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .collect();
        Ok(pairwise_sum(&sq) / self.len() as f64)
    }

    /// Displacement interpolation `(1 - t) X + t Y`.
    pub fn interpolate(&self, other: &QuantileMeasure, t: f64) -> Result<QuantileMeasure> {
        if self.len() != other.len() {
            return Err(Error::param("m", "chart sizes differ"));
        }
        let v = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (1.0 - t) * a + t * b)
            .collect();
        QuantileMeasure::new(v)
    }
}

/// Piecewise-linear CDF of a density, with left and right accumulations.
#[derive(Debug, Clone)]
pub struct Cdf {
    grid: Grid,
    /// Mass in cells `< i`, for faces `i = 0..=n`.
    left: Vec<f64>,
    /// Mass in cells `>= i`, for faces `i = 0..=n`.
    right: Vec<f64>,
    /// Normalized cell masses.
    mass: Vec<f64>,
}

/// Result of inverting the CDF at one level.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Inversion {
    pub x: f64,
}

impl Cdf {
    pub fn new(rho: &DensityMeasure) -> Self {
        let grid = *rho.grid();
        let h = grid.spacing();
        let total = rho.mass();
        let mass: Vec<f64> = rho.values().iter().map(|r| h * r / total).collect();
        let n = mass.len();
        let mut left = vec![0.0; n + 1];
        for i in 0..n {
            left[i + 1] = left[i] + mass[i];
        }
        let mut right = vec![0.0; n + 1];
        for i in (0..n).rev() {
            right[i] = right[i + 1] + mass[i];
        }
        Self {
            grid,
            left,
            right,
            mass,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Normalized mass of cell `i`.
    pub fn cell_mass(&self, i: usize) -> f64 {
        self.mass[i]
    }

    /// Mass strictly left of face `i`.
    pub fn left_of_face(&self, i: usize) -> f64 {
        self.left[i]
    }

    /// Mass right of face `i`.
    pub fn right_of_face(&self, i: usize) -> f64 {
        self.right[i]
    }

    /// `F(x)` for the piecewise-linear CDF.
    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.grid.x_min() {
            return 0.0;
        }
        if x >= self.grid.x_max() {
            return 1.0;
        }
        let i = self.grid.cell_of(x);
        let w = (x - self.grid.face(i)) / self.grid.spacing();
        self.left[i] + w * self.mass[i]
    }

    /// `x` with mass `p` to its left.
    pub fn quantile(&self, p: f64) -> f64 {
        self.invert_left(p).x
    }

    /// `x` with mass `q` to its right.
    pub fn quantile_upper(&self, q: f64) -> f64 {
        self.invert_right(q).x
    }

    /// Inverts at level `(i + 1/2)/m`, choosing the accumulation that keeps
    /// the tail accurate.
    pub(crate) fn invert_level(&self, i: usize, m: usize) -> Inversion {
        if 2 * i + 1 <= m {
            self.invert_left((i as f64 + 0.5) / m as f64)
        } else {
            self.invert_right((m as f64 - i as f64 - 0.5) / m as f64)
        }
    }

    pub(crate) fn invert_left(&self, p: f64) -> Inversion {
        let n = self.mass.len();
        if p <= 0.0 {
            return self.support_start();
        }
        if p >= 1.0 {
            return self.support_end();
        }
        let j = self.left.partition_point(|&c| c < p);
        let k = self.left.partition_point(|&c| c <= p);
        if j < k {
            return self.plateau_between(j, k - 1);
        }
        // left[j - 1] < p < left[j], inside cell j - 1
        let j = j.clamp(1, n);
        let c = j - 1;
        let frac = ((p - self.left[c]) / self.mass[c]).clamp(0.0, 1.0);
        Inversion {
            x: self.grid.face(c) + frac * self.grid.spacing(),
        }
    }

    pub(crate) fn invert_right(&self, q: f64) -> Inversion {
        let n = self.mass.len();
        if q <= 0.0 {
            return self.support_end();
        }
        if q >= 1.0 {
            return self.support_start();
        }
        let j = self.right.partition_point(|&c| c > q);
        let k = self.right.partition_point(|&c| c >= q);
        if j < k {
            return self.plateau_between(j, k - 1);
        }
        // right[j - 1] > q > right[j], inside cell j - 1
        let j = j.clamp(1, n);
        let c = j - 1;
        let frac = ((q - self.right[j]) / self.mass[c]).clamp(0.0, 1.0);
        Inversion {
            x: self.grid.face(j) - frac * self.grid.spacing(),
        }
    }

    fn support_start(&self) -> Inversion {
        let k = self.left.partition_point(|&c| c <= 0.0);
        Inversion {
            x: self.grid.face(k.saturating_sub(1)),
        }
    }

    fn support_end(&self) -> Inversion {
        let j = self.right.partition_point(|&c| c > 0.0);
        Inversion {
            x: self.grid.face(j),
        }
    }

    fn plateau_between(&self, first_face: usize, last_face: usize) -> Inversion {
        let a = self.grid.face(first_face);
        let b = self.grid.face(last_face);
        Inversion { x: 0.5 * (a + b) }
    }
}

/// Quantile chart of `rho` with `m` levels by piecewise-linear CDF inversion.
/// Flat CDF stretches are inverted at their midpoint.
pub fn to_quantile(rho: &DensityMeasure, m: usize) -> Result<QuantileMeasure> {
    if m == 0 {
        return Err(Error::param("m", "need at least one quantile level"));
    }
    let cdf = Cdf::new(rho);
    let mut v: Vec<f64> = (0..m).map(|i| cdf.invert_level(i, m).x).collect();
    // switching accumulations at the median can break ties by one ulp
    for i in 1..m {
        if v[i] < v[i - 1] {
            v[i] = v[i - 1];
        }
    }
    QuantileMeasure::new(v)
}

/// Quantile chart of the continuous piecewise-linear density through the
/// cell-center values, flat in the two outer half cells.
///
/// The CDF is piecewise quadratic, so consecutive quantile gaps track
/// `1 / (m rho)` smoothly even when many levels fall in one cell, and the
/// chart velocity `1/g_i - 1/g_{i-1}` approximates `(log rho)'`. The
/// piecewise-constant inversion of [`to_quantile`] makes that difference
/// jump at every cell face.
pub fn to_quantile_smooth(rho: &DensityMeasure, m: usize) -> Result<QuantileMeasure> {
    if m == 0 {
        return Err(Error::param("m", "need at least one quantile level"));
    }
    let g = rho.grid();
    let n = g.len();
    let total = rho.mass();
    let r: Vec<f64> = rho.values().iter().map(|v| v / total).collect();
    // pieces k = 0..=n between nodes x_min, c_0, .., c_{n-1}, x_max
    let node = |k: usize| match k {
        0 => g.x_min(),
        k if k > n => g.x_max(),
        k => g.center(k - 1),
    };
    let val = |k: usize| r[k.clamp(1, n) - 1];
    let piece_mass: Vec<f64> = (0..=n)
        .map(|k| 0.5 * (node(k + 1) - node(k)) * (val(k) + val(k + 1)))
        .collect();
    let mut left = vec![0.0; n + 2];
    for k in 0..=n {
        left[k + 1] = left[k] + piece_mass[k];
    }
    let mut right = vec![0.0; n + 2];
    for k in (0..=n).rev() {
        right[k] = right[k + 1] + piece_mass[k];
    }
    // distance s from the node with value r0 at which the linear density
    // r0 -> r1 over width w has accumulated mass p
    let solve = |p: f64, r0: f64, r1: f64, w: f64| -> f64 {
        let disc = (r0 * r0 + 2.0 * (r1 - r0) * p / w).max(0.0);
        (2.0 * p / (r0 + disc.sqrt())).clamp(0.0, w)
    };
    let mut v: Vec<f64> = (0..m)
        .map(|i| {
            if 2 * i + 1 <= m {
                let p = (i as f64 + 0.5) / m as f64;
                let k = (left.partition_point(|&c| c < p) - 1).min(n);
                node(k) + solve(p - left[k], val(k), val(k + 1), node(k + 1) - node(k))
            } else {
                let q = (m as f64 - i as f64 - 0.5) / m as f64;
                let k = right.partition_point(|&c| c >= q).clamp(1, n + 1) - 1;
                node(k + 1) - solve(q - right[k + 1], val(k + 1), val(k), node(k + 1) - node(k))
            }
        })
        .collect();
    for i in 1..m {
        if v[i] < v[i - 1] {
            v[i] = v[i - 1];
        }
    }
    QuantileMeasure::new(v)
}

/// Density on `grid` whose CDF is a monotone cubic (PCHIP) interpolant of the
/// quantile knots.
///
/// Knots are `(X_i, (i + 1/2)/m)` plus two end knots half a gap beyond the
/// extreme quantiles where the CDF reaches 0 and 1 with zero slope. When some
/// gap vanishes (atoms) the CDF is taken piecewise linear instead. Mass that
/// falls outside the grid is assigned to the edge cells and reported in the
/// log.
pub fn from_quantile(q: &QuantileMeasure, grid: &Grid) -> Result<DensityMeasure> {
    let x = q.values();
    let m = x.len();
    let inv_m = 1.0 / m as f64;

    let first_gap = if m > 1 { x[1] - x[0] } else { 0.0 };
    let last_gap = if m > 1 { x[m - 1] - x[m - 2] } else { 0.0 };
    let mut knots = Vec::with_capacity(m + 2);
    knots.push(x[0] - 0.5 * first_gap);
    knots.extend_from_slice(x);
    knots.push(x[m - 1] + 0.5 * last_gap);
    // exact CDF increments per piece
    let mut dc = vec![inv_m; m + 1];
    dc[0] = 0.5 * inv_m;
    dc[m] = 0.5 * inv_m;
    density_from_cdf_pieces(&knots, &dc, grid, EndSlopes::Zero)
}

/// Slope of the CDF interpolant at the two extreme knots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum EndSlopes {
    /// Density vanishes at the ends.
    Zero,
    /// Shape-preserving three-point estimate.
    Extrapolated,
}

/// Density on `grid` from a CDF given by nondecreasing knots and the exact
/// mass `dc[k]` between knots `k` and `k + 1`.
///
/// The CDF is interpolated by PCHIP when every piece carrying mass has
/// positive width, and piecewise linearly otherwise. Cell masses are summed
/// from per-piece increments so that tail cells keep full relative
/// precision.
pub(crate) fn density_from_cdf_pieces(
    knots: &[f64],
    dc: &[f64],
    grid: &Grid,
    ends: EndSlopes,
) -> Result<DensityMeasure> {
    // zero-width pieces without mass carry no information
    let mut kx = vec![knots[0]];
    let mut kd = Vec::with_capacity(dc.len());
    for (k, &d) in dc.iter().enumerate() {
        if knots[k + 1] > knots[k] || d > 0.0 {
            kx.push(knots[k + 1]);
            kd.push(d);
        }
    }
    if kd.is_empty() {
        return Err(Error::InvalidDensity("CDF pieces carry no mass".into()));
    }
    let (knots, dc) = (kx, kd);
    let pieces = dc.len();

    let widths: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
    let smooth = widths.iter().all(|&w| w > 0.0);
    let slopes = if smooth {
        pchip_slopes(&widths, &dc, ends)
    } else {
        Vec::new()
    };

    // mass of piece k between its start and x
    let local = |k: usize, xx: f64| -> f64 {
        let w = widths[k];
        if w <= 0.0 {
            return if xx >= knots[k] { dc[k] } else { 0.0 };
        }
        let s = ((xx - knots[k]) / w).clamp(0.0, 1.0);
        if !smooth {
            return dc[k] * s;
        }
        let s2 = s * s;
        let s3 = s2 * s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h10 = s3 - 2.0 * s2 + s;
        let h11 = s3 - s2;
        dc[k] * h01 + w * (slopes[k] * h10 + slopes[k + 1] * h11)
    };

    let n = grid.len();
    let mut mass = vec![0.0; n];
    let mut clipped = 0.0;
    for k in 0..pieces {
        if dc[k] == 0.0 {
            continue;
        }
        let (a, b) = (knots[k], knots[k + 1]);
        if widths[k] <= 0.0 {
            mass[grid.cell_of(a)] += dc[k];
            if !grid.contains(a) {
                clipped += dc[k];
            }
            continue;
        }
        let first = grid.cell_of(a);
        let last = grid.cell_of(b);
        for (i, cell) in mass.iter_mut().enumerate().take(last + 1).skip(first) {
            let lo = if i == 0 { a } else { grid.face(i).max(a) };
            let hi = if i == n - 1 { b } else { grid.face(i + 1).min(b) };
            if hi > lo {
                *cell += (local(k, hi) - local(k, lo)).max(0.0);
            }
        }
        if a < grid.x_min() {
            clipped += local(k, grid.x_min().min(b));
        }
        if b > grid.x_max() {
            clipped += dc[k] - local(k, grid.x_max().max(a));
        }
    }
    if clipped > 1e-12 {
        log::warn!(
            "mass {clipped:e} outside [{}, {}] assigned to the edge cells",
            grid.x_min(),
            grid.x_max()
        );
    }
    let h = grid.spacing();
    DensityMeasure::new(*grid, mass.into_iter().map(|c| c / h).collect())
}

/// Fritsch-Butland slopes at the knots.
fn pchip_slopes(widths: &[f64], dc: &[f64], ends: EndSlopes) -> Vec<f64> {
    let pieces = widths.len();
    let secant: Vec<f64> = dc.iter().zip(widths).map(|(d, w)| d / w).collect();
    let mut d = vec![0.0; pieces + 1];
    for k in 1..pieces {
        let (w0, w1) = (widths[k - 1], widths[k]);
        let (s0, s1) = (secant[k - 1], secant[k]);
        if s0 <= 0.0 || s1 <= 0.0 {
            continue;
        }
        let a = 2.0 * w1 + w0;
        let b = w1 + 2.0 * w0;
        d[k] = (a + b) / (a / s0 + b / s1);
    }
    if ends == EndSlopes::Extrapolated && pieces >= 2 {
        d[0] = end_slope(widths[0], widths[1], secant[0], secant[1]);
        d[pieces] = end_slope(
            widths[pieces - 1],
            widths[pieces - 2],
            secant[pieces - 1],
            secant[pieces - 2],
        );
    }
    d
}

fn end_slope(w0: f64, w1: f64, s0: f64, s1: f64) -> f64 {
    let d = ((2.0 * w0 + w1) * s0 - w0 * s1) / (w0 + w1);
    if d <= 0.0 || s0 <= 0.0 {
        0.0
    } else if s1 <= 0.0 && d > 3.0 * s0 {
        3.0 * s0
    } else {
        d.min(3.0 * s0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::second_moment;
    use crate::transport::w2;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn smooth_chart_velocity_tracks_log_derivative() {
        // Gaussian: (log rho)' = -x, so gap differences should reproduce -x
        let g = Grid::symmetric(8.0, 256).unwrap();
        let rho = DensityMeasure::gaussian(g, 0.0, 1.0).unwrap();
        let m = 400;
        let x = to_quantile_smooth(&rho, m).unwrap().into_values();
        let worst = (40..m - 40)
            .map(|i| (1.0 / (x[i + 1] - x[i]) - 1.0 / (x[i] - x[i - 1]) + x[i]).abs())
            .fold(0.0, f64::max);
        assert!(worst < 0.03, "{worst}");
        let coarse = to_quantile(&rho, m).unwrap();
        assert!(coarse.w2_sq(&QuantileMeasure::new(x).unwrap()).unwrap().sqrt() < g.spacing());
    }

    #[test]
    fn smooth_chart_of_uniform_is_exact_inside() {
        let g = Grid::new(0.0, 1.0, 50).unwrap();
        let u = DensityMeasure::uniform(g, 0.0, 1.0).unwrap();
        let q = to_quantile_smooth(&u, 10).unwrap();
        for (i, &v) in q.values().iter().enumerate() {
            assert!((v - (i as f64 + 0.5) / 10.0).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_quantiles() {
        let g = Grid::new(0.0, 1.0, 64).unwrap();
        let u = DensityMeasure::uniform(g, 0.0, 1.0).unwrap();
        let q = to_quantile(&u, 4).unwrap();
        for (a, b) in q.values().iter().zip([0.125, 0.375, 0.625, 0.875]) {
            assert_relative_eq!(*a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn gaussian_median() {
        let g = Grid::symmetric(10.0, 1024).unwrap();
        let rho = DensityMeasure::gaussian(g, 0.0, 1.0).unwrap();
        let q = to_quantile(&rho, 99).unwrap();
        assert!(q.values()[49].abs() < g.spacing());
        // symmetric chart
        for i in 0..99 {
            assert!((q.values()[i] + q.values()[98 - i]).abs() < 1e-9);
        }
    }

    #[test]
    fn plateau_midpoint() {
        let g = Grid::new(0.0, 4.0, 16).unwrap();
        let mut v = vec![0.0; 16];
        v[..4].fill(1.0);
        v[12..].fill(1.0);
        let rho = DensityMeasure::new(g, v).unwrap();
        let cdf = Cdf::new(&rho);
        let inv = cdf.invert_left(0.5);
        assert_relative_eq!(inv.x, 2.0, epsilon = 1e-12);
        let inv = cdf.invert_right(0.5);
        assert_relative_eq!(inv.x, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn cdf_eval_inverts_quantile() {
        let g = Grid::symmetric(8.0, 512).unwrap();
        let rho = DensityMeasure::gaussian(g, 0.4, 1.3).unwrap();
        let cdf = Cdf::new(&rho);
        for &p in &[1e-6, 0.01, 0.3, 0.5, 0.77, 0.999] {
            assert_relative_eq!(cdf.eval(cdf.quantile(p)), p, epsilon = 1e-12);
            assert_relative_eq!(1.0 - cdf.eval(cdf.quantile_upper(p)), p, epsilon = 1e-12);
        }
    }

    #[test]
    fn uniform_round_trip() {
        let g = Grid::new(-1.0, 2.0, 300).unwrap();
        let u = DensityMeasure::uniform(g, 0.0, 1.0).unwrap();
        let back = from_quantile(&to_quantile(&u, 1000).unwrap(), &g).unwrap();
        assert!(w2(&u, &back, 4096).unwrap() < g.spacing());
        for i in 0..300 {
            let x = g.center(i);
            if x > 0.02 && x < 0.98 {
                assert_relative_eq!(back.values()[i], 1.0, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn gaussian_round_trip() {
        let g = Grid::symmetric(10.0, 1024).unwrap();
        let rho = DensityMeasure::gaussian(g, 0.0, 1.0).unwrap();
        for &m in &[64, 256, 2048] {
            let back = from_quantile(&to_quantile(&rho, m).unwrap(), &g).unwrap();
            let d = w2(&rho, &back, 8192).unwrap();
            assert!(d < 2.0 * (g.spacing() + 20.0 / m as f64), "m={m} d={d}");
        }
    }

    #[test]
    fn dirac_chart() {
        let g = Grid::new(-1.0, 1.0, 32).unwrap();
        let q = QuantileMeasure::new(vec![0.3; 50]).unwrap();
        let rho = from_quantile(&q, &g).unwrap();
        let nonzero: Vec<usize> = (0..32).filter(|&i| rho.values()[i] > 0.0).collect();
        assert_eq!(nonzero, vec![g.cell_of(0.3)]);
        let single = from_quantile(&QuantileMeasure::new(vec![-0.5]).unwrap(), &g).unwrap();
        assert_eq!(single.values()[g.cell_of(-0.5)], 1.0 / g.spacing());
    }

    #[test]
    fn clipped_mass_goes_to_edges() {
        let g = Grid::new(0.0, 1.0, 16).unwrap();
        let q = QuantileMeasure::new(vec![-5.0, 0.5, 6.0]).unwrap();
        let rho = from_quantile(&q, &g).unwrap();
        assert_relative_eq!(rho.mass(), 1.0, epsilon = 1e-12);
        assert!(rho.values()[0] * g.spacing() > 1.0 / 3.0);
    }

    #[test]
    fn rejects_non_monotone() {
        assert!(matches!(
            QuantileMeasure::new(vec![0.0, 1.0, 0.5]),
            Err(Error::NotMonotone { index: 2 })
        ));
    }

    fn random_density() -> impl Strategy<Value = DensityMeasure> {
        (
            prop::collection::vec((-3.0f64..3.0, 0.3f64..1.5, 0.1f64..1.0), 1..4),
        )
            .prop_map(|(bumps,)| {
                let g = Grid::symmetric(12.0, 600).unwrap();
                DensityMeasure::from_fn(g, |x| {
                    bumps
                        .iter()
                        .map(|(c, s, w)| w * (-0.5 * ((x - c) / s).powi(2)).exp() / s)
                        .sum()
                })
                .unwrap()
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn round_trip_preserves_second_moment(rho in random_density(), m in 32usize..512) {
            let g = *rho.grid();
            let back = from_quantile(&to_quantile(&rho, m).unwrap(), &g).unwrap();
            let bound = 4.0 * g.range() * (g.spacing() + g.range() / m as f64);
            prop_assert!((second_moment(&back) - second_moment(&rho)).abs() <= bound);
            prop_assert!((back.mass() - 1.0).abs() < 1e-10);
        }

        #[test]
        fn quantiles_are_monotone(rho in random_density(), m in 2usize..300) {
            let q = to_quantile(&rho, m).unwrap();
            prop_assert!(q.values().windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
