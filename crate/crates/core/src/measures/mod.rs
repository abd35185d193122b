//! Probability measures on a truncated line and their static functionals.
//!
//! Two charts describe the same measure: a [`DensityMeasure`] holds cell
//! values on a [`Grid`], a [`QuantileMeasure`] holds the inverse CDF at the
//! midpoints `(i + 1/2)/m` of `(0, 1)`. The functionals here (entropy,
//! internal and free energy, Fisher information, relative entropy, moments)
//! all use the midpoint rule on the grid.
//!
//! Cells with a value below [`DENSITY_FLOOR`] are excluded from every quotient
//! that divides by the density; this realizes `0 log 0 = 0` and keeps
//! `|rho'|^2 / rho` finite on empty cells.

mod quantile;
mod smoothing;

pub use quantile::{from_quantile, to_quantile, to_quantile_smooth, Cdf, QuantileMeasure};
pub(crate) use quantile::{density_from_cdf_pieces, EndSlopes};
pub use smoothing::{mollify, splice_margin, tail_splice};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::potentials::Potential;

/// Densities below this value are treated as zero in quotients.
pub const DENSITY_FLOOR: f64 = 1e-30;

/// Tolerance on `h * sum(values) = 1`.
pub const MASS_TOLERANCE: f64 = 1e-10;

/// Experiments are only trusted when the mass in the two outermost cells is
/// below this threshold.
pub const BOUNDARY_MASS_LIMIT: f64 = 1e-8;

/// Nonnegative cell values on a grid with unit mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityMeasure {
    grid: Grid,
    values: Vec<f64>,
}

impl DensityMeasure {
    /// Builds a density from raw cell values and normalizes it to unit mass.
    pub fn new(grid: Grid, mut values: Vec<f64>) -> Result<Self> {
        validate_values(&grid, &values)?;
        let mass = grid.spacing() * pairwise_sum(&values);
        if mass <= 0.0 || !mass.is_finite() {
            return Err(Error::InvalidDensity(format!(
                "total mass must be positive and finite, got {mass}"
            )));
        }
        if (mass - 1.0).abs() > f64::EPSILON {
            values.iter_mut().for_each(|v| *v /= mass);
        }
        Ok(Self { grid, values })
    }

    /// Builds a density whose values already integrate to one; nothing is
    /// rescaled, so the stored values are exactly the inputs.
    pub fn from_normalized(grid: Grid, values: Vec<f64>) -> Result<Self> {
        validate_values(&grid, &values)?;
        let mass = grid.spacing() * pairwise_sum(&values);
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidDensity(format!(
                "expected unit mass within {MASS_TOLERANCE}, got {mass}"
            )));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at cell centers and normalizes.
    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(grid.center(i))).collect();
        Self::new(grid, values)
    }

    /// Normal density `N(mean, std^2)` sampled on the grid.
    pub fn gaussian(grid: Grid, mean: f64, std: f64) -> Result<Self> {
        if !(std > 0.0 && std.is_finite()) {
            return Err(Error::param("std", format!("must be positive, got {std}")));
        }
        let c = 1.0 / (std * (2.0 * std::f64::consts::PI).sqrt());
        Self::from_fn(grid, |x| {
            let z = (x - mean) / std;
            c * (-0.5 * z * z).exp()
        })
    }

    /// Uniform density on `[a, b]`; cells partially covered get the covered
    /// fraction.
    pub fn uniform(grid: Grid, a: f64, b: f64) -> Result<Self> {
        if !(a < b) {
            return Err(Error::param("uniform", format!("need a < b, got [{a}, {b}]")));
        }
        let h = grid.spacing();
        let values = (0..grid.len())
            .map(|i| {
                let lo = grid.face(i).max(a);
                let hi = grid.face(i + 1).min(b);
                ((hi - lo) / h).max(0.0)
            })
            .collect();
        Self::new(grid, values)
    }

    /// All mass in the cell containing `x0`.
    pub fn dirac(grid: Grid, x0: f64) -> Result<Self> {
        let mut values = vec![0.0; grid.len()];
        values[grid.cell_of(x0)] = 1.0;
        Self::new(grid, values)
    }

    /// Stationary density `exp(-psi) / Z` of the Fokker-Planck flow.
    pub fn gibbs(grid: Grid, psi: &Potential) -> Result<Self> {
        let shift = grid
            .centers()
            .iter()
            .map(|&x| psi.value(x))
            .fold(f64::INFINITY, f64::min);
        Self::from_fn(grid, |x| (-(psi.value(x) - shift)).exp())
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// `h * sum(values)`.
    pub fn mass(&self) -> f64 {
        self.grid.spacing() * pairwise_sum(&self.values)
    }

    /// Mass in the two outermost cells.
    pub fn boundary_mass(&self) -> f64 {
        let n = self.values.len();
        self.grid.spacing() * (self.values[0] + self.values[n - 1])
    }

    /// True when the truncation of the real line is invisible at the
    /// [`BOUNDARY_MASS_LIMIT`] level.
    pub fn truncation_ok(&self) -> bool {
        self.boundary_mass() < BOUNDARY_MASS_LIMIT
    }

    pub(crate) fn warn_boundary(&self, context: &str) {
        let bm = self.boundary_mass();
        if bm >= BOUNDARY_MASS_LIMIT {
            log::warn!("{context}: boundary mass {bm:e} exceeds {BOUNDARY_MASS_LIMIT:e}; enlarge the domain");
        }
    }

    /// Linear interpolation of the cell values at `x`; zero outside the grid.
    pub fn interpolate(&self, x: f64) -> f64 {
        let g = &self.grid;
        if !g.contains(x) {
            return 0.0;
        }
        let s = (x - g.x_min()) / g.spacing() - 0.5;
        if s <= 0.0 {
            return self.values[0];
        }
        let i = s.floor() as usize;
        if i + 1 >= self.values.len() {
            return self.values[self.values.len() - 1];
        }
        let w = s - i as f64;
        (1.0 - w) * self.values[i] + w * self.values[i + 1]
    }

    pub fn mean(&self) -> f64 {
        let h = self.grid.spacing();
        let terms: Vec<f64> = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &r)| self.grid.center(i) * r)
            .collect();
        h * pairwise_sum(&terms)
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        let h = self.grid.spacing();
        let terms: Vec<f64> = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &r)| (self.grid.center(i) - m).powi(2) * r)
            .collect();
        h * pairwise_sum(&terms)
    }

    /// Pointwise combination on the same grid, renormalized.
    pub fn mix(&self, other: &DensityMeasure, t: f64) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let v = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (1.0 - t) * a + t * b)
            .collect();
        Self::new(self.grid, v)
    }

    /// Density of `X + c` for `X ~ self`, resampled by linear interpolation.
    pub fn translate(&self, c: f64) -> Result<Self> {
        Self::from_fn(self.grid, |x| self.interpolate(x - c))
    }
}

fn validate_values(grid: &Grid, values: &[f64]) -> Result<()> {
    if values.len() != grid.len() {
        return Err(Error::InvalidDensity(format!(
            "expected {} values, got {}",
            grid.len(),
            values.len()
        )));
    }
    if let Some((i, v)) = values
        .iter()
        .enumerate()
        .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
    {
        return Err(Error::InvalidDensity(format!(
            "value {v} at cell {i} is negative or non-finite"
        )));
    }
    Ok(())
}

/// Fixed-order pairwise summation; the result depends only on the input.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 64;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// `S(rho) = integral of rho log rho`, with `0 log 0 = 0`.
pub fn entropy(rho: &DensityMeasure) -> f64 {
    let terms: Vec<f64> = rho
        .values
        .iter()
        .map(|&r| if r < DENSITY_FLOOR { 0.0 } else { r * r.ln() })
        .collect();
    rho.grid.spacing() * pairwise_sum(&terms)
}

/// `E(rho) = integral of psi d rho`.
pub fn internal_energy(rho: &DensityMeasure, psi: &Potential) -> f64 {
    let terms: Vec<f64> = rho
        .values
        .iter()
        .enumerate()
        .map(|(i, &r)| if r == 0.0 { 0.0 } else { psi.value(rho.grid.center(i)) * r })
        .collect();
    rho.grid.spacing() * pairwise_sum(&terms)
}

/// `F = S + E`.
pub fn free_energy(rho: &DensityMeasure, psi: &Potential) -> f64 {
    entropy(rho) + internal_energy(rho, psi)
}

/// `integral of |x|^2 d rho`.
pub fn second_moment(rho: &DensityMeasure) -> f64 {
    let terms: Vec<f64> = rho
        .values
        .iter()
        .enumerate()
        .map(|(i, &r)| rho.grid.center(i).powi(2) * r)
        .collect();
    rho.grid.spacing() * pairwise_sum(&terms)
}

/// Outcome of a Fisher-information evaluation with floor diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherReport {
    pub value: f64,
    /// Fraction of the mass sitting in cells below [`DENSITY_FLOOR`].
    pub floored_fraction: f64,
    /// False when more than half the mass is in floored cells.
    pub reliable: bool,
}

/// Central difference of cell values; one-sided at the two ends.
pub(crate) fn central_difference(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    (0..n)
        .map(|i| match i {
            0 => (values[1] - values[0]) / h,
            _ if i == n - 1 => (values[n - 1] - values[n - 2]) / h,
            _ => (values[i + 1] - values[i - 1]) / (2.0 * h),
        })
        .collect()
}

/// Fisher information `integral of |rho'|^2 / rho`, with diagnostics.
pub fn fisher_information_report(rho: &DensityMeasure) -> FisherReport {
    let h = rho.grid.spacing();
    let d = central_difference(&rho.values, h);
    let mut floored = 0.0;
    let terms: Vec<f64> = rho
        .values
        .iter()
        .zip(&d)
        .map(|(&r, &dr)| {
            if r < DENSITY_FLOOR {
                floored += r;
                0.0
            } else {
                dr * dr / r
            }
        })
        .collect();
    let floored_fraction = h * floored / rho.mass();
    let reliable = floored_fraction <= 0.5;
    if !reliable {
        log::warn!("Fisher information unreliable: {floored_fraction:.3} of the mass is below the density floor");
    }
    FisherReport {
        value: h * pairwise_sum(&terms),
        floored_fraction,
        reliable,
    }
}

/// Fisher information `integral of |rho'|^2 / rho`.
pub fn fisher_information(rho: &DensityMeasure) -> f64 {
    fisher_information_report(rho).value
}

/// Relative entropy `H(rho | sigma)`; `+inf` when `rho` charges a cell where
/// `sigma` vanishes.
pub fn relative_entropy(rho: &DensityMeasure, sigma: &DensityMeasure) -> Result<f64> {
    rho.grid.ensure_same(&sigma.grid)?;
    let mut terms = Vec::with_capacity(rho.values.len());
    for (&r, &s) in rho.values.iter().zip(&sigma.values) {
        if r < DENSITY_FLOOR {
            terms.push(0.0);
        } else if s < DENSITY_FLOOR {
            return Ok(f64::INFINITY);
        } else {
            terms.push(r * (r / s).ln());
        }
    }
    Ok(rho.grid.spacing() * pairwise_sum(&terms))
}

/// Empirical measure `(1/N) sum delta_{X_k}` of a particle system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleEnsemble {
    positions: Vec<f64>,
}

impl ParticleEnsemble {
    pub fn new(positions: Vec<f64>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::param("positions", "ensemble must not be empty"));
        }
        if positions.iter().any(|x| !x.is_finite()) {
            return Err(Error::param("positions", "non-finite particle position"));
        }
        Ok(Self { positions })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn mean(&self) -> f64 {
        pairwise_sum(&self.positions) / self.len() as f64
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        let sq: Vec<f64> = self.positions.iter().map(|x| (x - m).powi(2)).collect();
        pairwise_sum(&sq) / self.len() as f64
    }

    pub fn second_moment(&self) -> f64 {
        let sq: Vec<f64> = self.positions.iter().map(|x| x * x).collect();
        pairwise_sum(&sq) / self.len() as f64
    }

    /// Sorted positions: the quantile chart of the empirical measure at
    /// levels `(k + 1/2)/N`.
    pub fn to_quantile(&self) -> QuantileMeasure {
        let mut v = self.positions.clone();
        v.sort_by(f64::total_cmp);
        QuantileMeasure::new(v).expect("sorted finite positions are monotone")
    }
}
