//! Reference dynamics for `d rho/dt = rho'' + (rho psi')'`.
//!
//! The particle picture is `dX = -psi'(X) dt + sqrt(2) dW`, so the heat
//! kernel has variance `2t`:
//!
//! ```text
//! p_t(y | x) = (4 pi t)^{-1/2} exp(-(y - x)^2 / 4t)
//! ```
//!
//! and for `psi = kappa x^2 / 2` the Ornstein-Uhlenbeck kernel is Gaussian
//! with mean `x exp(-kappa t)` and variance `(1 - exp(-2 kappa t)) / kappa`.
//!
//! For general `psi` the finite-volume solver uses Scharfetter-Gummel fluxes
//!
//! ```text
//! J_{i+1/2} = (B(-d_i) rho_{i+1} - B(d_i) rho_i) / h,   d_i = psi_{i+1} - psi_i,
//! ```
//!
//! with the Bernoulli function `B(z) = z / (exp(z) - 1)`, zero flux at the
//! two outer faces and implicit Euler in time. The sampled Gibbs density
//! `exp(-psi_i) / Z` is an exact steady state, and one step is a
//! column-stochastic matrix fixing it, so the discrete free energy cannot
//! increase.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::solve_tridiagonal;
use crate::measures::{free_energy, DensityMeasure};
use crate::potentials::Potential;
use crate::transport::MeasurePath;

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::param("t", format!("must be positive, got {t}")));
    }
    Ok(())
}

/// Heat kernel `p_t(y | x)` of `d rho/dt = rho''`.
pub fn heat_kernel(t: f64, x: f64, y: f64) -> Result<f64> {
    check_time(t)?;
    Ok(gaussian_pdf(y, x, 2.0 * t))
}

/// Ornstein-Uhlenbeck kernel for `psi = kappa x^2 / 2`.
pub fn ou_kernel(kappa: f64, t: f64, x: f64, y: f64) -> Result<f64> {
    check_time(t)?;
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::param("kappa", format!("must be positive, got {kappa}")));
    }
    let (m, v) = ou_moments(kappa, t, x);
    Ok(gaussian_pdf(y, m, v))
}

fn ou_moments(kappa: f64, t: f64, x: f64) -> (f64, f64) {
    (x * (-kappa * t).exp(), -(-2.0 * kappa * t).exp_m1() / kappa)
}

fn gaussian_pdf(y: f64, mean: f64, var: f64) -> f64 {
    (-(y - mean).powi(2) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
}

fn gaussian_log_pdf(y: f64, mean: f64, var: f64) -> f64 {
    -(y - mean).powi(2) / (2.0 * var) - 0.5 * (2.0 * PI * var).ln()
}

/// Transition kernel of the Fokker-Planck flow.
#[derive(Debug, Clone)]
pub enum Kernel {
    /// `psi = 0`.
    Heat,
    /// `psi = kappa x^2 / 2`.
    OrnsteinUhlenbeck { kappa: f64 },
    /// Finite-volume transition probabilities for a general potential.
    Numerical { psi: Potential, grid: Grid, dt: f64 },
}

impl Kernel {
    /// Closed-form kernel for `psi` when one exists, otherwise the numerical
    /// kernel on `grid`.
    pub fn for_potential(psi: &Potential, grid: &Grid) -> Kernel {
        if psi.is_zero() {
            Kernel::Heat
        } else if let Some(kappa) = psi.kappa().filter(|&k| k > 0.0) {
            Kernel::OrnsteinUhlenbeck { kappa }
        } else {
            Kernel::Numerical {
                psi: psi.clone(),
                grid: *grid,
                dt: 0.25 * grid.spacing(),
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            Kernel::Heat => "heat".into(),
            Kernel::OrnsteinUhlenbeck { kappa } => format!("ou:{kappa}"),
            Kernel::Numerical { psi, .. } => format!("numerical:{psi}"),
        }
    }

    /// Potential generating this kernel.
    pub fn potential(&self) -> Potential {
        match self {
            Kernel::Heat => Potential::zero(),
            Kernel::OrnsteinUhlenbeck { kappa } => Potential::quadratic(*kappa),
            Kernel::Numerical { psi, .. } => psi.clone(),
        }
    }

    fn validate(&self) -> Result<()> {
        if let Kernel::OrnsteinUhlenbeck { kappa } = self {
            if !(*kappa > 0.0 && kappa.is_finite()) {
                return Err(Error::param("kappa", format!("must be positive, got {kappa}")));
            }
        }
        Ok(())
    }

    /// Mean and variance of `p_t(. | x)` for the Gaussian kernels.
    pub fn moments(&self, t: f64, x: f64) -> Option<(f64, f64)> {
        match self {
            Kernel::Heat => Some((x, 2.0 * t)),
            Kernel::OrnsteinUhlenbeck { kappa } => Some(ou_moments(*kappa, t, x)),
            Kernel::Numerical { .. } => None,
        }
    }

    /// `p_t(y | x)`. The numerical kernel evolves a single-cell density and
    /// is expensive; prefer [`Kernel::log_transition_matrix`] for batches.
    pub fn density(&self, t: f64, x: f64, y: f64) -> Result<f64> {
        check_time(t)?;
        self.validate()?;
        match self {
            Kernel::Heat | Kernel::OrnsteinUhlenbeck { .. } => {
                let (m, v) = self.moments(t, x).expect("gaussian kernel");
                Ok(gaussian_pdf(y, m, v))
            }
            Kernel::Numerical { psi, grid, dt } => {
                let start = DensityMeasure::dirac(*grid, x)?;
                let end = evolve_to(&start, psi, t, *dt)?;
                Ok(end.interpolate(y))
            }
        }
    }

    /// `log p_t(x_j | x_i)` for all cell pairs, row `i` for the source.
    pub fn log_transition_matrix(&self, grid: &Grid, t: f64) -> Result<Vec<Vec<f64>>> {
        check_time(t)?;
        self.validate()?;
        let xs = grid.centers();
        match self {
            Kernel::Heat | Kernel::OrnsteinUhlenbeck { .. } => Ok(xs
                .par_iter()
                .map(|&x| {
                    let (m, v) = self.moments(t, x).expect("gaussian kernel");
                    xs.iter().map(|&y| gaussian_log_pdf(y, m, v)).collect()
                })
                .collect()),
            Kernel::Numerical { psi, grid: kg, dt } => {
                kg.ensure_same(grid)?;
                let h = grid.spacing();
                (0..grid.len())
                    .into_par_iter()
                    .map(|i| {
                        let mut v = vec![0.0; grid.len()];
                        v[i] = 1.0 / h;
                        let start = DensityMeasure::new(*grid, v)?;
                        let end = evolve_to(&start, psi, t, *dt)?;
                        Ok(end.values().iter().map(|p| p.ln()).collect())
                    })
                    .collect()
            }
        }
    }
}

/// `rho_t(y) = h sum_x p_t(y | x) rho0(x)`; each source row of the sampled
/// kernel is normalized to unit mass on the grid so no mass is created or
/// lost by the sampling.
pub fn convolve_kernel(rho0: &DensityMeasure, kernel: &Kernel, t: f64) -> Result<DensityMeasure> {
    check_time(t)?;
    kernel.validate()?;
    let g = *rho0.grid();
    let h = g.spacing();
    let out = match kernel {
        Kernel::Numerical { psi, dt, .. } => evolve_to(rho0, psi, t, *dt)?.into_values(),
        _ => {
            let xs = g.centers();
            let rows: Vec<Vec<f64>> = xs
                .par_iter()
                .zip(rho0.values())
                .map(|(&x, &r)| {
                    if r == 0.0 {
                        return Vec::new();
                    }
                    let (m, v) = kernel.moments(t, x).expect("gaussian kernel");
                    let row: Vec<f64> = xs.iter().map(|&y| gaussian_pdf(y, m, v)).collect();
                    let total = h * row.iter().sum::<f64>();
                    if total > 0.0 {
                        row.into_iter().map(|p| p * r * h / total).collect()
                    } else {
                        let mut d = vec![0.0; xs.len()];
                        d[g.cell_of(m)] = r;
                        d
                    }
                })
                .collect();
            let mut acc = vec![0.0; g.len()];
            for row in rows.iter().filter(|r| !r.is_empty()) {
                for (a, v) in acc.iter_mut().zip(row) {
                    *a += v;
                }
            }
            acc
        }
    };
    let result = DensityMeasure::new(g, out)?;
    result.warn_boundary("convolve_kernel");
    Ok(result)
}

/// Time stepping for [`evolve_fv_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Implicit Euler; unconditionally stable.
    Implicit,
    /// Forward Euler; requires `dt <= h^2 / 4`.
    Explicit,
}

/// Options of the finite-volume solver.
#[derive(Debug, Clone, Serialize)]
pub struct FvOptions {
    pub scheme: Scheme,
    /// Times at which states are recorded besides `0` and `t_end`; when empty,
    /// about 200 evenly spaced steps are recorded.
    pub snapshots: Vec<f64>,
}

impl Default for FvOptions {
    fn default() -> Self {
        Self {
            scheme: Scheme::Implicit,
            snapshots: Vec::new(),
        }
    }
}

/// A finite-volume run: the recorded path plus per-step monitors.
#[derive(Debug, Clone)]
pub struct FvRun {
    pub path: MeasurePath,
    /// Free energy after every step, starting with the initial state.
    pub free_energy: Vec<f64>,
    /// Largest `|h sum rho_{k+1} - h sum rho_k|` over the steps.
    pub max_mass_change: f64,
    pub steps: usize,
    pub dt: f64,
}

impl FvRun {
    /// Largest increase of `F` between consecutive steps, relative to
    /// `1 + |F|`; nonpositive for a dissipative run.
    pub fn worst_free_energy_increase(&self) -> f64 {
        self.free_energy
            .windows(2)
            .map(|w| (w[1] - w[0]) / (1.0 + w[0].abs()))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn bernoulli(z: f64) -> f64 {
    if z.abs() < 1e-6 {
        1.0 - 0.5 * z + z * z / 12.0
    } else if z > 700.0 {
        z * (-z).exp()
    } else {
        z / z.exp_m1()
    }
}

/// Generator of the semi-discrete equation as a tridiagonal matrix
/// `(lower, diag, upper)`.
fn generator(grid: &Grid, psi: &Potential) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = grid.len();
    let h2 = grid.spacing().powi(2);
    let p: Vec<f64> = grid.centers().iter().map(|&x| psi.value(x)).collect();
    let mut lower = vec![0.0; n - 1];
    let mut upper = vec![0.0; n - 1];
    let mut diag = vec![0.0; n];
    for i in 0..n - 1 {
        let d = p[i + 1] - p[i];
        let fwd = bernoulli(d) / h2; // from i into i + 1
        let back = bernoulli(-d) / h2; // from i + 1 into i
        upper[i] += back;
        diag[i] -= fwd;
        lower[i] += fwd;
        diag[i + 1] -= back;
    }
    (lower, diag, upper)
}

/// State at `t_end` only.
fn evolve_to(rho0: &DensityMeasure, psi: &Potential, t_end: f64, dt: f64) -> Result<DensityMeasure> {
    let opts = FvOptions {
        scheme: Scheme::Implicit,
        snapshots: vec![t_end],
    };
    let run = evolve_fv_with(rho0, psi, t_end, dt, &opts)?;
    Ok(run.path.last().clone())
}

/// Implicit finite-volume solution recorded at about 200 evenly spaced steps.
pub fn evolve_fv(rho0: &DensityMeasure, psi: &Potential, t_end: f64, dt: f64) -> Result<MeasurePath> {
    Ok(evolve_fv_with(rho0, psi, t_end, dt, &FvOptions::default())?.path)
}

/// Finite-volume solution with explicit control over the scheme and the
/// recorded times.
pub fn evolve_fv_with(
    rho0: &DensityMeasure,
    psi: &Potential,
    t_end: f64,
    dt: f64,
    opts: &FvOptions,
) -> Result<FvRun> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::param("t_end", format!("must be positive, got {t_end}")));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::param("dt", format!("must be positive, got {dt}")));
    }
    let g = *rho0.grid();
    let h = g.spacing();
    if opts.scheme == Scheme::Explicit && dt > 0.25 * h * h {
        return Err(Error::Cfl {
            dt,
            limit: 0.25 * h * h,
        });
    }
    let steps = (t_end / dt).ceil().max(1.0) as usize;
    let dt = t_end / steps as f64;

    let mut record = vec![false; steps + 1];
    record[0] = true;
    record[steps] = true;
    if opts.snapshots.is_empty() {
        let stride = steps.div_ceil(200).max(1);
        for k in (0..=steps).step_by(stride) {
            record[k] = true;
        }
    } else {
        for &s in &opts.snapshots {
            if !(0.0..=t_end).contains(&s) {
                return Err(Error::param("snapshots", format!("time {s} outside [0, {t_end}]")));
            }
            record[((s / dt).round() as usize).min(steps)] = true;
        }
    }

    let (lower, diag, upper) = generator(&g, psi);
    let (sys_lower, sys_diag, sys_upper): (Vec<f64>, Vec<f64>, Vec<f64>) = (
        lower.iter().map(|v| -dt * v).collect(),
        diag.iter().map(|v| 1.0 - dt * v).collect(),
        upper.iter().map(|v| -dt * v).collect(),
    );

    let mut rho = rho0.values().to_vec();
    let mut times = vec![0.0];
    let mut states = vec![rho0.clone()];
    let mut energies = vec![free_energy(rho0, psi)];
    let mut max_mass_change: f64 = 0.0;
    let mut mass = h * rho.iter().sum::<f64>();
    for k in 1..=steps {
        rho = match opts.scheme {
            Scheme::Implicit => solve_tridiagonal(&sys_lower, &sys_diag, &sys_upper, &rho)
                .ok_or_else(|| Error::NonFinite {
                    step: k,
                    what: "singular implicit system".into(),
                })?,
            Scheme::Explicit => (0..rho.len())
                .map(|i| {
                    let mut r = rho[i] + dt * diag[i] * rho[i];
                    if i > 0 {
                        r += dt * lower[i - 1] * rho[i - 1];
                    }
                    if i + 1 < rho.len() {
                        r += dt * upper[i] * rho[i + 1];
                    }
                    r
                })
                .collect(),
        };
        if let Some(i) = rho.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                step: k,
                what: format!("density at cell {i}"),
            });
        }
        // roundoff can leave values like -1e-300 in empty regions
        rho.iter_mut().for_each(|v| *v = v.max(0.0));
        let new_mass = h * rho.iter().sum::<f64>();
        max_mass_change = max_mass_change.max((new_mass - mass).abs());
        mass = new_mass;
        let state = DensityMeasure::from_raw(g, rho.clone());
        energies.push(free_energy(&state, psi));
        if record[k] {
            times.push(k as f64 * dt);
            states.push(DensityMeasure::new(g, rho.clone())?);
        }
    }
    if let Some(last) = states.last() {
        last.warn_boundary("evolve_fv");
    }
    Ok(FvRun {
        path: MeasurePath::new(times, states)?,
        free_energy: energies,
        max_mass_change,
        steps,
        dt,
    })
}
