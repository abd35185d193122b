//! Minimizing movements `rho_{k+1} = argmin F(rho) + W2^2(rho, rho_k) / 2 tau`.
//!
//! In one dimension `W2^2` is the squared Euclidean distance between quantile
//! vectors, so each step is solved over `m` monotone quantiles `X` with the
//! chart objective
//!
//! ```text
//! G(X) = -(1/m) sum_i log(m (X_{i+1} - X_i))
//!        + (1/m) sum_i psi(X_i)
//!        + (1/2 tau) (1/m) sum_i (X_i - X0_i)^2.
//! ```
//!
//! The first term is the internal energy `integral of rho log rho` of the
//! density that is uniform with mass `1/m` on each gap. It is convex in the
//! gaps and acts as a barrier keeping the iterate strictly increasing. The
//! Hessian is tridiagonal, so Newton steps cost `O(m)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::solve_tridiagonal;
use crate::measures::{from_quantile, to_quantile_smooth, DensityMeasure, QuantileMeasure};
use crate::potentials::Potential;
use crate::transport::MeasurePath;

/// Inner solver settings.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct JkoOptions {
    /// Stop when `m |grad G|_inf <= tol (1 + |G|)`.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for JkoOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iters: 500,
        }
    }
}

/// Diagnostics of one minimizing-movement step.
#[derive(Debug, Clone, Serialize)]
pub struct JkoStepReport {
    /// `G` at the warm start and at the minimizer.
    pub objective_start: f64,
    pub objective: f64,
    /// Chart free energy of the minimizer.
    pub free_energy: f64,
    /// `W2` between the two chart vectors.
    pub w2_step: f64,
    /// `m |grad G|_inf` at exit.
    pub grad_norm: f64,
    pub iters: usize,
    /// False when the iteration cap was hit.
    pub converged: bool,
}

/// Free energy of a quantile vector under the piecewise-uniform
/// reconstruction; `+inf` if two quantiles coincide.
pub fn chart_free_energy(x: &[f64], psi: &Potential) -> f64 {
    let m = x.len() as f64;
    let mut s = 0.0;
    for w in x.windows(2) {
        let g = w[1] - w[0];
        if !(g > 0.0) {
            return f64::INFINITY;
        }
        s -= (m * g).ln();
    }
    let e: f64 = x.iter().map(|&v| psi.value(v)).sum();
    (s + e) / m
}

/// `m dF/dX_i` for the chart free energy: the Lagrangian velocity
/// `(log rho)' + psi'` at each quantile.
pub(crate) fn chart_velocity(x: &[f64], psi: &Potential) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| {
            let mut v = psi.grad(x[i]);
            if i + 1 < n {
                v += 1.0 / (x[i + 1] - x[i]);
            }
            if i > 0 {
                v -= 1.0 / (x[i] - x[i - 1]);
            }
            v
        })
        .collect()
}

/// Euclidean projection onto nondecreasing vectors (pool adjacent violators).
pub fn isotonic_projection(y: &[f64]) -> Vec<f64> {
    // blocks of (mean, weight)
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(y.len());
    for &v in y {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (b, wb) = blocks[blocks.len() - 1];
            let (a, wa) = blocks[blocks.len() - 2];
            if a <= b {
                break;
            }
            blocks.pop();
            let w = wa + wb;
            *blocks.last_mut().expect("two blocks") = ((a * wa as f64 + b * wb as f64) / w as f64, w);
        }
    }
    blocks
        .into_iter()
        .flat_map(|(v, w)| std::iter::repeat_n(v, w))
        .collect()
}

struct Problem<'a> {
    x0: &'a [f64],
    psi: &'a Potential,
    tau: f64,
}

impl Problem<'_> {
    fn objective(&self, x: &[f64]) -> f64 {
        let m = x.len() as f64;
        let pen: f64 = x.iter().zip(self.x0).map(|(a, b)| (a - b).powi(2)).sum();
        chart_free_energy(x, self.psi) + pen / (2.0 * self.tau * m)
    }

    /// `m grad G`.
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        chart_velocity(x, self.psi)
            .into_iter()
            .zip(x.iter().zip(self.x0))
            .map(|(v, (a, b))| v + (a - b) / self.tau)
            .collect()
    }

    /// Newton direction from the tridiagonal `m Hess G`; negative curvature
    /// of `psi` is clipped so the system stays positive definite.
    fn newton_direction(&self, x: &[f64], grad: &[f64]) -> Option<Vec<f64>> {
        let n = x.len();
        let inv_g2: Vec<f64> = x.windows(2).map(|w| (w[1] - w[0]).powi(-2)).collect();
        let mut diag: Vec<f64> = x.iter().map(|&v| self.psi.hess(v).max(0.0) + 1.0 / self.tau).collect();
        for (i, &c) in inv_g2.iter().enumerate() {
            diag[i] += c;
            diag[i + 1] += c;
        }
        let off: Vec<f64> = inv_g2.iter().map(|c| -c).collect();
        let rhs: Vec<f64> = grad.iter().map(|g| -g).collect();
        let d = solve_tridiagonal(&off, &diag, &off, &rhs)?;
        debug_assert_eq!(d.len(), n);
        d.iter().all(|v| v.is_finite()).then_some(d)
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, b| a.max(b.abs()))
}

/// One step in the quantile chart, warm-started at `x0`.
pub fn jko_step_chart(
    x0: &QuantileMeasure,
    psi: &Potential,
    tau: f64,
    opts: &JkoOptions,
) -> Result<(QuantileMeasure, JkoStepReport)> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::param("tau", format!("must be positive, got {tau}")));
    }
    let p = Problem {
        x0: x0.values(),
        psi,
        tau,
    };
    let mut x = x0.values().to_vec();
    let mut g_val = p.objective(&x);
    if !g_val.is_finite() {
        return Err(Error::Precondition(
            "starting quantiles have a zero gap; the free energy is infinite".into(),
        ));
    }
    let start = g_val;
    let mut grad = p.gradient(&x);
    let mut iters = 0;
    let mut converged = false;
    while iters < opts.max_iters {
        let gn = inf_norm(&grad);
        if gn <= opts.tol * (1.0 + g_val.abs()) {
            converged = true;
            break;
        }
        iters += 1;
        let mut d = p
            .newton_direction(&x, &grad)
            .unwrap_or_else(|| grad.iter().map(|g| -tau * g).collect());
        let mut slope: f64 = grad.iter().zip(&d).map(|(a, b)| a * b).sum();
        if !(slope < 0.0) {
            d = grad.iter().map(|g| -tau * g).collect();
            slope = grad.iter().zip(&d).map(|(a, b)| a * b).sum();
        }
        let m = x.len() as f64;
        let mut alpha = 1.0;
        let mut accepted = None;
        while alpha > 1e-14 {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + alpha * b).collect();
            let trial = if trial.windows(2).all(|w| w[1] >= w[0]) {
                trial
            } else {
                isotonic_projection(&trial)
            };
            let val = p.objective(&trial);
            if val.is_finite() {
                if val <= g_val + 1e-4 * alpha * slope / m {
                    accepted = Some((trial, val));
                    break;
                }
                // predicted decrease below the rounding level of G: judge the
                // step by the gradient instead
                if -slope / m <= 1e-13 * (1.0 + g_val.abs()) && inf_norm(&p.gradient(&trial)) < gn {
                    accepted = Some((trial, val.min(g_val)));
                    break;
                }
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((trial, val)) => {
                x = trial;
                g_val = val;
                grad = p.gradient(&x);
            }
            None => {
                // stuck at roundoff level: accept when close to stationary
                if gn <= 1e-5 * (1.0 + g_val.abs()) {
                    log::debug!("jko: line search stalled at gradient {gn:e}; accepting");
                    converged = true;
                    break;
                }
                return Err(Error::LineSearch {
                    iterations: iters,
                    objective: g_val,
                    grad_norm: gn,
                });
            }
        }
    }
    if let Some(i) = x.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::NotMonotone { index: i });
    }
    if !converged {
        log::warn!(
            "jko: stopped after {} iterations with gradient {:e}",
            opts.max_iters,
            inf_norm(&grad)
        );
    }
    let q = QuantileMeasure::new(x)?;
    let report = JkoStepReport {
        objective_start: start,
        objective: g_val,
        free_energy: chart_free_energy(q.values(), psi),
        w2_step: q.w2_sq(x0)?.sqrt(),
        grad_norm: inf_norm(&grad),
        iters,
        converged,
    };
    Ok((q, report))
}

fn check_m(m: usize) -> Result<()> {
    if m < 8 {
        return Err(Error::param("m", format!("need at least 8 quantiles, got {m}")));
    }
    Ok(())
}

/// One minimizing-movement step from `rho0` with `m` quantiles, returned as a
/// density on the grid of `rho0`.
pub fn jko_step(rho0: &DensityMeasure, psi: &Potential, tau: f64, m: usize) -> Result<DensityMeasure> {
    check_m(m)?;
    let x0 = to_quantile_smooth(rho0, m)?;
    let (x, _) = jko_step_chart(&x0, psi, tau, &JkoOptions::default())?;
    from_quantile(&x, rho0.grid())
}

/// A minimizing-movement run with per-step diagnostics.
#[derive(Debug, Clone)]
pub struct JkoRun {
    /// Iterates at `t = k tau`, with their quantile chart attached.
    pub path: MeasurePath,
    /// One report per step.
    pub reports: Vec<JkoStepReport>,
    /// Chart free energy of the initial quantiles.
    pub initial_free_energy: f64,
}

impl JkoRun {
    /// Chart free energy at every iterate, starting with the initial one.
    pub fn free_energies(&self) -> Vec<f64> {
        std::iter::once(self.initial_free_energy)
            .chain(self.reports.iter().map(|r| r.free_energy))
            .collect()
    }

    /// Largest increase of the chart free energy between iterates.
    pub fn worst_free_energy_increase(&self) -> f64 {
        self.free_energies()
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `steps` minimizing movements from `rho0`.
pub fn jko_flow(
    rho0: &DensityMeasure,
    psi: &Potential,
    tau: f64,
    steps: usize,
    m: usize,
) -> Result<MeasurePath> {
    Ok(jko_flow_with(rho0, psi, tau, steps, m, &JkoOptions::default())?.path)
}

/// [`jko_flow`] with solver options and diagnostics.
pub fn jko_flow_with(
    rho0: &DensityMeasure,
    psi: &Potential,
    tau: f64,
    steps: usize,
    m: usize,
    opts: &JkoOptions,
) -> Result<JkoRun> {
    check_m(m)?;
    if steps == 0 {
        return Err(Error::param("steps", "need at least one step"));
    }
    let grid = rho0.grid();
    let mut q = to_quantile_smooth(rho0, m)?;
    let initial_free_energy = chart_free_energy(q.values(), psi);
    let mut charts = vec![q.clone()];
    let mut states = vec![rho0.clone()];
    let mut reports = Vec::with_capacity(steps);
    for k in 1..=steps {
        let (next, report) = jko_step_chart(&q, psi, tau, opts)?;
        log::debug!(
            "jko step {k}: F = {:.12}, W2 = {:.3e}, {} iterations",
            report.free_energy,
            report.w2_step,
            report.iters
        );
        states.push(from_quantile(&next, grid)?);
        charts.push(next.clone());
        reports.push(report);
        q = next;
    }
    let times = (0..=steps).map(|k| k as f64 * tau).collect();
    Ok(JkoRun {
        path: MeasurePath::new(times, states)?.with_quantiles(charts)?,
        reports,
        initial_free_energy,
    })
}
