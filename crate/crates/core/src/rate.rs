//! Two evaluators of the large-deviation rate `J_tau(rho1 | rho0)` of the
//! empirical measure at time `tau`, and the small-`tau` sweep.
//!
//! Static form, an entropic transport (Schrodinger bridge) problem:
//!
//! ```text
//! J_tau(rho1 | rho0) = inf { H(gamma | rho0 (x) p_tau) : gamma in Pi(rho0, rho1) }
//! ```
//!
//! solved by log-domain iterative proportional fitting on the grid.
//!
//! Dynamic form, over curves from `rho0` to `rho1` on `[0, 1]`:
//!
//! ```text
//! J_tau = inf (1/4tau) int ||d rho||^2_{-1} + (tau/4) int ||grad F||^2_{-1}
//!         + F(rho1)/2 - F(rho0)/2,
//! ```
//!
//! the expansion of `(1/4tau) int ||d rho - tau (rho'' + (rho psi')')||^2_{-1}`.
//! Curves are discretized by `K + 1` quantile vectors of length `m`: with
//! `u = dX/dt` and `v = (log rho)' + psi'` at the quantiles, the kinetic term
//! is `(1/m) sum u^2` and the Fisher term `(1/m) sum v^2`. The discrete action
//! is a sum of squares, minimized by Levenberg-Marquardt on the whole path
//! (the normal matrix is banded when unknowns are ordered quantile-major).
//!
//! As `tau -> 0`, `J_tau - W2^2/4tau -> F(rho1)/2 - F(rho0)/2`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fokker_planck::Kernel;
use crate::grid::Grid;
use crate::linalg::SymBanded;
use crate::measures::{
    fisher_information_report, free_energy, from_quantile, to_quantile_smooth, DensityMeasure,
    QuantileMeasure, DENSITY_FLOOR,
};
use crate::potentials::Potential;
use crate::transport::{w2_sq, MeasurePath, DEFAULT_CHART};

/// Discrete transport plan; `mass[i * n + j]` is the joint mass of the cell
/// pair `(x_i, x_j)`, so the joint density is `mass / h^2`.
#[derive(Debug, Clone)]
pub struct Coupling {
    grid: Grid,
    mass: Vec<f64>,
}

impl Coupling {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn mass(&self, i: usize, j: usize) -> f64 {
        self.mass[i * self.grid.len() + j]
    }

    pub fn density(&self, i: usize, j: usize) -> f64 {
        self.mass(i, j) / self.grid.spacing().powi(2)
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// First marginal as a density.
    pub fn first_marginal(&self) -> Vec<f64> {
        let n = self.grid.len();
        let h = self.grid.spacing();
        self.mass.chunks(n).map(|row| row.iter().sum::<f64>() / h).collect()
    }

    /// Second marginal as a density.
    pub fn second_marginal(&self) -> Vec<f64> {
        let n = self.grid.len();
        let h = self.grid.spacing();
        let mut col = vec![0.0; n];
        for row in self.mass.chunks(n) {
            for (c, v) in col.iter_mut().zip(row) {
                *c += v;
            }
        }
        col.iter().map(|c| c / h).collect()
    }

    /// L1 errors of the two marginals against `rho0` and `rho1`.
    pub fn marginal_errors(&self, rho0: &DensityMeasure, rho1: &DensityMeasure) -> (f64, f64) {
        let h = self.grid.spacing();
        let l1 = |a: &[f64], b: &[f64]| h * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>();
        (
            l1(&self.first_marginal(), rho0.values()),
            l1(&self.second_marginal(), rho1.values()),
        )
    }
}

/// Which evaluator produced a [`RateReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Static,
    Dynamic,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Static => "static",
            Method::Dynamic => "dynamic",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "static" => Ok(Method::Static),
            "dynamic" => Ok(Method::Dynamic),
            other => Err(Error::Parse(format!("unknown method `{other}` (static|dynamic)"))),
        }
    }
}

/// Value of `J_tau` with its decomposition and the two limit gaps.
#[derive(Debug, Clone, Serialize)]
pub struct RateReport {
    pub tau: f64,
    pub method: Method,
    /// The value from `method`.
    pub j: f64,
    pub j_static: Option<f64>,
    pub j_dynamic: Option<f64>,
    /// `(1/4tau) int ||d rho||^2` on the optimized path.
    pub action_term: Option<f64>,
    /// `(tau/4) int ||grad F||^2` on the optimized path.
    pub fisher_term: Option<f64>,
    /// `(1/4tau) int ||d rho - tau (rho'' + (rho psi')')||^2` on the same
    /// path, evaluated without expanding the square.
    pub unexpanded: Option<f64>,
    /// `F(rho1)/2 - F(rho0)/2` from the exact inputs.
    pub delta_f: f64,
    pub w2_sq: f64,
    /// `J - W2^2/4tau - delta_f`.
    pub gamma_gap: f64,
    /// `tau J - W2^2/4`.
    pub first_order_gap: f64,
    /// IPF sweeps or Levenberg-Marquardt iterations.
    pub iters: usize,
    /// Larger of the two marginal L1 errors (static only).
    pub marginal_err: Option<f64>,
}

impl RateReport {
    /// `W2^2/4tau + delta_f`, the small-`tau` lower bound.
    pub fn lower_bound(&self) -> f64 {
        self.w2_sq / (4.0 * self.tau) + self.delta_f
    }

    fn new(tau: f64, method: Method, j: f64, w2_sq: f64, delta_f: f64, iters: usize) -> Self {
        Self {
            tau,
            method,
            j,
            j_static: (method == Method::Static).then_some(j),
            j_dynamic: (method == Method::Dynamic).then_some(j),
            action_term: None,
            fisher_term: None,
            unexpanded: None,
            delta_f,
            w2_sq,
            gamma_gap: j - w2_sq / (4.0 * tau) - delta_f,
            first_order_gap: tau * j - w2_sq / 4.0,
            iters,
            marginal_err: None,
        }
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::param("tau", format!("must be positive, got {tau}")));
    }
    Ok(())
}

/// Settings of the static solver.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StaticOptions {
    /// Target L1 error of both marginals.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for StaticOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_sweeps: 100_000,
        }
    }
}

/// Output of [`j_static_with`].
#[derive(Debug, Clone)]
pub struct StaticSolution {
    pub value: f64,
    pub coupling: Coupling,
    pub sweeps: usize,
    pub marginal_err: f64,
}

fn log_sum_exp(it: impl Iterator<Item = f64> + Clone) -> f64 {
    let mx = it.clone().fold(f64::NEG_INFINITY, f64::max);
    if mx == f64::NEG_INFINITY {
        return mx;
    }
    mx + it.map(|v| (v - mx).exp()).sum::<f64>().ln()
}

/// Grid spacing the kernel at time `tau` needs: `h <= sqrt(4 tau) / 4`.
pub fn check_kernel_resolution(grid: &Grid, tau: f64) -> Result<()> {
    let limit = (4.0 * tau).sqrt() / 4.0;
    let h = grid.spacing();
    if h > limit {
        return Err(Error::SmallTau {
            h,
            limit,
            required_n: (grid.range() / limit).ceil() as usize,
        });
    }
    Ok(())
}

/// Static rate with a marginal tolerance `tol`; returns `J` and the optimal
/// coupling.
pub fn j_static(
    rho0: &DensityMeasure,
    rho1: &DensityMeasure,
    kernel: &Kernel,
    tau: f64,
    tol: f64,
) -> Result<(f64, Coupling)> {
    let opts = StaticOptions {
        tol,
        ..StaticOptions::default()
    };
    let s = j_static_with(rho0, rho1, kernel, tau, &opts)?;
    Ok((s.value, s.coupling))
}

/// Log-domain iterative proportional fitting against the reference
/// `R_ij = rho0_i h P_ij`, where `P_ij` is the kernel sampled at the cell
/// centers and normalized over `j`.
pub fn j_static_with(
    rho0: &DensityMeasure,
    rho1: &DensityMeasure,
    kernel: &Kernel,
    tau: f64,
    opts: &StaticOptions,
) -> Result<StaticSolution> {
    check_tau(tau)?;
    if !(opts.tol > 0.0) {
        return Err(Error::param("tol", "must be positive"));
    }
    let grid = *rho0.grid();
    grid.ensure_same(rho1.grid())?;
    check_kernel_resolution(&grid, tau)?;
    let n = grid.len();
    let h = grid.spacing();

    let a: Vec<f64> = rho0.values().iter().map(|r| r * h).collect();
    let b: Vec<f64> = rho1.values().iter().map(|r| r * h).collect();
    let rows: Vec<usize> = (0..n).filter(|&i| a[i] > 0.0).collect();
    let cols: Vec<usize> = (0..n).filter(|&j| b[j] > 0.0).collect();
    let log_p = kernel.log_transition_matrix(&grid, tau)?;

    // reference restricted to the active block, rows normalized over all j
    let mut log_r: Vec<f64> = Vec::with_capacity(rows.len() * cols.len());
    for &i in &rows {
        let norm = log_sum_exp(log_p[i].iter().copied());
        if norm == f64::NEG_INFINITY {
            return Err(Error::InfeasibleSupport { x: grid.center(i) });
        }
        let la = a[i].ln();
        log_r.extend(cols.iter().map(|&j| la + log_p[i][j] - norm));
    }
    let (nr, nc) = (rows.len(), cols.len());
    let log_rt: Vec<f64> = (0..nc)
        .flat_map(|c| (0..nr).map(move |r| (r, c)))
        .map(|(r, c)| log_r[r * nc + c])
        .collect();
    let floor = 1e-300f64.ln();
    for (c, &j) in cols.iter().enumerate() {
        if log_sum_exp(log_rt[c * nr..(c + 1) * nr].iter().copied()) < floor {
            return Err(Error::InfeasibleSupport { x: grid.center(j) });
        }
    }

    let la: Vec<f64> = rows.iter().map(|&i| a[i].ln()).collect();
    let lb: Vec<f64> = cols.iter().map(|&j| b[j].ln()).collect();
    let mut f = vec![0.0; nr];
    let mut g = vec![0.0; nc];
    let mut sweeps = 0;
    let mut err = f64::INFINITY;
    while sweeps < opts.max_sweeps {
        sweeps += 1;
        f = (0..nr)
            .into_par_iter()
            .map(|r| {
                let row = &log_r[r * nc..(r + 1) * nc];
                la[r] - log_sum_exp(row.iter().zip(&g).map(|(l, gj)| l + gj))
            })
            .collect();
        let col_lse: Vec<f64> = (0..nc)
            .into_par_iter()
            .map(|c| {
                let col = &log_rt[c * nr..(c + 1) * nr];
                log_sum_exp(col.iter().zip(&f).map(|(l, fi)| l + fi))
            })
            .collect();
        err = (0..nc).map(|c| ((col_lse[c] + g[c]).exp() - b[cols[c]]).abs()).sum();
        if err <= opts.tol {
            break;
        }
        for c in 0..nc {
            g[c] = lb[c] - col_lse[c];
        }
    }
    if !(err <= opts.tol) {
        return Err(Error::NotConverged {
            solver: "iterative proportional fitting",
            iterations: sweeps,
            residual: err,
        });
    }

    let mut mass = vec![0.0; n * n];
    let mut terms = Vec::with_capacity(nr * nc);
    let mut total = 0.0;
    for (r, &i) in rows.iter().enumerate() {
        for (c, &j) in cols.iter().enumerate() {
            let lg = log_r[r * nc + c] + f[r] + g[c];
            let gm = lg.exp();
            mass[i * n + j] = gm;
            total += gm;
            terms.push(gm * (f[r] + g[c]));
        }
    }
    // generalized relative entropy; the full reference has unit mass
    let value = crate::measures::pairwise_sum(&terms) - total + a.iter().sum::<f64>();
    Ok(StaticSolution {
        value: value.max(0.0),
        coupling: Coupling { grid, mass },
        sweeps,
        marginal_err: err,
    })
}

/// Static rate with its decomposition into the limit gaps.
pub fn static_report(
    rho0: &DensityMeasure,
    rho1: &DensityMeasure,
    kernel: &Kernel,
    tau: f64,
    opts: &StaticOptions,
) -> Result<RateReport> {
    let s = j_static_with(rho0, rho1, kernel, tau, opts)?;
    let psi = kernel.potential();
    let delta_f = 0.5 * (free_energy(rho1, &psi) - free_energy(rho0, &psi));
    let mut r = RateReport::new(
        tau,
        Method::Static,
        s.value,
        w2_sq(rho0, rho1, DEFAULT_CHART)?,
        delta_f,
        s.sweeps,
    );
    r.marginal_err = Some(s.marginal_err);
    Ok(r)
}

/// Settings of the dynamic solver.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DynamicOptions {
    /// Stop when an undamped step lowers the action by less than this
    /// relative amount.
    pub rel_tol: f64,
    pub max_iters: usize,
}

impl Default for DynamicOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-7,
            max_iters: 300,
        }
    }
}

/// Output of [`j_dynamic_with`].
#[derive(Debug, Clone)]
pub struct DynamicSolution {
    pub report: RateReport,
    /// Optimized path at `t = k/K` with its quantile chart.
    pub path: MeasurePath,
}

/// Rejects endpoints whose Fisher information is infinite: either most mass
/// sits below the density floor or the density jumps to zero.
fn check_endpoint(rho: &DensityMeasure, which: &'static str) -> Result<()> {
    let rep = fisher_information_report(rho);
    if !rep.value.is_finite() || !rep.reliable {
        return Err(Error::InfiniteFisher { which });
    }
    let v = rho.values();
    let peak = v.iter().copied().fold(0.0, f64::max);
    let jump = v
        .windows(2)
        .any(|w| (w[0] < DENSITY_FLOOR && w[1] > 1e-3 * peak) || (w[1] < DENSITY_FLOOR && w[0] > 1e-3 * peak));
    if jump {
        return Err(Error::InfiniteFisher { which });
    }
    Ok(())
}

/// Lagrangian velocity `(log rho)' + psi'` at each quantile. The two end
/// quantiles reuse the gap difference of their inner neighbor, since a
/// one-sided difference there overstates `(log rho)'` by about `|x| / 2`.
fn path_velocity(x: &[f64], psi: &Potential) -> Vec<f64> {
    let n = x.len();
    let inv: Vec<f64> = x.windows(2).map(|w| 1.0 / (w[1] - w[0])).collect();
    (0..n)
        .map(|i| {
            let c = i.clamp(1, n - 2);
            inv[c] - inv[c - 1] + psi.grad(x[i])
        })
        .collect()
}

/// Nonzero entries `(j, dv_i/dX_j)` of row `i` of the velocity Jacobian,
/// sorted by `j`.
fn velocity_row(x: &[f64], psi: &Potential, i: usize) -> [(usize, f64); 3] {
    let n = x.len();
    let c = i.clamp(1, n - 2);
    let a = (x[c] - x[c - 1]).powi(-2);
    let b = (x[c + 1] - x[c]).powi(-2);
    let mut row = [(c - 1, -a), (c, a + b), (c + 1, -b)];
    row[i + 1 - c].1 += psi.hess(x[i]);
    row
}

struct PathProblem<'a> {
    x0: &'a [f64],
    x1: &'a [f64],
    psi: &'a Potential,
    tau: f64,
    k: usize,
    m: usize,
}

impl PathProblem<'_> {
    fn dt(&self) -> f64 {
        1.0 / self.k as f64
    }

    /// Unknowns are ordered quantile-major: `z[i (K-1) + (k-1)]`.
    fn idx(&self, i: usize, k: usize) -> usize {
        i * (self.k - 1) + (k - 1)
    }

    fn slices(&self, z: &[f64]) -> Vec<Vec<f64>> {
        let mut s = Vec::with_capacity(self.k + 1);
        s.push(self.x0.to_vec());
        for k in 1..self.k {
            s.push((0..self.m).map(|i| z[self.idx(i, k)]).collect());
        }
        s.push(self.x1.to_vec());
        s
    }

    fn pack(&self, slices: &[Vec<f64>]) -> Vec<f64> {
        let mut z = vec![0.0; self.m * (self.k - 1)];
        for (k, s) in slices.iter().enumerate().take(self.k).skip(1) {
            for (i, &v) in s.iter().enumerate() {
                z[self.idx(i, k)] = v;
            }
        }
        z
    }

    /// `(action_term, fisher_term)`, or `None` off the monotone cone.
    fn terms(&self, slices: &[Vec<f64>]) -> Option<(f64, f64)> {
        if slices.iter().any(|s| s.windows(2).any(|w| !(w[1] > w[0]))) {
            return None;
        }
        let (m, dt, tau) = (self.m as f64, self.dt(), self.tau);
        let kin: f64 = slices
            .windows(2)
            .map(|w| w[1].iter().zip(&w[0]).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
            .sum::<f64>()
            / (4.0 * tau * dt * m);
        let fis: f64 = slices
            .iter()
            .enumerate()
            .map(|(k, s)| {
                let w = if k == 0 || k == self.k { 0.5 } else { 1.0 };
                w * path_velocity(s, self.psi).iter().map(|v| v * v).sum::<f64>()
            })
            .sum::<f64>()
            * tau
            * dt
            / (4.0 * m);
        Some((kin, fis))
    }

    /// `(1/4tau) sum_k dt (1/m) sum_i (u_i + tau v_i)^2` with `v` at the
    /// interval midpoints.
    fn unexpanded(&self, slices: &[Vec<f64>]) -> f64 {
        let (m, dt, tau) = (self.m as f64, self.dt(), self.tau);
        slices
            .windows(2)
            .map(|w| {
                let mid: Vec<f64> = w[0].iter().zip(&w[1]).map(|(a, b)| 0.5 * (a + b)).collect();
                let v = path_velocity(&mid, self.psi);
                (0..self.m)
                    .map(|i| ((w[1][i] - w[0][i]) / dt + tau * v[i]).powi(2))
                    .sum::<f64>()
                    * dt
            })
            .sum::<f64>()
            / (4.0 * tau * m)
    }

    /// Normal matrix `J^T J` and `J^T r` of the residual form of the action.
    fn normal_equations(&self, slices: &[Vec<f64>]) -> (SymBanded, Vec<f64>) {
        let (m, dt, tau) = (self.m as f64, self.dt(), self.tau);
        let nk = self.k - 1;
        let mut h = SymBanded::zeros(self.m * nk, 2 * nk);
        let mut grad = vec![0.0; self.m * nk];
        let c2 = 1.0 / (4.0 * tau * dt * m);
        for k in 0..self.k {
            for i in 0..self.m {
                let diff = slices[k + 1][i] - slices[k][i];
                let lo = (k >= 1).then(|| self.idx(i, k));
                let hi = (k < nk).then(|| self.idx(i, k + 1));
                if let Some(a) = lo {
                    grad[a] -= c2 * diff;
                    h.add(a, a, c2);
                }
                if let Some(b) = hi {
                    grad[b] += c2 * diff;
                    h.add(b, b, c2);
                }
                if let (Some(a), Some(b)) = (lo, hi) {
                    h.add(a, b, -c2);
                }
            }
        }
        let d2 = tau * dt / (4.0 * m);
        for (k, s) in slices.iter().enumerate().take(self.k).skip(1) {
            let v = path_velocity(s, self.psi);
            for i in 0..self.m {
                let row = velocity_row(s, self.psi, i);
                for (p, &(j, ej)) in row.iter().enumerate() {
                    let a = self.idx(j, k);
                    grad[a] += d2 * v[i] * ej;
                    for &(l, el) in &row[p..] {
                        h.add(a, self.idx(l, k), d2 * ej * el);
                    }
                }
            }
        }
        (h, grad)
    }
}

/// Dynamic rate on a `(K + 1) x m` quantile path, returning the report.
pub fn j_dynamic(
    rho0: &DensityMeasure,
    rho1: &DensityMeasure,
    psi: &Potential,
    tau: f64,
    k: usize,
    m: usize,
) -> Result<RateReport> {
    Ok(j_dynamic_with(rho0, rho1, psi, tau, k, m, &DynamicOptions::default())?.report)
}

/// [`j_dynamic`] with solver options, also returning the optimized path.
pub fn j_dynamic_with(
    rho0: &DensityMeasure,
    rho1: &DensityMeasure,
    psi: &Potential,
    tau: f64,
    k: usize,
    m: usize,
    opts: &DynamicOptions,
) -> Result<DynamicSolution> {
    check_tau(tau)?;
    if k < 2 {
        return Err(Error::param("K", format!("need at least 2 intervals, got {k}")));
    }
    if m < 8 {
        return Err(Error::param("m", format!("need at least 8 quantiles, got {m}")));
    }
    rho0.grid().ensure_same(rho1.grid())?;
    let f0 = free_energy(rho0, psi);
    let f1 = free_energy(rho1, psi);
    if !f0.is_finite() || !f1.is_finite() {
        return Err(Error::Precondition("free energy of an endpoint is not finite".into()));
    }
    check_endpoint(rho0, "rho0")?;
    check_endpoint(rho1, "rho1")?;

    let q0 = to_quantile_smooth(rho0, m)?;
    let q1 = to_quantile_smooth(rho1, m)?;
    let p = PathProblem {
        x0: q0.values(),
        x1: q1.values(),
        psi,
        tau,
        k,
        m,
    };
    let init: Vec<Vec<f64>> = (0..=k)
        .map(|j| {
            let t = j as f64 / k as f64;
            q0.values().iter().zip(q1.values()).map(|(a, b)| (1.0 - t) * a + t * b).collect()
        })
        .collect();
    let mut z = p.pack(&init);
    let mut slices = init;
    let (mut kin, mut fis) = p.terms(&slices).ok_or(Error::NotMonotone { index: 0 })?;
    let mut phi = kin + fis;
    let mut mu = 1e-6;
    let mut iters = 0;
    let mut converged = false;
    while iters < opts.max_iters {
        iters += 1;
        let (normal, grad) = p.normal_equations(&slices);
        let mut accepted = false;
        while mu < 1e12 {
            let mut a = normal.clone();
            let diag: Vec<f64> = a.diagonal().to_vec();
            for (i, d) in diag.iter().enumerate() {
                a.add(i, i, mu * d + 1e-300);
            }
            let rhs: Vec<f64> = grad.iter().map(|g| -g).collect();
            if let Some(step) = a.solve(&rhs) {
                let trial: Vec<f64> = z.iter().zip(&step).map(|(a, b)| a + b).collect();
                let trial_slices = p.slices(&trial);
                if let Some((tk, tf)) = p.terms(&trial_slices) {
                    let val = tk + tf;
                    if val < phi {
                        let rel = (phi - val) / val.abs().max(f64::MIN_POSITIVE);
                        let undamped = mu <= 1e-3;
                        z = trial;
                        slices = trial_slices;
                        (kin, fis, phi) = (tk, tf, val);
                        mu = (mu / 3.0).max(1e-9);
                        accepted = true;
                        if rel < opts.rel_tol && undamped {
                            converged = true;
                        }
                        break;
                    }
                }
            }
            mu *= 4.0;
        }
        if !accepted {
            // no damping level lowers the action: stationary up to roundoff
            converged = true;
        }
        if converged {
            break;
        }
    }
    if !converged {
        return Err(Error::NotConverged {
            solver: "path action minimization",
            iterations: iters,
            residual: phi,
        });
    }

    let delta_f = 0.5 * (f1 - f0);
    let j = kin + fis + delta_f;
    let mut report = RateReport::new(tau, Method::Dynamic, j, w2_sq(rho0, rho1, DEFAULT_CHART)?, delta_f, iters);
    report.action_term = Some(kin);
    report.fisher_term = Some(fis);
    report.unexpanded = Some(p.unexpanded(&slices));

    let grid = rho0.grid();
    let charts = slices
        .into_iter()
        .map(QuantileMeasure::new)
        .collect::<Result<Vec<_>>>()?;
    let mut states = vec![rho0.clone()];
    for c in &charts[1..k] {
        states.push(from_quantile(c, grid)?);
    }
    states.push(rho1.clone());
    let times = (0..=k).map(|j| j as f64 / k as f64).collect();
    let path = MeasurePath::new(times, states)?.with_quantiles(charts)?;
    Ok(DynamicSolution { report, path })
}

/// Settings of [`gamma_sweep_with`].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SweepOptions {
    /// Time intervals of the dynamic path.
    pub k: usize,
    /// Quantiles per state of the dynamic path.
    pub m: usize,
    pub static_opts: StaticOptions,
    pub dynamic_opts: DynamicOptions,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            k: 16,
            m: 400,
            static_opts: StaticOptions::default(),
            dynamic_opts: DynamicOptions::default(),
        }
    }
}

/// Reports along a decreasing `tau` sequence with the extrapolated limits of
/// both gaps.
#[derive(Debug, Clone, Serialize)]
pub struct GammaSweep {
    pub reports: Vec<RateReport>,
    /// `lim_{tau -> 0}` of `gamma_gap`, linear extrapolation through the two
    /// smallest `tau`.
    pub gamma_gap_limit: f64,
    pub first_order_gap_limit: f64,
}

/// Linear extrapolation to `tau = 0` through the last two samples.
pub fn richardson_limit(taus: &[f64], values: &[f64]) -> f64 {
    let n = taus.len();
    if n < 2 {
        return values.last().copied().unwrap_or(f64::NAN);
    }
    let (t1, t2) = (taus[n - 2], taus[n - 1]);
    let (v1, v2) = (values[n - 2], values[n - 1]);
    v2 - t2 * (v1 - v2) / (t1 - t2)
}

/// `J_tau` over `taus` (strictly decreasing) with default settings.
pub fn gamma_sweep(
    rho0: &DensityMeasure,
    rho1: &DensityMeasure,
    psi: &Potential,
    taus: &[f64],
    method: Method,
) -> Result<GammaSweep> {
    gamma_sweep_with(rho0, rho1, psi, taus, method, &SweepOptions::default())
}

/// [`gamma_sweep`] with explicit settings; distinct `tau` run in parallel.
pub fn gamma_sweep_with(
    rho0: &DensityMeasure,
    rho1: &DensityMeasure,
    psi: &Potential,
    taus: &[f64],
    method: Method,
    opts: &SweepOptions,
) -> Result<GammaSweep> {
    if taus.len() < 2 {
        return Err(Error::param("taus", "need at least two values"));
    }
    if taus.windows(2).any(|w| !(w[1] < w[0])) || taus.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::param("taus", "must be positive and strictly decreasing"));
    }
    for (r, which) in [(rho0, "rho0"), (rho1, "rho1")] {
        if !free_energy(r, psi).is_finite() || !crate::transport::drift_energy(r, psi).is_finite() {
            return Err(Error::Precondition(format!("{which}: free or drift energy is not finite")));
        }
        check_endpoint(r, which)?;
    }
    let kernel = Kernel::for_potential(psi, rho0.grid());
    let reports = taus
        .par_iter()
        .map(|&tau| match method {
            Method::Static => static_report(rho0, rho1, &kernel, tau, &opts.static_opts),
            Method::Dynamic => {
                Ok(j_dynamic_with(rho0, rho1, psi, tau, opts.k, opts.m, &opts.dynamic_opts)?.report)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let gaps: Vec<f64> = reports.iter().map(|r| r.gamma_gap).collect();
    let first: Vec<f64> = reports.iter().map(|r| r.first_order_gap).collect();
    Ok(GammaSweep {
        gamma_gap_limit: richardson_limit(taus, &gaps),
        first_order_gap_limit: richardson_limit(taus, &first),
        reports,
    })
}
