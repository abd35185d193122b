//! Euler-Maruyama ensembles of `dX = -psi'(X) dt + sqrt(2) dW`.
//!
//! Particles start at the `N` mid-quantiles of `rho0`, so the empirical
//! measure at time zero converges to `rho0` without sampling noise. Particle
//! `k` draws its increments from its own ChaCha stream `(seed, k)`, which
//! makes every run independent of thread scheduling.
//!
//! The law of large numbers says `W2(L_N(tau), rho0 * p_tau) -> 0`, at the
//! Monte-Carlo rate `N^{-1/2}` up to logarithms.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fokker_planck::{convolve_kernel, Kernel};
use crate::measures::{to_quantile, DensityMeasure, ParticleEnsemble};
use crate::potentials::Potential;

const SEEDS_PER_N: u64 = 5;

/// Ensemble at time `tau` from the `n` mid-quantiles of `rho0`.
pub fn simulate(
    rho0: &DensityMeasure,
    psi: &Potential,
    n: usize,
    tau: f64,
    dt: f64,
    seed: u64,
) -> Result<ParticleEnsemble> {
    if n < 10 {
        return Err(Error::param("N", format!("need at least 10 particles, got {n}")));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::param("tau", format!("must be positive, got {tau}")));
    }
    if !(dt > 0.0 && dt <= tau / 10.0) {
        return Err(Error::param("dt", format!("must lie in (0, tau/10], got {dt}")));
    }
    let steps = (tau / dt).ceil() as usize;
    let dt = tau / steps as f64;
    let noise = (2.0 * dt).sqrt();
    let g = rho0.grid();
    let c = 0.5 * (g.x_min() + g.x_max());
    let (lo, hi) = (c - 5.0 * g.range(), c + 5.0 * g.range());

    let start = to_quantile(rho0, n)?;
    let positions = start
        .values()
        .par_iter()
        .enumerate()
        .map(|(k, &x0)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let mut x = x0;
            for _ in 0..steps {
                let z: f64 = StandardNormal.sample(&mut rng);
                x += -psi.grad(x) * dt + noise * z;
                if !(lo..=hi).contains(&x) {
                    return Err(Error::ParticleEscape {
                        index: k,
                        lo,
                        hi,
                        potential: psi.to_string(),
                    });
                }
            }
            Ok(x)
        })
        .collect::<Result<Vec<f64>>>()?;
    ParticleEnsemble::new(positions)
}

/// `W2` between an ensemble and a density, with each particle's mass `1/N`
/// spread over the matching quantile levels of the density.
pub fn w2_empirical(ensemble: &ParticleEnsemble, rho: &DensityMeasure) -> Result<f64> {
    let x = ensemble.to_quantile();
    let n = x.len();
    let r = 16384usize.div_ceil(n).max(1);
    let q = to_quantile(rho, n * r)?;
    let sq: f64 = q
        .values()
        .iter()
        .enumerate()
        .map(|(j, &v)| (x.values()[j / r] - v).powi(2))
        .sum();
    Ok((sq / (n * r) as f64).sqrt())
}

/// Errors for one ensemble size.
#[derive(Debug, Clone, Serialize)]
pub struct LlnRow {
    pub n: usize,
    /// `(seed, W2 error)` per repetition.
    pub errors: Vec<(u64, f64)>,
    pub median: f64,
}

/// Law-of-large-numbers check over several ensemble sizes.
#[derive(Debug, Clone, Serialize)]
pub struct LlnReport {
    pub tau: f64,
    pub rows: Vec<LlnRow>,
    /// Least-squares slope of `log median` against `log N`.
    pub slope: f64,
}

impl LlnReport {
    /// True when the medians decrease strictly with `N`.
    pub fn decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].median < w[0].median)
    }

    /// `(N, median error)` pairs.
    pub fn medians(&self) -> Vec<(usize, f64)> {
        self.rows.iter().map(|r| (r.n, r.median)).collect()
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// For each `N`, the median over five seeds of `W2(L_N(tau), rho0 * p_tau)`,
/// with time step `tau / 50`.
pub fn lln_diagnostic(
    rho0: &DensityMeasure,
    psi: &Potential,
    kernel: &Kernel,
    tau: f64,
    ns: &[usize],
    seed: u64,
) -> Result<LlnReport> {
    if ns.len() < 2 {
        return Err(Error::param("Ns", "need at least two ensemble sizes"));
    }
    let reference = convolve_kernel(rho0, kernel, tau)?;
    let dt = tau / 50.0;
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let mut errors = Vec::with_capacity(SEEDS_PER_N as usize);
        for s in 0..SEEDS_PER_N {
            let ens = simulate(rho0, psi, n, tau, dt, seed + s)?;
            errors.push((seed + s, w2_empirical(&ens, &reference)?));
        }
        let mut e: Vec<f64> = errors.iter().map(|p| p.1).collect();
        rows.push(LlnRow {
            n,
            median: median(&mut e),
            errors,
        });
    }
    let lx: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let ly: Vec<f64> = rows.iter().map(|r| r.median.ln()).collect();
    Ok(LlnReport {
        tau,
        slope: fit_slope(&lx, &ly),
        rows,
    })
}

/// One row of the qualitative deviation probe.
#[derive(Debug, Clone, Serialize)]
pub struct DeviationRow {
    pub n: usize,
    pub trials: usize,
    pub hits: usize,
    /// `-(1/N) log(hits / trials)`; absent without hits.
    pub rate_estimate: Option<f64>,
}

/// Frequency of `|mean(L_N(tau)) - mean(rho0 * p_tau)| > delta` over `trials`
/// ensembles. Naive sampling only sees moderately rare events, so the
/// estimates are a qualitative illustration of exponential decay in `N`.
pub fn deviation_probe(
    rho0: &DensityMeasure,
    psi: &Potential,
    kernel: &Kernel,
    tau: f64,
    ns: &[usize],
    delta: f64,
    trials: usize,
    seed: u64,
) -> Result<Vec<DeviationRow>> {
    if !(delta > 0.0) {
        return Err(Error::param("delta", "must be positive"));
    }
    let target = convolve_kernel(rho0, kernel, tau)?.mean();
    ns.iter()
        .map(|&n| {
            let mut hits = 0;
            for t in 0..trials {
                let ens = simulate(rho0, psi, n, tau, tau / 20.0, seed.wrapping_add((t as u64) << 20))?;
                if (ens.mean() - target).abs() > delta {
                    hits += 1;
                }
            }
            Ok(DeviationRow {
                n,
                trials,
                hits,
                rate_estimate: (hits > 0).then(|| -((hits as f64) / trials as f64).ln() / n as f64),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn grid() -> Grid {
        Grid::symmetric(10.0, 1024).unwrap()
    }

    #[test]
    fn heat_moments() {
        let rho = DensityMeasure::gaussian(grid(), 0.5, 1.0).unwrap();
        let n = 20_000;
        let tau = 0.5;
        let e = simulate(&rho, &Potential::zero(), n, tau, 0.05, 7).unwrap();
        let var = 1.0 + 2.0 * tau;
        let se_mean = (2.0 * tau / n as f64).sqrt();
        assert!((e.mean() - 0.5).abs() < 4.0 * se_mean);
        let se_var = var * (2.0 / n as f64).sqrt();
        assert!((e.variance() - var).abs() < 4.0 * se_var);
    }

    #[test]
    fn ou_stationarity() {
        let rho = DensityMeasure::gaussian(grid(), 0.0, 1.0).unwrap();
        let n = 20_000;
        let e = simulate(&rho, &Potential::quadratic(1.0), n, 1.0, 0.01, 3).unwrap();
        // Euler-Maruyama shifts the stationary variance to 1/(1 - dt/2)
        let se = (2.0 / n as f64).sqrt();
        assert!((e.variance() - 1.0).abs() < 4.0 * se + 0.01);
    }

    #[test]
    fn seeds_are_reproducible() {
        let rho = DensityMeasure::gaussian(grid(), 0.0, 1.0).unwrap();
        let a = simulate(&rho, &Potential::zero(), 100, 0.2, 0.01, 11).unwrap();
        let b = simulate(&rho, &Potential::zero(), 100, 0.2, 0.01, 11).unwrap();
        let c = simulate(&rho, &Potential::zero(), 100, 0.2, 0.01, 12).unwrap();
        assert_eq!(a.positions(), b.positions());
        assert_ne!(a.positions(), c.positions());
    }

    #[test]
    fn preconditions() {
        let rho = DensityMeasure::gaussian(grid(), 0.0, 1.0).unwrap();
        assert!(simulate(&rho, &Potential::zero(), 5, 0.2, 0.01, 1).is_err());
        assert!(simulate(&rho, &Potential::zero(), 100, 0.2, 0.05, 1).is_err());
    }

    #[test]
    fn repulsive_drift_escapes() {
        let g = Grid::symmetric(2.0, 64).unwrap();
        let rho = DensityMeasure::gaussian(g, 0.0, 0.3).unwrap();
        let psi = Potential::quadratic(-20.0);
        assert!(matches!(
            simulate(&rho, &psi, 50, 2.0, 0.01, 1),
            Err(Error::ParticleEscape { .. })
        ));
    }

    #[test]
    fn error_shrinks_with_n() {
        let rho = DensityMeasure::gaussian(grid(), 0.0, 1.0).unwrap();
        let r = lln_diagnostic(&rho, &Potential::zero(), &Kernel::Heat, 0.5, &[100, 1000, 10_000], 1).unwrap();
        assert!(r.decreasing(), "{:?}", r.medians());
        assert!(r.slope <= -0.3);
        assert!(r.rows[2].median < 0.05);
    }

    #[test]
    fn no_dynamics_floor() {
        let rho = DensityMeasure::gaussian(grid(), 0.0, 1.0).unwrap();
        let floor = w2_empirical(&ParticleEnsemble::new(to_quantile(&rho, 1000).unwrap().into_values()).unwrap(), &rho)
            .unwrap();
        let e = simulate(&rho, &Potential::zero(), 1000, 1e-6, 1e-7, 1).unwrap();
        let w = w2_empirical(&e, &rho).unwrap();
        assert!((w - floor).abs() < 0.01 * floor + 2e-3, "{w} vs floor {floor}");
        assert!(floor < 0.05);
    }
}
