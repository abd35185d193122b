//! Wasserstein gradient-flow structure of the one-dimensional Fokker-Planck
//! equation
//!
//! ```text
//! d rho / dt = rho'' + (rho psi')'
//! ```
//!
//! and the large-deviation rate `J_tau(rho1 | rho0)` of the empirical measure
//! of the associated particle system `dX = -psi'(X) dt + sqrt(2) dW`.
//!
//! The crate checks numerically that, as `tau -> 0`,
//!
//! ```text
//! J_tau(rho1 | rho0) - W2^2(rho0, rho1) / (4 tau)  ->  F(rho1)/2 - F(rho0)/2
//! ```
//!
//! with `F(rho) = integral of rho log rho + integral of psi rho` the free
//! energy.
//!
//! Modules, bottom up:
//!
//! - [`measures`]: densities on a uniform grid, quantile charts, entropy,
//!   Fisher information, mollification and tail splicing.
//! - [`potentials`]: drift potentials and finite-window class checks.
//! - [`transport`]: 1-D optimal transport, geodesics, the weighted dual norm.
//! - [`fokker_planck`]: closed-form kernels and a finite-volume solver.
//! - [`jko`]: the minimizing-movement scheme in the quantile chart.
//! - [`rate`]: static (Schrodinger bridge) and dynamic (path action)
//!   evaluators of `J_tau` and the `tau` sweep.
//! - [`particles`]: Euler-Maruyama ensembles and law-of-large-numbers checks.
//! - [`io`]: CSV and JSON formats shared with the command-line tool.

pub mod error;
pub mod fokker_planck;
pub mod grid;
pub mod io;
pub mod jko;
mod linalg;
pub mod measures;
pub mod particles;
pub mod potentials;
pub mod rate;
pub mod transport;

pub use error::{Error, Result};
pub use fokker_planck::{convolve_kernel, evolve_fv, heat_kernel, ou_kernel, FvOptions, Kernel};
pub use grid::Grid;
pub use jko::{jko_flow, jko_step, JkoOptions, JkoStepReport};
pub use measures::{
    entropy, fisher_information, free_energy, from_quantile, internal_energy, mollify,
    relative_entropy, second_moment, tail_splice, to_quantile, DensityMeasure,
    ParticleEnsemble, QuantileMeasure,
};
pub use particles::{lln_diagnostic, simulate};
pub use potentials::{validate_subquadratic, validate_superquadratic, Potential};
pub use rate::{gamma_sweep, j_dynamic, j_static, Coupling, Method, RateReport};
pub use transport::{
    dual_norm_sq, geodesic, geodesic_functional_bounds, grad_free_energy_norm_sq,
    monge_ampere_residual, monotone_map, path_action, w2, BoundsReport, MeasurePath,
    TangentField, TransportMap,
};
