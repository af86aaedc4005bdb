//! Numerics for tracking a Wiener process `X = σW` with the first-exit
//! (adaptive) discretization: a new approximation point is placed whenever the
//! process has moved `η` away from the current one.
//!
//! * [`kernel`] evaluates the absorbed transition density `p^η(t, x)`.
//! * [`passage`] gives the law of the exit time from `(-η, η)`.
//! * [`renewal`] solves for the renewal density and assembles the analytic
//!   density of the normalized tracking error `Z_t/η`.
//! * [`sim`] is the Monte Carlo counterpart.
//! * [`distributions`] holds the reference laws, KDE and the Wasserstein-1 distance.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod distributions;
pub mod error;
pub mod kernel;
pub mod passage;
pub mod quadrature;
pub mod renewal;
pub mod sim;
pub mod special;

pub use distributions::{
    kde, scaled_normal_pdf, triangular_cdf, triangular_pdf, wasserstein1, DensityGrid, Distribution1d,
    EmpiricalSample, KdeEstimate, ReferenceLaw,
};
pub use error::{Error, Result};
pub use kernel::{eval_p, eval_p_fourier, eval_p_gaussian, integrate_p_over_time, ModelParams, SeriesConfig};
pub use passage::{mean_tau, FirstPassageLaw};
pub use renewal::{
    error_density_analytic, renewal_convolution, solve_renewal_density, triangular_limit_check, ErrorDensity,
    LimitReport, RenewalGrid,
};
pub use sim::{collect_errors, discretize, generate_path, simulate, AnchorMode, Batch, DiscretizationTrace, PathConfig};
