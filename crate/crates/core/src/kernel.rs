//! Transition density `p^η(t, x)` of `X = σW` started at 0 and absorbed at `±η`.
//!
//! Two exact series are available. The eigenfunction (Fourier) expansion
//!
//! ```text
//! p(t, x) = (1/η) Σ_{k odd} exp(-λ_k t) cos(kπx / 2η),   λ_k = ½ (kπσ / 2η)²
//! ```
//!
//! converges quickly once `σ²t/η²` is of order one, while the image expansion
//!
//! ```text
//! p(t, x) = Σ_k φ_t(x - 4kη) - φ_t(x - 2η + 4kη),   φ_t = N(0, σ²t) density
//! ```
//!
//! needs only a handful of images for small times. [`eval_p`] picks one by
//! [`SeriesConfig::switch_ratio`].

use crate::error::{Error, Result};
use crate::quadrature;
use crate::special::INV_SQRT_2PI;
use std::f64::consts::PI;

/// Diffusion coefficient and barrier half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    sigma: f64,
    eta: f64,
}

impl ModelParams {
    pub fn new(sigma: f64, eta: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParams(format!("sigma must be positive and finite, got {sigma}")));
        }
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::InvalidParams(format!("eta must be positive and finite, got {eta}")));
        }
        let scale = eta * eta / (sigma * sigma);
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidParams(format!("time scale eta²/sigma² = {scale} is degenerate")));
        }
        Ok(Self { sigma, eta })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// `η²/σ²`, the mean exit time and the natural time unit.
    pub fn time_scale(&self) -> f64 {
        self.eta * self.eta / (self.sigma * self.sigma)
    }

    /// Same σ with the barrier moved to `±1`.
    pub fn unit_barrier(&self) -> Self {
        Self { sigma: self.sigma, eta: 1.0 }
    }

    /// Rate of the k-th eigenmode, `½ (kπσ / 2η)²`.
    pub(crate) fn eigen_rate(&self, k: usize) -> f64 {
        let w = k as f64 * PI * self.sigma / (2.0 * self.eta);
        0.5 * w * w
    }
}

/// Truncation and dispatch settings shared by all series evaluations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesConfig {
    term_tol: f64,
    max_terms: usize,
    switch_ratio: f64,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        Self { term_tol: 1e-14, max_terms: 1000, switch_ratio: 0.5 }
    }
}

impl SeriesConfig {
    pub fn new(term_tol: f64, max_terms: usize, switch_ratio: f64) -> Result<Self> {
        if !(term_tol > 0.0) {
            return Err(Error::InvalidParams(format!("term_tol must be positive, got {term_tol}")));
        }
        if max_terms == 0 {
            return Err(Error::InvalidParams("max_terms must be at least 1".into()));
        }
        if !(switch_ratio > 0.0) {
            return Err(Error::InvalidParams(format!("switch_ratio must be positive, got {switch_ratio}")));
        }
        Ok(Self { term_tol, max_terms, switch_ratio })
    }

    pub fn term_tol(&self) -> f64 {
        self.term_tol
    }

    pub fn max_terms(&self) -> usize {
        self.max_terms
    }

    pub fn switch_ratio(&self) -> f64 {
        self.switch_ratio
    }

    /// True when `σ²t/η²` is below the switch ratio, i.e. the image series should be used.
    pub fn use_images(&self, params: &ModelParams, t: f64) -> bool {
        t / params.time_scale() < self.switch_ratio
    }
}

fn check_x(params: &ModelParams, x: f64) -> Result<f64> {
    let ax = x.abs();
    if !(ax <= params.eta) {
        return Err(Error::InvalidDomain(format!("|x| = {ax} exceeds eta = {}", params.eta)));
    }
    Ok(ax)
}

/// Eigenfunction expansion, valid for `t > 0`.
pub fn eval_p_fourier(params: &ModelParams, cfg: &SeriesConfig, t: f64, x: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidDomain(format!("Fourier series needs t > 0, got {t}")));
    }
    let ax = check_x(params, x)?;
    if ax == params.eta {
        return Ok(0.0);
    }
    let eta = params.eta;
    let lead = 1.0 / eta;
    let mut sum = 0.0;
    let mut k = 1usize;
    let mut terms = 0usize;
    loop {
        let bound = lead * (-params.eigen_rate(k) * t).exp();
        if bound < cfg.term_tol {
            break;
        }
        if terms == cfg.max_terms {
            return Err(Error::NoConvergence { max_terms: cfg.max_terms, tail: bound });
        }
        sum += bound * (k as f64 * PI * ax / (2.0 * eta)).cos();
        terms += 1;
        k += 2;
    }
    Ok(sum.max(0.0))
}

/// Image (Gaussian kernel) expansion, valid for `t >= 0`.
///
/// At `t = 0` the law is a unit atom at the origin: `x ≠ 0` gives 0 and
/// `x = 0` gives [`Error::Atom`].
pub fn eval_p_gaussian(params: &ModelParams, cfg: &SeriesConfig, t: f64, x: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::InvalidDomain(format!("image series needs t >= 0, got {t}")));
    }
    let ax = check_x(params, x)?;
    if t == 0.0 {
        return if ax == 0.0 { Err(Error::Atom) } else { Ok(0.0) };
    }
    let eta = params.eta;
    let var = params.sigma * params.sigma * t;
    let norm = INV_SQRT_2PI / var.sqrt();
    let g = |c: f64| {
        let d = ax - c;
        (-d * d / (2.0 * var)).exp()
    };

    // level 0: source at 0, first reflection at 2η
    let mut sum = g(0.0) - g(2.0 * eta);
    let mut level = 1usize;
    let mut terms = 1usize;
    loop {
        // every image at this level sits at least (4k - 3)η from [-η, η]
        let d = (4 * level - 3) as f64 * eta;
        let bound = norm * (-d * d / (2.0 * var)).exp();
        if bound < cfg.term_tol {
            break;
        }
        if terms == cfg.max_terms {
            return Err(Error::NoConvergence { max_terms: cfg.max_terms, tail: bound });
        }
        let shift = 4.0 * level as f64 * eta;
        sum += g(shift) + g(-shift) - g(2.0 * eta - shift) - g(2.0 * eta + shift);
        terms += 1;
        level += 1;
    }
    Ok((norm * sum).max(0.0))
}

/// Dispatches to the image series below `switch_ratio` (in units of `η²/σ²`) and
/// to the Fourier series above it.
pub fn eval_p(params: &ModelParams, cfg: &SeriesConfig, t: f64, x: f64) -> Result<f64> {
    if cfg.use_images(params, t) {
        eval_p_gaussian(params, cfg, t, x)
    } else {
        eval_p_fourier(params, cfg, t, x)
    }
}

/// Bound on `∫_{t_max}^∞ p(t, x) dt` from the Fourier series.
pub fn time_tail_bound(params: &ModelParams, t_max: f64) -> f64 {
    let rate = params.eigen_rate(1);
    // Σ_{k odd} e^{-k²λ₁T}/(k²λ₁) ≤ e^{-λ₁T}/λ₁ · π²/8
    (-rate * t_max).exp() / (rate * params.eta) * PI * PI / 8.0
}

const MAX_INTERVALS: usize = 2000;

/// `∫_0^∞ p(t, x) dt`, integrated numerically over `[0, t_max]`.
///
/// The segment `[0, ½η²/σ²]` is integrated in `u = √t` so the `t^{-1/2}`
/// behaviour at `x = 0` becomes a bounded integrand.
pub fn integrate_p_over_time(
    params: &ModelParams,
    cfg: &SeriesConfig,
    x: f64,
    t_max: f64,
    quad_tol: f64,
) -> Result<f64> {
    let ax = check_x(params, x)?;
    if !(t_max > 0.0) {
        return Err(Error::InvalidDomain(format!("t_max must be positive, got {t_max}")));
    }
    let tail = time_tail_bound(params, t_max);
    if tail > 0.5 * quad_tol {
        return Err(Error::ToleranceNotMet { tol: quad_tol, estimate: tail });
    }
    if ax == params.eta {
        return Ok(0.0);
    }
    let t_split = t_max.min(0.5 * params.time_scale());
    let mut failure = None;
    let mut eval = |t: f64| match eval_p(params, cfg, t, ax) {
        Ok(v) => v,
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    };
    let head = quadrature::integrate(
        |u| 2.0 * u * eval(u * u),
        0.0,
        t_split.sqrt(),
        0.25 * quad_tol,
        MAX_INTERVALS,
    )?;
    let body = quadrature::integrate(&mut eval, t_split, t_max, 0.25 * quad_tol, MAX_INTERVALS)?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(head.value + body.value)
}
