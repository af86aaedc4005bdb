//! Renewal density of the exit-time process and the analytic law of the
//! normalized tracking error `Z_t/η`.
//!
//! Everything here runs in rescaled time: the exit law is taken with the
//! barrier at `±1` and real time `t` maps to `t/η²`. One [`RenewalGrid`] per
//! σ therefore serves every η.

use crate::distributions::{triangular_pdf, wasserstein1, DensityGrid, ReferenceLaw};
use crate::error::{Error, Result};
use crate::kernel::{eval_p, ModelParams, SeriesConfig};
use crate::passage::FirstPassageLaw;
use crate::quadrature;
use rayon::prelude::*;

/// Default Volterra step in rescaled time.
pub const DEFAULT_STEP: f64 = 0.005;

/// `m(i·h)` for `i = 0..=n` on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RenewalGrid {
    law: FirstPassageLaw,
    h: f64,
    values: Vec<f64>,
    /// `m - f` on the grid.
    remainder: Vec<f64>,
}

/// Trapezoid-rule solution of `m = f + f * m`, where `f` is the exit-time density.
///
/// `f(0) = 0`, so every step is explicit:
/// `m_n = f_n + h Σ_{j=1}^{n-1} f_{n-j} m_j`.
pub fn solve_renewal_density(law: &FirstPassageLaw, h: f64, horizon: f64) -> Result<RenewalGrid> {
    if !(h > 0.0) || !(horizon > h) {
        return Err(Error::InvalidParams(format!("need 0 < h < horizon (h = {h}, horizon = {horizon})")));
    }
    let n = (horizon / h).ceil() as usize;
    let f = (0..=n).map(|i| law.density(i as f64 * h)).collect::<Result<Vec<_>>>()?;
    let mut m = vec![0.0; n + 1];
    m[0] = f[0];
    for i in 1..=n {
        let conv: f64 = (1..i).map(|j| f[i - j] * m[j]).sum();
        let mut v = f[i] + h * (conv + 0.5 * f[i] * m[0]);
        // f[0] m[i] h/2 is implicit in general
        v /= 1.0 - 0.5 * h * f[0];
        if v < -law.cfg.term_tol() {
            return Err(Error::UnstableStep { t: i as f64 * h, value: v });
        }
        m[i] = v.max(0.0);
    }
    let remainder = m.iter().zip(&f).map(|(m, f)| m - f).collect();
    Ok(RenewalGrid { law: *law, h, values: m, remainder })
}

impl RenewalGrid {
    /// Builds the grid with the default step and the horizon needed for rescaled time `t_rescaled`.
    pub fn for_time(params: &ModelParams, cfg: &SeriesConfig, t_rescaled: f64) -> Result<Self> {
        let law = FirstPassageLaw::new(params.unit_barrier(), *cfg);
        solve_renewal_density(&law, DEFAULT_STEP, default_horizon(t_rescaled))
    }

    pub fn law(&self) -> &FirstPassageLaw {
        &self.law
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn horizon(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.h
    }

    /// Linear interpolation of `m` at `v ∈ [0, horizon]`.
    pub fn m_at(&self, v: f64) -> f64 {
        let n = self.values.len() - 1;
        let pos = (v / self.h).max(0.0);
        let i = (pos.floor() as usize).min(n - 1);
        let w = (pos - i as f64).clamp(0.0, 1.0);
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }

    /// `m(v) - f(v)` by four-point Lagrange interpolation of the grid values.
    fn remainder_at(&self, v: f64) -> f64 {
        let n = self.remainder.len() - 1;
        let pos = (v / self.h).clamp(0.0, n as f64);
        let i = (pos.floor() as usize).clamp(1, n.saturating_sub(2).max(1));
        if n < 3 {
            let i = (pos.floor() as usize).min(n - 1);
            let w = pos - i as f64;
            return self.remainder[i] * (1.0 - w) + self.remainder[i + 1] * w;
        }
        let x = pos - i as f64;
        let r = &self.remainder[i - 1..=i + 2];
        let (xm, x0, x1, x2) = (x + 1.0, x, x - 1.0, x - 2.0);
        -r[0] * x0 * x1 * x2 / 6.0 + r[1] * xm * x1 * x2 / 2.0 - r[2] * xm * x0 * x2 / 2.0
            + r[3] * xm * x0 * x1 / 6.0
    }

    /// Trapezoid integral of `m` up to grid index `i`, i.e. `M(i·h)`.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut acc = Vec::with_capacity(self.values.len());
        acc.push(0.0);
        for w in self.values.windows(2) {
            let last = *acc.last().expect("nonempty");
            acc.push(last + 0.5 * self.h * (w[0] + w[1]));
        }
        acc
    }
}

/// `max(50, 2·t/η²)`.
pub fn default_horizon(t_rescaled: f64) -> f64 {
    (2.0 * t_rescaled).max(50.0)
}

/// Rescaled time beyond which `p¹(s, ·)` is below 1e-16 for all z.
fn kernel_cutoff(params: &ModelParams) -> f64 {
    let unit = params.unit_barrier();
    16.0 * std::f64::consts::LN_10 / unit.eigen_rate(1)
}

/// `∫_0^T p¹(T - v, z) m(v) dv`.
///
/// `m` is split into the exact exit density `f` plus the smoother remainder
/// `f * m`, which is interpolated from the grid. Substituting `s = T - v`,
/// each grid cell is integrated against the exact kernel. Cells touching `s = 0`, where `p¹(s, 0)` grows like `s^{-1/2}`, are
/// integrated adaptively in `u = √s`.
pub fn renewal_convolution(rg: &RenewalGrid, t_rescaled: f64, z: f64) -> Result<f64> {
    let big_t = t_rescaled;
    if !(big_t > 0.0) {
        return Err(Error::InvalidDomain(format!("rescaled time must be positive, got {big_t}")));
    }
    if big_t > rg.horizon() + 1e-9 * rg.h {
        return Err(Error::HorizonTooShort { horizon: rg.horizon(), requested: big_t });
    }
    let params = rg.law.params;
    let cfg = rg.law.cfg;
    let h = rg.h;
    let s_cut = kernel_cutoff(&params).min(big_t);
    let mut failure = None;
    let mut p = |s: f64| match eval_p(&params, &cfg, s, z) {
        Ok(v) => v,
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    };

    // cell boundaries in s: 0, T - J h, T - (J-1) h, ...
    let ratio = big_t / h;
    let top = if (ratio - ratio.round()).abs() < 1e-9 { ratio.round() as usize } else { ratio.floor() as usize };
    let mut edges = vec![0.0];
    let first = big_t - top as f64 * h;
    if first > 1e-12 * h {
        edges.push(first);
    }
    let mut j = top;
    while j > 0 {
        j -= 1;
        let s = big_t - j as f64 * h;
        edges.push(s);
        if s >= s_cut {
            break;
        }
    }

    // m = f + r with r = f * m smooth; f is evaluated exactly, r interpolated
    let law = rg.law;
    let mut law_failure = None;
    let mut m_exact = |v: f64, r: f64| match law.density(v) {
        Ok(f) => f + r,
        Err(e) => {
            law_failure.get_or_insert(e);
            0.0
        }
    };
    let mut total = 0.0;
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a >= s_cut {
            break;
        }
        let mut integrand = |s: f64| {
            let v = big_t - s;
            p(s) * m_exact(v, rg.remainder_at(v))
        };
        let piece = if a < 4.0 * h {
            quadrature::integrate(|u| 2.0 * u * integrand(u * u), a.sqrt(), b.sqrt(), 1e-12, 200)?.value
        } else {
            quadrature::gauss7(integrand, a, b)
        };
        total += piece;
    }
    if let Some(e) = law_failure {
        return Err(e);
    }
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(total)
}

/// Analytic density of `Z_t/η` on a z-grid in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorDensity {
    pub grid: DensityGrid,
    /// `t/η²`.
    pub t_rescaled: f64,
}

/// `p¹(t/η², z) + ∫_0^{t/η²} p¹(t/η² - v, z) m(v) dv` for each `z` in `z_grid`.
///
/// `rg` must be built for the unit barrier with the same σ as `params`.
pub fn error_density_analytic(params: &ModelParams, rg: &RenewalGrid, t: f64, z_grid: &[f64]) -> Result<ErrorDensity> {
    if rg.law.params.sigma() != params.sigma() || rg.law.params.eta() != 1.0 {
        return Err(Error::InvalidParams("renewal grid must use the unit barrier and the same sigma".into()));
    }
    if let Some(z) = z_grid.iter().find(|z| !(z.abs() <= 1.0)) {
        return Err(Error::InvalidDomain(format!("z = {z} outside [-1, 1]")));
    }
    let big_t = t / (params.eta() * params.eta());
    let unit = params.unit_barrier();
    let cfg = rg.law.cfg;
    let f = z_grid
        .par_iter()
        .map(|&z| {
            // evaluate at |z| so the result is exactly symmetric
            let az = z.abs();
            Ok(eval_p(&unit, &cfg, big_t, az)? + renewal_convolution(rg, big_t, az)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ErrorDensity { grid: DensityGrid::new(z_grid.to_vec(), f)?, t_rescaled: big_t })
}

/// Comparison of the analytic error law against `(1 - |z|)⁺`.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitReport {
    pub t_rescaled: f64,
    pub wasserstein: f64,
    pub max_abs_gap: f64,
    /// Sup-norm gap between the renewal term alone and `(1 - |z|)⁺`.
    pub renewal_term_gap: f64,
    /// Largest value of the atom-free term `p¹(t/η², z)` on the grid.
    pub first_term_max: f64,
    /// `4η²/(3σ²)`, the bound on the first term.
    pub first_term_bound: f64,
    pub mass: f64,
    /// False when `t/η² < 1`, where the normal regime still dominates.
    pub asymptotic: bool,
    pub within_tol: bool,
}

/// Number of z-points used by [`triangular_limit_check`].
pub const LIMIT_GRID_POINTS: usize = 401;

pub fn triangular_limit_check(params: &ModelParams, t: f64, tol: f64) -> Result<LimitReport> {
    let cfg = SeriesConfig::default();
    let big_t = t / (params.eta() * params.eta());
    let rg = RenewalGrid::for_time(params, &cfg, big_t)?;
    limit_report(params, &rg, t, tol)
}

/// [`triangular_limit_check`] with a caller-supplied renewal grid.
pub fn limit_report(params: &ModelParams, rg: &RenewalGrid, t: f64, tol: f64) -> Result<LimitReport> {
    let z = crate::distributions::uniform_grid(-1.0, 1.0, LIMIT_GRID_POINTS);
    let dens = error_density_analytic(params, rg, t, &z)?;
    let unit = params.unit_barrier();
    let cfg = rg.law.cfg;
    let first_term = z
        .iter()
        .map(|&zz| eval_p(&unit, &cfg, dens.t_rescaled, zz.abs()))
        .collect::<Result<Vec<_>>>()?;
    let first_term_max = first_term.iter().copied().fold(0.0, f64::max);
    let renewal_term_gap = z
        .iter()
        .zip(dens.grid.f())
        .zip(&first_term)
        .map(|((&zz, &v), &p)| (v - p - triangular_pdf(zz)).abs())
        .fold(0.0, f64::max);
    let max_abs_gap = z
        .iter()
        .zip(dens.grid.f())
        .map(|(&zz, &v)| (v - triangular_pdf(zz)).abs())
        .fold(0.0, f64::max);
    let wasserstein = wasserstein1(&dens.grid, &ReferenceLaw::Triangular)?;
    let eta = params.eta();
    let sigma = params.sigma();
    Ok(LimitReport {
        t_rescaled: dens.t_rescaled,
        wasserstein,
        max_abs_gap,
        renewal_term_gap,
        first_term_max,
        first_term_bound: 4.0 * eta * eta / (3.0 * sigma * sigma),
        mass: dens.grid.mass(),
        asymptotic: dens.t_rescaled >= 1.0,
        within_tol: wasserstein < tol,
    })
}
