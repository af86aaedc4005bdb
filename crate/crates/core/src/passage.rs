//! Law of the first exit time `τ^η = inf{t : |X_t| = η}`.

use crate::error::{Error, Result};
use crate::kernel::{ModelParams, SeriesConfig};
use crate::special::{std_normal_mass, std_normal_sf, INV_SQRT_2PI};
use rand::distr::Open01;
use rand::Rng;
use std::f64::consts::PI;

/// Exit-time law for given `(σ, η)` with the series settings used to evaluate it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstPassageLaw {
    pub params: ModelParams,
    pub cfg: SeriesConfig,
}

/// `E[τ^η] = η²/σ²`.
pub fn mean_tau(params: &ModelParams) -> f64 {
    params.time_scale()
}

const MAX_ROOT_ITERS: usize = 200;

impl FirstPassageLaw {
    pub fn new(params: ModelParams, cfg: SeriesConfig) -> Self {
        Self { params, cfg }
    }

    pub fn with_defaults(params: ModelParams) -> Self {
        Self::new(params, SeriesConfig::default())
    }

    pub fn mean(&self) -> f64 {
        mean_tau(&self.params)
    }

    /// `P(τ > t)`.
    pub fn survival(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::InvalidDomain(format!("survival needs t >= 0, got {t}")));
        }
        if t == 0.0 {
            return Ok(1.0);
        }
        if self.cfg.use_images(&self.params, t) {
            Ok((1.0 - self.cdf_images(t)?).clamp(0.0, 1.0))
        } else {
            self.survival_fourier(t)
        }
    }

    /// `P(τ <= t)`, computed directly in the image regime so small
    /// probabilities keep full relative precision.
    pub fn cdf(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::InvalidDomain(format!("cdf needs t >= 0, got {t}")));
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        if self.cfg.use_images(&self.params, t) {
            Ok(self.cdf_images(t)?.clamp(0.0, 1.0))
        } else {
            Ok(1.0 - self.survival_fourier(t)?)
        }
    }

    fn survival_fourier(&self, t: f64) -> Result<f64> {
        let mut sum = 0.0;
        let mut k = 1usize;
        let mut terms = 0usize;
        loop {
            let bound = 4.0 / (k as f64 * PI) * (-self.params.eigen_rate(k) * t).exp();
            if bound < self.cfg.term_tol() {
                break;
            }
            if terms == self.cfg.max_terms() {
                return Err(Error::NoConvergence { max_terms: self.cfg.max_terms(), tail: bound });
            }
            sum += if (k / 2).is_multiple_of(2) { bound } else { -bound };
            terms += 1;
            k += 2;
        }
        Ok(sum.clamp(0.0, 1.0))
    }

    /// Image-series CDF: one minus the absorbed mass left in `[-η, η]`.
    fn cdf_images(&self, t: f64) -> Result<f64> {
        let eta = self.params.eta();
        let s = self.params.sigma() * t.sqrt();
        // mass of N(c, s²) on [-η, η]
        let mass = |c: f64| std_normal_mass((-eta - c) / s, (eta - c) / s);
        // 1 - mass(0), then subtract the remaining positive images and add the reflections
        let mut cdf = 2.0 * std_normal_sf(eta / s) + mass(2.0 * eta);
        let mut level = 1usize;
        let mut terms = 1usize;
        loop {
            let d = (4 * level - 3) as f64 * eta;
            let bound = 4.0 * std_normal_sf(d / s);
            if bound < self.cfg.term_tol() {
                break;
            }
            if terms == self.cfg.max_terms() {
                return Err(Error::NoConvergence { max_terms: self.cfg.max_terms(), tail: bound });
            }
            let shift = 4.0 * level as f64 * eta;
            cdf -= mass(shift) + mass(-shift);
            cdf += mass(2.0 * eta - shift) + mass(2.0 * eta + shift);
            terms += 1;
            level += 1;
        }
        Ok(cdf)
    }

    /// Density `f_τ(t) = -d/dt P(τ > t)`.
    pub fn density(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::InvalidDomain(format!("density needs t >= 0, got {t}")));
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        let v = if self.cfg.use_images(&self.params, t) {
            self.density_images(t)?
        } else {
            self.density_fourier(t)?
        };
        Ok(v.max(0.0))
    }

    fn density_fourier(&self, t: f64) -> Result<f64> {
        let mut sum = 0.0;
        let mut k = 1usize;
        let mut terms = 0usize;
        loop {
            let rate = self.params.eigen_rate(k);
            let bound = rate * 4.0 / (k as f64 * PI) * (-rate * t).exp();
            // rate·e^{-rate·t} only decreases in k once rate·t > 1
            if bound < self.cfg.term_tol() && rate * t > 1.0 {
                break;
            }
            if terms == self.cfg.max_terms() {
                return Err(Error::NoConvergence { max_terms: self.cfg.max_terms(), tail: bound });
            }
            sum += if (k / 2).is_multiple_of(2) { bound } else { -bound };
            terms += 1;
            k += 2;
        }
        Ok(sum)
    }

    /// Term-wise time derivative of the image series for the absorbed mass.
    fn density_images(&self, t: f64) -> Result<f64> {
        let eta = self.params.eta();
        let var = self.params.sigma() * self.params.sigma() * t;
        let coef = INV_SQRT_2PI / (2.0 * t * var.sqrt());
        let ae = |a: f64| a * (-a * a / (2.0 * var)).exp();
        // -d/dt of the mass of N(c, σ²t) on [-η, η]
        let flux = |c: f64| ae(eta - c) - ae(-eta - c);
        let mut sum = flux(0.0) - flux(2.0 * eta);
        let mut level = 1usize;
        let mut terms = 1usize;
        loop {
            let d = (4 * level - 3) as f64 * eta;
            let peak = if d * d >= var { ae(d) } else { var.sqrt() * (-0.5f64).exp() };
            let bound = 8.0 * coef * peak;
            if bound < self.cfg.term_tol() {
                break;
            }
            if terms == self.cfg.max_terms() {
                return Err(Error::NoConvergence { max_terms: self.cfg.max_terms(), tail: bound });
            }
            let shift = 4.0 * level as f64 * eta;
            sum += flux(shift) + flux(-shift);
            sum -= flux(2.0 * eta - shift) + flux(2.0 * eta + shift);
            terms += 1;
            level += 1;
        }
        Ok(coef * sum)
    }

    /// Inverse CDF by bracketed bisection with secant refinement; `|t - t*| < tol`.
    pub fn quantile(&self, p: f64, tol: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidDomain(format!("quantile needs p in (0, 1), got {p}")));
        }
        let scale = self.params.time_scale();
        let mut lo = 0.0;
        let mut f_lo = -p;
        let mut hi = 8.0 * scale;
        let mut f_hi = self.cdf(hi)? - p;
        let mut iters = 0;
        while f_hi < 0.0 {
            lo = hi;
            f_lo = f_hi;
            hi *= 2.0;
            f_hi = self.cdf(hi)? - p;
            iters += 1;
            if iters > MAX_ROOT_ITERS {
                return Err(Error::ToleranceNotMet { tol, estimate: hi - lo });
            }
        }
        let mut use_secant = true;
        for _ in 0..MAX_ROOT_ITERS {
            let width = hi - lo;
            if width < tol {
                return Ok(0.5 * (lo + hi));
            }
            let mut mid = 0.5 * (lo + hi);
            if use_secant && f_hi > f_lo {
                let cand = lo - f_lo * width / (f_hi - f_lo);
                if cand > lo && cand < hi {
                    mid = cand;
                }
            }
            let f_mid = self.cdf(mid)? - p;
            if f_mid == 0.0 {
                return Ok(mid);
            }
            let before = width;
            if f_mid < 0.0 {
                lo = mid;
                f_lo = f_mid;
            } else {
                hi = mid;
                f_hi = f_mid;
            }
            // secant steps that barely shrink the bracket hand over to bisection once
            use_secant = !use_secant || (hi - lo) < 0.5 * before;
            if (hi - lo) < tol {
                // pin the side closest to the root
                return Ok(if f_lo.abs() < f_hi.abs() { lo } else { hi });
            }
        }
        Err(Error::ToleranceNotMet { tol, estimate: hi - lo })
    }

    /// Default root tolerance `1e-10·η²/σ²`.
    pub fn default_quantile_tol(&self) -> f64 {
        1e-10 * self.params.time_scale()
    }

    /// One exit time drawn by inverting the CDF at a uniform variate.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        let u: f64 = rng.sample(Open01);
        self.quantile(u, self.default_quantile_tol())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn law(sigma: f64, eta: f64) -> FirstPassageLaw {
        FirstPassageLaw::with_defaults(ModelParams::new(sigma, eta).unwrap())
    }

    #[test]
    fn mean_closed_form() {
        assert_eq!(mean_tau(&ModelParams::new(1.0, 1.0).unwrap()), 1.0);
        assert_eq!(mean_tau(&ModelParams::new(1.0, 2.0).unwrap()), 4.0);
        assert_eq!(mean_tau(&ModelParams::new(2.0, 1.0).unwrap()), 0.25);
    }

    #[test]
    fn survival_at_zero_and_domain() {
        let l = law(1.0, 1.0);
        assert_eq!(l.survival(0.0).unwrap(), 1.0);
        assert!(matches!(l.survival(-0.1), Err(Error::InvalidDomain(_))));
        assert!(l.survival(60.0).unwrap() < 1e-20);
    }

    #[test]
    fn both_regimes_agree_at_switch() {
        let l = law(1.0, 1.0);
        for &t in &[0.3, 0.5, 0.8] {
            let img = 1.0 - l.cdf_images(t).unwrap();
            let four = l.survival_fourier(t).unwrap();
            assert_abs_diff_eq!(img, four, epsilon = 1e-13);
            assert_abs_diff_eq!(l.density_images(t).unwrap(), l.density_fourier(t).unwrap(), epsilon = 1e-12);
        }
    }

    #[test]
    fn scaling_in_eta() {
        let (a, b) = (law(1.0, 2.0), law(1.0, 1.0));
        for &t in &[0.1, 1.0, 2.0, 7.5] {
            assert_abs_diff_eq!(a.survival(t).unwrap(), b.survival(t / 4.0).unwrap(), epsilon = 1e-12);
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        let l = law(1.0, 1.0);
        let q = l.quantile(0.5, 1e-12).unwrap();
        assert_abs_diff_eq!(l.cdf(q).unwrap(), 0.5, epsilon = 1e-9);
        let qs: Vec<f64> = [0.1, 0.5, 0.9].iter().map(|&p| l.quantile(p, 1e-12).unwrap()).collect();
        assert!(qs[0] < qs[1] && qs[1] < qs[2]);
        assert!(l.quantile(1.0, 1e-9).is_err());
        assert!(l.quantile(0.0, 1e-9).is_err());
    }

    #[test]
    fn extreme_quantiles() {
        let l = law(1.0, 1.0);
        let q = l.quantile(1e-12, 1e-12).unwrap();
        assert!(q > 0.0 && q < 0.05);
        let q = l.quantile(1.0 - 1e-12, 1e-9).unwrap();
        assert!(q > 10.0);
    }
}
