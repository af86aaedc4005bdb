//! Normal-law helpers built on `statrs`' error functions.

use libm::erfc;
use std::f64::consts::FRAC_1_SQRT_2;

pub(crate) const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
pub fn std_normal_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Standard normal CDF, accurate in both tails.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

/// Upper tail `1 - Phi(z)`.
pub fn std_normal_sf(z: f64) -> f64 {
    0.5 * erfc(z * FRAC_1_SQRT_2)
}

/// `Phi(b) - Phi(a)` for `a <= b` without cancellation when both lie in one tail.
pub fn std_normal_mass(a: f64, b: f64) -> f64 {
    debug_assert!(a <= b);
    if a >= 0.0 {
        std_normal_sf(a) - std_normal_sf(b)
    } else if b <= 0.0 {
        std_normal_cdf(b) - std_normal_cdf(a)
    } else {
        1.0 - std_normal_cdf(a) - std_normal_sf(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cdf_and_sf_are_complementary() {
        for &z in &[-3.0, -0.5, 0.0, 0.7, 2.5] {
            assert_relative_eq!(std_normal_cdf(z) + std_normal_sf(z), 1.0, epsilon = 1e-15);
        }
        assert_relative_eq!(std_normal_cdf(0.0), 0.5, epsilon = 1e-16);
    }

    #[test]
    fn mass_in_far_tail_keeps_precision() {
        let m = std_normal_mass(10.0, 11.0);
        assert!(m > 7.0e-24 && m < 7.7e-24, "{m}");
    }
}
