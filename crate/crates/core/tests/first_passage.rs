use exitgrid_core::quadrature::integrate;
use exitgrid_core::{FirstPassageLaw, ModelParams};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn law(sigma: f64, eta: f64) -> FirstPassageLaw {
    FirstPassageLaw::with_defaults(ModelParams::new(sigma, eta).unwrap())
}

#[test]
fn density_is_normalized() {
    for &(sigma, eta) in &[(1.0, 1.0), (0.5, 2.0), (3.0, 0.4)] {
        let l = law(sigma, eta);
        let upper = 60.0 * l.mean();
        let total = integrate(|t| l.density(t).unwrap(), 0.0, upper, 1e-12, 2000).unwrap();
        assert!((total.value - 1.0).abs() < 1e-8, "sigma={sigma} eta={eta}: {}", total.value);
    }
}

#[test]
fn first_moment_matches_closed_form() {
    for &(sigma, eta) in &[(1.0, 1.0), (0.5, 2.0), (3.0, 0.4)] {
        let l = law(sigma, eta);
        let upper = 80.0 * l.mean();
        let m = integrate(|t| t * l.density(t).unwrap(), 0.0, upper, 1e-12, 2000).unwrap();
        let expect = eta * eta / (sigma * sigma);
        assert!((m.value - expect).abs() < 1e-6 * expect, "{} vs {expect}", m.value);
        let s = integrate(|t| l.survival(t).unwrap(), 0.0, upper, 1e-12, 2000).unwrap();
        assert!((s.value - expect).abs() < 1e-6 * expect, "{} vs {expect}", s.value);
    }
}

#[test]
fn density_is_minus_survival_derivative() {
    let l = law(1.0, 1.0);
    let d = 1e-4;
    let mut worst = 0.0f64;
    for i in 0..=200 {
        let t = 0.05 + (5.0 - 0.05) * i as f64 / 200.0;
        let fd = -(l.survival(t + d).unwrap() - l.survival(t - d).unwrap()) / (2.0 * d);
        worst = worst.max((fd - l.density(t).unwrap()).abs());
    }
    assert!(worst < 1e-6, "max gap {worst:e}");
}

#[test]
fn survival_plus_integrated_density_is_one() {
    let l = law(1.0, 1.0);
    for &t in &[0.05, 0.2, 0.5, 1.0, 3.0] {
        let acc = integrate(|s| l.density(s).unwrap(), 0.0, t, 1e-12, 2000).unwrap();
        let total = acc.value + l.survival(t).unwrap();
        assert!((total - 1.0).abs() < 1e-7, "t={t}: {total}");
    }
}

#[test]
fn density_is_bounded() {
    let l = law(1.0, 1.0);
    let mut peak = 0.0f64;
    for i in 1..=5000 {
        let t = i as f64 * 1e-3;
        let v = l.density(t).unwrap();
        assert!(v.is_finite() && v >= 0.0);
        peak = peak.max(v);
    }
    assert!(peak < 5.0, "peak {peak}");
}

#[test]
fn quantiles_scale_with_eta_squared() {
    let (a, b) = (law(1.0, 2.0), law(1.0, 1.0));
    for &p in &[0.01, 0.25, 0.5, 0.75, 0.99] {
        let qa = a.quantile(p, 1e-13).unwrap();
        let qb = b.quantile(p, 1e-13).unwrap();
        assert!((qa - 4.0 * qb).abs() < 1e-8, "p={p}: {qa} vs {}", 4.0 * qb);
    }
}

#[test]
fn samples_match_the_law() {
    let l = law(1.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 100_000;
    let mut xs: Vec<f64> = (0..n).map(|_| l.sample(&mut rng).unwrap()).collect();
    assert!(xs.iter().all(|&x| x > 0.0));
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let se = (var / n as f64).sqrt();
    assert!((mean - 1.0).abs() < 3.0 * se, "mean {mean} se {se}");
    // Var τ = 2η⁴/(3σ⁴)
    assert!((var - 2.0 / 3.0).abs() < 0.02, "var {var}");
    xs.sort_by(f64::total_cmp);
    let mut ks = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let c = l.cdf(x).unwrap();
        ks = ks.max((c - i as f64 / n as f64).abs()).max(((i + 1) as f64 / n as f64 - c).abs());
    }
    assert!(ks < 1.63 / (n as f64).sqrt(), "KS {ks}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn survival_scales_with_sigma(sigma in 0.2f64..5.0, t in 1e-3f64..5.0) {
        let a = law(sigma, 1.0).survival(t / (sigma * sigma)).unwrap();
        let b = law(1.0, 1.0).survival(t).unwrap();
        prop_assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn survival_is_monotone(t in 1e-3f64..10.0, dt in 1e-4f64..1.0) {
        let l = law(1.0, 1.0);
        prop_assert!(l.survival(t + dt).unwrap() <= l.survival(t).unwrap());
    }

    #[test]
    fn cdf_and_survival_complement(t in 1e-3f64..10.0) {
        let l = law(1.0, 1.0);
        prop_assert!((l.cdf(t).unwrap() + l.survival(t).unwrap() - 1.0).abs() < 1e-14);
    }
}
