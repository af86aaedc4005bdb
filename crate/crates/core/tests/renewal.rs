use exitgrid_core::distributions::{uniform_grid, ReferenceLaw};
use exitgrid_core::renewal::{limit_report, solve_renewal_density, DEFAULT_STEP};
use exitgrid_core::{
    error_density_analytic, triangular_limit_check, wasserstein1, FirstPassageLaw, ModelParams, RenewalGrid,
    SeriesConfig,
};

fn unit_law() -> FirstPassageLaw {
    FirstPassageLaw::with_defaults(ModelParams::new(1.0, 1.0).unwrap())
}

/// `Σ_{k=1}^{50} f^{*k}` with every convolution done by trapezoid rule on a grid of step `h`.
fn neumann_series(law: &FirstPassageLaw, h: f64, n: usize) -> Vec<f64> {
    let f: Vec<f64> = (0..=n).map(|i| law.density(i as f64 * h).unwrap()).collect();
    let mut power = f.clone();
    let mut total = f.clone();
    for _ in 1..50 {
        let mut next = vec![0.0; n + 1];
        for (i, out) in next.iter_mut().enumerate().skip(1) {
            let mut s = 0.5 * (power[0] * f[i] + power[i] * f[0]);
            for j in 1..i {
                s += power[j] * f[i - j];
            }
            *out = h * s;
        }
        for (t, v) in total.iter_mut().zip(&next) {
            *t += v;
        }
        power = next;
    }
    total
}

#[test]
fn matches_independent_neumann_series() {
    let law = unit_law();
    let rg = solve_renewal_density(&law, DEFAULT_STEP, 10.0).unwrap();
    let fine = neumann_series(&law, DEFAULT_STEP / 2.0, 4000);
    let mut worst = 0.0f64;
    for (i, &m) in rg.values().iter().enumerate() {
        worst = worst.max((m - fine[2 * i]).abs());
    }
    assert!(worst < 1e-4, "max gap {worst:e}");
}

#[test]
fn renewal_density_tends_to_inverse_mean() {
    for &(sigma, limit) in &[(1.0, 1.0), (2.0, 4.0)] {
        let law = FirstPassageLaw::with_defaults(ModelParams::new(sigma, 1.0).unwrap());
        let rg = solve_renewal_density(&law, DEFAULT_STEP / sigma, 20.0 / (sigma * sigma)).unwrap();
        let last = *rg.values().last().unwrap();
        assert!((last - limit).abs() < 0.01 * limit, "sigma={sigma}: m = {last}");
    }
}

#[test]
fn renewal_function_is_monotone() {
    let rg = solve_renewal_density(&unit_law(), DEFAULT_STEP, 30.0).unwrap();
    assert!(rg.values().iter().all(|&v| v >= 0.0));
    let cum = rg.cumulative();
    assert!(cum.windows(2).all(|w| w[1] >= w[0]));
    // M(t) - t → Var τ / (2 E[τ]²) - 1/2 = -1/6
    let t = rg.horizon();
    assert!((cum[cum.len() - 1] - t + 1.0 / 6.0).abs() < 1e-3);
}

fn density_at(big_t: f64, sigma: f64) -> exitgrid_core::ErrorDensity {
    let p = ModelParams::new(sigma, 1.0).unwrap();
    let rg = RenewalGrid::for_time(&p, &SeriesConfig::default(), big_t).unwrap();
    error_density_analytic(&p, &rg, big_t, &uniform_grid(-1.0, 1.0, 401)).unwrap()
}

#[test]
fn error_density_is_normalized_and_symmetric() {
    for &t in &[0.03, 0.2, 1.0, 2.0, 10.0] {
        let d = density_at(t, 1.0);
        assert!((d.grid.mass() - 1.0).abs() < 1e-5, "t={t}: mass {}", d.grid.mass());
        let f = d.grid.f();
        let n = f.len();
        for i in 0..n {
            assert!((f[i] - f[n - 1 - i]).abs() < 1e-12);
            assert!(f[i] >= 0.0);
        }
    }
}

#[test]
fn error_density_variance_tracks_rescaled_time() {
    // before the first exit E[Z²] = t/η² on the event of no exit; at small t almost every path qualifies
    let d = density_at(0.02, 1.0);
    let (mean, var) = d.grid.moments();
    assert!(mean.abs() < 1e-12);
    assert!((var - 0.02).abs() < 1e-3, "var {var}");
}

#[test]
fn sigma_only_rescales_time() {
    let a = density_at(0.5, 1.0);
    let p = ModelParams::new(2.0, 1.0).unwrap();
    let rg = RenewalGrid::for_time(&p, &SeriesConfig::default(), 2.0).unwrap();
    let b = error_density_analytic(&p, &rg, 0.125, &uniform_grid(-1.0, 1.0, 401)).unwrap();
    for (x, y) in a.grid.f().iter().zip(b.grid.f()) {
        assert!((x - y).abs() < 1e-6, "{x} vs {y}");
    }
}

#[test]
fn close_to_triangle_after_two_exit_times() {
    let r = triangular_limit_check(&ModelParams::new(1.0, 1.0).unwrap(), 2.0, 0.01).unwrap();
    assert!(r.wasserstein < 0.01, "{r:?}");
    assert!(r.within_tol && r.asymptotic);
}

#[test]
fn close_to_normal_for_short_times() {
    let d = density_at(0.03, 1.0);
    let normal = ReferenceLaw::scaled_normal(1.0, 0.03, 1.0).unwrap();
    let w = wasserstein1(&d.grid, &normal).unwrap();
    assert!(w < 0.01, "W1 {w}");
    let tri = wasserstein1(&d.grid, &ReferenceLaw::Triangular).unwrap();
    assert!(tri > 0.1, "W1 to triangle {tri}");
}

#[test]
fn far_from_triangle_at_very_short_times() {
    let r = triangular_limit_check(&ModelParams::new(1.0, 1.0).unwrap(), 0.01, 0.01).unwrap();
    assert!(r.wasserstein > 0.2, "{r:?}");
    assert!(!r.asymptotic && !r.within_tol);
}

#[test]
fn converges_to_triangle_with_reported_first_term() {
    let p = ModelParams::new(1.0, 1.0).unwrap();
    let rg = RenewalGrid::for_time(&p, &SeriesConfig::default(), 50.0).unwrap();
    let mut prev = f64::INFINITY;
    for &t in &[1.0, 2.0, 5.0, 10.0, 50.0] {
        let r = limit_report(&p, &rg, t, 1e-3).unwrap();
        assert!(r.renewal_term_gap < prev, "t={t}: {r:?}");
        prev = r.renewal_term_gap;
        assert!(r.max_abs_gap <= r.renewal_term_gap + 1e-10);
        assert_eq!(r.first_term_bound, 4.0 / 3.0);
        assert!(r.first_term_max <= r.first_term_bound);
        if t == 50.0 {
            assert!(r.wasserstein < 1e-3 && r.within_tol);
            assert!(r.renewal_term_gap < 1e-3);
        }
    }
}

#[test]
fn eta_enters_through_rescaled_time_only() {
    let p2 = ModelParams::new(1.0, 2.0).unwrap();
    let rg = RenewalGrid::for_time(&p2, &SeriesConfig::default(), 1.0).unwrap();
    let z = uniform_grid(-1.0, 1.0, 101);
    let a = error_density_analytic(&p2, &rg, 4.0, &z).unwrap();
    let b = error_density_analytic(&ModelParams::new(1.0, 1.0).unwrap(), &rg, 1.0, &z).unwrap();
    assert_eq!(a.grid.f(), b.grid.f());
}
