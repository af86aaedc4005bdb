//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use exitgrid_cli::config::{fig2_etas, fig3_etas, fig3_times};
use exitgrid_cli::experiments::{fig2_rows, fig3_rows, initial_slopes, run_batch, sign_changes};
use exitgrid_cli::{execute, Experiment, ExperimentConfig};
use exitgrid_core::distributions::{uniform_grid, ReferenceLaw, TRIANGULAR_VARIANCE};
use exitgrid_core::quadrature::integrate;
use exitgrid_core::renewal::{limit_report, solve_renewal_density, DEFAULT_STEP};
use exitgrid_core::{
    error_density_analytic, eval_p_fourier, eval_p_gaussian, integrate_p_over_time, wasserstein1, Batch,
    FirstPassageLaw, ModelParams, RenewalGrid, SeriesConfig,
};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

type Verdict = (bool, String);

fn within(elapsed: Duration, limit_secs: f64) -> (bool, String) {
    let s = elapsed.as_secs_f64();
    (s < limit_secs, format!("{s:.2}s of {limit_secs}s"))
}

fn parseval() -> Verdict {
    let start = Instant::now();
    let p = ModelParams::new(1.0, 1.0).unwrap();
    let cfg = SeriesConfig::default();
    let mut worst = 0.0f64;
    for i in -9..=9 {
        let x = i as f64 / 10.0;
        let v = integrate_p_over_time(&p, &cfg, x, 40.0, 1e-8).unwrap();
        worst = worst.max((v - (1.0 - f64::abs(x))).abs());
    }
    let (fast, t) = within(start.elapsed(), 10.0);
    (worst < 1e-6 && fast, format!("max error {worst:.2e} (< 1e-6), {t}"))
}

fn representations() -> Verdict {
    let start = Instant::now();
    let cfg = SeriesConfig::default();
    let mut worst = 0.0f64;
    for &(sigma, eta) in &[(1.0, 1.0), (1.0, 0.5), (0.8, 2.5)] {
        let p = ModelParams::new(sigma, eta).unwrap();
        let scale = p.time_scale();
        for i in 0..50 {
            let t = 0.001 * (1e5f64).powf(i as f64 / 49.0) * scale;
            for j in 0..41 {
                let x = -eta + 2.0 * eta * j as f64 / 40.0;
                let a = eval_p_fourier(&p, &cfg, t, x).unwrap();
                let b = eval_p_gaussian(&p, &cfg, t, x).unwrap();
                worst = worst.max((a - b).abs());
            }
        }
    }
    let (fast, t) = within(start.elapsed(), 5.0);
    (worst < 1e-10 && fast, format!("max |fourier - images| {worst:.2e} (< 1e-10), {t}"))
}

fn mean_exit_time() -> Verdict {
    let start = Instant::now();
    let (sigma, eta) = (1.0, 1.0);
    let law = FirstPassageLaw::with_defaults(ModelParams::new(sigma, eta).unwrap());
    let target = eta * eta / (sigma * sigma);
    let quad = integrate(|t| t * law.density(t).unwrap(), 0.0, 80.0 * target, 1e-12, 2000).unwrap().value;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let n = 100_000;
    let xs: Vec<f64> = (0..n).map(|_| law.sample(&mut rng).unwrap()).collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    let se = sd / (n as f64).sqrt();
    let (fast, t) = within(start.elapsed(), 30.0);
    let ok = (quad - target).abs() < 1e-6 && (mean - target).abs() < 3.0 * se && fast;
    (ok, format!("quadrature {quad:.9} vs {target}, MC mean {mean:.5} ({:.2} SE), {t}", (mean - target) / se))
}

fn density_consistency() -> Verdict {
    let law = FirstPassageLaw::with_defaults(ModelParams::new(1.0, 1.0).unwrap());
    let scale = law.mean();
    let d = 1e-4 * scale;
    let mut worst = 0.0f64;
    for i in 0..=500 {
        let t = (0.05 + (5.0 - 0.05) * i as f64 / 500.0) * scale;
        let fd = -(law.survival(t + d).unwrap() - law.survival(t - d).unwrap()) / (2.0 * d);
        worst = worst.max((fd - law.density(t).unwrap()).abs());
    }
    let mass = integrate(|t| law.density(t).unwrap(), 0.0, 60.0 * scale, 1e-12, 2000).unwrap().value;
    let ok = worst < 1e-6 && (mass - 1.0).abs() < 1e-8;
    (ok, format!("max |f + dS/dt| {worst:.2e} (< 1e-6), mass - 1 = {:.2e}", mass - 1.0))
}

/// Desk-scale batch shared by criteria 5 to 8.
fn desk_batch() -> (ExperimentConfig, Batch, Duration) {
    let mut cfg = ExperimentConfig::defaults(Experiment::Fig2, false);
    cfg.etas = fig2_etas();
    cfg.t_eval = fig3_times(cfg.t);
    let start = Instant::now();
    let batch = run_batch(&cfg, &cfg.etas, &cfg.t_eval).unwrap();
    (cfg, batch, start.elapsed())
}

fn triangular_limit(cfg: &ExperimentConfig, batch: &Batch, sim_time: Duration) -> Verdict {
    let start = Instant::now();
    let (eta, t) = (0.5, 0.5);
    let p = ModelParams::new(cfg.sigma, eta).unwrap();
    let rg = RenewalGrid::for_time(&p, &SeriesConfig::default(), t / (eta * eta)).unwrap();
    let analytic = error_density_analytic(&p, &rg, t, &uniform_grid(-1.0, 1.0, 401)).unwrap();
    let k = batch.t_position(t).unwrap();
    let empirical = &batch.eta(eta).unwrap().samples[k];
    let a = wasserstein1(&analytic.grid, &ReferenceLaw::Triangular).unwrap();
    let e = wasserstein1(empirical, &ReferenceLaw::Triangular).unwrap();
    let ae = wasserstein1(&analytic.grid, empirical).unwrap();
    let (fast, time) = within(start.elapsed() + sim_time, 300.0);
    let ok = a < 0.02 && e < 0.02 && ae < 0.01 && empirical.len() >= 20_000 && fast;
    (ok, format!("d_W analytic-tri {a:.2e}, empirical-tri {e:.2e}, analytic-empirical {ae:.2e}, n = {}, {time}", empirical.len()))
}

fn normal_regime(batch: &Batch) -> Verdict {
    let rows = fig2_rows(batch, 0.5).unwrap();
    let r = rows.iter().find(|r| r.eta == 4.0).unwrap();
    let ok = r.d_w_norm < 0.02 && r.d_w_tri > r.d_w_norm;
    (ok, format!("eta = 4: d_W to normal {:.2e} (< 0.02), to triangular {:.3}", r.d_w_norm, r.d_w_tri))
}

fn crossover(batch: &Batch) -> Verdict {
    let rows = fig2_rows(batch, 0.5).unwrap();
    let changes = sign_changes(&rows);
    let ok = changes.len() == 1 && changes[0].0 >= 1.0 && changes[0].1 <= 2.5;
    (ok, format!("sign changes in {changes:?} (need exactly one inside [1.0, 2.5])"))
}

fn variance_curve(batch: &Batch) -> Verdict {
    let wanted = fig3_etas();
    let rows: Vec<_> = fig3_rows(batch).into_iter().filter(|r| wanted.contains(&r.eta)).collect();
    let plateau = rows.iter().find(|r| r.eta == 0.5 && (r.t - 0.5).abs() < 1e-12).unwrap().variance;
    let slopes = initial_slopes(&rows, 5);
    let worst = slopes.iter().map(|s| s.rel_err).fold(0.0, f64::max);
    let ok = (plateau - TRIANGULAR_VARIANCE).abs() < 0.01 && worst < 0.1 && slopes.len() == wanted.len();
    (ok, format!("Var at eta=0.5, t=0.5: {plateau:.4} (1/6 +- 0.01), worst slope rel. error {worst:.3} (< 0.1)"))
}

fn key_renewal() -> Verdict {
    let p = ModelParams::new(1.0, 1.0).unwrap();
    let rg = RenewalGrid::for_time(&p, &SeriesConfig::default(), 50.0).unwrap();
    let gaps: Vec<f64> = [1.0, 2.0, 5.0, 10.0, 50.0]
        .iter()
        .map(|&t| limit_report(&p, &rg, t, 1e-3).unwrap().renewal_term_gap)
        .collect();
    let monotone = gaps.windows(2).all(|w| w[1] < w[0]);
    let ok = monotone && gaps[4] < 1e-3;
    let shown: Vec<String> = gaps.iter().map(|g| format!("{g:.2e}")).collect();
    (ok, format!("sup gaps over T = 1, 2, 5, 10, 50: [{}]", shown.join(", ")))
}

/// `Σ_{k≤50} f^{*k}` by repeated trapezoid convolution on a grid of step `h`.
fn neumann(law: &FirstPassageLaw, h: f64, n: usize) -> Vec<f64> {
    let f: Vec<f64> = (0..=n).map(|i| law.density(i as f64 * h).unwrap()).collect();
    let mut power = f.clone();
    let mut total = f.clone();
    for _ in 1..50 {
        let next: Vec<f64> = (0..=n)
            .map(|i| {
                if i == 0 {
                    return 0.0;
                }
                let inner: f64 = (1..i).map(|j| power[j] * f[i - j]).sum();
                h * (inner + 0.5 * (power[0] * f[i] + power[i] * f[0]))
            })
            .collect();
        total.iter_mut().zip(&next).for_each(|(t, v)| *t += v);
        power = next;
    }
    total
}

fn renewal_density() -> Verdict {
    let law = FirstPassageLaw::with_defaults(ModelParams::new(1.0, 1.0).unwrap());
    let rg = solve_renewal_density(&law, DEFAULT_STEP, 10.0).unwrap();
    let brute = neumann(&law, DEFAULT_STEP / 2.0, 2 * (rg.values().len() - 1));
    let gap = rg.values().iter().enumerate().map(|(i, m)| (m - brute[2 * i]).abs()).fold(0.0, f64::max);
    let mut limits = Vec::new();
    let mut ok = gap < 1e-4;
    for &(sigma, eta) in &[(1.0, 1.0), (1.0, 0.5), (1.5, 1.0)] {
        let law = FirstPassageLaw::with_defaults(ModelParams::new(sigma, eta).unwrap());
        let scale = law.mean();
        let rg = solve_renewal_density(&law, DEFAULT_STEP * scale, 20.0).unwrap();
        let m20 = rg.m_at(20.0);
        let target = sigma * sigma / (eta * eta);
        ok &= (m20 - target).abs() < 0.01;
        limits.push(format!("m(20) = {m20:.6} vs {target}"));
    }
    (ok, format!("Volterra vs series {gap:.2e} (< 1e-4); {}", limits.join(", ")))
}

fn determinism() -> Verdict {
    let mut details = Vec::new();
    let mut ok = true;
    for exp in [Experiment::Fig2, Experiment::Simulate, Experiment::Fig3] {
        let mut outputs = Vec::new();
        for workers in [1usize, 4, 8] {
            let dir = tempfile::tempdir().unwrap();
            let mut cfg = ExperimentConfig::defaults(exp, false);
            cfg.paths = 700;
            cfg.points = 5001;
            cfg.etas = vec![0.5, 1.0, 2.0];
            cfg.t_eval = vec![0.01, 0.25, 0.5];
            cfg.out_dir = dir.path().to_path_buf();
            cfg.workers = Some(workers);
            let (_, files) = execute(&cfg).unwrap();
            let mut bytes: Vec<(String, Vec<u8>)> = files
                .iter()
                .filter(|f| f.extension().is_some_and(|e| e == "csv"))
                .map(|f| (f.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(f).unwrap()))
                .collect();
            bytes.sort();
            outputs.push(bytes);
        }
        let same = outputs.windows(2).all(|w| w[0] == w[1]);
        ok &= same && !outputs[0].is_empty();
        details.push(format!("{}: {} files {}", exp.name(), outputs[0].len(), if same { "identical" } else { "DIFFER" }));
    }
    (ok, format!("workers 1/4/8, {}", details.join("; ")))
}

fn run_one(id: usize, name: &str, f: impl FnOnce() -> Verdict) -> bool {
    let start = Instant::now();
    let (passed, detail) = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(v) => v,
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (false, format!("panicked: {msg}"))
        }
    };
    println!(
        "{} [{id:>2}] {name}: {detail} [{:.1}s]",
        if passed { "PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64()
    );
    passed
}

fn main() {
    // libtest flags such as --nocapture are accepted and ignored
    let mut all = true;
    all &= run_one(1, "Parseval identity", parseval);
    all &= run_one(2, "Fourier and image representations agree", representations);
    all &= run_one(3, "Mean exit time", mean_exit_time);
    all &= run_one(4, "Exit density is minus the survival derivative", density_consistency);

    let shared = catch_unwind(desk_batch);
    match &shared {
        Ok((cfg, batch, took)) => {
            println!(
                "     desk batch: {} paths x {} points x {} etas in {:.1}s",
                cfg.paths,
                cfg.points,
                cfg.etas.len(),
                took.as_secs_f64()
            );
            all &= run_one(5, "Triangular limit, analytic and simulated", || triangular_limit(cfg, batch, *took));
            all &= run_one(6, "Normal regime at eta = 4", || normal_regime(batch));
            all &= run_one(7, "Single crossover of the distance curves", || crossover(batch));
            all &= run_one(8, "Variance curve plateau and initial slopes", || variance_curve(batch));
        }
        Err(_) => {
            for (id, name) in [(5, "Triangular limit"), (6, "Normal regime"), (7, "Crossover"), (8, "Variance curve")] {
                println!("FAIL [{id:>2}] {name}: desk batch failed");
            }
            all = false;
        }
    }

    all &= run_one(9, "Renewal term converges to the triangle", key_renewal);
    all &= run_one(10, "Renewal density against the convolution series", renewal_density);
    all &= run_one(11, "Byte-identical CSV across worker counts", determinism);

    if !all {
        std::process::exit(1);
    }
}
