//! Experiment configuration: defaults per experiment, `key = value` files and overrides.

use crate::error::{CliError, CliResult};
use exitgrid_core::AnchorMode;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Density,
    Tau,
    Limit,
    Simulate,
    Fig1,
    Fig2,
    Fig3,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::Density => "density",
            Self::Tau => "tau",
            Self::Limit => "limit",
            Self::Simulate => "simulate",
            Self::Fig1 => "fig1",
            Self::Fig2 => "fig2",
            Self::Fig3 => "fig3",
        }
    }
}

pub const DESK_PATHS: usize = 20_000;
pub const DESK_POINTS: usize = 100_001;
pub const PAPER_PATHS: usize = 50_000;
pub const PAPER_POINTS: usize = 200_001;

/// Keys accepted in config files and `--set`, with a one-line description each.
pub const KEYS: &[(&str, &str)] = &[
    ("sigma", "volatility of X = sigma W"),
    ("t", "evaluation time; also the end of the simulation grid"),
    ("etas", "comma-separated thresholds"),
    ("t_eval", "comma-separated times for fig3/simulate (must lie on the grid)"),
    ("paths", "number of simulated paths"),
    ("points", "grid points per path including t = 0"),
    ("seed", "base seed of the per-path random streams"),
    ("anchor", "grid | snap"),
    ("z_points", "z-grid size for densities in [-1, 1]"),
    ("tol", "Wasserstein tolerance for figure checks"),
    ("ladder", "comma-separated t/eta^2 values for the limit ladder"),
    ("times", "comma-separated times for the density table"),
    ("x_points", "x-grid size for the density table"),
    ("t_max", "upper end of the tau table, in units of eta^2/sigma^2"),
    ("t_points", "rows of the tau table"),
    ("stride", "keep every n-th path in simulate sample output"),
    ("out", "output directory"),
    ("svg", "true | false"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub sigma: f64,
    pub t: f64,
    pub etas: Vec<f64>,
    pub t_eval: Vec<f64>,
    pub paths: usize,
    pub points: usize,
    pub seed: u64,
    pub anchor: AnchorMode,
    pub z_points: usize,
    pub tol: f64,
    pub ladder: Vec<f64>,
    pub times: Vec<f64>,
    pub x_points: usize,
    pub t_max: f64,
    pub t_points: usize,
    pub stride: usize,
    pub out_dir: PathBuf,
    pub svg: bool,
    /// Not part of the echo: results never depend on it.
    pub workers: Option<usize>,
}

/// η ∈ {0.5, 0.75, …, 4.0}.
pub fn fig2_etas() -> Vec<f64> {
    (0..15).map(|i| 0.5 + 0.25 * i as f64).collect()
}

pub fn fig1_etas() -> Vec<f64> {
    vec![4.0, 3.25, 2.5, 2.0, 0.5]
}

pub fn fig3_etas() -> Vec<f64> {
    vec![0.5, 0.75, 1.0, 1.5, 2.25]
}

/// Fine points near zero for slope fits, then a coarse sweep to `t`.
pub fn fig3_times(t: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (1..=10).map(|k| 0.0005 * k as f64).collect();
    let coarse = (t / 0.01).round() as usize;
    v.extend((1..=coarse).map(|k| 0.01 * k as f64).filter(|&s| s > 0.005 + 1e-12));
    v
}

impl ExperimentConfig {
    pub fn defaults(experiment: Experiment, paper_scale: bool) -> Self {
        let (paths, points) = if paper_scale { (PAPER_PATHS, PAPER_POINTS) } else { (DESK_PATHS, DESK_POINTS) };
        let t = 0.5;
        let etas = match experiment {
            Experiment::Fig1 => fig1_etas(),
            Experiment::Fig2 | Experiment::Simulate => fig2_etas(),
            Experiment::Fig3 => fig3_etas(),
            Experiment::Limit => vec![0.5],
            Experiment::Density | Experiment::Tau => vec![1.0],
        };
        let t_eval = match experiment {
            Experiment::Fig3 => fig3_times(t),
            _ => vec![t],
        };
        Self {
            experiment,
            sigma: 1.0,
            t,
            etas,
            t_eval,
            paths,
            points,
            seed: 20_240_611,
            anchor: AnchorMode::GridValue,
            z_points: 401,
            tol: 0.02,
            ladder: vec![1.0, 2.0, 5.0, 10.0, 50.0],
            times: vec![0.001, 0.01, 0.1, 0.5, 1.0, 2.0],
            x_points: 41,
            t_max: 5.0,
            t_points: 501,
            stride: 10,
            out_dir: PathBuf::from("out"),
            svg: false,
            workers: None,
        }
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        let v = value.trim();
        match key.trim() {
            "sigma" => self.sigma = parse_f64(key, v)?,
            "t" => self.t = parse_f64(key, v)?,
            "etas" => self.etas = parse_list(key, v)?,
            "t_eval" => self.t_eval = parse_list(key, v)?,
            "paths" => self.paths = parse_usize(key, v)?,
            "points" => self.points = parse_usize(key, v)?,
            "seed" => self.seed = v.parse().map_err(|_| bad(key, v))?,
            "anchor" => {
                self.anchor = match v {
                    "grid" => AnchorMode::GridValue,
                    "snap" => AnchorMode::Snap,
                    _ => return Err(bad(key, v)),
                }
            }
            "z_points" => self.z_points = parse_usize(key, v)?,
            "tol" => self.tol = parse_f64(key, v)?,
            "ladder" => self.ladder = parse_list(key, v)?,
            "times" => self.times = parse_list(key, v)?,
            "x_points" => self.x_points = parse_usize(key, v)?,
            "t_max" => self.t_max = parse_f64(key, v)?,
            "t_points" => self.t_points = parse_usize(key, v)?,
            "stride" => self.stride = parse_usize(key, v)?,
            "out" => self.out_dir = PathBuf::from(v),
            "svg" => self.svg = v.parse().map_err(|_| bad(key, v))?,
            "workers" => self.workers = Some(parse_usize(key, v)?),
            other => return Err(CliError::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Reads a `key = value` file; `#` starts a comment.
    pub fn apply_file(&mut self, path: &Path) -> CliResult<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        self.apply_text(&text)
    }

    pub fn apply_text(&mut self, text: &str) -> CliResult<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", n + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.t / (self.points - 1) as f64
    }

    pub fn validate(&self) -> CliResult<()> {
        let fail = |m: String| Err(CliError::Config(m));
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return fail(format!("sigma must be positive, got {}", self.sigma));
        }
        if !(self.t > 0.0 && self.t.is_finite()) {
            return fail(format!("t must be positive, got {}", self.t));
        }
        if self.etas.is_empty() {
            return fail("etas must not be empty".into());
        }
        if let Some(e) = self.etas.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
            return fail(format!("eta must be positive, got {e}"));
        }
        if self.paths < 2 || self.points < 2 {
            return fail("paths and points must be at least 2".into());
        }
        if self.z_points < 3 || self.x_points < 2 || self.t_points < 2 {
            return fail("z_points must be >= 3, x_points and t_points >= 2".into());
        }
        if self.stride == 0 {
            return fail("stride must be at least 1".into());
        }
        if !(self.tol > 0.0) || !(self.t_max > 0.0) {
            return fail("tol and t_max must be positive".into());
        }
        if let Some(v) = self.ladder.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return fail(format!("ladder values must be positive, got {v}"));
        }
        if let Some(v) = self.times.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return fail(format!("density table times must be positive, got {v}"));
        }
        if matches!(self.workers, Some(0)) {
            return fail("workers must be at least 1".into());
        }
        if matches!(self.experiment, Experiment::Fig3 | Experiment::Simulate) {
            if self.t_eval.is_empty() {
                return fail("t_eval must not be empty".into());
            }
            let dt = self.dt();
            for &s in &self.t_eval {
                let pos = s / dt;
                if !(s > 0.0 && s <= self.t * (1.0 + 1e-12)) || (pos - pos.round()).abs() > 1e-6 {
                    return fail(format!("t_eval value {s} is not a grid time in (0, {}]", self.t));
                }
            }
        }
        Ok(())
    }

    /// Canonical `key=value` lines for every key that can affect results.
    pub fn echo(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let mut s = String::new();
        let _ = writeln!(s, "experiment={}", self.experiment.name());
        let _ = writeln!(s, "sigma={}", self.sigma);
        let _ = writeln!(s, "t={}", self.t);
        let _ = writeln!(s, "etas={}", list(&self.etas));
        let _ = writeln!(s, "t_eval={}", list(&self.t_eval));
        let _ = writeln!(s, "paths={}", self.paths);
        let _ = writeln!(s, "points={}", self.points);
        let _ = writeln!(s, "seed={}", self.seed);
        let anchor = match self.anchor {
            AnchorMode::GridValue => "grid",
            AnchorMode::Snap => "snap",
        };
        let _ = writeln!(s, "anchor={anchor}");
        let _ = writeln!(s, "z_points={}", self.z_points);
        let _ = writeln!(s, "tol={}", self.tol);
        let _ = writeln!(s, "ladder={}", list(&self.ladder));
        let _ = writeln!(s, "times={}", list(&self.times));
        let _ = writeln!(s, "x_points={}", self.x_points);
        let _ = writeln!(s, "t_max={}", self.t_max);
        let _ = writeln!(s, "t_points={}", self.t_points);
        let _ = writeln!(s, "stride={}", self.stride);
        s
    }
}

fn bad(key: &str, value: &str) -> CliError {
    CliError::Config(format!("invalid value `{value}` for `{key}`"))
}

fn parse_f64(key: &str, v: &str) -> CliResult<f64> {
    v.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| bad(key, v))
}

fn parse_usize(key: &str, v: &str) -> CliResult<usize> {
    v.parse().map_err(|_| bad(key, v))
}

pub fn parse_list(key: &str, v: &str) -> CliResult<Vec<f64>> {
    v.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse_f64(key, s.trim())).collect()
}
