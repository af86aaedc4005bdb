//! Monte Carlo engine for the first-exit discretization scheme.
//!
//! Each path is drawn from its own ChaCha8 stream (`seed`, stream = path
//! index), discretized for every threshold, reduced to a small record and
//! dropped. Path records are gathered in path order, so batch results do not
//! depend on how many worker threads produced them.

use crate::distributions::EmpiricalSample;
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

/// Simulation protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct PathConfig {
    pub sigma: f64,
    pub t_end: f64,
    pub n_steps: usize,
    pub n_paths: usize,
    pub seed: u64,
    pub etas: Vec<f64>,
}

impl PathConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidParams(format!("sigma must be >= 0, got {}", self.sigma)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidParams(format!("t_end must be positive, got {}", self.t_end)));
        }
        if self.n_steps == 0 || self.n_paths == 0 {
            return Err(Error::InvalidParams("n_steps and n_paths must be at least 1".into()));
        }
        if let Some(e) = self.etas.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
            return Err(Error::InvalidParams(format!("eta must be positive, got {e}")));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.t_end / self.n_steps as f64
    }

    /// Grid index of time `t`; `t` must coincide with a grid point.
    pub fn grid_index(&self, t: f64) -> Result<usize> {
        let pos = t / self.dt();
        let i = pos.round();
        if !(t >= 0.0) || i > self.n_steps as f64 || (pos - i).abs() > 1e-6 {
            return Err(Error::InvalidDomain(format!("t = {t} is not on the simulation grid")));
        }
        Ok(i as usize)
    }
}

/// Where the new anchor is placed when a crossing is detected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AnchorMode {
    /// Anchor = path value at the first grid point with `|X - anchor| >= η`.
    #[default]
    GridValue,
    /// Anchor = previous anchor `± η`, removing the grid overshoot.
    Snap,
}

fn path_rng(seed: u64, path_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path_index);
    rng
}

/// Fills `buf` with `X_0 = 0, X_1, …, X_n` for path `path_index`.
pub fn generate_path_into(cfg: &PathConfig, path_index: u64, buf: &mut Vec<f64>) {
    let mut rng = path_rng(cfg.seed, path_index);
    let scale = cfg.sigma * cfg.dt().sqrt();
    buf.clear();
    buf.reserve(cfg.n_steps + 1);
    let mut x = 0.0;
    buf.push(x);
    for _ in 0..cfg.n_steps {
        let z: f64 = rng.sample(StandardNormal);
        x += scale * z;
        buf.push(x);
    }
}

/// One simulated trajectory on the uniform grid.
pub fn generate_path(cfg: &PathConfig, path_index: u64) -> Result<Vec<f64>> {
    cfg.validate()?;
    let mut buf = Vec::new();
    generate_path_into(cfg, path_index, &mut buf);
    Ok(buf)
}

/// Crossing record of one path for one threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizationTrace {
    pub crossing_indices: Vec<usize>,
    pub anchor_values: Vec<f64>,
    /// `X_{t_end} - X_{φ(t_end)}`.
    pub terminal_error: f64,
    pub renewal_count: usize,
}

impl DiscretizationTrace {
    /// Anchor in force at grid index `i` (0 before the first crossing).
    pub fn anchor_at(&self, i: usize) -> f64 {
        let k = self.crossing_indices.partition_point(|&c| c <= i);
        if k == 0 {
            0.0
        } else {
            self.anchor_values[k - 1]
        }
    }
}

/// Scans a path and records every first grid index with `|X - anchor| >= η`.
pub fn discretize(path: &[f64], eta: f64, mode: AnchorMode) -> DiscretizationTrace {
    let mut crossing_indices = Vec::new();
    let mut anchor_values = Vec::new();
    let mut anchor = path.first().copied().unwrap_or(0.0);
    for (i, &x) in path.iter().enumerate().skip(1) {
        let d = x - anchor;
        if d.abs() >= eta {
            anchor = match mode {
                AnchorMode::GridValue => x,
                AnchorMode::Snap => anchor + eta.copysign(d),
            };
            crossing_indices.push(i);
            anchor_values.push(anchor);
        }
    }
    let last = path.last().copied().unwrap_or(0.0);
    let renewal_count = crossing_indices.len();
    DiscretizationTrace { crossing_indices, anchor_values, terminal_error: last - anchor, renewal_count }
}

const BLOCK: usize = 64;

/// Per-block minima and maxima of a path, for skipping quiet stretches.
struct BlockRange {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl BlockRange {
    fn new(path: &[f64]) -> Self {
        let nb = path.len().div_ceil(BLOCK);
        let mut lo = Vec::with_capacity(nb);
        let mut hi = Vec::with_capacity(nb);
        for chunk in path.chunks(BLOCK) {
            let (mut a, mut b) = (f64::INFINITY, f64::NEG_INFINITY);
            for &x in chunk {
                a = a.min(x);
                b = b.max(x);
            }
            lo.push(a);
            hi.push(b);
        }
        Self { lo, hi }
    }
}

/// Same result as [`discretize`], skipping whole blocks that stay inside the band.
fn discretize_fast(path: &[f64], ranges: &BlockRange, eta: f64, mode: AnchorMode) -> DiscretizationTrace {
    let mut crossing_indices = Vec::new();
    let mut anchor_values = Vec::new();
    let mut anchor = path[0];
    let n = path.len();
    let mut i = 1;
    while i < n {
        if i % BLOCK == 0 {
            let b = i / BLOCK;
            if ranges.hi[b] - anchor < eta && anchor - ranges.lo[b] < eta {
                i += BLOCK;
                continue;
            }
        }
        let d = path[i] - anchor;
        if d.abs() >= eta {
            anchor = match mode {
                AnchorMode::GridValue => path[i],
                AnchorMode::Snap => anchor + eta.copysign(d),
            };
            crossing_indices.push(i);
            anchor_values.push(anchor);
        }
        i += 1;
    }
    let renewal_count = crossing_indices.len();
    DiscretizationTrace { crossing_indices, anchor_values, terminal_error: path[n - 1] - anchor, renewal_count }
}

/// Reduced record of one path for one threshold.
#[derive(Debug, Clone, PartialEq)]
struct PathEtaRecord {
    z: Vec<f64>,
    renewals: usize,
    plus: usize,
    minus: usize,
    max_overshoot: f64,
    min_gap: usize,
}

fn reduce(path: &[f64], trace: &DiscretizationTrace, eta: f64, t_idx: &[usize]) -> PathEtaRecord {
    let z = t_idx.iter().map(|&i| (path[i] - trace.anchor_at(i)) / eta).collect();
    let (mut plus, mut minus, mut max_overshoot) = (0, 0, 0.0f64);
    let mut prev_anchor = 0.0;
    let mut prev_idx = 0usize;
    let mut min_gap = usize::MAX;
    for (&c, &a) in trace.crossing_indices.iter().zip(&trace.anchor_values) {
        // overshoot measured against the grid value, whatever the anchor mode
        let jump = path[c] - prev_anchor;
        if jump > 0.0 {
            plus += 1;
        } else {
            minus += 1;
        }
        max_overshoot = max_overshoot.max(jump.abs() - eta);
        min_gap = min_gap.min(c - prev_idx);
        prev_anchor = a;
        prev_idx = c;
    }
    PathEtaRecord { z, renewals: trace.renewal_count, plus, minus, max_overshoot, min_gap }
}

/// Batch statistics for one threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaResult {
    pub eta: f64,
    /// `Z_t/η` samples, one per entry of [`Batch::t_eval`], sorted.
    pub samples: Vec<EmpiricalSample>,
    /// `N(t_end)` per path, in path order.
    pub renewal_counts: Vec<usize>,
    pub plus_rewards: usize,
    pub minus_rewards: usize,
    /// Largest `|X_{t_i} - X_{t_{i-1}}| - η` over all crossings.
    pub max_overshoot: f64,
    /// Smallest number of grid steps between consecutive crossings.
    pub min_gap_steps: usize,
}

impl EtaResult {
    pub fn mean_renewals(&self) -> f64 {
        self.renewal_counts.iter().sum::<usize>() as f64 / self.renewal_counts.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub config: PathConfig,
    pub t_eval: Vec<f64>,
    pub mode: AnchorMode,
    pub per_eta: Vec<EtaResult>,
}

impl Batch {
    pub fn eta(&self, eta: f64) -> Option<&EtaResult> {
        self.per_eta.iter().find(|r| (r.eta - eta).abs() < 1e-12)
    }

    pub fn t_position(&self, t: f64) -> Option<usize> {
        self.t_eval.iter().position(|&s| (s - t).abs() < 1e-12)
    }
}

/// Paths per parallel work unit.
const CHUNK: usize = 256;

/// Simulates `cfg.n_paths` paths and collects `Z_t/η` at each `t` in `t_eval` for every η.
pub fn simulate(cfg: &PathConfig, t_eval: &[f64], mode: AnchorMode) -> Result<Batch> {
    cfg.validate()?;
    if cfg.etas.is_empty() {
        return Err(Error::InvalidParams("no thresholds to simulate".into()));
    }
    let t_idx = t_eval.iter().map(|&t| cfg.grid_index(t)).collect::<Result<Vec<_>>>()?;
    let n_chunks = cfg.n_paths.div_ceil(CHUNK);
    let chunks: Vec<Vec<Vec<PathEtaRecord>>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut buf = Vec::new();
            let end = ((c + 1) * CHUNK).min(cfg.n_paths);
            (c * CHUNK..end)
                .map(|p| {
                    generate_path_into(cfg, p as u64, &mut buf);
                    let ranges = BlockRange::new(&buf);
                    cfg.etas
                        .iter()
                        .map(|&eta| {
                            let trace = discretize_fast(&buf, &ranges, eta, mode);
                            reduce(&buf, &trace, eta, &t_idx)
                        })
                        .collect()
                })
                .collect()
        })
        .collect();

    let mut per_eta = Vec::with_capacity(cfg.etas.len());
    for (k, &eta) in cfg.etas.iter().enumerate() {
        let mut cols = vec![Vec::with_capacity(cfg.n_paths); t_idx.len()];
        let mut res = EtaResult {
            eta,
            samples: Vec::new(),
            renewal_counts: Vec::with_capacity(cfg.n_paths),
            plus_rewards: 0,
            minus_rewards: 0,
            max_overshoot: 0.0,
            min_gap_steps: usize::MAX,
        };
        for rec in chunks.iter().flatten().map(|path| &path[k]) {
            for (col, &z) in cols.iter_mut().zip(&rec.z) {
                col.push(z);
            }
            res.renewal_counts.push(rec.renewals);
            res.plus_rewards += rec.plus;
            res.minus_rewards += rec.minus;
            res.max_overshoot = res.max_overshoot.max(rec.max_overshoot);
            res.min_gap_steps = res.min_gap_steps.min(rec.min_gap);
        }
        res.samples = cols.into_iter().map(EmpiricalSample::new).collect::<Result<_>>()?;
        per_eta.push(res);
    }
    Ok(Batch { config: cfg.clone(), t_eval: t_eval.to_vec(), mode, per_eta })
}

/// `Z_t/η` samples for a single threshold, keyed by evaluation time.
pub fn collect_errors(cfg: &PathConfig, eta: f64, t_eval: &[f64]) -> Result<Vec<(f64, EmpiricalSample)>> {
    let single = PathConfig { etas: vec![eta], ..cfg.clone() };
    let batch = simulate(&single, t_eval, AnchorMode::GridValue)?;
    let res = batch.per_eta.into_iter().next().expect("one eta requested");
    Ok(t_eval.iter().copied().zip(res.samples).collect())
}

/// Exit times read off simulated paths (first grid index with `|X| >= η`),
/// for validating the analytic exit law. `None` marks paths still inside the
/// band at `t_end`.
pub fn simulated_exit_times(cfg: &PathConfig, eta: f64) -> Result<Vec<Option<f64>>> {
    cfg.validate()?;
    let dt = cfg.dt();
    let n_chunks = cfg.n_paths.div_ceil(CHUNK);
    let out: Vec<Vec<Option<f64>>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut buf = Vec::new();
            let end = ((c + 1) * CHUNK).min(cfg.n_paths);
            (c * CHUNK..end)
                .map(|p| {
                    generate_path_into(cfg, p as u64, &mut buf);
                    buf.iter().position(|x| x.abs() >= eta).map(|i| i as f64 * dt)
                })
                .collect()
        })
        .collect();
    Ok(out.into_iter().flatten().collect())
}
