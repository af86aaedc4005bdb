//! Reference laws, empirical samples, Gaussian KDE and the Wasserstein-1 distance.

use crate::error::{Error, Result};
use crate::quadrature;
use crate::special::{std_normal_cdf, std_normal_pdf};
use rayon::prelude::*;

/// A one-dimensional law exposed through its CDF.
///
/// Between consecutive [`breakpoints`](Distribution1d::breakpoints) the CDF
/// must be smooth (C²); jumps and kinks may only sit on breakpoints.
pub trait Distribution1d {
    fn cdf(&self, x: f64) -> f64;

    /// Interval outside which the CDF is 0 (left) or 1 (right), up to
    /// negligible tail mass. `None` means the tails are not integrable.
    fn support(&self) -> Option<(f64, f64)>;

    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

impl<D: Distribution1d + ?Sized> Distribution1d for &D {
    fn cdf(&self, x: f64) -> f64 {
        (**self).cdf(x)
    }
    fn support(&self) -> Option<(f64, f64)> {
        (**self).support()
    }
    fn breakpoints(&self) -> Vec<f64> {
        (**self).breakpoints()
    }
}

/// `(1 - |z|)⁺`.
pub fn triangular_pdf(z: f64) -> f64 {
    (1.0 - z.abs()).max(0.0)
}

pub fn triangular_cdf(z: f64) -> f64 {
    if z <= -1.0 {
        0.0
    } else if z <= 0.0 {
        0.5 * (1.0 + z) * (1.0 + z)
    } else if z < 1.0 {
        1.0 - 0.5 * (1.0 - z) * (1.0 - z)
    } else {
        1.0
    }
}

pub fn triangular_quantile(p: f64) -> f64 {
    let p = p.clamp(0.0, 1.0);
    if p <= 0.5 {
        -1.0 + (2.0 * p).sqrt()
    } else {
        1.0 - (2.0 * (1.0 - p)).sqrt()
    }
}

/// Variance of the triangular law on `[-1, 1]`.
pub const TRIANGULAR_VARIANCE: f64 = 1.0 / 6.0;

/// Standard deviation `σ√t/η` of the normal approximation to `Z_t/η`.
pub fn scaled_normal_sd(sigma: f64, t: f64, eta: f64) -> f64 {
    sigma * t.sqrt() / eta
}

/// `(η/σ√t) φ(z η/σ√t)`.
pub fn scaled_normal_pdf(z: f64, sigma: f64, t: f64, eta: f64) -> f64 {
    let sd = scaled_normal_sd(sigma, t, eta);
    std_normal_pdf(z / sd) / sd
}

/// Limit and small-`η`-free reference laws for `Z_t/η`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReferenceLaw {
    Triangular,
    /// Centred normal with sd `σ√t/η`, untruncated.
    ScaledNormal { sigma: f64, t: f64, eta: f64 },
}

impl ReferenceLaw {
    pub fn scaled_normal(sigma: f64, t: f64, eta: f64) -> Result<Self> {
        if !(sigma > 0.0 && t > 0.0 && eta > 0.0) {
            return Err(Error::InvalidParams(format!(
                "scaled normal needs sigma, t, eta > 0 (got {sigma}, {t}, {eta})"
            )));
        }
        Ok(Self::ScaledNormal { sigma, t, eta })
    }

    pub fn pdf(&self, z: f64) -> f64 {
        match *self {
            Self::Triangular => triangular_pdf(z),
            Self::ScaledNormal { sigma, t, eta } => scaled_normal_pdf(z, sigma, t, eta),
        }
    }

    pub fn sd(&self) -> f64 {
        match *self {
            Self::Triangular => TRIANGULAR_VARIANCE.sqrt(),
            Self::ScaledNormal { sigma, t, eta } => scaled_normal_sd(sigma, t, eta),
        }
    }
}

impl Distribution1d for ReferenceLaw {
    fn cdf(&self, x: f64) -> f64 {
        match *self {
            Self::Triangular => triangular_cdf(x),
            Self::ScaledNormal { .. } => std_normal_cdf(x / self.sd()),
        }
    }

    fn support(&self) -> Option<(f64, f64)> {
        match *self {
            Self::Triangular => Some((-1.0, 1.0)),
            // tail contribution to ∫|F - G| beyond 12 sd is below 1e-33 sd
            Self::ScaledNormal { .. } => Some((-12.0 * self.sd(), 12.0 * self.sd())),
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match *self {
            Self::Triangular => vec![-1.0, 0.0, 1.0],
            Self::ScaledNormal { .. } => Vec::new(),
        }
    }
}

/// Sorted batch of real observations.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSample {
    values: Vec<f64>,
}

impl EmpiricalSample {
    /// Sorts the observations; NaNs are rejected.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::DegenerateSample("sample contains NaN".into()));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        let n = self.values.len() as f64;
        let m = self.mean();
        self.values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0)
    }

    /// Standard error of [`variance`](Self::variance), from the fourth central moment.
    pub fn variance_std_error(&self) -> f64 {
        let n = self.values.len() as f64;
        let m = self.mean();
        let m4 = self.values.iter().map(|v| (v - m).powi(4)).sum::<f64>() / n;
        let s2 = self.variance();
        ((m4 - s2 * s2 * (n - 3.0) / (n - 1.0)) / n).max(0.0).sqrt()
    }

    pub fn sd(&self) -> f64 {
        self.variance().sqrt()
    }

    pub fn min(&self) -> Option<f64> {
        self.values.first().copied()
    }

    pub fn max(&self) -> Option<f64> {
        self.values.last().copied()
    }
}

impl Distribution1d for EmpiricalSample {
    fn cdf(&self, x: f64) -> f64 {
        self.values.partition_point(|&v| v <= x) as f64 / self.values.len() as f64
    }

    fn support(&self) -> Option<(f64, f64)> {
        Some((*self.values.first()?, *self.values.last()?))
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut b = self.values.clone();
        b.dedup();
        b
    }
}

/// Tabulated function on a uniform abscissa.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    x: Vec<f64>,
    f: Vec<f64>,
    /// Running trapezoid integral, `cum[i] = ∫_{x_0}^{x_i} f`.
    cum: Vec<f64>,
}

/// `n` equally spaced points from `a` to `b` inclusive.
pub fn uniform_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && b > a, "uniform_grid needs n >= 2 and b > a");
    let dx = (b - a) / (n - 1) as f64;
    (0..n).map(|i| if i == n - 1 { b } else { a + i as f64 * dx }).collect()
}

impl DensityGrid {
    pub fn new(x: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        if x.len() < 2 || x.len() != f.len() {
            return Err(Error::InvalidParams(format!(
                "density grid needs >= 2 matching points (got {} abscissae, {} values)",
                x.len(),
                f.len()
            )));
        }
        let dx = (x[x.len() - 1] - x[0]) / (x.len() - 1) as f64;
        let uniform = x.windows(2).all(|w| w[1] > w[0] && ((w[1] - w[0]) - dx).abs() <= 1e-9 * dx.abs().max(1.0));
        if !(dx > 0.0) || !uniform {
            return Err(Error::InvalidParams("abscissae must be strictly increasing and uniform".into()));
        }
        if f.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidParams("ordinates must be finite and nonnegative".into()));
        }
        let mut cum = Vec::with_capacity(x.len());
        cum.push(0.0);
        for i in 1..x.len() {
            cum.push(cum[i - 1] + 0.5 * (x[i] - x[i - 1]) * (f[i] + f[i - 1]));
        }
        Ok(Self { x, f, cum })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn f(&self) -> &[f64] {
        &self.f
    }

    pub fn step(&self) -> f64 {
        self.x[1] - self.x[0]
    }

    /// Trapezoid mass.
    pub fn mass(&self) -> f64 {
        *self.cum.last().expect("grid is nonempty")
    }

    /// Linear interpolation, zero outside the grid.
    pub fn value_at(&self, x: f64) -> f64 {
        if x < self.x[0] || x > self.x[self.x.len() - 1] {
            return 0.0;
        }
        let i = (((x - self.x[0]) / self.step()) as usize).min(self.x.len() - 2);
        let w = (x - self.x[i]) / (self.x[i + 1] - self.x[i]);
        self.f[i] * (1.0 - w) + self.f[i + 1] * w
    }

    /// `∫_{x_0}^{x}` of the linear interpolant (unnormalized).
    pub fn integral_to(&self, x: f64) -> f64 {
        let n = self.x.len();
        if x <= self.x[0] {
            return 0.0;
        }
        if x >= self.x[n - 1] {
            return self.mass();
        }
        let i = (((x - self.x[0]) / self.step()) as usize).min(n - 2);
        let d = x - self.x[i];
        let slope = (self.f[i + 1] - self.f[i]) / (self.x[i + 1] - self.x[i]);
        self.cum[i] + self.f[i] * d + 0.5 * slope * d * d
    }

    /// Sum of absolute increments; a smoothness measure.
    pub fn total_variation(&self) -> f64 {
        self.f.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
    }

    /// Mean and variance of the normalized interpolant, by trapezoid rule.
    pub fn moments(&self) -> (f64, f64) {
        let h = self.step();
        let trap = |g: &dyn Fn(f64) -> f64| {
            let n = self.x.len();
            let mut s = 0.0;
            for i in 0..n {
                let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                s += w * g(self.x[i]) * self.f[i];
            }
            s * h
        };
        let m0 = self.mass();
        let m1 = trap(&|x| x) / m0;
        let m2 = trap(&|x| x * x) / m0;
        (m1, m2 - m1 * m1)
    }
}

/// CDF of the grid interpolant, normalized by its trapezoid mass.
impl Distribution1d for DensityGrid {
    fn cdf(&self, x: f64) -> f64 {
        self.integral_to(x) / self.mass()
    }

    fn support(&self) -> Option<(f64, f64)> {
        Some((self.x[0], self.x[self.x.len() - 1]))
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.x.clone()
    }
}

/// Gaussian kernel estimate together with the bandwidth used.
#[derive(Debug, Clone, PartialEq)]
pub struct KdeEstimate {
    pub bandwidth: f64,
    pub grid: DensityGrid,
}

/// Silverman's rule of thumb, `1.06 ŝ n^{-1/5}`.
pub fn silverman_bandwidth(sample: &EmpiricalSample) -> Result<f64> {
    if sample.len() < 2 {
        return Err(Error::DegenerateSample(format!("need at least 2 observations, got {}", sample.len())));
    }
    let sd = sample.sd();
    if sample.min() == sample.max() || !(sd > 0.0) {
        return Err(Error::DegenerateSample("sample standard deviation is zero".into()));
    }
    Ok(1.06 * sd * (sample.len() as f64).powf(-0.2))
}

/// Gaussian KDE with Silverman bandwidth evaluated on `x_grid`.
pub fn kde(sample: &EmpiricalSample, x_grid: &[f64]) -> Result<KdeEstimate> {
    let bw = silverman_bandwidth(sample)?;
    kde_with_bandwidth(sample, x_grid, bw)
}

pub fn kde_with_bandwidth(sample: &EmpiricalSample, x_grid: &[f64], bandwidth: f64) -> Result<KdeEstimate> {
    if sample.len() < 2 {
        return Err(Error::DegenerateSample(format!("need at least 2 observations, got {}", sample.len())));
    }
    if !(bandwidth > 0.0) {
        return Err(Error::DegenerateSample(format!("bandwidth must be positive, got {bandwidth}")));
    }
    let values = sample.values();
    let n = values.len() as f64;
    // kernel mass beyond 9 bandwidths is below 1e-18
    let reach = 9.0 * bandwidth;
    let f: Vec<f64> = x_grid
        .par_iter()
        .map(|&x| {
            let lo = values.partition_point(|&v| v < x - reach);
            let hi = values.partition_point(|&v| v <= x + reach);
            let s: f64 = values[lo..hi].iter().map(|&v| std_normal_pdf((x - v) / bandwidth)).sum();
            s / (n * bandwidth)
        })
        .collect();
    Ok(KdeEstimate { bandwidth, grid: DensityGrid::new(x_grid.to_vec(), f)? })
}

/// Absolute tolerance per smooth piece in [`wasserstein1`].
const PIECE_TOL: f64 = 1e-13;

/// Evaluations per piece used to locate sign changes of `F - G`.
const SIGN_PROBES: usize = 16;

/// `d_W(F, G) = ∫ |F(x) - G(x)| dx`.
///
/// The integration range is split at every breakpoint of either law and at
/// every sign change of `F - G`; each smooth piece is integrated adaptively.
pub fn wasserstein1<F: Distribution1d, G: Distribution1d>(f: &F, g: &G) -> Result<f64> {
    let (fa, fb) = f
        .support()
        .ok_or_else(|| Error::UnboundedIntegral("first law has no integrable support".into()))?;
    let (ga, gb) = g
        .support()
        .ok_or_else(|| Error::UnboundedIntegral("second law has no integrable support".into()))?;
    let (lo, hi) = (fa.min(ga), fb.max(gb));
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::UnboundedIntegral(format!("support [{lo}, {hi}] is not finite")));
    }
    if hi <= lo {
        return Ok(0.0);
    }
    let mut cuts: Vec<f64> = f
        .breakpoints()
        .into_iter()
        .chain(g.breakpoints())
        .filter(|&b| b > lo && b < hi)
        .collect();
    cuts.push(lo);
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let diff = |x: f64| f.cdf(x) - g.cdf(x);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        // probe just inside the piece, away from jumps at its ends
        let eps = 1e-12 * (b - a);
        let probes: Vec<f64> = (0..=SIGN_PROBES)
            .map(|i| match i {
                0 => a + eps,
                i if i == SIGN_PROBES => b - eps,
                i => a + (b - a) * i as f64 / SIGN_PROBES as f64,
            })
            .collect();
        let values: Vec<f64> = probes.iter().map(|&x| diff(x)).collect();
        let mut parts = vec![a];
        for i in 0..SIGN_PROBES {
            if values[i] * values[i + 1] < 0.0 {
                parts.push(bisect_sign_change(&diff, probes[i], probes[i + 1], values[i]));
            }
        }
        parts.push(b);
        for p in parts.windows(2) {
            total += integrate_abs(&diff, p[0], p[1])?;
        }
    }
    Ok(total)
}

fn bisect_sign_change(d: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, da: f64) -> f64 {
    let sa = da.signum();
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if d(m).signum() == sa {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

fn integrate_abs(d: &impl Fn(f64) -> f64, a: f64, b: f64) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    // |d| so that a root missed by the probes only costs extra subdivisions
    let r = quadrature::integrate(|x| d(x).abs(), a, b, PIECE_TOL.max(1e-12 * (b - a)), 400)?;
    Ok(r.value)
}
