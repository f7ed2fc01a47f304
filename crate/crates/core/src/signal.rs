//! Signals on uniform grids and the calculus used throughout the crate.
//!
//! Every quantity lives on a uniform grid `t_i = t0 + i (t1 - t0) / (n - 1)`
//! that includes both endpoints. Integrals use the composite trapezoidal
//! rule and derivatives use second-order finite differences. Phases are
//! always stored unwrapped.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, SparseTfError};
use crate::separation::SeparationReport;

/// Relative tolerance used when deciding whether two grids coincide.
const GRID_TOL: f64 = 1e-12;

/// A uniform sampling grid including both endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub t0: f64,
    pub t1: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(t0: f64, t1: f64, n: usize) -> Result<Self> {
        if !(t0.is_finite() && t1.is_finite()) || t1 <= t0 {
            return invalid(format!("grid requires finite t1 > t0, got [{t0}, {t1}]"));
        }
        if n < 2 {
            return invalid(format!("grid requires at least 2 samples, got {n}"));
        }
        Ok(Self { t0, t1, n })
    }

    #[inline]
    pub fn dt(&self) -> f64 {
        (self.t1 - self.t0) / (self.n - 1) as f64
    }

    #[inline]
    pub fn span(&self) -> f64 {
        self.t1 - self.t0
    }

    #[inline]
    pub fn time(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.t1
        } else {
            self.t0 + i as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.time(i)).collect()
    }

    /// Index of the sample nearest to `t`, clamped to the grid.
    pub fn nearest_index(&self, t: f64) -> usize {
        let x = ((t - self.t0) / self.dt()).round();
        x.clamp(0.0, (self.n - 1) as f64) as usize
    }

    pub fn matches(&self, other: &Grid) -> bool {
        let scale = self.span().abs().max(self.t0.abs()).max(1.0);
        self.n == other.n
            && (self.t0 - other.t0).abs() <= GRID_TOL * scale
            && (self.t1 - other.t1).abs() <= GRID_TOL * scale
    }

    pub fn ensure_matches(&self, other: &Grid) -> Result<()> {
        if self.matches(other) {
            Ok(())
        } else {
            Err(SparseTfError::GridMismatch(format!(
                "[{}, {}] x {} vs [{}, {}] x {}",
                self.t0, self.t1, self.n, other.t0, other.t1, other.n
            )))
        }
    }
}

/// How a finite record is extended beyond its span.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// The record is one period; the sample at `t1` duplicates the one at `t0`.
    #[default]
    Periodic,
    /// Even reflection about both endpoints.
    Mirror,
}

/// A real-valued signal on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    grid: Grid,
    values: Vec<f64>,
}

impl SampledSignal {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n {
            return invalid(format!(
                "signal has {} values but the grid has {} samples",
                values.len(),
                grid.n
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return invalid(format!("signal value at index {i} is not finite"));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.times().into_iter().map(f).collect();
        Self::new(grid, values)
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![0.0; grid.n] }
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// L2 norm by trapezoidal quadrature.
    pub fn norm(&self) -> f64 {
        trapezoid(&self.values.iter().map(|v| v * v).collect::<Vec<_>>(), self.grid.dt()).sqrt()
    }

    /// Root-mean-square value, `sqrt(∫ f² / (t1 - t0))`.
    pub fn rms(&self) -> f64 {
        self.norm() / self.grid.span().sqrt()
    }

    pub fn sub(&self, other: &SampledSignal) -> Result<SampledSignal> {
        self.grid.ensure_matches(&other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        SampledSignal::new(self.grid, values)
    }

    pub fn add(&self, other: &SampledSignal) -> Result<SampledSignal> {
        self.grid.ensure_matches(&other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        SampledSignal::new(self.grid, values)
    }

    pub fn scale(&self, c: f64) -> SampledSignal {
        SampledSignal { grid: self.grid, values: self.values.iter().map(|v| c * v).collect() }
    }

    /// Restrict to the closed index range `[lo, hi]`.
    pub fn slice(&self, lo: usize, hi: usize) -> Result<SampledSignal> {
        if hi <= lo || hi >= self.grid.n {
            return invalid(format!("bad slice [{lo}, {hi}] of {} samples", self.grid.n));
        }
        let grid = Grid::new(self.grid.time(lo), self.grid.time(hi), hi - lo + 1)?;
        SampledSignal::new(grid, self.values[lo..=hi].to_vec())
    }
}

/// An (envelope, phase) pair describing the candidate mode `a(t) cos θ(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePair {
    grid: Grid,
    a: Vec<f64>,
    theta: Vec<f64>,
}

impl PhasePair {
    /// Builds a pair, enforcing `a > 0` and a strictly increasing phase.
    pub fn new(grid: Grid, a: Vec<f64>, theta: Vec<f64>) -> Result<Self> {
        if a.len() != grid.n || theta.len() != grid.n {
            return invalid(format!(
                "phase pair lengths ({}, {}) do not match grid ({})",
                a.len(),
                theta.len(),
                grid.n
            ));
        }
        if let Some(i) = a.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return invalid(format!("envelope must be positive and finite; a[{i}] = {}", a[i]));
        }
        if let Some(i) = theta.iter().position(|v| !v.is_finite()) {
            return invalid(format!("phase value at index {i} is not finite"));
        }
        if let Some(i) = theta.windows(2).position(|w| w[1] <= w[0]) {
            return invalid(format!(
                "phase must be strictly increasing; theta[{}] = {} >= theta[{}] = {}",
                i,
                theta[i],
                i + 1,
                theta[i + 1]
            ));
        }
        Ok(Self { grid, a, theta })
    }

    pub fn from_fns(grid: Grid, a: impl Fn(f64) -> f64, theta: impl Fn(f64) -> f64) -> Result<Self> {
        let ts = grid.times();
        Self::new(grid, ts.iter().map(|&t| a(t)).collect(), ts.iter().map(|&t| theta(t)).collect())
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn a(&self) -> &[f64] {
        &self.a
    }

    #[inline]
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Instantaneous frequency θ′ by finite differences.
    pub fn frequency(&self) -> Vec<f64> {
        differentiate(&self.theta, self.grid.dt()).expect("grid has at least 3 samples")
    }

    pub fn mean_frequency(&self) -> f64 {
        (self.theta[self.grid.n - 1] - self.theta[0]) / self.grid.span()
    }

    /// The mode `a cos θ` sampled on the grid.
    pub fn component(&self) -> SampledSignal {
        let values = self.a.iter().zip(&self.theta).map(|(a, th)| a * th.cos()).collect();
        SampledSignal { grid: self.grid, values }
    }

    /// Same pair with the envelope multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<PhasePair> {
        PhasePair::new(self.grid, self.a.iter().map(|v| v * c).collect(), self.theta.clone())
    }

    /// Restrict to the closed index range `[lo, hi]`.
    pub fn slice(&self, lo: usize, hi: usize) -> Result<PhasePair> {
        if hi <= lo || hi >= self.grid.n {
            return invalid(format!("bad slice [{lo}, {hi}] of {} samples", self.grid.n));
        }
        let grid = Grid::new(self.grid.time(lo), self.grid.time(hi), hi - lo + 1)?;
        PhasePair::new(grid, self.a[lo..=hi].to_vec(), self.theta[lo..=hi].to_vec())
    }
}

/// Separation factor, frequency ratio, frequency-range bound and residual threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DictionaryParams {
    pub epsilon: f64,
    pub d: f64,
    pub m_prime: f64,
    pub epsilon0: f64,
}

impl DictionaryParams {
    pub fn new(epsilon: f64, d: f64, m_prime: f64, epsilon0: f64) -> Result<Self> {
        let p = Self { epsilon, d, m_prime, epsilon0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return invalid(format!("epsilon must lie in (0, 1), got {}", self.epsilon));
        }
        if !(self.d > 1.0 && self.d.is_finite()) {
            return invalid(format!("d must exceed 1, got {}", self.d));
        }
        if !(self.m_prime >= 1.0 && self.m_prime.is_finite()) {
            return invalid(format!("m_prime must be at least 1, got {}", self.m_prime));
        }
        if !(self.epsilon0 > 0.0 && self.epsilon0.is_finite()) {
            return invalid(format!("epsilon0 must be positive, got {}", self.epsilon0));
        }
        Ok(())
    }
}

impl Default for DictionaryParams {
    fn default() -> Self {
        Self { epsilon: 0.1, d: 2.0, m_prime: 4.0, epsilon0: 0.1 }
    }
}

/// Per-component record kept alongside a decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentDiagnostics {
    pub separation: SeparationReport,
    /// Position in extraction order (0 = extracted first).
    pub extraction_rank: usize,
    /// `‖r_{k-1} - a cos θ‖²` of the accepted inner solution.
    pub objective: f64,
    pub inner_iterations: usize,
    pub inner_converged: bool,
    /// Whether the component was re-extracted segment by segment.
    pub stitched: bool,
}

/// Why the outer pursuit loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ResidualBelowThreshold,
    MaxComponents,
    NoProgress,
}

/// Ordered modes plus residual, `f = Σ a_k cos θ_k + r`.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub components: Vec<PhasePair>,
    pub residual: SampledSignal,
    pub diagnostics: Vec<ComponentDiagnostics>,
    pub termination: Termination,
}

impl Decomposition {
    /// Decomposition without diagnostics, e.g. one loaded from disk.
    pub fn from_parts(mut components: Vec<PhasePair>, residual: SampledSignal) -> Result<Self> {
        for c in &components {
            residual.grid().ensure_matches(c.grid())?;
        }
        components.sort_by(|x, y| x.mean_frequency().total_cmp(&y.mean_frequency()));
        Ok(Self { components, residual, diagnostics: Vec::new(), termination: Termination::ResidualBelowThreshold })
    }

    pub fn grid(&self) -> &Grid {
        self.residual.grid()
    }

    /// `Σ a_k cos θ_k + r`.
    pub fn signal(&self) -> Result<SampledSignal> {
        if self.components.is_empty() {
            return Ok(self.residual.clone());
        }
        reconstruct(&self.components)?.add(&self.residual)
    }
}

/// Derivative by central differences, second-order one-sided at the ends.
pub fn differentiate(x: &[f64], dt: f64) -> Result<Vec<f64>> {
    let n = x.len();
    if n < 3 {
        return invalid(format!("differentiate needs at least 3 samples, got {n}"));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return invalid(format!("time step must be positive, got {dt}"));
    }
    let h2 = 2.0 * dt;
    let mut out = Vec::with_capacity(n);
    out.push((-3.0 * x[0] + 4.0 * x[1] - x[2]) / h2);
    out.extend(x.windows(3).map(|w| (w[2] - w[0]) / h2));
    out.push((3.0 * x[n - 1] - 4.0 * x[n - 2] + x[n - 3]) / h2);
    Ok(out)
}

/// Composite trapezoidal rule.
pub fn trapezoid(x: &[f64], dt: f64) -> f64 {
    match x.len() {
        0 | 1 => 0.0,
        n => dt * (x[1..n - 1].iter().sum::<f64>() + 0.5 * (x[0] + x[n - 1])),
    }
}

/// Running trapezoidal integral starting from zero.
pub fn cumulative_integrate(x: &[f64], dt: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in x.windows(2) {
        acc += 0.5 * dt * (w[0] + w[1]);
        out.push(acc);
    }
    out.truncate(x.len());
    out
}

/// `⟨x, y⟩ = ∫ x y dt` by the trapezoidal rule.
pub fn inner_product(x: &SampledSignal, y: &SampledSignal) -> Result<f64> {
    x.grid.ensure_matches(&y.grid)?;
    let prod: Vec<f64> = x.values.iter().zip(&y.values).map(|(a, b)| a * b).collect();
    Ok(trapezoid(&prod, x.grid.dt()))
}

/// Pointwise sum of `a_k cos θ_k`.
pub fn reconstruct(pairs: &[PhasePair]) -> Result<SampledSignal> {
    let first = pairs
        .first()
        .ok_or_else(|| SparseTfError::InvalidInput("reconstruct needs at least one pair".into()))?;
    let grid = first.grid;
    let mut values = vec![0.0; grid.n];
    for p in pairs {
        grid.ensure_matches(&p.grid)?;
        for ((v, a), th) in values.iter_mut().zip(&p.a).zip(&p.theta) {
            *v += a * th.cos();
        }
    }
    SampledSignal::new(grid, values)
}

/// Four-point Lagrange interpolation of uniformly spaced samples at
/// fractional index `x`; clamps to the end intervals outside `[0, n-1]`.
pub fn cubic_interp(y: &[f64], x: f64) -> f64 {
    let n = y.len();
    debug_assert!(n >= 4);
    let x = x.clamp(0.0, (n - 1) as f64);
    let i = (x.floor() as usize).clamp(1, n - 3);
    let u = x - i as f64;
    let (p0, p1, p2, p3) = (y[i - 1], y[i], y[i + 1], y[i + 2]);
    let w0 = -u * (u - 1.0) * (u - 2.0) / 6.0;
    let w1 = (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0;
    let w2 = -(u + 1.0) * u * (u - 2.0) / 2.0;
    let w3 = (u + 1.0) * u * (u - 1.0) / 6.0;
    w0 * p0 + w1 * p1 + w2 * p2 + w3 * p3
}

/// Linear interpolation of `(xs, ys)` at `x`, with `xs` strictly increasing.
/// Values outside the table are clamped to the end samples.
pub fn linear_interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let j = xs.partition_point(|&v| v <= x).min(n - 1);
    let (x0, x1) = (xs[j - 1], xs[j]);
    let w = (x - x0) / (x1 - x0);
    ys[j - 1] * (1.0 - w) + ys[j] * w
}

/// Centered moving average over `width` samples with reflected ends.
pub fn moving_average(x: &[f64], width: usize) -> Vec<f64> {
    let n = x.len();
    let half = width / 2;
    if half == 0 || n < 2 {
        return x.to_vec();
    }
    let reflect = |i: isize| -> f64 {
        let m = (n - 1) as isize;
        let mut j = i;
        while j < 0 || j > m {
            if j < 0 {
                j = -j;
            }
            if j > m {
                j = 2 * m - j;
            }
        }
        x[j as usize]
    };
    let w = (2 * half + 1) as f64;
    let mut acc: f64 = (-(half as isize)..=half as isize).map(reflect).sum();
    let mut out = Vec::with_capacity(n);
    out.push(acc / w);
    for i in 1..n as isize {
        acc += reflect(i + half as isize) - reflect(i - 1 - half as isize);
        out.push(acc / w);
    }
    out
}

/// Unwraps a wrapped phase sequence so consecutive samples differ by less than π.
pub fn unwrap_phase(x: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    let mut offset = 0.0;
    let tau = std::f64::consts::TAU;
    for (i, &v) in x.iter().enumerate() {
        if i > 0 {
            let prev = x[i - 1];
            let d = v - prev;
            offset -= tau * (d / tau).round();
        }
        out.push(v + offset);
    }
    out
}
