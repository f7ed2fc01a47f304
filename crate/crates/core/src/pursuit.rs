//! Nonlinear matching pursuit.
//!
//! The outer loop repeatedly seeds a phase from the dominant scalogram ridge
//! of the residual, refines `(a, θ)` by minimising `‖r - a cos θ‖²`, and
//! subtracts the result. The inner solver alternates between demodulating
//! the residual along the current phase and correcting the phase by the
//! argument of the demodulated envelope.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::ridge::{default_floor, extract_ridges, pair_from_ridge, scalogram_of, RecoveryOptions, RidgeCurve};
use crate::separation::check_scale_separation;
use crate::signal::{
    cubic_interp, trapezoid, unwrap_phase, Boundary, ComponentDiagnostics, Decomposition, DictionaryParams,
    PhasePair, SampledSignal, Termination,
};
use crate::wavelet::{make_wavelet, BSplineWavelet};

/// How the first component's phase is initialised.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// From the dominant ridge of the residual's scalogram.
    #[default]
    Ridge,
    /// A caller-supplied phase on the signal grid; later components use ridges.
    Phase(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PursuitConfig {
    pub params: DictionaryParams,
    pub max_components: usize,
    pub inner_max_iter: usize,
    /// Stop the inner solver once the largest phase correction is below
    /// this many turns.
    pub inner_tol: f64,
    /// Envelope low-pass cutoff as a fraction of the carrier frequency.
    pub lowpass_fraction: f64,
    pub init: Init,
    /// Wavelet half-bandwidth for ridge seeding; defaults to 90% of the
    /// largest value that keeps bands of components a ratio `d` apart disjoint.
    pub delta: Option<f64>,
    pub voices: usize,
    pub boundary: Boundary,
}

impl Default for PursuitConfig {
    fn default() -> Self {
        Self {
            params: DictionaryParams::default(),
            max_components: 8,
            inner_max_iter: 50,
            inner_tol: 1e-6,
            lowpass_fraction: 0.5,
            init: Init::Ridge,
            delta: None,
            voices: crate::ridge::DEFAULT_VOICES,
            boundary: Boundary::Periodic,
        }
    }
}

impl PursuitConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.max_components == 0 {
            return invalid("max_components must be at least 1");
        }
        if !(self.inner_tol > 0.0 && self.inner_tol.is_finite()) {
            return invalid(format!("inner_tol must be positive, got {}", self.inner_tol));
        }
        if !(self.lowpass_fraction > 0.0 && self.lowpass_fraction < 1.0) {
            return invalid(format!("lowpass_fraction must lie in (0, 1), got {}", self.lowpass_fraction));
        }
        if let Some(d) = self.delta {
            if !(d > 0.0 && d < 1.0) {
                return invalid(format!("delta must lie in (0, 1), got {d}"));
            }
        }
        if self.voices == 0 {
            return invalid("voices must be at least 1");
        }
        Ok(())
    }

    pub fn wavelet_delta(&self) -> f64 {
        self.delta.unwrap_or_else(|| {
            let r = self.params.d.sqrt();
            0.9 * (r - 1.0) / (r + 1.0)
        })
    }

    /// Cutoff actually applied: a neighbour a ratio `d` below the carrier
    /// demodulates to frequency `1 - 1/d`, so the cutoff stays under it.
    pub fn effective_lowpass(&self) -> f64 {
        self.lowpass_fraction.min(0.8 * (1.0 - 1.0 / self.params.d))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct P2Result {
    pub pair: PhasePair,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after each accepted iterate, starting with the initial phase.
    pub history: Vec<f64>,
}

/// `‖f - a cos θ‖²` by the trapezoidal rule.
pub fn p2_objective(f: &SampledSignal, pair: &PhasePair) -> Result<f64> {
    f.grid().ensure_matches(pair.grid())?;
    let diff: Vec<f64> = f
        .values()
        .iter()
        .zip(pair.a().iter().zip(pair.theta()))
        .map(|(v, (a, th))| {
            let e = v - a * th.cos();
            e * e
        })
        .collect();
    Ok(trapezoid(&diff, f.grid().dt()))
}

struct Demodulated {
    a: Vec<f64>,
    phi: Vec<f64>,
    objective: f64,
}

/// Fractional sample index `x` with `theta(x) = s` for increasing `s`,
/// by linear inversion of the monotone table `theta`.
fn invert_monotone(theta: &[f64], s: &[f64]) -> Vec<f64> {
    let n = theta.len();
    let mut j = 0usize;
    s.iter()
        .map(|&v| {
            while j + 2 < n && theta[j + 1] < v {
                j += 1;
            }
            let (lo, hi) = (theta[j], theta[j + 1]);
            (j as f64 + ((v - lo) / (hi - lo)).clamp(0.0, 1.0)).min((n - 1) as f64)
        })
        .collect()
}

/// Envelope `â` and phase correction `φ = arg(â + i b̂)` of `r` along `theta`,
/// where `â + i b̂` is the low-passed `2 r e^{-is}` on a uniform grid in `s = θ`.
fn demodulate(r: &SampledSignal, theta: &[f64], eta: f64, periodic: bool) -> Demodulated {
    let n = r.len();
    let m = 2 * n - 1;
    let (s0, s1) = (theta[0], theta[n - 1]);
    let ds = (s1 - s0) / (m - 1) as f64;
    let s: Vec<f64> = (0..m).map(|k| s0 + k as f64 * ds).collect();
    let idx = invert_monotone(theta, &s);
    let z: Vec<Complex64> = s
        .iter()
        .zip(&idx)
        .map(|(sk, x)| Complex64::from_polar(2.0 * cubic_interp(r.values(), *x), -sk))
        .collect();
    let mut buf: Vec<Complex64> = if periodic {
        z[..m - 1].to_vec()
    } else {
        let mut e = z.clone();
        e.extend(z[1..m - 1].iter().rev());
        e
    };
    let len = buf.len();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(len).process(&mut buf);
    let cutoff = eta / TAU;
    for (k, c) in buf.iter_mut().enumerate() {
        let bin = if k <= len / 2 { k as f64 } else { k as f64 - len as f64 };
        if (bin / (len as f64 * ds)).abs() > cutoff {
            *c = Complex64::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(len).process(&mut buf);
    let scale = 1.0 / len as f64;
    let re: Vec<f64> = (0..m).map(|k| buf[k % len].re * scale).collect();
    let im: Vec<f64> = (0..m).map(|k| buf[k % len].im * scale).collect();

    let sup_r = r.sup_abs();
    let a_floor = (1e-12 * sup_r).max(f64::MIN_POSITIVE);
    let mut a = Vec::with_capacity(n);
    let mut wrapped = Vec::with_capacity(n);
    for &th in theta {
        let x = (th - s0) / ds;
        let (ah, bh) = (cubic_interp(&re, x), cubic_interp(&im, x));
        a.push(ah.max(a_floor));
        wrapped.push(bh.atan2(ah));
    }
    let phi = unwrap_phase(&wrapped);
    let resid: Vec<f64> = r
        .values()
        .iter()
        .zip(a.iter().zip(theta))
        .map(|(v, (a, th))| {
            let e = v - a * th.cos();
            e * e
        })
        .collect();
    Demodulated { a, phi, objective: trapezoid(&resid, r.grid().dt()) }
}

/// Rescales the total phase advance to a whole number of turns.
fn snap_turns(theta: &mut [f64]) {
    let n = theta.len();
    let total = theta[n - 1] - theta[0];
    let turns = (total / TAU).round().max(1.0);
    let fix = turns * TAU - total;
    for (i, v) in theta.iter_mut().enumerate() {
        *v += fix * i as f64 / (n - 1) as f64;
    }
}

/// Clamps per-sample phase increments to at least `(1 - Δ)` times the
/// smallest increment of `reference`, re-accumulating from the midpoint.
fn project_increasing(theta: &mut [f64], reference: &[f64], delta: f64) {
    let n = theta.len();
    let min_ref = reference.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let floor = (1.0 - delta) * min_ref.max(0.0);
    let floor = if floor > 0.0 { floor } else { f64::MIN_POSITIVE.sqrt() };
    if theta.windows(2).all(|w| w[1] - w[0] >= floor) {
        return;
    }
    let inc: Vec<f64> = theta.windows(2).map(|w| (w[1] - w[0]).max(floor)).collect();
    let mid = n / 2;
    let anchor = theta[mid];
    for i in (0..mid).rev() {
        theta[i] = theta[i + 1] - inc[i];
    }
    for i in mid + 1..n {
        theta[i] = theta[i - 1] + inc[i - 1];
    }
    theta[mid] = anchor;
}

const BACKTRACK_STEPS: usize = 5;

/// Minimises `‖r - a cos θ‖²` starting from `theta_init`.
pub fn solve_p2(r: &SampledSignal, theta_init: &[f64], cfg: &PursuitConfig) -> Result<P2Result> {
    cfg.validate()?;
    let n = r.len();
    if theta_init.len() != n {
        return invalid(format!("initial phase has {} samples, signal has {n}", theta_init.len()));
    }
    if n < 4 {
        return invalid("solve_p2 needs at least 4 samples");
    }
    if let Some(i) = theta_init.iter().position(|v| !v.is_finite()) {
        return invalid(format!("initial phase is not finite at index {i}"));
    }
    if let Some(i) = theta_init.windows(2).position(|w| w[1] <= w[0]) {
        return invalid(format!("initial phase must be strictly increasing (fails at index {i})"));
    }
    let periodic = cfg.boundary == Boundary::Periodic;
    let eta = cfg.effective_lowpass();
    let delta = cfg.wavelet_delta();

    let mut theta = theta_init.to_vec();
    if periodic {
        snap_turns(&mut theta);
        project_increasing(&mut theta, theta_init, delta);
    }
    let mut current = demodulate(r, &theta, eta, periodic);
    let mut history = vec![current.objective];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.inner_max_iter {
        let step = current.phi.iter().fold(0.0_f64, |m, v| m.max(v.abs())) / TAU;
        if step < cfg.inner_tol {
            converged = true;
            break;
        }
        iterations += 1;
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..BACKTRACK_STEPS {
            let mut cand: Vec<f64> = theta.iter().zip(&current.phi).map(|(t, p)| t + lambda * p).collect();
            if periodic {
                snap_turns(&mut cand);
            }
            project_increasing(&mut cand, &theta, delta);
            let dem = demodulate(r, &cand, eta, periodic);
            if dem.objective <= current.objective {
                accepted = Some((cand, dem));
                break;
            }
            lambda *= 0.5;
        }
        match accepted {
            Some((cand, dem)) => {
                theta = cand;
                current = dem;
                history.push(current.objective);
            }
            None => break,
        }
    }
    if !converged && iterations == cfg.inner_max_iter {
        let step = current.phi.iter().fold(0.0_f64, |m, v| m.max(v.abs())) / TAU;
        converged = step < cfg.inner_tol;
    }
    let pair = PhasePair::new(*r.grid(), current.a, theta)?;
    Ok(P2Result { pair, objective: current.objective, iterations, converged, history })
}

/// Interior breakpoints splitting `theta_prime` into segments on which
/// `sup θ′ / inf θ′ < √d`, scanning greedily from the left. Segment `j`
/// covers indices `[b_{j-1}, b_j)` with `b_{-1} = 0` and a final end at the
/// array length.
pub fn partition_domain(theta_prime: &[f64], d: f64) -> Vec<usize> {
    let limit = d.sqrt();
    let mut out = Vec::new();
    let Some(&first) = theta_prime.first() else {
        return out;
    };
    let (mut lo, mut hi) = (first, first);
    for (i, &v) in theta_prime.iter().enumerate().skip(1) {
        let (nlo, nhi) = (lo.min(v), hi.max(v));
        if nhi >= limit * nlo {
            out.push(i);
            lo = v;
            hi = v;
        } else {
            lo = nlo;
            hi = nhi;
        }
    }
    out
}

fn ridges_of(r: &SampledSignal, w: &BSplineWavelet, cfg: &PursuitConfig, boundary: Boundary) -> Result<Vec<RidgeCurve>> {
    let opts = RecoveryOptions { floor: None, voices: cfg.voices, boundary, scales: None };
    let Some(s) = scalogram_of(r, w, &opts)? else {
        return Ok(Vec::new());
    };
    extract_ridges(&s, default_floor(&s))
}

/// The ridge with the largest energy; ties go to the lower frequency.
fn dominant(curves: &[RidgeCurve]) -> Option<&RidgeCurve> {
    curves.iter().fold(None, |best: Option<&RidgeCurve>, c| match best {
        None => Some(c),
        Some(b) => {
            let (eb, ec) = (b.energy(), c.energy());
            let tie = (eb - ec).abs() <= 1e-9 * eb.max(ec);
            if (tie && c.mean_frequency() < b.mean_frequency()) || (!tie && ec > eb) {
                Some(c)
            } else {
                Some(b)
            }
        }
    })
}

fn seed_phase(r: &SampledSignal, w: &BSplineWavelet, cfg: &PursuitConfig, boundary: Boundary) -> Result<Option<Vec<f64>>> {
    let curves = ridges_of(r, w, cfg, boundary)?;
    match dominant(&curves) {
        Some(c) => Ok(Some(pair_from_ridge(c, r.grid(), w)?.theta().to_vec())),
        None => Ok(None),
    }
}

/// Shortest segment (in samples) worth re-extracting on its own.
const MIN_SEGMENT: usize = 64;

/// Re-extracts a mode segment by segment over the partition of its
/// frequency, following the frequency across breakpoints, and joins the
/// pieces with whole-turn phase offsets.
fn restitch(
    r: &SampledSignal,
    pair: &PhasePair,
    w: &BSplineWavelet,
    cfg: &PursuitConfig,
) -> Result<Option<(PhasePair, P2Result)>> {
    let n = r.len();
    let breaks = partition_domain(&pair.frequency(), cfg.params.d);
    let mut bounds = vec![0];
    bounds.extend(breaks.into_iter().filter(|&b| b >= MIN_SEGMENT && n - 1 - b >= MIN_SEGMENT));
    bounds.push(n - 1);
    bounds.dedup();
    if bounds.len() < 3 {
        return Ok(None);
    }
    let seg_cfg = PursuitConfig { boundary: Boundary::Mirror, ..cfg.clone() };
    let mut a: Vec<f64> = Vec::with_capacity(n);
    let mut theta: Vec<f64> = Vec::with_capacity(n);
    let mut iterations = 0;
    let mut converged = true;
    for seg in bounds.windows(2) {
        let (lo, hi) = (seg[0], seg[1]);
        let rs = r.slice(lo, hi)?;
        let curves = ridges_of(&rs, w, &seg_cfg, Boundary::Mirror)?;
        let chosen = if theta.is_empty() {
            dominant(&curves)
        } else {
            let prev_freq = {
                let k = theta.len();
                (theta[k - 1] - theta[k - 2]) / r.grid().dt()
            };
            curves
                .iter()
                .filter(|c| c.indices[0] < (hi - lo) / 10)
                .min_by(|x, y| {
                    let dx = (x.omega[0] * prev_freq).ln().abs();
                    let dy = (y.omega[0] * prev_freq).ln().abs();
                    dx.total_cmp(&dy)
                })
        };
        let Some(curve) = chosen else {
            return Ok(None);
        };
        let seed = pair_from_ridge(curve, rs.grid(), w)?;
        let res = solve_p2(&rs, seed.theta(), &seg_cfg)?;
        iterations += res.iterations;
        converged &= res.converged;
        let (sa, st) = (res.pair.a(), res.pair.theta());
        if theta.is_empty() {
            a.extend_from_slice(sa);
            theta.extend_from_slice(st);
        } else {
            let last = *theta.last().unwrap();
            let offset = TAU * ((last - st[0]) / TAU).round();
            a.extend_from_slice(&sa[1..]);
            theta.extend(st[1..].iter().map(|v| v + offset));
        }
    }
    let Ok(joined) = PhasePair::new(*r.grid(), a, theta) else {
        return Ok(None);
    };
    let objective = p2_objective(r, &joined)?;
    let result = P2Result {
        pair: joined.clone(),
        objective,
        iterations,
        converged,
        history: vec![objective],
    };
    Ok(Some((joined, result)))
}

/// Greedy decomposition of `f` into modes until the residual RMS drops
/// below `ε₀`, no further improving mode is found, or the component budget
/// is spent.
pub fn matching_pursuit(f: &SampledSignal, cfg: &PursuitConfig) -> Result<Decomposition> {
    cfg.validate()?;
    let w = make_wavelet(cfg.wavelet_delta())?;
    if let Init::Phase(th) = &cfg.init {
        if th.len() != f.len() {
            return invalid(format!("initial phase has {} samples, signal has {}", th.len(), f.len()));
        }
    }
    let eps = cfg.params.epsilon;
    let mut residual = f.clone();
    let mut found: Vec<(PhasePair, ComponentDiagnostics)> = Vec::new();
    let termination = loop {
        if residual.rms() < cfg.params.epsilon0 {
            break Termination::ResidualBelowThreshold;
        }
        if found.len() >= cfg.max_components {
            break Termination::MaxComponents;
        }
        let seed = match (&cfg.init, found.is_empty()) {
            (Init::Phase(th), true) => th.clone(),
            _ => match seed_phase(&residual, &w, cfg, cfg.boundary)? {
                Some(th) => th,
                None => break Termination::NoProgress,
            },
        };
        let energy = residual.norm().powi(2);
        let mut result = solve_p2(&residual, &seed, cfg)?;
        if !(result.objective < energy) {
            break Termination::NoProgress;
        }
        let mut report = check_scale_separation(&result.pair, eps)?;
        let mut stitched = false;
        if !report.in_dictionary && !partition_domain(&result.pair.frequency(), cfg.params.d).is_empty() {
            if let Some((pair, res)) = restitch(&residual, &result.pair, &w, cfg)? {
                let alt = check_scale_separation(&pair, eps)?;
                if (alt.in_dictionary || alt.epsilon() < report.epsilon()) && res.objective < energy {
                    result = res;
                    report = alt;
                    stitched = true;
                }
            }
        }
        residual = residual.sub(&result.pair.component())?;
        let diag = ComponentDiagnostics {
            separation: report,
            extraction_rank: found.len(),
            objective: result.objective,
            inner_iterations: result.iterations,
            inner_converged: result.converged,
            stitched,
        };
        found.push((result.pair, diag));
    };
    found.sort_by(|x, y| x.0.mean_frequency().total_cmp(&y.0.mean_frequency()));
    let (components, diagnostics) = found.into_iter().unzip();
    Ok(Decomposition { components, residual, diagnostics, termination })
}
