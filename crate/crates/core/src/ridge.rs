//! Scalogram ridges and the components they determine.
//!
//! A mode `a cos θ` contributes `(√ω/2) a e^{-iθ} ψ̂(ωθ′)` to the transform,
//! so along the curve `ω = 1/θ′(t)` the modulus gives the envelope and the
//! argument gives the phase. Ridges are detected on `|W|/√ω`, which is
//! flat across scales for a constant envelope.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::signal::{
    cumulative_integrate, differentiate, linear_interp, moving_average, unwrap_phase, Boundary, Decomposition, Grid,
    PhasePair, SampledSignal,
};
use crate::wavelet::{cwt, default_scales, estimate_frequency_range, BSplineWavelet, Scalogram};

/// Curves spanning less than this fraction of the record are discarded.
const MIN_CURVE_FRACTION: f64 = 0.05;
/// Lower bound on the default relative floor.
const MIN_FLOOR: f64 = 1e-3;
/// Default voices per octave.
pub const DEFAULT_VOICES: usize = 32;

/// One ridge: a curve of maxima of `|W(t, ·)|/√ω` followed across time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeCurve {
    /// Indices into the scalogram's time axis, increasing.
    pub indices: Vec<usize>,
    pub times: Vec<f64>,
    /// Sub-bin ridge scale.
    pub omega: Vec<f64>,
    /// `|W|/√ω` at the ridge.
    pub magnitude: Vec<f64>,
    /// Unwrapped `-arg W` at the ridge.
    pub phase: Vec<f64>,
    /// Whether the curve runs within one passband of another curve, or ends
    /// in the interior next to one, so that its identity is not determined.
    pub ambiguous: bool,
}

impl RidgeCurve {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// `∫ (|W|/√ω)² dt` along the curve (trapezoid on the sampled times).
    pub fn energy(&self) -> f64 {
        self.times
            .windows(2)
            .zip(self.magnitude.windows(2))
            .map(|(t, m)| 0.5 * (t[1] - t[0]) * (m[0] * m[0] + m[1] * m[1]))
            .sum()
    }

    /// Mean of `1/ω` along the curve, the average instantaneous frequency.
    pub fn mean_frequency(&self) -> f64 {
        self.omega.iter().map(|w| 1.0 / w).sum::<f64>() / self.omega.len() as f64
    }
}

#[derive(Debug, Clone, Copy)]
struct Peak {
    log_omega: f64,
    magnitude: f64,
    coeff: Complex64,
}

/// Quadratic interpolation through three equally spaced complex samples at
/// offset `u` from the middle one.
fn quad_complex(y0: Complex64, y1: Complex64, y2: Complex64, u: f64) -> Complex64 {
    y1 + (y2 - y0) * (0.5 * u) + (y2 - y1 * 2.0 + y0) * (0.5 * u * u)
}

fn slice_peaks(s: &Scalogram, i: usize, threshold: f64, log_scales: &[f64]) -> Vec<Peak> {
    let j_max = s.n_scales();
    let norm: Vec<f64> = (0..j_max).map(|j| s.get(i, j).norm() / s.scales[j].sqrt()).collect();
    let mut out = Vec::new();
    for j in 1..j_max.saturating_sub(1) {
        let (l, c, r) = (norm[j - 1], norm[j], norm[j + 1]);
        if !(c > l && c >= r && c >= threshold) {
            continue;
        }
        let curv = l - 2.0 * c + r;
        let u = if curv < 0.0 { (0.5 * (l - r) / curv).clamp(-0.5, 0.5) } else { 0.0 };
        let (wl, wc, wr) = (s.get(i, j - 1), s.get(i, j), s.get(i, j + 1));
        let sq = |j: usize| s.scales[j].sqrt();
        let coeff = quad_complex(wl / sq(j - 1), wc / sq(j), wr / sq(j + 1), u);
        let log_omega = if u >= 0.0 {
            log_scales[j] + u * (log_scales[j + 1] - log_scales[j])
        } else {
            log_scales[j] + u * (log_scales[j] - log_scales[j - 1])
        };
        let magnitude = c - 0.25 * (l - r) * u;
        out.push(Peak { log_omega, magnitude, coeff });
    }
    out
}

/// Relative floor `3 · median(|W|/√ω) / max(|W|/√ω)`, at least `1e-3`.
pub fn default_floor(s: &Scalogram) -> f64 {
    let mut mags: Vec<f64> = (0..s.n_scales())
        .flat_map(|j| {
            let r = s.scales[j].sqrt();
            s.row(j).iter().map(move |c| c.norm() / r)
        })
        .collect();
    let max = mags.iter().cloned().fold(0.0, f64::max);
    if !(max > 0.0) {
        return 1.0;
    }
    let mid = mags.len() / 2;
    let (_, median, _) = mags.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
    (3.0 * *median / max).max(MIN_FLOOR)
}

struct Building {
    peaks: Vec<(usize, Peak)>,
}

impl Building {
    fn last(&self) -> &(usize, Peak) {
        self.peaks.last().expect("curves start with one peak")
    }
}

/// Ridges of `s` above `floor · max |W|/√ω`.
///
/// Maxima are linked greedily from left to right, each curve taking the
/// nearest peak in `log ω` within a per-step jump cap of one octave per 1%
/// of the span (at least 1.5 voices).
pub fn extract_ridges(s: &Scalogram, floor: f64) -> Result<Vec<RidgeCurve>> {
    if s.is_empty() || s.n_times() < 2 || s.n_scales() < 3 {
        return invalid("ridge extraction needs a scalogram with at least 2 times and 3 scales");
    }
    if !(floor > 0.0 && floor.is_finite()) {
        return invalid(format!("ridge floor must be positive, got {floor}"));
    }
    let log_scales: Vec<f64> = s.scales.iter().map(|w| w.ln()).collect();
    let global = (0..s.n_scales())
        .map(|j| s.row(j).iter().fold(0.0_f64, |m, c| m.max(c.norm())) / s.scales[j].sqrt())
        .fold(0.0, f64::max);
    if !(global > 0.0) {
        return Ok(Vec::new());
    }
    let threshold = floor * global;
    let peaks: Vec<Vec<Peak>> =
        (0..s.n_times()).into_par_iter().map(|i| slice_peaks(s, i, threshold, &log_scales)).collect();

    let n = s.n_times();
    let span = s.times[n - 1] - s.times[0];
    let dt = span / (n - 1) as f64;
    let voice = (log_scales[s.n_scales() - 1] - log_scales[0]) / (s.n_scales() - 1) as f64;
    let cap = (100.0 * dt / span * std::f64::consts::LN_2).max(1.5 * voice);
    let max_gap = 2usize;

    let mut open: Vec<Building> = Vec::new();
    let mut closed: Vec<Building> = Vec::new();
    for (i, slice) in peaks.into_iter().enumerate() {
        let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
        for (c, curve) in open.iter().enumerate() {
            let (last_i, last) = curve.last();
            let steps = (i - last_i) as f64;
            for (p, peak) in slice.iter().enumerate() {
                let dist = (peak.log_omega - last.log_omega).abs();
                if dist <= cap * steps {
                    candidates.push((dist, c, p));
                }
            }
        }
        candidates.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
        let mut curve_taken = vec![false; open.len()];
        let mut peak_taken = vec![false; slice.len()];
        for (_, c, p) in candidates {
            if !curve_taken[c] && !peak_taken[p] {
                curve_taken[c] = true;
                peak_taken[p] = true;
                open[c].peaks.push((i, slice[p]));
            }
        }
        let mut still_open = Vec::with_capacity(open.len());
        for curve in open.drain(..) {
            if i - curve.last().0 > max_gap {
                closed.push(curve);
            } else {
                still_open.push(curve);
            }
        }
        open = still_open;
        for (p, peak) in slice.iter().enumerate() {
            if !peak_taken[p] {
                open.push(Building { peaks: vec![(i, *peak)] });
            }
        }
    }
    closed.extend(open);

    let min_len = MIN_CURVE_FRACTION * span;
    let mut curves: Vec<RidgeCurve> = closed
        .into_iter()
        .filter(|b| s.times[b.last().0] - s.times[b.peaks[0].0] >= min_len)
        .map(|b| {
            let indices: Vec<usize> = b.peaks.iter().map(|(i, _)| *i).collect();
            let wrapped: Vec<f64> = b.peaks.iter().map(|(_, p)| -p.coeff.arg()).collect();
            RidgeCurve {
                times: indices.iter().map(|&i| s.times[i]).collect(),
                omega: b.peaks.iter().map(|(_, p)| p.log_omega.exp()).collect(),
                magnitude: b.peaks.iter().map(|(_, p)| p.magnitude).collect(),
                phase: unwrap_phase(&wrapped),
                indices,
                ambiguous: false,
            }
        })
        .collect();
    curves.sort_by(|a, b| a.mean_frequency().total_cmp(&b.mean_frequency()));
    flag_ambiguous(&mut curves, s.wavelet.delta(), n);
    Ok(curves)
}

/// Marks curves that come within one passband width of each other at a
/// common time, or that stop or start away from the record ends next to
/// another curve.
fn flag_ambiguous(curves: &mut [RidgeCurve], delta: f64, n: usize) {
    let band = ((1.0 + delta) / (1.0 - delta)).ln();
    let edge = (n as f64 * 0.02).ceil() as usize;
    let m = curves.len();
    let mut flags = vec![false; m];
    let lookup = |c: &RidgeCurve, i: usize| -> Option<f64> {
        c.indices.binary_search(&i).ok().map(|k| c.omega[k].ln())
    };
    for a in 0..m {
        for b in 0..m {
            if a == b {
                continue;
            }
            let (ca, cb) = (&curves[a], &curves[b]);
            let close = ca
                .indices
                .iter()
                .zip(&ca.omega)
                .any(|(&i, w)| lookup(cb, i).is_some_and(|lb| (w.ln() - lb).abs() < band));
            let ends = [(ca.indices[0], ca.omega[0]), (*ca.indices.last().unwrap(), *ca.omega.last().unwrap())];
            let dangling = ends.iter().any(|&(i, w)| {
                let interior = i > edge && i + edge < n;
                interior
                    && (i.saturating_sub(edge)..(i + edge).min(n))
                        .any(|k| lookup(cb, k).is_some_and(|lb| (w.ln() - lb).abs() < 2.0 * band))
            });
            if close || dangling {
                flags[a] = true;
            }
        }
    }
    for (c, f) in curves.iter_mut().zip(flags) {
        c.ambiguous = f;
    }
}

/// Settings for [`recover_components_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryOptions {
    /// Relative floor; `None` uses [`default_floor`].
    pub floor: Option<f64>,
    pub voices: usize,
    pub boundary: Boundary,
    /// Explicit scales; `None` derives them from the signal spectrum.
    pub scales: Option<Vec<f64>>,
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        Self { floor: None, voices: DEFAULT_VOICES, boundary: Boundary::Periodic, scales: None }
    }
}

/// Scales covering the spectral content of `f`; `None` if it has none.
pub fn scales_for(f: &SampledSignal, w: &BSplineWavelet, voices: usize, boundary: Boundary) -> Result<Option<Vec<f64>>> {
    let Some((lo, hi)) = estimate_frequency_range(f, boundary) else {
        return Ok(None);
    };
    let nyquist = 0.5 / f.grid().dt();
    let lo = lo.max(1.0 / f.grid().span());
    let hi = hi.clamp(lo, nyquist);
    default_scales(lo, hi, voices, w).map(Some)
}

/// The scalogram of `f` on default scales; `None` when `f` has no
/// oscillatory content.
pub fn scalogram_of(f: &SampledSignal, w: &BSplineWavelet, opts: &RecoveryOptions) -> Result<Option<Scalogram>> {
    let scales = match &opts.scales {
        Some(s) => s.clone(),
        None => match scales_for(f, w, opts.voices, opts.boundary)? {
            Some(s) => s,
            None => return Ok(None),
        },
    };
    cwt(f, w, &scales, opts.boundary).map(Some)
}

/// One pair per ridge of `f`, using periodic extension and default scales.
pub fn recover_components(f: &SampledSignal, w: &BSplineWavelet, floor: f64) -> Result<Vec<PhasePair>> {
    recover_components_with(f, w, &RecoveryOptions { floor: Some(floor), ..Default::default() })
}

pub fn recover_components_with(f: &SampledSignal, w: &BSplineWavelet, opts: &RecoveryOptions) -> Result<Vec<PhasePair>> {
    let Some(s) = scalogram_of(f, w, opts)? else {
        return Ok(Vec::new());
    };
    let floor = opts.floor.unwrap_or_else(|| default_floor(&s));
    let curves = extract_ridges(&s, floor)?;
    pairs_from_ridges(&s, &curves, f.grid())
}

/// `∫ ψ̂(s)/s ds` by composite Simpson over the support.
fn band_constant(w: &BSplineWavelet) -> f64 {
    let (lo, hi) = (1.0 - w.delta(), 1.0 + w.delta());
    let m = 2000;
    let h = (hi - lo) / m as f64;
    let g = |k: usize| {
        let s = lo + k as f64 * h;
        w.psi_hat(s) / s
    };
    let inner: f64 = (1..m).map(|k| if k % 2 == 1 { 4.0 * g(k) } else { 2.0 * g(k) }).sum();
    h / 3.0 * (g(0) + inner + g(m))
}

/// Log-scale of `c` at time index `i`, held constant beyond its ends.
fn log_omega_at(c: &RidgeCurve, i: usize) -> f64 {
    match c.indices.binary_search(&i) {
        Ok(k) => c.omega[k].ln(),
        Err(0) => c.omega[0].ln(),
        Err(k) if k >= c.len() => c.omega[c.len() - 1].ln(),
        Err(k) => {
            let (i0, i1) = (c.indices[k - 1] as f64, c.indices[k] as f64);
            let u = (i as f64 - i0) / (i1 - i0);
            (1.0 - u) * c.omega[k - 1].ln() + u * c.omega[k].ln()
        }
    }
}

/// One pair per ridge, read from the transform integrated over the ridge's
/// passband.
///
/// Since `∫ W(t, ω) ω^{-1/2} dω/ω = C a(t) e^{-iθ(t)}/2` with
/// `C = ∫ ψ̂(s)/s ds` for a mode whose spectrum lies in the band, summing
/// the scalogram over the log-scales within `[(1-Δ), (1+Δ)]` of the ridge
/// (widened by half, and clipped halfway to neighbouring ridges) gives the
/// analytic mode directly. Where the band sum yields a non-monotone phase
/// the pointwise ridge reading of [`pair_from_ridge`] is used instead.
pub fn pairs_from_ridges(s: &Scalogram, curves: &[RidgeCurve], grid: &Grid) -> Result<Vec<PhasePair>> {
    if s.n_times() != grid.n {
        return invalid(format!("scalogram has {} times but the grid has {} samples", s.n_times(), grid.n));
    }
    let w = &s.wavelet;
    let c_band = band_constant(w);
    let half = 1.5 * ((1.0 + w.delta()) / (1.0 - w.delta())).ln() / 2.0;
    // Midway between the upper passband edge of one ridge and the lower edge of the next.
    let edge_shift = 0.5 * (1.0 - w.delta() * w.delta()).ln();
    let log_scales: Vec<f64> = s.scales.iter().map(|v| v.ln()).collect();
    let ns = log_scales.len();
    let weights: Vec<f64> = (0..ns)
        .map(|j| {
            let lo = if j == 0 { log_scales[0] } else { 0.5 * (log_scales[j - 1] + log_scales[j]) };
            let hi = if j + 1 == ns { log_scales[ns - 1] } else { 0.5 * (log_scales[j] + log_scales[j + 1]) };
            (hi - lo) / s.scales[j].sqrt()
        })
        .collect();
    curves
        .iter()
        .enumerate()
        .map(|(k, curve)| {
            let (first, last) = (curve.indices[0], *curve.indices.last().unwrap());
            let z: Vec<Complex64> = (first..=last)
                .into_par_iter()
                .map(|i| {
                    let centre = log_omega_at(curve, i);
                    let (mut lo, mut hi) = (centre - half, centre + half);
                    for (m, other) in curves.iter().enumerate() {
                        if m == k || other.indices.binary_search(&i).is_err() {
                            continue;
                        }
                        let mid = 0.5 * (centre + log_omega_at(other, i)) + edge_shift;
                        if mid > centre {
                            hi = hi.min(mid);
                        } else {
                            lo = lo.max(mid);
                        }
                    }
                    let mut acc = Complex64::new(0.0, 0.0);
                    for j in 0..ns {
                        if log_scales[j] >= lo && log_scales[j] <= hi {
                            acc += s.get(i, j) * weights[j];
                        }
                    }
                    acc / c_band
                })
                .collect();
            let omega: Vec<f64> = (first..=last).map(|i| log_omega_at(curve, i).exp()).collect();
            let peak = z.iter().fold(0.0_f64, |m, v| m.max(v.norm()));
            let floor = 1e-12 * peak.max(f64::MIN_POSITIVE);
            let phase = unwrap_phase(&z.iter().map(|v| -v.arg()).collect::<Vec<_>>());
            let min_step: Vec<f64> = omega.iter().map(|o| (1.0 - w.delta()) / o * grid.dt()).collect();
            let band = RidgeCurve {
                indices: (first..=last).collect(),
                times: (first..=last).map(|i| s.times[i]).collect(),
                magnitude: z.iter().map(|v| v.norm().max(floor)).collect(),
                phase: project_increasing(&phase, &min_step),
                omega,
                ambiguous: curve.ambiguous,
            };
            match extend_reading(&band, grid) {
                Ok(p) => Ok(p),
                Err(_) => pair_from_ridge(curve, grid, w),
            }
        })
        .collect()
}

/// Keeps `phase` where it advances by at least `min_step[i]` per sample and
/// otherwise advances it by exactly that, working outward from the middle.
fn project_increasing(phase: &[f64], min_step: &[f64]) -> Vec<f64> {
    let n = phase.len();
    let mut out = phase.to_vec();
    if n < 2 || phase.windows(2).zip(min_step).all(|(p, m)| p[1] - p[0] >= *m) {
        return out;
    }
    let mid = n / 2;
    for i in mid + 1..n {
        out[i] = out[i - 1] + (phase[i] - phase[i - 1]).max(min_step[i]);
    }
    for i in (0..mid).rev() {
        out[i] = out[i + 1] - (phase[i + 1] - phase[i]).max(min_step[i]);
    }
    out
}

/// Pair from a curve's own magnitude and phase, extended linearly in
/// phase and constantly in envelope outside its time range.
fn extend_reading(curve: &RidgeCurve, grid: &Grid) -> Result<PhasePair> {
    let (theta, a, _) = extend(curve, grid);
    PhasePair::new(*grid, a, theta)
}

/// Phase, envelope (`2 ×` magnitude) and ridge frequency of `curve` on the
/// whole grid.
fn extend(curve: &RidgeCurve, grid: &Grid) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = grid.n;
    let dt = grid.dt();
    let amp: Vec<f64> = curve.magnitude.iter().map(|m| 2.0 * m).collect();
    let ridge_freq: Vec<f64> = curve.omega.iter().map(|w| 1.0 / w).collect();
    let first = curve.indices[0];
    let last = *curve.indices.last().unwrap();
    let k = curve.len() - 1;
    let span_t = curve.times[k] - curve.times[0];
    let mean_slope = (curve.phase[k] - curve.phase[0]) / span_t.max(dt);
    let slope_start = ridge_freq[0].min(mean_slope * 4.0).max(0.0);
    let slope_end = ridge_freq[k].min(mean_slope * 4.0).max(0.0);
    let mut theta = Vec::with_capacity(n);
    let mut a = Vec::with_capacity(n);
    let mut freq = Vec::with_capacity(n);
    for i in 0..n {
        let t = grid.time(i);
        if i < first {
            theta.push(curve.phase[0] - slope_start * (curve.times[0] - t));
        } else if i > last {
            theta.push(curve.phase[k] + slope_end * (t - curve.times[k]));
        } else {
            theta.push(linear_interp(&curve.times, &curve.phase, t));
        }
        a.push(linear_interp(&curve.times, &amp, t));
        freq.push(linear_interp(&curve.times, &ridge_freq, t));
    }
    (theta, a, freq)
}

/// Envelope and phase of a real mode read off its ridge, with the
/// second-order corrections for envelope curvature and chirp applied, and
/// extended over the whole grid where the ridge is missing.
pub fn pair_from_ridge(curve: &RidgeCurve, grid: &Grid, w: &BSplineWavelet) -> Result<PhasePair> {
    if curve.len() < 3 {
        return invalid("ridge too short to define a component");
    }
    let n = grid.n;
    let dt = grid.dt();
    let (theta, a, raw_freq) = extend(curve, grid);

    let mean_freq = raw_freq.iter().sum::<f64>() / n as f64;
    let window = ((2.0 * std::f64::consts::PI / mean_freq / dt).round() as usize).max(1) | 1;
    let freq = moving_average(&differentiate(&theta, dt)?, window);
    let curvature = w.psi_hat_peak_curvature();
    let chirp = differentiate(&freq, dt)?;
    let smooth_a = moving_average(&a, window);
    let a_dd = differentiate(&differentiate(&smooth_a, dt)?, dt)?;

    let corrected_theta: Vec<f64> = theta
        .iter()
        .zip(freq.iter().zip(&chirp))
        .map(|(th, (f, c))| th + 0.5 * curvature * c / (f * f).max(f64::MIN_POSITIVE))
        .collect();
    let a_floor = 1e-12 * a.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let corrected_a: Vec<f64> = a
        .iter()
        .zip(freq.iter().zip(&a_dd))
        .map(|(v, (f, dd))| (v + 0.5 * curvature * dd / (f * f).max(f64::MIN_POSITIVE)).max(a_floor))
        .collect();

    match PhasePair::new(*grid, corrected_a.clone(), corrected_theta) {
        Ok(p) => Ok(p),
        Err(_) => {
            // Fall back to integrating the ridge frequency, anchored at the midpoint.
            let mut fr = moving_average(&raw_freq, window);
            for v in fr.iter_mut() {
                *v = v.max(f64::MIN_POSITIVE);
            }
            let integ = cumulative_integrate(&fr, dt);
            let mid = n / 2;
            let offset = theta[mid] - integ[mid];
            let th: Vec<f64> = integ.iter().map(|v| v + offset).collect();
            PhasePair::new(*grid, corrected_a, th)
        }
    }
}

/// Per-component agreement between two decompositions of the same signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    /// `(index in x, index in y)` pairs of the optimal assignment.
    pub matched: Vec<(usize, usize)>,
    /// `sup |a_k - ã_k|` per matched pair.
    pub amp_errors: Vec<f64>,
    /// `sup |θ_k - θ̃_k| / θ′_k` per matched pair, after removing the
    /// nearest multiple of 2π from the phase difference.
    pub phase_errors: Vec<f64>,
    /// `sup |a_k cos θ_k - ã_k cos θ̃_k|` per matched pair.
    pub reconstruction_errors: Vec<f64>,
    pub counts_equal: bool,
}

impl ComparisonReport {
    /// Largest of all reported errors.
    pub fn max_error(&self) -> f64 {
        self.amp_errors
            .iter()
            .chain(&self.phase_errors)
            .chain(&self.reconstruction_errors)
            .cloned()
            .fold(0.0, f64::max)
    }
}

fn log_freq_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(p, q)| (p / q).abs().ln().abs()).sum::<f64>() / x.len() as f64
}

/// Minimum-cost assignment of rows to columns (rows ≤ columns or the
/// transpose), exhaustive for up to 8 items and greedy beyond.
fn assign(cost: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let rows = cost.len();
    let cols = cost.first().map_or(0, |r| r.len());
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    if rows > cols {
        let t: Vec<Vec<f64>> = (0..cols).map(|j| (0..rows).map(|i| cost[i][j]).collect()).collect();
        let mut out: Vec<(usize, usize)> = assign(&t).into_iter().map(|(j, i)| (i, j)).collect();
        out.sort();
        return out;
    }
    if cols <= 8 {
        let mut best = (f64::INFINITY, Vec::new());
        let mut used = vec![false; cols];
        let mut current = Vec::with_capacity(rows);
        search(cost, 0, &mut used, &mut current, 0.0, &mut best);
        return best.1.into_iter().enumerate().collect();
    }
    let mut pairs: Vec<(f64, usize, usize)> =
        (0..rows).flat_map(|i| (0..cols).map(move |j| (i, j))).map(|(i, j)| (cost[i][j], i, j)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (mut ri, mut cj) = (vec![false; rows], vec![false; cols]);
    let mut out = Vec::new();
    for (_, i, j) in pairs {
        if !ri[i] && !cj[j] {
            ri[i] = true;
            cj[j] = true;
            out.push((i, j));
        }
    }
    out.sort();
    out
}

fn search(
    cost: &[Vec<f64>],
    row: usize,
    used: &mut [bool],
    current: &mut Vec<usize>,
    acc: f64,
    best: &mut (f64, Vec<usize>),
) {
    if acc >= best.0 {
        return;
    }
    if row == cost.len() {
        *best = (acc, current.clone());
        return;
    }
    for j in 0..used.len() {
        if !used[j] {
            used[j] = true;
            current.push(j);
            search(cost, row + 1, used, current, acc + cost[row][j], best);
            current.pop();
            used[j] = false;
        }
    }
}

/// Matches components of two decompositions by frequency and reports the
/// amplitude, phase and reconstruction discrepancies of each match.
pub fn compare_decompositions(x: &Decomposition, y: &Decomposition) -> Result<ComparisonReport> {
    x.grid().ensure_matches(y.grid())?;
    compare_components(&x.components, &y.components)
}

pub fn compare_components(x: &[PhasePair], y: &[PhasePair]) -> Result<ComparisonReport> {
    let fx: Vec<Vec<f64>> = x.iter().map(|p| p.frequency()).collect();
    let fy: Vec<Vec<f64>> = y.iter().map(|p| p.frequency()).collect();
    let cost: Vec<Vec<f64>> = fx.iter().map(|a| fy.iter().map(|b| log_freq_distance(a, b)).collect()).collect();
    let matched = assign(&cost);
    let mut amp_errors = Vec::with_capacity(matched.len());
    let mut phase_errors = Vec::with_capacity(matched.len());
    let mut reconstruction_errors = Vec::with_capacity(matched.len());
    for &(i, j) in &matched {
        let (p, q) = (&x[i], &y[j]);
        p.grid().ensure_matches(q.grid())?;
        amp_errors.push(p.a().iter().zip(q.a()).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max));
        let diff: Vec<f64> = p.theta().iter().zip(q.theta()).map(|(u, v)| u - v).collect();
        let mean = diff.iter().sum::<f64>() / diff.len() as f64;
        let shift = std::f64::consts::TAU * (mean / std::f64::consts::TAU).round();
        phase_errors.push(
            diff.iter()
                .zip(&fx[i])
                .map(|(d, f)| ((d - shift) / f).abs())
                .fold(0.0, f64::max),
        );
        let (cp, cq) = (p.component(), q.component());
        reconstruction_errors
            .push(cp.values().iter().zip(cq.values()).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max));
    }
    Ok(ComparisonReport {
        matched,
        amp_errors,
        phase_errors,
        reconstruction_errors,
        counts_equal: x.len() == y.len(),
    })
}
