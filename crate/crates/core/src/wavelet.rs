//! Band-limited wavelet whose Fourier transform is a cardinal quartic
//! B-spline (order five), and the continuous wavelet transform built on it.
//!
//! Conventions: `ψ̂(ξ) = ∫ ψ(z) e^{-iξz} dz`, so `ψ(τ) = (1/2π) ∫ ψ̂(ξ) e^{iξτ} dξ`,
//! and the transform of a (possibly complex) signal `x` is
//!
//! ```text
//! W(x)(t, ω) = ω^{-1/2} ∫ x(τ) ψ((τ - t) / ω) dτ.
//! ```
//!
//! With this convention a mode `a e^{-iθ}` concentrates near `ω θ′(t) = 1`,
//! and a real cosine `a cos θ` yields half of that (the `e^{+iθ}` half
//! lands on negative frequencies where `ψ̂` vanishes).

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, SparseTfError};
use crate::separation::check_scale_separation;
use crate::signal::{Boundary, Grid, PhasePair, SampledSignal};

/// `B₅(5/2)`, the peak of the order-five cardinal B-spline.
pub const B5_PEAK: f64 = 115.0 / 192.0;

const SUPPORT_SNAP: f64 = 1e-9;

/// `B₅″(5/2)`.
const B5_PEAK_CURVATURE: f64 = -1.25;

/// Cardinal B-spline of order five (degree four) supported on `[0, 5]`.
pub fn bspline5(x: f64) -> f64 {
    if !(x > 0.0 && x < 5.0) {
        return 0.0;
    }
    // Symmetric about 5/2; evaluate on the left half to limit cancellation.
    let x = if x > 2.5 { 5.0 - x } else { x };
    const BINOM: [f64; 3] = [1.0, 5.0, 10.0];
    let mut acc = 0.0;
    for (k, c) in BINOM.iter().enumerate() {
        let u = x - k as f64;
        if u > 0.0 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * c * u.powi(4);
        }
    }
    acc / 24.0
}

/// The wavelet with `ψ̂` supported on `[1 - Δ, 1 + Δ]` and `ψ̂(1) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BSplineWavelet {
    delta: f64,
}

/// The three absolute moments `∫|ψ|`, `∫|τψ′|`, `∫|τ²ψ″|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveletMoments {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
}

pub fn make_wavelet(delta: f64) -> Result<BSplineWavelet> {
    BSplineWavelet::new(delta)
}

impl BSplineWavelet {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return invalid(format!("wavelet half-bandwidth must lie in (0, 1), got {delta}"));
        }
        Ok(Self { delta })
    }

    #[inline]
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Knot spacing of the spline in ξ.
    #[inline]
    fn knot(&self) -> f64 {
        0.4 * self.delta
    }

    /// Peak of `|ψ|`, attained at τ = 0.
    #[inline]
    fn amplitude(&self) -> f64 {
        self.knot() / (2.0 * PI * B5_PEAK)
    }

    pub fn psi_hat(&self, xi: f64) -> f64 {
        let u = (xi - 1.0) / self.knot() + 2.5;
        // Snap round-off at the support ends so ψ̂(1 ± Δ) is exactly zero.
        if !(u > SUPPORT_SNAP && u < 5.0 - SUPPORT_SNAP) {
            return 0.0;
        }
        bspline5(u) / B5_PEAK
    }

    /// `ψ̂″(1)`, the (negative) curvature at the peak.
    pub fn psi_hat_peak_curvature(&self) -> f64 {
        B5_PEAK_CURVATURE / (B5_PEAK * self.knot() * self.knot())
    }

    /// `ψ(τ) = K e^{iτ} sinc⁵(hτ/2)` with `h = 2Δ/5` and `K = h / (2π B₅(5/2))`.
    pub fn psi(&self, tau: f64) -> Complex64 {
        let s = sinc(0.5 * self.knot() * tau);
        Complex64::from_polar(self.amplitude() * s.powi(5), tau)
    }

    /// `(ψ, ψ′, ψ″)` at τ in closed form.
    pub fn psi_with_derivatives(&self, tau: f64) -> (Complex64, Complex64, Complex64) {
        let half = 0.5 * self.knot();
        let (s, ds, dds) = sinc_derivatives(half * tau);
        let s1 = half * ds;
        let s2 = half * half * dds;
        let carrier = Complex64::from_polar(self.amplitude(), tau);
        let s3 = s * s * s;
        let s4 = s3 * s;
        let p0 = Complex64::new(s4 * s, 0.0);
        let p1 = Complex64::new(5.0 * s4 * s1, s4 * s);
        let p2 = Complex64::new(-s4 * s + 20.0 * s3 * s1 * s1 + 5.0 * s4 * s2, 10.0 * s4 * s1);
        (carrier * p0, carrier * p1, carrier * p2)
    }

    pub fn evaluate_time_domain(&self, tau: &[f64]) -> Result<Vec<Complex64>> {
        if let Some(i) = tau.iter().position(|t| !t.is_finite()) {
            return invalid(format!("tau[{i}] is not finite"));
        }
        Ok(tau.iter().map(|&t| self.psi(t)).collect())
    }

    /// Radius beyond which the `|sinc|⁵` envelope of `|ψ|` stays below
    /// `rel` times its peak.
    pub fn truncation_radius(&self, rel: f64) -> f64 {
        2.0 / self.knot() * rel.powf(-0.2)
    }

    pub fn moments(&self) -> Result<WaveletMoments> {
        moments(self)
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// `(sinc, sinc′, sinc″)` with series near the removable singularity.
fn sinc_derivatives(x: f64) -> (f64, f64, f64) {
    if x.abs() < 1e-3 {
        let x2 = x * x;
        (
            1.0 - x2 / 6.0 + x2 * x2 / 120.0,
            -x / 3.0 + x * x2 / 30.0,
            -1.0 / 3.0 + x2 / 10.0 - x2 * x2 / 168.0,
        )
    } else {
        let (sn, cs) = x.sin_cos();
        let x2 = x * x;
        (
            sn / x,
            (x * cs - sn) / x2,
            (-x2 * sn - 2.0 * x * cs + 2.0 * sn) / (x2 * x),
        )
    }
}

/// Relative accuracy targeted by [`moments`].
const MOMENT_RTOL: f64 = 1e-6;
/// Largest truncation radius (in units of the sinc argument) tried by [`moments`].
const MOMENT_MAX_LOBES: usize = 2_000_000;

/// Absolute moments of ψ by adaptive Simpson quadrature lobe by lobe,
/// truncated once an analytic bound on the tail falls below the target.
pub fn moments(w: &BSplineWavelet) -> Result<WaveletMoments> {
    let h = w.knot();
    let k = w.amplitude();
    let scale = 2.0 / h; // τ per unit of the sinc argument
    let lobe = PI * scale;
    let f1 = |tau: f64| w.psi(tau).norm();
    let f2 = |tau: f64| (tau * w.psi_with_derivatives(tau).1).norm();
    let f3 = |tau: f64| (tau * tau * w.psi_with_derivatives(tau).2).norm();
    let c2 = (1.0 + 6.25 * h * h).sqrt();
    let c3 = 1.0 + 6.25 * h * h + 5.0 * h;

    let mut acc = [0.0_f64; 3];
    let mut tails = [f64::INFINITY; 3];
    for j in 0..MOMENT_MAX_LOBES {
        let (a, b) = (j as f64 * lobe, (j + 1) as f64 * lobe);
        acc[0] += adaptive_simpson(&f1, a, b, 1e-13 * k * lobe, 40);
        acc[1] += adaptive_simpson(&f2, a, b, 1e-13 * k * lobe * scale, 40);
        acc[2] += adaptive_simpson(&f3, a, b, 1e-13 * k * lobe * scale * scale, 40);
        let x = (j + 1) as f64 * PI;
        if x < 4.0 {
            continue;
        }
        let b5 = (1.0 + 3.0 / x).powi(5);
        // ∫_X^∞ of the envelope bounds, in τ.
        tails[0] = k * b5 * scale * x.powi(-4) / 4.0;
        tails[1] = k * b5 * c2 * scale.powi(2) * x.powi(-3) / 3.0;
        tails[2] = k * b5 * c3 * scale.powi(3) * x.powi(-2) / 2.0;
        if tails.iter().zip(&acc).all(|(t, v)| *t < 0.1 * MOMENT_RTOL * v) {
            return Ok(WaveletMoments { i1: 2.0 * acc[0], i2: 2.0 * acc[1], i3: 2.0 * acc[2] });
        }
    }
    let achieved = tails.iter().zip(&acc).map(|(t, v)| t / v).fold(0.0, f64::max);
    Err(SparseTfError::Numerical { message: "moment integrals did not converge".into(), achieved })
}

fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(fa, fm, fb, a, b);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(fa, flm, fm, a, m);
    let right = simpson(fm, frm, fb, m, b);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Complex CWT coefficients on a (time × scale) grid.
#[derive(Debug, Clone)]
pub struct Scalogram {
    pub times: Vec<f64>,
    pub scales: Vec<f64>,
    /// Scale-major storage: `coeffs[j * times.len() + i] = W(times[i], scales[j])`.
    coeffs: Vec<Complex64>,
    pub wavelet: BSplineWavelet,
    pub boundary: Boundary,
    pub warnings: Vec<String>,
}

impl Scalogram {
    pub fn new(
        times: Vec<f64>,
        scales: Vec<f64>,
        coeffs: Vec<Complex64>,
        wavelet: BSplineWavelet,
        boundary: Boundary,
    ) -> Result<Self> {
        if coeffs.len() != times.len() * scales.len() {
            return invalid("scalogram coefficient count does not match its axes");
        }
        if scales.iter().any(|s| !(*s > 0.0)) || scales.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("scales must be positive and strictly increasing");
        }
        if coeffs.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return invalid("scalogram coefficients must be finite");
        }
        Ok(Self { times, scales, coeffs, wavelet, boundary, warnings: Vec::new() })
    }

    #[inline]
    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    #[inline]
    pub fn n_scales(&self) -> usize {
        self.scales.len()
    }

    #[inline]
    pub fn get(&self, time_index: usize, scale_index: usize) -> Complex64 {
        self.coeffs[scale_index * self.times.len() + time_index]
    }

    /// Coefficients at one scale, over all times.
    pub fn row(&self, scale_index: usize) -> &[Complex64] {
        let n = self.times.len();
        &self.coeffs[scale_index * n..(scale_index + 1) * n]
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn max_magnitude(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }
}

/// Log-spaced scales `ω_min 2^{j/voices}` up to at least `ω_max`.
pub fn log_scales(omega_min: f64, omega_max: f64, voices: usize) -> Result<Vec<f64>> {
    if !(omega_min > 0.0 && omega_max > omega_min) || voices == 0 {
        return invalid(format!("bad scale range [{omega_min}, {omega_max}] with {voices} voices"));
    }
    let count = (voices as f64 * (omega_max / omega_min).log2()).ceil() as usize;
    Ok((0..=count).map(|j| omega_min * 2f64.powf(j as f64 / voices as f64)).collect())
}

/// Scales whose passbands cover frequencies `[f_min, f_max]` (cycles per unit time).
pub fn default_scales(f_min: f64, f_max: f64, voices: usize, w: &BSplineWavelet) -> Result<Vec<f64>> {
    if !(f_min > 0.0 && f_max >= f_min) {
        return invalid(format!("bad frequency range [{f_min}, {f_max}]"));
    }
    let pad = 1.0 + w.delta();
    log_scales(1.0 / (2.0 * PI * f_max * pad), pad / (2.0 * PI * f_min), voices)
}

/// Frequency band (cycles per unit time) holding the signal's spectral energy:
/// bins within 1% of the peak spectral amplitude, excluding DC.
pub fn estimate_frequency_range(f: &SampledSignal, boundary: Boundary) -> Option<(f64, f64)> {
    let n = f.len();
    let x = f.values();
    let (data, span): (Vec<Complex64>, f64) = match boundary {
        Boundary::Periodic => {
            (x[..n - 1].iter().map(|&v| Complex64::new(v, 0.0)).collect(), f.grid().span())
        }
        Boundary::Mirror => {
            // Hann taper keeps leakage from the record ends out of the estimate.
            let data = x
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    let wgt = 0.5 - 0.5 * (2.0 * PI * i as f64 / (n - 1) as f64).cos();
                    Complex64::new(v * wgt, 0.0)
                })
                .collect();
            (data, f.grid().span() + f.grid().dt())
        }
    };
    let len = data.len();
    let mut buf = data;
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    let half = len / 2;
    let mags: Vec<f64> = buf[..=half].iter().map(|c| c.norm()).collect();
    let peak = mags[1..].iter().cloned().fold(0.0, f64::max);
    if !(peak > 0.0) || peak < 1e-12 * x.iter().fold(0.0_f64, |m, v| m.max(v.abs())) * len as f64 {
        return None;
    }
    let above: Vec<usize> = (1..=half).filter(|&k| mags[k] >= 0.01 * peak).collect();
    let kmin = *above.first()?;
    let kmax = *above.last()?;
    Some((kmin as f64 / span, kmax as f64 / span))
}

/// Extends `x` (one sample per grid point) to one period of its periodic or
/// mirrored continuation.
fn extend(x: &[Complex64], boundary: Boundary) -> Vec<Complex64> {
    let n = x.len();
    match boundary {
        Boundary::Periodic => x[..n - 1].to_vec(),
        Boundary::Mirror => {
            let mut out = x.to_vec();
            out.extend(x[1..n - 1].iter().rev());
            out
        }
    }
}

/// `ψ̂` summed over all aliases of DFT bin `k` at scale ω.
fn aliased_multiplier(w: &BSplineWavelet, omega: f64, k: usize, len: usize, dt: f64) -> f64 {
    let sampling = 2.0 * PI / dt;
    let xi_k = sampling * k as f64 / len as f64;
    let upper = 1.0 + w.delta();
    let mut acc = 0.0;
    let mut j = 1.0;
    loop {
        let arg = omega * (j * sampling - xi_k);
        if arg > upper {
            break;
        }
        acc += w.psi_hat(arg);
        j += 1.0;
    }
    acc
}

/// Minimum samples per carrier period at the top of the passband before a
/// scale is reported as unresolved.
const MIN_SAMPLES_PER_PERIOD: f64 = 8.0;

/// Continuous wavelet transform by FFT on the periodic (or mirrored)
/// extension. Agrees with [`cwt_direct`] to quadrature round-off.
pub fn cwt(f: &SampledSignal, w: &BSplineWavelet, scales: &[f64], boundary: Boundary) -> Result<Scalogram> {
    let x: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    cwt_complex(&x, f.grid(), w, scales, boundary)
}

/// [`cwt`] for complex samples, e.g. `a e^{-iθ}`.
pub fn cwt_complex(
    x: &[Complex64],
    grid: &Grid,
    w: &BSplineWavelet,
    scales: &[f64],
    boundary: Boundary,
) -> Result<Scalogram> {
    check_scales(scales)?;
    if x.len() != grid.n || grid.n < 3 {
        return invalid("signal length does not match its grid");
    }
    let dt = grid.dt();
    let ext = extend(x, boundary);
    let len = ext.len();
    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(len);
    let inverse: Arc<dyn Fft<f64>> = planner.plan_fft_inverse(len);
    let mut spectrum = ext;
    forward.process(&mut spectrum);
    let spectrum = spectrum;
    let n = grid.n;
    let norm = 1.0 / len as f64;

    let rows: Vec<Vec<Complex64>> = scales
        .par_iter()
        .map(|&omega| {
            let mut buf: Vec<Complex64> = spectrum
                .iter()
                .enumerate()
                .map(|(k, c)| c * aliased_multiplier(w, omega, k, len, dt))
                .collect();
            inverse.process(&mut buf);
            let gain = omega.sqrt() * norm;
            (0..n).map(|i| buf[i % len] * gain).collect()
        })
        .collect();

    let mut s = Scalogram::new(grid.times(), scales.to_vec(), rows.concat(), *w, boundary)?;
    s.warnings = resolution_warnings(w, scales, dt);
    Ok(s)
}

fn check_scales(scales: &[f64]) -> Result<()> {
    if scales.is_empty() {
        return invalid("at least one scale is required");
    }
    if let Some(s) = scales.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
        return invalid(format!("scales must be positive, got {s}"));
    }
    if scales.windows(2).any(|p| p[1] <= p[0]) {
        return invalid("scales must be strictly increasing");
    }
    Ok(())
}

fn resolution_warnings(w: &BSplineWavelet, scales: &[f64], dt: f64) -> Vec<String> {
    scales
        .iter()
        .filter(|&&omega| 2.0 * PI * omega / (1.0 + w.delta()) < MIN_SAMPLES_PER_PERIOD * dt)
        .map(|omega| {
            format!(
                "scale {omega:.4e} is under-resolved: fewer than {MIN_SAMPLES_PER_PERIOD} samples per carrier period"
            )
        })
        .collect()
}

/// Direct trapezoidal evaluation of `W(x)(t_i, ω)` on the extended record,
/// with ψ truncated where its envelope falls below `trunc_rel` of the peak.
pub fn transform_at(
    x: &[Complex64],
    grid: &Grid,
    w: &BSplineWavelet,
    boundary: Boundary,
    time_index: usize,
    omega: f64,
    trunc_rel: f64,
) -> Complex64 {
    let n = grid.n;
    let dt = grid.dt();
    let period = match boundary {
        Boundary::Periodic => n - 1,
        Boundary::Mirror => 2 * (n - 1),
    } as isize;
    let fetch = |m: isize| -> Complex64 {
        let j = m.rem_euclid(period) as usize;
        match boundary {
            Boundary::Periodic => x[j],
            Boundary::Mirror => {
                if j < n {
                    x[j]
                } else {
                    x[2 * (n - 1) - j]
                }
            }
        }
    };
    let radius = (w.truncation_radius(trunc_rel) * omega / dt).ceil() as isize;
    let i = time_index as isize;
    let mut acc = Complex64::new(0.0, 0.0);
    for m in -radius..=radius {
        acc += fetch(i + m) * w.psi(m as f64 * dt / omega);
    }
    acc * (dt / omega.sqrt())
}

/// Direct-quadrature CWT at the requested time indices; the reference
/// against which the FFT path is checked.
pub fn cwt_direct(
    f: &SampledSignal,
    w: &BSplineWavelet,
    scales: &[f64],
    boundary: Boundary,
    time_indices: &[usize],
    trunc_rel: f64,
) -> Result<Vec<Vec<Complex64>>> {
    check_scales(scales)?;
    let x: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    Ok(scales
        .par_iter()
        .map(|&omega| {
            time_indices
                .iter()
                .map(|&i| transform_at(&x, f.grid(), w, boundary, i, omega, trunc_rel))
                .collect()
        })
        .collect())
}

/// Concentration check for one mode at one probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationCheck {
    /// `|ω^{-1/2} W(a e^{-iθ})(t, ω) - a(t) e^{-iθ(t)} ψ̂(ω θ′(t))|`.
    pub error: f64,
    /// `C ε` with the constant assembled from measured `ε`, `A`, `M′` and the moments.
    pub bound: f64,
    pub epsilon: f64,
}

/// Constant `C = (A + 4|a| + 1) I₁ + [M′ + (M′ + 1)|a|] I₂ + M′ |a| I₃`.
pub fn concentration_constant(m: &WaveletMoments, sup_a: f64, a_t: f64, m_prime: f64) -> f64 {
    let a = a_t.abs();
    (sup_a + 4.0 * a + 1.0) * m.i1 + (m_prime + (m_prime + 1.0) * a) * m.i2 + m_prime * a * m.i3
}

/// Compares the transform of `a e^{-iθ}` at `(t, ω)` with its leading term.
/// The pair is treated as one period of a periodic mode.
pub fn concentration_error(pair: &PhasePair, w: &BSplineWavelet, t: f64, omega: f64) -> Result<ConcentrationCheck> {
    let moments = w.moments()?;
    concentration_error_with(pair, w, &moments, t, omega)
}

/// [`concentration_error`] with precomputed moments.
pub fn concentration_error_with(
    pair: &PhasePair,
    w: &BSplineWavelet,
    moments: &WaveletMoments,
    t: f64,
    omega: f64,
) -> Result<ConcentrationCheck> {
    if !(omega > 0.0 && omega.is_finite()) {
        return invalid(format!("scale must be positive, got {omega}"));
    }
    let grid = pair.grid();
    if !(t >= grid.t0 && t <= grid.t1) {
        return invalid(format!("probe time {t} lies outside [{}, {}]", grid.t0, grid.t1));
    }
    let report = check_scale_separation(pair, 1.0)?;
    let eps = report.eps_envelope.max(report.eps_frequency);
    let x: Vec<Complex64> = pair
        .a()
        .iter()
        .zip(pair.theta())
        .map(|(a, th)| Complex64::from_polar(*a, -th))
        .collect();
    let i = grid.nearest_index(t);
    let coeff = transform_at(&x, grid, w, Boundary::Periodic, i, omega, 1e-10);
    let freq = pair.frequency();
    let a_t = pair.a()[i];
    let lead = Complex64::from_polar(a_t * w.psi_hat(omega * freq[i]), -pair.theta()[i]);
    let error = (coeff / omega.sqrt() - lead).norm();
    let sup_a = pair.a().iter().cloned().fold(0.0, f64::max);
    let c = concentration_constant(moments, sup_a, a_t, report.m_prime);
    Ok(ConcentrationCheck { error, bound: c * eps, epsilon: eps })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Cox–de Boor recursion for the cardinal B-spline of order `k` on `[0, k]`.
    fn cox_de_boor(x: f64, k: usize) -> f64 {
        if k == 1 {
            return if (0.0..1.0).contains(&x) { 1.0 } else { 0.0 };
        }
        let kf = (k - 1) as f64;
        (x / kf) * cox_de_boor(x, k - 1) + ((k as f64 - x) / kf) * cox_de_boor(x - 1.0, k - 1)
    }

    #[test]
    fn bspline_matches_recursion() {
        for i in 0..=500 {
            let x = i as f64 * 0.01;
            assert!((bspline5(x) - cox_de_boor(x, 5)).abs() < 1e-13, "x = {x}");
        }
        assert!((bspline5(2.5) - B5_PEAK).abs() < 1e-15);
    }

    #[test]
    fn psi_hat_support_peak_and_symmetry() {
        let w = make_wavelet(0.2).unwrap();
        assert!((w.psi_hat(1.0) - 1.0).abs() < 1e-15);
        assert_eq!(w.psi_hat(0.8), 0.0);
        assert_eq!(w.psi_hat(1.2), 0.0);
        assert!((w.psi_hat(0.9) - w.psi_hat(1.1)).abs() < 1e-14);
        let oracle = cox_de_boor(2.5 + 1.25, 5) / cox_de_boor(2.5, 5);
        assert!((w.psi_hat(1.1) - oracle).abs() < 1e-13);
        let oracle = cox_de_boor(2.5 - 1.25, 5) / cox_de_boor(2.5, 5);
        assert!((w.psi_hat(0.9) - oracle).abs() < 1e-13);
        for i in 0..200 {
            assert!(w.psi_hat(0.75 + i as f64 * 0.0025) <= 1.0 + 1e-15);
        }
    }

    #[test]
    fn rejects_bad_delta() {
        assert!(make_wavelet(0.0).is_err());
        assert!(make_wavelet(1.0).is_err());
        assert!(make_wavelet(-0.3).is_err());
    }

    #[test]
    fn psi_at_origin_matches_quadrature_of_psi_hat() {
        let w = make_wavelet(0.2).unwrap();
        // (1/2π) ∫ ψ̂ by composite Simpson over the support.
        let n = 20_000;
        let (a, b) = (0.8, 1.2);
        let h = (b - a) / n as f64;
        let mut acc = w.psi_hat(a) + w.psi_hat(b);
        for i in 1..n {
            let c = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += c * w.psi_hat(a + i as f64 * h);
        }
        let oracle = acc * h / 3.0 / (2.0 * PI);
        let got = w.psi(0.0);
        assert!(got.im.abs() < 1e-15);
        assert!((got.re - oracle).abs() < 1e-8, "{} vs {oracle}", got.re);
    }

    #[test]
    fn psi_modulus_is_even() {
        let w = make_wavelet(0.3).unwrap();
        for i in 0..100 {
            let t = i as f64 * 0.731;
            assert!((w.psi(t).norm() - w.psi(-t).norm()).abs() < 1e-15);
        }
    }

    #[test]
    fn closed_form_derivatives_match_finite_differences() {
        let w = make_wavelet(0.2).unwrap();
        let h = 1e-4;
        for &t in &[0.0, 0.3, 2.0, 17.5, -40.2, 120.0] {
            let (_, d1, d2) = w.psi_with_derivatives(t);
            let fd1 = (w.psi(t + h) - w.psi(t - h)) / (2.0 * h);
            let fd2 = (w.psi(t + h) - w.psi(t) * 2.0 + w.psi(t - h)) / (h * h);
            let scale = w.psi(0.0).norm();
            assert!((d1 - fd1).norm() < 1e-7 * scale, "ψ′ at {t}");
            assert!((d2 - fd2).norm() < 1e-4 * scale, "ψ″ at {t}");
        }
    }

    #[test]
    fn dft_of_sampled_psi_reproduces_psi_hat() {
        let w = make_wavelet(0.2).unwrap();
        // ψ is sampled on [-T, T) and transformed; bins inside the band are
        // compared with the closed-form ψ̂.
        let dt = 0.25;
        let len = 1 << 16;
        let mut buf: Vec<Complex64> =
            (0..len).map(|m| w.psi((m as f64 - (len / 2) as f64) * dt)).collect();
        FftPlanner::new().plan_fft_forward(len).process(&mut buf);
        let mut worst = 0.0_f64;
        for (k, c) in buf.iter().enumerate() {
            let xi = 2.0 * PI * k as f64 / (len as f64 * dt);
            if !(0.8..=1.2).contains(&xi) {
                continue;
            }
            // Shift the origin back to τ = 0.
            let phase = Complex64::from_polar(1.0, xi * (len / 2) as f64 * dt);
            let approx = (c * phase * dt).re;
            worst = worst.max((approx - w.psi_hat(xi)).abs());
        }
        assert!(worst < 1e-4, "max error {worst}");
    }

    #[test]
    fn moments_are_finite_and_positive() {
        let m = make_wavelet(0.2).unwrap().moments().unwrap();
        for v in [m.i1, m.i2, m.i3] {
            assert!(v.is_finite() && v > 0.0);
        }
    }

    #[test]
    fn first_moment_matches_brute_force_trapezoid() {
        let w = make_wavelet(0.4).unwrap();
        let m = w.moments().unwrap();
        let dt = 0.01;
        let half = 40_000.0;
        let n = (half / dt) as usize;
        let brute: f64 = dt * (0..=2 * n)
            .map(|i| w.psi(-half + i as f64 * dt).norm())
            .sum::<f64>();
        assert!((brute - m.i1).abs() < 1e-5 * m.i1, "{brute} vs {}", m.i1);
    }

    #[test]
    fn moments_scale_as_powers_of_inverse_bandwidth() {
        // With ψ̂(1) = 1 the time-domain amplitude is proportional to Δ and the
        // width to 1/Δ, so I₁ is Δ-independent while I₂ ~ Δ⁻¹ and I₃ ~ Δ⁻²
        // for small Δ.
        let at = |d: f64| make_wavelet(d).unwrap().moments().unwrap();
        let (a, b) = (at(0.05), at(0.025));
        assert!((b.i1 / a.i1 - 1.0).abs() < 0.01);
        assert!((b.i2 / a.i2 - 2.0).abs() < 0.05);
        assert!((b.i3 / a.i3 - 4.0).abs() < 0.1);
    }

    #[test]
    fn log_scales_cover_range() {
        let s = log_scales(1e-3, 1e-2, 32).unwrap();
        assert!(s[0] == 1e-3 && *s.last().unwrap() >= 1e-2 * (1.0 - 1e-12));
        assert!(s.windows(2).all(|p| (p[1] / p[0] - 2f64.powf(1.0 / 32.0)).abs() < 1e-12));
        assert!(log_scales(1.0, 0.5, 8).is_err());
    }
}
