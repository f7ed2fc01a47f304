//! Test signals with known decompositions.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::separation::{check_scale_separation, SeparationReport};
use crate::signal::{reconstruct, Grid, PhasePair, SampledSignal};

/// Metrics measured on a ground truth. Unlike [`crate::DictionaryParams`]
/// these may violate dictionary constraints (e.g. `d_min = 1` for crossing
/// frequencies).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasuredParams {
    /// Largest measured separation factor over the components.
    pub epsilon: f64,
    /// Smallest pointwise ratio between adjacent component frequencies;
    /// `None` for a single component.
    pub d_min: Option<f64>,
    /// Largest `sup θ′/inf θ′` over the components.
    pub m_prime: f64,
    /// RMS of the residual.
    pub epsilon0: f64,
    pub reports: Vec<SeparationReport>,
}

#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub pairs: Vec<PhasePair>,
    pub residual: SampledSignal,
    pub params: MeasuredParams,
}

impl GroundTruth {
    pub fn new(pairs: Vec<PhasePair>, residual: SampledSignal) -> Result<Self> {
        if pairs.is_empty() {
            return invalid("ground truth needs at least one component");
        }
        let mut pairs = pairs;
        pairs.sort_by(|x, y| x.mean_frequency().total_cmp(&y.mean_frequency()));
        let reports = pairs
            .iter()
            .map(|p| check_scale_separation(p, 1.0))
            .collect::<Result<Vec<_>>>()?;
        let freqs: Vec<Vec<f64>> = pairs.iter().map(|p| p.frequency()).collect();
        let d_min = (pairs.len() > 1).then(|| {
            freqs
                .windows(2)
                .map(|w| w[1].iter().zip(&w[0]).map(|(h, l)| h / l).fold(f64::INFINITY, f64::min))
                .fold(f64::INFINITY, f64::min)
        });
        let params = MeasuredParams {
            epsilon: reports.iter().map(|r| r.epsilon()).fold(0.0, f64::max),
            d_min,
            m_prime: reports.iter().map(|r| r.m_prime).fold(1.0, f64::max),
            epsilon0: residual.rms(),
            reports,
        };
        Ok(Self { pairs, residual, params })
    }

    /// `Σ a_k cos θ_k + r`.
    pub fn signal(&self) -> Result<SampledSignal> {
        reconstruct(&self.pairs)?.add(&self.residual)
    }
}

/// Two unit-amplitude modes whose frequencies touch at `t = 1/2`, together
/// with the alternative split that swaps the phases there. Both ground
/// truths reconstruct the same signal on `[0, 1]`.
pub fn gen_crossing_example(k: u32, n: usize) -> Result<(SampledSignal, GroundTruth, GroundTruth)> {
    if k == 0 {
        return invalid("crossing example needs k >= 1");
    }
    let need = 64 * k as usize;
    if n < need {
        return invalid(format!("crossing example with k = {k} needs n >= {need}, got {n}"));
    }
    let grid = Grid::new(0.0, 1.0, n)?;
    let kf = k as f64;
    let theta1 = move |t: f64| 6.0 * PI * kf * t + kf * PI;
    let theta2 = move |t: f64| 8.0 * PI * kf * t + kf * (2.0 * PI * t).sin();
    let phi1 = move |t: f64| if t < 0.5 { theta1(t) } else { theta2(t) };
    let phi2 = move |t: f64| if t < 0.5 { theta2(t) } else { theta1(t) };
    let one = |_: f64| 1.0;
    let split = GroundTruth::new(
        vec![PhasePair::from_fns(grid, one, theta1)?, PhasePair::from_fns(grid, one, theta2)?],
        SampledSignal::zeros(grid),
    )?;
    let swapped = GroundTruth::new(
        vec![PhasePair::from_fns(grid, one, phi1)?, PhasePair::from_fns(grid, one, phi2)?],
        SampledSignal::zeros(grid),
    )?;
    Ok((split.signal()?, split, swapped))
}

/// `θ₁` of the mode-mixing example on `[0, 6]`: linear, cubic transition,
/// cubic transition, linear, joined with matching value, slope and curvature.
pub fn mode_mixing_phase(t: f64) -> f64 {
    if t <= 2.0 {
        10.0 * PI * t
    } else if t <= 3.0 {
        let u = t - 2.0;
        20.0 * PI + 10.0 * PI * u + 5.0 * PI / 3.0 * u.powi(3)
    } else if t <= 4.0 {
        let u = t - 4.0;
        50.0 * PI + 20.0 * PI * u - 5.0 * PI / 3.0 * u.powi(3)
    } else {
        50.0 * PI + 20.0 * PI * (t - 4.0)
    }
}

/// Two modes `(2 + t) cos θ₁` and `(8 - t) cos 2θ₁` on `[0, 6]` whose
/// frequencies each double across the record, plus the single spurious pair
/// `(5 + |t - 3|, 20πt)` that follows the larger envelope and mixes them.
pub fn gen_mode_mixing_example(n: usize) -> Result<(SampledSignal, GroundTruth, PhasePair)> {
    if n < 4096 {
        return invalid(format!("mode-mixing example needs n >= 4096, got {n}"));
    }
    let grid = Grid::new(0.0, 6.0, n)?;
    let truth = GroundTruth::new(
        vec![
            PhasePair::from_fns(grid, |t| 2.0 + t, mode_mixing_phase)?,
            PhasePair::from_fns(grid, |t| 8.0 - t, |t| 2.0 * mode_mixing_phase(t))?,
        ],
        SampledSignal::zeros(grid),
    )?;
    let spurious = PhasePair::from_fns(grid, |t| 5.0 + (t - 3.0).abs(), |t| 20.0 * PI * t)?;
    Ok((truth.signal()?, truth, spurious))
}

/// Largest perturbation amplitude of the relative frequency modulation.
const MAX_FREQ_PERTURBATION: f64 = 0.1;
/// Largest relative envelope modulation.
const MAX_ENVELOPE_MODULATION: f64 = 0.5;
/// Fraction of the target ε used by the analytic design bound, leaving room
/// for finite-difference error in the measured metrics.
const EPS_MARGIN: f64 = 0.8;
/// Samples per carrier period required at the highest instantaneous frequency.
const SAMPLES_PER_PERIOD: f64 = 16.0;

/// Real trigonometric polynomial `Σ_{j=1}^{3} c_j cos 2πjt + s_j sin 2πjt`.
#[derive(Debug, Clone)]
struct TrigPoly {
    cos: [f64; 3],
    sin: [f64; 3],
}

impl TrigPoly {
    /// Random polynomial with `Σ |c_j| + |s_j| = amplitude`.
    fn random(rng: &mut ChaCha8Rng, amplitude: f64) -> Self {
        let degree = rng.gen_range(1..=3usize);
        let mut raw = [0.0_f64; 6];
        for v in raw.iter_mut().take(2 * degree) {
            *v = rng.gen_range(-1.0..1.0);
        }
        let total: f64 = raw.iter().map(|v| v.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
        let s = amplitude / total;
        Self {
            cos: [raw[0] * s, raw[2] * s, raw[4] * s],
            sin: [raw[1] * s, raw[3] * s, raw[5] * s],
        }
    }

    fn eval(&self, t: f64) -> f64 {
        (0..3)
            .map(|j| {
                let w = 2.0 * PI * (j + 1) as f64;
                self.cos[j] * (w * t).cos() + self.sin[j] * (w * t).sin()
            })
            .sum()
    }

    /// Antiderivative with zero mean over a period (no constant term).
    fn integral(&self, t: f64) -> f64 {
        (0..3)
            .map(|j| {
                let w = 2.0 * PI * (j + 1) as f64;
                (self.cos[j] * (w * t).sin() - self.sin[j] * (w * t).cos()) / w
            })
            .sum()
    }

    /// Upper bound on `sup |p′|`.
    fn derivative_bound(&self) -> f64 {
        (0..3).map(|j| 2.0 * PI * (j + 1) as f64 * (self.cos[j].abs() + self.sin[j].abs())).sum()
    }
}

struct RandomMode {
    amplitude: f64,
    envelope: TrigPoly,
    perturbation: TrigPoly,
    offset: f64,
}

impl RandomMode {
    fn a(&self, t: f64) -> f64 {
        self.amplitude * (1.0 + self.envelope.eval(t))
    }

    /// `θ′ / (2π B)`
    fn relative_frequency(&self, t: f64) -> f64 {
        1.0 + self.perturbation.eval(t)
    }

    /// Smallest integer carrier count keeping both analytic separation bounds
    /// under `eps`. Callers also impose at least `1/eps_target` carriers so the
    /// base frequency scales with the target regardless of the random draw.
    fn min_carriers(&self, eps: f64) -> f64 {
        let p = MAX_FREQ_PERTURBATION;
        let env = self.amplitude * self.envelope.derivative_bound() / (2.0 * PI * (1.0 - p));
        let freq = self.perturbation.derivative_bound() / (2.0 * PI * (1.0 - p) * (1.0 - p));
        (env.max(freq) / eps).ceil().max(1.0)
    }
}

/// Periodic `m`-component signal on `[0, 1]` whose measured separation
/// factor is at most `eps_target` and whose adjacent frequency ratios are
/// at least `d` everywhere. Deterministic in `seed`.
pub fn gen_random_well_separated(
    m: usize,
    d: f64,
    eps_target: f64,
    seed: u64,
    n: usize,
) -> Result<(SampledSignal, GroundTruth)> {
    if m == 0 {
        return invalid("need at least one component");
    }
    if !(d > 1.0 && d.is_finite()) {
        return invalid(format!("frequency ratio d must exceed 1, got {d}"));
    }
    if !(eps_target > 0.0 && eps_target < 0.2) {
        return invalid(format!("eps_target must lie in (0, 0.2), got {eps_target}"));
    }
    let grid = Grid::new(0.0, 1.0, n.max(2))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<RandomMode> = (0..m)
        .map(|_| {
            let amplitude = rng.gen_range(1.0..2.0);
            let env_amp = rng.gen_range(0.0..MAX_ENVELOPE_MODULATION);
            let freq_amp = rng.gen_range(0.0..MAX_FREQ_PERTURBATION);
            RandomMode {
                amplitude,
                envelope: TrigPoly::random(&mut rng, env_amp),
                perturbation: TrigPoly::random(&mut rng, freq_amp),
                offset: rng.gen_range(0.0..2.0 * PI),
            }
        })
        .collect();

    // Frequency ratios are checked on a fixed fine grid so the carrier
    // counts do not depend on n.
    let probe: Vec<f64> = (0..=4096).map(|i| i as f64 / 4096.0).collect();
    let design_eps = EPS_MARGIN * eps_target;
    let mut carriers: Vec<f64> = Vec::with_capacity(m);
    for (k, mode) in modes.iter().enumerate() {
        let mut b = mode.min_carriers(design_eps).max((1.0 / eps_target).ceil());
        if k > 0 {
            let prev = &modes[k - 1];
            let b_prev = carriers[k - 1];
            let worst = probe
                .iter()
                .map(|&t| prev.relative_frequency(t) / mode.relative_frequency(t))
                .fold(0.0, f64::max);
            b = b.max((d * b_prev * worst).ceil());
            while probe
                .iter()
                .any(|&t| b * mode.relative_frequency(t) < d * b_prev * prev.relative_frequency(t))
            {
                b += 1.0;
            }
        }
        carriers.push(b);
    }

    let peak = modes
        .iter()
        .zip(&carriers)
        .map(|(md, b)| b * probe.iter().map(|&t| md.relative_frequency(t)).fold(0.0, f64::max))
        .fold(0.0, f64::max);
    let required = (SAMPLES_PER_PERIOD * peak).ceil() as usize + 1;
    if n < required {
        return invalid(format!(
            "eps_target = {eps_target} with d = {d} needs carriers up to {peak:.1} cycles; n must be at least {required}, got {n}"
        ));
    }

    let pairs = modes
        .iter()
        .zip(&carriers)
        .map(|(md, &b)| {
            PhasePair::from_fns(
                grid,
                |t| md.a(t),
                |t| 2.0 * PI * b * (t + md.perturbation.integral(t)) + md.offset,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let truth = GroundTruth::new(pairs, SampledSignal::zeros(grid))?;
    if truth.params.epsilon > eps_target {
        return invalid(format!(
            "measured separation {} exceeds eps_target {eps_target}; increase n",
            truth.params.epsilon
        ));
    }
    Ok((truth.signal()?, truth))
}
