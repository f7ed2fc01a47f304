//! Dictionary membership and the coherence estimates that justify greedy
//! extraction. Every bound is evaluated with separation factors measured
//! from the data rather than declared by the caller.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::signal::{differentiate, inner_product, trapezoid, DictionaryParams, Grid, PhasePair};

/// Relative endpoint mismatch tolerated before a pair is reported as non-periodic.
pub const PERIODIC_TOL: f64 = 1e-6;

/// Measured scale-separation metrics of one (a, θ) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    /// `sup |a′/θ′|`
    pub eps_envelope: f64,
    /// `sup |θ″/θ′²|`
    pub eps_frequency: f64,
    /// `sup θ′ / inf θ′`
    pub m_prime: f64,
    pub in_dictionary: bool,
}

impl SeparationReport {
    /// The measured separation factor, the larger of the two metrics.
    pub fn epsilon(&self) -> f64 {
        self.eps_envelope.max(self.eps_frequency)
    }
}

pub fn check_scale_separation(pair: &PhasePair, eps: f64) -> Result<SeparationReport> {
    let dt = pair.grid().dt();
    let freq = pair.frequency();
    if let Some(i) = freq.iter().position(|v| !(*v > 0.0)) {
        return invalid(format!("phase is not increasing at index {i} (theta' = {})", freq[i]));
    }
    let da = differentiate(pair.a(), dt)?;
    let dfreq = differentiate(&freq, dt)?;
    let eps_envelope = da.iter().zip(&freq).fold(0.0_f64, |m, (d, w)| m.max((d / w).abs()));
    let eps_frequency = dfreq.iter().zip(&freq).fold(0.0_f64, |m, (d, w)| m.max((d / (w * w)).abs()));
    let (lo, hi) = min_max(&freq);
    Ok(SeparationReport {
        eps_envelope,
        eps_frequency,
        m_prime: hi / lo,
        in_dictionary: eps_envelope <= eps && eps_frequency <= eps,
    })
}

fn min_max(x: &[f64]) -> (f64, f64) {
    x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// Pointwise frequency ratios between the components of a candidate decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseSeparation {
    /// Smallest `min_t θ′_{k+1}/θ′_k` over adjacent components.
    pub d_min: f64,
    /// `ratios[k][j] = min_t θ′_j(t)/θ′_k(t)`, components ordered by mean frequency.
    pub ratios: Vec<Vec<f64>>,
    /// Component order used for `ratios`, as indices into the input list.
    pub order: Vec<usize>,
    pub reports: Vec<SeparationReport>,
    /// `d_min ≥ d` and every component within the declared ε.
    pub well_separated: bool,
}

pub fn check_well_separated(pairs: &[PhasePair], params: &DictionaryParams) -> Result<PairwiseSeparation> {
    if pairs.len() < 2 {
        return invalid(format!("well-separatedness needs at least 2 components, got {}", pairs.len()));
    }
    let grid = pairs[0].grid();
    for p in &pairs[1..] {
        grid.ensure_matches(p.grid())?;
    }
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.sort_by(|&i, &j| pairs[i].mean_frequency().total_cmp(&pairs[j].mean_frequency()));
    let freqs: Vec<Vec<f64>> = order.iter().map(|&i| pairs[i].frequency()).collect();
    let reports = order
        .iter()
        .map(|&i| check_scale_separation(&pairs[i], params.epsilon))
        .collect::<Result<Vec<_>>>()?;
    let ratios: Vec<Vec<f64>> = freqs
        .iter()
        .map(|lo| {
            freqs
                .iter()
                .map(|hi| hi.iter().zip(lo).map(|(h, l)| h / l).fold(f64::INFINITY, f64::min))
                .collect()
        })
        .collect();
    let d_min = (0..ratios.len() - 1).map(|k| ratios[k][k + 1]).fold(f64::INFINITY, f64::min);
    // Ratios are computed from finite differences; allow round-off at equality.
    let well_separated =
        d_min >= params.d * (1.0 - 1e-9) && reports.iter().all(|r| r.in_dictionary);
    Ok(PairwiseSeparation { d_min, ratios, order, reports, well_separated })
}

/// `|⟨x, y⟩| / (‖x‖ ‖y‖)` for the modes `a cos θ` of two pairs.
pub fn coherence(x: &PhasePair, y: &PhasePair) -> Result<f64> {
    x.grid().ensure_matches(y.grid())?;
    let (u, v) = (x.component(), y.component());
    let (nu, nv) = (u.norm(), v.norm());
    if !(nu > 0.0 && nv > 0.0) {
        return invalid("coherence is undefined for a zero-norm mode");
    }
    Ok(inner_product(&u, &v)?.abs() / (nu * nv))
}

/// Upper bound `4ε (1/2 - 3ε)⁻¹ (1 + 1/(1 - β⁻¹)²)` on the coherence of two
/// modes whose frequencies differ by at least the factor `β`.
/// Infinite when `ε ≥ 1/6`, where the lower norm bound degenerates.
pub fn coherence_bound(eps: f64, beta: f64) -> f64 {
    let denom = 0.5 - 3.0 * eps;
    if denom <= 0.0 || beta <= 1.0 {
        return f64::INFINITY;
    }
    4.0 * eps / denom * (1.0 + 1.0 / (1.0 - 1.0 / beta).powi(2))
}

/// Whether `a` and `θ′` agree at both ends of the record to [`PERIODIC_TOL`].
pub fn is_periodic(pair: &PhasePair) -> bool {
    let a = pair.a();
    let w = pair.frequency();
    let n = a.len();
    let close = |p: f64, q: f64| (p - q).abs() <= PERIODIC_TOL * p.abs().max(q.abs()).max(f64::MIN_POSITIVE);
    close(a[0], a[n - 1]) && close(w[0], w[n - 1])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormEquivalence {
    /// `(1/2 - 3ε̂) ‖a‖²`
    pub lhs: f64,
    /// `‖a cos θ‖²`
    pub mid: f64,
    /// `(1/2 + 3ε̂) ‖a‖²`
    pub rhs: f64,
    pub holds: bool,
    pub epsilon: f64,
    /// False when the pair is not one period of a periodic mode, in which
    /// case the estimate is not guaranteed.
    pub periodic: bool,
}

pub fn verify_norm_equivalence(pair: &PhasePair) -> Result<NormEquivalence> {
    let eps = check_scale_separation(pair, 1.0)?.epsilon();
    let dt = pair.grid().dt();
    let a2: Vec<f64> = pair.a().iter().map(|v| v * v).collect();
    let norm_a = trapezoid(&a2, dt);
    let mid = pair.component().norm().powi(2);
    let lhs = (0.5 - 3.0 * eps) * norm_a;
    let rhs = (0.5 + 3.0 * eps) * norm_a;
    Ok(NormEquivalence { lhs, mid, rhs, holds: lhs <= mid && mid <= rhs, epsilon: eps, periodic: is_periodic(pair) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossTermCheck {
    /// `|⟨a cos θ, ā cos θ̄⟩|`
    pub value: f64,
    /// `4ε (1 + 1/(1 - β⁻¹)²) ∫ a ā`
    pub bound: f64,
    pub holds: bool,
    pub epsilon: f64,
    pub beta: f64,
    pub integral_aa: f64,
    pub periodic: bool,
}

/// Cross-term estimate for two modes; the pair is ordered internally so the
/// frequency ratio `β = min θ̄′/θ′` exceeds one.
pub fn verify_cross_term_bound(x: &PhasePair, y: &PhasePair) -> Result<CrossTermCheck> {
    x.grid().ensure_matches(y.grid())?;
    let (fx, fy) = (x.frequency(), y.frequency());
    let min_ratio = |num: &[f64], den: &[f64]| num.iter().zip(den).map(|(n, d)| n / d).fold(f64::INFINITY, f64::min);
    let beta = min_ratio(&fy, &fx).max(min_ratio(&fx, &fy));
    if !(beta > 1.0) {
        return invalid(format!(
            "cross-term bound needs min theta_hi'/theta_lo' > 1 (beta = {beta:.6}); frequencies cross or touch"
        ));
    }
    let eps = check_scale_separation(x, 1.0)?
        .epsilon()
        .max(check_scale_separation(y, 1.0)?.epsilon());
    let prod: Vec<f64> = x.a().iter().zip(y.a()).map(|(p, q)| p * q).collect();
    let integral_aa = trapezoid(&prod, x.grid().dt());
    let value = inner_product(&x.component(), &y.component())?.abs();
    let bound = 4.0 * eps * (1.0 + 1.0 / (1.0 - 1.0 / beta).powi(2)) * integral_aa;
    // A vanishing ε makes the bound zero; quadrature round-off must not count as a violation.
    let holds = value < bound || value <= 1e-12 * integral_aa;
    Ok(CrossTermCheck {
        value,
        bound,
        holds,
        epsilon: eps,
        beta,
        integral_aa,
        periodic: is_periodic(x) && is_periodic(y),
    })
}

/// Oscillatory-integral estimate `|∫ g cos t| ≤ C ε ∫ g` over whole periods
/// of `cos t`, reported for both `C = 4` and `C = 2π`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatoryCheck {
    pub value: f64,
    pub integral_g: f64,
    /// Measured `sup |g′/g|`.
    pub epsilon: f64,
    pub holds_four: bool,
    pub holds_two_pi: bool,
}

/// `g` is sampled on `grid`, whose span must be a whole number of `2π` periods.
pub fn check_oscillatory_integral(grid: &Grid, g: &[f64]) -> Result<OscillatoryCheck> {
    if g.len() != grid.n {
        return invalid(format!("g has {} samples but the grid has {}", g.len(), grid.n));
    }
    let periods = grid.span() / (2.0 * PI);
    if (periods - periods.round()).abs() > 1e-9 * periods.max(1.0) || periods.round() < 1.0 {
        return invalid(format!("span {} is not a whole number of 2*pi periods", grid.span()));
    }
    if let Some(i) = g.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
        return invalid(format!("g must be positive; g[{i}] = {}", g[i]));
    }
    let dt = grid.dt();
    let dg = differentiate(g, dt)?;
    let epsilon = dg.iter().zip(g).fold(0.0_f64, |m, (d, v)| m.max((d / v).abs()));
    let weighted: Vec<f64> = grid.times().iter().zip(g).map(|(t, v)| v * t.cos()).collect();
    let value = trapezoid(&weighted, dt).abs();
    let integral_g = trapezoid(g, dt);
    Ok(OscillatoryCheck {
        value,
        integral_g,
        epsilon,
        holds_four: value <= 4.0 * epsilon * integral_g,
        holds_two_pi: value <= 2.0 * PI * epsilon * integral_g,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize) -> Grid {
        Grid::new(0.0, 1.0, n).unwrap()
    }

    #[test]
    fn pure_tone_is_perfectly_separated() {
        let p = PhasePair::from_fns(unit(4097), |_| 1.0, |t| 2.0 * PI * 100.0 * t).unwrap();
        let r = check_scale_separation(&p, 0.01).unwrap();
        assert!(r.eps_envelope < 1e-12 && r.eps_frequency < 1e-9);
        assert!((r.m_prime - 1.0).abs() < 1e-9);
        assert!(r.in_dictionary);
    }

    #[test]
    fn constant_frequency_ratio() {
        let g = unit(2049);
        let p = PhasePair::from_fns(g, |_| 1.0, |t| 2.0 * PI * 50.0 * t).unwrap();
        let q = PhasePair::from_fns(g, |_| 1.0, |t| 2.0 * PI * 100.0 * t).unwrap();
        let params = DictionaryParams::new(0.01, 2.0, 4.0, 0.1).unwrap();
        let s = check_well_separated(&[q, p], &params).unwrap();
        assert!((s.d_min - 2.0).abs() < 1e-9);
        assert_eq!(s.order, vec![1, 0]);
        assert!(s.well_separated);
    }

    #[test]
    fn well_separated_rejects_mismatch_and_singletons() {
        let p = PhasePair::from_fns(unit(64), |_| 1.0, |t| 40.0 * t).unwrap();
        let q = PhasePair::from_fns(unit(65), |_| 1.0, |t| 80.0 * t).unwrap();
        let params = DictionaryParams::default();
        assert!(check_well_separated(&[p.clone(), q], &params).is_err());
        assert!(check_well_separated(&[p], &params).is_err());
    }

    #[test]
    fn self_coherence_and_orthogonal_tones() {
        let g = unit(8192);
        let x = PhasePair::from_fns(g, |_| 1.0, |t| 2.0 * PI * 32.0 * t).unwrap();
        let y = PhasePair::from_fns(g, |_| 1.0, |t| 2.0 * PI * 64.0 * t).unwrap();
        assert!((coherence(&x, &x).unwrap() - 1.0).abs() < 1e-10);
        assert!(coherence(&x, &y).unwrap() < 1e-6);
        let scaled = x.scaled(7.5).unwrap();
        assert!((coherence(&scaled, &y).unwrap() - coherence(&x, &y).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn norm_equivalence_equality_case() {
        let p = PhasePair::from_fns(unit(4097), |_| 1.0, |t| 2.0 * PI * 16.0 * t).unwrap();
        let r = verify_norm_equivalence(&p).unwrap();
        assert!((r.mid - 0.5).abs() < 1e-9);
        assert!((r.lhs - 0.5).abs() < 1e-6 && (r.rhs - 0.5).abs() < 1e-6);
        assert!(r.periodic);
    }

    #[test]
    fn norm_equivalence_modulated_by_quadrature() {
        let p = PhasePair::from_fns(
            unit(16385),
            |t| 2.0 + (2.0 * PI * t).sin(),
            |t| 2.0 * PI * 64.0 * t + 0.3 * (2.0 * PI * t).sin(),
        )
        .unwrap();
        let r = verify_norm_equivalence(&p).unwrap();
        // ∫(2 + sin)² = 4.5 on [0, 1]
        assert!((r.rhs / (0.5 + 3.0 * r.epsilon) - 4.5).abs() < 1e-6);
        assert!(r.holds && r.periodic);
    }

    #[test]
    fn cross_term_orthogonal_tones_and_ordering() {
        let g = unit(4097);
        let x = PhasePair::from_fns(g, |_| 1.0, |t| 2.0 * PI * 32.0 * t).unwrap();
        let y = PhasePair::from_fns(g, |_| 1.0, |t| 2.0 * PI * 64.0 * t).unwrap();
        let c = verify_cross_term_bound(&y, &x).unwrap();
        assert!(c.value < 1e-9);
        assert!((c.beta - 2.0).abs() < 1e-9);
        assert!(c.holds);
    }

    #[test]
    fn cross_term_rejects_touching_frequencies() {
        let g = unit(2049);
        let x = PhasePair::from_fns(g, |_| 1.0, |t| 2.0 * PI * 32.0 * t).unwrap();
        assert!(verify_cross_term_bound(&x, &x).is_err());
    }

    #[test]
    fn coherence_bound_degenerates() {
        assert!(coherence_bound(0.2, 2.0).is_infinite());
        assert!(coherence_bound(0.01, 1.0).is_infinite());
        let b = coherence_bound(0.01, 2.0);
        assert!((b - 4.0 * 0.01 / 0.47 * 5.0).abs() < 1e-12);
    }

    #[test]
    fn oscillatory_integral_of_exponential() {
        // g = e^{λt} on [0, 2nπ]: ∫ g cos t = λ (e^{2nπλ} - 1)/(1 + λ²).
        let lambda = 0.03;
        let n = 5.0;
        let grid = Grid::new(0.0, 2.0 * PI * n, 200_001).unwrap();
        let g: Vec<f64> = grid.times().iter().map(|t| (lambda * t).exp()).collect();
        let r = check_oscillatory_integral(&grid, &g).unwrap();
        let e = (2.0 * PI * n * lambda).exp() - 1.0;
        assert!((r.value - lambda * e / (1.0 + lambda * lambda)).abs() < 1e-6);
        assert!((r.integral_g - e / lambda).abs() < 1e-6);
        assert!((r.epsilon - lambda).abs() < 1e-9);
        assert!(r.holds_four && r.holds_two_pi);
    }

    #[test]
    fn oscillatory_integral_requires_whole_periods() {
        let grid = Grid::new(0.0, 7.0, 101).unwrap();
        assert!(check_oscillatory_integral(&grid, &vec![1.0; 101]).is_err());
    }
}
