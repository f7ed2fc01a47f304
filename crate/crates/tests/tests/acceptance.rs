//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so every line is printed even when all
//! pass. Pass criterion numbers as arguments to run a subset, e.g.
//! `cargo test --test acceptance -- 3 7`.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sparsetf::ridge::{extract_ridges, recover_components_with, scalogram_of, RecoveryOptions};
use sparsetf::separation::{check_oscillatory_integral, check_scale_separation, is_periodic};
use sparsetf::synth::{gen_crossing_example, gen_mode_mixing_example, gen_random_well_separated, GroundTruth};
use sparsetf::wavelet::{concentration_error_with, moments};
use sparsetf::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn rel_l2(truth: &PhasePair, got: &PhasePair) -> f64 {
    let x = truth.component();
    x.sub(&got.component()).unwrap().norm() / x.norm()
}

/// Least-squares slope of `ln y` against `ln x`.
fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Generates a random family member, doubling `n` until the carriers fit.
fn random_signal(m: usize, d: f64, eps: f64, seed: u64, n: usize) -> (SampledSignal, GroundTruth) {
    let mut n = n;
    loop {
        match gen_random_well_separated(m, d, eps, seed, n) {
            Ok(v) => return v,
            Err(e) if n < 1 << 18 => {
                let _ = e;
                n = 2 * (n - 1) + 1;
            }
            Err(e) => panic!("seed {seed}: {e}"),
        }
    }
}

fn c1_reproduction() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let start = Instant::now();
    let code = sparsetf_cli::execute(["sparsetf", "reproduce", "--n", "32768", "--out-dir", out]);
    let secs = start.elapsed().as_secs_f64();
    let table = std::fs::read_to_string(dir.path().join("reproduce.csv")).unwrap_or_default();
    let mut values = Vec::new();
    let mut within = true;
    for line in table.lines().skip(1) {
        let cells: Vec<&str> = line.rsplitn(5, ',').collect();
        let measured: f64 = cells[3].parse().unwrap();
        let reference: f64 = cells[2].parse().unwrap();
        within &= (measured - reference).abs() <= 0.02 * reference;
        values.push(format!("{measured:.3} vs {reference}"));
    }
    let pass = code == 0 && values.len() == 3 && within && secs < 10.0;
    outcome(pass, format!("{}; {secs:.2} s; exit {code}", values.join(", ")))
}

fn c2_separation_bounds() -> Outcome {
    let (_, truth, _) = gen_mode_mixing_example(1 << 15).unwrap();
    let r1 = check_scale_separation(&truth.pairs[0], 1.0).unwrap();
    let r2 = check_scale_separation(&truth.pairs[1], 1.0).unwrap();
    let (b1, b2) = (1.0 / (10.0 * PI) + 1e-4, 1.0 / (20.0 * PI) + 1e-4);
    let pass = r1.eps_envelope <= b1 && r1.eps_frequency <= b1 && r2.eps_envelope <= b2 && r2.eps_frequency <= b2;
    outcome(
        pass,
        format!(
            "mode 1: {:.6}, {:.6} <= {b1:.6}; mode 2: {:.6}, {:.6} <= {b2:.6}",
            r1.eps_envelope, r1.eps_frequency, r2.eps_envelope, r2.eps_frequency
        ),
    )
}

const EPS_SET: [f64; 3] = [0.01, 0.05, 0.1];

fn c3_norm_equivalence() -> Outcome {
    let results: Vec<(bool, bool, f64)> = (0..200u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(3_000 + i);
            let eps = EPS_SET[(i % 3) as usize];
            let (_, truth) = random_signal(1, 2.0, eps, rng.gen(), 1 << 13);
            let p = &truth.pairs[0];
            let ne = verify_norm_equivalence(p).unwrap();
            (ne.holds, is_periodic(p), ne.epsilon)
        })
        .collect();
    let violations = results.iter().filter(|r| !r.0).count();
    let non_periodic = results.iter().filter(|r| !r.1).count();
    let worst = results.iter().map(|r| r.2).fold(0.0, f64::max);
    outcome(
        violations == 0 && non_periodic == 0,
        format!("200 draws, {violations} violations, {non_periodic} non-periodic, largest eps_hat {worst:.4}"),
    )
}

/// Two modes with linear-phase carriers `k` and `2k` and non-periodic
/// linear envelopes; the endpoint terms make the inner product first order
/// in `1/k`, as is `ε̂`.
fn sweep_point(k: f64) -> (f64, f64) {
    let g = Grid::new(0.0, 1.0, 1 << 16).unwrap();
    let x = PhasePair::from_fns(g, |t| 1.0 + 0.5 * t, |t| 2.0 * PI * k * t).unwrap();
    let y = PhasePair::from_fns(g, |t| 2.0 - 0.5 * t, |t| 4.0 * PI * k * t + PI / 2.0).unwrap();
    let c = verify_cross_term_bound(&x, &y).unwrap();
    (c.epsilon, c.value)
}

fn c4_cross_terms() -> Outcome {
    let results: Vec<(bool, f64)> = (0..200u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(4_000 + i);
            let eps = EPS_SET[(i % 3) as usize];
            let d = rng.gen_range(1.5..3.0);
            let (_, truth) = random_signal(2, d, eps, rng.gen(), 1 << 13);
            let c = verify_cross_term_bound(&truth.pairs[0], &truth.pairs[1]).unwrap();
            (c.holds && c.beta >= 1.5, c.beta)
        })
        .collect();
    let violations = results.iter().filter(|r| !r.0).count();
    let min_beta = results.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let sweep: Vec<(f64, f64)> = [16.0, 64.0, 256.0].iter().map(|&k| sweep_point(k)).collect();
    let slope = loglog_slope(&sweep.iter().map(|s| s.0).collect::<Vec<_>>(), &sweep.iter().map(|s| s.1).collect::<Vec<_>>());
    let pass = violations == 0 && (slope - 1.0).abs() <= 0.3;
    let pts: Vec<String> = sweep.iter().map(|(e, v)| format!("({e:.2e}, {v:.2e})")).collect();
    outcome(
        pass,
        format!("200 draws, {violations} violations, min beta {min_beta:.3}; sweep {} slope {slope:.3}", pts.join(" ")),
    )
}

fn c5_concentration() -> Outcome {
    let deltas = [0.1, 0.2, 0.3];
    let wavelets: Vec<(BSplineWavelet, sparsetf::WaveletMoments)> = deltas
        .iter()
        .map(|&d| {
            let w = make_wavelet(d).unwrap();
            let m = moments(&w).unwrap();
            (w, m)
        })
        .collect();
    let results: Vec<(usize, f64)> = (0..50u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(5_000 + i);
            let eps = rng.gen_range(0.01..0.1);
            let (_, truth) = random_signal(1, 2.0, eps, rng.gen(), 1 << 12);
            let p = &truth.pairs[0];
            let freq = p.frequency();
            let (w, m) = &wavelets[(i % 3) as usize];
            let mut bad = 0;
            let mut worst = 0.0_f64;
            for _ in 0..20 {
                let t = rng.gen_range(0.0..1.0);
                let s = rng.gen_range(0.5..1.6);
                let omega = s / freq[p.grid().nearest_index(t)];
                let c = concentration_error_with(p, w, m, t, omega).unwrap();
                if c.error > c.bound {
                    bad += 1;
                }
                worst = worst.max(c.error / c.bound);
            }
            (bad, worst)
        })
        .collect();
    let violations: usize = results.iter().map(|r| r.0).sum();
    let worst = results.iter().map(|r| r.1).fold(0.0, f64::max);
    outcome(violations == 0, format!("1000 probes, {violations} violations, largest error/bound {worst:.3e}"))
}

fn c6_moment_scaling() -> Outcome {
    let deltas = [0.4, 0.2, 0.1, 0.05];
    let ms: Vec<sparsetf::WaveletMoments> = deltas.iter().map(|&d| moments(&make_wavelet(d).unwrap()).unwrap()).collect();
    let pick = |f: fn(&sparsetf::WaveletMoments) -> f64| ms.iter().map(f).collect::<Vec<_>>();
    let (i1, i2, i3) = (pick(|m| m.i1), pick(|m| m.i2), pick(|m| m.i3));
    let s = [loglog_slope(&deltas, &i1), loglog_slope(&deltas, &i2), loglog_slope(&deltas, &i3)];
    let want = [(-1.0, 0.25), (-2.0, 0.3), (-3.0, 0.35)];
    let pass = s.iter().zip(want).all(|(v, (c, tol))| (v - c).abs() <= tol);
    let r1: Vec<String> = i1.windows(2).map(|w| format!("{:.3}", w[1] / w[0])).collect();
    let r3: Vec<String> = i3.windows(2).map(|w| format!("{:.3}", w[1] / w[0])).collect();
    outcome(
        pass,
        format!(
            "slopes I1 {:.3}, I2 {:.3}, I3 {:.3} (want -1, -2, -3); I1 halving ratios {} (want ~2); I3 halving ratios {} (want ~8)",
            s[0],
            s[1],
            s[2],
            r1.join("/"),
            r3.join("/")
        ),
    )
}

/// Relative L² error of recovering a pure tone at the same sampling: the
/// discretisation floor of ridge recovery.
fn grid_error(cycles: f64, n: usize, w: &BSplineWavelet, opts: &RecoveryOptions) -> f64 {
    let g = Grid::new(0.0, 1.0, n).unwrap();
    let tone = PhasePair::from_fns(g, |_| 1.0, |t| 2.0 * PI * cycles * t).unwrap();
    match recover_components_with(&tone.component(), w, opts) {
        Ok(p) if p.len() == 1 => rel_l2(&tone, &p[0]),
        _ => f64::INFINITY,
    }
}

const FAMILY_D: f64 = 2.0;
const FAMILY_EPS: f64 = 0.01;
const FAMILY_N: usize = (1 << 14) + 1;

fn family(i: u64) -> (SampledSignal, GroundTruth) {
    let m = 2 + (i % 2) as usize;
    random_signal(m, FAMILY_D, FAMILY_EPS, 7_000 + i, FAMILY_N)
}

fn c7_ridge_recovery() -> Outcome {
    let delta = 0.9 * (FAMILY_D.sqrt() - 1.0) / (FAMILY_D.sqrt() + 1.0);
    let w = make_wavelet(delta).unwrap();
    let opts = RecoveryOptions::default();
    let results: Vec<(bool, bool, f64)> = (0..100u64)
        .into_par_iter()
        .map(|i| {
            let (f, truth) = family(i);
            let pairs = recover_components_with(&f, &w, &opts).unwrap();
            if pairs.len() != truth.pairs.len() {
                return (false, true, 0.0);
            }
            let eps = truth.params.epsilon;
            let top = truth.pairs.last().unwrap().mean_frequency() / (2.0 * PI);
            let grid = grid_error(top.round(), f.len(), &w, &opts);
            let tol = 5.0 * eps + 5.0 * grid;
            let worst = truth.pairs.iter().zip(&pairs).map(|(t, p)| rel_l2(t, p) / tol).fold(0.0, f64::max);
            (true, worst <= 1.0, worst)
        })
        .collect();
    let correct = results.iter().filter(|r| r.0).count();
    let within = results.iter().filter(|r| r.0 && r.1).count();
    let worst = results.iter().filter(|r| r.0).map(|r| r.2).fold(0.0, f64::max);

    let (fc, _, _) = gen_crossing_example(32, 1 << 13).unwrap();
    let wc = make_wavelet(0.2).unwrap();
    let s = scalogram_of(&fc, &wc, &RecoveryOptions::default()).unwrap().unwrap();
    let ridges = extract_ridges(&s, sparsetf::ridge::default_floor(&s)).unwrap();
    let ambiguous = ridges.iter().any(|r| r.ambiguous);

    let pass = correct >= 98 && within == correct && ambiguous;
    outcome(
        pass,
        format!(
            "count correct {correct}/100, error within 5 eps + 5 grid in {within}/{correct} (largest error/tol {worst:.3}); crossing flagged ambiguous: {ambiguous}"
        ),
    )
}

fn c8_pursuit_recovery() -> Outcome {
    let cfg = PursuitConfig {
        params: DictionaryParams::new(0.05, FAMILY_D, 4.0, 1e-2).unwrap(),
        boundary: Boundary::Periodic,
        ..PursuitConfig::default()
    };
    let results: Vec<(bool, f64, Option<bool>)> = (0..100u64)
        .into_par_iter()
        .map(|i| {
            let (f, truth) = family(i);
            let d = matching_pursuit(&f, &cfg).unwrap();
            if d.components.len() != truth.pairs.len() {
                return (false, f64::INFINITY, None);
            }
            let tol = 3.0 * truth.params.epsilon.sqrt();
            let worst = truth.pairs.iter().zip(&d.components).map(|(t, p)| rel_l2(t, p) / tol).fold(0.0, f64::max);
            let norms: Vec<f64> = truth.pairs.iter().map(|p| p.component().norm()).collect();
            let mut sorted = norms.clone();
            sorted.sort_by(|a, b| b.total_cmp(a));
            let m_prime = truth.params.m_prime;
            let applies = truth.params.d_min.unwrap() > m_prime * m_prime && sorted[0] >= 1.1 * sorted[1];
            let greedy = applies.then(|| {
                let largest = norms.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
                d.diagnostics[largest].extraction_rank == 0
            });
            (worst <= 1.0, worst, greedy)
        })
        .collect();
    let ok = results.iter().filter(|r| r.0).count();
    let worst = results.iter().map(|r| r.1).fold(0.0, f64::max);
    let checked = results.iter().filter(|r| r.2.is_some()).count();
    let first_ok = results.iter().filter(|r| r.2 == Some(true)).count();
    outcome(
        ok == 100 && first_ok == checked,
        format!(
            "{ok}/100 signals within 3 sqrt(eps_hat) (largest error/tol {worst:.3}); largest-norm extracted first in {first_ok}/{checked} eligible"
        ),
    )
}

fn c9_partition() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9_000);
    let mut bad = 0;
    let mut segments = 0;
    for _ in 0..100 {
        let n = rng.gen_range(200..4000);
        let base = rng.gen_range(1.0..500.0);
        let growth = rng.gen_range(-0.8..4.0);
        let wiggle = rng.gen_range(0.0..0.6);
        let k = rng.gen_range(1..12) as f64;
        let phase = rng.gen_range(0.0..2.0 * PI);
        let d = rng.gen_range(1.05..9.0);
        let tp: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                base * (1.0 + growth * t) * (1.0 + wiggle * (2.0 * PI * k * t + phase).sin())
            })
            .collect();
        let mut bounds = vec![0];
        bounds.extend(partition_domain(&tp, d));
        bounds.push(n);
        for s in bounds.windows(2) {
            segments += 1;
            let seg = &tp[s[0]..s[1]];
            let hi = seg.iter().cloned().fold(f64::MIN, f64::max);
            let lo = seg.iter().cloned().fold(f64::MAX, f64::min);
            if s[0] >= s[1] || hi / lo >= d.sqrt() {
                bad += 1;
            }
        }
    }
    outcome(bad == 0, format!("100 profiles, {segments} segments, {bad} violations"))
}

fn c10_oscillatory_integral() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10_000);
    let mut four_fail = 0;
    let mut two_pi_fail = 0;
    let mut tightest = 0.0_f64;
    for _ in 0..100 {
        let periods = rng.gen_range(1..30);
        let span = 2.0 * PI * periods as f64;
        let grid = Grid::new(0.0, span, 400 * periods + 1).unwrap();
        let terms: Vec<(f64, f64, f64)> = (0..3)
            .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(0.05..2.0), rng.gen_range(0.0..2.0 * PI)))
            .collect();
        let scale = rng.gen_range(0.01..0.5);
        let g: Vec<f64> = grid
            .times()
            .iter()
            .map(|&t| {
                let s: f64 = terms.iter().map(|(c, f, p)| c * (f * t / span * 2.0 * PI + p).sin()).sum();
                (scale * s).exp()
            })
            .collect();
        let c = check_oscillatory_integral(&grid, &g).unwrap();
        four_fail += usize::from(!c.holds_four);
        two_pi_fail += usize::from(!c.holds_two_pi);
        tightest = tightest.max(c.value / (4.0 * c.epsilon * c.integral_g));
    }
    outcome(
        four_fail == 0,
        format!(
            "100 draws, 4 eps constant violated {four_fail} times (largest ratio {tightest:.3}); 2 pi eps constant violated {two_pi_fail} times"
        ),
    )
}

type Criterion = (u32, &'static str, fn() -> Outcome);

const CRITERIA: [Criterion; 10] = [
    (1, "mode-mixing objectives reproduced", c1_reproduction),
    (2, "mode-mixing separation bounds", c2_separation_bounds),
    (3, "norm equivalence", c3_norm_equivalence),
    (4, "cross-term bound and linear scaling", c4_cross_terms),
    (5, "wavelet concentration", c5_concentration),
    (6, "moment scaling in the bandwidth", c6_moment_scaling),
    (7, "ridge recovery", c7_ridge_recovery),
    (8, "matching pursuit recovery", c8_pursuit_recovery),
    (9, "partition ratio", c9_partition),
    (10, "oscillatory integral constant", c10_oscillatory_integral),
];

fn main() -> ExitCode {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (id, name, run) in CRITERIA {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|e| {
                let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
                outcome(false, format!("panicked: {}", msg.unwrap_or_default()))
            });
        let verdict = if result.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {verdict}: {name}: {} [{:.1} s]", result.detail, start.elapsed().as_secs_f64());
        failed += usize::from(!result.pass);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
