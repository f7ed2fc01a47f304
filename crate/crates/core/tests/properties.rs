use std::f64::consts::PI;

use proptest::prelude::*;
use sparsetf::separation::{coherence_bound, is_periodic};
use sparsetf::signal::cumulative_integrate;
use sparsetf::synth::gen_random_well_separated;
use sparsetf::wavelet::{cwt_direct, log_scales};
use sparsetf::*;

fn unit_grid(n: usize) -> Grid {
    Grid::new(0.0, 1.0, n).unwrap()
}

fn tones(g: Grid, spec: &[(f64, u32, f64)]) -> SampledSignal {
    SampledSignal::from_fn(g, |t| spec.iter().map(|(c, k, p)| c * (2.0 * PI * *k as f64 * t + p).cos()).sum()).unwrap()
}

fn pair(g: Grid, amp: f64, wobble: f64, k: u32, phase_wobble: f64) -> PhasePair {
    PhasePair::from_fns(
        g,
        |t| amp + wobble * (2.0 * PI * t).sin(),
        |t| 2.0 * PI * k as f64 * t + phase_wobble * (2.0 * PI * t).sin(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn quadrature_is_exact_on_linear_functions(
        n in 128usize..2048,
        t0 in -5.0f64..5.0,
        span in 0.1f64..10.0,
        p in -3.0f64..3.0, q in -3.0f64..3.0, r in -3.0f64..3.0, s in -3.0f64..3.0,
    ) {
        let g = Grid::new(t0, t0 + span, n).unwrap();
        let x = SampledSignal::from_fn(g, |t| p + q * t).unwrap();
        let y = SampledSignal::from_fn(g, |_| r).unwrap();
        let t1 = t0 + span;
        let exact = r * (p * span + 0.5 * q * (t1 * t1 - t0 * t0));
        let got = inner_product(&x, &y).unwrap();
        let scale = (r.abs() * (p.abs() * span + 0.5 * q.abs() * (t1 * t1 + t0 * t0))).max(1e-300);
        prop_assert!((got - exact).abs() <= 1e-12 * scale, "{got} vs {exact}");
        let z = SampledSignal::from_fn(g, |_| s).unwrap();
        let exact = s * (p * span + 0.5 * q * (t1 * t1 - t0 * t0));
        let scale = (s.abs() * (p.abs() * span + 0.5 * q.abs() * (t1 * t1 + t0 * t0))).max(1e-300);
        prop_assert!((inner_product(&z, &x).unwrap() - exact).abs() <= 1e-12 * scale);
    }

    #[test]
    fn reconstruct_is_linear(
        n in 64usize..1024,
        ka in 1u32..40, kb in 1u32..40, kc in 1u32..40,
        wa in 0.0f64..0.5, wb in 0.0f64..0.5,
    ) {
        let g = unit_grid(n);
        let a = vec![pair(g, 1.0, wa, ka, 0.1), pair(g, 2.0, wb, kb, 0.0)];
        let b = vec![pair(g, 1.5, 0.2, kc, 0.3)];
        let joint: Vec<PhasePair> = a.iter().chain(&b).cloned().collect();
        let lhs = reconstruct(&joint).unwrap();
        let rhs = reconstruct(&a).unwrap().add(&reconstruct(&b).unwrap()).unwrap();
        for (x, y) in lhs.values().iter().zip(rhs.values()) {
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn differentiating_the_running_integral_recovers_the_integrand(
        n in 256usize..4096,
        c0 in -2.0f64..2.0, c1 in -2.0f64..2.0, c2 in -2.0f64..2.0,
        k in 1u32..4,
    ) {
        let dt = 1.0 / (n - 1) as f64;
        let x: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 * dt;
                c0 + c1 * (2.0 * PI * k as f64 * t).sin() + c2 * t * t
            })
            .collect();
        let back = differentiate(&cumulative_integrate(&x, dt), dt).unwrap();
        let curvature = (2.0 * PI * k as f64).powi(2) * c1.abs() + 2.0 * c2.abs() + 1.0;
        let err = back.iter().zip(&x).fold(0.0_f64, |m, (p, q)| m.max((p - q).abs()));
        prop_assert!(err <= 2.0 * curvature * dt * dt, "{err} vs dt^2 = {}", dt * dt);
    }

    #[test]
    fn cwt_is_linear(
        k1 in 10u32..60, k2 in 10u32..60,
        c in -3.0f64..3.0,
        delta in 0.05f64..0.5,
        mirror in any::<bool>(),
    ) {
        let g = unit_grid(1025);
        let boundary = if mirror { Boundary::Mirror } else { Boundary::Periodic };
        let w = make_wavelet(delta).unwrap();
        let scales = log_scales(1.0 / (2.0 * PI * 80.0), 1.0 / (2.0 * PI * 8.0), 8).unwrap();
        let x = tones(g, &[(1.0, k1, 0.3)]);
        let y = tones(g, &[(0.7, k2, 1.1)]);
        let sx = cwt(&x, &w, &scales, boundary).unwrap();
        let sy = cwt(&y, &w, &scales, boundary).unwrap();
        let sz = cwt(&x.scale(c).add(&y).unwrap(), &w, &scales, boundary).unwrap();
        let peak = sz.max_magnitude().max(sx.max_magnitude()).max(sy.max_magnitude());
        for j in 0..scales.len() {
            for i in (0..g.n).step_by(17) {
                let want = sx.get(i, j) * c + sy.get(i, j);
                prop_assert!((sz.get(i, j) - want).norm() <= 1e-10 * peak);
            }
        }
    }

    #[test]
    fn coherence_is_symmetric_and_scale_invariant(
        ka in 5u32..60, kb in 5u32..60,
        wa in 0.0f64..0.5, wb in 0.0f64..0.5,
        c in 0.01f64..100.0,
    ) {
        let g = unit_grid(2049);
        let x = pair(g, 1.0, wa, ka, 0.2);
        let y = pair(g, 2.0, wb, kb, 0.5);
        let xy = coherence(&x, &y).unwrap();
        prop_assert!((xy - coherence(&y, &x).unwrap()).abs() <= 1e-12);
        prop_assert!((coherence(&x.scaled(c).unwrap(), &y).unwrap() - xy).abs() <= 1e-10);
        prop_assert!(xy <= 1.0 + 1e-10);
    }

    #[test]
    fn partition_segments_stay_below_root_d(
        base in 1.0f64..100.0,
        slope in -0.9f64..3.0,
        wiggle in 0.0f64..0.5,
        k in 1u32..6,
        d in 1.05f64..9.0,
    ) {
        let n = 1500;
        let tp: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                base * (1.0 + slope * t) * (1.0 + wiggle * (2.0 * PI * k as f64 * t).sin())
            })
            .collect();
        prop_assume!(tp.iter().all(|v| *v > 0.0));
        let cuts = partition_domain(&tp, d);
        let mut bounds = vec![0];
        bounds.extend(&cuts);
        bounds.push(n);
        for s in bounds.windows(2) {
            prop_assert!(s[0] < s[1]);
            let seg = &tp[s[0]..s[1]];
            let hi = seg.iter().cloned().fold(f64::MIN, f64::max);
            let lo = seg.iter().cloned().fold(f64::MAX, f64::min);
            prop_assert!(hi / lo < d.sqrt(), "segment {s:?}: {} >= {}", hi / lo, d.sqrt());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    #[test]
    fn cwt_fft_path_matches_direct_quadrature(
        n in 256usize..1024,
        k1 in 4u32..40, k2 in 4u32..40,
        delta in 0.1f64..0.5,
        mirror in any::<bool>(),
    ) {
        let g = unit_grid(n);
        let boundary = if mirror { Boundary::Mirror } else { Boundary::Periodic };
        let w = make_wavelet(delta).unwrap();
        let f = tones(g, &[(1.0, k1, 0.0), (0.5, k2, 0.7)]);
        let scales = log_scales(1.0 / (2.0 * PI * 50.0), 1.0 / (2.0 * PI * 3.0), 4).unwrap();
        let fast = cwt(&f, &w, &scales, boundary).unwrap();
        let probes: Vec<usize> = (0..n).step_by(n / 7).collect();
        let slow = cwt_direct(&f, &w, &scales, boundary, &probes, 1e-11).unwrap();
        let peak = fast.max_magnitude();
        for (j, row) in slow.iter().enumerate() {
            for (&i, v) in probes.iter().zip(row) {
                prop_assert!((fast.get(i, j) - v).norm() <= 1e-8 * peak, "scale {j} time {i}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn norm_equivalence_and_cross_terms_hold_on_random_pairs(
        seed in any::<u64>(),
        eps in prop::sample::select(vec![0.01, 0.05, 0.1]),
        d in 1.5f64..3.0,
    ) {
        let (_, truth) = gen_random_well_separated(2, d, eps, seed, 1 << 14).unwrap();
        for p in &truth.pairs {
            prop_assert!(is_periodic(p));
            let ne = verify_norm_equivalence(p).unwrap();
            prop_assert!(ne.holds, "{ne:?}");
        }
        let c = verify_cross_term_bound(&truth.pairs[0], &truth.pairs[1]).unwrap();
        prop_assert!(c.holds, "{c:?}");
        prop_assert!(c.beta >= d * (1.0 - 1e-9));
        let mu = coherence(&truth.pairs[0], &truth.pairs[1]).unwrap();
        prop_assert!(mu <= coherence_bound(c.epsilon, c.beta));
    }
}
