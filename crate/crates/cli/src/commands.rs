//! Subcommand implementations.

use std::f64::consts::PI;
use std::path::Path;

use serde::Serialize;
use serde_json::json;
use sparsetf::io::{read_decomposition, write_decomposition, write_json, write_ridges, write_scalogram, DecompositionJson};
use sparsetf::plot::{scalogram_svg, LinePlot, Series};
use sparsetf::ridge::{default_floor, scalogram_of, RecoveryOptions};
use sparsetf::separation::{check_scale_separation, verify_cross_term_bound, verify_norm_equivalence};
use sparsetf::synth::{gen_crossing_example, gen_mode_mixing_example, gen_random_well_separated, GroundTruth};
use sparsetf::{
    check_well_separated, compare_decompositions, extract_ridges, make_wavelet, matching_pursuit, p2_objective,
    partition_domain, reconstruct, Decomposition, PhasePair, SampledSignal, Termination,
};

use crate::options::{ensure_dir, read_signal, resolve, write_text, CmdResult, Failure, Overrides, RunManifest};
use crate::table::{num, verdict, Table};
use crate::Example;

fn write_truth(dir: &Path, name: &str, truth: &GroundTruth) -> CmdResult {
    write_json(&dir.join(format!("{name}.json")), &DecompositionJson::from_pairs(&truth.pairs, &truth.residual))?;
    write_json(&dir.join(format!("{name}_params.json")), &truth.params)?;
    Ok(())
}

fn summarize(truth: &GroundTruth) -> String {
    let mut t = Table::new(["component", "mean freq", "eps_hat", "M'"]);
    for (k, (p, r)) in truth.pairs.iter().zip(&truth.params.reports).enumerate() {
        t.row([k.to_string(), num(p.mean_frequency() / (2.0 * PI)), num(r.epsilon()), num(r.m_prime)]);
    }
    let d = truth.params.d_min.map(num).unwrap_or_else(|| "-".into());
    format!("{}d_min = {d}\n", t.render())
}

pub fn synth(ov: &Overrides, example: Example, n: Option<usize>, k: u32, m: usize, out_dir: &Path) -> CmdResult {
    ensure_dir(out_dir)?;
    let (signal, truth, config) = match example {
        Example::Crossing => {
            let n = n.unwrap_or(1 << 13);
            let (f, split, swapped) = gen_crossing_example(k, n)?;
            write_truth(out_dir, "truth_swapped", &swapped)?;
            (f, split, json!({ "example": "crossing", "k": k, "n": n }))
        }
        Example::ModeMixing => {
            let n = n.unwrap_or(1 << 15);
            let (f, truth, spurious) = gen_mode_mixing_example(n)?;
            let residual = f.sub(&spurious.component())?;
            write_json(&out_dir.join("spurious.json"), &DecompositionJson::from_pairs(&[spurious], &residual))?;
            (f, truth, json!({ "example": "mode-mixing", "n": n }))
        }
        Example::Random => {
            let n = n.unwrap_or(1 << 14);
            let d = ov.d.unwrap_or(2.0);
            let eps = ov.epsilon.unwrap_or(0.05);
            let seed = ov.seed.unwrap_or(0);
            let (f, truth) = gen_random_well_separated(m, d, eps, seed, n)?;
            (f, truth, json!({ "example": "random", "m": m, "d": d, "eps_target": eps, "seed": seed, "n": n }))
        }
    };
    sparsetf::io::write_signal_csv(&out_dir.join("signal.csv"), &signal)?;
    write_truth(out_dir, "truth", &truth)?;
    RunManifest::new("synth", config, &[])?.write(out_dir)?;
    print!("{}", summarize(&truth));
    println!("wrote {}", out_dir.display());
    Ok(())
}

fn save_plot(dir: &Path, name: &str, plot: LinePlot) -> CmdResult {
    write_text(&dir.join(name), &plot.to_svg())
}

fn write_plots(dir: &Path, f: &SampledSignal, d: &Decomposition) -> CmdResult {
    let t = f.grid().times();
    for (k, p) in d.components.iter().enumerate() {
        let a = p.a().to_vec();
        let freq: Vec<f64> = p.frequency().iter().map(|w| w / (2.0 * PI)).collect();
        save_plot(
            dir,
            &format!("component_{k}_envelope.svg"),
            LinePlot::new(format!("component {k}: envelope"), "t", "a(t)").with(Series::new("a", t.clone(), a.clone())),
        )?;
        save_plot(
            dir,
            &format!("component_{k}_frequency.svg"),
            LinePlot::new(format!("component {k}: instantaneous frequency"), "t", "theta'(t) / 2 pi")
                .with(Series::new("theta' / 2 pi", t.clone(), freq)),
        )?;
        let neg: Vec<f64> = a.iter().map(|v| -v).collect();
        save_plot(
            dir,
            &format!("component_{k}_overlay.svg"),
            LinePlot::new(format!("component {k}: reconstruction over signal"), "t", "value")
                .with(Series::new("signal", t.clone(), f.values().to_vec()))
                .with(Series::new("a cos theta", t.clone(), p.component().into_values()))
                .with(Series::new("+a", t.clone(), a))
                .with(Series::new("-a", t.clone(), neg)),
        )?;
    }
    if !d.components.is_empty() {
        save_plot(
            dir,
            "reconstruction.svg",
            LinePlot::new("signal and sum of components", "t", "value")
                .with(Series::new("signal", t.clone(), f.values().to_vec()))
                .with(Series::new("sum of components", t.clone(), reconstruct(&d.components)?.into_values())),
        )?;
    }
    save_plot(
        dir,
        "residual.svg",
        LinePlot::new("residual", "t", "r(t)").with(Series::new("residual", t, d.residual.values().to_vec())),
    )
}

pub fn decompose(ov: &Overrides, signal: &Path, out_dir: &Path) -> CmdResult {
    let f = read_signal(signal)?;
    let resolved = resolve(ov, Some(&f))?;
    ensure_dir(out_dir)?;
    let d = matching_pursuit(&f, &resolved.pursuit)?;
    write_decomposition(&out_dir.join("decomposition.json"), &d)?;
    write_plots(out_dir, &f, &d)?;
    RunManifest::new("decompose", &resolved, &[signal])?.write(out_dir)?;

    let mut t = Table::new(["component", "mean freq", "norm", "eps_hat", "M'", "objective", "stitched"]);
    for (k, (p, diag)) in d.components.iter().zip(&d.diagnostics).enumerate() {
        t.row([
            k.to_string(),
            num(p.mean_frequency() / (2.0 * PI)),
            num(p.component().norm()),
            num(diag.separation.epsilon()),
            num(diag.separation.m_prime),
            num(diag.objective),
            diag.stitched.to_string(),
        ]);
    }
    print!("{}", t.render());
    let eps0 = resolved.pursuit.params.epsilon0;
    let rms = d.residual.rms();
    println!("{} components; residual RMS {} (threshold {})", d.components.len(), num(rms), num(eps0));
    match d.termination {
        Termination::ResidualBelowThreshold => Ok(()),
        Termination::NoProgress => Err(Failure::NonConvergence(format!(
            "no further mode reduces the residual; residual RMS {} >= {}",
            num(rms),
            num(eps0)
        ))),
        Termination::MaxComponents => Err(Failure::NonConvergence(format!(
            "component budget of {} spent with residual RMS {} >= {}",
            resolved.pursuit.max_components,
            num(rms),
            num(eps0)
        ))),
    }
}

#[derive(Debug, Serialize)]
struct CheckRow {
    check: String,
    value: f64,
    bound: String,
    pass: bool,
}

fn verify_rows(pairs: &[PhasePair], residual_rms: f64, eps: f64, d: f64, eps0: f64) -> Result<Vec<CheckRow>, Failure> {
    let mut rows = Vec::new();
    for (k, p) in pairs.iter().enumerate() {
        let r = check_scale_separation(p, eps)?;
        rows.push(CheckRow {
            check: format!("scale separation {k}"),
            value: r.epsilon(),
            bound: format!("<= {}", num(eps)),
            pass: r.in_dictionary,
        });
        let ne = verify_norm_equivalence(p)?;
        let note = if ne.periodic { "" } else { " (non-periodic)" };
        rows.push(CheckRow {
            check: format!("norm equivalence {k}{note}"),
            value: ne.mid,
            bound: format!("[{}, {}]", num(ne.lhs), num(ne.rhs)),
            pass: ne.holds,
        });
    }
    if pairs.len() > 1 {
        let params = sparsetf::DictionaryParams { epsilon: eps, d, m_prime: f64::MAX, epsilon0: eps0 };
        let sep = check_well_separated(pairs, &params)?;
        rows.push(CheckRow {
            check: "frequency ratio d_min".into(),
            value: sep.d_min,
            bound: format!(">= {}", num(d)),
            pass: sep.d_min >= d * (1.0 - 1e-9),
        });
        for i in 0..pairs.len() {
            for j in i + 1..pairs.len() {
                let check = format!("cross term {i}-{j}");
                rows.push(match verify_cross_term_bound(&pairs[i], &pairs[j]) {
                    Ok(c) => CheckRow { check, value: c.value, bound: format!("< {}", num(c.bound)), pass: c.holds },
                    Err(e) => CheckRow { check, value: f64::NAN, bound: e.to_string(), pass: false },
                });
            }
        }
    }
    rows.push(CheckRow {
        check: "residual RMS".into(),
        value: residual_rms,
        bound: format!("< {}", num(eps0)),
        pass: residual_rms < eps0,
    });
    Ok(rows)
}

pub fn verify(ov: &Overrides, decomposition: &Path, signal: Option<&Path>, out_dir: Option<&Path>) -> CmdResult {
    let d = read_decomposition(decomposition)?;
    let f = match signal {
        Some(p) => read_signal(p)?,
        None => d.signal()?,
    };
    f.grid().ensure_matches(d.grid())?;
    let resolved = resolve(ov, Some(&f))?;
    let params = resolved.pursuit.params;
    let residual = if d.components.is_empty() { f.clone() } else { f.sub(&reconstruct(&d.components)?)? };
    let rows = verify_rows(&d.components, residual.rms(), params.epsilon, params.d, params.epsilon0)?;

    let mut t = Table::new(["check", "value", "bound", "result"]);
    for r in &rows {
        t.row([r.check.clone(), num(r.value), r.bound.clone(), verdict(r.pass).into()]);
    }
    print!("{}", t.render());
    if let Some(dir) = out_dir {
        ensure_dir(dir)?;
        write_json(&dir.join("verify.json"), &rows)?;
        let mut inputs = vec![decomposition];
        inputs.extend(signal);
        RunManifest::new("verify", &resolved, &inputs)?.write(dir)?;
    }
    let failed = rows.iter().filter(|r| !r.pass).count();
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure::Verification(format!("{failed} of {} checks failed", rows.len())))
    }
}

pub fn cwt(ov: &Overrides, signal: &Path, out_dir: &Path) -> CmdResult {
    let f = read_signal(signal)?;
    let resolved = resolve(ov, Some(&f))?;
    let w = make_wavelet(resolved.delta)?;
    let opts = RecoveryOptions {
        floor: None,
        voices: resolved.pursuit.voices,
        boundary: resolved.pursuit.boundary,
        scales: None,
    };
    ensure_dir(out_dir)?;
    let config = json!({ "delta": resolved.delta, "voices": opts.voices, "boundary": opts.boundary });
    let Some(s) = scalogram_of(&f, &w, &opts)? else {
        write_ridges(&out_dir.join("ridges.json"), &[])?;
        RunManifest::new("cwt", config, &[signal])?.write(out_dir)?;
        println!("no oscillation found; no scalogram written");
        return Ok(());
    };
    for warning in &s.warnings {
        eprintln!("warning: {warning}");
    }
    write_scalogram(&out_dir.join("scalogram.json"), &s)?;
    write_text(&out_dir.join("scalogram.svg"), &scalogram_svg(&s, "scalogram |W| / sqrt(omega)"))?;
    let ridges = extract_ridges(&s, default_floor(&s))?;
    write_ridges(&out_dir.join("ridges.json"), &ridges)?;
    RunManifest::new("cwt", config, &[signal])?.write(out_dir)?;

    let mut t = Table::new(["ridge", "t start", "t end", "mean freq", "ambiguous"]);
    for (k, r) in ridges.iter().enumerate() {
        t.row([
            k.to_string(),
            num(r.times[0]),
            num(r.times[r.len() - 1]),
            num(r.mean_frequency() / (2.0 * PI)),
            r.ambiguous.to_string(),
        ]);
    }
    print!("{}", t.render());
    println!("{} scales from {} to {}", s.n_scales(), num(s.scales[0]), num(s.scales[s.n_scales() - 1]));
    Ok(())
}

pub fn compare(ov: &Overrides, first: &Path, second: &Path, out_dir: Option<&Path>) -> CmdResult {
    let x = read_decomposition(first)?;
    let y = read_decomposition(second)?;
    let report = compare_decompositions(&x, &y)?;
    let mut t = Table::new(["first", "second", "amplitude", "phase", "reconstruction"]);
    for (k, (i, j)) in report.matched.iter().enumerate() {
        t.row([
            i.to_string(),
            j.to_string(),
            num(report.amp_errors[k]),
            num(report.phase_errors[k]),
            num(report.reconstruction_errors[k]),
        ]);
    }
    print!("{}", t.render());
    println!("components: {} vs {} (counts equal: {})", x.components.len(), y.components.len(), report.counts_equal);
    if let Some(dir) = out_dir {
        ensure_dir(dir)?;
        write_json(&dir.join("comparison.json"), &report)?;
        RunManifest::new("compare", json!({ "tol": ov.tol }), &[first, second])?.write(dir)?;
    }
    match ov.tol {
        Some(tol) if !report.counts_equal => {
            Err(Failure::Verification(format!("component counts differ (tolerance {})", num(tol))))
        }
        Some(tol) if report.max_error() > tol => Err(Failure::Verification(format!(
            "largest error {} exceeds tolerance {}",
            num(report.max_error()),
            num(tol)
        ))),
        _ => Ok(()),
    }
}

#[derive(Debug, Serialize)]
struct Segment {
    component: usize,
    t_start: f64,
    t_end: f64,
    ratio: f64,
}

pub fn partition(ov: &Overrides, decomposition: &Path, out_dir: Option<&Path>) -> CmdResult {
    let dec = read_decomposition(decomposition)?;
    let d = resolve(ov, None)?.pursuit.params.d;
    let grid = *dec.grid();
    let mut segments = Vec::new();
    for (k, p) in dec.components.iter().enumerate() {
        let freq = p.frequency();
        let mut bounds = vec![0];
        bounds.extend(partition_domain(&freq, d));
        bounds.push(freq.len());
        for w in bounds.windows(2) {
            let seg = &freq[w[0]..w[1]];
            let hi = seg.iter().cloned().fold(f64::MIN, f64::max);
            let lo = seg.iter().cloned().fold(f64::MAX, f64::min);
            segments.push(Segment { component: k, t_start: grid.time(w[0]), t_end: grid.time(w[1] - 1), ratio: hi / lo });
        }
    }
    let mut t = Table::new(["component", "t start", "t end", "sup/inf theta'"]);
    for s in &segments {
        t.row([s.component.to_string(), num(s.t_start), num(s.t_end), num(s.ratio)]);
    }
    print!("{}", t.render());
    println!("limit sqrt(d) = {}", num(d.sqrt()));
    if let Some(dir) = out_dir {
        ensure_dir(dir)?;
        write_json(&dir.join("partition.json"), &segments)?;
        RunManifest::new("partition", json!({ "d": d }), &[decomposition])?.write(dir)?;
    }
    Ok(())
}

/// Reference values of the three objectives on the mode-mixing signal.
pub const REFERENCE_OBJECTIVES: [(&str, f64); 3] = [("p(a, theta) spurious", 72.4), ("p(a1, theta1)", 84.0), ("p(a2, theta2)", 84.0)];

/// Relative deviation allowed by `reproduce`.
pub const REPRODUCE_TOL: f64 = 0.02;

pub fn reproduce(_ov: &Overrides, out_dir: &Path, n: usize) -> CmdResult {
    ensure_dir(out_dir)?;
    let (f, truth, spurious) = gen_mode_mixing_example(n)?;
    let measured = [
        p2_objective(&f, &spurious)?,
        p2_objective(&f, &truth.pairs[0])?,
        p2_objective(&f, &truth.pairs[1])?,
    ];
    let mut t = Table::new(["objective", "measured", "reference", "deviation", "result"]);
    let mut csv = String::from("objective,measured,reference,relative_deviation,within_tolerance\n");
    let mut all = true;
    for ((name, reference), value) in REFERENCE_OBJECTIVES.iter().zip(measured) {
        let dev = (value - reference).abs() / reference;
        let ok = dev <= REPRODUCE_TOL;
        all &= ok;
        t.row([name.to_string(), format!("{value:.4}"), format!("{reference:.1}"), format!("{:.3}%", 100.0 * dev), verdict(ok).into()]);
        csv.push_str(&format!("\"{name}\",{value:.10},{reference},{dev:.10},{ok}\n"));
    }
    write_text(&out_dir.join("reproduce.csv"), &csv)?;
    RunManifest::new("reproduce", json!({ "n": n, "tolerance": REPRODUCE_TOL }), &[])?.write(out_dir)?;
    print!("{}", t.render());
    if all {
        Ok(())
    } else {
        Err(Failure::Verification(format!("an objective deviates by more than {}%", 100.0 * REPRODUCE_TOL)))
    }
}
