//! File formats: signal CSV and JSON for decompositions, scalograms and ridges.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, SparseTfError};
use crate::ridge::RidgeCurve;
use crate::signal::{linear_interp, Boundary, ComponentDiagnostics, Decomposition, Grid, PhasePair, SampledSignal, Termination};
use crate::wavelet::Scalogram;

/// Largest relative deviation of a sample spacing from the mean spacing
/// for a CSV to count as uniformly sampled.
pub const SPACING_TOL: f64 = 1e-9;

fn io_err(path: &Path, e: impl std::fmt::Display) -> SparseTfError {
    SparseTfError::Io(format!("{}: {e}", path.display()))
}

/// A signal read from CSV.
#[derive(Debug, Clone)]
pub struct IngestedSignal {
    pub signal: SampledSignal,
    /// Whether the input times were non-uniform and the values were
    /// linearly interpolated onto a uniform grid with the same endpoints
    /// and sample count.
    pub resampled: bool,
}

/// Parses `t,value` CSV text. Errors name the offending line.
pub fn parse_signal_csv(reader: impl Read) -> Result<IngestedSignal> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| SparseTfError::InvalidInput(format!("line 1: {e}")))?.clone();
    if headers.len() != 2 || &headers[0] != "t" || &headers[1] != "value" {
        return invalid(format!("line 1: expected header `t,value`, got `{}`", headers.iter().collect::<Vec<_>>().join(",")));
    }
    let mut ts = Vec::new();
    let mut vs = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            SparseTfError::InvalidInput(format!("line {line}: {e}"))
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != 2 {
            return invalid(format!("line {line}: expected 2 fields, got {}", record.len()));
        }
        let parse = |s: &str, what: &str| -> Result<f64> {
            match s.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => invalid(format!("line {line}: {what} `{s}` is not a finite number")),
            }
        };
        let t = parse(&record[0], "time")?;
        let v = parse(&record[1], "value")?;
        if let Some(&prev) = ts.last() {
            if t <= prev {
                return invalid(format!("line {line}: time {t} does not increase (previous {prev})"));
            }
        }
        ts.push(t);
        vs.push(v);
    }
    if ts.len() < 2 {
        return invalid(format!("signal CSV needs at least 2 samples, got {}", ts.len()));
    }
    let n = ts.len();
    let grid = Grid::new(ts[0], ts[n - 1], n)?;
    let dt = grid.dt();
    let uniform = ts.windows(2).all(|w| ((w[1] - w[0]) - dt).abs() <= SPACING_TOL * dt);
    let values = if uniform { vs } else { grid.times().iter().map(|&t| linear_interp(&ts, &vs, t)).collect() };
    Ok(IngestedSignal { signal: SampledSignal::new(grid, values)?, resampled: !uniform })
}

pub fn read_signal_csv(path: &Path) -> Result<IngestedSignal> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    parse_signal_csv(file).map_err(|e| match e {
        SparseTfError::InvalidInput(m) => SparseTfError::InvalidInput(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn write_signal_csv(path: &Path, f: &SampledSignal) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    let run = |w: &mut BufWriter<File>| -> std::io::Result<()> {
        writeln!(w, "t,value")?;
        for (i, v) in f.values().iter().enumerate() {
            writeln!(w, "{:e},{:e}", f.grid().time(i), v)?;
        }
        w.flush()
    };
    run(&mut w).map_err(|e| io_err(path, e))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComponentJson {
    pub a: Vec<f64>,
    pub theta: Vec<f64>,
}

/// On-disk decomposition. The diagnostics and termination fields are
/// written by the pursuit but optional on input.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecompositionJson {
    pub grid: Grid,
    pub components: Vec<ComponentJson>,
    pub residual: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<ComponentDiagnostics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub termination: Option<Termination>,
}

impl DecompositionJson {
    pub fn from_decomposition(d: &Decomposition) -> Self {
        Self {
            grid: *d.grid(),
            components: d.components.iter().map(|c| ComponentJson { a: c.a().to_vec(), theta: c.theta().to_vec() }).collect(),
            residual: d.residual.values().to_vec(),
            diagnostics: d.diagnostics.clone(),
            termination: Some(d.termination),
        }
    }

    pub fn from_pairs(pairs: &[PhasePair], residual: &SampledSignal) -> Self {
        Self {
            grid: *residual.grid(),
            components: pairs.iter().map(|c| ComponentJson { a: c.a().to_vec(), theta: c.theta().to_vec() }).collect(),
            residual: residual.values().to_vec(),
            diagnostics: Vec::new(),
            termination: None,
        }
    }

    pub fn into_decomposition(self) -> Result<Decomposition> {
        let grid = Grid::new(self.grid.t0, self.grid.t1, self.grid.n)?;
        let residual = SampledSignal::new(grid, self.residual)?;
        let components = self
            .components
            .into_iter()
            .enumerate()
            .map(|(k, c)| {
                PhasePair::new(grid, c.a, c.theta)
                    .map_err(|e| SparseTfError::InvalidInput(format!("component {k}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let keep = self.diagnostics.len() == components.len()
            && components.windows(2).all(|w| w[0].mean_frequency() <= w[1].mean_frequency());
        let mut d = Decomposition::from_parts(components, residual)?;
        if keep {
            d.diagnostics = self.diagnostics;
        }
        if let Some(t) = self.termination {
            d.termination = t;
        }
        Ok(d)
    }
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| io_err(path, e))?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| io_err(path, e))
}

/// Reads JSON, reporting parse errors with their line and column.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let mut text = String::new();
    File::open(path).and_then(|mut f| f.read_to_string(&mut text)).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| {
        SparseTfError::InvalidInput(format!("{}: line {}, column {}: {e}", path.display(), e.line(), e.column()))
    })
}

pub fn write_decomposition(path: &Path, d: &Decomposition) -> Result<()> {
    write_json(path, &DecompositionJson::from_decomposition(d))
}

pub fn read_decomposition(path: &Path) -> Result<Decomposition> {
    read_json::<DecompositionJson>(path)?.into_decomposition().map_err(|e| match e {
        SparseTfError::InvalidInput(m) => SparseTfError::InvalidInput(format!("{}: {m}", path.display())),
        other => other,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WaveletJson {
    pub delta: f64,
}

/// Scalogram export. `coeffs[i]` holds `re, im` pairs for time `i`,
/// interleaved in scale order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalogramJson {
    pub times: Vec<f64>,
    pub scales: Vec<f64>,
    pub coeffs: Vec<Vec<f64>>,
    pub wavelet: WaveletJson,
    pub boundary: Boundary,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl ScalogramJson {
    pub fn from_scalogram(s: &Scalogram) -> Self {
        let coeffs = (0..s.n_times())
            .map(|i| (0..s.n_scales()).flat_map(|j| { let c = s.get(i, j); [c.re, c.im] }).collect())
            .collect();
        Self {
            times: s.times.clone(),
            scales: s.scales.clone(),
            coeffs,
            wavelet: WaveletJson { delta: s.wavelet.delta() },
            boundary: s.boundary,
            warnings: s.warnings.clone(),
        }
    }
}

pub fn write_scalogram(path: &Path, s: &Scalogram) -> Result<()> {
    write_json(path, &ScalogramJson::from_scalogram(s))
}

pub fn write_ridges(path: &Path, ridges: &[RidgeCurve]) -> Result<()> {
    write_json(path, ridges)
}
