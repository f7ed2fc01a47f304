//! Shared flags, configuration resolution, run manifests and exit codes.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::Serialize;
use sha2::{Digest, Sha256};
use sparsetf::{Boundary, PursuitConfig, SampledSignal, SparseTfError};

/// A failed command, classified by exit code.
#[derive(Debug)]
pub enum Failure {
    /// Unreadable or malformed input, or an output that cannot be written.
    Input(String),
    /// The algorithm stopped without meeting its threshold.
    NonConvergence(String),
    /// A verification check did not pass.
    Verification(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::NonConvergence(_) => 2,
            Failure::Verification(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(m) => write!(f, "error: {m}"),
            Failure::NonConvergence(m) => write!(f, "not converged: {m}"),
            Failure::Verification(m) => write!(f, "verification failed: {m}"),
        }
    }
}

impl From<SparseTfError> for Failure {
    fn from(e: SparseTfError) -> Self {
        match e {
            SparseTfError::Numerical { .. } => Failure::NonConvergence(e.to_string()),
            other => Failure::Input(other.to_string()),
        }
    }
}

pub type CmdResult = Result<(), Failure>;

/// Accepts decimals and simple fractions such as `4/3`.
pub fn parse_number(s: &str) -> Result<f64, String> {
    let value = match s.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| format!("`{s}` is not a number"))?;
            let q: f64 = q.trim().parse().map_err(|_| format!("`{s}` is not a number"))?;
            p / q
        }
        None => s.trim().parse().map_err(|_| format!("`{s}` is not a number"))?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

/// Flags shared by every subcommand.
#[derive(Args, Debug, Clone, Default)]
pub struct Overrides {
    /// Separation factor ε.
    #[arg(long, global = true, value_parser = parse_number)]
    pub epsilon: Option<f64>,
    /// Frequency ratio d between adjacent components (fractions such as 4/3 allowed).
    #[arg(long, global = true, value_parser = parse_number)]
    pub d: Option<f64>,
    /// Residual RMS threshold ε₀; defaults to √ε times the signal RMS.
    #[arg(long, global = true, value_parser = parse_number)]
    pub epsilon0: Option<f64>,
    /// Wavelet half-bandwidth Δ.
    #[arg(long, global = true, value_parser = parse_number)]
    pub delta: Option<f64>,
    /// Scales per octave.
    #[arg(long, global = true)]
    pub voices: Option<usize>,
    /// Error tolerance for `compare`.
    #[arg(long, global = true, value_parser = parse_number)]
    pub tol: Option<f64>,
    /// Seed for random examples.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Treat the record as one period.
    #[arg(long, global = true, conflicts_with = "mirror")]
    pub periodic: bool,
    /// Extend the record by even reflection (default).
    #[arg(long, global = true)]
    pub mirror: bool,
    /// JSON file with pursuit configuration; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

impl Overrides {
    pub fn boundary(&self) -> Option<Boundary> {
        match (self.periodic, self.mirror) {
            (true, _) => Some(Boundary::Periodic),
            (_, true) => Some(Boundary::Mirror),
            _ => None,
        }
    }
}

/// Pursuit configuration after applying defaults, the config file and flags.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub pursuit: PursuitConfig,
    pub delta: f64,
    /// Where ε₀ came from: `flag`, `file` or `relative`.
    pub epsilon0_source: &'static str,
}

/// Resolves the configuration for a run on `signal`. Without an explicit
/// ε₀ the threshold is `√ε · rms(signal)`; without an explicit boundary the
/// record is mirrored.
pub fn resolve(ov: &Overrides, signal: Option<&SampledSignal>) -> Result<Resolved, Failure> {
    let mut cfg = PursuitConfig { boundary: Boundary::Mirror, ..PursuitConfig::default() };
    let mut eps0_source = "relative";
    if let Some(path) = &ov.config {
        let value: serde_json::Value = sparsetf::io::read_json(path)?;
        let file: PursuitConfig = serde_json::from_value(value.clone())
            .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
        let has_boundary = value.get("boundary").is_some();
        if value.pointer("/params/epsilon0").is_some() {
            eps0_source = "file";
        }
        cfg = PursuitConfig { boundary: if has_boundary { file.boundary } else { cfg.boundary }, ..file };
    }
    if let Some(v) = ov.epsilon {
        cfg.params.epsilon = v;
    }
    if let Some(v) = ov.d {
        cfg.params.d = v;
    }
    if let Some(v) = ov.epsilon0 {
        cfg.params.epsilon0 = v;
        eps0_source = "flag";
    }
    if let Some(v) = ov.delta {
        cfg.delta = Some(v);
    }
    if let Some(v) = ov.voices {
        cfg.voices = v;
    }
    if let Some(b) = ov.boundary() {
        cfg.boundary = b;
    }
    if eps0_source == "relative" {
        if let Some(f) = signal {
            let eps = cfg.params.epsilon.clamp(f64::MIN_POSITIVE, 1.0);
            cfg.params.epsilon0 = (eps.sqrt() * f.rms()).max(f64::MIN_POSITIVE);
        }
    }
    cfg.validate()?;
    Ok(Resolved { delta: cfg.wavelet_delta(), pursuit: cfg, epsilon0_source: eps0_source })
}

/// Reproducibility record written next to every output.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    /// SHA-256 of each input file, keyed by path as given.
    pub input_digest: BTreeMap<String, String>,
    pub tool_version: String,
}

impl RunManifest {
    pub fn new(command: &str, config: impl Serialize, inputs: &[&Path]) -> Result<Self, Failure> {
        let mut input_digest = BTreeMap::new();
        for p in inputs {
            let bytes = fs::read(p).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?;
            input_digest.insert(p.display().to_string(), hex::encode(Sha256::digest(&bytes)));
        }
        Ok(Self {
            command: command.to_string(),
            config: serde_json::to_value(config).map_err(|e| Failure::Input(e.to_string()))?,
            input_digest,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        })
    }

    pub fn write(&self, dir: &Path) -> CmdResult {
        sparsetf::io::write_json(&dir.join("manifest.json"), self)?;
        Ok(())
    }
}

/// Creates `dir` if needed.
pub fn ensure_dir(dir: &Path) -> CmdResult {
    fs::create_dir_all(dir).map_err(|e| Failure::Input(format!("{}: {e}", dir.display())))
}

pub fn write_text(path: &Path, text: &str) -> CmdResult {
    fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

pub fn read_signal(path: &Path) -> Result<SampledSignal, Failure> {
    let ingested = sparsetf::io::read_signal_csv(path)?;
    if ingested.resampled {
        eprintln!("note: {} is not uniformly sampled; resampled linearly onto {} points", path.display(), ingested.signal.len());
    }
    Ok(ingested.signal)
}

/// Caps the global thread pool at `SPARSETF_THREADS` when set.
pub fn configure_threads() -> CmdResult {
    let Ok(raw) = std::env::var("SPARSETF_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n >= 1)
        .ok_or_else(|| Failure::Input(format!("SPARSETF_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Input(format!("cannot size thread pool: {e}")))
}
