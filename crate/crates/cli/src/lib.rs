//! Library behind the `sparsetf` binary: argument parsing and the
//! subcommands, callable in-process through [`execute`].

mod commands;
mod options;
mod table;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use options::{Failure, Overrides};

#[derive(Parser, Debug)]
#[command(name = "sparsetf", version, about = "Sparse time-frequency decomposition by nonlinear matching pursuit")]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Example {
    /// Two modes whose frequencies touch at t = 1/2, with both valid splits.
    Crossing,
    /// Two chirping modes on [0, 6] that invite a mode-mixing local minimum.
    ModeMixing,
    /// A random well-separated family member.
    Random,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write an example signal, its ground truth and any alternative splits.
    Synth {
        #[arg(long, value_enum)]
        example: Example,
        /// Sample count (default depends on the example).
        #[arg(long)]
        n: Option<usize>,
        /// Carrier multiplier for the crossing example.
        #[arg(long, default_value_t = 32)]
        k: u32,
        /// Component count for the random example.
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Decompose a `t,value` CSV signal by matching pursuit.
    Decompose {
        signal: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Check a decomposition against the separation and residual criteria.
    Verify {
        decomposition: PathBuf,
        /// The signal the decomposition claims to explain; defaults to the
        /// sum of its components and residual.
        signal: Option<PathBuf>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Continuous wavelet transform: scalogram, heatmap and ridges.
    Cwt {
        signal: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Match the components of two decompositions and report their differences.
    Compare {
        first: PathBuf,
        second: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Split each component's time axis into segments with frequency range below √d.
    Partition {
        decomposition: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Recompute the mode-mixing objective values and compare with their reference values.
    Reproduce {
        #[arg(long)]
        out_dir: PathBuf,
        /// Sample count.
        #[arg(long, default_value_t = 1 << 15)]
        n: usize,
    },
}

fn run(cli: Cli) -> Result<(), Failure> {
    options::configure_threads()?;
    let ov = &cli.overrides;
    match cli.command {
        Command::Synth { example, n, k, m, out_dir } => commands::synth(ov, example, n, k, m, &out_dir),
        Command::Decompose { signal, out_dir } => commands::decompose(ov, &signal, &out_dir),
        Command::Verify { decomposition, signal, out_dir } => {
            commands::verify(ov, &decomposition, signal.as_deref(), out_dir.as_deref())
        }
        Command::Cwt { signal, out_dir } => commands::cwt(ov, &signal, &out_dir),
        Command::Compare { first, second, out_dir } => commands::compare(ov, &first, &second, out_dir.as_deref()),
        Command::Partition { decomposition, out_dir } => commands::partition(ov, &decomposition, out_dir.as_deref()),
        Command::Reproduce { out_dir, n } => commands::reproduce(ov, &out_dir, n),
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn execute<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("{f}");
            f.code()
        }
    }
}
