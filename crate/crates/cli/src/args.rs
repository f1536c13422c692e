use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use interfero::suppression::SUPPRESSION_TOL;
use interfero::tensor::UNITARITY_TOL;
use interfero::ParticleClass;

use crate::output::Format;
use crate::CliError;

#[derive(Parser, Debug)]
#[command(name = "interfero", version, about = "Many-particle interference in multiport interferometers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Two-particle coincidence probability on a balanced beamsplitter versus delay.
    Hom {
        #[command(flatten)]
        grid: GridArg,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Transition probabilities of wave-packet trains with growing separation.
    DistScan {
        #[command(flatten)]
        setup: Setup,
        #[command(flatten)]
        grid: GridArg,
        /// Output ports of one event (comma list); repeat for several events.
        #[arg(long = "outputs")]
        outputs: Vec<String>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// (NM, CV) of Haar-random interferometers next to the random-matrix predictions.
    Scatter {
        #[command(flatten)]
        setup: Setup,
        /// Number of random interferometers.
        #[arg(long, default_value_t = 200)]
        trials: usize,
        /// Restrict to these classes (repeatable); all four by default.
        #[arg(long = "class")]
        classes: Vec<ParticleClass>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Check suppression-law predictions against exact probabilities for every output event.
    Suppress {
        /// Mode permutation in cycle notation, e.g. "(1 2)(3 4)".
        #[arg(long)]
        permutation: String,
        /// Number of modes; defaults to the largest port mentioned.
        #[arg(short = 'm', long = "modes")]
        modes: Option<usize>,
        /// Input ports (comma list).
        #[arg(long)]
        inputs: String,
        #[arg(long, default_value = "boson")]
        class: ParticleClass,
        /// Use the extended fermionic law (fermions only).
        #[arg(long)]
        extended: bool,
        #[arg(long = "tol-suppression", default_value_t = SUPPRESSION_TOL)]
        tol_suppression: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Classify samples (from a file or generated) by their correlation statistics.
    Validate {
        /// Sample file: one row of m occupation counts per event.
        #[arg(long, conflicts_with_all = ["exact", "unitary", "modes", "particles", "inputs", "seed", "class"])]
        samples: Option<PathBuf>,
        /// Use exact correlations instead of sampling.
        #[arg(long)]
        exact: bool,
        #[command(flatten)]
        setup: OptSetup,
        #[arg(long)]
        class: Option<ParticleClass>,
        /// Number of generated samples.
        #[arg(long, default_value_t = 100_000)]
        count: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Write a unitary in the JSON matrix format.
    Unitary {
        #[arg(short = 'm', long = "modes")]
        modes: usize,
        #[arg(long, value_enum, default_value_t = Kind::Haar)]
        kind: Kind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact two-point output correlations of one interferometer.
    Corr {
        #[command(flatten)]
        setup: Setup,
        #[arg(long, default_value = "boson")]
        class: ParticleClass,
        /// Print the moment summary instead of the pairs.
        #[arg(long)]
        summary: bool,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Draw output patterns from the exact distribution.
    Sample {
        #[command(flatten)]
        setup: Setup,
        #[arg(long, default_value = "boson")]
        class: ParticleClass,
        #[arg(long, default_value_t = 10_000)]
        count: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Haar,
    Fourier,
    Identity,
    Beamsplitter,
}

/// Interferometer and input state.
#[derive(Args, Debug)]
pub struct Setup {
    #[arg(short = 'm', long = "modes")]
    pub modes: Option<usize>,
    #[arg(short = 'n', long = "particles")]
    pub particles: Option<usize>,
    /// Input ports (comma list); defaults to 1..n.
    #[arg(long)]
    pub inputs: Option<String>,
    /// Seed for the Haar-random unitary.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Read the unitary from a JSON file instead of drawing one.
    #[arg(long)]
    pub unitary: Option<PathBuf>,
    #[arg(long = "tol-unitary", default_value_t = UNITARITY_TOL)]
    pub tol_unitary: f64,
}

/// Like [`Setup`] but with an optional seed, so it can coexist with a sample file.
#[derive(Args, Debug)]
pub struct OptSetup {
    #[arg(short = 'm', long = "modes")]
    pub modes: Option<usize>,
    #[arg(short = 'n', long = "particles")]
    pub particles: Option<usize>,
    #[arg(long)]
    pub inputs: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub unitary: Option<PathBuf>,
    #[arg(long = "tol-unitary", default_value_t = UNITARITY_TOL)]
    pub tol_unitary: f64,
}

impl OptSetup {
    pub fn into_setup(self) -> Setup {
        Setup {
            modes: self.modes,
            particles: self.particles,
            inputs: self.inputs,
            seed: self.seed.unwrap_or(0),
            unitary: self.unitary,
            tol_unitary: self.tol_unitary,
        }
    }
}

#[derive(Args, Debug)]
pub struct GridArg {
    /// Values of Δω·Δτ as "start:stop:steps".
    #[arg(long, default_value = "0:3:31")]
    pub grid: String,
}

#[derive(Args, Debug)]
pub struct OutputArgs {
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses "start:stop:steps" into `steps` equidistant non-negative points.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Usage(format!("grid must look like start:stop:steps, got {spec:?}"));
    let parts: Vec<&str> = spec.split(':').collect();
    let [start, stop, steps] = parts.as_slice() else {
        return Err(bad());
    };
    let start: f64 = start.trim().parse().map_err(|_| bad())?;
    let stop: f64 = stop.trim().parse().map_err(|_| bad())?;
    let steps: usize = steps.trim().parse().map_err(|_| bad())?;
    if steps == 0 || !start.is_finite() || !stop.is_finite() {
        return Err(bad());
    }
    if start < 0.0 || stop < 0.0 {
        return Err(CliError::Usage(format!("grid values must be >= 0, got {spec:?}")));
    }
    if steps == 1 {
        return Ok(vec![start]);
    }
    let h = (stop - start) / (steps - 1) as f64;
    Ok((0..steps).map(|k| if k == steps - 1 { stop } else { start + k as f64 * h }).collect())
}

/// Parses "1,2,3" (spaces allowed).
pub fn parse_ports(spec: &str) -> Result<Vec<usize>, CliError> {
    let ports = spec
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<usize>().map_err(|_| CliError::Usage(format!("bad port {t:?} in {spec:?}"))))
        .collect::<Result<Vec<_>, _>>()?;
    if ports.is_empty() {
        return Err(CliError::Usage(format!("empty port list {spec:?}")));
    }
    Ok(ports)
}
