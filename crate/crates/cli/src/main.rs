//! Command-line surface for the toric kernel pipeline.
//!
//! Subcommands mirror the library modules: polytope inspection, partition
//! and norm tables, the multiplier join, kernel sampling, verification
//! suites, and character sweeps. Exit codes: 0 pass, 1 check failure,
//! 2 parse error, 3 validation failure, 4 numeric flag.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "toric-szego",
    version,
    about = "Szego kernels, Fourier multipliers, and characters of toric varieties from lattice polytopes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,

    /// Worker threads (falls back to TORIC_SZEGO_THREADS, then all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Relative tolerance for quadrature-backed values.
    #[arg(long, global = true)]
    pub tol: Option<f64>,

    /// Seed for randomized sampling.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Write reports into this directory instead of stdout.
    #[arg(short = 'o', long = "out-dir", global = true)]
    pub out_dir: Option<PathBuf>,

    /// Emit tables even when some entries failed to converge.
    #[arg(long, global = true)]
    pub allow_flagged: bool,
}

#[derive(Args)]
pub struct InputArgs {
    /// Polytope file (JSON).
    pub file: PathBuf,
}

#[derive(Args)]
pub struct TableArgs {
    /// Polytope file (JSON).
    pub file: PathBuf,
    /// Bundle power N.
    #[arg(short = 'N', long = "dilation")]
    pub dilation: u32,
}

#[derive(Subcommand)]
pub enum Cmd {
    /// Inspect a polytope: vertices, facets, volume, lattice counts.
    Polytope {
        #[command(subcommand)]
        action: PolytopeCmd,
    },
    /// Exact lattice-path partition counts as CSV.
    Partition {
        #[command(flatten)]
        table: TableArgs,
    },
    /// Monomial norm table as CSV.
    Norms {
        #[command(flatten)]
        table: TableArgs,
    },
    /// Joined partition/norm/multiplier table as CSV.
    Multiplier {
        #[command(flatten)]
        table: TableArgs,
    },
    /// Kernel factorization report at seeded random pairs (JSON).
    Kernel {
        #[command(flatten)]
        table: TableArgs,
        /// Number of sample pairs.
        #[arg(long, default_value_t = 20)]
        samples: usize,
    },
    /// Run a verification suite; exit 0 iff every check passes.
    Verify {
        #[command(subcommand)]
        suite: VerifyCmd,
    },
    /// Torus characters: single values or grid sweeps.
    Character {
        #[command(subcommand)]
        path: CharacterCmd,
    },
    /// Combined JSON summary of every table at one dilation.
    Report {
        #[command(flatten)]
        table: TableArgs,
    },
}

#[derive(Subcommand)]
pub enum PolytopeCmd {
    /// Vertices, facets, volume, and lattice counts.
    Info {
        #[command(flatten)]
        input: InputArgs,
        /// Count lattice points of this dilate.
        #[arg(long, default_value_t = 1)]
        dilate: u32,
        /// Count lattice points for every N in A..B (inclusive).
        #[arg(long, value_parser = parse_range)]
        range: Option<(u32, u32)>,
    },
    /// Delzant determinant test with per-vertex certificate.
    Delzant {
        #[command(flatten)]
        input: InputArgs,
    },
}

#[derive(Subcommand)]
pub enum VerifyCmd {
    /// Direct Szego sum vs multiplier-rescaled kernel power.
    Factorization {
        #[command(flatten)]
        input: InputArgs,
        /// Verify for every dilation 1..=N.
        #[arg(short = 'N', long = "dilation", default_value_t = 6)]
        dilation: u32,
        #[arg(long, default_value_t = 20)]
        samples: usize,
    },
    /// Exact lattice character vs the kernel trace integral.
    Characters {
        #[command(flatten)]
        input: InputArgs,
        #[arg(short = 'N', long = "dilation", default_value_t = 4)]
        dilation: u32,
        /// Random angles per dilation.
        #[arg(long, default_value_t = 5)]
        samples: usize,
    },
    /// Multiplier symbol ratios along an interior ray.
    Asymptotics {
        #[command(flatten)]
        input: InputArgs,
        /// Interior ray point, comma-separated.
        #[arg(long, value_delimiter = ',', required = true)]
        ray: Vec<f64>,
        /// Dilation list.
        #[arg(long = "N", value_delimiter = ',', default_values_t = vec![8u32, 16, 32])]
        dilations: Vec<u32>,
    },
    /// Every suite with its defaults.
    All {
        #[command(flatten)]
        input: InputArgs,
        /// Interior ray point for the asymptotics leg (defaults to the
        /// barycenter).
        #[arg(long, value_delimiter = ',')]
        ray: Option<Vec<f64>>,
    },
}

#[derive(Subcommand)]
pub enum CharacterCmd {
    /// Exact lattice sum at one angle.
    Exact {
        #[command(flatten)]
        table: TableArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        phi: Vec<f64>,
    },
    /// Kernel trace integral at one angle.
    Trace {
        #[command(flatten)]
        table: TableArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        phi: Vec<f64>,
    },
    /// Leading-order oscillatory approximation at one angle.
    Leading {
        #[command(flatten)]
        table: TableArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        phi: Vec<f64>,
    },
    /// All three paths over a uniform angle grid, as CSV.
    Sweep {
        #[command(flatten)]
        table: TableArgs,
        /// Grid points per torus axis.
        #[arg(long, default_value_t = 8)]
        grid: usize,
    },
}

fn parse_range(s: &str) -> Result<(u32, u32), String> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| format!("expected A..B, got {s}"))?;
    let lo: u32 = a.trim().parse().map_err(|e| format!("bad range start: {e}"))?;
    let hi: u32 = b.trim().parse().map_err(|e| format!("bad range end: {e}"))?;
    if lo == 0 || hi < lo {
        return Err(format!("range must satisfy 1 <= A <= B, got {s}"));
    }
    Ok((lo, hi))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(commands::exit_code_for(&err))
        }
    }
}
