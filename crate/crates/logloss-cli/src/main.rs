//! Command-line front end: source ingestion, sweep orchestration, and
//! CSV/JSON report emission.
//!
//! Reports are deterministic for a fixed command line and seed, independent
//! of the worker thread count. Sweep results are cached on disk when the
//! `LOGLOSS_CACHE_DIR` environment variable points at a directory; cache
//! entries are content-addressed, so stale files are never reused.

mod cmds;
mod source;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use logloss_regions::search::SweepCache;
use logloss_regions::SearchGrid;

use source::SourceArgs;

/// Failures split by phase: input problems exit with code 2, computation or
/// output problems with code 1. Both leave a JSON record on stderr.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Run(String),
}

impl CliError {
    pub fn input(e: impl std::fmt::Display) -> Self {
        CliError::Input(e.to_string())
    }

    pub fn run(e: impl std::fmt::Display) -> Self {
        CliError::Run(e.to_string())
    }

    fn stage(&self) -> &'static str {
        match self {
            CliError::Input(_) => "input",
            CliError::Run(_) => "run",
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Run(m) => m,
        }
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Run(_) => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl std::fmt::Display for Format {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

#[derive(Parser)]
#[command(
    name = "logloss",
    version,
    about = "Rate-distortion region sweeps under logarithmic loss"
)]
struct Cli {
    /// Worker threads for sweeps; 0 keeps the rayon default. Reports are
    /// byte-identical for every choice.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Write the report to this file instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct MeshArgs {
    /// Mesh denominator for the channel sweep; rows live on the k-th
    /// probability grid.
    #[arg(long, default_value_t = 10)]
    mesh: usize,

    /// Enumeration budget in configurations.
    #[arg(long, default_value_t = 10_000_000)]
    budget: u64,
}

impl MeshArgs {
    fn grid(&self) -> Result<SearchGrid, CliError> {
        SearchGrid::new(self.mesh, self.budget).map_err(CliError::input)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Distortion against per-encoder rate, with the excess over the
    /// omniscient posterior and a significant-event count column.
    CeoCurve {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        mesh: MeshArgs,
        /// Rate spacing of the emitted samples, in bits.
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        /// Block length n for the bound n*eps/zeta on the expected count of
        /// zeta-significant symbols.
        #[arg(long, default_value_t = 100)]
        markov_n: u64,
        /// Significance threshold zeta in bits for that count.
        #[arg(long, default_value_t = 1.0)]
        markov_zeta: f64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },

    /// Membership of one rate-distortion point with its witness mixture.
    MtscCheck {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        mesh: MeshArgs,
        /// Query point `R1,R2,D1,D2` in bits.
        #[arg(long, value_name = "R1,R2,D1,D2")]
        point: String,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },

    /// Inner sweep against the outer description over a query lattice,
    /// reporting the disagreements that survive a boundary band.
    MtscSandwich {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        mesh: MeshArgs,
        /// Lattice spacing in bits.
        #[arg(long, default_value_t = 0.1)]
        step: f64,
        /// Boundary band in bits inside which flips are acceptable.
        #[arg(long, default_value_t = 0.02)]
        band: f64,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },

    /// Joint-watching versus separate-watching doubling rates for a
    /// two-race parlay at one rate pair.
    DailyDouble {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        mesh: MeshArgs,
        /// Odds table as JSON, row-major over outcomes; fair uniform odds
        /// when omitted.
        #[arg(long, value_name = "FILE")]
        odds: Option<PathBuf>,
        /// Description rates `R1,R2` in bits.
        #[arg(long, value_name = "R1,R2")]
        rates: String,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },

    /// Worst observed Hamming-versus-log-loss gap over random binary
    /// configurations, with the scale saddle point.
    GapAudit {
        #[command(flatten)]
        mesh: MeshArgs,
        /// Number of sampled configurations.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        /// Seed for the sampler.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },

    /// Extreme points of a stored supermodular set function.
    ExtremePoints {
        /// Set function as JSON {"m": ..., "values": [...]} in mask order.
        #[arg(long, value_name = "FILE")]
        function: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

fn run(command: Command) -> Result<String, CliError> {
    let cache = SweepCache::from_env();
    match command {
        Command::CeoCurve { source, mesh, step, markov_n, markov_zeta, format } => {
            let inst = source::load(&source)?.into_instance()?;
            cmds::ceo_curve(&inst, &mesh.grid()?, &cache, step, markov_n, markov_zeta, format)
        }
        Command::MtscCheck { source, mesh, point, format } => {
            let pair = source::load(&source)?.into_pair()?;
            cmds::mtsc_check(&pair, &point, &mesh.grid()?, &cache, format)
        }
        Command::MtscSandwich { source, mesh, step, band, format } => {
            let pair = source::load(&source)?.into_pair()?;
            cmds::mtsc_sandwich(&pair, &mesh.grid()?, &cache, step, band, format)
        }
        Command::DailyDouble { source, mesh, odds, rates, format } => {
            let pair = source::load(&source)?.into_pair()?;
            let spec = match odds {
                Some(path) => source::load_odds(&path, pair.probs().len())?,
                None => {
                    let n1 = pair.axis_size("Y1").map_err(CliError::input)?;
                    let n2 = pair.axis_size("Y2").map_err(CliError::input)?;
                    logloss_regions::gambling::RaceSpec::constant(n1, n2)
                }
            };
            cmds::daily_double(&pair, &spec, &rates, &mesh.grid()?, &cache, format)
        }
        Command::GapAudit { mesh, samples, seed, format } => {
            cmds::gap_audit(&mesh.grid()?, samples, seed, format)
        }
        Command::ExtremePoints { function, format } => {
            let f = source::load_set_function(&function)?;
            cmds::extreme_points(&f, format)
        }
    }
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Run(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Run(format!("cannot write to stdout: {e}"))),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        // A second initialization in the same process is harmless; the pool
        // from the first call stays in effect.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    }
    let result = run(cli.command).and_then(|text| emit(cli.out.as_ref(), &text));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let record = serde_json::json!({
                "error": { "stage": e.stage(), "message": e.message() }
            });
            eprintln!("{record}");
            ExitCode::from(e.code())
        }
    }
}
