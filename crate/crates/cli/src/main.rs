//! `hill`: band edges, truncated spectra and τ-sweeps from a model file.
//!
//! Exit status: 0 success, 1 invalid input, 2 computation failure,
//! 3 oracle comparison failed.

mod commands;
mod config;
mod output;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hill::error::HillError;
use hill::oracle::DEFAULT_POINTS_PER_CELL;
use hill::truncated::DEFAULT_GRID_PER_CELL;

use crate::commands::OracleArgs;
use crate::output::Artifact;

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Computation(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Computation(m) => write!(f, "computation failed: {m}"),
        }
    }
}

impl From<HillError> for CliError {
    fn from(e: HillError) -> Self {
        match e {
            HillError::InvalidArgument { .. } | HillError::InvalidCoefficients(_) => CliError::Validation(e.to_string()),
            other => CliError::Computation(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "hill", version, about = "Spectra of Hill's equation on a truncated lattice")]
struct Cli {
    /// Model file (`key = value` lines).
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    format: Format,
    /// Write the artifact here and the summary to stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the model and report coefficient bounds.
    Validate,
    /// Sample the discriminant on an evenly spaced λ grid.
    DiscriminantScan {
        #[arg(long, allow_hyphen_values = true)]
        lmin: f64,
        #[arg(long, allow_hyphen_values = true)]
        lmax: f64,
        #[arg(long)]
        points: usize,
    },
    /// Periodic and semi-periodic eigenvalues through the given number of gaps.
    BandEdges {
        #[arg(long)]
        gaps: usize,
    },
    /// The N-1 truncated eigenvalues inside one band.
    BandStates {
        #[arg(long)]
        band: usize,
        #[arg(long)]
        cells: usize,
    },
    /// The truncated eigenvalue inside one gap, for each `--tau`.
    GapStates {
        #[arg(long)]
        gap: usize,
        /// Truncation points; repeat the flag or separate values with commas.
        #[arg(long, required = true, value_delimiter = ',', allow_hyphen_values = true)]
        tau: Vec<f64>,
    },
    /// Full classified Dirichlet spectrum on [tau, tau + N a].
    Spectrum {
        #[arg(long, allow_hyphen_values = true)]
        tau: f64,
        #[arg(long)]
        cells: usize,
        #[arg(long)]
        bands: usize,
    },
    /// Gap eigenvalue as the truncation point moves through one period.
    TauSweep {
        #[arg(long)]
        gap: usize,
        #[arg(long)]
        points: usize,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        tau0: f64,
    },
    /// Sampled, normalised eigenfunction of the truncated problem.
    Eigenfunction {
        #[arg(long, allow_hyphen_values = true)]
        lambda: f64,
        #[arg(long, allow_hyphen_values = true)]
        tau: f64,
        #[arg(long)]
        cells: usize,
        #[arg(long, default_value_t = DEFAULT_GRID_PER_CELL)]
        grid_per_cell: usize,
    },
    /// Compare the classified spectrum with a finite-difference solve.
    OracleCheck {
        #[arg(long, allow_hyphen_values = true)]
        tau: f64,
        #[arg(long)]
        cells: usize,
        #[arg(long)]
        bands: usize,
        /// Interior grid points [default: 1024 per cell]
        #[arg(long)]
        gridsize: Option<usize>,
        /// Skip Richardson extrapolation.
        #[arg(long)]
        no_richardson: bool,
        #[arg(long, default_value_t = 1e-4)]
        rel_tol: f64,
    },
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("HILL_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|n| *n >= 1)
        .ok_or_else(|| CliError::Validation(format!("HILL_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Computation(e.to_string()))
}

fn run(cli: &Cli) -> Result<Artifact, CliError> {
    configure_threads()?;
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Validation("argument `--config`: a model file is required".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("argument `--config`: cannot read {}: {e}", path.display())))?;
    let coeffs = config::parse(&text)?;
    match &cli.command {
        Command::Validate => commands::validate(&coeffs),
        Command::DiscriminantScan { lmin, lmax, points } => commands::discriminant_scan(&coeffs, *lmin, *lmax, *points),
        Command::BandEdges { gaps } => commands::band_edges(&coeffs, *gaps),
        Command::BandStates { band, cells } => commands::band_states_cmd(&coeffs, *band, *cells),
        Command::GapStates { gap, tau } => commands::gap_states_cmd(&coeffs, *gap, tau),
        Command::Spectrum { tau, cells, bands } => commands::spectrum_cmd(&coeffs, *tau, *cells, *bands),
        Command::TauSweep { gap, points, tau0 } => commands::tau_sweep_cmd(&coeffs, *gap, *points, *tau0),
        Command::Eigenfunction {
            lambda,
            tau,
            cells,
            grid_per_cell,
        } => commands::eigenfunction_cmd(&coeffs, *lambda, *tau, *cells, *grid_per_cell),
        Command::OracleCheck {
            tau,
            cells,
            bands,
            gridsize,
            no_richardson,
            rel_tol,
        } => commands::oracle_check_cmd(
            &coeffs,
            &OracleArgs {
                tau: *tau,
                cells: *cells,
                bands: *bands,
                gridsize: gridsize.unwrap_or(DEFAULT_POINTS_PER_CELL * cells),
                richardson: !no_richardson,
                rel_tol: *rel_tol,
            },
        ),
    }
}

fn emit(cli: &Cli, artifact: &Artifact) -> Result<(), CliError> {
    let body = match cli.format {
        Format::Csv => artifact.csv.clone(),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&artifact.json).map_err(|e| CliError::Computation(e.to_string()))?;
            s.push('\n');
            s
        }
    };
    match &cli.output {
        Some(path) => {
            std::fs::write(path, body)
                .map_err(|e| CliError::Computation(format!("cannot write {}: {e}", path.display())))?;
            println!("{}", artifact.summary);
            println!("wrote {}", path.display());
        }
        None => {
            print!("{body}");
            eprintln!("{}", artifact.summary);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = run(&cli).and_then(|artifact| emit(&cli, &artifact).map(|_| artifact.oracle_failed));
    match result {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(3),
        Err(e) => {
            eprintln!("hill: {e}");
            ExitCode::from(match e {
                CliError::Validation(_) => 1,
                CliError::Computation(_) => 2,
            })
        }
    }
}
