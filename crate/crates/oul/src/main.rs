//! `oul` — spectral toolkit for multidimensional Ornstein-Uhlenbeck
//! processes and quadratic bosonic master equations.
//!
//! Every subcommand reads a TOML model file (`--config`), computes one
//! table, and writes CSV to stdout or `--out`.  `oul verify` instead runs
//! the numerical verification suite and emits a JSON report; it exits 0
//! only if every check passes.  Exit codes: 0 success, 1 failed verify
//! checks, 2 invalid input, 3 numerical failure.
//!
//! The environment variable `OUL_THREADS` caps the worker pool used by the
//! Monte-Carlo oracle; results are identical for any thread count.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

use oul::cli_io::{
    cmd_covariance, cmd_eigfun, cmd_ness, cmd_propagate, cmd_spectrum, parse_config,
    render_verify_report, run_verify_suite, ModelConfig, ResultTable, VerifySuite,
};
use oul::error::{Error, Result};

#[derive(Parser)]
#[command(
    name = "oul",
    version,
    about = "Spectral theory of Ornstein-Uhlenbeck processes and quadratic bosonic master equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Model file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Write the output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the seed recorded in the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Generator eigenvalues up to a total occupation order.
    Spectrum {
        #[command(flatten)]
        common: Common,
        /// Maximum total order |mu| (defaults to options.max_order).
        #[arg(long)]
        order: Option<usize>,
    },
    /// Stationary density (classical) or Husimi function (quantum) on the grid.
    Ness {
        #[command(flatten)]
        common: Common,
    },
    /// Right and left eigenfunctions of one mode on the grid.
    Eigfun {
        #[command(flatten)]
        common: Common,
        /// Occupation numbers, comma-separated (quantum modes use doubled
        /// indices, e.g. "1,0").
        #[arg(long)]
        mu: String,
    },
    /// Covariance relaxation time series.
    Covariance {
        #[command(flatten)]
        common: Common,
        /// Final time (defaults to twenty relaxation times).
        #[arg(long)]
        t: Option<f64>,
    },
    /// Density propagated from an initial state by the spectral sum.
    Propagate {
        #[command(flatten)]
        common: Common,
        /// Evolution time.
        #[arg(long)]
        t: f64,
        /// Classical start point, comma-separated (e.g. "0.8,-0.2").
        #[arg(long)]
        x0: Option<String>,
        /// Coherent-state amplitude as "re,im".
        #[arg(long)]
        alpha0: Option<String>,
        /// Truncation order (defaults to options.max_order).
        #[arg(long)]
        order: Option<usize>,
    },
    /// Run the numerical verification suite and emit a JSON report.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Which checks to run: classical, quantum or all.
        #[arg(long, default_value = "all")]
        suite: String,
    },
}

fn main() {
    match run() {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

fn run() -> Result<i32> {
    configure_thread_pool()?;
    let cli = Cli::parse();
    let command_line: String = std::env::args().collect::<Vec<_>>().join(" ");
    match cli.command {
        Command::Spectrum { common, order } => {
            let config = load_config(&common)?;
            let table = cmd_spectrum(&config, order)?;
            emit_table(table, &common, &command_line)
        }
        Command::Ness { common } => {
            let config = load_config(&common)?;
            let table = cmd_ness(&config)?;
            emit_table(table, &common, &command_line)
        }
        Command::Eigfun { common, mu } => {
            let config = load_config(&common)?;
            let mu = parse_occupations(&mu)?;
            let table = cmd_eigfun(&config, &mu)?;
            emit_table(table, &common, &command_line)
        }
        Command::Covariance { common, t } => {
            let config = load_config(&common)?;
            let table = cmd_covariance(&config, t)?;
            emit_table(table, &common, &command_line)
        }
        Command::Propagate { common, t, x0, alpha0, order } => {
            let config = load_config(&common)?;
            let x0 = x0.map(|text| parse_reals("x0", &text)).transpose()?;
            let alpha0 = alpha0.map(|text| parse_complex("alpha0", &text)).transpose()?;
            let table = cmd_propagate(&config, t, x0.as_deref(), alpha0, order)?;
            emit_table(table, &common, &command_line)
        }
        Command::Verify { common, suite } => {
            let config = load_config(&common)?;
            let suite = VerifySuite::parse(&suite)?;
            let report = run_verify_suite(&config, suite)?;
            write_output(&common.out, &render_verify_report(&report))?;
            Ok(if report.all_pass { 0 } else { 1 })
        }
    }
}

fn configure_thread_pool() -> Result<()> {
    let Ok(text) = std::env::var("OUL_THREADS") else {
        return Ok(());
    };
    let threads: usize = text.trim().parse().map_err(|_| Error::Validation {
        field: "OUL_THREADS".into(),
        reason: format!("expected a positive integer, got {text:?}"),
    })?;
    if threads == 0 {
        return Err(Error::Validation {
            field: "OUL_THREADS".into(),
            reason: "thread count must be at least 1".into(),
        });
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Validation { field: "OUL_THREADS".into(), reason: e.to_string() })
}

fn load_config(common: &Common) -> Result<ModelConfig> {
    let mut config = parse_config(&common.config)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn emit_table(mut table: ResultTable, common: &Common, command_line: &str) -> Result<i32> {
    table.set_metadata("command", command_line);
    write_output(&common.out, &table.to_csv())?;
    Ok(0)
}

fn write_output(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn parse_reals(field: &str, text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|part| {
            part.trim().parse::<f64>().map_err(|_| Error::Validation {
                field: field.into(),
                reason: format!("{part:?} is not a number"),
            })
        })
        .collect()
}

fn parse_complex(field: &str, text: &str) -> Result<Complex64> {
    let parts = parse_reals(field, text)?;
    match parts.as_slice() {
        [re] => Ok(Complex64::new(*re, 0.0)),
        [re, im] => Ok(Complex64::new(*re, *im)),
        _ => Err(Error::Validation {
            field: field.into(),
            reason: "expected \"re\" or \"re,im\"".into(),
        }),
    }
}

fn parse_occupations(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|part| {
            part.trim().parse::<usize>().map_err(|_| Error::Validation {
                field: "mu".into(),
                reason: format!("{part:?} is not a non-negative integer"),
            })
        })
        .collect()
}
