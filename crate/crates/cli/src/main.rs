//! Command-line front end. See the library docs for the exit-code and
//! determinism contract.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use genbound_cli::config::Overrides;
use genbound_cli::{boundsrun, example1, simulate};

#[derive(Debug, Parser)]
#[command(
    name = "genbound",
    version,
    about = "Generalization and expected-supremum bounds from chained information"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Reproduce the analytic circle experiment against its golden values.
    Example1 {
        /// Comma-separated ε list; accepts decimals and `a/b` fractions.
        #[arg(long)]
        epsilons: Option<String>,
        /// Monte-Carlo sample count per ε.
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        /// Base seed; row i uses seed + i.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Tolerance for the golden chained-bound comparisons.
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        /// Deepest explicit level of the information series.
        #[arg(long, default_value_t = 40)]
        kmax: i32,
        /// Output directory for the table and summary files.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Table file format.
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Evaluate a configured list of bound operations.
    Bounds {
        /// JSON configuration file.
        #[arg(long)]
        config: PathBuf,
        /// Override every series tail tolerance.
        #[arg(long)]
        tol: Option<f64>,
        /// Override every generated series' deepest level.
        #[arg(long)]
        kmax: Option<i32>,
        /// Override the seed of in-run Monte-Carlo checks.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the sample count of in-run Monte-Carlo checks.
        #[arg(long)]
        samples: Option<u64>,
        /// Output directory for per-operation reports and the summary.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Also write the summary table as CSV.
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Stream a seeded Monte-Carlo statistic and run configured checks.
    Simulate {
        /// JSON configuration file.
        #[arg(long)]
        config: PathBuf,
        /// Override the configured sample count.
        #[arg(long)]
        samples: Option<u64>,
        /// Override the configured seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Extra absolute slack added to every check.
        #[arg(long, default_value_t = 0.0)]
        tol: f64,
        /// Output directory for the sample stream and summary.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Sample stream format.
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Example1 {
            epsilons,
            samples,
            seed,
            tol,
            kmax,
            out,
            format,
        } => {
            let epsilons = match epsilons {
                Some(text) => example1::parse_epsilons(&text),
                None => Ok(example1::default_epsilons()),
            };
            epsilons.and_then(|epsilons| {
                example1::run(&example1::Example1Args {
                    epsilons,
                    samples,
                    seed,
                    tol,
                    k_max: kmax,
                    out_dir: &out,
                    csv: format == Format::Csv,
                })
            })
        }
        Command::Bounds {
            config,
            tol,
            kmax,
            seed,
            samples,
            out,
            format,
        } => boundsrun::run(
            &config,
            &out,
            &Overrides {
                k_max: kmax,
                tolerance: tol,
                seed,
                samples,
            },
            format == Format::Csv,
        ),
        Command::Simulate {
            config,
            samples,
            seed,
            tol,
            out,
            format,
        } => simulate::run(
            &config,
            &out,
            &Overrides {
                k_max: None,
                tolerance: None,
                seed,
                samples,
            },
            tol,
            format == Format::Csv,
        ),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
