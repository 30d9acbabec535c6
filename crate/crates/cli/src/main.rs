use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use leakscope::{parse_scenario, run, Command, Overrides};

/// Leak localization analysis for parallel pipe networks.
#[derive(Debug, Parser)]
#[command(name = "leakscope", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,

    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,

    /// Output directory for CSV files.
    #[arg(long)]
    out: PathBuf,

    /// Head loss of the nominal state used by residual-sweep and confusion.
    #[arg(long, allow_hyphen_values = true)]
    nominal_dh: Option<f64>,

    /// Largest candidate spread still counted as constant.
    #[arg(long)]
    eps_spread: Option<f64>,

    /// Largest leak-law misfit still accepted.
    #[arg(long)]
    eps_fit: Option<f64>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let overrides = Overrides {
        nominal_dh: args.nominal_dh,
        eps_spread: args.eps_spread,
        eps_fit: args.eps_fit,
    };
    let result =
        parse_scenario(&args.scenario).and_then(|s| run(args.command, &s, &args.out, overrides));
    match result {
        Ok(report) => {
            if report.failed_rows > 0 {
                eprintln!(
                    "{} of {} points failed; see the error column",
                    report.failed_rows, report.rows
                );
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
