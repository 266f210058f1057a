use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use gooddeal_cli::{
    describe, emit_plot_data, run_scenario, write_csv, write_csv_file, Result, ScenarioConfig,
};

/// Good-deal price bounds for regime-switching markets.
#[derive(Debug, Parser)]
#[command(name = "gooddeal", version)]
struct Args {
    /// Scenario file (JSON).
    #[arg(long)]
    config: PathBuf,

    /// CSV destination; overrides the scenario's `output`. `-` writes to stdout.
    #[arg(long)]
    output: Option<PathBuf>,

    /// Print the human-readable summary to stderr.
    #[arg(long)]
    summary: bool,

    /// Validate the scenario and print B0 and h(i) without solving.
    #[arg(long)]
    check: bool,

    /// Also write one xy series file per regime and curve into this directory.
    #[arg(long)]
    plot_dir: Option<PathBuf>,
}

fn run(args: &Args) -> Result<()> {
    let cfg = ScenarioConfig::from_path(&args.config)?;
    if args.check {
        print!("{}", describe(&cfg)?);
        return Ok(());
    }

    let out = run_scenario(&cfg)?;
    match args.output.as_ref().or(cfg.output.as_ref()) {
        Some(p) if p.as_os_str() != "-" => write_csv_file(&out.rows, p)?,
        _ => write_csv(&out.rows, std::io::stdout().lock()).map_err(|source| {
            gooddeal_cli::CliError::Write {
                path: "<stdout>".into(),
                source,
            }
        })?,
    }
    if let Some(dir) = &args.plot_dir {
        emit_plot_data(&out.rows, dir)?;
    }
    if args.summary {
        eprint!("{}", out.summary);
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
