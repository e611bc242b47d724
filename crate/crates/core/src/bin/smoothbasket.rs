use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use smoothbasket::experiment::{self, ExperimentConfig};
use smoothbasket::Error;

#[derive(Parser)]
#[command(version, about = "Basket option pricing by smoothing and sparse grids")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,

    /// key = value configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output path prefix; overrides `output` in the config
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Print the adaptive refinement trace to stderr
    #[arg(long, global = true)]
    trace: bool,

    /// Instance seed; overrides `seed` in the config
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Verb {
    /// Price with every configured method at its largest budget
    Price,
    /// Black-Scholes convergence sweep to `<out>.csv`
    Converge,
    /// Variance-Gamma convergence sweep to `<out>.csv`
    Vg,
    /// Report the smoothing decomposition
    Decomp,
    /// Write a gnuplot script for a sweep CSV
    Plot {
        /// CSV to plot; defaults to `<out>.csv`
        csv: Option<PathBuf>,
    },
}

fn load(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output = out.clone();
    }
    Ok(cfg)
}

fn warn(sweep: &experiment::Sweep) {
    if let Some(note) = &sweep.reference_note {
        eprintln!("warning: {note}");
    }
}

fn run(cli: &Cli) -> Result<(), Error> {
    let mut cfg = load(cli)?;
    let mut stderr = std::io::stderr();
    let trace: Option<&mut dyn Write> = if cli.trace { Some(&mut stderr) } else { None };
    let mut stdout = std::io::stdout().lock();
    match &cli.verb {
        Verb::Price => {
            cfg.budgets.drain(..cfg.budgets.len().saturating_sub(1));
            cfg.tol_schedule.sort_by(f64::total_cmp);
            cfg.tol_schedule.truncate(1);
            let sweep = experiment::run(&cfg, trace)?;
            warn(&sweep);
            writeln!(stdout, "reference {}", sweep.reference)?;
            sweep.write_csv(&mut stdout)?;
        }
        Verb::Converge => {
            let sweep = experiment::run_convergence(&cfg, trace)?;
            warn(&sweep);
            writeln!(stdout, "{}", sweep.save(&cfg.output)?.display())?;
        }
        Verb::Vg => {
            let sweep = experiment::run_vg(&cfg, trace)?;
            warn(&sweep);
            writeln!(stdout, "{}", sweep.save(&cfg.output)?.display())?;
        }
        Verb::Decomp => write!(stdout, "{}", experiment::report_decomposition(&cfg)?)?,
        Verb::Plot { csv } => {
            let csv = csv.clone().unwrap_or_else(|| {
                let mut p = cfg.output.clone().into_os_string();
                p.push(".csv");
                p.into()
            });
            writeln!(stdout, "{}", experiment::emit_plot(csv)?.display())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}
