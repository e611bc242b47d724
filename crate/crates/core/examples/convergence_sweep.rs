//! A small convergence study driven by the key = value configuration
//! format: CSV rows per method and budget, then a gnuplot script.

use smoothbasket::experiment::{emit_plot, run_convergence, ExperimentConfig};

const CONFIG: &str = "
model = bs
d = 4
seed = 9
strike_mode = otm
methods = MC
methods = QMC+CS
methods = aSG+CS
budgets = 18
budgets = 108
budgets = 648
budgets = 3888
tol_schedule = 1e-3
tol_schedule = 1e-5
tol_schedule = 1e-7
";

fn main() -> smoothbasket::Result<()> {
    let mut cfg: ExperimentConfig = CONFIG.parse()?;
    let dir = std::env::temp_dir().join("smoothbasket-sweep");
    std::fs::create_dir_all(&dir)?;
    cfg.output = dir.join("otm");

    let sweep = run_convergence(&cfg, None)?;
    println!("reference {:.12}", sweep.reference);
    sweep.write_csv(&mut std::io::stdout())?;
    let csv = sweep.save(&cfg.output)?;
    println!("wrote {} and {}", csv.display(), emit_plot(&csv)?.display());
    Ok(())
}
