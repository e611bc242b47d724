//! Dimension-adaptive sparse-grid quadrature of a Gaussian expectation,
//! with its refinement trace.

use smoothbasket::rules1d::RuleSequence;
use smoothbasket::sparsegrid::AdaptiveQuadrature;

fn main() -> smoothbasket::Result<()> {
    // E[exp(a·Z)] = exp(|a|²/2); the anisotropy makes the grid refine
    // mostly along the first axis.
    let a = [0.8, 0.3, 0.1, 0.05];
    let f = |z: &[f64]| a.iter().zip(z).map(|(a, z)| a * z).sum::<f64>().exp();
    let exact = (0.5 * a.iter().map(|x| x * x).sum::<f64>()).exp();

    let mut trace = Vec::new();
    let state = AdaptiveQuadrature::new(1e-8)
        .track_distinct(true)
        .trace(&mut trace)
        .run(&f, &[RuleSequence::GenzKeister; 4])?;
    let trace = String::from_utf8_lossy(&trace);
    let lines: Vec<&str> = trace.lines().collect();
    println!("{} expansions, first and last:", lines.len());
    for l in lines.iter().take(3).chain(lines.iter().rev().take(2).rev()) {
        println!("  {l}");
    }
    println!("value      {:.15}", state.value);
    println!("exact      {exact:.15}");
    println!("evaluations {} ({} distinct points)", state.evaluations, state.distinct_points.unwrap_or(0));
    println!("old set {} indices, active set {}", state.old.len(), state.active.len());
    let depth: Vec<u32> = (0..4).map(|j| state.old.keys().map(|k| k[j]).max().unwrap_or(0)).collect();
    println!("deepest level per axis: {depth:?}");
    Ok(())
}
