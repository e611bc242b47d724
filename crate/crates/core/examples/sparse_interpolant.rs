//! Total-degree sparse-grid interpolation on Gauss-Hermite nodes of sizes
//! 1, 3, 5, and the mean that comes with it.

use smoothbasket::rules1d::RuleSequence;
use smoothbasket::sparsegrid::interpolant_total_degree;

static SIZES: [usize; 3] = [1, 3, 5];

fn main() -> smoothbasket::Result<()> {
    let f = |z: &[f64]| (0.4 * z[0] - 0.2 * z[1]).exp() + 0.1 * z[0] * z[1];
    let g = interpolant_total_degree(&f, 2, 2, RuleSequence::HermiteSizes(&SIZES))?;
    println!("{} nodes, {} integrand evaluations", g.nodes().len(), g.evaluations());
    println!("E[g] = {:.12}, E[f] = {:.12}", g.mean(), (0.5f64 * (0.16 + 0.04)).exp());
    for x in [[0.0, 0.0], [0.5, -0.5], [1.5, 1.0], [-2.5, 0.3]] {
        println!("  x = {x:?}: f = {:+.8}  g = {:+.8}", f(&x), g.eval(&x));
    }
    Ok(())
}
