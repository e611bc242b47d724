//! Univariate rules for Gaussian and Gamma weights, and the growth
//! sequences the sparse grids draw from.

use smoothbasket::rules1d::{gauss_hermite, gauss_laguerre_generalized, genz_keister, RuleSequence};

fn main() -> smoothbasket::Result<()> {
    let gh = gauss_hermite(5)?;
    println!("Gauss-Hermite, 5 nodes");
    for (x, w) in gh.nodes.iter().zip(&gh.weights) {
        println!("  {x:>+.12}  {w:.12}");
    }
    // E[Z^8] = 105 needs degree 8 <= 2n - 1
    println!("  E[Z^8] = {:.12} (exact 105)", gh.integrate(|x| x.powi(8)));

    println!("Genz-Keister sizes by level:");
    for level in 0..5 {
        let r = genz_keister(level)?;
        println!("  level {level}: {} nodes, E[e^Z] = {:.15}", r.len(), r.integrate(f64::exp));
    }
    println!("  exact            {:.15}", 0.5f64.exp());

    // Gamma(alpha + 1, 1) weight: the mean is alpha + 1
    let alpha = 1.0;
    let gl = gauss_laguerre_generalized(10, alpha)?;
    println!("Laguerre alpha = {alpha}: mean {:.14}, variance {:.14}", gl.integrate(|u| u), gl.integrate(|u| (u - 2.0).powi(2)));

    for seq in [RuleSequence::GaussHermite, RuleSequence::GenzKeister, RuleSequence::GeneralizedLaguerre { alpha }] {
        let sizes: Vec<usize> = (0..7).map(|l| seq.size(l)).collect();
        println!("{seq:?}: {sizes:?}");
    }
    Ok(())
}
