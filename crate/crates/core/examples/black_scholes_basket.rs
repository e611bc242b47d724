//! A seeded Black-Scholes basket priced three ways: Monte Carlo on the
//! kinked payoff, Monte Carlo on the smoothed integrand, and adaptive
//! sparse grids on the smoothed integrand.

use smoothbasket::linalg::rank_one_reduce;
use smoothbasket::models::{effective_bs, random_instance, StrikeMode};
use smoothbasket::pricing::{price_asg, price_mc, raw_integrand, smoothed_integrand, AsgOptions};
use smoothbasket::sampling::RngSpec;

fn main() -> smoothbasket::Result<()> {
    let d = 5;
    let model = random_instance(d, 3, StrikeMode::Atm)?;
    println!("S0 = {:.3?}", model.s0);
    println!("sigma = {:.3?}, strike = {:.4}", model.sigma, model.strike);

    let prob = effective_bs(&model);
    let dec = rank_one_reduce(&prob.sigma, &vec![1.0; d])?;
    println!("lambda_1^2 = {:.5}", dec.lambda1_sq());
    let raw = raw_integrand(&prob, &dec);
    let smooth = smoothed_integrand(&prob, &dec)?;

    let n = 100_000;
    let rng = RngSpec::new(11, 0);
    let mc = price_mc(&raw, n, rng, 1)?.runs[0];
    let cs = price_mc(&smooth, n, rng, 1)?.runs[0];
    println!("MC     {:.6} ± {:.6}", mc.mean, mc.std_error);
    println!("MC+CS  {:.6} ± {:.6}  (variance ratio {:.1})", cs.mean, cs.std_error, mc.variance / cs.variance);

    for tol in [1e-4, 1e-6, 1e-8] {
        let s = price_asg(&smooth, tol, &AsgOptions::default(), None)?;
        println!("aSG+CS tol {tol:.0e}: {:.10} with {} points", s.value, s.evaluations);
    }
    Ok(())
}
