//! A sparse-grid interpolant of the smoothed integrand used as a control
//! variate for Monte Carlo and quasi-Monte Carlo.

use smoothbasket::linalg::rank_one_reduce;
use smoothbasket::models::{effective_bs, random_instance, StrikeMode};
use smoothbasket::pricing::{
    build_control_variate, price_cv_mc, price_cv_qmc, price_mc, price_qmc, reference_price, smoothed_integrand,
};
use smoothbasket::sampling::RngSpec;

fn main() -> smoothbasket::Result<()> {
    let d = 3;
    let prob = effective_bs(&random_instance(d, 2, StrikeMode::Itm)?);
    let dec = rank_one_reduce(&prob.sigma, &vec![1.0; d])?;
    let f = smoothed_integrand(&prob, &dec)?;
    let reference = reference_price(&prob)?;
    let g = build_control_variate(&f)?;
    println!("reference {reference:.12}, E[g] = {:.12} from {} nodes", g.mean(), g.evaluations());

    let rng = RngSpec::new(5, 0);
    let rel = |v: f64| ((v - reference) / reference).abs();
    for n in [648, 3888, 23328] {
        let mc = price_mc(&f, n, rng, 20)?.median;
        let cv = price_cv_mc(&f, &g, n, rng, 20)?.median;
        let qmc = price_qmc(&f, n)?;
        let qcv = price_cv_qmc(&f, &g, n)?;
        println!(
            "n = {n:>5}: MC+CS {:.1e}  MC+CS+CV {:.1e}  QMC+CS {:.1e}  QMC+CS+CV {:.1e}",
            rel(mc),
            rel(cv),
            rel(qmc),
            rel(qcv)
        );
    }
    Ok(())
}
