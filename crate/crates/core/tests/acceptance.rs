//! End-to-end acceptance checks, one line per criterion.
//!
//! Runs as a plain binary (no libtest harness) so the report is always
//! printed. Exits non-zero when a criterion fails that is not listed in
//! `KNOWN_RED`.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use smoothbasket::experiment::{run_convergence, run_vg, ExperimentConfig};
use smoothbasket::linalg::{best_binary_v, lambda1_sq, rank_one_reduce, SymMatrix};
use smoothbasket::models::{
    effective_bs, three_asset_vg, random_instance, random_vg_instance, StrikeMode, THREE_ASSET_SIGMA3,
};
use smoothbasket::pricing::{
    build_control_variate, price_asg, price_cv_mc, price_mc, price_qmc, price_vg_mc, price_vg_smoothed,
    raw_integrand, reference_price, reference_tolerance, sample_stats, smoothed_integrand, AsgOptions,
    EstimateRecord, FnIntegrand, Integrand, Method, REFERENCE_MAX_EVALS,
};
use smoothbasket::rules1d::{gauss_hermite, gauss_laguerre_generalized, genz_keister, GENZ_KEISTER_TABLE_LEVELS};
use smoothbasket::sampling::{fill_normal, RngSpec};

/// Criteria that fail for a documented reason; see the README.
const KNOWN_RED: &[u32] = &[2, 6, 7];

/// Price of the fixed Variance-Gamma example from an independent tensor
/// quadrature (`tests/oracles/basket_prices.py`).
const THREE_ASSET_ORACLE: f64 = 25.268222807185754;

/// Same oracle for `random_instance(3, 1, Atm)`.
const BS3_ORACLE: f64 = 2.3828979886389425;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Least-squares slope of `ln e` against `ln n`.
fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn rows(records: &[EstimateRecord], m: Method) -> Vec<(f64, f64)> {
    records
        .iter()
        .filter(|r| r.method == m && r.status.is_none())
        .filter_map(|r| r.rel_error.map(|e| (r.n_points as f64, e)))
        .filter(|p| p.1 > 0.0)
        .collect()
}

fn c1_decomposition() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut worst_rec, mut worst_l1) = (0.0f64, 0.0f64);
    for k in 0..100 {
        let d = 2 + k % 34;
        let a: Vec<Vec<f64>> = (0..d).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let sigma = SymMatrix::from_lower_fn(d, |i, j| {
            (0..d).map(|m| a[i][m] * a[j][m]).sum::<f64>() + if i == j { 0.1 } else { 0.0 }
        });
        let dec = rank_one_reduce(&sigma, &vec![1.0; d]).unwrap();
        let scale = sigma.as_matrix().max_abs();
        worst_rec = worst_rec.max(dec.reconstruct().max_abs_diff(sigma.as_matrix()) / scale);
        // oracle: solve Σx = 1 by Gaussian elimination with partial pivoting
        let mut m: Vec<Vec<f64>> = (0..d)
            .map(|i| {
                let mut row: Vec<f64> = (0..d).map(|j| sigma.as_matrix()[(i, j)]).collect();
                row.push(1.0);
                row
            })
            .collect();
        for c in 0..d {
            let p = (c..d).max_by(|&x, &y| m[x][c].abs().total_cmp(&m[y][c].abs())).unwrap();
            m.swap(c, p);
            for r in c + 1..d {
                let f = m[r][c] / m[c][c];
                for j in c..=d {
                    m[r][j] -= f * m[c][j];
                }
            }
        }
        let mut x = vec![0.0; d];
        for r in (0..d).rev() {
            x[r] = (m[r][d] - (r + 1..d).map(|j| m[r][j] * x[j]).sum::<f64>()) / m[r][r];
        }
        let oracle = 1.0 / x.iter().sum::<f64>();
        worst_l1 = worst_l1.max((dec.lambda1_sq() - oracle).abs() / oracle);
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst_rec <= 1e-10 && worst_l1 <= 1e-10 && secs < 5.0,
        format!("max reconstruction {worst_rec:.1e}, max lambda1^2 rel {worst_l1:.1e}, {secs:.2}s"),
    )
}

fn c2_fixed_example() -> Outcome {
    let start = Instant::now();
    let base = three_asset_vg(THREE_ASSET_SIGMA3).unwrap().base_covariance();
    let lam = rank_one_reduce(&base, &[1.0; 3]).unwrap().lambda_sq;
    let ok_lam = lam.iter().zip([0.00023, 0.03432, 0.00652]).all(|(a, b)| (a - b).abs() <= 5e-6);
    let modified = three_asset_vg(0.1365).unwrap().base_covariance();
    let lam_m = rank_one_reduce(&modified, &[1.0; 3]).unwrap().lambda_sq;
    let ok_mod = lam_m.iter().zip([0.01034, 0.02255, 0.00526]).all(|(a, b)| (a - b).abs() <= 5e-6);
    let l110 = lambda1_sq(&base, &[1.0, 1.0, 0.0]).unwrap();
    let (best, best_l1) = best_binary_v(&base).unwrap();
    let ok_best = best == [1.0, 1.0, 0.0] && (best_l1 - 0.00109).abs() <= 5e-6;
    let secs = start.elapsed().as_secs_f64();
    outcome(
        ok_lam && ok_mod && ok_best && secs < 1.0,
        format!(
            "lambda^2 {lam:.5?} ok={ok_lam}; modified {lam_m:.5?} ok={ok_mod}; lambda1^2([1,1,0]) = {l110:.5}; \
             maximiser {best:?} with {best_l1:.5} ok={ok_best}"
        ),
    )
}

fn c3_unbiasedness() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut cases = 0;
    let opts = AsgOptions {
        max_evals: 200_000_000,
        ..AsgOptions::default()
    };
    for d in [2, 3, 5, 8] {
        for mode in StrikeMode::ALL {
            let prob = effective_bs(&random_instance(d, 1, mode).unwrap());
            let dec = rank_one_reduce(&prob.sigma, &vec![1.0; d]).unwrap();
            let smooth = smoothed_integrand(&prob, &dec).unwrap();
            let asg = price_asg(&smooth, 1e-10, &opts, None).unwrap().value;
            let raw = raw_integrand(&prob, &dec);
            let mc = sample_stats(&raw, 10_000_000, RngSpec::new(3000 + d as u64, mode as u64)).unwrap();
            worst = worst.max((asg - mc.mean).abs() / mc.std_error);
            cases += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 3.0 && secs < 300.0,
        format!("{cases} cases, max |aSG+CS - MC| = {worst:.2} SE, {secs:.0}s"),
    )
}

fn c4_quadrature() -> Outcome {
    let mut worst_gh = 0.0f64;
    let mut worst_gl = 0.0f64;
    let mut worst_sum = 0.0f64;
    for n in 1..=40 {
        let gh = gauss_hermite(n).unwrap();
        // E[Z^{2k}] = (2k-1)!!; odd moments vanish and are measured against
        // the geometric mean of the neighbouring even moments
        let mut exact = 1.0;
        for k in 0..n {
            let got = gh.integrate(|x| x.powi(2 * k as i32));
            worst_gh = worst_gh.max((got - exact).abs() / exact);
            let odd = gh.integrate(|x| x.powi(2 * k as i32 + 1));
            worst_gh = worst_gh.max(odd.abs() / (exact * ((2 * k + 1) as f64).sqrt()));
            exact *= (2 * k + 1) as f64;
        }
        for alpha in [-0.5, 0.0, 1.0, 2.5] {
            let gl = gauss_laguerre_generalized(n, alpha).unwrap();
            // moments of Gamma(alpha + 1, 1): prod_{j<m} (alpha + 1 + j)
            let mut exact = 1.0;
            for m in 0..2 * n {
                let got = gl.integrate(|u| u.powi(m as i32));
                worst_gl = worst_gl.max((got - exact).abs() / exact);
                exact *= alpha + 1.0 + m as f64;
            }
            worst_sum = worst_sum.max((gl.weights.iter().sum::<f64>() - 1.0).abs());
        }
        worst_sum = worst_sum.max((gh.weights.iter().sum::<f64>() - 1.0).abs());
    }
    let mut nested = true;
    for level in 1..GENZ_KEISTER_TABLE_LEVELS {
        let (coarse, fine) = (genz_keister(level - 1).unwrap(), genz_keister(level).unwrap());
        nested &= coarse.nodes.iter().all(|x| fine.nodes.iter().any(|y| y == x));
        worst_sum = worst_sum.max((fine.weights.iter().sum::<f64>() - 1.0).abs());
    }
    outcome(
        worst_gh <= 1e-12 && worst_gl <= 1e-12 && nested && worst_sum <= 1e-13,
        format!(
            "Hermite moments {worst_gh:.1e}, Laguerre moments {worst_gl:.1e}, Genz-Keister nested {nested}, \
             weight sums {worst_sum:.1e}"
        ),
    )
}

fn c5_frugality() -> Outcome {
    let prob = effective_bs(&random_instance(3, 1, StrikeMode::Atm).unwrap());
    let reference = BS3_ORACLE;
    let dec = rank_one_reduce(&prob.sigma, &[1.0; 3]).unwrap();
    let f = smoothed_integrand(&prob, &dec).unwrap();
    let opts = AsgOptions {
        track_distinct: true,
        ..AsgOptions::default()
    };
    let s = price_asg(&f, 1e-9, &opts, None).unwrap();
    let rel = ((s.value - reference) / reference).abs();
    let distinct = s.distinct_points.unwrap();
    outcome(
        rel <= 1e-8 && s.evaluations <= 500 && distinct <= 150,
        format!("rel error {rel:.1e} with {} total / {distinct} distinct evaluations", s.evaluations),
    )
}

fn sweep(text: &str) -> Vec<EstimateRecord> {
    let cfg: ExperimentConfig = text.parse().unwrap();
    run_convergence(&cfg, None).unwrap().records
}

fn c6_rates() -> Outcome {
    let start = Instant::now();
    let mc = rows(&sweep("d = 8\nseed = 1\nstrike_mode = itm\nmethods = MC\n"), Method::Mc);
    let mc_slope = loglog_slope(&mc);
    let qmc = rows(&sweep("d = 25\nseed = 1\nstrike_mode = otm\nmethods = QMC\n"), Method::Qmc);
    let qmc_slope = loglog_slope(&qmc);
    let mut ok = (-0.65..=-0.35).contains(&mc_slope) && qmc_slope <= -0.75;
    let mut detail = format!("MC slope {mc_slope:.2}, QMC slope {qmc_slope:.2}");
    let max_budget = 3 * 6usize.pow(8);
    for d in [8, 25] {
        let prob = effective_bs(&random_instance(d, 1, StrikeMode::Atm).unwrap());
        let dec = rank_one_reduce(&prob.sigma, &vec![1.0; d]).unwrap();
        let f = smoothed_integrand(&prob, &dec).unwrap();
        let opts = AsgOptions {
            max_evals: max_budget,
            ..AsgOptions::default()
        };
        // finest tolerance of the schedule that fits the largest budget
        let mut best = None;
        for e in 2..=9 {
            let tol = 10f64.powi(-e);
            match price_asg(&f, tol, &opts, None) {
                Ok(s) => best = Some((tol, s.evaluations, s.value)),
                Err(_) => break,
            }
        }
        let Some((tol, n, v)) = best else {
            ok = false;
            detail += &format!("; d={d}: no aSG+CS run within budget");
            continue;
        };
        // the reference must be much finer than the run it judges
        let ref_opts = AsgOptions {
            max_evals: REFERENCE_MAX_EVALS,
            ..AsgOptions::default()
        };
        let ref_tol = reference_tolerance(d).min(tol * 1e-2);
        let reference = price_asg(&f, ref_tol, &ref_opts, None).unwrap().value;
        let asg_err = ((v - reference) / reference).abs();
        let qmc_err = ((price_qmc(&f, n).unwrap() - reference) / reference).abs();
        ok &= asg_err <= qmc_err / 10.0;
        detail += &format!(
            "; d={d}: aSG+CS {asg_err:.1e} vs QMC+CS {qmc_err:.1e} at {n} points (factor {:.0})",
            qmc_err / asg_err
        );
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 900.0;
    outcome(ok, format!("{detail}, {secs:.0}s"))
}

fn c7_variance_reduction() -> Outcome {
    let mut worst_ratio = 0.0f64;
    let n = 20_000;
    let reps = 1000;
    for d in [2, 3, 5, 8] {
        for mode in StrikeMode::ALL {
            let prob = effective_bs(&random_instance(d, 1, mode).unwrap());
            let dec = rank_one_reduce(&prob.sigma, &vec![1.0; d]).unwrap();
            let raw = raw_integrand(&prob, &dec);
            let smooth = smoothed_integrand(&prob, &dec).unwrap();
            let mut rng = RngSpec::new(77, d as u64 * 10 + mode as u64).rng();
            let mut z = vec![0.0; d];
            let mut pairs = Vec::with_capacity(n);
            for _ in 0..n {
                fill_normal(&mut rng, &mut z);
                pairs.push((raw.eval(&z), smooth.eval(&z[1..])));
            }
            let var = |v: &mut dyn Iterator<Item = f64>| {
                let xs: Vec<f64> = v.collect();
                let m = xs.iter().sum::<f64>() / xs.len() as f64;
                xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
            };
            let mut boot = ChaCha8Rng::seed_from_u64(d as u64 * 7 + mode as u64);
            let mut ratios: Vec<f64> = (0..reps)
                .map(|_| {
                    let idx: Vec<usize> = (0..n).map(|_| boot.random_range(0..n)).collect();
                    let vs = var(&mut idx.iter().map(|&i| pairs[i].1));
                    let vr = var(&mut idx.iter().map(|&i| pairs[i].0));
                    vs / vr
                })
                .collect();
            ratios.sort_by(f64::total_cmp);
            worst_ratio = worst_ratio.max(ratios[(0.99 * reps as f64) as usize]);
        }
    }
    let mut worse = Vec::new();
    for d in [3, 5, 8] {
        let recs = sweep(&format!("d = {d}\nseed = 1\nmethods = QMC\nmethods = QMC+CS\n"));
        let (q, qcs) = (rows(&recs, Method::Qmc), rows(&recs, Method::QmcCs));
        for (a, b) in q.iter().zip(&qcs) {
            if a.0 >= 648.0 && b.1 > a.1 {
                worse.push(format!("d={d} n={} ({:.1e} > {:.1e})", a.0, b.1, a.1));
            }
        }
    }
    outcome(
        worst_ratio < 1.0 && worse.is_empty(),
        format!(
            "99% bootstrap bound on var(CS)/var(raw) <= {worst_ratio:.3} over 12 instances; QMC+CS worse than QMC at {worse:?} on d = 3, 5, 8"
        ),
    )
}

fn c8_control_variate() -> Outcome {
    let n = 3 * 6usize.pow(5);
    let mut ok = true;
    let mut detail = String::new();
    for d in [3, 8] {
        let prob = effective_bs(&random_instance(d, 1, StrikeMode::Atm).unwrap());
        let reference = reference_price(&prob).unwrap();
        let dec = rank_one_reduce(&prob.sigma, &vec![1.0; d]).unwrap();
        let f = smoothed_integrand(&prob, &dec).unwrap();
        let g = build_control_variate(&f).unwrap();
        let rng = RngSpec::new(8, d as u64);
        let plain = ((price_mc(&f, n, rng, 20).unwrap().median - reference) / reference).abs();
        let cv = ((price_cv_mc(&f, &g, n, rng, 20).unwrap().median - reference) / reference).abs();
        ok &= cv <= plain / 10.0;
        detail += &format!("d={d}: MC+CS {plain:.1e}, MC+CS+CV {cv:.1e} (factor {:.0}); ", plain / cv);
    }
    let poly = FnIntegrand::new(3, |z: &[f64]| 1.0 + z[0] - 2.0 * z[1] * z[2] + 0.5 * z[2] * z[2]);
    let g = build_control_variate(&poly).unwrap();
    let est = price_cv_mc(&poly, &g, 1000, RngSpec::new(1, 0), 20).unwrap();
    let spread = est.runs.iter().map(|r| (r.mean - 1.5).abs()).fold(0.0, f64::max);
    ok &= spread < 1e-12;
    outcome(ok, format!("{detail}polynomial residual {spread:.1e}"))
}

fn c9_variance_gamma() -> Outcome {
    let mut ok = true;
    // martingale identity, 40-point Laguerre
    let m = three_asset_vg(THREE_ASSET_SIGMA3).unwrap();
    let (shape, scale) = m.gamma_shape_scale();
    let rule = gauss_laguerre_generalized(40, shape - 1.0).unwrap();
    let omegas = m.omegas().unwrap();
    let mart = (0..3)
        .map(|i| {
            let a = m.theta[i] + 0.5 * m.sigma[i] * m.sigma[i];
            (rule.integrate(|u| (a * scale * u).exp()) - (-omegas[i] * m.maturity).exp()).abs()
        })
        .fold(0.0, f64::max);
    ok &= mart <= 1e-8;

    // d = 8 rates
    let vg8 = random_vg_instance(8, 1, StrikeMode::Atm, 0.5, (-0.2, -0.05)).unwrap();
    let opts = AsgOptions {
        max_evals: 500_000_000,
        ..AsgOptions::default()
    };
    let reference = price_vg_smoothed(&vg8, 1e-11, None, &opts).unwrap().value;
    let mut asg = Vec::new();
    for e in 2..=9 {
        let s = price_vg_smoothed(&vg8, 10f64.powi(-e), None, &opts).unwrap();
        asg.push((s.evaluations as f64, ((s.value - reference) / reference).abs().max(1e-16)));
    }
    let asg_slope = loglog_slope(&asg);
    let mc: Vec<(f64, f64)> = (1..=7)
        .map(|q| {
            let n = 3 * 6usize.pow(q);
            let est = price_vg_mc(&vg8, n, RngSpec::new(9, q as u64 * 100), 20, true).unwrap();
            (n as f64, ((est.median - reference) / reference).abs())
        })
        .collect();
    let mc_slope = loglog_slope(&mc);
    ok &= asg_slope <= -1.5;

    // fixed example against Monte Carlo and the tensor-quadrature oracle
    let ls_opts = AsgOptions::default();
    let cs = price_vg_smoothed(&m, 1e-9, None, &ls_opts).unwrap().value;
    let cs2 = price_vg_smoothed(&m, 1e-9, Some(&[1.0, 1.0, 0.0]), &ls_opts).unwrap().value;
    let mc = price_vg_mc(&m, 1_000_000, RngSpec::new(10, 0), 1, true).unwrap().runs[0];
    let se = (cs - mc.mean).abs() / mc.std_error;
    ok &= se <= 3.0;
    let (e_cs, e_cs2) = ((cs / THREE_ASSET_ORACLE - 1.0).abs(), (cs2 / THREE_ASSET_ORACLE - 1.0).abs());
    ok &= e_cs2 <= e_cs;

    // the sweep driver agrees and keeps both rows
    let cfg: ExperimentConfig = format!(
        "model = vg\ninstance = three_asset\nmethods = aSG+CS\nmethods = aSG+CS2\ncs2_v = 1\ncs2_v = 1\ncs2_v = 0\n\
         tol_schedule = 1e-9\nreference = {THREE_ASSET_ORACLE:e}\n"
    )
    .parse()
    .unwrap();
    let recs = run_vg(&cfg, None).unwrap().records;
    ok &= recs.len() == 2 && recs[1].rel_error <= recs[0].rel_error;
    outcome(
        ok,
        format!(
            "martingale {mart:.1e}; d=8 aSG+CS slope {asg_slope:.2}, MC slope {mc_slope:.2}; \
             fixed example aSG+CS vs MC {se:.2} SE; final errors CS {e_cs:.1e}, CS2 {e_cs2:.1e}"
        ),
    )
}

fn strip_seconds(csv: &str) -> String {
    csv.lines()
        .map(|l| {
            let mut cols: Vec<&str> = l.split(',').collect();
            if cols.len() > 4 {
                cols.remove(4);
            }
            cols.join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn c10_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "model = bs\nd = 4\nseed = 5\nstrike_mode = otm\nmethods = MC\nmethods = QMC+CS\nmethods = MC+CS+CV\n\
         methods = aSG+CS\nmethods = aSG+CS2\nbudgets = 18\nbudgets = 648\nbudgets = 23328\n\
         tol_schedule = 1e-3\ntol_schedule = 1e-6\n",
    )
    .unwrap();
    let run = |threads: &str, name: &str, verb: &str, cfg: &Path| {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_smoothbasket"))
            .args([verb, "--config"])
            .arg(cfg)
            .arg("--out")
            .arg(&out)
            .env("RAYON_NUM_THREADS", threads)
            .output()
            .unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        strip_seconds(&std::fs::read_to_string(out.with_extension("csv")).unwrap())
    };
    let a = run("1", "a", "converge", &cfg);
    let b = run("1", "b", "converge", &cfg);
    let c = run("8", "c", "converge", &cfg);
    let vg_cfg = dir.path().join("vg.cfg");
    std::fs::write(
        &vg_cfg,
        "model = vg\nd = 3\nseed = 2\nmethods = MC+CS\nmethods = aSG+CS\nbudgets = 108\nbudgets = 3888\n\
         tol_schedule = 1e-4\n",
    )
    .unwrap();
    let va = run("1", "va", "vg", &vg_cfg);
    let vb = run("8", "vb", "vg", &vg_cfg);
    let ok = a == b && a == c && va == vb && a.lines().count() == 1 + 3 * 3 + 2 * 2;
    outcome(ok, format!("repeat identical {}, 1 vs 8 threads identical {}, vg identical {}", a == b, a == c, va == vb))
}

fn main() {
    // `cargo test -- <filter>` passes arguments; run everything regardless
    let criteria: [(u32, &str, fn() -> Outcome); 10] = [
        (1, "decomposition identity", c1_decomposition),
        (2, "fixed-example constants", c2_fixed_example),
        (3, "unbiasedness of smoothing", c3_unbiasedness),
        (4, "quadrature exactness", c4_quadrature),
        (5, "adaptive-grid frugality", c5_frugality),
        (6, "rate separation", c6_rates),
        (7, "variance reduction", c7_variance_reduction),
        (8, "control variate", c8_control_variate),
        (9, "variance-gamma pricing", c9_variance_gamma),
        (10, "determinism", c10_determinism),
    ];
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut unexpected = Vec::new();
    for (id, name, check) in criteria {
        let r = check();
        let tag = match (r.pass, KNOWN_RED.contains(&id)) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => {
                unexpected.push(id);
                "FAIL"
            }
        };
        println!("{tag} criterion {id} ({name}): {}", r.detail);
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
