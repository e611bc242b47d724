//! Convergence sweeps over the estimators, CSV output and gnuplot scripts.

mod config;
mod plot;

pub use config::{default_budgets, default_tolerances, ExperimentConfig, InstanceKind, ModelKind};
pub use plot::{emit_plot, plot_script};

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::error::{Error, Result};
use crate::linalg::{best_binary_v, rank_one_reduce, SymMatrix, MAX_BINARY_SEARCH_DIM};
use crate::models::{
    effective_bs, three_asset_vg, random_instance, random_vg_instance, BlackScholesBasket, EffectiveProblem,
    VarianceGammaBasket,
};
use crate::pricing::{
    build_control_variate, price_asg, price_cv_mc, price_cv_qmc, price_mc, price_qmc, raw_integrand,
    reference_tolerance, smoothed_integrand, smoothed_integrand_v, vg_raw_integrand, vg_smoothed_integrand,
    AsgOptions, EstimateRecord, Integrand, Method, REFERENCE_MAX_EVALS,
};
use crate::sampling::RngSpec;
use crate::sparsegrid::SparseInterpolant;

/// The rows of one sweep with the reference they were measured against.
#[derive(Debug, Clone)]
pub struct Sweep {
    pub reference: f64,
    /// Set when the reference run exhausted its budget and the partial
    /// value was used.
    pub reference_note: Option<String>,
    /// Upper price bound `e^{−rT}·Σ c_i S0_i e^{rT}`, i.e. the discounted
    /// forward basket.
    pub upper_bound: f64,
    pub records: Vec<EstimateRecord>,
}

impl Sweep {
    /// CSV with columns `method,n_points,estimate,rel_error,seconds`. A
    /// `status` column is appended only when some row failed.
    pub fn write_csv(&self, out: &mut dyn Write) -> Result<()> {
        let with_status = self.records.iter().any(|r| r.status.is_some());
        write!(out, "method,n_points,estimate,rel_error,seconds")?;
        writeln!(out, "{}", if with_status { ",status" } else { "" })?;
        for r in &self.records {
            let rel = r.rel_error.map(|e| format!("{e:e}")).unwrap_or_default();
            write!(out, "{},{},{},{},{:.6}", r.method, r.n_points, r.estimate, rel, r.seconds)?;
            if with_status {
                let status = r.status.as_deref().unwrap_or("").replace([',', '\n'], ";");
                write!(out, ",{status}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    /// Writes `<prefix>.csv` and returns its path.
    pub fn save(&self, prefix: &Path) -> Result<PathBuf> {
        let path = with_suffix(prefix, ".csv");
        let mut file = std::io::BufWriter::new(std::fs::File::create(&path)?);
        self.write_csv(&mut file)?;
        file.flush()?;
        Ok(path)
    }
}

pub(crate) fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// One point of a sweep: a sample count or a tolerance.
#[derive(Debug, Clone, Copy)]
enum Point {
    Budget(usize),
    Tol(f64),
}

fn points(cfg: &ExperimentConfig, m: Method) -> Vec<Point> {
    if m.is_adaptive() {
        cfg.tol_schedule.iter().map(|&t| Point::Tol(t)).collect()
    } else {
        cfg.budgets.iter().map(|&n| Point::Budget(n)).collect()
    }
}

fn asg_opts(cfg: &ExperimentConfig) -> AsgOptions {
    AsgOptions {
        max_evals: cfg.max_evals,
        ..AsgOptions::default()
    }
}

fn method_stream(m: Method) -> u64 {
    (m as u64) << 32
}

/// `(n_points, estimate)` or the failure, plus an estimate to keep when
/// the adaptive budget ran out.
type RowResult = std::result::Result<(usize, f64), (usize, f64, Error)>;

fn adaptive_row(f: &dyn Integrand, tol: f64, opts: &AsgOptions, trace: Option<&mut dyn Write>) -> RowResult {
    match price_asg(f, tol, opts, trace) {
        Ok(s) => Ok((s.evaluations, s.value)),
        Err(Error::BudgetExhausted { max_evals, state }) => {
            let (n, v) = (state.evaluations, state.value);
            Err((n, v, Error::BudgetExhausted { max_evals, state }))
        }
        Err(e) => Err((0, f64::NAN, e)),
    }
}

fn sampled_row(n: usize, r: Result<f64>) -> RowResult {
    r.map(|v| (n, v)).map_err(|e| (n, f64::NAN, e))
}

fn make_record(m: Method, row: RowResult, reference: f64, seconds: f64) -> EstimateRecord {
    match row {
        Ok((n, v)) => EstimateRecord::new(m, n, v, Some(reference), seconds),
        Err((n, v, e)) => {
            let mut r = EstimateRecord::failed(m, n, seconds, &e);
            if v.is_finite() {
                r.estimate = v;
                r.rel_error = Some(((v - reference) / reference).abs());
            }
            r
        }
    }
}

/// The CS2 selector from the config, or the best binary one.
fn cs2_selector(cfg: &ExperimentConfig, sigma: &SymMatrix) -> Result<Vec<f64>> {
    match &cfg.cs2_v {
        Some(v) => Ok(v.clone()),
        None if sigma.dim() > MAX_BINARY_SEARCH_DIM => Err(Error::DimensionTooLarge {
            dim: sigma.dim(),
            max: MAX_BINARY_SEARCH_DIM,
        }),
        None => Ok(best_binary_v(sigma)?.0),
    }
}

/// The Black-Scholes instance described by `cfg`.
pub fn bs_model(cfg: &ExperimentConfig) -> Result<BlackScholesBasket> {
    random_instance(cfg.d, cfg.seed, cfg.strike_mode)
}

/// The Variance-Gamma instance described by `cfg`.
pub fn vg_model(cfg: &ExperimentConfig) -> Result<VarianceGammaBasket> {
    match cfg.instance {
        InstanceKind::ThreeAsset => three_asset_vg(cfg.sigma3),
        InstanceKind::Random => {
            let m = random_vg_instance(cfg.d, cfg.seed, cfg.strike_mode, cfg.nu, cfg.theta_range)?;
            match &cfg.theta {
                Some(theta) => VarianceGammaBasket::new(
                    m.s0,
                    m.sigma,
                    theta.clone(),
                    m.nu,
                    m.rho,
                    m.c,
                    m.strike,
                    m.maturity,
                ),
                None => Ok(m),
            }
        }
    }
}

fn reference_tol(cfg: &ExperimentConfig) -> f64 {
    cfg.reference_tol.unwrap_or_else(|| reference_tolerance(cfg.dim()))
}

fn reference_opts(cfg: &ExperimentConfig) -> AsgOptions {
    AsgOptions {
        max_evals: REFERENCE_MAX_EVALS.max(cfg.max_evals),
        ..AsgOptions::default()
    }
}

fn check_sweep(cfg: &ExperimentConfig, model: ModelKind) -> Result<()> {
    cfg.validate()?;
    if cfg.methods.is_empty() {
        return Err(Error::ConfigInvalid("no methods given".into()));
    }
    if cfg.model != model {
        return Err(Error::ConfigInvalid(format!("this sweep needs model = {model}")));
    }
    Ok(())
}

/// Adaptive reference for `f`, or the configured override. A reference run
/// that runs out of budget falls back to its partial value with a note.
fn reference_value(cfg: &ExperimentConfig, f: &dyn Integrand) -> Result<(f64, Option<String>)> {
    if let Some(r) = cfg.reference {
        return Ok((r, None));
    }
    match price_asg(f, reference_tol(cfg), &reference_opts(cfg), None) {
        Ok(s) => Ok((s.value, None)),
        Err(Error::BudgetExhausted { max_evals, state }) => Ok((
            state.value,
            Some(format!("reference stopped at {max_evals} evaluations with eta = {:e}", state.eta)),
        )),
        Err(e) => Err(e),
    }
}

fn reborrow<'b>(t: &'b mut Option<&mut dyn Write>) -> Option<&'b mut dyn Write> {
    t.as_mut().map(|w| &mut **w as &mut dyn Write)
}

/// Shared state for the Black-Scholes rows.
struct BsContext {
    prob: EffectiveProblem,
    raw: crate::pricing::RawIntegrand,
    smooth: crate::pricing::SmoothedIntegrand,
}

impl BsContext {
    fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let prob = effective_bs(&bs_model(cfg)?);
        let dec = rank_one_reduce(&prob.sigma, &vec![1.0; prob.dim()])?;
        Ok(Self {
            raw: raw_integrand(&prob, &dec),
            smooth: smoothed_integrand(&prob, &dec)?,
            prob,
        })
    }
}

/// Builds the interpolant on first use and keeps it for later rows.
fn control_variate<'a>(
    slot: &'a mut Option<Result<SparseInterpolant>>,
    f: &dyn Integrand,
) -> Result<&'a SparseInterpolant> {
    match slot.get_or_insert_with(|| build_control_variate(f)) {
        Ok(g) => Ok(g),
        Err(e) => Err(Error::ConfigInvalid(format!("control variate unavailable: {e}"))),
    }
}

/// Black-Scholes convergence sweep: a reference by the smoothed adaptive
/// sparse grid, then one row per method and budget (or tolerance), in
/// config order. Estimator failures become rows with a status.
pub fn run_convergence(cfg: &ExperimentConfig, mut trace: Option<&mut dyn Write>) -> Result<Sweep> {
    check_sweep(cfg, ModelKind::BlackScholes)?;
    let ctx = BsContext::new(cfg)?;
    let mut cv = None;
    let opts = asg_opts(cfg);
    let (reference, reference_note) = reference_value(cfg, &ctx.smooth)?;
    let mut cs2: Option<Result<crate::pricing::SmoothedIntegrand>> = None;
    let mut records = Vec::new();
    for &m in &cfg.methods {
        let rng = RngSpec::new(cfg.seed, method_stream(m));
        for p in points(cfg, m) {
            let start = Instant::now();
            let row = match (m, p) {
                (Method::Mc, Point::Budget(n)) => sampled_row(n, price_mc(&ctx.raw, n, rng, cfg.mc_runs).map(|e| e.median)),
                (Method::Qmc, Point::Budget(n)) => sampled_row(n, price_qmc(&ctx.raw, n)),
                (Method::McCs, Point::Budget(n)) => {
                    sampled_row(n, price_mc(&ctx.smooth, n, rng, cfg.mc_runs).map(|e| e.median))
                }
                (Method::QmcCs, Point::Budget(n)) => sampled_row(n, price_qmc(&ctx.smooth, n)),
                (Method::McCsCv, Point::Budget(n)) => {
                    let runs = cfg.mc_runs;
                    let r = control_variate(&mut cv, &ctx.smooth)
                        .and_then(|g| price_cv_mc(&ctx.smooth, g, n, rng, runs).map(|e| e.median));
                    sampled_row(n, r)
                }
                (Method::QmcCsCv, Point::Budget(n)) => {
                    let r = control_variate(&mut cv, &ctx.smooth).and_then(|g| price_cv_qmc(&ctx.smooth, g, n));
                    sampled_row(n, r)
                }
                (Method::Asg, Point::Tol(t)) => adaptive_row(&ctx.raw, t, &opts, reborrow(&mut trace)),
                (Method::AsgCs, Point::Tol(t)) => adaptive_row(&ctx.smooth, t, &opts, reborrow(&mut trace)),
                (Method::AsgCs2, Point::Tol(t)) => {
                    let prob = &ctx.prob;
                    let f = cs2.get_or_insert_with(|| {
                        let v = cs2_selector(cfg, &prob.sigma)?;
                        let dec = rank_one_reduce(&prob.sigma, &v)?;
                        smoothed_integrand_v(prob, &v, &dec)
                    });
                    match f {
                        Ok(f) => adaptive_row(f, t, &opts, reborrow(&mut trace)),
                        Err(e) => Err((0, f64::NAN, Error::ConfigInvalid(e.to_string()))),
                    }
                }
                _ => unreachable!("points match the method kind"),
            };
            records.push(make_record(m, row, reference, start.elapsed().as_secs_f64()));
        }
    }
    Ok(Sweep {
        reference,
        reference_note,
        upper_bound: ctx.prob.discount * ctx.prob.w.iter().sum::<f64>(),
        records,
    })
}

/// Variance-Gamma sweep. Monte Carlo methods sample the Gamma clock;
/// quasi-Monte Carlo and control variates are not offered for this model
/// and produce status rows. The reference uses the `cs2_v` selector when
/// one is configured (a stronger smoothing direction can converge much
/// faster than `v = 1`), otherwise `v = 1`.
pub fn run_vg(cfg: &ExperimentConfig, mut trace: Option<&mut dyn Write>) -> Result<Sweep> {
    check_sweep(cfg, ModelKind::VarianceGamma)?;
    let model = vg_model(cfg)?;
    let smooth = vg_smoothed_integrand(&model, None)?;
    let raw = vg_raw_integrand(&model)?;
    let opts = asg_opts(cfg);
    let cs2 = cs2_selector(cfg, &model.base_covariance()).and_then(|v| vg_smoothed_integrand(&model, Some(&v)));
    let (reference, reference_note) = match (&cfg.cs2_v, &cs2) {
        (Some(_), Ok(f)) => reference_value(cfg, f)?,
        _ => reference_value(cfg, &smooth)?,
    };
    let mut records = Vec::new();
    for &m in &cfg.methods {
        let rng = RngSpec::new(cfg.seed, method_stream(m));
        for p in points(cfg, m) {
            let start = Instant::now();
            let row = match (m, p) {
                (Method::Mc, Point::Budget(n)) => sampled_row(n, price_mc(&raw, n, rng, cfg.mc_runs).map(|e| e.median)),
                (Method::McCs, Point::Budget(n)) => {
                    sampled_row(n, price_mc(&smooth, n, rng, cfg.mc_runs).map(|e| e.median))
                }
                (Method::Asg, Point::Tol(t)) => adaptive_row(&raw, t, &opts, reborrow(&mut trace)),
                (Method::AsgCs, Point::Tol(t)) => adaptive_row(&smooth, t, &opts, reborrow(&mut trace)),
                (Method::AsgCs2, Point::Tol(t)) => match &cs2 {
                    Ok(f) => adaptive_row(f, t, &opts, reborrow(&mut trace)),
                    Err(e) => Err((0, f64::NAN, Error::ConfigInvalid(e.to_string()))),
                },
                (_, Point::Budget(n)) => Err((
                    n,
                    f64::NAN,
                    Error::ConfigInvalid(format!("{m} is not available for the Variance-Gamma model")),
                )),
                _ => unreachable!("points match the method kind"),
            };
            records.push(make_record(m, row, reference, start.elapsed().as_secs_f64()));
        }
    }
    let discount = (-model.rate * model.maturity).exp();
    let forward: f64 = (0..model.dim())
        .map(|i| model.c[i] * model.s0[i] * (model.rate * model.maturity).exp())
        .sum();
    Ok(Sweep {
        reference,
        reference_note,
        upper_bound: discount * forward,
        records,
    })
}

/// Dispatches on the model.
pub fn run(cfg: &ExperimentConfig, trace: Option<&mut dyn Write>) -> Result<Sweep> {
    match cfg.model {
        ModelKind::BlackScholes => run_convergence(cfg, trace),
        ModelKind::VarianceGamma => run_vg(cfg, trace),
    }
}

/// The covariance whose decomposition drives the smoothing: `Σ` of the log
/// returns for Black-Scholes, the clock-free `σ_iσ_jρ_ij` for
/// Variance-Gamma.
pub fn smoothing_covariance(cfg: &ExperimentConfig) -> Result<SymMatrix> {
    match cfg.model {
        ModelKind::BlackScholes => Ok(effective_bs(&bs_model(cfg)?).sigma),
        ModelKind::VarianceGamma => Ok(vg_model(cfg)?.base_covariance()),
    }
}

/// `λ_1², …, λ_d²` for `v = 1`, then the best binary selector and its
/// `λ_1²`.
pub fn report_decomposition(cfg: &ExperimentConfig) -> Result<String> {
    let sigma = smoothing_covariance(cfg)?;
    let d = sigma.dim();
    let dec = rank_one_reduce(&sigma, &vec![1.0; d])?;
    let mut out = String::new();
    let _ = writeln!(out, "model = {}, d = {d}", cfg.model);
    let lambdas: Vec<String> = dec.lambda_sq.iter().map(|l| format!("{l:.8}")).collect();
    let _ = writeln!(out, "lambda_sq (v = 1): {}", lambdas.join(" "));
    if d <= MAX_BINARY_SEARCH_DIM {
        let (v, l1) = best_binary_v(&sigma)?;
        let v: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
        let _ = writeln!(out, "best v: [{}] lambda1_sq = {l1:.8}", v.join(", "));
    } else {
        let _ = writeln!(out, "best v: search skipped for d > {MAX_BINARY_SEARCH_DIM}");
    }
    Ok(out)
}
