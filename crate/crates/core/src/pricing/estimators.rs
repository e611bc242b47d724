use std::io::Write;

use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use rayon::prelude::*;

use super::integrand::{smoothed_integrand, vg_raw_integrand, vg_smoothed_integrand, Integrand, Measure};
use crate::error::{Error, Result};
use crate::linalg::rank_one_reduce;
use crate::models::{EffectiveProblem, VarianceGammaBasket};
use crate::rules1d::RuleSequence;
use crate::sampling::{fill_normal, gamma_dist, inv_norm_cdf, RngSpec, SobolStream};
use crate::sparsegrid::{interpolant_total_degree, AdaptiveQuadrature, AdaptiveState, SparseInterpolant};

/// Mean, variance and standard error of one Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleStats {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
}

/// Median over independent runs plus the per-run statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    pub median: f64,
    pub runs: Vec<SampleStats>,
}

impl McEstimate {
    fn from_runs(runs: Vec<SampleStats>) -> Self {
        let mut means: Vec<f64> = runs.iter().map(|r| r.mean).collect();
        means.sort_by(f64::total_cmp);
        let m = means.len();
        let median = if m % 2 == 1 {
            means[m / 2]
        } else {
            0.5 * (means[m / 2 - 1] + means[m / 2])
        };
        Self { median, runs }
    }

    fn shifted(mut self, offset: f64) -> Self {
        self.median += offset;
        for r in &mut self.runs {
            r.mean += offset;
        }
        self
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::OutOfDomain {
            what: "sample count",
            value: 0.0,
        });
    }
    Ok(())
}

enum PointSampler {
    Normal,
    Gamma(rand_distr::Gamma<f64>),
}

impl PointSampler {
    fn new(measure: Measure) -> Result<Self> {
        Ok(match measure {
            Measure::StandardNormal => PointSampler::Normal,
            Measure::GammaThenNormal { shape, scale } => PointSampler::Gamma(gamma_dist(shape, scale)?),
        })
    }

    fn fill(&self, rng: &mut ChaCha8Rng, x: &mut [f64]) {
        match self {
            PointSampler::Normal => fill_normal(rng, x),
            PointSampler::Gamma(g) => {
                if let Some((first, rest)) = x.split_first_mut() {
                    *first = g.sample(rng);
                    fill_normal(rng, rest);
                }
            }
        }
    }
}

/// One run of `n` i.i.d. draws from the integrand's measure on stream `rng`.
pub fn sample_stats(f: &dyn Integrand, n: usize, rng: RngSpec) -> Result<SampleStats> {
    check_n(n)?;
    let sampler = PointSampler::new(f.measure())?;
    let mut r = rng.rng();
    let mut x = vec![0.0; f.dim()];
    // Welford
    let (mut mean, mut m2) = (0.0, 0.0);
    for k in 0..n {
        sampler.fill(&mut r, &mut x);
        let v = f.eval(&x);
        if !v.is_finite() {
            return Err(Error::NonFiniteIntegrand { node: x, value: v });
        }
        let delta = v - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (v - mean);
    }
    let variance = if n > 1 { m2 / (n - 1) as f64 } else { 0.0 };
    Ok(SampleStats {
        n,
        mean,
        variance,
        std_error: (variance / n as f64).sqrt(),
    })
}

/// Median of `runs` independent Monte Carlo averages; run `r` uses stream
/// `rng.stream_id + r`. Runs execute in parallel with results identical to
/// sequential execution.
pub fn price_mc(f: &dyn Integrand, n: usize, rng: RngSpec, runs: usize) -> Result<McEstimate> {
    check_n(runs)?;
    let stats = (0..runs as u64)
        .into_par_iter()
        .map(|r| sample_stats(f, n, rng.with_stream(rng.stream_id + r)))
        .collect::<Result<Vec<_>>>()?;
    Ok(McEstimate::from_runs(stats))
}

/// Average over the first `n` unscrambled Sobol points (index 0 skipped),
/// mapped coordinatewise by the inverse normal CDF.
pub fn price_qmc(f: &dyn Integrand, n: usize) -> Result<f64> {
    check_n(n)?;
    if f.measure() != Measure::StandardNormal {
        return Err(Error::ConfigInvalid(
            "quasi-Monte Carlo is only available for Gaussian integrands".into(),
        ));
    }
    let d = f.dim();
    let mut sobol = SobolStream::new(d)?;
    let mut u = vec![0.0; d];
    let mut z = vec![0.0; d];
    let mut sum = 0.0;
    for _ in 0..n {
        sobol.next_into(&mut u);
        for (zj, &uj) in z.iter_mut().zip(&u) {
            *zj = inv_norm_cdf(uj)?;
        }
        let v = f.eval(&z);
        if !v.is_finite() {
            return Err(Error::NonFiniteIntegrand { node: z, value: v });
        }
        sum += v;
    }
    Ok(sum / n as f64)
}

/// Options for [`price_asg`].
#[derive(Debug, Clone, Copy)]
pub struct AsgOptions {
    /// Sequence used in every Gaussian coordinate.
    pub sequence: RuleSequence,
    pub max_evals: usize,
    pub track_distinct: bool,
    pub audit: bool,
}

impl Default for AsgOptions {
    fn default() -> Self {
        Self {
            sequence: RuleSequence::GenzKeister,
            max_evals: crate::sparsegrid::DEFAULT_MAX_EVALS,
            track_distinct: false,
            audit: false,
        }
    }
}

/// Adaptive sparse-grid quadrature of `f` against its measure. A Gamma
/// coordinate is handled by generalized Gauss-Laguerre rules after the
/// substitution `y = scale·u`.
pub fn price_asg(
    f: &dyn Integrand,
    tol: f64,
    opts: &AsgOptions,
    trace: Option<&mut dyn Write>,
) -> Result<AdaptiveState> {
    let d = f.dim();
    let mut runner = AdaptiveQuadrature::new(tol)
        .max_evals(opts.max_evals)
        .track_distinct(opts.track_distinct)
        .audit(opts.audit);
    if let Some(sink) = trace {
        runner = runner.trace(sink);
    }
    match f.measure() {
        Measure::StandardNormal => {
            let seqs = vec![opts.sequence; d];
            runner.run(&|x: &[f64]| f.eval(x), &seqs)
        }
        Measure::GammaThenNormal { shape, scale } => {
            let mut seqs = vec![opts.sequence; d];
            seqs[0] = RuleSequence::GeneralizedLaguerre { alpha: shape - 1.0 };
            let g = |x: &[f64]| {
                let mut y = x.to_vec();
                y[0] *= scale;
                f.eval(&y)
            };
            runner.run(&g, &seqs)
        }
    }
}

static CV_SIZES: [usize; 3] = [1, 3, 5];

/// Level-2 total-degree interpolant on Gauss-Hermite nodes of sizes 1, 3, 5.
pub fn build_control_variate(f: &dyn Integrand) -> Result<SparseInterpolant> {
    if f.measure() != Measure::StandardNormal {
        return Err(Error::ConfigInvalid("control variates need a Gaussian integrand".into()));
    }
    interpolant_total_degree(&|x: &[f64]| f.eval(x), f.dim(), 2, RuleSequence::HermiteSizes(&CV_SIZES))
}

struct Residual<'a> {
    f: &'a dyn Integrand,
    g: &'a SparseInterpolant,
}

impl Integrand for Residual<'_> {
    fn dim(&self) -> usize {
        self.f.dim()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.f.eval(x) - self.g.eval(x)
    }
}

/// `mean(f − g) + E[g]` over Monte Carlo runs.
pub fn price_cv_mc(
    f: &dyn Integrand,
    g: &SparseInterpolant,
    n: usize,
    rng: RngSpec,
    runs: usize,
) -> Result<McEstimate> {
    Ok(price_mc(&Residual { f, g }, n, rng, runs)?.shifted(g.mean()))
}

/// `mean(f − g) + E[g]` over Sobol points.
pub fn price_cv_qmc(f: &dyn Integrand, g: &SparseInterpolant, n: usize) -> Result<f64> {
    Ok(price_qmc(&Residual { f, g }, n)? + g.mean())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CvMode {
    Mc,
    Qmc,
}

/// Control-variate estimate with a freshly built interpolant; the MC mode
/// reports the median of 20 runs.
pub fn price_cv(f: &dyn Integrand, n: usize, mode: CvMode, rng: RngSpec) -> Result<f64> {
    let g = build_control_variate(f)?;
    match mode {
        CvMode::Mc => Ok(price_cv_mc(f, &g, n, rng, 20)?.median),
        CvMode::Qmc => price_cv_qmc(f, &g, n),
    }
}

/// Smoothed Variance-Gamma price by adaptive sparse grids on `(y, z̄)`.
pub fn price_vg_smoothed(
    model: &VarianceGammaBasket,
    tol: f64,
    v: Option<&[f64]>,
    opts: &AsgOptions,
) -> Result<AdaptiveState> {
    let f = vg_smoothed_integrand(model, v)?;
    price_asg(&f, tol, opts, None)
}

/// Monte Carlo Variance-Gamma price: `y ~ Gamma(T/ν, ν)` per draw, then
/// either the smoothed integrand or (with `raw`) the full payoff.
pub fn price_vg_mc(
    model: &VarianceGammaBasket,
    n: usize,
    rng: RngSpec,
    runs: usize,
    raw: bool,
) -> Result<McEstimate> {
    if raw {
        price_mc(&vg_raw_integrand(model)?, n, rng, runs)
    } else {
        price_mc(&vg_smoothed_integrand(model, None)?, n, rng, runs)
    }
}

/// Reference tolerance `10^{−e}` with `e = round(11 − 4·ln(d/3)/ln(25/3))`,
/// capped at `1e-12`: `1e-11` for `d = 3`, `1e-9` for `d = 8`, `1e-7` for
/// `d = 25`.
pub fn reference_tolerance(d: usize) -> f64 {
    let d = d.max(1) as f64;
    let e = (11.0 - 4.0 * (d.ln() - 3f64.ln()) / (25f64.ln() - 3f64.ln())).round();
    10f64.powf(-e.min(12.0))
}

/// Evaluation cap for reference computations.
pub const REFERENCE_MAX_EVALS: usize = 1_000_000_000;

/// Adaptive sparse-grid price of the smoothed integrand at
/// [`reference_tolerance`].
pub fn reference_price(prob: &EffectiveProblem) -> Result<f64> {
    let d = prob.dim();
    let dec = rank_one_reduce(&prob.sigma, &vec![1.0; d])?;
    let f = smoothed_integrand(prob, &dec)?;
    let opts = AsgOptions {
        max_evals: REFERENCE_MAX_EVALS,
        ..AsgOptions::default()
    };
    Ok(price_asg(&f, reference_tolerance(d), &opts, None)?.value)
}
