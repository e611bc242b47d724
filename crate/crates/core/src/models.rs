//! Basket models and their reduction to the effective form
//! `E[(Σ w_i e^{X_i} − K)^+]` with `X ~ N(0, Σ)`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{cholesky, Matrix, SymMatrix};
use crate::sampling::RngSpec;

/// Stream reserved for drawing random instances, kept apart from the
/// streams used by Monte Carlo runs.
pub const INSTANCE_STREAM: u64 = u64::MAX;

/// Strike relative to the forward basket value `cᵀS0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StrikeMode {
    Atm,
    Itm,
    Otm,
}

impl StrikeMode {
    pub fn factor(self) -> f64 {
        match self {
            StrikeMode::Atm => 1.0,
            StrikeMode::Itm => 0.8,
            StrikeMode::Otm => 1.2,
        }
    }

    pub const ALL: [StrikeMode; 3] = [StrikeMode::Atm, StrikeMode::Itm, StrikeMode::Otm];
}

impl FromStr for StrikeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "atm" => Ok(StrikeMode::Atm),
            "itm" => Ok(StrikeMode::Itm),
            "otm" => Ok(StrikeMode::Otm),
            other => Err(Error::ConfigInvalid(format!("unknown strike mode `{other}`"))),
        }
    }
}

impl fmt::Display for StrikeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StrikeMode::Atm => "atm",
            StrikeMode::Itm => "itm",
            StrikeMode::Otm => "otm",
        })
    }
}

/// Multivariate Black-Scholes basket call.
#[derive(Debug, Clone)]
pub struct BlackScholesBasket {
    pub s0: Vec<f64>,
    pub sigma: Vec<f64>,
    pub rho: SymMatrix,
    pub c: Vec<f64>,
    pub strike: f64,
    pub maturity: f64,
    pub rate: f64,
}

fn check_positive(what: &'static str, xs: &[f64]) -> Result<()> {
    match xs.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
        Some(&x) => Err(Error::OutOfDomain { what, value: x }),
        None => Ok(()),
    }
}

fn check_len(expected: usize, xs: &[f64]) -> Result<()> {
    if xs.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: xs.len(),
        });
    }
    Ok(())
}

fn check_correlation(rho: &SymMatrix) -> Result<()> {
    for i in 0..rho.dim() {
        if (rho[(i, i)] - 1.0).abs() > 1e-12 {
            return Err(Error::OutOfDomain {
                what: "correlation diagonal",
                value: rho[(i, i)],
            });
        }
    }
    cholesky(rho).map(|_| ())
}

impl BlackScholesBasket {
    pub fn new(
        s0: Vec<f64>,
        sigma: Vec<f64>,
        rho: SymMatrix,
        c: Vec<f64>,
        strike: f64,
        maturity: f64,
    ) -> Result<Self> {
        let model = Self {
            s0,
            sigma,
            rho,
            c,
            strike,
            maturity,
            rate: 0.0,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn with_rate(mut self, rate: f64) -> Self {
        self.rate = rate;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if d == 0 {
            return Err(Error::OutOfDomain {
                what: "basket dimension",
                value: 0.0,
            });
        }
        check_len(d, &self.sigma)?;
        check_len(d, &self.c)?;
        if self.rho.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: self.rho.dim(),
            });
        }
        check_positive("spot", &self.s0)?;
        check_positive("volatility", &self.sigma)?;
        check_positive("weight", &self.c)?;
        check_positive("strike", &[self.strike])?;
        check_positive("maturity", &[self.maturity])?;
        check_correlation(&self.rho)
    }

    pub fn dim(&self) -> usize {
        self.s0.len()
    }

    /// `Σ c_i S0_i`.
    pub fn basket_spot(&self) -> f64 {
        self.c.iter().zip(&self.s0).map(|(c, s)| c * s).sum()
    }

    /// `Σ_ij = σ_i σ_j ρ_ij T`.
    pub fn covariance(&self) -> SymMatrix {
        let t = self.maturity;
        SymMatrix::from_lower_fn(self.dim(), |i, j| self.sigma[i] * self.sigma[j] * self.rho[(i, j)] * t)
    }

    /// Copy with a different strike.
    pub fn with_strike(&self, strike: f64) -> Self {
        Self {
            strike,
            ..self.clone()
        }
    }
}

/// `E[(Σ w_i e^{X_i} − K)^+]` with `X ~ N(0, Σ)`, times `discount`.
#[derive(Debug, Clone)]
pub struct EffectiveProblem {
    pub w: Vec<f64>,
    pub sigma: SymMatrix,
    pub strike: f64,
    pub discount: f64,
}

impl EffectiveProblem {
    pub fn new(w: Vec<f64>, sigma: SymMatrix, strike: f64) -> Result<Self> {
        check_len(sigma.dim(), &w)?;
        check_positive("effective weight", &w)?;
        cholesky(&sigma)?;
        Ok(Self {
            w,
            sigma,
            strike,
            discount: 1.0,
        })
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }
}

/// `w_i = c_i S0_i e^{(r − σ_i²/2)T}`, `Σ_ij = σ_i σ_j ρ_ij T`.
pub fn effective_bs(model: &BlackScholesBasket) -> EffectiveProblem {
    let t = model.maturity;
    let w = (0..model.dim())
        .map(|i| model.c[i] * model.s0[i] * ((model.rate - 0.5 * model.sigma[i] * model.sigma[i]) * t).exp())
        .collect();
    EffectiveProblem {
        w,
        sigma: model.covariance(),
        strike: model.strike,
        discount: (-model.rate * t).exp(),
    }
}

/// Multivariate Variance-Gamma basket: each log-price is a drifted Brownian
/// motion run on a common Gamma clock `γ_T ~ Gamma(T/ν, ν)`.
#[derive(Debug, Clone)]
pub struct VarianceGammaBasket {
    pub s0: Vec<f64>,
    pub sigma: Vec<f64>,
    pub theta: Vec<f64>,
    pub nu: f64,
    pub rho: SymMatrix,
    pub c: Vec<f64>,
    pub strike: f64,
    pub maturity: f64,
    pub rate: f64,
}

/// Martingale drift correction `ω = ln(1 − θν − σ²ν/2)/ν`.
pub fn omega(theta: f64, sigma: f64, nu: f64) -> Result<f64> {
    omega_for(0, theta, sigma, nu)
}

fn omega_for(asset: usize, theta: f64, sigma: f64, nu: f64) -> Result<f64> {
    let argument = 1.0 - theta * nu - 0.5 * sigma * sigma * nu;
    if !(argument > 0.0) {
        return Err(Error::OmegaUndefined { asset, argument });
    }
    Ok(argument.ln() / nu)
}

impl VarianceGammaBasket {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        s0: Vec<f64>,
        sigma: Vec<f64>,
        theta: Vec<f64>,
        nu: f64,
        rho: SymMatrix,
        c: Vec<f64>,
        strike: f64,
        maturity: f64,
    ) -> Result<Self> {
        let model = Self {
            s0,
            sigma,
            theta,
            nu,
            rho,
            c,
            strike,
            maturity,
            rate: 0.0,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn with_rate(mut self, rate: f64) -> Self {
        self.rate = rate;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if d == 0 {
            return Err(Error::OutOfDomain {
                what: "basket dimension",
                value: 0.0,
            });
        }
        check_len(d, &self.sigma)?;
        check_len(d, &self.theta)?;
        check_len(d, &self.c)?;
        if self.rho.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: self.rho.dim(),
            });
        }
        check_positive("spot", &self.s0)?;
        check_positive("volatility", &self.sigma)?;
        check_positive("weight", &self.c)?;
        check_positive("strike", &[self.strike])?;
        check_positive("maturity", &[self.maturity])?;
        check_positive("nu", &[self.nu])?;
        self.omegas()?;
        check_correlation(&self.rho)
    }

    pub fn dim(&self) -> usize {
        self.s0.len()
    }

    pub fn basket_spot(&self) -> f64 {
        self.c.iter().zip(&self.s0).map(|(c, s)| c * s).sum()
    }

    pub fn omegas(&self) -> Result<Vec<f64>> {
        (0..self.dim())
            .map(|i| omega_for(i, self.theta[i], self.sigma[i], self.nu))
            .collect()
    }

    /// Shape `T/ν` and scale `ν` of the Gamma clock at maturity.
    pub fn gamma_shape_scale(&self) -> (f64, f64) {
        (self.maturity / self.nu, self.nu)
    }

    /// The `y`-free covariance `σ_i σ_j ρ_ij`; conditional on `γ_T = y` the
    /// Gaussian part has covariance `y` times this.
    pub fn base_covariance(&self) -> SymMatrix {
        SymMatrix::from_lower_fn(self.dim(), |i, j| self.sigma[i] * self.sigma[j] * self.rho[(i, j)])
    }

    /// `w_i = c_i S0_i e^{(r + ω_i)T}`, before the `e^{θ_i y}` factor.
    pub fn base_weights(&self) -> Result<Vec<f64>> {
        let t = self.maturity;
        Ok(self
            .omegas()?
            .iter()
            .enumerate()
            .map(|(i, om)| self.c[i] * self.s0[i] * ((self.rate + om) * t).exp())
            .collect())
    }

    pub fn with_strike(&self, strike: f64) -> Self {
        Self {
            strike,
            ..self.clone()
        }
    }
}

/// The conditional problem given `γ_T = y`.
pub fn effective_vg(model: &VarianceGammaBasket, y: f64) -> Result<EffectiveProblem> {
    if !(y > 0.0) {
        return Err(Error::OutOfDomain {
            what: "gamma time",
            value: y,
        });
    }
    let w = model
        .base_weights()?
        .iter()
        .zip(&model.theta)
        .map(|(w, th)| w * (th * y).exp())
        .collect();
    Ok(EffectiveProblem {
        w,
        sigma: model.base_covariance().scaled(y),
        strike: model.strike,
        discount: (-model.rate * model.maturity).exp(),
    })
}

/// Correlation `ρ = ττᵀ` from `d − 1` parameters, where `τ` is lower
/// triangular with first column `(1, x_1, x_1x_2, …)` and column `k` equal to
/// `√(1 − x_{k−1}²)·(0, …, 0, 1, x_k, x_k x_{k+1}, …)`.
pub fn doust_correlation(x: &[f64]) -> Result<SymMatrix> {
    if let Some(&bad) = x.iter().find(|v| !(v.abs() <= 1.0)) {
        return Err(Error::OutOfDomain {
            what: "correlation parameter",
            value: bad,
        });
    }
    let d = x.len() + 1;
    let mut tau = Matrix::zeros(d, d);
    for k in 0..d {
        let scale = if k == 0 { 1.0 } else { (1.0 - x[k - 1] * x[k - 1]).sqrt() };
        let mut p = scale;
        tau[(k, k)] = p;
        for i in k + 1..d {
            p *= x[i - 1];
            tau[(i, k)] = p;
        }
    }
    Ok(SymMatrix::from_lower_fn(d, |i, j| {
        if i == j {
            1.0
        } else {
            (0..=j).map(|k| tau[(i, k)] * tau[(j, k)]).sum()
        }
    }))
}

/// Random Black-Scholes instance: `S0_i ~ U[8,20]`, `σ_i ~ U[0.3,0.4]`,
/// Doust parameters `x_i ~ U[0.8,1]`, `c_i = 1/d`, `T = 1`, strike from
/// `mode`. Draws happen in that order on [`INSTANCE_STREAM`].
pub fn random_instance(d: usize, seed: u64, mode: StrikeMode) -> Result<BlackScholesBasket> {
    if d < 2 {
        return Err(Error::OutOfDomain {
            what: "instance dimension",
            value: d as f64,
        });
    }
    let mut rng = RngSpec::new(seed, INSTANCE_STREAM).rng();
    let s0: Vec<f64> = (0..d).map(|_| rng.random_range(8.0..20.0)).collect();
    let sigma: Vec<f64> = (0..d).map(|_| rng.random_range(0.3..0.4)).collect();
    let x: Vec<f64> = (0..d - 1).map(|_| rng.random_range(0.8..1.0)).collect();
    let c = vec![1.0 / d as f64; d];
    let forward: f64 = c.iter().zip(&s0).map(|(c, s)| c * s).sum();
    BlackScholesBasket::new(s0, sigma, doust_correlation(&x)?, c, forward * mode.factor(), 1.0)
}

/// Random Variance-Gamma instance: the Black-Scholes draws of
/// [`random_instance`] followed by `θ_i ~ U[θ_lo, θ_hi]`.
pub fn random_vg_instance(
    d: usize,
    seed: u64,
    mode: StrikeMode,
    nu: f64,
    theta_range: (f64, f64),
) -> Result<VarianceGammaBasket> {
    let bs = random_instance(d, seed, mode)?;
    let mut rng = RngSpec::new(seed, INSTANCE_STREAM).rng();
    // replay the Black-Scholes draws so θ continues the same stream
    for _ in 0..(3 * d - 1) {
        let _: f64 = rng.random_range(0.0..1.0);
    }
    let (lo, hi) = theta_range;
    if !(lo <= hi) {
        return Err(Error::ConfigInvalid(format!("theta range [{lo}, {hi}] is empty")));
    }
    let theta: Vec<f64> = (0..d)
        .map(|_| if lo == hi { lo } else { rng.random_range(lo..hi) })
        .collect();
    VarianceGammaBasket::new(bs.s0, bs.sigma, theta, nu, bs.rho, bs.c, bs.strike, bs.maturity)
}

/// Fixed three-asset Variance-Gamma example with `ν = 0.5`, `K = 75`,
/// `T = 1`, `r = 0`. `sigma3` is the third volatility, normally
/// [`THREE_ASSET_SIGMA3`].
pub fn three_asset_vg(sigma3: f64) -> Result<VarianceGammaBasket> {
    let rho = SymMatrix::from_rows(&[
        vec![1.0, 0.6, 0.9],
        vec![0.6, 1.0, 0.8],
        vec![0.9, 0.8, 1.0],
    ])?;
    VarianceGammaBasket::new(
        vec![100.0, 200.0, 300.0],
        vec![0.1099, 0.1677, sigma3],
        vec![-0.1368, -0.056, -0.1984],
        0.5,
        rho,
        vec![1.0 / 3.0, 1.0 / 6.0, 1.0 / 9.0],
        75.0,
        1.0,
    )
}

/// Default third volatility of [`three_asset_vg`].
pub const THREE_ASSET_SIGMA3: f64 = 0.0365;
