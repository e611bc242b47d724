//! Integrands and estimators for basket call prices.
//!
//! The raw integrand is the kinked payoff in Gaussian coordinates. The
//! smoothed integrands integrate one Gaussian factor out in closed form, so
//! what remains is a Black-Scholes price as a function of the other factors.

mod estimators;
mod integrand;

pub use estimators::{
    build_control_variate, price_asg, price_cv, price_cv_mc, price_cv_qmc, price_mc, price_qmc,
    price_vg_mc, price_vg_smoothed, reference_price, reference_tolerance, AsgOptions, REFERENCE_MAX_EVALS, CvMode,
    McEstimate, SampleStats, sample_stats,
};
pub use integrand::{
    raw_integrand, smoothed_integrand, smoothed_integrand_v, vg_raw_integrand,
    vg_smoothed_integrand, FnIntegrand, Integrand, Measure, RawIntegrand, SmoothedIntegrand,
    VgRawIntegrand, VgSmoothedIntegrand,
};
pub use crate::sampling::norm_cdf;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// `|d₁|, |d₂|` are clamped here so the normal CDF never sees ±∞ or NaN.
const D_CLAMP: f64 = 38.0;

/// Black-Scholes call with zero rate and unit maturity, written in terms of
/// the forward `s0` and total volatility `sigma`:
/// `E[(s0·e^{σZ − σ²/2} − k)^+]`.
///
/// For `k ≤ 0` the option is always exercised and the value is `s0 − k`.
pub fn bs_call(s0: f64, k: f64, sigma: f64) -> Result<f64> {
    if !(s0 > 0.0) {
        return Err(Error::OutOfDomain {
            what: "spot",
            value: s0,
        });
    }
    if !(sigma >= 0.0) {
        return Err(Error::OutOfDomain {
            what: "volatility",
            value: sigma,
        });
    }
    Ok(call_value(s0, k, sigma))
}

/// [`bs_call`] without argument checks; `s0 = 0` (underflowed spot) is
/// treated as its limit.
pub(crate) fn call_value(s0: f64, k: f64, sigma: f64) -> f64 {
    if k <= 0.0 {
        return s0 - k;
    }
    let intrinsic = (s0 - k).max(0.0);
    if sigma == 0.0 || s0 == 0.0 {
        return intrinsic;
    }
    let d1 = (((s0 / k).ln() + 0.5 * sigma * sigma) / sigma).clamp(-D_CLAMP, D_CLAMP);
    let d2 = (d1 - sigma).clamp(-D_CLAMP, D_CLAMP);
    let v = s0 * norm_cdf(d1) - k * norm_cdf(d2);
    let v = if v < 1e-300 { 0.0 } else { v };
    v.clamp(intrinsic, s0)
}

/// Estimator labels with their plot styling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Mc,
    Qmc,
    Asg,
    McCs,
    QmcCs,
    AsgCs,
    AsgCs2,
    McCsCv,
    QmcCsCv,
}

impl Method {
    pub const ALL: [Method; 9] = [
        Method::Mc,
        Method::Qmc,
        Method::Asg,
        Method::McCs,
        Method::QmcCs,
        Method::AsgCs,
        Method::AsgCs2,
        Method::McCsCv,
        Method::QmcCsCv,
    ];

    pub fn acronym(self) -> &'static str {
        match self {
            Method::Mc => "MC",
            Method::Qmc => "QMC",
            Method::Asg => "aSG",
            Method::McCs => "MC+CS",
            Method::QmcCs => "QMC+CS",
            Method::AsgCs => "aSG+CS",
            Method::AsgCs2 => "aSG+CS2",
            Method::McCsCv => "MC+CS+CV",
            Method::QmcCsCv => "QMC+CS+CV",
        }
    }

    /// Gnuplot colour name.
    pub fn color(self) -> &'static str {
        match self {
            Method::Mc => "#1f77b4",
            Method::Qmc => "#ff7f0e",
            Method::Asg => "#2ca02c",
            Method::McCs => "#d62728",
            Method::QmcCs => "#9467bd",
            Method::AsgCs => "#8c564b",
            Method::AsgCs2 => "#e377c2",
            Method::McCsCv => "#7f7f7f",
            Method::QmcCsCv => "#17becf",
        }
    }

    /// Gnuplot point type.
    pub fn marker(self) -> u32 {
        match self {
            Method::Mc => 1,
            Method::Qmc => 2,
            Method::Asg => 4,
            Method::McCs => 6,
            Method::QmcCs => 8,
            Method::AsgCs => 10,
            Method::AsgCs2 => 12,
            Method::McCsCv => 3,
            Method::QmcCsCv => 5,
        }
    }

    /// Sparse-grid methods are driven by a tolerance, the others by a
    /// point budget.
    pub fn is_adaptive(self) -> bool {
        matches!(self, Method::Asg | Method::AsgCs | Method::AsgCs2)
    }

    pub fn is_monte_carlo(self) -> bool {
        matches!(self, Method::Mc | Method::McCs | Method::McCsCv)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.acronym())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.acronym() == s.trim())
            .ok_or_else(|| Error::ConfigInvalid(format!("unknown method `{s}`")))
    }
}

/// One row of a convergence table.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateRecord {
    pub method: Method,
    pub n_points: usize,
    pub estimate: f64,
    pub rel_error: Option<f64>,
    pub seconds: f64,
    /// `None` on success, otherwise the error that stopped the estimator.
    pub status: Option<String>,
}

impl EstimateRecord {
    pub fn new(method: Method, n_points: usize, estimate: f64, reference: Option<f64>, seconds: f64) -> Self {
        Self {
            method,
            n_points,
            estimate,
            rel_error: reference.map(|r| ((estimate - r) / r).abs()),
            seconds,
            status: None,
        }
    }

    pub fn failed(method: Method, n_points: usize, seconds: f64, err: &Error) -> Self {
        Self {
            method,
            n_points,
            estimate: f64::NAN,
            rel_error: None,
            seconds,
            status: Some(err.to_string()),
        }
    }
}
