//! Pricing of European basket options under Black-Scholes and
//! Variance-Gamma dynamics by smoothing the payoff through conditioning,
//! then integrating the smooth part with adaptive sparse grids, quasi-Monte
//! Carlo or Monte Carlo.

pub mod error;
pub mod experiment;
pub mod linalg;
pub mod models;
pub mod pricing;
pub mod rules1d;
pub mod sampling;
pub mod sparsegrid;

pub use error::{Error, Result};
