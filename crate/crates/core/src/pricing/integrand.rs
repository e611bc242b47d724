use super::call_value;
use crate::error::{Error, Result};
use crate::linalg::{cholesky, rank_one_reduce, Matrix, SmoothingDecomposition};
use crate::models::{EffectiveProblem, VarianceGammaBasket};

/// Reference measure of an integrand's coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Measure {
    /// All coordinates i.i.d. `N(0, 1)`.
    StandardNormal,
    /// Coordinate 0 is `Gamma(shape, scale)`, the rest i.i.d. `N(0, 1)`.
    GammaThenNormal { shape: f64, scale: f64 },
}

/// A real function integrated against its [`Measure`].
pub trait Integrand: Sync {
    fn dim(&self) -> usize;

    fn eval(&self, x: &[f64]) -> f64;

    fn measure(&self) -> Measure {
        Measure::StandardNormal
    }

    fn label(&self) -> &str {
        "integrand"
    }
}

/// Closure adaptor.
pub struct FnIntegrand<F> {
    dim: usize,
    f: F,
    measure: Measure,
}

impl<F: Fn(&[f64]) -> f64 + Sync> FnIntegrand<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self {
            dim,
            f,
            measure: Measure::StandardNormal,
        }
    }

    pub fn with_measure(mut self, measure: Measure) -> Self {
        self.measure = measure;
        self
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> Integrand for FnIntegrand<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    fn measure(&self) -> Measure {
        self.measure
    }
}

/// `out_i = Σ_j map_ij z_j`, skipping zero coordinates. Sparse-grid nodes
/// are mostly zero, so this is the common case there.
fn rotate(map: &Matrix, z: &[f64], out: &mut dyn FnMut(usize, f64)) {
    const MAX_SPARSE: usize = 64;
    let mut nz = [0usize; MAX_SPARSE];
    let mut count = 0;
    for (j, &zj) in z.iter().enumerate() {
        if zj != 0.0 {
            if count == MAX_SPARSE {
                count = usize::MAX;
                break;
            }
            nz[count] = j;
            count += 1;
        }
    }
    if count == usize::MAX || 2 * count > z.len() {
        for i in 0..map.rows() {
            out(i, map.row(i).iter().zip(z).map(|(a, b)| a * b).sum());
        }
    } else {
        for i in 0..map.rows() {
            let row = map.row(i);
            out(i, nz[..count].iter().map(|&j| row[j] * z[j]).sum());
        }
    }
}

/// `discount·(Σ w_i e^{X_i} − K)^+` with `X = V·√D·z`.
#[derive(Debug, Clone)]
pub struct RawIntegrand {
    w: Vec<f64>,
    strike: f64,
    discount: f64,
    /// `V·√D`, row-major.
    map: Matrix,
}

/// The payoff in the coordinates of `dec`, so that `z_1` is the factor the
/// smoothed integrands integrate out.
pub fn raw_integrand(prob: &EffectiveProblem, dec: &SmoothingDecomposition) -> RawIntegrand {
    let d = prob.dim();
    let map = Matrix::from_fn(d, d, |i, j| dec.vmat[(i, j)] * dec.lambda_sq[j].sqrt());
    RawIntegrand {
        w: prob.w.clone(),
        strike: prob.strike,
        discount: prob.discount,
        map,
    }
}

impl Integrand for RawIntegrand {
    fn dim(&self) -> usize {
        self.w.len()
    }

    fn eval(&self, z: &[f64]) -> f64 {
        let mut basket = 0.0;
        rotate(&self.map, z, &mut |i, x| basket += self.w[i] * x.exp());
        self.discount * (basket - self.strike).max(0.0)
    }

    fn label(&self) -> &str {
        "raw"
    }
}

/// `discount·C_BS(h₁(ȳ)·e^{λ₁²/2}, K − h₂(ȳ), λ₁)` with `ȳ = √D̄·z̄`, where
/// `h₁` sums `w_i exp((V̄ȳ)_i)` over `v_i = 1` and `h₂` over `v_i = 0`.
#[derive(Debug, Clone)]
pub struct SmoothedIntegrand {
    w: Vec<f64>,
    in_factor: Vec<bool>,
    strike: f64,
    discount: f64,
    lambda1: f64,
    forward_factor: f64,
    /// `V_{ij}·λ_j` for `j ≥ 2`, `d × (d − 1)` row-major.
    map: Matrix,
    shifted: bool,
}

fn check_binary(v: &[f64]) -> Result<()> {
    match v.iter().find(|x| **x != 0.0 && **x != 1.0) {
        Some(&x) => Err(Error::OutOfDomain {
            what: "selector entry",
            value: x,
        }),
        None if v.iter().all(|x| *x == 0.0) => Err(Error::ZeroVector),
        None => Ok(()),
    }
}

fn smoothed_parts(w: &[f64], dec: &SmoothingDecomposition) -> (Matrix, f64) {
    let d = w.len();
    let map = Matrix::from_fn(d, d.saturating_sub(1), |i, j| {
        dec.vmat[(i, j + 1)] * dec.lambda_sq[j + 1].sqrt()
    });
    (map, dec.lambda1_sq())
}

/// Smoothed integrand for `v = 1`.
pub fn smoothed_integrand(prob: &EffectiveProblem, dec: &SmoothingDecomposition) -> Result<SmoothedIntegrand> {
    if dec.v.iter().any(|x| *x != 1.0) {
        return Err(Error::OutOfDomain {
            what: "selector entry (v must be all ones)",
            value: dec.v.iter().copied().find(|x| *x != 1.0).unwrap_or(0.0),
        });
    }
    smoothed_integrand_v(prob, &dec.v.clone(), dec)
}

/// Smoothed integrand for a binary selector `v ≠ 0`; `dec` must be built
/// with the same `v`.
pub fn smoothed_integrand_v(
    prob: &EffectiveProblem,
    v: &[f64],
    dec: &SmoothingDecomposition,
) -> Result<SmoothedIntegrand> {
    check_binary(v)?;
    if dec.v != v || prob.dim() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: prob.dim(),
            got: dec.v.len(),
        });
    }
    let (map, l1sq) = smoothed_parts(&prob.w, dec);
    let in_factor: Vec<bool> = v.iter().map(|x| *x == 1.0).collect();
    Ok(SmoothedIntegrand {
        w: prob.w.clone(),
        shifted: in_factor.iter().any(|b| !b),
        in_factor,
        strike: prob.strike,
        discount: prob.discount,
        lambda1: l1sq.sqrt(),
        forward_factor: (0.5 * l1sq).exp(),
        map,
    })
}

impl Integrand for SmoothedIntegrand {
    fn dim(&self) -> usize {
        self.w.len() - 1
    }

    fn eval(&self, z: &[f64]) -> f64 {
        let (mut h1, mut h2) = (0.0, 0.0);
        rotate(&self.map, z, &mut |i, x| {
            let term = self.w[i] * x.exp();
            if self.in_factor[i] {
                h1 += term;
            } else {
                h2 += term;
            }
        });
        let k = if self.shifted { self.strike - h2 } else { self.strike };
        self.discount * call_value(h1 * self.forward_factor, k, self.lambda1)
    }

    fn label(&self) -> &str {
        if self.shifted {
            "smoothed (shifted strike)"
        } else {
            "smoothed"
        }
    }
}

/// Smoothed Variance-Gamma integrand on `(y, z̄)`: conditional on the Gamma
/// clock `y`, the weights pick up `e^{θ_i y}` and the decomposition of the
/// `y`-free covariance is scaled by `y`.
#[derive(Debug, Clone)]
pub struct VgSmoothedIntegrand {
    w: Vec<f64>,
    theta: Vec<f64>,
    in_factor: Vec<bool>,
    strike: f64,
    discount: f64,
    lambda1_sq: f64,
    map: Matrix,
    shape: f64,
    scale: f64,
    shifted: bool,
}

/// `v = None` selects `v = 1`.
pub fn vg_smoothed_integrand(model: &VarianceGammaBasket, v: Option<&[f64]>) -> Result<VgSmoothedIntegrand> {
    let d = model.dim();
    let ones = vec![1.0; d];
    let v = v.unwrap_or(&ones);
    check_binary(v)?;
    if v.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: v.len(),
        });
    }
    let w = model.base_weights()?;
    let dec = rank_one_reduce(&model.base_covariance(), v)?;
    let (map, lambda1_sq) = smoothed_parts(&w, &dec);
    let in_factor: Vec<bool> = v.iter().map(|x| *x == 1.0).collect();
    let (shape, scale) = model.gamma_shape_scale();
    Ok(VgSmoothedIntegrand {
        w,
        theta: model.theta.clone(),
        shifted: in_factor.iter().any(|b| !b),
        in_factor,
        strike: model.strike,
        discount: (-model.rate * model.maturity).exp(),
        lambda1_sq,
        map,
        shape,
        scale,
    })
}

impl Integrand for VgSmoothedIntegrand {
    fn dim(&self) -> usize {
        self.w.len()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let y = x[0];
        let z = &x[1..];
        let sy = y.sqrt();
        let (mut h1, mut h2) = (0.0, 0.0);
        rotate(&self.map, z, &mut |i, e| {
            let term = self.w[i] * (self.theta[i] * y + sy * e).exp();
            if self.in_factor[i] {
                h1 += term;
            } else {
                h2 += term;
            }
        });
        let l1sq = y * self.lambda1_sq;
        let k = if self.shifted { self.strike - h2 } else { self.strike };
        self.discount * call_value(h1 * (0.5 * l1sq).exp(), k, l1sq.sqrt())
    }

    fn measure(&self) -> Measure {
        Measure::GammaThenNormal {
            shape: self.shape,
            scale: self.scale,
        }
    }

    fn label(&self) -> &str {
        "vg smoothed"
    }
}

/// Variance-Gamma payoff on `(y, z)`, `z ∈ ℝ^d`, with `X = √y·L·z` and `L`
/// the Cholesky factor of the `y`-free covariance.
#[derive(Debug, Clone)]
pub struct VgRawIntegrand {
    w: Vec<f64>,
    theta: Vec<f64>,
    strike: f64,
    discount: f64,
    chol: Matrix,
    shape: f64,
    scale: f64,
}

pub fn vg_raw_integrand(model: &VarianceGammaBasket) -> Result<VgRawIntegrand> {
    let (shape, scale) = model.gamma_shape_scale();
    Ok(VgRawIntegrand {
        w: model.base_weights()?,
        theta: model.theta.clone(),
        strike: model.strike,
        discount: (-model.rate * model.maturity).exp(),
        chol: cholesky(&model.base_covariance())?,
        shape,
        scale,
    })
}

impl Integrand for VgRawIntegrand {
    fn dim(&self) -> usize {
        self.w.len() + 1
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let y = x[0];
        let z = &x[1..];
        let sy = y.sqrt();
        let basket: f64 = (0..self.w.len())
            .map(|i| {
                let e: f64 = self.chol.row(i)[..=i].iter().zip(z).map(|(a, b)| a * b).sum();
                self.w[i] * (self.theta[i] * y + sy * e).exp()
            })
            .sum();
        self.discount * (basket - self.strike).max(0.0)
    }

    fn measure(&self) -> Measure {
        Measure::GammaThenNormal {
            shape: self.shape,
            scale: self.scale,
        }
    }

    fn label(&self) -> &str {
        "vg raw"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SymMatrix;
    use crate::models::{effective_bs, effective_vg, three_asset_vg, random_instance, StrikeMode, THREE_ASSET_SIGMA3};
    use crate::pricing::bs_call;
    use crate::sampling::{normal_vector, RngSpec};

    fn setup(d: usize, mode: StrikeMode) -> (EffectiveProblem, SmoothingDecomposition) {
        let m = random_instance(d, 17, mode).unwrap();
        let p = effective_bs(&m);
        let dec = rank_one_reduce(&p.sigma, &vec![1.0; d]).unwrap();
        (p, dec)
    }

    #[test]
    fn raw_at_origin() {
        let (p, dec) = setup(4, StrikeMode::Itm);
        let f = raw_integrand(&p, &dec);
        let expected = (p.w.iter().sum::<f64>() - p.strike).max(0.0);
        assert!((f.eval(&[0.0; 4]) - expected).abs() < 1e-12);
        assert!(expected > 0.0);
    }

    #[test]
    fn smoothed_at_origin() {
        let (p, dec) = setup(5, StrikeMode::Atm);
        let g = smoothed_integrand(&p, &dec).unwrap();
        let l1 = dec.lambda1_sq();
        let expected = bs_call(p.w.iter().sum::<f64>() * (0.5 * l1).exp(), p.strike, l1.sqrt()).unwrap();
        assert_eq!(g.dim(), 4);
        assert!((g.eval(&[0.0; 4]) - expected).abs() < 1e-12);
    }

    #[test]
    fn one_asset_reduces_to_black_scholes() {
        let p = EffectiveProblem::new(vec![(-0.02f64).exp()], SymMatrix::diagonal(&[0.04]), 1.0).unwrap();
        let dec = rank_one_reduce(&p.sigma, &[1.0]).unwrap();
        let g = smoothed_integrand(&p, &dec).unwrap();
        assert_eq!(g.dim(), 0);
        assert!((g.eval(&[]) - bs_call(1.0, 1.0, 0.2).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn all_ones_selector_matches_plain_smoothing() {
        let (p, dec) = setup(6, StrikeMode::Otm);
        let a = smoothed_integrand(&p, &dec).unwrap();
        let b = smoothed_integrand_v(&p, &[1.0; 6], &dec).unwrap();
        for s in 0..100 {
            let z = normal_vector(RngSpec::new(3, s), 5);
            assert!((a.eval(&z) - b.eval(&z)).abs() <= 1e-12 * a.eval(&z).max(1.0));
        }
    }

    #[test]
    fn shifted_strike_at_origin() {
        let p = EffectiveProblem::new(
            vec![1.0, 0.7],
            SymMatrix::from_rows(&[vec![0.09, 0.03], vec![0.03, 0.04]]).unwrap(),
            1.2,
        )
        .unwrap();
        let v = [1.0, 0.0];
        let dec = rank_one_reduce(&p.sigma, &v).unwrap();
        let g = smoothed_integrand_v(&p, &v, &dec).unwrap();
        let l1 = dec.lambda1_sq();
        let expected = bs_call(1.0 * (0.5 * l1).exp(), 1.2 - 0.7, l1.sqrt()).unwrap();
        assert!((g.eval(&[0.0]) - expected).abs() < 1e-14);
        // deep enough in z̄ that K − h₂ < 0
        assert!(g.eval(&[40.0]).is_finite());
    }

    #[test]
    fn selector_validation() {
        let (p, dec) = setup(3, StrikeMode::Atm);
        assert!(smoothed_integrand_v(&p, &[1.0, 0.5, 0.0], &dec).is_err());
        assert!(smoothed_integrand_v(&p, &[1.0, 1.0, 0.0], &dec).is_err());
        assert!(matches!(
            smoothed_integrand_v(&p, &[0.0; 3], &dec),
            Err(Error::ZeroVector)
        ));
    }

    #[test]
    fn vg_once_scaled_matches_per_y_decomposition() {
        let m = three_asset_vg(THREE_ASSET_SIGMA3).unwrap();
        for v in [vec![1.0; 3], vec![1.0, 1.0, 0.0]] {
            let fast = vg_smoothed_integrand(&m, Some(&v)).unwrap();
            for (s, &y) in [0.05, 0.7, 1.3, 4.0].iter().enumerate() {
                let p = effective_vg(&m, y).unwrap();
                let dec = rank_one_reduce(&p.sigma, &v).unwrap();
                let slow = smoothed_integrand_v(&p, &v, &dec).unwrap();
                let z = normal_vector(RngSpec::new(8, s as u64), 2);
                let a = fast.eval(&[y, z[0], z[1]]);
                let b = slow.eval(&z);
                assert!((a - b).abs() <= 1e-12 * a.max(1.0), "y = {y}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn vg_raw_at_origin() {
        let m = three_asset_vg(THREE_ASSET_SIGMA3).unwrap();
        let f = vg_raw_integrand(&m).unwrap();
        let y = 0.9;
        let p = effective_vg(&m, y).unwrap();
        let expected = (p.w.iter().sum::<f64>() - p.strike).max(0.0);
        assert!((f.eval(&[y, 0.0, 0.0, 0.0]) - expected).abs() < 1e-12);
        assert_eq!(f.dim(), 4);
    }
}
