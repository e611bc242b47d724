//! Univariate quadrature rules for probability weights and the nested
//! sequences `Q_0, Q_1, …` that feed the sparse-grid difference operators.
//!
//! All rules integrate against a probability density: the standard normal
//! density for Gauss-Hermite and Genz-Keister rules, and the Gamma(α+1, 1)
//! density `u^α e^{-u} / Γ(α+1)` for generalized Gauss-Laguerre rules. Weights
//! therefore sum to one.
//!
//! Gauss rules are produced by Golub-Welsch: nodes are the eigenvalues of the
//! symmetric tridiagonal Jacobi matrix of the orthonormal polynomials (implicit
//! QL), polished by Newton steps on the three-term recurrence, and weights are the Christoffel
//! numbers `1 / Σ_k p_k(x)²` (the squared first eigenvector components, computed
//! from the recurrence rather than from the eigenvectors so that tiny tail
//! weights keep full relative accuracy).
//!
//! The Genz-Keister sequence uses the standard nested extensions with 1, 3, 9,
//! 19 and 35 points (degrees 1, 5, 15, 29, 51). Past the table it continues
//! with Gauss-Hermite rules of sizes 71, 143, … (`N_j = 2 N_{j-1} + 1`).

mod genz_keister_table;

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use crate::error::{Error, Result};

/// Largest order accepted by the public Gauss rule constructors.
pub const MAX_ORDER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightKind {
    StandardNormal,
    GeneralizedLaguerre { alpha: f64 },
}

/// Nodes and weights of a univariate rule, nodes strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub weight_kind: WeightKind,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(*x)).sum()
    }
}

/// Gauss-Hermite rule with `n` nodes for the standard normal density.
pub fn gauss_hermite(n: usize) -> Result<QuadratureRule> {
    if n == 0 || n > MAX_ORDER {
        return Err(Error::OrderOutOfRange(n));
    }
    gauss_hermite_any(n)
}

fn gauss_hermite_any(n: usize) -> Result<QuadratureRule> {
    // Probabilists' Hermite: x p_k = √(k+1) p_{k+1} + √k p_{k-1}.
    let diag = vec![0.0; n];
    let off: Vec<f64> = (1..n).map(|k| (k as f64).sqrt()).collect();
    let raw = golub_welsch(&diag, &off)?;

    // Enforce exact mirror symmetry from the nonnegative half.
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let x = 0.5 * (raw.0[j] - raw.0[i]);
        let w = 0.5 * (raw.1[j] + raw.1[i]);
        nodes[i] = -x;
        nodes[j] = x;
        weights[i] = w;
        weights[j] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
        weights[n / 2] = raw.1[n / 2];
    }
    normalize(&mut weights);
    Ok(QuadratureRule {
        nodes,
        weights,
        weight_kind: WeightKind::StandardNormal,
    })
}

/// Gauss rule with `n` nodes for the density `u^α e^{-u} / Γ(α+1)` on `(0, ∞)`.
pub fn gauss_laguerre_generalized(n: usize, alpha: f64) -> Result<QuadratureRule> {
    if n == 0 || n > MAX_ORDER {
        return Err(Error::OrderOutOfRange(n));
    }
    gauss_laguerre_any(n, alpha)
}

fn gauss_laguerre_any(n: usize, alpha: f64) -> Result<QuadratureRule> {
    if !(alpha > -1.0) || !alpha.is_finite() {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    let diag: Vec<f64> = (0..n).map(|k| 2.0 * k as f64 + alpha + 1.0).collect();
    let off: Vec<f64> = (1..n).map(|k| (k as f64 * (k as f64 + alpha)).sqrt()).collect();
    let (nodes, mut weights) = golub_welsch(&diag, &off)?;
    normalize(&mut weights);
    Ok(QuadratureRule {
        nodes,
        weights,
        weight_kind: WeightKind::GeneralizedLaguerre { alpha },
    })
}

fn normalize(weights: &mut [f64]) {
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
}

/// Values of the orthonormal recurrence at `x`, kept in scaled form so that
/// high orders do not overflow. True values are `stored · e^{log_scale}`.
struct Recurrence {
    p_n: f64,
    dp_n: f64,
    sum_sq: f64,
    log_scale: f64,
}

fn recurrence(diag: &[f64], off: &[f64], x: f64) -> Recurrence {
    const BIG: f64 = 1e100;
    let n = diag.len();
    let (mut p_prev, mut p) = (0.0, 1.0);
    let (mut dp_prev, mut dp) = (0.0, 0.0);
    let mut sum_sq = 0.0;
    let mut log_scale = 0.0;
    for k in 0..n {
        sum_sq += p * p;
        let b_k = if k == 0 { 0.0 } else { off[k - 1] };
        // b_n only scales p_n, which is used solely through the ratio p_n / p_n'.
        let b_next = if k + 1 < n { off[k] } else { 1.0 };
        let p_next = ((x - diag[k]) * p - b_k * p_prev) / b_next;
        let dp_next = ((x - diag[k]) * dp + p - b_k * dp_prev) / b_next;
        p_prev = p;
        p = p_next;
        dp_prev = dp;
        dp = dp_next;
        if p.abs() > BIG || dp.abs() > BIG {
            p /= BIG;
            p_prev /= BIG;
            dp /= BIG;
            dp_prev /= BIG;
            sum_sq /= BIG * BIG;
            log_scale += BIG.ln();
        }
    }
    Recurrence {
        p_n: p,
        dp_n: dp,
        sum_sq,
        log_scale,
    }
}

/// Eigenvalues, ascending, of the symmetric tridiagonal matrix with the
/// given diagonal and off-diagonal, by implicit QL with Wilkinson shifts.
fn tridiagonal_eigenvalues(diag: &[f64], off: &[f64]) -> Result<Vec<f64>> {
    const MAX_ITER: usize = 60;
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = off.to_vec();
    e.push(0.0);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_ITER {
                return Err(Error::NoConvergence {
                    sweeps: iter,
                    off_norm: e[l].abs(),
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Nodes (ascending) and Christoffel weights for a probability measure with
/// the given Jacobi matrix.
fn golub_welsch(diag: &[f64], off: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut nodes = tridiagonal_eigenvalues(diag, off)?;

    let mut weights = Vec::with_capacity(diag.len());
    for x in nodes.iter_mut() {
        for _ in 0..3 {
            let r = recurrence(diag, off, *x);
            if r.dp_n == 0.0 {
                break;
            }
            let step = r.p_n / r.dp_n;
            *x -= step;
            if step.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
        let r = recurrence(diag, off, *x);
        weights.push((-(r.sum_sq.ln() + 2.0 * r.log_scale)).exp());
    }
    Ok((nodes, weights))
}

/// Number of Genz-Keister levels backed by the embedded table.
pub const GENZ_KEISTER_TABLE_LEVELS: usize = genz_keister_table::LEVELS.len();

/// Genz-Keister rule on `level` (1, 3, 9, 19, 35 points), continuing with
/// Gauss-Hermite rules once the table is exhausted.
pub fn genz_keister(level: usize) -> Result<QuadratureRule> {
    if level >= GENZ_KEISTER_TABLE_LEVELS {
        return gauss_hermite_any(RuleSequence::GenzKeister.size(level));
    }
    let positive = genz_keister_table::POSITIVE_NODES;
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    for &(idx, w) in genz_keister_table::LEVELS[level] {
        let x = positive[idx];
        pairs.push((x, w));
        if x != 0.0 {
            pairs.push((-x, w));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(QuadratureRule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
        weight_kind: WeightKind::StandardNormal,
    })
}

/// A growth schedule of univariate rules `Q_0, Q_1, …`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RuleSequence {
    /// Gauss-Hermite with `N_j = 2j + 1`.
    GaussHermite,
    /// Nested Genz-Keister, then Gauss-Hermite.
    GenzKeister,
    /// Generalized Gauss-Laguerre with `N_j = 2^{j+1} − 1`.
    GeneralizedLaguerre { alpha: f64 },
    /// Gauss-Hermite with explicit sizes `N_j` (e.g. `[1, 3, 5]`).
    HermiteSizes(&'static [usize]),
}

impl RuleSequence {
    pub fn size(&self, level: usize) -> usize {
        match self {
            RuleSequence::GaussHermite => 2 * level + 1,
            RuleSequence::GenzKeister => {
                const TABLE: [usize; 5] = [1, 3, 9, 19, 35];
                if level < TABLE.len() {
                    TABLE[level]
                } else {
                    (TABLE.len()..=level).fold(TABLE[TABLE.len() - 1], |n, _| 2 * n + 1)
                }
            }
            RuleSequence::GeneralizedLaguerre { .. } => (2usize << level) - 1,
            RuleSequence::HermiteSizes(sizes) => sizes[level],
        }
    }

    /// Highest level available, if the sequence is finite.
    pub fn max_level(&self) -> Option<usize> {
        match self {
            RuleSequence::HermiteSizes(sizes) => Some(sizes.len() - 1),
            _ => None,
        }
    }

    /// The rule on `level`, memoized process-wide.
    pub fn rule(&self, level: usize) -> Result<Arc<QuadratureRule>> {
        let key = self.cache_key(level);
        if let Some(rule) = cache().read().expect("rule cache poisoned").get(&key) {
            return Ok(Arc::clone(rule));
        }
        let rule = Arc::new(match *self {
            RuleSequence::GaussHermite | RuleSequence::HermiteSizes(_) => {
                gauss_hermite_any(self.size(level))?
            }
            RuleSequence::GenzKeister => genz_keister(level)?,
            RuleSequence::GeneralizedLaguerre { alpha } => {
                gauss_laguerre_any(self.size(level), alpha)?
            }
        });
        let mut guard = cache().write().expect("rule cache poisoned");
        Ok(Arc::clone(guard.entry(key).or_insert(rule)))
    }

    fn cache_key(&self, level: usize) -> CacheKey {
        match *self {
            RuleSequence::GaussHermite | RuleSequence::HermiteSizes(_) => {
                CacheKey::Hermite(self.size(level))
            }
            RuleSequence::GenzKeister => CacheKey::GenzKeister(level),
            RuleSequence::GeneralizedLaguerre { alpha } => {
                CacheKey::Laguerre(self.size(level), alpha.to_bits())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum CacheKey {
    Hermite(usize),
    GenzKeister(usize),
    Laguerre(usize, u64),
}

fn cache() -> &'static RwLock<HashMap<CacheKey, Arc<QuadratureRule>>> {
    static CACHE: OnceLock<RwLock<HashMap<CacheKey, Arc<QuadratureRule>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn normal_moment(k: usize) -> f64 {
        if k % 2 == 1 {
            0.0
        } else {
            (1..k).step_by(2).map(|j| j as f64).product()
        }
    }

    fn assert_rule(rule: &QuadratureRule, nodes: &[f64], weights: &[f64]) {
        assert_eq!(rule.len(), nodes.len());
        for i in 0..nodes.len() {
            assert!((rule.nodes[i] - nodes[i]).abs() < 1e-14, "{:?}", rule.nodes);
            assert!((rule.weights[i] - weights[i]).abs() < 1e-14, "{:?}", rule.weights);
        }
    }

    #[test]
    fn hermite_small_orders() {
        assert_rule(&gauss_hermite(1).unwrap(), &[0.0], &[1.0]);
        assert_rule(&gauss_hermite(2).unwrap(), &[-1.0, 1.0], &[0.5, 0.5]);
        let s3 = 3f64.sqrt();
        assert_rule(
            &gauss_hermite(3).unwrap(),
            &[-s3, 0.0, s3],
            &[1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
        );
    }

    #[test]
    fn order_guards() {
        assert!(matches!(gauss_hermite(0), Err(Error::OrderOutOfRange(0))));
        assert!(matches!(gauss_hermite(201), Err(Error::OrderOutOfRange(201))));
        assert!(matches!(
            gauss_laguerre_generalized(3, -1.0),
            Err(Error::AlphaOutOfRange(_))
        ));
    }

    #[test]
    fn laguerre_closed_forms() {
        let r = gauss_laguerre_generalized(1, 0.7).unwrap();
        assert_rule(&r, &[1.7], &[1.0]);
        let s2 = 2f64.sqrt();
        let r = gauss_laguerre_generalized(2, 0.0).unwrap();
        assert_rule(&r, &[2.0 - s2, 2.0 + s2], &[(2.0 + s2) / 4.0, (2.0 - s2) / 4.0]);
    }

    #[test]
    fn laguerre_gamma_moments() {
        let alpha = 1.5;
        let r = gauss_laguerre_generalized(10, alpha).unwrap();
        let mut exact = 1.0;
        for k in 0..20 {
            if k > 0 {
                exact *= alpha + k as f64;
            }
            let q = r.integrate(|u| u.powi(k as i32));
            assert!((q - exact).abs() <= 1e-10 * exact, "k={k}");
        }
    }

    #[test]
    fn genz_keister_low_levels() {
        assert_rule(&genz_keister(0).unwrap(), &[0.0], &[1.0]);
        let s3 = 3f64.sqrt();
        assert_rule(
            &genz_keister(1).unwrap(),
            &[-s3, 0.0, s3],
            &[1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
        );
    }

    #[test]
    fn genz_keister_level2_degree15_against_wide_hermite() {
        let gk = genz_keister(2).unwrap();
        assert_eq!(gk.len(), 9);
        let oracle = gauss_hermite(60).unwrap();
        for k in 0..=15 {
            let a = gk.integrate(|x| x.powi(k));
            let b = oracle.integrate(|x| x.powi(k));
            assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0), "k={k}: {a} {b}");
        }
        let k16 = gk.integrate(|x| x.powi(16));
        assert!((k16 - normal_moment(16)).abs() > 1.0);
    }

    #[test]
    fn genz_keister_falls_back_to_hermite() {
        let r = genz_keister(5).unwrap();
        assert_eq!(r.len(), 71);
        assert_eq!(r, gauss_hermite_any(71).unwrap());
        assert_eq!(RuleSequence::GenzKeister.size(6), 143);
    }

    #[test]
    fn sequences_strictly_increase() {
        let seqs = [
            RuleSequence::GaussHermite,
            RuleSequence::GenzKeister,
            RuleSequence::GeneralizedLaguerre { alpha: 0.5 },
        ];
        for s in seqs {
            assert_eq!(s.size(0), 1);
            let sizes: Vec<usize> = (0..8).map(|j| s.size(j)).collect();
            assert!(sizes.windows(2).all(|w| w[0] < w[1]));
            for j in 0..4 {
                assert_eq!(s.rule(j).unwrap().len(), s.size(j));
            }
        }
    }

    #[test]
    fn cached_rule_is_shared() {
        let a = RuleSequence::GaussHermite.rule(3).unwrap();
        let b = RuleSequence::GaussHermite.rule(3).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
    }

    #[test]
    fn large_hermite_rule_is_finite() {
        let r = gauss_hermite(200).unwrap();
        assert!(r.weights.iter().all(|w| w.is_finite() && *w > 0.0));
        assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-13);
        assert!((r.integrate(|x| x * x) - 1.0).abs() < 1e-12);
    }
}
