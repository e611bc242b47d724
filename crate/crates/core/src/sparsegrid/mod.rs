//! Generalized sparse-grid quadrature built from tensor products of
//! univariate difference operators `Δ_j = Q_j − Q_{j−1}`.
//!
//! * [`delta_tensor`] evaluates one tensor difference `Δ_α f`,
//! * [`total_degree_quadrature`] sums them over `|α|₁ ≤ q`,
//! * [`AdaptiveQuadrature`] grows an admissible index set greedily by
//!   `g_α = |Δ_α f|` (old/active bookkeeping, global estimator `η`),
//! * [`interpolant_total_degree`] gives the matching sparse-grid
//!   interpolant, used as a control variate.

mod adaptive;
mod interpolant;

pub use adaptive::{adaptive_quadrature, ActiveEntry, AdaptiveQuadrature, AdaptiveState, DEFAULT_MAX_EVALS};
pub use interpolant::{interpolant_total_degree, SparseInterpolant};

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::ops::Deref;

use crate::error::{Error, Result};
use crate::rules1d::RuleSequence;

/// Level vector `α ∈ ℕ₀^d`, ordered lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn zeros(dim: usize) -> Self {
        Self(vec![0; dim])
    }

    pub fn new(entries: Vec<u32>) -> Self {
        Self(entries)
    }

    pub fn l1(&self) -> u32 {
        self.0.iter().sum()
    }

    /// `α + e_k`.
    pub fn forward(&self, k: usize) -> Self {
        let mut e = self.0.clone();
        e[k] += 1;
        Self(e)
    }

    /// `α − e_k`, if `α_k > 0`.
    pub fn backward(&self, k: usize) -> Option<Self> {
        (self.0[k] > 0).then(|| {
            let mut e = self.0.clone();
            e[k] -= 1;
            Self(e)
        })
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }
}

impl Deref for MultiIndex {
    type Target = [u32];

    fn deref(&self) -> &[u32] {
        &self.0
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        Self(v)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

/// Integrand evaluation bookkeeping.
///
/// `total` counts every evaluation the difference formulas require,
/// including repeats of the same node across different tensor rules.
/// `calls` counts actual integrand calls, which is lower when tensor-rule
/// values are memoized; `distinct` (when tracking is on) counts unique
/// physical points.
#[derive(Debug, Default, Clone)]
pub struct EvalCounter {
    pub total: usize,
    pub calls: usize,
    seen: Option<HashSet<Vec<u64>>>,
}

impl EvalCounter {
    pub fn new(track_distinct: bool) -> Self {
        Self {
            total: 0,
            calls: 0,
            seen: track_distinct.then(HashSet::new),
        }
    }

    pub fn distinct(&self) -> Option<usize> {
        self.seen.as_ref().map(HashSet::len)
    }

    fn record(&mut self, x: &[f64]) {
        self.calls += 1;
        if let Some(seen) = self.seen.as_mut() {
            seen.insert(x.iter().map(|v| v.to_bits()).collect());
        }
    }
}

/// Memoized tensor-rule values `Q_l f`, keyed by level vector.
pub type TensorCache = HashMap<Vec<u32>, f64>;

fn check_dims(alpha: &[u32], seqs: &[RuleSequence]) -> Result<()> {
    if alpha.len() != seqs.len() {
        return Err(Error::DimensionMismatch {
            expected: seqs.len(),
            got: alpha.len(),
        });
    }
    Ok(())
}

/// Full tensor-product rule `Q_{l_1} ⊗ … ⊗ Q_{l_d}` applied to `f`.
fn tensor_rule<F>(f: &F, levels: &[u32], seqs: &[RuleSequence], counter: &mut EvalCounter) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + ?Sized,
{
    let d = levels.len();
    let rules = levels
        .iter()
        .zip(seqs)
        .map(|(&l, s)| s.rule(l as usize))
        .collect::<Result<Vec<_>>>()?;
    let mut x: Vec<f64> = rules.iter().map(|r| r.nodes[0]).collect();
    // Only dimensions with more than one node need to be iterated.
    let moving: Vec<usize> = (0..d).filter(|&j| rules[j].len() > 1).collect();
    let fixed_weight: f64 = (0..d)
        .filter(|j| rules[*j].len() == 1)
        .map(|j| rules[j].weights[0])
        .product();
    counter.total += moving.iter().map(|&j| rules[j].len()).product::<usize>();
    let mut pos = vec![0usize; moving.len()];
    let mut sum = 0.0;
    loop {
        let mut w = fixed_weight;
        for (m, &j) in moving.iter().enumerate() {
            x[j] = rules[j].nodes[pos[m]];
            w *= rules[j].weights[pos[m]];
        }
        let value = f(&x);
        counter.record(&x);
        if !value.is_finite() {
            return Err(Error::NonFiniteIntegrand {
                node: x.clone(),
                value,
            });
        }
        sum += w * value;

        // odometer increment, last moving dimension fastest
        let mut m = moving.len();
        loop {
            if m == 0 {
                return Ok(sum);
            }
            m -= 1;
            pos[m] += 1;
            if pos[m] < rules[moving[m]].len() {
                break;
            }
            pos[m] = 0;
        }
    }
}

/// `(Δ_{α_1} ⊗ … ⊗ Δ_{α_d}) f`, expanded into `2^{#{α_j > 0}}` signed tensor
/// rules.
pub fn delta_tensor<F>(f: &F, alpha: &[u32], seqs: &[RuleSequence], counter: &mut EvalCounter) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + ?Sized,
{
    delta_tensor_impl(f, alpha, seqs, counter, None)
}

/// [`delta_tensor`] reusing tensor-rule values from `cache`. The counter's
/// `total` still grows as if every rule were evaluated afresh.
pub fn delta_tensor_cached<F>(
    f: &F,
    alpha: &[u32],
    seqs: &[RuleSequence],
    counter: &mut EvalCounter,
    cache: &mut TensorCache,
) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + ?Sized,
{
    delta_tensor_impl(f, alpha, seqs, counter, Some(cache))
}

fn tensor_size(levels: &[u32], seqs: &[RuleSequence]) -> usize {
    levels.iter().zip(seqs).map(|(&l, s)| s.size(l as usize)).product()
}

fn delta_tensor_impl<F>(
    f: &F,
    alpha: &[u32],
    seqs: &[RuleSequence],
    counter: &mut EvalCounter,
    mut cache: Option<&mut TensorCache>,
) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + ?Sized,
{
    check_dims(alpha, seqs)?;
    let active: Vec<usize> = (0..alpha.len()).filter(|&j| alpha[j] > 0).collect();
    let mut levels = alpha.to_vec();
    let mut total = 0.0;
    for mask in 0u64..(1u64 << active.len()) {
        for (b, &j) in active.iter().enumerate() {
            levels[j] = alpha[j] - (mask >> b & 1) as u32;
        }
        let sign = if mask.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        let q = match cache.as_deref_mut() {
            Some(c) => match c.get(&levels) {
                Some(&q) => {
                    counter.total += tensor_size(&levels, seqs);
                    q
                }
                None => {
                    let q = tensor_rule(f, &levels, seqs, counter)?;
                    c.insert(levels.clone(), q);
                    q
                }
            },
            None => tensor_rule(f, &levels, seqs, counter)?,
        };
        total += sign * q;
    }
    Ok(total)
}

/// All `α ∈ ℕ₀^d` with `|α|₁ ≤ q`, in lexicographic order.
pub fn total_degree_set(dim: usize, q: u32) -> Vec<MultiIndex> {
    fn rec(prefix: &mut Vec<u32>, dim: usize, budget: u32, out: &mut Vec<MultiIndex>) {
        if prefix.len() == dim {
            out.push(MultiIndex(prefix.clone()));
            return;
        }
        for a in 0..=budget {
            prefix.push(a);
            rec(prefix, dim, budget - a, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(dim), dim, q, &mut out);
    out
}

/// `Σ_{|α|₁ ≤ q} Δ_α f`.
pub fn total_degree_quadrature<F>(f: &F, dim: usize, q: u32, seqs: &[RuleSequence]) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + ?Sized,
{
    if seqs.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: seqs.len(),
        });
    }
    let mut counter = EvalCounter::new(false);
    let mut sum = 0.0;
    for alpha in total_degree_set(dim, q) {
        sum += delta_tensor(f, &alpha, seqs, &mut counter)?;
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gh(d: usize) -> Vec<RuleSequence> {
        vec![RuleSequence::GaussHermite; d]
    }

    #[test]
    fn delta_of_constant() {
        let one = |_: &[f64]| 1.0;
        let mut c = EvalCounter::new(false);
        assert_eq!(delta_tensor(&one, &[0, 0, 0], &gh(3), &mut c).unwrap(), 1.0);
        for alpha in [[1, 0, 0], [0, 2, 1], [3, 3, 3]] {
            let v = delta_tensor(&one, &alpha, &gh(3), &mut c).unwrap();
            assert!(v.abs() < 1e-14, "{alpha:?}: {v}");
        }
    }

    #[test]
    fn delta_of_square_hand_expansion() {
        let f = |z: &[f64]| z[0] * z[0];
        let mut c = EvalCounter::new(false);
        let d10 = delta_tensor(&f, &[1, 0], &gh(2), &mut c).unwrap();
        let d01 = delta_tensor(&f, &[0, 1], &gh(2), &mut c).unwrap();
        let d11 = delta_tensor(&f, &[1, 1], &gh(2), &mut c).unwrap();
        assert!((d10 - 1.0).abs() < 1e-14);
        assert!(d01.abs() < 1e-14);
        assert!(d11.abs() < 1e-14);
    }

    #[test]
    fn delta_counts_every_tensor_node() {
        let f = |_: &[f64]| 0.5;
        let mut c = EvalCounter::new(true);
        delta_tensor(&f, &[1, 1], &gh(2), &mut c).unwrap();
        // (3x3) - (3x1) - (1x3) + (1x1)
        assert_eq!(c.total, 9 + 3 + 3 + 1);
        assert_eq!(c.calls, 16);
        assert_eq!(c.distinct(), Some(9));

        let mut cache = TensorCache::new();
        let mut c = EvalCounter::new(false);
        let a = delta_tensor_cached(&f, &[1, 1], &gh(2), &mut c, &mut cache).unwrap();
        let b = delta_tensor_cached(&f, &[1, 1], &gh(2), &mut c, &mut cache).unwrap();
        assert_eq!(a, b);
        assert_eq!(c.total, 32);
        assert_eq!(c.calls, 16);
    }

    #[test]
    fn non_finite_values_are_reported() {
        let f = |z: &[f64]| if z[0] > 1.0 { f64::NAN } else { 0.0 };
        let mut c = EvalCounter::new(false);
        match delta_tensor(&f, &[1], &gh(1), &mut c) {
            Err(Error::NonFiniteIntegrand { node, .. }) => assert!(node[0] > 1.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dimension_mismatch() {
        let mut c = EvalCounter::new(false);
        assert!(delta_tensor(&|_: &[f64]| 1.0, &[0, 0], &gh(3), &mut c).is_err());
    }

    #[test]
    fn total_degree_constant_and_quadratic() {
        for q in 0..4 {
            let v = total_degree_quadrature(&|_: &[f64]| 2.5, 3, q, &gh(3)).unwrap();
            assert!((v - 2.5).abs() < 1e-13);
        }
        let f = |z: &[f64]| z[0] * z[0] + z[1] * z[1];
        let v = total_degree_quadrature(&f, 2, 1, &gh(2)).unwrap();
        assert!((v - 2.0).abs() < 1e-14);
    }

    #[test]
    fn total_degree_set_size() {
        // C(d + q, q)
        assert_eq!(total_degree_set(3, 2).len(), 10);
        assert_eq!(total_degree_set(5, 3).len(), 56);
        let set = total_degree_set(2, 2);
        assert!(set.windows(2).all(|w| w[0] < w[1]));
    }
}
