use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use super::total_degree_set;
use crate::error::{Error, Result};
use crate::rules1d::{QuadratureRule, RuleSequence};

/// One tensor Lagrange interpolant `c · (𝓘_{l_1} ⊗ … ⊗ 𝓘_{l_d}) f` of the
/// combination formula. Only dimensions with more than one node are stored.
#[derive(Debug, Clone)]
struct Component {
    coeff: f64,
    dims: Vec<usize>,
    levels: Vec<usize>,
    values: Vec<f64>,
}

/// Total-degree sparse-grid interpolant written as a combination of tensor
/// interpolants on the same rule sequence in every dimension.
#[derive(Debug, Clone)]
pub struct SparseInterpolant {
    dim: usize,
    rules: Vec<Arc<QuadratureRule>>,
    components: Vec<Component>,
    mean: f64,
    evaluations: usize,
}

impl SparseInterpolant {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `E[g(Z)]` for `Z ~ N(0, I)`.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Distinct integrand evaluations used to build the interpolant.
    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    /// Union of the component grids, in first-seen order.
    pub fn nodes(&self) -> Vec<Vec<f64>> {
        let mut seen = HashMap::new();
        let mut out = Vec::new();
        for c in &self.components {
            for_each_node(c, &self.rules, self.dim, |x, _| {
                let key: Vec<u64> = x.iter().map(|v| v.to_bits()).collect();
                if seen.insert(key, ()).is_none() {
                    out.push(x.to_vec());
                }
            });
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        // basis[l][j][i]: i-th Lagrange polynomial of level l at x_j
        let basis: Vec<Vec<Vec<f64>>> = self
            .rules
            .iter()
            .map(|r| x.iter().map(|&xj| lagrange(&r.nodes, xj)).collect())
            .collect();
        let mut total = 0.0;
        for c in &self.components {
            total += c.coeff * contract(c, &basis);
        }
        total
    }
}

fn lagrange(nodes: &[f64], x: f64) -> Vec<f64> {
    (0..nodes.len())
        .map(|i| {
            nodes
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != i)
                .map(|(_, &xk)| (x - xk) / (nodes[i] - xk))
                .product()
        })
        .collect()
}

fn contract(c: &Component, basis: &[Vec<Vec<f64>>]) -> f64 {
    let n = c.dims.len();
    if n == 0 {
        return c.values[0];
    }
    let factors: Vec<&[f64]> = (0..n).map(|m| basis[c.levels[m]][c.dims[m]].as_slice()).collect();
    let mut pos = vec![0usize; n];
    let mut sum = 0.0;
    for &v in &c.values {
        let w: f64 = (0..n).map(|m| factors[m][pos[m]]).product();
        sum += v * w;
        let mut m = n;
        while m > 0 {
            m -= 1;
            pos[m] += 1;
            if pos[m] < factors[m].len() {
                break;
            }
            pos[m] = 0;
        }
    }
    sum
}

/// Visits every node of a component grid with its tensor weight, last
/// stored dimension fastest (the storage order of `values`).
fn for_each_node(c: &Component, rules: &[Arc<QuadratureRule>], dim: usize, mut visit: impl FnMut(&[f64], f64)) {
    let mut x = vec![rules[0].nodes[0]; dim];
    let n = c.dims.len();
    let mut pos = vec![0usize; n];
    loop {
        let mut w = rules[0].weights[0].powi((dim - n) as i32);
        for m in 0..n {
            let r = &rules[c.levels[m]];
            x[c.dims[m]] = r.nodes[pos[m]];
            w *= r.weights[pos[m]];
        }
        visit(&x, w);
        let mut m = n;
        loop {
            if m == 0 {
                return;
            }
            m -= 1;
            pos[m] += 1;
            if pos[m] < rules[c.levels[m]].len() {
                break;
            }
            pos[m] = 0;
        }
    }
}

/// Builds `g = Σ_{|α|₁ ≤ level} ⊗_j (𝓘_{α_j} − 𝓘_{α_j − 1}) f` with `𝓘_l`
/// the Lagrange interpolant at the nodes of `seq.rule(l)`.
///
/// Level 0 must be a one-point rule. With non-nested nodes `g` need not
/// reproduce `f` on every node of the union grid; it does reproduce every
/// polynomial in the span of the component tensor spaces.
pub fn interpolant_total_degree<F>(f: &F, dim: usize, level: u32, seq: RuleSequence) -> Result<SparseInterpolant>
where
    F: Fn(&[f64]) -> f64 + ?Sized,
{
    if dim == 0 {
        return Err(Error::OutOfDomain {
            what: "interpolant dimension",
            value: 0.0,
        });
    }
    if seq.max_level().is_some_and(|m| m < level as usize) {
        return Err(Error::OutOfDomain {
            what: "interpolant level",
            value: f64::from(level),
        });
    }
    let rules = (0..=level as usize).map(|l| seq.rule(l)).collect::<Result<Vec<_>>>()?;
    if rules[0].len() != 1 {
        return Err(Error::OutOfDomain {
            what: "level-0 rule size",
            value: rules[0].len() as f64,
        });
    }

    // Combination coefficients of the tensor interpolants.
    let mut coeffs: BTreeMap<Vec<u32>, i64> = BTreeMap::new();
    for alpha in total_degree_set(dim, level) {
        let active: Vec<usize> = (0..dim).filter(|&j| alpha[j] > 0).collect();
        for mask in 0u64..(1 << active.len()) {
            let mut l = alpha.entries().to_vec();
            for (b, &j) in active.iter().enumerate() {
                l[j] -= (mask >> b & 1) as u32;
            }
            let sign = if mask.count_ones() % 2 == 0 { 1 } else { -1 };
            *coeffs.entry(l).or_insert(0) += sign;
        }
    }

    let mut cache: HashMap<Vec<u64>, f64> = HashMap::new();
    let mut components = Vec::new();
    let mut mean = 0.0;
    for (levels, c) in coeffs {
        if c == 0 {
            continue;
        }
        let dims: Vec<usize> = (0..dim).filter(|&j| levels[j] > 0).collect();
        let mut comp = Component {
            coeff: c as f64,
            levels: dims.iter().map(|&j| levels[j] as usize).collect(),
            dims,
            values: Vec::new(),
        };
        let mut values = Vec::new();
        let mut quad = 0.0;
        let mut failure = None;
        for_each_node(&comp, &rules, dim, |x, w| {
            let key: Vec<u64> = x.iter().map(|v| v.to_bits()).collect();
            let v = *cache.entry(key).or_insert_with(|| f(x));
            if !v.is_finite() && failure.is_none() {
                failure = Some((x.to_vec(), v));
            }
            values.push(v);
            quad += w * v;
        });
        if let Some((node, value)) = failure {
            return Err(Error::NonFiniteIntegrand { node, value });
        }
        comp.values = values;
        mean += comp.coeff * quad;
        components.push(comp);
    }

    Ok(SparseInterpolant {
        dim,
        rules,
        components,
        mean,
        evaluations: cache.len(),
    })
}
