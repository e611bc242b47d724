use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::fmt;
use std::io::Write;

use super::{check_dims, delta_tensor_cached, EvalCounter, MultiIndex, TensorCache};
use crate::error::{Error, Result};
use crate::rules1d::RuleSequence;

/// Default cap on integrand evaluations.
pub const DEFAULT_MAX_EVALS: usize = 10_000_000;

/// Double-word accumulator, so that `η` survives long chains of additions and
/// removals without drifting away from the exact sum of its terms.
#[derive(Debug, Clone, Copy, Default)]
struct TwoSum {
    hi: f64,
    lo: f64,
}

impl TwoSum {
    fn add(&mut self, x: f64) {
        let s = self.hi + x;
        let bp = s - self.hi;
        let err = (self.hi - (s - bp)) + (x - bp);
        self.hi = s;
        self.lo += err;
    }

    fn value(&self) -> f64 {
        self.hi + self.lo
    }
}

/// One member of the active set.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveEntry {
    pub delta: f64,
    pub g: f64,
}

/// Snapshot of an adaptive run: the old set `𝒪`, the active set `𝒜`, the
/// running value `Σ Δ_α f` over `𝒪 ∪ 𝒜` and the estimator `η = Σ_𝒜 g_α`.
#[derive(Clone)]
pub struct AdaptiveState {
    pub dim: usize,
    pub old: BTreeMap<MultiIndex, f64>,
    pub active: BTreeMap<MultiIndex, ActiveEntry>,
    pub value: f64,
    pub eta: f64,
    /// Evaluations required by the difference formulas, repeats included.
    pub evaluations: usize,
    /// Integrand calls actually made (tensor-rule values are memoized).
    pub integrand_calls: usize,
    pub distinct_points: Option<usize>,
    pub iterations: usize,
    value_acc: TwoSum,
    eta_acc: TwoSum,
    heap: BinaryHeap<HeapItem>,
}

/// Summarizes the index sets by their sizes; they can hold many thousands
/// of entries.
impl fmt::Debug for AdaptiveState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AdaptiveState")
            .field("dim", &self.dim)
            .field("old", &self.old.len())
            .field("active", &self.active.len())
            .field("value", &self.value)
            .field("eta", &self.eta)
            .field("evaluations", &self.evaluations)
            .field("integrand_calls", &self.integrand_calls)
            .field("distinct_points", &self.distinct_points)
            .field("iterations", &self.iterations)
            .finish()
    }
}

#[derive(Debug, Clone)]
struct HeapItem {
    g: f64,
    alpha: MultiIndex,
}

impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HeapItem {}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapItem {
    // Largest g first; among equal g the lexicographically smallest index.
    fn cmp(&self, other: &Self) -> Ordering {
        self.g
            .total_cmp(&other.g)
            .then_with(|| other.alpha.cmp(&self.alpha))
    }
}

impl AdaptiveState {
    fn empty(dim: usize) -> Self {
        Self {
            dim,
            old: BTreeMap::new(),
            active: BTreeMap::new(),
            value: 0.0,
            eta: 0.0,
            evaluations: 0,
            integrand_calls: 0,
            distinct_points: None,
            iterations: 0,
            value_acc: TwoSum::default(),
            eta_acc: TwoSum::default(),
            heap: BinaryHeap::new(),
        }
    }

    fn push_active(&mut self, alpha: MultiIndex, delta: f64) {
        let g = delta.abs();
        self.value_acc.add(delta);
        self.eta_acc.add(g);
        self.value = self.value_acc.value();
        self.eta = self.eta_acc.value();
        self.heap.push(HeapItem {
            g,
            alpha: alpha.clone(),
        });
        self.active.insert(alpha, ActiveEntry { delta, g });
    }

    /// Active index with the largest `g_α` (ties: lexicographically smallest).
    pub fn select(&self) -> Option<&MultiIndex> {
        self.heap.peek().map(|h| &h.alpha)
    }

    /// Forward neighbours of `alpha` whose backward neighbours all lie in the
    /// old set, assuming `alpha` itself has just moved there. Children beyond
    /// the last level of a finite sequence are skipped.
    pub fn admissible_children(
        old: &BTreeSet<MultiIndex>,
        alpha: &MultiIndex,
        seqs: &[RuleSequence],
    ) -> Vec<MultiIndex> {
        let in_old = |m: &MultiIndex| m == alpha || old.contains(m);
        (0..alpha.len())
            .filter(|&k| seqs[k].max_level().is_none_or(|l| (alpha[k] as usize) < l))
            .map(|k| alpha.forward(k))
            .filter(|beta| (0..beta.len()).all(|q| beta.backward(q).is_none_or(|p| in_old(&p))))
            .collect()
    }

    fn old_keys(&self) -> BTreeSet<MultiIndex> {
        self.old.keys().cloned().collect()
    }

    /// Checks the structural invariants of the run; returns a description of
    /// the first violation found.
    pub fn audit(&self) -> std::result::Result<(), String> {
        for alpha in self.active.keys() {
            if self.old.contains_key(alpha) {
                return Err(format!("{alpha} is both old and active"));
            }
        }
        for alpha in self.old.keys().chain(self.active.keys()) {
            for q in 0..alpha.len() {
                if let Some(parent) = alpha.backward(q) {
                    if !self.old.contains_key(&parent) {
                        return Err(format!("{alpha} has parent {parent} outside the old set"));
                    }
                }
            }
        }
        for (alpha, e) in &self.active {
            if !(e.g >= 0.0) || e.g != e.delta.abs() {
                return Err(format!("{alpha} has inconsistent g = {}", e.g));
            }
        }
        let exact: f64 = self.active.values().map(|e| e.g).sum();
        if (self.eta - exact).abs() > 1e-12 * exact.abs().max(f64::MIN_POSITIVE) {
            return Err(format!("eta = {:e} but active sum = {exact:e}", self.eta));
        }
        Ok(())
    }
}

/// Dimension-adaptive sparse-grid quadrature.
///
/// Repeatedly moves the active index with the largest `|Δ_α f|` to the old
/// set and activates its admissible forward neighbours, until the sum of
/// active contributions `η` drops to `tol`. At least one expansion of the
/// root always happens.
pub struct AdaptiveQuadrature<'a> {
    pub tol: f64,
    pub max_evals: usize,
    pub track_distinct: bool,
    pub audit: bool,
    trace: Option<&'a mut dyn Write>,
}

impl<'a> AdaptiveQuadrature<'a> {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            max_evals: DEFAULT_MAX_EVALS,
            track_distinct: false,
            audit: false,
            trace: None,
        }
    }

    pub fn max_evals(mut self, n: usize) -> Self {
        self.max_evals = n;
        self
    }

    pub fn track_distinct(mut self, on: bool) -> Self {
        self.track_distinct = on;
        self
    }

    /// Run [`AdaptiveState::audit`] after every iteration and fail loudly.
    pub fn audit(mut self, on: bool) -> Self {
        self.audit = on;
        self
    }

    /// One line `α | g_α | evals | η` per expansion.
    pub fn trace(mut self, sink: &'a mut dyn Write) -> Self {
        self.trace = Some(sink);
        self
    }

    pub fn run<F>(&mut self, f: &F, seqs: &[RuleSequence]) -> Result<AdaptiveState>
    where
        F: Fn(&[f64]) -> f64 + ?Sized,
    {
        if !(self.tol >= 0.0) {
            return Err(Error::OutOfDomain {
                what: "tolerance",
                value: self.tol,
            });
        }
        let dim = seqs.len();
        let mut counter = EvalCounter::new(self.track_distinct);
        let mut state = AdaptiveState::empty(dim);
        let root = MultiIndex::zeros(dim);
        check_dims(&root, seqs)?;
        let mut cache = TensorCache::new();
        let d0 = delta_tensor_cached(f, &root, seqs, &mut counter, &mut cache)?;
        state.push_active(root, d0);
        let mut old_keys = BTreeSet::new();

        let mut first = true;
        while first || state.eta > self.tol {
            first = false;
            let Some(HeapItem { alpha, .. }) = state.heap.pop() else {
                break;
            };
            let entry = state.active.remove(&alpha).expect("heap entry is active");
            state.eta_acc.add(-entry.g);
            let children = AdaptiveState::admissible_children(&old_keys, &alpha, seqs);
            old_keys.insert(alpha.clone());
            state.old.insert(alpha.clone(), entry.delta);
            for beta in children {
                let delta = delta_tensor_cached(f, &beta, seqs, &mut counter, &mut cache)?;
                state.push_active(beta, delta);
            }
            state.eta = state.eta_acc.value();
            state.iterations += 1;
            state.evaluations = counter.total;
            state.integrand_calls = counter.calls;
            state.distinct_points = counter.distinct();

            if let Some(sink) = self.trace.as_mut() {
                writeln!(sink, "{alpha} | {:.6e} | {} | {:.6e}", entry.g, counter.total, state.eta)?;
            }
            if self.audit {
                if let Err(msg) = state.audit() {
                    panic!("adaptive sparse grid invariant violated: {msg}");
                }
            }
            if counter.total > self.max_evals {
                return Err(Error::BudgetExhausted {
                    max_evals: self.max_evals,
                    state: Box::new(state),
                });
            }
        }
        state.evaluations = counter.total;
        state.integrand_calls = counter.calls;
        state.distinct_points = counter.distinct();
        debug_assert_eq!(old_keys, state.old_keys());
        Ok(state)
    }
}

/// Adaptive quadrature with default options; returns the estimate and the
/// total number of integrand evaluations.
pub fn adaptive_quadrature<F>(
    f: &F,
    tol: f64,
    seqs: &[RuleSequence],
    max_evals: usize,
) -> Result<(f64, usize)>
where
    F: Fn(&[f64]) -> f64 + ?Sized,
{
    let state = AdaptiveQuadrature::new(tol).max_evals(max_evals).run(f, seqs)?;
    Ok((state.value, state.evaluations))
}
