//! Cardinality-constrained maximization of a monotone set function.
//!
//! Three strategies over the same [`SetObjective`] handle:
//! - [`greedy_select`]: adds the element with the largest marginal gain at each step.
//! - [`lazy_greedy_select`]: same selection on submodular objectives, re-evaluating only
//!   candidates whose cached (stale) gain could still be the maximum.
//! - [`exhaustive_select`]: enumerates every `k`-subset; the reference optimum.
//!
//! Ties are always broken toward the smallest element id.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use num::Zero;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mass::Mass;

/// A set function evaluated incrementally along chains `∅ ⊂ {a} ⊂ {a, b} ⊂ …`.
pub trait SetObjective: Sync {
    type Value: Mass;
    /// Cached state for an already-evaluated set.
    type Prefix: Clone + Send + Sync;

    fn universe(&self) -> Vec<usize>;

    /// State and value of the empty set.
    fn empty(&self) -> Result<(Self::Prefix, Self::Value)>;

    /// State and value of `prefix ∪ {element}`.
    fn extend(&self, prefix: &Self::Prefix, element: usize) -> Result<(Self::Prefix, Self::Value)>;

    /// Whether the objective is known to be monotone submodular, so that greedy selection
    /// carries the `1 − 1/e` guarantee.
    fn is_submodular(&self) -> bool {
        false
    }

    fn evaluate(&self, set: &[usize]) -> Result<Self::Value> {
        let (mut prefix, mut value) = self.empty()?;
        for &e in set {
            (prefix, value) = self.extend(&prefix, e)?;
        }
        Ok(value)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMethod {
    Greedy,
    LazyGreedy,
    Exhaustive,
}

#[derive(Clone, Copy, Debug)]
pub struct SelectorConfig {
    /// Keep adding elements after the best marginal gain drops to zero.
    pub pad_to_k: bool,
    /// Maximum number of `k`-subsets the exhaustive search may enumerate.
    pub exhaustive_cap: u128,
    /// Evaluate the candidates of one greedy step concurrently.
    pub parallel: bool,
}

impl Default for SelectorConfig {
    fn default() -> Self {
        SelectorConfig {
            pad_to_k: false,
            exhaustive_cap: 1_000_000,
            parallel: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchReport<V> {
    pub selected: Vec<usize>,
    /// Marginal gain of each selected element, in selection order.
    pub gains: Vec<V>,
    /// Objective value of each selected prefix.
    pub f_trajectory: Vec<V>,
    pub evaluations: u64,
    pub method: SelectionMethod,
    /// True when the objective is submodular and the method is greedy or lazy greedy
    /// (or exhaustive, which is optimal).
    pub guarantee: bool,
    /// Lazy greedy only: re-evaluations whose gain exceeded the cached bound. Nonzero
    /// means the objective is not submodular.
    pub stale_bound_violations: u64,
    /// Selection stopped before `k` because no candidate had a positive gain.
    pub early_stopped: bool,
}

impl<V: Mass> SearchReport<V> {
    pub fn value(&self) -> V {
        self.f_trajectory.last().cloned().unwrap_or_else(V::zero)
    }

    pub fn gains_nonincreasing(&self, tol: f64) -> bool {
        self.gains
            .windows(2)
            .all(|w| w[1] <= w[0] || w[1].approx_eq(&w[0], tol))
    }
}

fn sorted_universe(universe: &[usize]) -> Vec<usize> {
    let mut u = universe.to_vec();
    u.sort_unstable();
    u.dedup();
    u
}

/// Greedy selection of up to `k` elements.
pub fn greedy_select<O: SetObjective>(
    objective: &O,
    universe: &[usize],
    k: usize,
    config: &SelectorConfig,
) -> Result<SearchReport<O::Value>> {
    let universe = sorted_universe(universe);
    let k = k.min(universe.len());
    let (mut prefix, mut current) = objective.empty()?;
    let mut report = SearchReport {
        selected: Vec::with_capacity(k),
        gains: Vec::with_capacity(k),
        f_trajectory: Vec::with_capacity(k),
        evaluations: 0,
        method: SelectionMethod::Greedy,
        guarantee: objective.is_submodular(),
        stale_bound_violations: 0,
        early_stopped: false,
    };
    for _ in 0..k {
        let candidates: Vec<usize> = universe
            .iter()
            .copied()
            .filter(|c| !report.selected.contains(c))
            .collect();
        let evaluated: Vec<_> = if config.parallel {
            candidates
                .par_iter()
                .map(|&c| objective.extend(&prefix, c))
                .collect::<Result<_>>()?
        } else {
            candidates
                .iter()
                .map(|&c| objective.extend(&prefix, c))
                .collect::<Result<_>>()?
        };
        report.evaluations += candidates.len() as u64;

        // Candidates are in ascending id order; strict comparison keeps the smallest id.
        let mut best: Option<(usize, O::Value)> = None;
        for (i, (_, value)) in evaluated.iter().enumerate() {
            let gain = value.clone() - &current;
            if best.as_ref().is_none_or(|(_, g)| gain > *g) {
                best = Some((i, gain));
            }
        }
        let Some((i, gain)) = best else { break };
        if !(gain > O::Value::zero()) && !config.pad_to_k {
            report.early_stopped = true;
            break;
        }
        let (next_prefix, value) = evaluated.into_iter().nth(i).expect("index in range");
        report.selected.push(candidates[i]);
        report.gains.push(gain);
        report.f_trajectory.push(value.clone());
        prefix = next_prefix;
        current = value;
    }
    Ok(report)
}

struct HeapEntry<V> {
    /// `None` means never evaluated (an infinite bound).
    bound: Option<V>,
    id: usize,
    evaluated_at_step: Option<usize>,
}

impl<V: PartialOrd> PartialEq for HeapEntry<V> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<V: PartialOrd> Eq for HeapEntry<V> {}

impl<V: PartialOrd> PartialOrd for HeapEntry<V> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<V: PartialOrd> Ord for HeapEntry<V> {
    // Max-heap order: larger bound first, then smaller id.
    fn cmp(&self, other: &Self) -> Ordering {
        let by_bound = match (&self.bound, &other.bound) {
            (None, None) => Ordering::Equal,
            (None, Some(_)) => Ordering::Greater,
            (Some(_), None) => Ordering::Less,
            (Some(a), Some(b)) => a.partial_cmp(b).unwrap_or(Ordering::Equal),
        };
        by_bound.then_with(|| other.id.cmp(&self.id))
    }
}

/// Lazy (accelerated) greedy selection. On submodular objectives it selects exactly what
/// [`greedy_select`] selects, with at most as many evaluations.
pub fn lazy_greedy_select<O: SetObjective>(
    objective: &O,
    universe: &[usize],
    k: usize,
    config: &SelectorConfig,
) -> Result<SearchReport<O::Value>> {
    let universe = sorted_universe(universe);
    let k = k.min(universe.len());
    let (mut prefix, mut current) = objective.empty()?;
    let mut report = SearchReport {
        selected: Vec::with_capacity(k),
        gains: Vec::with_capacity(k),
        f_trajectory: Vec::with_capacity(k),
        evaluations: 0,
        method: SelectionMethod::LazyGreedy,
        guarantee: objective.is_submodular(),
        stale_bound_violations: 0,
        early_stopped: false,
    };
    let mut heap: BinaryHeap<HeapEntry<O::Value>> = universe
        .iter()
        .map(|&id| HeapEntry {
            bound: None,
            id,
            evaluated_at_step: None,
        })
        .collect();

    'steps: for step in 0..k {
        let mut fresh: HashMap<usize, (O::Prefix, O::Value)> = HashMap::new();
        loop {
            let Some(top) = heap.pop() else { break 'steps };
            if top.evaluated_at_step == Some(step) {
                let gain = top.bound.expect("fresh entries carry a gain");
                if !(gain > O::Value::zero()) && !config.pad_to_k {
                    report.early_stopped = true;
                    break 'steps;
                }
                let (next_prefix, value) = fresh.remove(&top.id).expect("fresh entry cached");
                report.selected.push(top.id);
                report.gains.push(gain);
                report.f_trajectory.push(value.clone());
                prefix = next_prefix;
                current = value;
                break;
            }
            let (p, value) = objective.extend(&prefix, top.id)?;
            report.evaluations += 1;
            let gain = value.clone() - &current;
            if let Some(old) = &top.bound {
                if gain > *old && !gain.approx_eq(old, 1e-12) {
                    report.stale_bound_violations += 1;
                }
            }
            fresh.insert(top.id, (p, value));
            heap.push(HeapEntry {
                bound: Some(gain),
                id: top.id,
                evaluated_at_step: Some(step),
            });
        }
    }
    Ok(report)
}

/// Binomial coefficient, saturating.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Exact maximizer over all `k`-subsets; the lexicographically smallest optimum wins ties.
pub fn exhaustive_select<O: SetObjective>(
    objective: &O,
    universe: &[usize],
    k: usize,
    config: &SelectorConfig,
) -> Result<SearchReport<O::Value>> {
    let universe = sorted_universe(universe);
    let k = k.min(universe.len());
    let subsets = binomial(universe.len(), k);
    if subsets > config.exhaustive_cap {
        return Err(Error::capacity("exhaustive k-subsets", subsets, config.exhaustive_cap));
    }

    struct Search<'a, O: SetObjective> {
        objective: &'a O,
        universe: &'a [usize],
        k: usize,
        evaluations: u64,
        chosen: Vec<usize>,
        chain: Vec<O::Value>,
        best: Option<(Vec<usize>, Vec<O::Value>)>,
    }

    impl<O: SetObjective> Search<'_, O> {
        fn dfs(&mut self, start: usize, prefix: &O::Prefix) -> Result<()> {
            if self.chosen.len() == self.k {
                let value = self.chain.last().cloned().unwrap_or_else(O::Value::zero);
                let better = match &self.best {
                    None => true,
                    Some((_, chain)) => value > chain.last().cloned().unwrap_or_else(O::Value::zero),
                };
                if better {
                    self.best = Some((self.chosen.clone(), self.chain.clone()));
                }
                return Ok(());
            }
            let remaining = self.k - self.chosen.len();
            for i in start..=self.universe.len() - remaining {
                let e = self.universe[i];
                let (next, value) = self.objective.extend(prefix, e)?;
                self.evaluations += 1;
                self.chosen.push(e);
                self.chain.push(value);
                self.dfs(i + 1, &next)?;
                self.chosen.pop();
                self.chain.pop();
            }
            Ok(())
        }
    }

    let (empty_prefix, empty_value) = objective.empty()?;
    let mut search = Search {
        objective,
        universe: &universe,
        k,
        evaluations: 0,
        chosen: Vec::with_capacity(k),
        chain: Vec::with_capacity(k),
        best: None,
    };
    search.dfs(0, &empty_prefix)?;
    let (selected, f_trajectory) = search.best.unwrap_or_default();
    let mut previous = empty_value;
    let gains = f_trajectory
        .iter()
        .map(|v| {
            let g = v.clone() - &previous;
            previous = v.clone();
            g
        })
        .collect();
    Ok(SearchReport {
        selected,
        gains,
        f_trajectory,
        evaluations: search.evaluations,
        method: SelectionMethod::Exhaustive,
        guarantee: true,
        stale_bound_violations: 0,
        early_stopped: false,
    })
}

/// Dispatches on `method`.
pub fn select<O: SetObjective>(
    objective: &O,
    universe: &[usize],
    k: usize,
    method: SelectionMethod,
    config: &SelectorConfig,
) -> Result<SearchReport<O::Value>> {
    match method {
        SelectionMethod::Greedy => greedy_select(objective, universe, k, config),
        SelectionMethod::LazyGreedy => lazy_greedy_select(objective, universe, k, config),
        SelectionMethod::Exhaustive => exhaustive_select(objective, universe, k, config),
    }
}
