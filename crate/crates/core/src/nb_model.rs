//! The naive-Bayes feature-cross objective.
//!
//! Each column carries its two label-conditional measures and the cached score law of its
//! log-likelihood ratio. `F(A) = 2·auc*(A) − 1` is evaluated by convolving the cached laws
//! of the columns in `A`; [`NbObjective::auc_star_exact`] is the brute-force oracle that
//! builds the product measures explicitly.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::mass::{Exact, Mass};
use crate::measures::{commutator_tv_capped, Measure, ProductMeasure};
use crate::score_dist::{AucValue, ConvolveConfig, ScoreDistribution};
use crate::selector::SetObjective;

/// Default cap on `|V_A|²` for the enumeration oracle.
pub const DEFAULT_ORACLE_PAIR_CAP: u128 = 10_000_000;

/// Label-conditional measures `(P₁, P₀)` of one column on a shared outcome set.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalPair<M: Mass> {
    pub p1: Measure<M>,
    pub p0: Measure<M>,
}

impl<M: Mass> ConditionalPair<M> {
    pub fn new(p1: Measure<M>, p0: Measure<M>) -> Result<Self> {
        p1.check_same_domain(&p0)?;
        Ok(ConditionalPair { p1, p0 })
    }

    pub fn len(&self) -> usize {
        self.p1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p1.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct ColumnModel<M: Mass> {
    pub id: usize,
    pub name: String,
    /// Display names of the outcomes, aligned with the measures.
    pub vocabulary: Vec<String>,
    pub pair: ConditionalPair<M>,
    score_dist: ScoreDistribution<M>,
}

impl<M: Mass> ColumnModel<M> {
    pub fn new(id: usize, name: impl Into<String>, vocabulary: Vec<String>, pair: ConditionalPair<M>) -> Result<Self> {
        if vocabulary.len() != pair.len() {
            return Err(Error::DomainMismatch(format!(
                "vocabulary has {} entries, measures have {}",
                vocabulary.len(),
                pair.len()
            )));
        }
        let score_dist = ScoreDistribution::from_conditional_pair(&pair.p1, &pair.p0)?;
        Ok(ColumnModel {
            id,
            name: name.into(),
            vocabulary,
            pair,
            score_dist,
        })
    }

    /// Column with generated names `c{id}` / `v0, v1, …`.
    pub fn unnamed(id: usize, pair: ConditionalPair<M>) -> Result<Self> {
        let vocabulary = (0..pair.len()).map(|i| format!("v{i}")).collect();
        Self::new(id, format!("c{id}"), vocabulary, pair)
    }

    pub fn score_dist(&self) -> &ScoreDistribution<M> {
        &self.score_dist
    }
}

/// The set function `F` over a fixed family of columns.
#[derive(Debug)]
pub struct NbObjective<M: Mass> {
    columns: BTreeMap<usize, ColumnModel<M>>,
    evals: AtomicU64,
    config: ConvolveConfig,
}

impl<M: Mass> NbObjective<M> {
    pub fn new(columns: Vec<ColumnModel<M>>, config: ConvolveConfig) -> Result<Self> {
        let mut map = BTreeMap::new();
        for c in columns {
            let id = c.id;
            if map.insert(id, c).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate column id {id}")));
            }
        }
        Ok(NbObjective {
            columns: map,
            evals: AtomicU64::new(0),
            config,
        })
    }

    /// Columns `0..n` from bare conditional pairs.
    pub fn from_pairs(pairs: Vec<ConditionalPair<M>>, config: ConvolveConfig) -> Result<Self> {
        let columns = pairs
            .into_iter()
            .enumerate()
            .map(|(i, p)| ColumnModel::unnamed(i, p))
            .collect::<Result<_>>()?;
        Self::new(columns, config)
    }

    pub fn columns(&self) -> impl Iterator<Item = &ColumnModel<M>> {
        self.columns.values()
    }

    pub fn column(&self, id: usize) -> Result<&ColumnModel<M>> {
        self.columns
            .get(&id)
            .ok_or_else(|| Error::UnknownColumn(id.to_string()))
    }

    pub fn column_ids(&self) -> Vec<usize> {
        self.columns.keys().copied().collect()
    }

    pub fn config(&self) -> &ConvolveConfig {
        &self.config
    }

    /// Number of `F` evaluations performed so far.
    pub fn eval_count(&self) -> u64 {
        self.evals.load(Ordering::Relaxed)
    }

    /// Score law of the cross over `set`, without touching the evaluation counter.
    pub fn score_dist_of(&self, set: &[usize]) -> Result<ScoreDistribution<M>> {
        let mut acc: Option<ScoreDistribution<M>> = None;
        for &id in set {
            let d = self.column(id)?.score_dist();
            acc = Some(match acc {
                None => d.clone(),
                Some(a) => a.convolve(d, &self.config)?,
            });
        }
        Ok(acc.unwrap_or_else(ScoreDistribution::identity))
    }

    /// `F(A)` with its pruning error bound.
    pub fn f_with_bound(&self, set: &[usize]) -> Result<AucValue<M>> {
        let d = self.score_dist_of(set)?;
        self.evals.fetch_add(1, Ordering::Relaxed);
        if set.is_empty() {
            return Ok(AucValue {
                value: M::zero(),
                error_bound: 0.0,
            });
        }
        Ok(d.f_value())
    }

    pub fn f_of(&self, set: &[usize]) -> Result<M> {
        Ok(self.f_with_bound(set)?.value)
    }

    /// Maximum AUC of the cross over `set`: `½ + ½·F(A)`.
    pub fn auc_star(&self, set: &[usize]) -> Result<M> {
        let f = self.f_of(set)?;
        Ok(M::half() + M::half() * f)
    }

    /// Brute-force maximum AUC in exact arithmetic, enumerating `V_A × V_A`.
    pub fn auc_star_exact(&self, set: &[usize], pair_cap: u128) -> Result<Exact> {
        let mut f1 = Vec::with_capacity(set.len());
        let mut f0 = Vec::with_capacity(set.len());
        let mut size: u128 = 1;
        for &id in set {
            let c = self.column(id)?;
            size = size.saturating_mul(c.pair.len() as u128);
            f1.push(c.pair.p1.convert::<Exact>());
            f0.push(c.pair.p0.convert::<Exact>());
        }
        let pairs = size.saturating_mul(size);
        if pairs > pair_cap {
            return Err(Error::Capacity {
                what: "oracle outcome pairs",
                required: pairs,
                cap: pair_cap,
                hint: "; use auc_star for large crosses",
            });
        }
        let p1 = ProductMeasure::new(f1).flatten(size as usize)?;
        let p0 = ProductMeasure::new(f0).flatten(size as usize)?;
        let tv = commutator_tv_capped(&p1, &p0, size as usize)?;
        Ok(Exact::half() + Exact::half() * tv)
    }
}

impl<M: Mass> SetObjective for NbObjective<M> {
    type Value = M;
    type Prefix = ScoreDistribution<M>;

    fn universe(&self) -> Vec<usize> {
        self.column_ids()
    }

    fn empty(&self) -> Result<(ScoreDistribution<M>, M)> {
        Ok((ScoreDistribution::identity(), M::zero()))
    }

    fn extend(&self, prefix: &ScoreDistribution<M>, element: usize) -> Result<(ScoreDistribution<M>, M)> {
        let d = prefix.convolve(self.column(element)?.score_dist(), &self.config)?;
        self.evals.fetch_add(1, Ordering::Relaxed);
        let f = d.f_value().value;
        Ok((d, f))
    }

    fn is_submodular(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::{BigRational, One, Signed, Zero};

    fn q(n: i64, d: i64) -> Exact {
        BigRational::new(n.into(), d.into())
    }

    fn pair(p1: &[(i64, i64)], p0: &[(i64, i64)]) -> ConditionalPair<Exact> {
        let m = |v: &[(i64, i64)]| Measure::from_masses(v.iter().map(|&(n, d)| q(n, d)).collect()).unwrap();
        ConditionalPair::new(m(p1), m(p0)).unwrap()
    }

    fn three_atom() -> ConditionalPair<Exact> {
        pair(&[(1, 2), (1, 4), (1, 4)], &[(1, 4), (1, 4), (1, 2)])
    }

    #[test]
    fn empty_set_and_separating_column() {
        let sep = pair(&[(1, 1), (0, 1)], &[(0, 1), (1, 1)]);
        let obj = NbObjective::from_pairs(vec![sep], ConvolveConfig::default()).unwrap();
        assert_eq!(obj.f_of(&[]).unwrap(), Exact::zero());
        assert_eq!(obj.auc_star(&[]).unwrap(), q(1, 2));
        assert_eq!(obj.f_of(&[0]).unwrap(), Exact::one());
        assert_eq!(obj.auc_star(&[0]).unwrap(), Exact::one());
        assert_eq!(obj.eval_count(), 4);
    }

    #[test]
    fn two_copies_of_the_three_atom_column_match_the_oracle() {
        let obj = NbObjective::from_pairs(vec![three_atom(), three_atom()], ConvolveConfig::default()).unwrap();
        let fast = obj.auc_star(&[0, 1]).unwrap();
        let slow = obj.auc_star_exact(&[0, 1], DEFAULT_ORACLE_PAIR_CAP).unwrap();
        assert_eq!(fast, slow);
        // Direct double loop over the 9 x 9 product outcomes.
        let p1 = [q(1, 2), q(1, 4), q(1, 4)];
        let p0 = [q(1, 4), q(1, 4), q(1, 2)];
        let mut acc = Exact::zero();
        for x in 0..9 {
            for y in 0..9 {
                let a = &p1[x / 3] * &p1[x % 3] * &p0[y / 3] * &p0[y % 3];
                let b = &p0[x / 3] * &p0[x % 3] * &p1[y / 3] * &p1[y % 3];
                acc += (a - b).abs();
            }
        }
        assert_eq!(slow, q(1, 2) + acc / q(4, 1));
    }

    #[test]
    fn singleton_paths_coincide() {
        let obj = NbObjective::from_pairs(vec![three_atom()], ConvolveConfig::default()).unwrap();
        assert_eq!(obj.auc_star(&[0]).unwrap(), q(21, 32));
        assert_eq!(obj.auc_star_exact(&[0], 100).unwrap(), q(21, 32));
    }

    #[test]
    fn unknown_columns_and_duplicates_are_rejected() {
        let obj = NbObjective::from_pairs(vec![three_atom()], ConvolveConfig::default()).unwrap();
        assert!(matches!(obj.f_of(&[3]), Err(Error::UnknownColumn(_))));
        let a = ColumnModel::unnamed(1, three_atom()).unwrap();
        let b = ColumnModel::unnamed(1, three_atom()).unwrap();
        assert!(NbObjective::new(vec![a, b], ConvolveConfig::default()).is_err());
    }

    #[test]
    fn oracle_cap() {
        let obj = NbObjective::from_pairs(vec![three_atom(); 3], ConvolveConfig::default()).unwrap();
        assert!(obj.auc_star_exact(&[0, 1, 2], 100).unwrap_err().is_capacity());
    }

    #[test]
    fn incremental_extension_matches_direct_evaluation() {
        let obj = NbObjective::from_pairs(
            vec![three_atom(), pair(&[(1, 3), (2, 3)], &[(1, 2), (1, 2)]), three_atom()],
            ConvolveConfig::default(),
        )
        .unwrap();
        let (p, _) = obj.empty().unwrap();
        let (p, _) = obj.extend(&p, 2).unwrap();
        let (_, v) = obj.extend(&p, 1).unwrap();
        assert_eq!(v, obj.f_of(&[1, 2]).unwrap());
    }
}
