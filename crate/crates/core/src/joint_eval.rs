//! Exact evaluation on an arbitrary joint distribution of columns and label.
//!
//! Nothing here assumes conditional independence: the label-conditional measures of a
//! cross are obtained by marginalizing the joint table, so these functions are the ground
//! truth for hardness instances and for measuring how far the naive-Bayes value is off.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::mass::Mass;
use crate::measures::{commutator_l1_sorted, Measure};
use crate::nb_model::{ConditionalPair, NbObjective};
use crate::score_dist::ConvolveConfig;

/// Default cap on `|V_A|²` for enumeration.
pub const DEFAULT_PAIR_CAP: u128 = 10_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JointColumn {
    pub name: String,
    pub vocabulary: Vec<String>,
}

impl JointColumn {
    pub fn new(name: impl Into<String>, vocabulary: Vec<String>) -> Self {
        JointColumn {
            name: name.into(),
            vocabulary,
        }
    }
}

/// Sparse joint law of `(X_1, …, X_n, C)`. Column ids are positions in `columns`; a row key
/// holds one vocabulary index per column.
#[derive(Clone, Debug, PartialEq)]
pub struct JointTable<M: Mass> {
    columns: Vec<JointColumn>,
    rows: BTreeMap<(Vec<u32>, u8), M>,
    label_marginals: [M; 2],
    pair_cap: u128,
}

/// Mutual information in bits, with the exact value when every log term is rational.
#[derive(Clone, Debug, PartialEq)]
pub struct MutualInformation<M> {
    pub bits: f64,
    pub exact: Option<M>,
}

/// Joint versus naive-Bayes maximum AUC of one cross.
#[derive(Clone, Debug, PartialEq)]
pub struct AssumptionGap<M> {
    pub joint: M,
    pub naive_bayes: M,
    /// `joint − naive_bayes`.
    pub gap: M,
}

impl<M: Mass> JointTable<M> {
    /// Builds a table from `(values, label, mass)` rows. Duplicate keys add up; zero-mass
    /// rows are dropped. Masses must be nonnegative and sum to one.
    pub fn new<I>(columns: Vec<JointColumn>, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, u8, M)>,
    {
        let mut map: BTreeMap<(Vec<u32>, u8), M> = BTreeMap::new();
        let mut marginals = [M::zero(), M::zero()];
        for (values, label, mass) in rows {
            if values.len() != columns.len() {
                return Err(Error::DomainMismatch(format!(
                    "row has {} values, table has {} columns",
                    values.len(),
                    columns.len()
                )));
            }
            for (v, c) in values.iter().zip(&columns) {
                if *v as usize >= c.vocabulary.len() {
                    return Err(Error::InvalidMeasure(format!(
                        "value index {v} outside the vocabulary of column {}",
                        c.name
                    )));
                }
            }
            if label > 1 {
                return Err(Error::InvalidMeasure(format!("label {label} is not binary")));
            }
            if mass.is_negative() {
                return Err(Error::InvalidMeasure(format!("negative mass {mass}")));
            }
            if mass.is_zero() {
                continue;
            }
            marginals[label as usize] = marginals[label as usize].clone() + &mass;
            let e = map.entry((values, label)).or_insert_with(M::zero);
            *e = e.clone() + mass;
        }
        let total = marginals[0].clone() + &marginals[1];
        if !total.approx_eq(&M::one(), crate::measures::FLOAT_MASS_TOL) {
            return Err(Error::InvalidMeasure(format!("joint masses sum to {total}")));
        }
        Ok(JointTable {
            columns,
            rows: map,
            label_marginals: marginals,
            pair_cap: DEFAULT_PAIR_CAP,
        })
    }

    /// The exact product table `Pr[C=1] = pi1`, `Pr[x | C=c] = Π_a P_cᵃ(x_a)`.
    pub fn from_naive_bayes(pi1: M, pairs: &[ConditionalPair<M>], max_rows: usize) -> Result<Self> {
        let columns: Vec<JointColumn> = pairs
            .iter()
            .enumerate()
            .map(|(i, p)| JointColumn::new(format!("c{i}"), (0..p.len()).map(|v| format!("v{v}")).collect()))
            .collect();
        let size = pairs
            .iter()
            .try_fold(1usize, |acc, p| acc.checked_mul(p.len()))
            .filter(|&s| s <= max_rows)
            .ok_or_else(|| {
                let required = pairs.iter().fold(1u128, |acc, p| acc.saturating_mul(p.len() as u128));
                Error::capacity("joint table rows", required, max_rows as u128)
            })?;
        let pi0 = M::one() - &pi1;
        let mut rows = Vec::new();
        let mut values = vec![0u32; pairs.len()];
        for _ in 0..size {
            let mut w1 = pi1.clone();
            let mut w0 = pi0.clone();
            for (p, &v) in pairs.iter().zip(&values) {
                w1 = w1 * p.p1.mass(v as usize);
                w0 = w0 * p.p0.mass(v as usize);
            }
            rows.push((values.clone(), 1, w1));
            rows.push((values.clone(), 0, w0));
            // Row-major increment: the last column varies fastest.
            for i in (0..values.len()).rev() {
                values[i] += 1;
                if (values[i] as usize) < pairs[i].len() {
                    break;
                }
                values[i] = 0;
            }
        }
        Self::new(columns, rows)
    }

    /// Overrides the `|V_A|²` enumeration cap.
    pub fn with_pair_cap(mut self, cap: u128) -> Self {
        self.pair_cap = cap;
        self
    }

    pub fn columns(&self) -> &[JointColumn] {
        &self.columns
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[u32], u8, &M)> {
        self.rows.iter().map(|((v, c), m)| (v.as_slice(), *c, m))
    }

    pub fn label_marginals(&self) -> &[M; 2] {
        &self.label_marginals
    }

    /// `|V_A|` after validating the ids against the table.
    pub fn cross_size(&self, set: &[usize]) -> Result<u128> {
        let mut size: u128 = 1;
        for &a in set {
            let c = self.columns.get(a).ok_or_else(|| Error::UnknownColumn(a.to_string()))?;
            size = size.saturating_mul(c.vocabulary.len() as u128);
        }
        Ok(size)
    }

    fn checked_cross_size(&self, set: &[usize]) -> Result<usize> {
        let size = self.cross_size(set)?;
        let pairs = size.saturating_mul(size);
        if pairs > self.pair_cap {
            return Err(Error::Capacity {
                what: "cross outcome pairs",
                required: pairs,
                cap: self.pair_cap,
                hint: "; joint evaluation enumerates V_A x V_A",
            });
        }
        Ok(size as usize)
    }

    /// Mixed-radix index of the projection of `values` onto `set`; the first column of
    /// `set` is the most significant digit.
    fn project(&self, set: &[usize], values: &[u32]) -> usize {
        set.iter().fold(0usize, |acc, &a| {
            acc * self.columns[a].vocabulary.len() + values[a] as usize
        })
    }

    /// Joint masses `(Pr[X_A = x, C = 1], Pr[X_A = x, C = 0])` over `V_A`.
    fn joint_masses(&self, set: &[usize]) -> Result<(Vec<M>, Vec<M>)> {
        let size = self.checked_cross_size(set)?;
        let mut m1 = vec![M::zero(); size];
        let mut m0 = vec![M::zero(); size];
        for ((values, label), mass) in &self.rows {
            let idx = self.project(set, values);
            let slot = if *label == 1 { &mut m1[idx] } else { &mut m0[idx] };
            *slot = slot.clone() + mass;
        }
        Ok((m1, m0))
    }

    /// `Pr[X_A | C = label]` as a measure on `V_A`.
    pub fn conditional_measure(&self, set: &[usize], label: u8) -> Result<Measure<M>> {
        let (m1, m0) = self.joint_masses(set)?;
        self.normalize(if label == 1 { m1 } else { m0 }, label)
    }

    fn normalize(&self, masses: Vec<M>, label: u8) -> Result<Measure<M>> {
        let z = &self.label_marginals[label as usize];
        if z.is_zero() {
            return Err(Error::ZeroLabelMarginal(label));
        }
        Measure::from_masses(masses.into_iter().map(|m| m / z).collect())
    }

    fn conditionals(&self, set: &[usize]) -> Result<(Measure<M>, Measure<M>)> {
        let (m1, m0) = self.joint_masses(set)?;
        Ok((self.normalize(m1, 1)?, self.normalize(m0, 0)?))
    }

    /// Maximum AUC of the cross over `set`, with no independence assumption.
    ///
    /// Only outcomes carrying mass are visited, so the cap applies to the squared support
    /// size rather than to `|V_A|²`. The commutator sum is evaluated by sorting outcomes by
    /// likelihood ratio.
    pub fn auc_star_joint(&self, set: &[usize]) -> Result<M> {
        self.cross_size(set)?;
        for label in [0u8, 1] {
            if self.label_marginals[label as usize].is_zero() {
                return Err(Error::ZeroLabelMarginal(label));
            }
        }
        let mut support: BTreeMap<Vec<u32>, (M, M)> = BTreeMap::new();
        for ((values, label), mass) in &self.rows {
            let e = support
                .entry(set.iter().map(|&a| values[a]).collect())
                .or_insert_with(|| (M::zero(), M::zero()));
            if *label == 1 {
                e.0 = e.0.clone() + mass;
            } else {
                e.1 = e.1.clone() + mass;
            }
        }
        let n = support.len() as u128;
        if n * n > self.pair_cap {
            return Err(Error::Capacity {
                what: "cross support pairs",
                required: n * n,
                cap: self.pair_cap,
                hint: "; joint evaluation enumerates pairs of supported outcomes",
            });
        }
        let [z0, z1] = &self.label_marginals;
        let (p1, p0): (Vec<M>, Vec<M>) = support.into_values().map(|(a, b)| (a / z1, b / z0)).unzip();
        let tv = commutator_l1_sorted(&p1, &p0) * M::half();
        Ok(M::half() + M::half() * tv)
    }

    /// `I(X_A; C)` in bits. Zero-mass cells contribute nothing.
    pub fn mutual_information(&self, set: &[usize]) -> Result<MutualInformation<M>> {
        self.cross_size(set)?;
        let mut cells: BTreeMap<(Vec<u32>, u8), M> = BTreeMap::new();
        let mut px: BTreeMap<Vec<u32>, M> = BTreeMap::new();
        for ((values, label), mass) in &self.rows {
            let idx: Vec<u32> = set.iter().map(|&a| values[a]).collect();
            let e = cells.entry((idx.clone(), *label)).or_insert_with(M::zero);
            *e = e.clone() + mass;
            let e = px.entry(idx).or_insert_with(M::zero);
            *e = e.clone() + mass;
        }
        let mut bits = 0.0;
        let mut exact = Some(M::zero());
        for ((idx, label), pxc) in &cells {
            let ratio = pxc.clone() / (px[idx].clone() * &self.label_marginals[*label as usize]);
            bits += pxc.to_f64() * ratio.to_f64().log2();
            exact = match (exact, ratio.log2_exact()) {
                (Some(acc), Some(l)) => Some(acc + pxc.clone() * l),
                _ => None,
            };
        }
        Ok(MutualInformation { bits, exact })
    }

    /// AUC of an arbitrary scorer on `V_A`, indexed like [`conditional_measure`]. Scores may
    /// be infinite but not NaN.
    ///
    /// [`conditional_measure`]: JointTable::conditional_measure
    pub fn auc_of_scorer(&self, set: &[usize], sigma: &[f64]) -> Result<M> {
        let (p1, p0) = self.conditionals(set)?;
        if sigma.len() != p1.len() {
            return Err(Error::InvalidArgument(format!(
                "scorer has {} values, cross has {} outcomes",
                sigma.len(),
                p1.len()
            )));
        }
        if let Some(i) = sigma.iter().position(|s| s.is_nan()) {
            return Err(Error::InvalidArgument(format!("scorer value at outcome {i} is NaN")));
        }
        let mut order: Vec<usize> = (0..sigma.len()).collect();
        order.sort_by(|&a, &b| sigma[a].total_cmp(&sigma[b]));
        let half = M::half();
        let mut below = M::zero();
        let mut auc = M::zero();
        let mut i = 0;
        while i < order.len() {
            // Group equal scores (−0.0 and 0.0 included).
            let mut j = i;
            let (mut w1, mut w0) = (M::zero(), M::zero());
            while j < order.len() && sigma[order[j]] == sigma[order[i]] {
                w1 = w1 + p1.mass(order[j]);
                w0 = w0 + p0.mass(order[j]);
                j += 1;
            }
            auc = auc + w1 * &(below.clone() + w0.clone() * &half);
            below = below + w0;
            i = j;
        }
        Ok(auc)
    }

    /// Natural-log likelihood ratio of each outcome of `V_A`; `±∞` where one side is zero and
    /// `0` where both are.
    pub fn log_likelihood_scores(&self, set: &[usize]) -> Result<Vec<f64>> {
        let (p1, p0) = self.conditionals(set)?;
        Ok(p1
            .masses()
            .iter()
            .zip(p0.masses())
            .map(|(a, b)| match (a.is_zero(), b.is_zero()) {
                (true, true) => 0.0,
                (false, true) => f64::INFINITY,
                (true, false) => f64::NEG_INFINITY,
                (false, false) => (a.clone() / b).to_f64().ln(),
            })
            .collect())
    }

    /// Whether columns `a` and `b` are independent given the label (exactly in exact mode,
    /// within `1e-12` in float mode). Labels with zero probability are skipped.
    pub fn conditionally_independent(&self, a: usize, b: usize) -> Result<bool> {
        let nb = self
            .columns
            .get(b)
            .ok_or_else(|| Error::UnknownColumn(b.to_string()))?
            .vocabulary
            .len();
        for label in [0u8, 1] {
            if self.label_marginals[label as usize].is_zero() {
                continue;
            }
            let pab = self.conditional_measure(&[a, b], label)?;
            let pa = self.conditional_measure(&[a], label)?;
            let pb = self.conditional_measure(&[b], label)?;
            for (i, m) in pab.masses().iter().enumerate() {
                let product = pa.mass(i / nb).clone() * pb.mass(i % nb);
                if !m.approx_eq(&product, 1e-12) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// `max_{i, x} |Pr[X_A = x | C = i] − Π_a Pr[X_a = x_a | C = i]|` over `V_A`; zero
    /// exactly when the columns of `set` factorize given the label.
    pub fn independence_gap(&self, set: &[usize]) -> Result<M> {
        let mut gap = M::zero();
        for label in [0u8, 1] {
            let joint = self.conditional_measure(set, label)?;
            let margins = set
                .iter()
                .map(|&a| self.conditional_measure(&[a], label))
                .collect::<Result<Vec<_>>>()?;
            for (idx, m) in joint.masses().iter().enumerate() {
                let mut rest = idx;
                let mut product = M::one();
                for margin in margins.iter().rev() {
                    product = product * margin.mass(rest % margin.len());
                    rest /= margin.len();
                }
                let d = (m.clone() - product).abs();
                if d > gap {
                    gap = d;
                }
            }
        }
        Ok(gap)
    }

    /// Compares the joint maximum AUC of `set` with the value a naive-Bayes model built from
    /// the per-column marginals would report.
    pub fn assumption_gap(&self, set: &[usize]) -> Result<AssumptionGap<M>> {
        let joint = self.auc_star_joint(set)?;
        let pairs = set
            .iter()
            .map(|&a| ConditionalPair::new(self.conditional_measure(&[a], 1)?, self.conditional_measure(&[a], 0)?))
            .collect::<Result<Vec<_>>>()?;
        let nb = NbObjective::from_pairs(pairs, ConvolveConfig::default())?;
        let ids: Vec<usize> = (0..set.len()).collect();
        let naive_bayes = nb.auc_star(&ids)?;
        Ok(AssumptionGap {
            gap: joint.clone() - &naive_bayes,
            joint,
            naive_bayes,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mass::Exact;
    use num::{BigRational, One, Zero};

    fn q(n: i64, d: i64) -> Exact {
        BigRational::new(n.into(), d.into())
    }

    /// Language/country table: the label is 1 exactly for (English, Scotland) and
    /// (Spanish, Mexico).
    fn language_country() -> JointTable<Exact> {
        let cols = vec![
            JointColumn::new("language", vec!["English".into(), "Spanish".into()]),
            JointColumn::new("country", vec!["Scotland".into(), "Mexico".into()]),
        ];
        let rows = vec![
            (vec![0, 0], 1, q(1, 4)),
            (vec![1, 1], 1, q(1, 4)),
            (vec![0, 1], 0, q(1, 4)),
            (vec![1, 0], 0, q(1, 4)),
        ];
        JointTable::new(cols, rows).unwrap()
    }

    #[test]
    fn language_country_example() {
        let t = language_country();
        let half = [q(1, 2), q(1, 2)];
        assert_eq!(t.conditional_measure(&[0], 1).unwrap().masses(), &half[..]);
        assert_eq!(t.conditional_measure(&[0], 0).unwrap().masses(), &half[..]);
        assert_eq!(t.auc_star_joint(&[0]).unwrap(), q(1, 2));
        assert_eq!(t.auc_star_joint(&[1]).unwrap(), q(1, 2));
        assert_eq!(t.auc_star_joint(&[0, 1]).unwrap(), Exact::one());
        let gap = t.assumption_gap(&[0, 1]).unwrap();
        assert_eq!(gap.naive_bayes, q(1, 2));
        assert_eq!(gap.gap, q(1, 2));
        assert_eq!(t.independence_gap(&[0, 1]).unwrap(), q(1, 4));
        assert_eq!(t.independence_gap(&[1]).unwrap(), Exact::zero());
        let mi = t.mutual_information(&[0, 1]).unwrap();
        assert_eq!(mi.exact, Some(Exact::one()));
        assert_eq!(t.mutual_information(&[0]).unwrap().exact, Some(Exact::zero()));
    }

    #[test]
    fn empty_cross_is_a_point_mass() {
        let t = language_country();
        let m = t.conditional_measure(&[], 1).unwrap();
        assert_eq!(m.masses(), &[Exact::one()][..]);
        assert_eq!(t.auc_star_joint(&[]).unwrap(), q(1, 2));
    }

    #[test]
    fn scorer_auc() {
        let t = language_country();
        assert_eq!(t.auc_of_scorer(&[0, 1], &[0.0; 4]).unwrap(), q(1, 2));
        let llr = t.log_likelihood_scores(&[0, 1]).unwrap();
        assert_eq!(t.auc_of_scorer(&[0, 1], &llr).unwrap(), Exact::one());
        let neg: Vec<f64> = llr.iter().map(|s| -s).collect();
        assert_eq!(t.auc_of_scorer(&[0, 1], &neg).unwrap(), Exact::zero());
        assert!(t.auc_of_scorer(&[0, 1], &[0.0; 3]).is_err());
        assert!(t.auc_of_scorer(&[0, 1], &[0.0, f64::NAN, 0.0, 0.0]).is_err());
    }

    #[test]
    fn rejects_bad_tables() {
        let cols = vec![JointColumn::new("a", vec!["x".into()])];
        assert!(JointTable::new(cols.clone(), vec![(vec![0], 1, q(1, 2))]).is_err());
        assert!(JointTable::new(cols.clone(), vec![(vec![1], 1, q(1, 1))]).is_err());
        let only_pos = JointTable::new(cols, vec![(vec![0], 1, q(1, 1))]).unwrap();
        assert!(matches!(
            only_pos.conditional_measure(&[0], 0),
            Err(Error::ZeroLabelMarginal(0))
        ));
    }

    #[test]
    fn pair_cap_applies() {
        let t = language_country().with_pair_cap(15);
        assert!(t.auc_star_joint(&[0, 1]).unwrap_err().is_capacity());
        assert!(t.conditional_measure(&[0, 1], 1).unwrap_err().is_capacity());
        assert!(t.auc_star_joint(&[0]).is_ok());
    }

    #[test]
    fn naive_bayes_product_table_agrees_with_the_objective() {
        let m = |v: &[(i64, i64)]| Measure::from_masses(v.iter().map(|&(n, d)| q(n, d)).collect()).unwrap();
        let pairs = vec![
            ConditionalPair::new(m(&[(1, 2), (1, 4), (1, 4)]), m(&[(1, 4), (1, 4), (1, 2)])).unwrap(),
            ConditionalPair::new(m(&[(1, 3), (2, 3)]), m(&[(3, 4), (1, 4)])).unwrap(),
        ];
        let t = JointTable::from_naive_bayes(q(2, 5), &pairs, 1000).unwrap();
        let nb = NbObjective::from_pairs(pairs, ConvolveConfig::default()).unwrap();
        assert_eq!(t.auc_star_joint(&[0, 1]).unwrap(), nb.auc_star(&[0, 1]).unwrap());
        assert_eq!(t.auc_star_joint(&[1]).unwrap(), nb.auc_star(&[1]).unwrap());
        assert_eq!(t.assumption_gap(&[0, 1]).unwrap().gap, Exact::zero());
        assert_eq!(t.independence_gap(&[1, 0]).unwrap(), Exact::zero());
        assert!(t.conditionally_independent(0, 1).unwrap());
        assert!(!language_country().conditionally_independent(0, 1).unwrap());
    }
}
