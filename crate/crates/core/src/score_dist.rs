//! Law of the log-likelihood-ratio score under both label-conditional measures.
//!
//! A [`ScoreDistribution`] is a list of atoms `(score, w1, w0)`: `w1` is the probability
//! of the score under `P₁`, `w0` under `P₀`. Under conditional independence the score of a
//! feature cross is the sum of per-column scores, so the distribution for a set of columns
//! is the convolution of the per-column distributions. The maximum AUC of the cross is then
//! read off in a single sorted pass.
//!
//! Exact mode keys finite scores by the reduced likelihood ratio itself (combination is
//! multiplication); float mode keys them by the natural-log ratio on a `1e-9` grid
//! (combination is integer addition of grid units).

use std::cmp::Ordering;
use std::fmt::Debug;

use num::{BigRational, One};

use crate::error::{Error, Result};
use crate::mass::{Exact, Mass};
use crate::measures::Measure;

/// Width of the float-mode log-score grid.
pub const LOG_GRID: f64 = 1e-9;

/// Default cap on the number of atoms after a convolution.
pub const DEFAULT_ATOM_CAP: usize = 2_000_000;

/// Key of a finite score.
pub trait FiniteScore: Clone + Ord + Debug + Send + Sync + 'static {
    /// Score of a ratio equal to one.
    fn neutral() -> Self;

    /// Score of the product of the underlying ratios.
    fn combine(&self, other: &Self) -> Self;

    /// Natural log of the likelihood ratio.
    fn ln(&self) -> f64;

    /// Whether two keys of a distribution built from `depth` per-column scores may denote
    /// the same true score and must be merged. Exact keys never need this.
    fn within_rounding(_a: &Self, _b: &Self, _depth: usize) -> bool {
        false
    }
}

impl FiniteScore for Exact {
    fn neutral() -> Self {
        BigRational::one()
    }

    fn combine(&self, other: &Self) -> Self {
        self * other
    }

    fn ln(&self) -> f64 {
        num::traits::ToPrimitive::to_f64(self).map_or(f64::NAN, f64::ln)
    }
}

/// Log-likelihood ratio rounded to a multiple of [`LOG_GRID`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GridLog(pub i64);

impl GridLog {
    pub fn from_ln(x: f64) -> Self {
        GridLog((x / LOG_GRID).round() as i64)
    }
}

impl FiniteScore for GridLog {
    fn neutral() -> Self {
        GridLog(0)
    }

    fn combine(&self, other: &Self) -> Self {
        GridLog(self.0 + other.0)
    }

    fn ln(&self) -> f64 {
        self.0 as f64 * LOG_GRID
    }

    // Each per-column key is off by at most half a grid unit.
    fn within_rounding(a: &Self, b: &Self, depth: usize) -> bool {
        a.0.abs_diff(b.0) <= depth.max(1) as u64
    }
}

/// Extended-real score: `NegInf < Finite(_) < PosInf`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExtendedScore<S> {
    NegInf,
    Finite(S),
    PosInf,
}

impl<S: FiniteScore> ExtendedScore<S> {
    /// Extended-real addition of log scores. `+∞ ⊕ −∞` is mapped to the neutral score;
    /// such atoms always carry zero mass under both measures.
    pub fn combine(&self, other: &Self) -> Self {
        use ExtendedScore::*;
        match (self, other) {
            (PosInf, NegInf) | (NegInf, PosInf) => Finite(S::neutral()),
            (PosInf, _) | (_, PosInf) => PosInf,
            (NegInf, _) | (_, NegInf) => NegInf,
            (Finite(a), Finite(b)) => Finite(a.combine(b)),
        }
    }

    /// Score as an extended real log-ratio.
    pub fn to_f64(&self) -> f64 {
        match self {
            ExtendedScore::NegInf => f64::NEG_INFINITY,
            ExtendedScore::PosInf => f64::INFINITY,
            ExtendedScore::Finite(s) => s.ln(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoreAtom<M: Mass> {
    pub score: ExtendedScore<M::Score>,
    /// Mass under the positive-label measure.
    pub w1: M,
    /// Mass under the negative-label measure.
    pub w0: M,
}

/// Convolution settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvolveConfig {
    /// Float mode only: atoms whose masses are both below this are dropped and their
    /// mass tracked. Zero disables pruning.
    pub prune_eps: f64,
    pub atom_cap: usize,
}

impl Default for ConvolveConfig {
    fn default() -> Self {
        ConvolveConfig {
            prune_eps: 0.0,
            atom_cap: DEFAULT_ATOM_CAP,
        }
    }
}

/// Atoms sorted by score with unique keys, plus accumulated pruned mass.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreDistribution<M: Mass> {
    atoms: Vec<ScoreAtom<M>>,
    pruned_w1: M,
    pruned_w0: M,
    depth: usize,
}

/// AUC together with a certified bound on its error from pruning.
#[derive(Clone, Debug, PartialEq)]
pub struct AucValue<M> {
    pub value: M,
    pub error_bound: f64,
}

impl<M: Mass> ScoreDistribution<M> {
    /// The distribution of an empty cross: a single tie at score zero.
    pub fn identity() -> Self {
        ScoreDistribution {
            atoms: vec![ScoreAtom {
                score: ExtendedScore::Finite(M::Score::neutral()),
                w1: M::one(),
                w0: M::one(),
            }],
            pruned_w1: M::zero(),
            pruned_w0: M::zero(),
            depth: 0,
        }
    }

    /// Builds a distribution from raw atoms, merging equal keys and dropping empty atoms.
    /// Masses must be nonnegative and sum to one under each label.
    pub fn from_atoms(atoms: Vec<ScoreAtom<M>>) -> Result<Self> {
        let (mut t1, mut t0) = (M::zero(), M::zero());
        for a in &atoms {
            if a.w1.is_negative() || a.w0.is_negative() {
                return Err(Error::InvalidMeasure("negative atom mass".into()));
            }
            let infinite_mismatch = match a.score {
                ExtendedScore::PosInf => !a.w0.is_zero(),
                ExtendedScore::NegInf => !a.w1.is_zero(),
                ExtendedScore::Finite(_) => false,
            };
            if infinite_mismatch {
                return Err(Error::InvalidMeasure(
                    "infinite score with mass on the wrong side".into(),
                ));
            }
            t1 = t1 + &a.w1;
            t0 = t0 + &a.w0;
        }
        let tol = crate::measures::FLOAT_MASS_TOL;
        if !t1.approx_eq(&M::one(), tol) || !t0.approx_eq(&M::one(), tol) {
            return Err(Error::InvalidMeasure(format!("atom masses sum to ({t1}, {t0})")));
        }
        Ok(ScoreDistribution {
            atoms: merge_sorted(atoms, 1),
            pruned_w1: M::zero(),
            pruned_w0: M::zero(),
            depth: 1,
        })
    }

    /// Score law of a single column. Outcomes with the same likelihood ratio share an atom;
    /// outcomes with zero mass under both measures are skipped.
    pub fn from_conditional_pair(p1: &Measure<M>, p0: &Measure<M>) -> Result<Self> {
        p1.check_same_domain(p0)?;
        let mut atoms = Vec::with_capacity(p1.len());
        for (w1, w0) in p1.masses().iter().zip(p0.masses()) {
            let score = match (w1.is_zero(), w0.is_zero()) {
                (true, true) => continue,
                (false, true) => ExtendedScore::PosInf,
                (true, false) => ExtendedScore::NegInf,
                (false, false) => ExtendedScore::Finite(M::likelihood_ratio(w1, w0)),
            };
            atoms.push(ScoreAtom {
                score,
                w1: w1.clone(),
                w0: w0.clone(),
            });
        }
        Ok(ScoreDistribution {
            atoms: merge_sorted(atoms, 1),
            pruned_w1: M::zero(),
            pruned_w0: M::zero(),
            depth: 1,
        })
    }

    pub fn atoms(&self) -> &[ScoreAtom<M>] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn pruned_mass(&self) -> (&M, &M) {
        (&self.pruned_w1, &self.pruned_w0)
    }

    /// Number of per-column distributions combined into this one.
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Distribution of the sum of two independent scores.
    pub fn convolve(&self, other: &Self, config: &ConvolveConfig) -> Result<Self> {
        let pairs = self.atoms.len() as u128 * other.atoms.len() as u128;
        // Pre-merge buffer guard; the configured cap applies to merged atoms below.
        let buffer_cap = config.atom_cap as u128 * 16;
        if pairs > buffer_cap {
            return Err(Error::Capacity {
                what: "convolution atom pairs",
                required: pairs,
                cap: buffer_cap,
                hint: "; raise the atom cap or enable pruning",
            });
        }
        let mut raw = Vec::with_capacity(pairs as usize);
        for a in &self.atoms {
            for b in &other.atoms {
                let w1 = a.w1.clone() * &b.w1;
                let w0 = a.w0.clone() * &b.w0;
                if w1.is_zero() && w0.is_zero() {
                    continue;
                }
                raw.push(ScoreAtom {
                    score: a.score.combine(&b.score),
                    w1,
                    w0,
                });
            }
        }
        let depth = self.depth + other.depth;
        let mut atoms = merge_sorted(raw, depth);

        let mut pruned_w1 = carry_pruned(&self.pruned_w1, &other.pruned_w1);
        let mut pruned_w0 = carry_pruned(&self.pruned_w0, &other.pruned_w0);
        if !M::is_exact() && config.prune_eps > 0.0 {
            let eps = M::from_f64(config.prune_eps);
            atoms.retain(|a| {
                if a.w1 < eps && a.w0 < eps {
                    pruned_w1 = pruned_w1.clone() + &a.w1;
                    pruned_w0 = pruned_w0.clone() + &a.w0;
                    false
                } else {
                    true
                }
            });
        }
        if atoms.len() > config.atom_cap {
            return Err(Error::Capacity {
                what: "score distribution atoms",
                required: atoms.len() as u128,
                cap: config.atom_cap as u128,
                hint: "; raise the atom cap or enable pruning",
            });
        }
        Ok(ScoreDistribution {
            atoms,
            pruned_w1,
            pruned_w0,
            depth,
        })
    }

    /// `Σ_{s>t} w1(s) w0(t) + ½ Σ_s w1(s) w0(s)`.
    pub fn auc(&self) -> AucValue<M> {
        let half = M::half();
        let mut below = M::zero();
        let mut auc = M::zero();
        for a in &self.atoms {
            let tie = a.w0.clone() * &half;
            auc = auc + a.w1.clone() * &(below.clone() + &tie);
            below = below + &a.w0;
        }
        AucValue {
            value: auc,
            error_bound: self.pruned_w1.to_f64() + self.pruned_w0.to_f64(),
        }
    }

    /// Normalized AUC `2·auc − 1`, i.e. the total variation of the commutator.
    pub fn f_value(&self) -> AucValue<M> {
        let auc = self.auc();
        AucValue {
            value: auc.value.clone() + &auc.value - M::one(),
            error_bound: 2.0 * auc.error_bound,
        }
    }

    /// Applies `f` to every finite score key and re-merges. Intended for invariance checks;
    /// `f` should be strictly increasing.
    pub fn map_finite_scores<F>(&self, f: F) -> Self
    where
        F: Fn(&M::Score) -> M::Score,
    {
        let atoms = self
            .atoms
            .iter()
            .map(|a| ScoreAtom {
                score: match &a.score {
                    ExtendedScore::Finite(s) => ExtendedScore::Finite(f(s)),
                    other => other.clone(),
                },
                w1: a.w1.clone(),
                w0: a.w0.clone(),
            })
            .collect();
        ScoreDistribution {
            atoms: merge_sorted(atoms, self.depth),
            pruned_w1: self.pruned_w1.clone(),
            pruned_w0: self.pruned_w0.clone(),
            depth: self.depth,
        }
    }
}

/// `auc_from_scores`: AUC of the log-likelihood-ratio scorer.
pub fn auc_from_scores<M: Mass>(d: &ScoreDistribution<M>) -> AucValue<M> {
    d.auc()
}

/// `f_value_from_scores`: `2·auc − 1`.
pub fn f_value_from_scores<M: Mass>(d: &ScoreDistribution<M>) -> AucValue<M> {
    d.f_value()
}

// Mass lost when combining two pruned distributions, before pruning any new atoms:
// 1 - (1 - a)(1 - b).
fn carry_pruned<M: Mass>(a: &M, b: &M) -> M {
    if a.is_zero() && b.is_zero() {
        return M::zero();
    }
    a.clone() + b - a.clone() * b
}

fn merge_sorted<M: Mass>(mut atoms: Vec<ScoreAtom<M>>, depth: usize) -> Vec<ScoreAtom<M>> {
    atoms.sort_unstable_by(|a, b| a.score.cmp(&b.score));
    let mut merged: Vec<ScoreAtom<M>> = Vec::with_capacity(atoms.len());
    for atom in atoms {
        if atom.w1.is_zero() && atom.w0.is_zero() {
            continue;
        }
        if let Some(last) = merged.last_mut() {
            let same = match (&last.score, &atom.score) {
                (ExtendedScore::Finite(a), ExtendedScore::Finite(b)) => {
                    a.cmp(b) == Ordering::Equal || M::Score::within_rounding(a, b, depth)
                }
                (a, b) => a == b,
            };
            if same {
                last.w1 = last.w1.clone() + &atom.w1;
                last.w0 = last.w0.clone() + &atom.w0;
                continue;
            }
        }
        merged.push(atom);
    }
    merged
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::BigRational;

    fn q(n: i64, d: i64) -> Exact {
        BigRational::new(n.into(), d.into())
    }

    fn measure(masses: &[(i64, i64)]) -> Measure<Exact> {
        Measure::from_masses(masses.iter().map(|&(n, d)| q(n, d)).collect()).unwrap()
    }

    fn three_atom() -> ScoreDistribution<Exact> {
        let p1 = measure(&[(1, 2), (1, 4), (1, 4)]);
        let p0 = measure(&[(1, 4), (1, 4), (1, 2)]);
        ScoreDistribution::from_conditional_pair(&p1, &p0).unwrap()
    }

    fn separable() -> ScoreDistribution<Exact> {
        let p1 = measure(&[(1, 1), (0, 1)]);
        let p0 = measure(&[(0, 1), (1, 1)]);
        ScoreDistribution::from_conditional_pair(&p1, &p0).unwrap()
    }

    #[test]
    fn uniform_pair_is_a_single_tie() {
        let u = measure(&[(1, 2), (1, 2)]);
        let d = ScoreDistribution::from_conditional_pair(&u, &u).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.atoms()[0].score, ExtendedScore::Finite(q(1, 1)));
        assert_eq!(d.atoms()[0].w1, q(1, 1));
        assert_eq!(d.auc().value, q(1, 2));
        assert_eq!(d.f_value().value, q(0, 1));
    }

    #[test]
    fn disjoint_supports_give_infinite_atoms() {
        let d = separable();
        assert_eq!(d.len(), 2);
        assert_eq!(d.atoms()[0].score, ExtendedScore::NegInf);
        assert_eq!((d.atoms()[0].w1.clone(), d.atoms()[0].w0.clone()), (q(0, 1), q(1, 1)));
        assert_eq!(d.atoms()[1].score, ExtendedScore::PosInf);
        assert_eq!(d.auc().value, q(1, 1));
        assert_eq!(d.f_value().value, q(1, 1));
    }

    #[test]
    fn three_atom_example() {
        let d = three_atom();
        let keys: Vec<_> = d.atoms().iter().map(|a| a.score.clone()).collect();
        assert_eq!(
            keys,
            vec![
                ExtendedScore::Finite(q(1, 2)),
                ExtendedScore::Finite(q(1, 1)),
                ExtendedScore::Finite(q(2, 1))
            ]
        );
        assert_eq!(d.atoms()[2].w1, q(1, 2));
        assert_eq!(d.atoms()[2].w0, q(1, 4));
        // .5(.25+.5) + .25(.5) + ½(.5·.25 + .25·.25 + .25·.5) = .375 + .125 + .15625
        assert_eq!(d.auc().value, q(21, 32));
        assert_eq!(d.f_value().value, q(5, 16));
        let p1 = measure(&[(1, 2), (1, 4), (1, 4)]);
        let p0 = measure(&[(1, 4), (1, 4), (1, 2)]);
        let tv = crate::measures::commutator_tv(&p1, &p0).unwrap();
        assert_eq!(tv, q(5, 16));
    }

    #[test]
    fn identity_is_neutral_for_convolution() {
        let d = three_atom();
        let cfg = ConvolveConfig::default();
        let c = d.convolve(&ScoreDistribution::identity(), &cfg).unwrap();
        assert_eq!(c.atoms(), d.atoms());
    }

    #[test]
    fn mixed_infinities_vanish() {
        let d = separable();
        let c = d.convolve(&d, &ConvolveConfig::default()).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.atoms()[0].score, ExtendedScore::NegInf);
        assert_eq!(c.atoms()[1].score, ExtendedScore::PosInf);
        assert_eq!(c.atoms()[1].w1, q(1, 1));
    }

    #[test]
    fn self_convolution_against_pair_enumeration() {
        let d = three_atom();
        let c = d.convolve(&d, &ConvolveConfig::default()).unwrap();
        assert_eq!(c.len(), 5);
        // Independent enumeration of the 9 atom pairs, keyed by the product ratio.
        let base = [
            (q(2, 1), q(1, 2), q(1, 4)),
            (q(1, 1), q(1, 4), q(1, 4)),
            (q(1, 2), q(1, 4), q(1, 2)),
        ];
        let mut expected = std::collections::BTreeMap::<Exact, (Exact, Exact)>::new();
        for (sa, a1, a0) in &base {
            for (sb, b1, b0) in &base {
                let e = expected.entry(sa * sb).or_insert((q(0, 1), q(0, 1)));
                e.0 += a1 * b1;
                e.1 += a0 * b0;
            }
        }
        for (atom, (key, (w1, w0))) in c.atoms().iter().zip(expected) {
            assert_eq!(atom.score, ExtendedScore::Finite(key));
            assert_eq!((&atom.w1, &atom.w0), (&w1, &w0));
        }
        assert_eq!(c.atoms()[4].score, ExtendedScore::Finite(q(4, 1)));
        assert_eq!(c.atoms()[4].w1, q(1, 4));
    }

    #[test]
    fn atom_cap_is_enforced() {
        let d = three_atom();
        let cfg = ConvolveConfig {
            prune_eps: 0.0,
            atom_cap: 4,
        };
        assert!(d.convolve(&d, &cfg).unwrap_err().is_capacity());
    }

    #[test]
    fn float_mode_matches_exact_on_the_example() {
        let p1 = Measure::<f64>::from_masses(vec![0.5, 0.25, 0.25]).unwrap();
        let p0 = Measure::<f64>::from_masses(vec![0.25, 0.25, 0.5]).unwrap();
        let d = ScoreDistribution::from_conditional_pair(&p1, &p0).unwrap();
        assert_eq!(d.len(), 3);
        assert!((d.atoms()[2].score.to_f64() - 2f64.ln()).abs() < 1e-9);
        assert!((d.auc().value - 0.65625).abs() < 1e-15);
        let c = d.convolve(&d, &ConvolveConfig::default()).unwrap();
        assert_eq!(c.len(), 5);
        assert_eq!(c.auc().error_bound, 0.0);
    }

    #[test]
    fn rounding_slack_merges_equal_true_scores() {
        // ln 6 from one column vs ln 2 + ln 3 from two columns may land a grid unit apart.
        let a = GridLog::from_ln(6f64.ln());
        let b = GridLog::from_ln(2f64.ln()).combine(&GridLog::from_ln(3f64.ln()));
        assert!(GridLog::within_rounding(&a, &b, 2));
    }

    #[test]
    fn pruning_tracks_mass_and_bounds_error() {
        let p1 = Measure::<f64>::from_masses(vec![0.999, 0.0005, 0.0005]).unwrap();
        let p0 = Measure::<f64>::from_masses(vec![0.998, 0.0012, 0.0008]).unwrap();
        let d = ScoreDistribution::from_conditional_pair(&p1, &p0).unwrap();
        let full = d.convolve(&d, &ConvolveConfig::default()).unwrap();
        let cfg = ConvolveConfig {
            prune_eps: 1e-5,
            atom_cap: 100,
        };
        let pruned = d.convolve(&d, &cfg).unwrap();
        assert!(pruned.len() < full.len());
        let (m1, m0) = pruned.pruned_mass();
        assert!(*m1 > 0.0 && *m0 > 0.0);
        let total1: f64 = pruned.atoms().iter().map(|a| a.w1).sum::<f64>() + m1;
        assert!((total1 - 1.0).abs() < 1e-12);
        let exact = full.auc().value;
        let approx = pruned.auc();
        assert!((exact - approx.value).abs() <= approx.error_bound);
    }
}
