//! Finite probability measures, product measures, total variation distance and
//! involution equivalence.

use crate::error::{Error, Result};
use crate::mass::Mass;

/// Float-mode tolerance on the total mass of a measure.
pub const FLOAT_MASS_TOL: f64 = 1e-12;

/// Default cap on `|V|` for the `|V|^2` commutator enumeration.
pub const DEFAULT_COMMUTATOR_CAP: usize = 4096;

/// Opaque outcome identifier. Callers own the mapping to real values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Token(pub u64);

/// A probability measure on a finite, ordered outcome set.
#[derive(Clone, Debug, PartialEq)]
pub struct Measure<M> {
    outcomes: Vec<Token>,
    masses: Vec<M>,
}

impl<M: Mass> Measure<M> {
    pub fn new(outcomes: Vec<Token>, masses: Vec<M>) -> Result<Self> {
        if outcomes.len() != masses.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} outcomes but {} masses",
                outcomes.len(),
                masses.len()
            )));
        }
        if outcomes.is_empty() {
            return Err(Error::InvalidMeasure("empty outcome set".into()));
        }
        let mut sorted = outcomes.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidMeasure("duplicate outcome identifier".into()));
        }
        if let Some(m) = masses.iter().find(|m| m.is_negative()) {
            return Err(Error::InvalidMeasure(format!("negative mass {m}")));
        }
        let total = masses.iter().fold(M::zero(), |acc, m| acc + m);
        if !total.approx_eq(&M::one(), FLOAT_MASS_TOL) {
            return Err(Error::InvalidMeasure(format!("masses sum to {total}, not 1")));
        }
        Ok(Measure { outcomes, masses })
    }

    /// Measure on tokens `0..masses.len()`.
    pub fn from_masses(masses: Vec<M>) -> Result<Self> {
        let outcomes = (0..masses.len() as u64).map(Token).collect();
        Self::new(outcomes, masses)
    }

    /// Normalized counts on tokens `0..counts.len()`.
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::InvalidMeasure("all counts are zero".into()));
        }
        Self::from_masses(counts.iter().map(|&c| M::from_ratio(c, total)).collect())
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::from_counts(&vec![1; n])
    }

    /// Point mass on `index` among `n` outcomes.
    pub fn point(n: usize, index: usize) -> Result<Self> {
        if index >= n {
            return Err(Error::InvalidArgument(format!("point {index} outside 0..{n}")));
        }
        let mut counts = vec![0; n];
        counts[index] = 1;
        Self::from_counts(&counts)
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn outcomes(&self) -> &[Token] {
        &self.outcomes
    }

    pub fn masses(&self) -> &[M] {
        &self.masses
    }

    pub fn mass(&self, index: usize) -> &M {
        &self.masses[index]
    }

    /// Product measure flattened onto `self.len() * other.len()` outcomes; the outcome
    /// `(i, j)` sits at index `i * other.len() + j`.
    pub fn product(&self, other: &Measure<M>) -> Measure<M> {
        let mut masses = Vec::with_capacity(self.len() * other.len());
        for a in &self.masses {
            for b in &other.masses {
                masses.push(a.clone() * b);
            }
        }
        let outcomes = (0..masses.len() as u64).map(Token).collect();
        Measure { outcomes, masses }
    }

    /// Same outcomes with masses converted to another mode. Exact to exact is the identity
    /// and float to exact keeps the binary value.
    pub fn convert<N: Mass>(&self) -> Measure<N> {
        Measure {
            outcomes: self.outcomes.clone(),
            masses: self.masses.iter().map(|m| N::from_exact(&m.to_exact())).collect(),
        }
    }

    pub(crate) fn check_same_domain(&self, other: &Measure<M>) -> Result<()> {
        if self.outcomes != other.outcomes {
            return Err(Error::DomainMismatch(format!(
                "outcome sets differ ({} vs {} outcomes)",
                self.len(),
                other.len()
            )));
        }
        Ok(())
    }
}

/// Product of finitely many measures, enumerated lazily in row-major order.
#[derive(Clone, Debug)]
pub struct ProductMeasure<M> {
    factors: Vec<Measure<M>>,
}

impl<M: Mass> ProductMeasure<M> {
    pub fn new(factors: Vec<Measure<M>>) -> Self {
        ProductMeasure { factors }
    }

    pub fn factors(&self) -> &[Measure<M>] {
        &self.factors
    }

    /// Number of outcome tuples, or `None` on overflow.
    pub fn size(&self) -> Option<usize> {
        self.factors.iter().try_fold(1usize, |acc, f| acc.checked_mul(f.len()))
    }

    /// Mass of one outcome tuple, given by per-factor indices.
    pub fn mass_of(&self, indices: &[usize]) -> M {
        self.factors
            .iter()
            .zip(indices)
            .fold(M::one(), |acc, (f, &i)| acc * f.mass(i))
    }

    /// Iterates `(indices, mass)` over all tuples; the last factor varies fastest.
    pub fn iter(&self) -> ProductIter<'_, M> {
        ProductIter {
            product: self,
            next: if self.factors.iter().any(|f| f.is_empty()) {
                None
            } else {
                Some(vec![0; self.factors.len()])
            },
        }
    }

    /// Materializes the product as a single measure over mixed-radix tuple indices.
    pub fn flatten(&self, cap: usize) -> Result<Measure<M>> {
        let size = self.size().unwrap_or(usize::MAX);
        if size > cap {
            return Err(Error::capacity("product measure outcomes", size as u128, cap as u128));
        }
        let mut masses = vec![M::one()];
        for f in &self.factors {
            let mut next = Vec::with_capacity(masses.len() * f.len());
            for a in &masses {
                for b in f.masses() {
                    next.push(a.clone() * b);
                }
            }
            masses = next;
        }
        let outcomes = (0..masses.len() as u64).map(Token).collect();
        Ok(Measure { outcomes, masses })
    }
}

pub struct ProductIter<'a, M> {
    product: &'a ProductMeasure<M>,
    next: Option<Vec<usize>>,
}

impl<M: Mass> Iterator for ProductIter<'_, M> {
    type Item = (Vec<usize>, M);

    fn next(&mut self) -> Option<Self::Item> {
        let current = self.next.take()?;
        let mass = self.product.mass_of(&current);
        let mut advanced = current.clone();
        let mut pos = advanced.len();
        let mut done = true;
        while pos > 0 {
            pos -= 1;
            advanced[pos] += 1;
            if advanced[pos] < self.product.factors[pos].len() {
                done = false;
                break;
            }
            advanced[pos] = 0;
        }
        if !done {
            self.next = Some(advanced);
        }
        Some((current, mass))
    }
}

/// A self-inverse map on outcome indices `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Involution {
    map: Vec<usize>,
}

impl Involution {
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let n = map.len();
        for (x, &fx) in map.iter().enumerate() {
            if fx >= n {
                return Err(Error::InvalidInvolution(format!("f({x}) = {fx} outside 0..{n}")));
            }
            if map[fx] != x {
                return Err(Error::InvalidInvolution(format!("f(f({x})) = {} != {x}", map[fx])));
            }
        }
        Ok(Involution { map })
    }

    pub fn identity(n: usize) -> Self {
        Involution { map: (0..n).collect() }
    }

    /// Swap of the two outcomes of a Bernoulli sample space.
    pub fn swap01() -> Self {
        Involution { map: vec![1, 0] }
    }

    /// Transpose `(x, y) -> (y, x)` on the flattened square `n x n`.
    pub fn transpose(n: usize) -> Self {
        let map = (0..n * n).map(|idx| (idx % n) * n + idx / n).collect();
        Involution { map }
    }

    /// `f x g` acting on the flattened product of two spaces.
    pub fn product(&self, other: &Involution) -> Involution {
        let m = other.len();
        let map = (0..self.len() * m)
            .map(|idx| self.map[idx / m] * m + other.map[idx % m])
            .collect();
        Involution { map }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn apply(&self, x: usize) -> usize {
        self.map[x]
    }
}

/// `d_TV(p, q) = ½ Σ |p(ω) - q(ω)|`.
pub fn tv_distance<M: Mass>(p: &Measure<M>, q: &Measure<M>) -> Result<M> {
    p.check_same_domain(q)?;
    let sum = p
        .masses
        .iter()
        .zip(&q.masses)
        .fold(M::zero(), |acc, (a, b)| acc + (a.clone() - b).abs());
    Ok(sum * M::half())
}

/// Total variation of the commutator: `d_TV(p × q, q × p)`, computed by enumerating
/// `|V|^2` pairs. Fails when `|V|` exceeds [`DEFAULT_COMMUTATOR_CAP`].
pub fn commutator_tv<M: Mass>(p: &Measure<M>, q: &Measure<M>) -> Result<M> {
    commutator_tv_capped(p, q, DEFAULT_COMMUTATOR_CAP)
}

pub fn commutator_tv_capped<M: Mass>(p: &Measure<M>, q: &Measure<M>, max_outcomes: usize) -> Result<M> {
    p.check_same_domain(q)?;
    if p.len() > max_outcomes {
        return Err(Error::Capacity {
            what: "commutator enumeration outcomes",
            required: p.len() as u128,
            cap: max_outcomes as u128,
            hint: "; use the score-distribution path for large outcome sets",
        });
    }
    Ok(M::commutator_l1(&p.masses, &q.masses) * M::half())
}

/// `Σ_{x,y} |p(x) q(y) − q(x) p(y)|` in `O(n log n)`.
///
/// Outcomes are sorted by the ratio `p/q` (compared by cross-multiplication, so `q = 0`
/// sorts last). For `x` before `y` the term `p(y) q(x) − q(y) p(x)` is nonnegative, so the
/// sum is `2 Σ_y (p(y) Q_<y − q(y) P_<y)` with prefix sums `P_<y`, `Q_<y`.
pub fn commutator_l1_sorted<M: Mass>(p: &[M], q: &[M]) -> M {
    let mut idx: Vec<usize> = (0..p.len().min(q.len()))
        .filter(|&i| !(p[i].is_zero() && q[i].is_zero()))
        .collect();
    let key = |a: usize, b: usize| (p[a].clone() * &q[b]).partial_cmp(&(p[b].clone() * &q[a]));
    idx.sort_by(|&a, &b| key(a, b).unwrap_or(std::cmp::Ordering::Equal));
    let (mut pp, mut qq, mut acc) = (M::zero(), M::zero(), M::zero());
    for &y in &idx {
        acc = acc + p[y].clone() * &qq - q[y].clone() * &pp;
        pp = pp + &p[y];
        qq = qq + &q[y];
    }
    acc.clone() + acc
}

/// True iff `p(x) = q(f(x))` for every outcome `x`.
pub fn check_involution_equivalent<M: Mass>(p: &Measure<M>, q: &Measure<M>, f: &Involution) -> Result<bool> {
    p.check_same_domain(q)?;
    if f.len() != p.len() {
        return Err(Error::DomainMismatch(format!(
            "involution acts on {} outcomes, measures have {}",
            f.len(),
            p.len()
        )));
    }
    Ok((0..p.len()).all(|x| p.mass(x).approx_eq(q.mass(f.apply(x)), FLOAT_MASS_TOL)))
}

/// Test helper: whether `Σ φ(p(x), q(x)) = Σ φ(q(x), p(x))` within `1e-10`.
///
/// Equality is guaranteed whenever `p` and `q` are involution equivalent; `f` is only
/// used to check that the spaces agree.
pub fn swap_sum_check<M, F>(p: &Measure<M>, q: &Measure<M>, f: &Involution, phi: F) -> Result<bool>
where
    M: Mass,
    F: Fn(f64, f64) -> f64,
{
    p.check_same_domain(q)?;
    if f.len() != p.len() {
        return Err(Error::DomainMismatch(
            "involution size differs from the measures".into(),
        ));
    }
    let (mut forward, mut swapped) = (0.0, 0.0);
    for (a, b) in p.masses.iter().zip(&q.masses) {
        let (a, b) = (a.to_f64(), b.to_f64());
        forward += phi(a, b);
        swapped += phi(b, a);
    }
    Ok((forward - swapped).abs() <= 1e-10)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mass::Exact;
    use num::{BigRational, Zero};

    fn q(n: i64, d: i64) -> Exact {
        BigRational::new(n.into(), d.into())
    }

    fn exact(masses: &[(i64, i64)]) -> Measure<Exact> {
        Measure::from_masses(masses.iter().map(|&(n, d)| q(n, d)).collect()).unwrap()
    }

    #[test]
    fn sorted_commutator_matches_pairwise() {
        let p = exact(&[(1, 2), (0, 1), (1, 4), (1, 8), (1, 8)]);
        let r = exact(&[(1, 8), (1, 4), (0, 1), (1, 8), (1, 2)]);
        assert_eq!(
            commutator_l1_sorted(p.masses(), r.masses()),
            Exact::commutator_l1(p.masses(), r.masses())
        );
        let pf: Measure<f64> = p.convert();
        let rf: Measure<f64> = r.convert();
        let a = commutator_l1_sorted(pf.masses(), rf.masses());
        assert!((a - f64::commutator_l1(pf.masses(), rf.masses())).abs() < 1e-15);
        assert_eq!(commutator_l1_sorted(p.masses(), p.masses()), Exact::zero());
    }

    #[test]
    fn rejects_invalid_measures() {
        assert!(Measure::<f64>::from_masses(vec![0.5, 0.6]).is_err());
        assert!(Measure::<f64>::from_masses(vec![1.5, -0.5]).is_err());
        assert!(Measure::<f64>::new(vec![Token(1), Token(1)], vec![0.5, 0.5]).is_err());
        assert!(Measure::<Exact>::from_masses(vec![q(1, 3), q(1, 3), q(1, 3)]).is_ok());
        // exact mode has no slack
        assert!(Measure::<Exact>::from_masses(vec![q(1, 3), q(1, 3), q(333, 1000)]).is_err());
    }

    #[test]
    fn tv_distance_examples() {
        let u = Measure::<Exact>::uniform(2).unwrap();
        assert_eq!(tv_distance(&u, &u).unwrap(), Exact::zero());
        let a = Measure::<Exact>::point(2, 0).unwrap();
        let b = Measure::<Exact>::point(2, 1).unwrap();
        assert_eq!(tv_distance(&a, &b).unwrap(), q(1, 1));
        let p = exact(&[(7, 10), (3, 10)]);
        let r = exact(&[(2, 10), (8, 10)]);
        assert_eq!(tv_distance(&p, &r).unwrap(), q(1, 2));
    }

    #[test]
    fn domain_mismatch_is_an_error() {
        let a = Measure::<f64>::uniform(2).unwrap();
        let b = Measure::<f64>::uniform(3).unwrap();
        assert!(matches!(tv_distance(&a, &b), Err(Error::DomainMismatch(_))));
        assert!(matches!(commutator_tv(&a, &b), Err(Error::DomainMismatch(_))));
    }

    #[test]
    fn commutator_examples() {
        let p = exact(&[(7, 10), (3, 10)]);
        let r = exact(&[(2, 10), (8, 10)]);
        assert_eq!(commutator_tv(&p, &p).unwrap(), Exact::zero());
        assert_eq!(commutator_tv(&p, &r).unwrap(), q(1, 2));
        let a = Measure::<Exact>::point(2, 0).unwrap();
        let b = Measure::<Exact>::point(2, 1).unwrap();
        assert_eq!(commutator_tv(&a, &b).unwrap(), q(1, 1));
        let pf = Measure::<f64>::from_masses(vec![0.7, 0.3]).unwrap();
        let rf = Measure::<f64>::from_masses(vec![0.2, 0.8]).unwrap();
        assert!((commutator_tv(&pf, &rf).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn commutator_cap_is_enforced() {
        let u = Measure::<f64>::uniform(10).unwrap();
        let err = commutator_tv_capped(&u, &u, 9).unwrap_err();
        assert!(err.is_capacity());
        assert!(err.to_string().contains("score-distribution"));
    }

    #[test]
    fn product_iteration_matches_flatten() {
        let a = exact(&[(1, 2), (1, 2)]);
        let b = exact(&[(1, 3), (1, 3), (1, 3)]);
        let c = exact(&[(1, 4), (3, 4)]);
        let prod = ProductMeasure::new(vec![a.clone(), b.clone(), c.clone()]);
        let flat = prod.flatten(100).unwrap();
        let listed: Vec<_> = prod.iter().collect();
        assert_eq!(listed.len(), 12);
        for (idx, (tuple, mass)) in listed.iter().enumerate() {
            assert_eq!(tuple[0] * 6 + tuple[1] * 2 + tuple[2], idx);
            assert_eq!(mass, flat.mass(idx));
        }
        assert_eq!(a.product(&b).product(&c), flat);
        assert!(prod.flatten(11).unwrap_err().is_capacity());
    }

    #[test]
    fn involution_validation() {
        assert!(Involution::new(vec![1, 0, 2]).is_ok());
        assert!(Involution::new(vec![1, 2, 0]).is_err());
        assert!(Involution::new(vec![0, 5]).is_err());
        let t = Involution::transpose(3);
        assert!(Involution::new(t.map.clone()).is_ok());
        assert_eq!(t.apply(1), 3);
        let prod = Involution::swap01().product(&Involution::identity(2));
        assert_eq!(prod.map, vec![2, 3, 0, 1]);
    }

    #[test]
    fn involution_equivalence_examples() {
        let p = exact(&[(7, 10), (3, 10)]);
        assert!(check_involution_equivalent(&p, &p, &Involution::identity(2)).unwrap());
        assert!(!check_involution_equivalent(&p, &p, &Involution::swap01()).unwrap());
        let r = exact(&[(1, 5), (3, 10), (1, 2)]);
        let s = exact(&[(1, 6), (1, 3), (1, 2)]);
        let rs = r.product(&s);
        let sr = s.product(&r);
        assert!(check_involution_equivalent(&rs, &sr, &Involution::transpose(3)).unwrap());
    }

    #[test]
    fn swap_sum_examples() {
        let r = exact(&[(1, 5), (3, 10), (1, 2)]);
        let s = exact(&[(1, 6), (1, 3), (1, 2)]);
        let (rs, sr) = (r.product(&s), s.product(&r));
        let t = Involution::transpose(3);
        assert!(swap_sum_check(&rs, &sr, &t, |a, b| a * b).unwrap());
        assert!(swap_sum_check(&rs, &sr, &t, |a, b| (a - 2.0 * b).abs()).unwrap());
        let p = Measure::<f64>::from_masses(vec![0.7, 0.3]).unwrap();
        let p2 = Measure::<f64>::from_masses(vec![0.6, 0.4]).unwrap();
        assert!(!swap_sum_check(&p, &p2, &Involution::swap01(), |a, _| a * a).unwrap());
    }
}
