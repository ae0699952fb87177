//! Scalar types used for probability masses.
//!
//! Every measure-valued computation in the crate is generic over [`Mass`], which has two
//! implementations: [`Exact`] (arbitrary-precision rationals, reduced after every operation)
//! and `f64`. Empirical frequencies are ratios of integer counts, so the exact mode can
//! reproduce every quantity bit-for-bit; the float mode is the fast path for large inputs.

use std::fmt;

use num::bigint::Sign;
use num::traits::{NumRef, Signed, ToPrimitive};
use num::{BigInt, BigRational, Integer, Num, One, Zero};
use serde::{Deserialize, Serialize};

use crate::score_dist::{FiniteScore, GridLog};

/// Exact rational mass.
pub type Exact = BigRational;

/// Arithmetic mode of a computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Float,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Exact => f.write_str("exact"),
            Mode::Float => f.write_str("float"),
        }
    }
}

/// A probability-mass scalar.
pub trait Mass: Num + NumRef + Signed + Clone + PartialOrd + fmt::Debug + fmt::Display + Send + Sync + 'static {
    const MODE: Mode;

    /// Key type used for finite log-likelihood-ratio scores in this mode.
    type Score: FiniteScore;

    fn from_ratio(num: u64, den: u64) -> Self;

    /// Converts a finite float. Exact mode keeps the full binary expansion.
    fn from_f64(x: f64) -> Self;

    fn to_f64(&self) -> f64;

    /// Exact value; floats keep their full binary expansion.
    fn to_exact(&self) -> Exact;

    fn from_exact(x: &Exact) -> Self;

    /// Score key of the ratio `w1 / w0`; both arguments are strictly positive.
    fn likelihood_ratio(w1: &Self, w0: &Self) -> Self::Score;

    /// `log2(self)` when it is representable exactly in this mode.
    fn log2_exact(&self) -> Option<Self> {
        None
    }

    fn is_exact() -> bool {
        Self::MODE == Mode::Exact
    }

    /// Equality in exact mode, `|a - b| <= tol` in float mode.
    fn approx_eq(&self, other: &Self, tol: f64) -> bool;

    /// `Σ_{x,y} |p(x) q(y) - q(x) p(y)|` over all ordered pairs.
    fn commutator_l1(p: &[Self], q: &[Self]) -> Self {
        let mut acc = Self::zero();
        for x in 0..p.len() {
            for y in x + 1..p.len() {
                let d = p[x].clone() * &q[y] - q[x].clone() * &p[y];
                acc = acc + d.abs();
            }
        }
        acc.clone() + acc
    }

    fn half() -> Self {
        Self::from_ratio(1, 2)
    }
}

impl Mass for f64 {
    const MODE: Mode = Mode::Float;
    type Score = GridLog;

    fn from_ratio(num: u64, den: u64) -> Self {
        num as f64 / den as f64
    }

    fn from_f64(x: f64) -> Self {
        x
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn to_exact(&self) -> Exact {
        <Exact as Mass>::from_f64(*self)
    }

    fn from_exact(x: &Exact) -> Self {
        Mass::to_f64(x)
    }

    fn likelihood_ratio(w1: &Self, w0: &Self) -> GridLog {
        GridLog::from_ln(w1.ln() - w0.ln())
    }

    fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        (self - other).abs() <= tol
    }
}

impl Mass for Exact {
    const MODE: Mode = Mode::Exact;
    type Score = Exact;

    fn from_ratio(num: u64, den: u64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("finite float")
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn to_exact(&self) -> Exact {
        self.clone()
    }

    fn from_exact(x: &Exact) -> Self {
        x.clone()
    }

    fn likelihood_ratio(w1: &Self, w0: &Self) -> Exact {
        w1 / w0
    }

    fn log2_exact(&self) -> Option<Self> {
        let k = exact_log2(self)?;
        Some(BigRational::from_integer(BigInt::from(k)))
    }

    fn approx_eq(&self, other: &Self, _tol: f64) -> bool {
        self == other
    }

    fn commutator_l1(p: &[Self], q: &[Self]) -> Self {
        let (a, da) = common_denominator(p);
        let (b, db) = common_denominator(q);
        let total = match (to_i64s(&a), to_i64s(&b)) {
            (Some(a), Some(b)) if fits_i128(&a, &b) => BigInt::from(commutator_i128(&a, &b)),
            _ => commutator_bigint(&a, &b),
        };
        // Only x < y pairs were summed; the ordered-pair sum is twice that.
        BigRational::new(total * 2, da * db)
    }
}

/// `k` such that `r == 2^k`, if any.
fn exact_log2(r: &BigRational) -> Option<i64> {
    if r.is_zero() || r.is_negative() {
        return None;
    }
    let pow2 = |n: &BigInt| -> Option<u64> {
        if n.magnitude().count_ones() == 1 {
            n.trailing_zeros()
        } else {
            None
        }
    };
    let num = pow2(r.numer())?;
    let den = pow2(r.denom())?;
    Some(num as i64 - den as i64)
}

fn common_denominator(v: &[BigRational]) -> (Vec<BigInt>, BigInt) {
    let den = v.iter().fold(BigInt::one(), |acc, r| acc.lcm(r.denom()));
    let ints = v.iter().map(|r| r.numer() * (&den / r.denom())).collect();
    (ints, den)
}

fn to_i64s(v: &[BigInt]) -> Option<Vec<i64>> {
    v.iter().map(|x| x.to_i64()).collect()
}

fn fits_i128(a: &[i64], b: &[i64]) -> bool {
    let bits = |v: &[i64]| {
        let m = v.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0);
        64 - m.leading_zeros()
    };
    let pair_bits = 64 - ((a.len() as u64).saturating_mul(a.len() as u64)).leading_zeros();
    // |a_x b_y - b_x a_y| < 2^(ba + bb + 1); the pair count adds pair_bits more.
    bits(a) + bits(b) + 1 + pair_bits < 127
}

fn commutator_i128(a: &[i64], b: &[i64]) -> i128 {
    let mut acc: i128 = 0;
    for x in 0..a.len() {
        let (ax, bx) = (a[x] as i128, b[x] as i128);
        for y in x + 1..a.len() {
            acc += (ax * b[y] as i128 - bx * a[y] as i128).abs();
        }
    }
    acc
}

fn commutator_bigint(a: &[BigInt], b: &[BigInt]) -> BigInt {
    let mut acc = BigInt::zero();
    for x in 0..a.len() {
        for y in x + 1..a.len() {
            let d = &a[x] * &b[y] - &b[x] * &a[y];
            if d.sign() == Sign::Minus {
                acc -= d;
            } else {
                acc += d;
            }
        }
    }
    acc
}

/// Parses `"p/q"`, `"p"` or a decimal literal into an exact rational.
pub fn parse_exact(s: &str) -> Option<Exact> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    if let Ok(n) = s.parse::<BigInt>() {
        return Some(BigRational::from_integer(n));
    }
    // Decimal literal: scale by a power of ten.
    let (int, frac) = s.split_once('.')?;
    let neg = int.starts_with('-');
    let digits = format!("{}{}", int.trim_start_matches(['-', '+']), frac);
    let n = BigInt::from_str_radix(&digits, 10).ok()?;
    let d = num::pow(BigInt::from(10), frac.len());
    let r = BigRational::new(n, d);
    Some(if neg { -r } else { r })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Exact {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn exact_commutator_matches_generic_sum() {
        let p = vec![q(7, 10), q(3, 10)];
        let r = vec![q(1, 5), q(4, 5)];
        let mut generic = Exact::zero();
        for x in 0..2 {
            for y in 0..2 {
                generic += (&p[x] * &r[y] - &r[x] * &p[y]).abs();
            }
        }
        assert_eq!(Exact::commutator_l1(&p, &r), generic);
        assert_eq!(generic, q(1, 1));
    }

    #[test]
    fn bigint_fallback_agrees_with_i128_path() {
        let a: Vec<BigInt> = [3i64, 5, 11, 0].iter().map(|&x| x.into()).collect();
        let b: Vec<BigInt> = [2i64, 7, 1, 9].iter().map(|&x| x.into()).collect();
        let small = commutator_i128(&[3, 5, 11, 0], &[2, 7, 1, 9]);
        assert_eq!(commutator_bigint(&a, &b), BigInt::from(small));
    }

    #[test]
    fn log2_exact_only_for_powers_of_two() {
        assert_eq!(q(8, 1).log2_exact(), Some(q(3, 1)));
        assert_eq!(q(1, 4).log2_exact(), Some(q(-2, 1)));
        assert_eq!(q(1, 1).log2_exact(), Some(q(0, 1)));
        assert_eq!(q(3, 2).log2_exact(), None);
        assert_eq!(2.0f64.log2_exact(), None);
    }

    #[test]
    fn parses_rational_literals() {
        assert_eq!(parse_exact("3/4"), Some(q(3, 4)));
        assert_eq!(parse_exact("2"), Some(q(2, 1)));
        assert_eq!(parse_exact("0.25"), Some(q(1, 4)));
        assert_eq!(parse_exact("-1.5"), Some(q(-3, 2)));
        assert_eq!(parse_exact("1/0"), None);
        assert_eq!(parse_exact("abc"), None);
    }
}
