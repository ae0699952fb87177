//! Numerical and exact checks of the inequalities behind submodularity.
//!
//! The chain being exercised:
//! - the two-point ("Bernoulli") inequality, evaluated directly by enumeration and through
//!   its decomposition `D = Σ E(z, w) = ½ vᵀ M v`;
//! - the kernel `M(z, w) = m(l(z) − l(w))` being positive semi-definite;
//! - the closed form `m̃` of the Fourier transform of `m` being nonnegative (Bochner);
//! - the general inequality for involution-equivalent pairs, and the summation identity
//!   that reduces it to the two-point case.
//!
//! Throughout, `r′ = 1 − r` and `s′ = 1 − s`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num::Zero;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mass::{Exact, Mass};
use crate::measures::{check_involution_equivalent, tv_distance, Involution, Measure};

/// Default cap on the number of outcomes of the largest product measure in a lemma check.
pub const DEFAULT_LEMMA_CAP: usize = 1_000_000;

/// Largest kernel dimension accepted by [`kernel_psd_check`].
pub const MAX_KERNEL_DIM: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BernoulliParams {
    /// `R(1)`.
    pub r: f64,
    /// `S(1)`.
    pub s: f64,
}

impl BernoulliParams {
    pub fn new(r: f64, s: f64) -> Result<Self> {
        for (name, v) in [("r", r), ("s", s)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!("{name} = {v} is not a probability")));
            }
        }
        Ok(BernoulliParams { r, s })
    }

    /// Half-width of the support of `t ↦ c(eᵗ)`: `½|log(r/r′)|`.
    pub fn c_support(&self) -> f64 {
        half_log_ratio(self.r).abs()
    }

    /// `½ log(s/s′)`, the shift in `m`.
    pub fn s_shift(&self) -> f64 {
        half_log_ratio(self.s)
    }

    /// Half-width of the support of `m`.
    pub fn m_support(&self) -> f64 {
        let sigma = if self.s > 0.0 && self.s < 1.0 {
            self.s_shift().abs()
        } else {
            0.0
        };
        self.c_support() + sigma
    }
}

fn half_log_ratio(p: f64) -> f64 {
    0.5 * (p / (1.0 - p)).ln()
}

/// `c(t) = |rt − r′/t| + |r′t − r/t| − |t − 1/t|` for `t > 0`.
pub fn c_func(params: &BernoulliParams, t: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("c(t) needs t > 0, got {t}")));
    }
    let (r, rp) = (params.r, 1.0 - params.r);
    Ok((r * t - rp / t).abs() + (rp * t - r / t).abs() - (t - 1.0 / t).abs())
}

/// `c(eᵗ)` in closed form. With `h = max(r, r′)`, `l = min(r, r′)` and `L = ½ log(h/l)`
/// this is `2(h e^{−|t|} − l e^{|t|})` for `|t| ≤ L` and zero beyond; the direct formula
/// loses all precision for large `|t|`.
pub fn c_exp(r: f64, t: f64) -> f64 {
    let (hi, lo) = if r >= 0.5 { (r, 1.0 - r) } else { (1.0 - r, r) };
    let a = t.abs();
    if lo == 0.0 {
        return 2.0 * hi * (-a).exp();
    }
    if a > 0.5 * (hi / lo).ln() {
        return 0.0;
    }
    2.0 * (hi * (-a).exp() - lo * a.exp())
}

/// `m(t) = c(eᵗ) − √(ss′)[c(√(s/s′)eᵗ) + c(√(s′/s)eᵗ)]`; for `s ∈ {0, 1}` the bracket
/// vanishes and `m(t) = c(eᵗ)`.
pub fn m_func(params: &BernoulliParams, t: f64) -> f64 {
    let base = c_exp(params.r, t);
    let s = params.s;
    if s <= 0.0 || s >= 1.0 {
        return base;
    }
    let sigma = params.s_shift();
    base - (s * (1.0 - s)).sqrt() * (c_exp(params.r, t + sigma) + c_exp(params.r, t - sigma))
}

fn cos_factor(p: f64, x: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 1.0;
    }
    1.0 - 2.0 * (p * (1.0 - p)).sqrt() * (0.5 * x * (p / (1.0 - p)).ln()).cos()
}

/// `m̃(x) = 4/(1+x²) · (1 − 2√(ss′) cos(½x log(s/s′))) · (1 − 2√(rr′) cos(½x log(r/r′)))`.
/// At `r` or `s ∈ {0, 1}` the corresponding factor takes its limit 1.
pub fn m_tilde(params: &BernoulliParams, x: f64) -> f64 {
    4.0 / (1.0 + x * x) * cos_factor(params.s, x) * cos_factor(params.r, x)
}

/// Integrates `f` over `[a, b]` to absolute error `tol`, bisecting while the error estimate
/// is too large.
fn integrate<F: Fn(f64) -> f64 + Copy>(f: F, a: f64, b: f64, tol: f64, depth: u32) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    let out = quadrature::integrate(f, a, b, tol);
    if out.error_estimate <= tol && out.integral.is_finite() {
        return Ok(out.integral);
    }
    if depth == 0 {
        return Err(Error::Quadrature(format!(
            "error estimate {:.3e} above {tol:.3e} on [{a}, {b}]",
            out.error_estimate
        )));
    }
    let mid = 0.5 * (a + b);
    Ok(integrate(f, a, mid, tol / 2.0, depth - 1)? + integrate(f, mid, b, tol / 2.0, depth - 1)?)
}

/// Outcome of comparing the numerical inverse Fourier transform of `m` with `m̃`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FourierCheck {
    /// Least-squares `κ` in `numeric ≈ κ·m̃`; `None` when `m̃` vanishes on the grid.
    pub fitted_constant: Option<f64>,
    /// `1/√(2π)`, the normalization of the transform.
    pub unitary_constant: f64,
    /// `max |numeric − κ·m̃|` over the grid.
    pub max_deviation: f64,
    /// `max |numeric − m̃/√(2π)|` over the grid.
    pub max_deviation_unitary: f64,
    /// Largest imaginary part of the numerical transform.
    pub max_imaginary: f64,
}

/// Evaluates `(1/√(2π)) ∫ m(t) e^{−itx} dt` on `x_grid` by adaptive quadrature over the
/// compact support of `m`, split at the kinks of `m`.
pub fn inverse_fourier_check(params: &BernoulliParams, x_grid: &[f64], quad_tol: f64) -> Result<FourierCheck> {
    if !(quad_tol > 0.0) {
        return Err(Error::InvalidArgument("quadrature tolerance must be positive".into()));
    }
    if params.r <= 0.0 || params.r >= 1.0 {
        return Err(Error::Contract(format!(
            "r = {} gives m an unbounded support",
            params.r
        )));
    }
    let unitary = 1.0 / (2.0 * PI).sqrt();
    let big_l = params.c_support();
    if big_l == 0.0 {
        // r = ½: c vanishes, and so do m and its transform.
        return Ok(FourierCheck {
            fitted_constant: None,
            unitary_constant: unitary,
            max_deviation: 0.0,
            max_deviation_unitary: 0.0,
            max_imaginary: 0.0,
        });
    }
    let sigma = if params.s > 0.0 && params.s < 1.0 {
        params.s_shift()
    } else {
        0.0
    };
    let width = params.m_support();
    let mut cuts = vec![-width, width];
    for base in [0.0, big_l, -big_l] {
        for shift in [0.0, sigma, -sigma] {
            let c = base + shift;
            if c > -width && c < width {
                cuts.push(c);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let seg_tol = quad_tol / (4.0 * cuts.len() as f64);

    let mut numeric = Vec::with_capacity(x_grid.len());
    let mut max_imaginary: f64 = 0.0;
    for &x in x_grid {
        let (mut re, mut im) = (0.0, 0.0);
        for w in cuts.windows(2) {
            re += integrate(|t| m_func(params, t) * (t * x).cos(), w[0], w[1], seg_tol, 24)?;
            im -= integrate(|t| m_func(params, t) * (t * x).sin(), w[0], w[1], seg_tol, 24)?;
        }
        numeric.push(re * unitary);
        max_imaginary = max_imaginary.max((im * unitary).abs());
    }
    let closed: Vec<f64> = x_grid.iter().map(|&x| m_tilde(params, x)).collect();
    let denom: f64 = closed.iter().map(|c| c * c).sum();
    let fitted = (denom > 0.0).then(|| numeric.iter().zip(&closed).map(|(n, c)| n * c).sum::<f64>() / denom);
    let dev = |k: f64| {
        numeric
            .iter()
            .zip(&closed)
            .map(|(n, c)| (n - k * c).abs())
            .fold(0.0, f64::max)
    };
    Ok(FourierCheck {
        fitted_constant: fitted,
        unitary_constant: unitary,
        max_deviation: dev(fitted.unwrap_or(0.0)),
        max_deviation_unitary: dev(unitary),
        max_imaginary,
    })
}

/// Kernel matrix `M(z, w) = m(l(z) − l(w))` over a list of finite scores.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelSpec {
    pub params: BernoulliParams,
    pub scores: Vec<f64>,
    pub matrix: DMatrix<f64>,
}

impl KernelSpec {
    pub fn from_scores(params: BernoulliParams, scores: Vec<f64>) -> Result<Self> {
        if let Some(s) = scores.iter().find(|s| !s.is_finite()) {
            return Err(Error::InvalidArgument(format!("score {s} is not finite")));
        }
        let n = scores.len();
        let matrix = DMatrix::from_fn(n, n, |i, j| m_func(&params, scores[i] - scores[j]));
        Ok(KernelSpec { params, scores, matrix })
    }

    /// Scores `l(z) = ½ log(P(z)/Q(z))` and weights `v(z) = √(P(z)Q(z))` over the outcomes
    /// where both measures are positive.
    pub fn from_measures(params: BernoulliParams, p: &Measure<f64>, q: &Measure<f64>) -> Result<(Self, Vec<f64>)> {
        p.check_same_domain(q)?;
        let (scores, weights): (Vec<f64>, Vec<f64>) = p
            .masses()
            .iter()
            .zip(q.masses())
            .filter(|(a, b)| **a > 0.0 && **b > 0.0)
            .map(|(a, b)| (0.5 * (a / b).ln(), (a * b).sqrt()))
            .unzip();
        Ok((Self::from_scores(params, scores)?, weights))
    }

    pub fn dim(&self) -> usize {
        self.scores.len()
    }

    /// `½ vᵀ M v`.
    pub fn half_quadratic_form(&self, v: &[f64]) -> f64 {
        let v = nalgebra::DVector::from_column_slice(v);
        0.5 * v.dot(&(&self.matrix * &v))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KernelCheck {
    pub min_eigenvalue: f64,
    pub passed: bool,
}

/// Smallest eigenvalue of the kernel matrix; passes iff it is at least `−tol`.
pub fn kernel_psd_check(spec: &KernelSpec, tol: f64) -> Result<KernelCheck> {
    if spec.dim() > MAX_KERNEL_DIM {
        return Err(Error::capacity(
            "kernel dimension",
            spec.dim() as u128,
            MAX_KERNEL_DIM as u128,
        ));
    }
    if spec.dim() == 0 {
        return Ok(KernelCheck {
            min_eigenvalue: 0.0,
            passed: true,
        });
    }
    let eig = SymmetricEigen::new(spec.matrix.clone());
    let min_eigenvalue = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(KernelCheck {
        min_eigenvalue,
        passed: min_eigenvalue >= -tol,
    })
}

fn bernoulli<M: Mass>(p1: &M) -> Result<(Measure<M>, Measure<M>)> {
    let p0 = M::one() - p1;
    Ok((
        Measure::from_masses(vec![p0.clone(), p1.clone()])?,
        Measure::from_masses(vec![p1.clone(), p0])?,
    ))
}

fn check_cap(outcomes: u128, cap: usize) -> Result<()> {
    if outcomes > cap as u128 {
        return Err(Error::capacity("lemma product outcomes", outcomes, cap as u128));
    }
    Ok(())
}

/// Left-hand side of the general inequality, each total variation by enumeration:
/// `tv(R×S×P×Q, R′×S′×Q×P) − tv(R×P×Q, R′×Q×P) − tv(S×P×Q, S′×Q×P) + tv(P×Q, Q×P)`.
fn lemma_lhs<M: Mass>(
    r: &Measure<M>,
    rp: &Measure<M>,
    s: &Measure<M>,
    sp: &Measure<M>,
    p: &Measure<M>,
    q: &Measure<M>,
    cap: usize,
) -> Result<M> {
    p.check_same_domain(q)?;
    check_cap(r.len() as u128 * s.len() as u128 * (p.len() as u128).pow(2), cap)?;
    let pq = p.product(q);
    let qp = q.product(p);
    let t1 = tv_distance(&r.product(s).product(&pq), &rp.product(sp).product(&qp))?;
    let t2 = tv_distance(&r.product(&pq), &rp.product(&qp))?;
    let t3 = tv_distance(&s.product(&pq), &sp.product(&qp))?;
    let t4 = tv_distance(&pq, &qp)?;
    Ok(t1 - t2 - t3 + t4)
}

/// Left-hand side of the two-point inequality with `R = (r′, r)`, `R′ = (r, r′)` on `{0, 1}`
/// and likewise for `S`. It is never positive.
pub fn bernoulli_lemma_lhs<M: Mass>(r: &M, s: &M, p: &Measure<M>, q: &Measure<M>, cap: usize) -> Result<M> {
    let (rm, rpm) = bernoulli(r)?;
    let (sm, spm) = bernoulli(s)?;
    lemma_lhs(&rm, &rpm, &sm, &spm, p, q, cap)
}

/// `D = Σ E(z, w)` split by whether the pair touches a zero-mass outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct BernoulliDecomposition<M> {
    /// The enumerated left-hand side.
    pub lhs: M,
    /// `Σ_{z,w} E(z, w)`, which equals `−lhs`.
    pub d_total: M,
    /// Sum over pairs with `P(z)P(w)Q(z)Q(w) = 0`, which is zero.
    pub d_zero_measure: M,
}

/// `E(z, w) = |rPQ′ − r′QP′| + |sPQ′ − s′QP′| − |rsPQ′ − r′s′QP′| − |rs′PQ′ − r′sQP′| − ½|PQ′ − QP′|`
/// with `P = P(z)`, `Q′ = Q(w)`, `Q = Q(z)`, `P′ = P(w)`.
pub fn e_term<M: Mass>(r: &M, s: &M, pz: &M, qz: &M, pw: &M, qw: &M) -> M {
    let rp = M::one() - r;
    let sp = M::one() - s;
    let a = pz.clone() * qw;
    let b = qz.clone() * pw;
    let term = |x: M, y: M| (x * &a - y * &b).abs();
    term(r.clone(), rp.clone()) + term(s.clone(), sp.clone())
        - term(r.clone() * s, rp.clone() * &sp)
        - term(r.clone() * &sp, rp * s)
        - (a.clone() - &b).abs() * M::half()
}

pub fn bernoulli_decomposition<M: Mass>(
    r: &M,
    s: &M,
    p: &Measure<M>,
    q: &Measure<M>,
    cap: usize,
) -> Result<BernoulliDecomposition<M>> {
    let lhs = bernoulli_lemma_lhs(r, s, p, q, cap)?;
    let (pm, qm) = (p.masses(), q.masses());
    let mut total = M::zero();
    let mut zero = M::zero();
    for z in 0..pm.len() {
        for w in 0..pm.len() {
            let e = e_term(r, s, &pm[z], &qm[z], &pm[w], &qm[w]);
            if pm[z].is_zero() || pm[w].is_zero() || qm[z].is_zero() || qm[w].is_zero() {
                zero = zero + &e;
            }
            total = total + e;
        }
    }
    Ok(BernoulliDecomposition {
        lhs,
        d_total: total,
        d_zero_measure: zero,
    })
}

/// Left-hand side of the general inequality. Requires `R ~ R′` under `f` and `S ~ S′`
/// under `g`; otherwise the hypothesis fails and a contract error is returned.
#[allow(clippy::too_many_arguments)]
pub fn general_lemma_lhs<M: Mass>(
    r: &Measure<M>,
    rp: &Measure<M>,
    f: &Involution,
    s: &Measure<M>,
    sp: &Measure<M>,
    g: &Involution,
    p: &Measure<M>,
    q: &Measure<M>,
    cap: usize,
) -> Result<M> {
    if !check_involution_equivalent(r, rp, f)? {
        return Err(Error::Contract(
            "R and R′ are not equivalent under the given involution".into(),
        ));
    }
    if !check_involution_equivalent(s, sp, g)? {
        return Err(Error::Contract(
            "S and S′ are not equivalent under the given involution".into(),
        ));
    }
    lemma_lhs(r, rp, s, sp, p, q, cap)
}

/// Both sides of `Σ φ(P(x), P′(x)) = Σ ((P(x)+P′(x))/2)(φ(U_x(1), U′_x(1)) + φ(U′_x(1), U_x(1)))`
/// with `U_x(1) = P(x)/(P(x)+P′(x))` and `U′_x(1) = P′(x)/(P(x)+P′(x))`. Outcomes with
/// `P(x) + P′(x) = 0` carry no weight and are skipped. `φ` must be positively homogeneous.
pub fn general_sum_identity<F>(p: &Measure<f64>, pp: &Measure<f64>, f: &Involution, phi: F) -> Result<(f64, f64)>
where
    F: Fn(f64, f64) -> f64,
{
    if !check_involution_equivalent(p, pp, f)? {
        return Err(Error::Contract(
            "P and P′ are not equivalent under the given involution".into(),
        ));
    }
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for (&a, &b) in p.masses().iter().zip(pp.masses()) {
        lhs += phi(a, b);
        let z = a + b;
        if z == 0.0 {
            continue;
        }
        let (u, up) = (a / z, b / z);
        rhs += z / 2.0 * (phi(u, up) + phi(up, u));
    }
    Ok((lhs, rhs))
}

/// Summary of one randomized section.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SectionSummary {
    pub checked: u64,
    pub failures: u64,
    /// A check passes iff its value is at most this bound.
    pub bound: f64,
    /// Largest value seen.
    pub worst_value: f64,
    /// Description of the first failing instance.
    pub first_failure: Option<String>,
    /// Extra section-specific statistics.
    pub stats: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TheoryReport {
    pub seed: u64,
    pub trials: u64,
    pub passed: bool,
    pub sections: BTreeMap<String, SectionSummary>,
}

/// Configuration of the randomized verification suite.
#[derive(Clone, Debug, PartialEq)]
pub struct TheorySuite {
    pub seed: u64,
    /// Instances per section (the general-inequality section uses half).
    pub trials: u64,
    /// Bound for float evaluations of the inequalities.
    pub lemma_tol: f64,
    pub kernel_tol: f64,
    pub fourier_tol: f64,
    /// Instances for the Fourier section, which is far more expensive per instance.
    pub fourier_trials: u64,
    /// Negates `m̃` so that the nonnegativity section must fail. Used to test failure paths.
    pub corrupt_m_tilde: bool,
}

impl Default for TheorySuite {
    fn default() -> Self {
        TheorySuite {
            seed: 0,
            trials: 1000,
            lemma_tol: 1e-10,
            kernel_tol: 1e-8,
            fourier_tol: 1e-6,
            fourier_trials: 20,
            corrupt_m_tilde: false,
        }
    }
}

struct Outcome {
    value: f64,
    passed: bool,
    instance: String,
    stats: Vec<(&'static str, f64)>,
}

impl Outcome {
    fn at_most(value: f64, bound: f64, instance: impl FnOnce() -> String) -> Self {
        let passed = value <= bound;
        Outcome {
            value,
            passed,
            instance: if passed { String::new() } else { instance() },
            stats: Vec::new(),
        }
    }
}

fn instance_rng(seed: u64, section: u64, i: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((section << 40) | i);
    rng
}

fn run_section<F>(seed: u64, section: u64, count: u64, bound: f64, check: F) -> SectionSummary
where
    F: Fn(&mut ChaCha8Rng) -> Outcome + Sync,
{
    let outcomes: Vec<Outcome> = (0..count)
        .into_par_iter()
        .map(|i| check(&mut instance_rng(seed, section, i)))
        .collect();
    let mut summary = SectionSummary {
        checked: count,
        failures: 0,
        bound,
        worst_value: f64::NEG_INFINITY,
        first_failure: None,
        stats: BTreeMap::new(),
    };
    for o in outcomes {
        // NaN counts as a failure and poisons the worst value.
        if o.value > summary.worst_value || o.value.is_nan() {
            summary.worst_value = o.value;
        }
        if !o.passed {
            summary.failures += 1;
            summary.first_failure.get_or_insert(o.instance);
        }
        for (k, v) in o.stats {
            let e = summary.stats.entry(format!("{k}_min")).or_insert(v);
            *e = e.min(v);
            let e = summary.stats.entry(format!("{k}_max")).or_insert(v);
            *e = e.max(v);
        }
    }
    summary
}

fn random_float_measure(rng: &mut ChaCha8Rng, n: usize, allow_zero: bool) -> Measure<f64> {
    loop {
        let w: Vec<f64> = (0..n)
            .map(|_| {
                if allow_zero && rng.gen_bool(0.2) {
                    0.0
                } else {
                    rng.gen::<f64>()
                }
            })
            .collect();
        let total: f64 = w.iter().sum();
        if total > 0.0 {
            return Measure::from_masses(w.iter().map(|x| x / total).collect()).expect("normalized");
        }
    }
}

fn random_counts_measure(rng: &mut ChaCha8Rng, n: usize, allow_zero: bool) -> Measure<Exact> {
    loop {
        let lo = if allow_zero { 0 } else { 1 };
        let counts: Vec<u64> = (0..n).map(|_| rng.gen_range(lo..=9)).collect();
        if counts.iter().any(|&c| c > 0) {
            return Measure::from_counts(&counts).expect("positive total");
        }
    }
}

fn random_rational(rng: &mut ChaCha8Rng) -> Exact {
    let d = rng.gen_range(1..=12u64);
    Exact::from_ratio(rng.gen_range(0..=d), d)
}

/// Uniform on `(0.05, 0.45) ∪ (0.55, 0.95)`: away from the endpoints and from ½, where `m`
/// is smooth with a nontrivial transform.
fn smooth_probability(rng: &mut ChaCha8Rng) -> f64 {
    let x = rng.gen_range(0.05..0.45);
    if rng.gen_bool(0.5) {
        x
    } else {
        1.0 - x
    }
}

fn random_involution(rng: &mut ChaCha8Rng, n: usize) -> Involution {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let mut map: Vec<usize> = (0..n).collect();
    for pair in idx.chunks(2) {
        if pair.len() == 2 && rng.gen_bool(0.7) {
            map[pair[0]] = pair[1];
            map[pair[1]] = pair[0];
        }
    }
    Involution::new(map).expect("built as an involution")
}

fn apply_involution<M: Mass>(m: &Measure<M>, f: &Involution) -> Measure<M> {
    Measure::new(
        m.outcomes().to_vec(),
        (0..m.len()).map(|x| m.mass(f.apply(x)).clone()).collect(),
    )
    .expect("permuted measure")
}

fn fmt_masses<M: Mass>(m: &Measure<M>) -> String {
    let parts: Vec<String> = m.masses().iter().map(|x| x.to_string()).collect();
    format!("[{}]", parts.join(", "))
}

impl TheorySuite {
    pub fn run(&self) -> TheoryReport {
        let mut sections = BTreeMap::new();
        let seed = self.seed;
        let n = self.trials;

        sections.insert(
            "c_reciprocal_symmetry".to_string(),
            run_section(seed, 1, n, 1e-9, |rng| {
                let p = BernoulliParams::new(rng.gen(), rng.gen()).expect("unit interval");
                let t = rng.gen_range(-5.0f64..5.0).exp();
                let a = c_func(&p, t).expect("t > 0");
                let b = c_func(&p, 1.0 / t).expect("t > 0");
                let closed = c_exp(p.r, t.ln());
                let scale = 1.0 + t + 1.0 / t;
                let value = ((a - b).abs()).max((a - closed).abs()) / scale;
                Outcome::at_most(value, 1e-9, || format!("r={} t={t}", p.r))
            }),
        );

        let corrupt = self.corrupt_m_tilde;
        sections.insert(
            "m_tilde_nonnegative".to_string(),
            run_section(seed, 2, n, 0.0, |rng| {
                let p = BernoulliParams::new(rng.gen(), rng.gen()).expect("unit interval");
                let sign = if corrupt { -1.0 } else { 1.0 };
                let worst = (0..101)
                    .map(|i| -100.0 + i as f64 * 2.0)
                    .map(|x| -sign * m_tilde(&p, x / 2.0))
                    .fold(f64::NEG_INFINITY, f64::max);
                Outcome::at_most(worst, 0.0, || format!("r={} s={}", p.r, p.s))
            }),
        );

        let ktol = self.kernel_tol;
        sections.insert(
            "kernel_psd".to_string(),
            run_section(seed, 3, n, ktol, |rng| {
                let p = BernoulliParams::new(rng.gen(), rng.gen()).expect("unit interval");
                let dim = rng.gen_range(1..=50);
                let scores: Vec<f64> = if rng.gen_bool(0.5) {
                    (0..dim).map(|_| rng.gen_range(-3.0..3.0)).collect()
                } else {
                    let pm = random_float_measure(rng, dim, false);
                    let qm = random_float_measure(rng, dim, false);
                    KernelSpec::from_measures(p, &pm, &qm).expect("same domain").0.scores
                };
                let spec = KernelSpec::from_scores(p, scores).expect("finite scores");
                let check = kernel_psd_check(&spec, ktol).expect("dimension within cap");
                Outcome::at_most(-check.min_eigenvalue, ktol, || format!("r={} s={} dim={dim}", p.r, p.s))
            }),
        );

        let ftol = self.fourier_tol;
        sections.insert(
            "inverse_fourier".to_string(),
            run_section(seed, 4, self.fourier_trials, ftol, |rng| {
                let p = BernoulliParams::new(smooth_probability(rng), smooth_probability(rng)).expect("unit interval");
                let grid: Vec<f64> = (0..101).map(|i| -10.0 + i as f64 * 0.2).collect();
                match inverse_fourier_check(&p, &grid, ftol * 1e-2) {
                    Ok(c) => {
                        let value = c.max_deviation.max(c.max_imaginary);
                        let mut o = Outcome::at_most(value, ftol, || format!("r={} s={}", p.r, p.s));
                        if let Some(k) = c.fitted_constant {
                            o.stats.push(("fitted_constant", k));
                        }
                        o.stats.push(("deviation_at_unitary_constant", c.max_deviation_unitary));
                        o
                    }
                    Err(e) => Outcome {
                        value: f64::INFINITY,
                        passed: false,
                        instance: format!("r={} s={}: {e}", p.r, p.s),
                        stats: Vec::new(),
                    },
                }
            }),
        );

        let ltol = self.lemma_tol;
        sections.insert(
            "bernoulli_float".to_string(),
            run_section(seed, 5, n, ltol, |rng| {
                let (r, s): (f64, f64) = (rng.gen(), rng.gen());
                let k = rng.gen_range(1..=4);
                let pm = random_float_measure(rng, k, true);
                let qm = random_float_measure(rng, k, true);
                let lhs = bernoulli_lemma_lhs(&r, &s, &pm, &qm, DEFAULT_LEMMA_CAP).expect("small instance");
                let mut o = Outcome::at_most(lhs, ltol, || {
                    format!("r={r} s={s} P={} Q={}", fmt_masses(&pm), fmt_masses(&qm))
                });
                // The quadratic form over the positive part reproduces −lhs.
                let p = BernoulliParams::new(r, s).expect("unit interval");
                let (spec, v) = KernelSpec::from_measures(p, &pm, &qm).expect("same domain");
                o.stats
                    .push(("quadratic_form_error", (spec.half_quadratic_form(&v) + lhs).abs()));
                o
            }),
        );

        sections.insert(
            "bernoulli_exact".to_string(),
            run_section(seed, 6, n, 0.0, |rng| {
                let (r, s) = (random_rational(rng), random_rational(rng));
                let k = rng.gen_range(1..=4);
                let pm = random_counts_measure(rng, k, true);
                let qm = random_counts_measure(rng, k, true);
                let d = bernoulli_decomposition(&r, &s, &pm, &qm, DEFAULT_LEMMA_CAP).expect("small instance");
                let consistent = d.d_total == -d.lhs.clone() && d.d_zero_measure == Exact::zero();
                let value = if consistent { d.lhs.to_f64() } else { f64::INFINITY };
                let passed = consistent && d.lhs <= Exact::zero();
                Outcome {
                    value,
                    passed,
                    instance: if passed {
                        String::new()
                    } else {
                        format!("r={r} s={s} P={} Q={} lhs={}", fmt_masses(&pm), fmt_masses(&qm), d.lhs)
                    },
                    stats: Vec::new(),
                }
            }),
        );

        sections.insert(
            "general_exact".to_string(),
            run_section(seed, 7, n.div_ceil(2), 0.0, |rng| {
                let (n1, n2, n3) = (rng.gen_range(1..=4), rng.gen_range(1..=4), rng.gen_range(1..=3));
                let (f, g) = (random_involution(rng, n1), random_involution(rng, n2));
                let r = random_counts_measure(rng, n1, true);
                let s = random_counts_measure(rng, n2, true);
                let (rp, sp) = (apply_involution(&r, &f), apply_involution(&s, &g));
                let pm = random_counts_measure(rng, n3, true);
                let qm = random_counts_measure(rng, n3, true);
                let lhs =
                    general_lemma_lhs(&r, &rp, &f, &s, &sp, &g, &pm, &qm, DEFAULT_LEMMA_CAP).expect("equivalent pairs");
                let passed = lhs <= Exact::zero();
                Outcome {
                    value: lhs.to_f64(),
                    passed,
                    instance: if passed {
                        String::new()
                    } else {
                        format!(
                            "R={} S={} P={} Q={} lhs={lhs}",
                            fmt_masses(&r),
                            fmt_masses(&s),
                            fmt_masses(&pm),
                            fmt_masses(&qm)
                        )
                    },
                    stats: Vec::new(),
                }
            }),
        );

        sections.insert(
            "general_sum_identity".to_string(),
            run_section(seed, 8, n, 1e-12, |rng| {
                let k = rng.gen_range(1..=8);
                let f = random_involution(rng, k);
                let pm = random_float_measure(rng, k, true);
                let pp = apply_involution(&pm, &f);
                let (a, b) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
                let phi = |x: f64, y: f64| (a * x - b * y).abs() + x.max(y) - (x * x + y * y).sqrt();
                let (lhs, rhs) = general_sum_identity(&pm, &pp, &f, phi).expect("equivalent pair");
                Outcome::at_most((lhs - rhs).abs(), 1e-12, || {
                    format!("P={} a={a} b={b}", fmt_masses(&pm))
                })
            }),
        );

        let passed = sections.values().all(|s| s.failures == 0);
        TheoryReport {
            seed,
            trials: n,
            passed,
            sections,
        }
    }
}
