//! Seeded generators of synthetic instances.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::joint_eval::{JointColumn, JointTable};
use crate::mass::Exact;
use crate::measures::Measure;
use crate::nb_model::ConditionalPair;

/// Measure from integer weights in `0..=9`, redrawn until some weight is positive.
pub fn random_exact_measure(rng: &mut ChaCha8Rng, n: usize) -> Measure<Exact> {
    loop {
        let counts: Vec<u64> = (0..n).map(|_| rng.gen_range(0..=9)).collect();
        if counts.iter().any(|&c| c > 0) {
            return Measure::from_counts(&counts).expect("positive total");
        }
    }
}

/// `n_cols` exact conditional pairs with vocabularies of size `1..=max_vocab`.
pub fn random_exact_pairs(rng: &mut ChaCha8Rng, n_cols: usize, max_vocab: usize) -> Vec<ConditionalPair<Exact>> {
    (0..n_cols)
        .map(|_| {
            let v = rng.gen_range(1..=max_vocab);
            ConditionalPair::new(random_exact_measure(rng, v), random_exact_measure(rng, v)).expect("same size")
        })
        .collect()
}

/// Float conditional pairs shaped like real categorical columns: value frequencies under
/// label 0 decay like `(v+1)^(-zipf)`, and label 1 tilts each value by `exp(N(0, τ²))` with a
/// per-column strength `τ` drawn uniformly from `[0, max_tilt]`.
pub fn random_float_pairs(
    rng: &mut ChaCha8Rng,
    n_cols: usize,
    max_vocab: usize,
    zipf: f64,
    max_tilt: f64,
) -> Vec<ConditionalPair<f64>> {
    (0..n_cols)
        .map(|_| {
            let v = rng.gen_range(2..=max_vocab.max(2));
            let tau = rng.gen_range(0.0..=max_tilt);
            let base: Vec<f64> = (0..v)
                .map(|i| (i as f64 + 1.0).powf(-zipf) * rng.gen_range(0.5..1.5))
                .collect();
            let tilted: Vec<f64> = base.iter().map(|b| b * (tau * standard_normal(rng)).exp()).collect();
            ConditionalPair::new(normalized(tilted), normalized(base)).expect("same size")
        })
        .collect()
}

fn normalized(w: Vec<f64>) -> Measure<f64> {
    let total: f64 = w.iter().sum();
    Measure::from_masses(w.into_iter().map(|x| x / total).collect()).expect("normalized")
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; the open interval keeps the logarithm finite.
    let u: f64 = rng.gen_range(f64::EPSILON..1.0);
    let v: f64 = rng.gen();
    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

/// Joint table over `n_cols` columns with vocabularies `1..=max_vocab` and integer weights
/// in `0..=9` on every `(x, c)` cell; both labels get positive mass.
pub fn random_joint_table(rng: &mut ChaCha8Rng, n_cols: usize, max_vocab: usize) -> JointTable<Exact> {
    let sizes: Vec<usize> = (0..n_cols).map(|_| rng.gen_range(1..=max_vocab)).collect();
    let cells: usize = sizes.iter().product();
    loop {
        let mut rows = Vec::with_capacity(2 * cells);
        let mut mass = [0u64; 2];
        for idx in 0..cells {
            let mut rest = idx;
            let mut values = vec![0u32; n_cols];
            for (slot, &s) in values.iter_mut().zip(&sizes).rev() {
                *slot = (rest % s) as u32;
                rest /= s;
            }
            for label in [0u8, 1] {
                let w = rng.gen_range(0..=9u64);
                mass[label as usize] += w;
                rows.push((values.clone(), label, w));
            }
        }
        if mass[0] == 0 || mass[1] == 0 {
            continue;
        }
        let total = mass[0] + mass[1];
        let columns = sizes
            .iter()
            .enumerate()
            .map(|(i, &s)| JointColumn::new(format!("c{i}"), (0..s).map(|v| format!("v{v}")).collect()))
            .collect();
        let rows = rows
            .into_iter()
            .map(|(v, c, w)| (v, c, Exact::new(w.into(), total.into())));
        return JointTable::new(columns, rows).expect("masses sum to one");
    }
}

/// Samples `rows` labeled rows from a naive-Bayes model with `Pr[C = 1] = pi1`. Returns
/// token ids per column and the label.
pub fn sample_nb_rows(
    rng: &mut ChaCha8Rng,
    pairs: &[ConditionalPair<f64>],
    pi1: f64,
    rows: usize,
) -> Vec<(Vec<u32>, u8)> {
    let draw = |rng: &mut ChaCha8Rng, m: &Measure<f64>| {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (i, p) in m.masses().iter().enumerate() {
            acc += p;
            if u < acc {
                return i as u32;
            }
        }
        (m.len() - 1) as u32
    };
    (0..rows)
        .map(|_| {
            let label = u8::from(rng.gen_bool(pi1));
            let values = pairs
                .iter()
                .map(|p| draw(rng, if label == 1 { &p.p1 } else { &p.p0 }))
                .collect();
            (values, label)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::Zero;
    use rand::SeedableRng;

    #[test]
    fn generators_are_seeded() {
        let a = random_exact_pairs(&mut ChaCha8Rng::seed_from_u64(3), 4, 5);
        let b = random_exact_pairs(&mut ChaCha8Rng::seed_from_u64(3), 4, 5);
        assert_eq!(a, b);
        let t = random_joint_table(&mut ChaCha8Rng::seed_from_u64(1), 2, 3);
        assert!(t.label_marginals().iter().all(|m| !m.is_zero()));
        let f = random_float_pairs(&mut ChaCha8Rng::seed_from_u64(9), 3, 20, 1.2, 1.0);
        assert!(f.iter().all(|p| p.len() >= 2 && p.len() <= 20));
        let rows = sample_nb_rows(&mut ChaCha8Rng::seed_from_u64(2), &f, 0.3, 50);
        assert_eq!(rows.len(), 50);
    }
}
