use crossgreed::hardgen::{build_hard_instance, naive_bayes_violation, verify_reduction, Graph};
use crossgreed::joint_eval::JointTable;
use crossgreed::measures::{commutator_l1_sorted, commutator_tv, swap_sum_check, tv_distance};
use crossgreed::nb_model::DEFAULT_ORACLE_PAIR_CAP;
use crossgreed::score_dist::auc_from_scores;
use crossgreed::selector::{exhaustive_select, greedy_select, lazy_greedy_select, SelectorConfig};
use crossgreed::synth::{random_exact_measure, random_exact_pairs, random_joint_table};
use crossgreed::{ConvolveConfig, Exact, Involution, Mass, Measure, NbObjective, ScoreDistribution};
use num::{BigRational, One, Zero};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn half() -> Exact {
    Exact::half()
}

fn random_involution(r: &mut ChaCha8Rng, n: usize) -> Involution {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(r);
    let mut map: Vec<usize> = (0..n).collect();
    for pair in idx.chunks(2) {
        if pair.len() == 2 && r.gen_bool(0.6) {
            map[pair[0]] = pair[1];
            map[pair[1]] = pair[0];
        }
    }
    Involution::new(map).unwrap()
}

/// F of every subset of `0..n`, indexed by bitmask.
fn all_subset_values(obj: &NbObjective<Exact>, n: usize) -> Vec<Exact> {
    (0..1usize << n)
        .map(|mask| {
            let set: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            obj.f_of(&set).unwrap()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tv_is_a_bounded_symmetric_metric(seed in any::<u64>(), n in 1usize..8) {
        let mut r = rng(seed);
        let p = random_exact_measure(&mut r, n);
        let q = random_exact_measure(&mut r, n);
        let d = tv_distance(&p, &q).unwrap();
        prop_assert_eq!(&d, &tv_distance(&q, &p).unwrap());
        prop_assert!(d >= Exact::zero() && d <= Exact::one());
        prop_assert_eq!(d.is_zero(), p == q);
        prop_assert!(tv_distance(&p, &p).unwrap().is_zero());
    }

    #[test]
    fn commutator_matches_product_enumeration(seed in any::<u64>(), n in 1usize..=16) {
        let mut r = rng(seed);
        let p = random_exact_measure(&mut r, n);
        let q = random_exact_measure(&mut r, n);
        let c = commutator_tv(&p, &q).unwrap();
        prop_assert_eq!(&c, &tv_distance(&p.product(&q), &q.product(&p)).unwrap());
        prop_assert_eq!(&c, &commutator_tv(&q, &p).unwrap());
        prop_assert_eq!(c.clone() + &c, commutator_l1_sorted(p.masses(), q.masses()));
    }

    #[test]
    fn swap_sums_agree_for_equivalent_pairs(seed in any::<u64>(), n in 1usize..10) {
        let mut r = rng(seed);
        let f = random_involution(&mut r, n);
        let p = random_exact_measure(&mut r, n).convert::<f64>();
        let q = Measure::new(p.outcomes().to_vec(), (0..n).map(|x| *p.mass(f.apply(x))).collect()).unwrap();
        for _ in 0..20 {
            let (a, b, c): (f64, f64, f64) = (r.gen_range(-3.0..3.0), r.gen_range(-3.0..3.0), r.gen_range(0.0..2.0));
            let phi = move |x: f64, y: f64| (a * x + b * y).abs() + c * x.max(y) - (x * y).sqrt();
            prop_assert!(swap_sum_check(&p, &q, &f, phi).unwrap());
        }
    }

    #[test]
    fn score_law_auc_equals_commutator_identity(seed in any::<u64>(), n in 1usize..=8) {
        let mut r = rng(seed);
        let p1 = random_exact_measure(&mut r, n);
        let p0 = random_exact_measure(&mut r, n);
        let d = ScoreDistribution::from_conditional_pair(&p1, &p0).unwrap();
        let auc = auc_from_scores(&d);
        prop_assert_eq!(auc.value, half() + half() * commutator_tv(&p1, &p0).unwrap());
        prop_assert_eq!(auc.error_bound, 0.0);
    }

    #[test]
    fn convolution_is_commutative_and_associative(seed in any::<u64>(), n in 2usize..=4) {
        let mut r = rng(seed);
        let cfg = ConvolveConfig::default();
        let laws: Vec<ScoreDistribution<Exact>> = random_exact_pairs(&mut r, n, 4)
            .iter()
            .map(|p| ScoreDistribution::from_conditional_pair(&p.p1, &p.p0).unwrap())
            .collect();
        let ab = laws[0].convolve(&laws[1], &cfg).unwrap();
        prop_assert_eq!(&ab, &laws[1].convolve(&laws[0], &cfg).unwrap());
        if n >= 3 {
            let left = ab.convolve(&laws[2], &cfg).unwrap();
            let right = laws[0].convolve(&laws[1].convolve(&laws[2], &cfg).unwrap(), &cfg).unwrap();
            prop_assert_eq!(left, right);
        }
        prop_assert_eq!(laws[0].convolve(&ScoreDistribution::identity(), &cfg).unwrap(), laws[0].clone());
    }

    #[test]
    fn auc_depends_only_on_score_order(seed in any::<u64>(), n in 1usize..=3) {
        let mut r = rng(seed);
        let obj = NbObjective::from_pairs(random_exact_pairs(&mut r, n, 4), ConvolveConfig::default()).unwrap();
        let ids: Vec<usize> = (0..n).collect();
        let d = obj.score_dist_of(&ids).unwrap();
        // Ratios are positive; x ↦ x³ + 2x is strictly increasing there.
        let mapped = d.map_finite_scores(|s| s.clone() * s * s + s.clone() + s);
        prop_assert_eq!(auc_from_scores(&d).value, auc_from_scores(&mapped).value);
    }

    #[test]
    fn pruned_auc_stays_within_its_bound(seed in any::<u64>(), n in 2usize..=5) {
        let mut r = rng(seed);
        let exact_pairs = random_exact_pairs(&mut r, n, 8);
        let pairs = exact_pairs
            .iter()
            .map(|p| crossgreed::ConditionalPair::new(p.p1.convert::<f64>(), p.p0.convert::<f64>()).unwrap())
            .collect();
        let eps = [1e-2, 1e-3, 1e-4][r.gen_range(0..3)];
        let pruned = NbObjective::from_pairs(pairs, ConvolveConfig { prune_eps: eps, ..ConvolveConfig::default() }).unwrap();
        let exact = NbObjective::from_pairs(exact_pairs, ConvolveConfig::default()).unwrap();
        let ids: Vec<usize> = (0..n).collect();
        let v = pruned.score_dist_of(&ids).unwrap().auc();
        let truth = exact.auc_star(&ids).unwrap().to_f64();
        prop_assert!((v.value - truth).abs() <= v.error_bound + 1e-9, "{} vs {truth} bound {}", v.value, v.error_bound);
    }

    #[test]
    fn objective_is_monotone_submodular_and_matches_the_oracle(seed in any::<u64>(), n in 1usize..=5) {
        let mut r = rng(seed);
        let obj = NbObjective::from_pairs(random_exact_pairs(&mut r, n, 4), ConvolveConfig::default()).unwrap();
        let f = all_subset_values(&obj, n);
        for a in 0..f.len() {
            prop_assert!(f[a] >= Exact::zero() && f[a] <= Exact::one());
            for x in 0..n {
                if a >> x & 1 == 1 { continue; }
                prop_assert!(f[a | 1 << x] >= f[a]);
                for y in 0..n {
                    if y == x || a >> y & 1 == 1 { continue; }
                    let lhs = f[a | 1 << x].clone() - &f[a];
                    let rhs = f[a | 1 << x | 1 << y].clone() - &f[a | 1 << y];
                    prop_assert!(lhs >= rhs);
                }
            }
        }
        let ids: Vec<usize> = (0..n).collect();
        if let Ok(slow) = obj.auc_star_exact(&ids, DEFAULT_ORACLE_PAIR_CAP) {
            prop_assert_eq!(obj.auc_star(&ids).unwrap(), slow);
        }
    }

    #[test]
    fn no_scorer_beats_the_likelihood_ratio(seed in any::<u64>(), cols in 1usize..=3) {
        let mut r = rng(seed);
        let t: JointTable<Exact> = random_joint_table(&mut r, cols, 3);
        let set: Vec<usize> = (0..cols).collect();
        let best = t.auc_star_joint(&set).unwrap();
        let llr = t.log_likelihood_scores(&set).unwrap();
        prop_assert_eq!(t.auc_of_scorer(&set, &llr).unwrap(), best.clone());
        let size = t.cross_size(&set).unwrap() as usize;
        for _ in 0..10 {
            let sigma: Vec<f64> = (0..size).map(|_| r.gen_range(0..4) as f64).collect();
            let auc = t.auc_of_scorer(&set, &sigma).unwrap();
            prop_assert!(auc <= best);
            let moved: Vec<f64> = sigma.iter().map(|s| s.exp() * 3.0 - 1.0).collect();
            prop_assert_eq!(t.auc_of_scorer(&set, &moved).unwrap(), auc);
        }
    }

    #[test]
    fn product_tables_agree_with_the_objective(seed in any::<u64>(), n in 1usize..=3) {
        let mut r = rng(seed);
        let pairs = random_exact_pairs(&mut r, n, 4);
        let pi1 = BigRational::new(r.gen_range(1..10).into(), 10.into());
        let t = JointTable::from_naive_bayes(pi1, &pairs, 100_000).unwrap();
        let obj = NbObjective::from_pairs(pairs, ConvolveConfig::default()).unwrap();
        let set: Vec<usize> = (0..n).filter(|_| r.gen_bool(0.7)).collect();
        prop_assert_eq!(t.auc_star_joint(&set).unwrap(), obj.auc_star(&set).unwrap());
        prop_assert!(t.independence_gap(&set).unwrap().is_zero());
    }

    #[test]
    fn greedy_guarantee_and_lazy_agreement(seed in any::<u64>(), n in 1usize..=6, k in 0usize..=3) {
        let mut r = rng(seed);
        let obj = NbObjective::from_pairs(random_exact_pairs(&mut r, n, 3), ConvolveConfig::default()).unwrap();
        let u = obj.column_ids();
        let cfg = SelectorConfig { pad_to_k: true, ..SelectorConfig::default() };
        let g = greedy_select(&obj, &u, k, &cfg).unwrap();
        let l = lazy_greedy_select(&obj, &u, k, &cfg).unwrap();
        let e = exhaustive_select(&obj, &u, k, &cfg).unwrap();
        prop_assert_eq!(&g.selected, &l.selected);
        prop_assert!(g.gains_nonincreasing(0.0));
        prop_assert_eq!(l.stale_bound_violations, 0);
        // 1 − 1/e < 0.6322 < 0.6321206 + 1e-6; compare against the larger rational 6321206/10^7.
        let bound = BigRational::new(6_321_205.into(), 10_000_000.into());
        prop_assert!(g.value() >= bound * e.value());
        prop_assert_eq!(&g, &greedy_select(&obj, &u, k, &cfg).unwrap());
    }

    #[test]
    fn hardness_identities(seed in any::<u64>(), n in 2usize..=6) {
        let mut r = rng(seed);
        let g = Graph::gnp(n, 0.6, seed);
        prop_assume!(!g.edges().is_empty());
        let inst = build_hard_instance::<Exact>(&g).unwrap();
        prop_assert!(naive_bayes_violation(&inst).unwrap().is_some());
        let set: Vec<usize> = (0..n).filter(|_| r.gen_bool(0.5)).collect();
        let rec = verify_reduction(&inst, &set).unwrap();
        prop_assert!(rec.consistent(), "{:?}", rec);
        let two = Exact::one() + Exact::one();
        prop_assert_eq!(rec.normalized_auc, rec.phi.clone() * (two - &rec.phi));
    }
}
