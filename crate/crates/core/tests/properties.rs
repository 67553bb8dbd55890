use std::sync::Arc;

use num_traits::{Signed, Zero};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use renormlab::exact::{rat, Rational};
use renormlab::norms::{self, KadecOptions};
use renormlab::operators::{self, TreeOperators};
use renormlab::probes::{self, BetaStrategy};
use renormlab::tree::{generate, unfold, FiniteTree, TreeFn, UnfoldOptions};
use renormlab::weights::{self, WeightFn};

fn values(len: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<Rational>> {
    prop::collection::vec((-8i64..=8).prop_map(|k| rat(k, 4)), len)
}

fn seeded_tree(seed: u64, n: usize) -> (FiniteTree, WeightFn) {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let tree = generate::random_tree(&mut r, n, 3);
    let w = weights::random_weight(&mut r, tree.presentation(), 0.5, 4 * n as i64);
    (tree, w)
}

fn sum_sq(f: &TreeFn) -> Rational {
    f.values().iter().map(|v| v * v).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn day_norm_between_scaled_sup_and_l2(xs in values(0..=8)) {
        let sq = norms::day_sq_sorted(&xs);
        let sup = xs.iter().map(|v| v.abs()).max().unwrap_or_else(Rational::zero);
        prop_assert!(sq >= &sup * &sup / rat(2, 1));
        prop_assert!(sq <= sum_sq(&TreeFn::from_values(xs.clone())) / rat(2, 1));
    }

    #[test]
    fn ordinal_norm_is_sandwiched(xs in values(1..=12)) {
        let sq = norms::ordinal_sq(&xs);
        let sup = xs.iter().map(|v| v.abs()).max().unwrap();
        let top = &sup * &sup;
        prop_assert!(sq <= top);
        prop_assert!(sq >= top / rat(4, 1));
    }

    #[test]
    fn ordinal_triangle_inequality(pair in (1usize..=6).prop_flat_map(|n| (values(n..=n), values(n..=n)))) {
        let (x, y) = pair;
        let (x, y) = (TreeFn::from_values(x), TreeFn::from_values(y));
        let nx = norms::ordinal_norm(x.values(), 0, x.len() - 1).unwrap().as_f64();
        let ny = norms::ordinal_norm(y.values(), 0, y.len() - 1).unwrap().as_f64();
        let s = x.add(&y);
        let ns = norms::ordinal_norm(s.values(), 0, s.len() - 1).unwrap().as_f64();
        prop_assert!(ns <= nx + ny + 1e-12);
    }

    #[test]
    fn ordinal_norm_is_homogeneous(xs in values(1..=8), k in 1i64..=5) {
        let f = TreeFn::from_values(xs);
        let c = rat(k, 3);
        let scaled = norms::ordinal_sq(f.scale(&c).values());
        prop_assert_eq!(scaled, norms::ordinal_sq(f.values()) * &c * &c);
    }

    #[test]
    fn monotone_distance_vanishes_on_decreasing(n in 1usize..=10, seed in any::<u64>()) {
        let (tree, _) = seeded_tree(seed, n);
        // 1/(1+depth) is non-negative and decreasing along the order
        let f = TreeFn::from_values(tree.node_ids().map(|t| rat(1, 1 + tree.depth(t) as i64)).collect());
        prop_assert!(norms::monotone_distance(&tree, &f, None, true).is_zero());
    }

    #[test]
    fn antichain_means_do_not_exceed_sup(n in 1usize..=12, seed in any::<u64>(), l in 1usize..=6) {
        let (tree, _) = seeded_tree(seed, n);
        let mut r = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let f = probes::random_fn(&mut r, n, 4);
        let a = norms::antichain_mean(&tree, &f, None, l).unwrap();
        prop_assert!(a <= f.sup_norm());
    }

    #[test]
    fn operators_are_linear(n in 1usize..=20, seed in any::<u64>()) {
        let (tree, w) = seeded_tree(seed, n);
        let ops = TreeOperators::new(&tree, &w).unwrap();
        let mut r = ChaCha8Rng::seed_from_u64(seed ^ 2);
        let f = probes::random_fn(&mut r, n, 4);
        let g = probes::random_fn(&mut r, n, 4);
        let sum = ops.s(&f.add(&g));
        let (sf, sg) = (ops.s(&f), ops.s(&g));
        for t in tree.node_ids() {
            prop_assert_eq!(sum.get(&t), sf.get(&t) + sg.get(&t));
        }
    }

    #[test]
    fn talagrand_witness_exists(n in 1usize..=20, seed in any::<u64>()) {
        let (tree, w) = seeded_tree(seed, n);
        let ops = TreeOperators::new(&tree, &w).unwrap();
        let mut r = ChaCha8Rng::seed_from_u64(seed ^ 3);
        let f = probes::random_fn(&mut r, n, 4);
        prop_assume!(!f.is_zero());
        let rep = operators::check_talagrand(&[f], |f| {
            Ok(ops.t_special(f)?.iter().map(|(&(s, _), v)| (s, v.clone())).collect())
        }).unwrap();
        prop_assert_eq!(rep.witnessed, 1);
    }

    #[test]
    fn bump_values_are_bounded(n in 1usize..=20, seed in any::<u64>()) {
        let (tree, _) = seeded_tree(seed, n);
        let mut r = ChaCha8Rng::seed_from_u64(seed ^ 4);
        let f = probes::random_fn(&mut r, n, 8);
        let bm = operators::bump_map(&tree, &f, 6);
        for (&(_, k), v) in bm.values.iter() {
            prop_assert!(v.abs() <= renormlab::exact::pow2_neg(k));
        }
        prop_assert_eq!(bm.witness.is_some(), !f.is_zero());
    }

    #[test]
    fn game_invariant_holds(seed in any::<u64>(), rounds in 0usize..=40) {
        for strategy in BetaStrategy::ALL {
            let rep = probes::choquet_game(rounds, strategy, seed).unwrap();
            prop_assert!(rep.state.invariant_holds());
            prop_assert_eq!(rep.failed_round, None);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn kadec_value_within_bounds(n in 1usize..=8, seed in any::<u64>()) {
        let (tree, w) = seeded_tree(seed, n);
        let mut r = ChaCha8Rng::seed_from_u64(seed ^ 5);
        let f = probes::random_fn(&mut r, n, 4);
        let rep = norms::kadec_norm(&tree, &w, &f, &KadecOptions::default()).unwrap();
        let sup = renormlab::exact::to_f64(&f.sup_norm());
        let (v, e) = (rep.value.as_f64(), rep.value.radius_f64());
        prop_assert!(v <= sup + e && v >= sup / 4.0 - e);
    }

    #[test]
    fn fan_identity_on_dyadic_core(depth in 2usize..=7) {
        let p = Arc::new(generate::dyadic_loop());
        let tree = unfold(&p, UnfoldOptions::new(depth, 1)).unwrap();
        let w = WeightFn::constant(1, rat(1, 1));
        let triple = probes::deepest_fan_triple(&tree, &w, depth as u32).unwrap();
        prop_assert!(triple.identity_holds);
    }

    #[test]
    fn mu_estimate_improves_with_budget(len in 1usize..=3, small in 4usize..=40) {
        let parents: Vec<Option<usize>> = (0..len).map(|i| i.checked_sub(1)).collect();
        let tree = FiniteTree::from_parent_list(&parents).unwrap();
        let ord = |f: &TreeFn| Ok(renormlab::NormValue::from_square(norms::ordinal_sq(f.values())));
        let run = |budget| {
            let opts = probes::MuOptions { budget, ..Default::default() };
            probes::mu_of_indicator(&ord, &tree, renormlab::NodeId(0), &opts).unwrap().value
        };
        prop_assert!(run(small * 4) <= run(small));
    }
}
