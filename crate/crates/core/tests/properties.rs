mod common;

use std::collections::BTreeMap;

use acyclic_mpc::cec::{edge_cover_with_order, is_k_group, Clustering};
use acyclic_mpc::engine::{run, EngineConfig};
use acyclic_mpc::gen::{generate, GeneratorSpec, Skew};
use acyclic_mpc::hypergraph::validate_tree;
use acyclic_mpc::load::{induced_load_sizes, load_upper_bound, max_k_product_sizes, Sizes};
use acyclic_mpc::oracle::{oracle_acyclic, oracle_is_k_group, oracle_join, oracle_max_k_product, oracle_min_cover};
use acyclic_mpc::simcluster::{Block, SimCluster};
use acyclic_mpc::{build_join_tree, edge_cover, signature_paths, AttrSet, Relation};
use common::{clean_tree, random_acyclic, random_reverse_topological, walk_simplifications, SimplificationTally};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn graph(seed: u64) -> acyclic_mpc::Hypergraph {
    random_acyclic(&mut ChaCha8Rng::seed_from_u64(seed), 6, 10)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn generated_graphs_are_acyclic(seed in any::<u64>()) {
        let g = graph(seed);
        prop_assert!(oracle_acyclic(&g).unwrap());
        let t = build_join_tree(&g).unwrap();
        prop_assert!(validate_tree(&t));
        prop_assert!(t.is_raw_leaf(t.root()) || t.len() == 1);
    }

    #[test]
    fn cover_is_minimum_and_order_independent(seed in any::<u64>()) {
        let g = graph(seed);
        let t = build_join_tree(&g).unwrap();
        let f = edge_cover(&t);
        prop_assert_eq!(f.len(), oracle_min_cover(&g).unwrap());
        prop_assert_eq!(f.covered(), g.vertex_set());
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        for _ in 0..5 {
            let order = random_reverse_topological(&t, &mut rng);
            let other = edge_cover_with_order(&t, &order).unwrap();
            prop_assert_eq!(other.members(), f.members());
        }
    }

    #[test]
    fn clean_trees_keep_every_raw_leaf(seed in any::<u64>()) {
        let t = clean_tree(&graph(seed));
        prop_assert!(t.graph().is_clean());
        let f = edge_cover(&t);
        for leaf in t.raw_leaves() {
            prop_assert!(f.contains(leaf));
        }
        let c = signature_paths(&f).unwrap();
        prop_assert_eq!(c.len(), f.len());
        prop_assert_eq!(c.union(), t.graph().edge_ids().collect());
    }

    #[test]
    fn simplifications_carry_the_cover(seed in any::<u64>()) {
        let t = clean_tree(&graph(seed));
        let mut tally = SimplificationTally::default();
        walk_simplifications(&edge_cover(&t), &mut tally, true);
        prop_assert!(tally.violations.is_empty(), "{:?}", tally.violations);
    }

    #[test]
    fn max_k_product_matches_exhaustive(seed in any::<u64>(), raw in prop::collection::vec(0u64..50, 6)) {
        let t = clean_tree(&graph(seed));
        let c = signature_paths(&edge_cover(&t)).unwrap();
        let sizes: Sizes = t.graph().edge_ids().zip(raw.iter().copied()).collect();
        for k in 1..=c.len() {
            prop_assert_eq!(max_k_product_sizes(&sizes, &c, k).unwrap(), oracle_max_k_product(&sizes, &c, k));
        }
    }

    #[test]
    fn k_group_matching_agrees_with_backtracking(sets in prop::collection::vec(prop::collection::btree_set(0usize..6, 1..4), 1..5),
                                                 group in prop::collection::vec(0usize..6, 0..5)) {
        let c = Clustering::from_sets(sets.into_iter().map(|s| s.into_iter().collect()).collect()).unwrap();
        prop_assert_eq!(is_k_group(&c, &group), oracle_is_k_group(&c, &group));
    }

    #[test]
    fn load_is_scale_monotone_and_bounded(seed in any::<u64>(), raw in prop::collection::vec(1u64..1000, 6), p in 1usize..100) {
        let t = clean_tree(&graph(seed));
        let c = signature_paths(&edge_cover(&t)).unwrap();
        let sizes: Sizes = t.graph().edge_ids().zip(raw.iter().copied()).collect();
        let doubled: Sizes = sizes.iter().map(|(&e, &s)| (e, 2 * s)).collect();
        let l = induced_load_sizes(&sizes, &c, p).unwrap().l;
        prop_assert!(induced_load_sizes(&doubled, &c, p).unwrap().l >= l);
        let m: u64 = sizes.values().sum();
        prop_assert!(l <= load_upper_bound(m, p, c.len()) * (1.0 + 1e-9));
    }

    #[test]
    fn sort_semi_join_matches_nested_loop(big in prop::collection::vec((0u64..8, 0u64..8), 0..60),
                                          small in prop::collection::vec(0u64..8, 0..20),
                                          p in 1usize..9) {
        let ab = AttrSet::from_ids([0, 1]);
        let b = AttrSet::from_ids([1]);
        let big = Relation::new(ab, big.into_iter().map(|(x, y)| vec![x, y]).collect()).unwrap();
        let small = Relation::new(b, small.into_iter().map(|y| vec![y]).collect()).unwrap();
        let mut cl = SimCluster::new(p).unwrap();
        let block = Block::physical(p);
        let db = cl.place_round_robin(&big, &block);
        let ds = cl.place_round_robin(&small, &block);
        let out = cl.semi_join(0, &db, &ds, &block).unwrap();
        let nested: Vec<Vec<u64>> = big.tuples().iter().filter(|t| small.tuples().iter().any(|s| s[0] == t[1])).cloned().collect();
        prop_assert_eq!(out.collect(), Relation::new(ab, nested).unwrap());
        for (recv, sent) in cl.round_totals().values() {
            prop_assert_eq!(recv, sent);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn engine_matches_backtracking_join(seed in any::<u64>(), p in prop::sample::select(vec![1usize, 2, 3, 8, 16]),
                                        skew in prop::sample::select(vec!["uniform", "zipf:1.2", "heavy:0.5"])) {
        let g = graph(seed);
        let spec = GeneratorSpec { planted: 2, ..GeneratorSpec::new(seed, 25, skew.parse::<Skew>().unwrap(), 6) };
        let inst = generate(&g, &spec).unwrap();
        let sol = run(&inst, None, p, &EngineConfig::default()).unwrap();
        prop_assert_eq!(sol.collect(), oracle_join(&inst, 1_000_000).unwrap());
        prop_assert!(sol.report.load.rounds <= sol.report.round_cap);
        let again = run(&inst, None, p, &EngineConfig::default()).unwrap();
        prop_assert_eq!(&again.report.load, &sol.report.load);
        prop_assert_eq!(again.collect(), sol.collect());
        let conserved = !sol.report.violations.iter().any(|v| v.contains("received but"));
        prop_assert!(conserved);
    }
}

#[test]
fn scatter_conserves_words_and_balances() {
    let r = Relation::new(AttrSet::from_ids([0, 1, 2]), (0..100).map(|i| vec![i, i + 1, i + 2]).collect()).unwrap();
    let mut cl = SimCluster::new(7).unwrap();
    let src = cl.place_round_robin(&r, &Block::physical(7));
    let out = cl.scatter_balanced(0, &[&src], &Block::physical(7)).unwrap();
    assert_eq!(out[0].collect(), r);
    let totals: BTreeMap<_, _> = cl.round_totals();
    assert_eq!(totals[&0].0, totals[&0].1);
    assert!(cl.round_loads()[0] <= 3 * 15);
}
