use std::collections::{BTreeSet, HashSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sgm::data::{counts, simulate_sgm, BinaryDataMatrix, GeneratorSpec};
use sgm::experiment::THREE_CLIQUE_SPEC;
use sgm::graph::{EdgeSet, UndirectedGraph};
use sgm::nodeset::{Edge, NodeSet};
use sgm::oracle::{brute_force_best, enumerate_clique_labelings, enumerate_models};
use sgm::scoring::{clique_loglik, log_unnormalized_posterior};
use sgm::search::{label_chain_ledger, label_moves, learn, optimal_labels_for_clique, LearnConfig};
use sgm::stratified::{is_maximal_regular_clique, LabelSet, StratifiedGraph, StratumElement};

fn coins(d: usize, n: usize, seed: u64) -> BinaryDataMatrix {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..n)
        .map(|_| rng.random::<u64>() & ((1 << d) - 1))
        .collect();
    BinaryDataMatrix::with_default_names(d, rows).unwrap()
}

fn triangle_data(n: usize, seed: u64) -> BinaryDataMatrix {
    simulate_sgm(
        &GeneratorSpec::from_json(THREE_CLIQUE_SPEC).unwrap(),
        n,
        seed,
    )
    .unwrap()
}

fn single_label_triangle() -> StratifiedGraph {
    StratifiedGraph::new(
        UndirectedGraph::complete(3),
        [StratumElement::new(Edge::new(1, 2), 1)]
            .into_iter()
            .collect(),
    )
}

#[test]
fn three_variable_model_space() {
    let models = enumerate_models(3).unwrap();
    // Computed once by the oracle and frozen: seven graphs without a
    // triangle plus the 19 labelings of the complete graph.
    assert_eq!(models.len(), 26);
    for m in &models {
        assert!(m.is_decomposable_sg());
        assert!(m.is_maximal_regular().unwrap());
    }
    let keys: HashSet<String> = models.iter().map(|m| m.canonical_key()).collect();
    assert_eq!(keys.len(), models.len());
}

#[test]
fn distinct_models_have_distinct_dependence_structures() {
    let models = enumerate_models(3).unwrap();
    let structures: HashSet<_> = models
        .iter()
        .map(|m| m.dependence_structure().unwrap())
        .collect();
    assert_eq!(structures.len(), models.len());
}

#[test]
fn library_maximality_agrees_with_enumeration_on_the_triangle() {
    let clique = NodeSet::full(3);
    let enumerated: BTreeSet<LabelSet> = enumerate_clique_labelings(clique, &[])
        .unwrap()
        .into_iter()
        .collect();
    // Every label set reachable from the empty set by proposals.
    let mut reached = BTreeSet::from([LabelSet::new()]);
    let mut frontier = vec![LabelSet::new()];
    while let Some(state) = frontier.pop() {
        for next in label_moves(&state, clique, &EdgeSet::default()).unwrap() {
            assert!(is_maximal_regular_clique(
                clique,
                &next,
                &EdgeSet::default()
            ));
            if reached.insert(next.clone()) {
                frontier.push(next);
            }
        }
    }
    assert_eq!(reached, enumerated);
}

#[test]
fn single_deletions_cannot_break_a_cycle_of_links() {
    // On {X1,X2,X3,X4} with X3 final, these four labels link the parent
    // outcomes (X1,X2,X4) = 000-100, 001-101, 000-001 and 100-101: a cycle.
    // Any three links imply the fourth, so every deletion is undone by the
    // expansion step and the proposal can only add labels from here.
    let clique = NodeSet::full(4);
    let forbidden = EdgeSet::default();
    let el = |a: usize, b: usize, c: u64| StratumElement::new(Edge::new(a, b), c);
    let cycle: LabelSet = [el(0, 2, 0), el(0, 2, 2), el(2, 3, 0), el(2, 3, 1)]
        .into_iter()
        .collect();
    assert!(is_maximal_regular_clique(clique, &cycle, &forbidden));
    let moves = label_moves(&cycle, clique, &forbidden).unwrap();
    assert!(moves.contains(&cycle));
    assert!(moves.iter().all(|m| cycle.is_subset(m)));
    assert!(moves.len() > 1);
}

#[test]
fn label_chain_visits_only_maximal_regular_states() {
    let data = triangle_data(400, 3);
    let clique = NodeSet::full(3);
    let table = counts(&data, clique).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let ledger = label_chain_ledger(clique, &EdgeSet::default(), &table, 300, &mut rng).unwrap();
    assert!(ledger.len() > 1);
    for (labels, score) in &ledger {
        assert!(is_maximal_regular_clique(
            clique,
            labels,
            &EdgeSet::default()
        ));
        assert_eq!(*score, clique_loglik(clique, labels, &table).unwrap());
    }
}

#[test]
fn label_chain_finds_the_generating_stratum() {
    let data = triangle_data(10_000, 5);
    let clique = NodeSet::full(3);
    let table = counts(&data, clique).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let opt =
        optimal_labels_for_clique(clique, &EdgeSet::default(), &table, 300, &mut rng).unwrap();
    assert_eq!(&opt.labels, single_label_triangle().labels());
    let best_by_enumeration = enumerate_clique_labelings(clique, &[])
        .unwrap()
        .into_iter()
        .max_by(|a, b| {
            clique_loglik(clique, a, &table)
                .unwrap()
                .0
                .total_cmp(&clique_loglik(clique, b, &table).unwrap().0)
        })
        .unwrap();
    assert_eq!(opt.labels, best_by_enumeration);
}

#[test]
fn brute_force_examples() {
    let (best, _) = brute_force_best(&coins(3, 5000, 1)).unwrap();
    assert_eq!(best.graph().edge_count(), 0);

    let (best, _) = brute_force_best(&triangle_data(10_000, 8)).unwrap();
    assert_eq!(best, single_label_triangle());

    let empty = BinaryDataMatrix::with_default_names(3, vec![]).unwrap();
    let (best, score) = brute_force_best(&empty).unwrap();
    assert_eq!(best.graph().edge_count(), 0);
    assert_eq!(score.0, 0.0);
}

#[test]
fn exhaustive_posterior_normalizes() {
    let data = triangle_data(60, 4);
    let scores: Vec<f64> = enumerate_models(3)
        .unwrap()
        .iter()
        .map(|m| log_unnormalized_posterior(m, &data).unwrap().0)
        .collect();
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = scores.iter().map(|s| (s - max).exp()).sum();
    assert!(z.is_finite() && z >= 1.0);
    let total: f64 = scores.iter().map(|s| (s - max).exp() / z).sum();
    assert!((total - 1.0).abs() < 1e-12);
}

fn small_config(seed: u64) -> LearnConfig {
    LearnConfig {
        graph_iterations: 400,
        seed,
        ..LearnConfig::default()
    }
}

#[test]
fn learning_is_deterministic_and_cache_transparent() {
    let data = sgm::data::simulate_seven_variable(300, 9);
    let config = small_config(4);
    let a = learn(&data, &config).unwrap();
    let b = learn(&data, &config).unwrap();
    assert_eq!(a, b);
    let uncached = learn(
        &data,
        &LearnConfig {
            use_cache: false,
            ..config
        },
    )
    .unwrap();
    assert_eq!(a, uncached);
}

#[test]
fn ledger_scores_rescore_exactly() {
    let data = sgm::data::simulate_seven_variable(300, 10);
    let out = learn(&data, &small_config(5)).unwrap();
    assert!(out.ranked.len() > 10);
    let mut total = 0.0;
    for entry in &out.ranked {
        assert!(entry.model.graph().is_decomposable());
        assert!(entry.model.is_decomposable_sg());
        let rescored = log_unnormalized_posterior(&entry.model, &data).unwrap();
        assert_eq!(rescored.0.to_bits(), entry.log_posterior.0.to_bits());
        assert!(entry.posterior_estimate >= 0.0);
        total += entry.posterior_estimate;
    }
    assert!((total - 1.0).abs() < 1e-9);
    for pair in out.ranked.windows(2) {
        assert!(pair[0].log_posterior.0 >= pair[1].log_posterior.0);
    }
}

#[test]
fn independent_coins_learn_the_empty_graph() {
    let data = coins(4, 5000, 2);
    let out = learn(&data, &small_config(1)).unwrap();
    assert_eq!(out.best().model.graph().edge_count(), 0);
}

#[test]
fn learn_matches_brute_force_on_the_generating_model() {
    let data = triangle_data(5000, 12);
    let out = learn(&data, &LearnConfig::default()).unwrap();
    let (best, score) = brute_force_best(&data).unwrap();
    assert_eq!(out.best().model, best);
    assert!((out.best().log_posterior.0 - score.0).abs() < 1e-9);
}
