use proptest::prelude::*;
use sgm::graph::EdgeSet;
use sgm::nodeset::NodeSet;
use sgm::scoring::{clique_loglik, clique_loglik_ordered, dirichlet_marginal_loglik, CountTable};
use sgm::stratified::{
    close_labels, common_node_candidates, is_regular, possible_elements, LabelSet, StratumElement,
};

/// `ln(a!) - ln(b!)` for `a >= b`, summed over integers.
fn ln_factorial_ratio(a: u64, b: u64) -> f64 {
    (b + 1..=a).map(|j| (j as f64).ln()).sum()
}

fn arb_table(min: usize, max: usize, max_count: u64) -> impl Strategy<Value = CountTable> {
    (min..=max).prop_flat_map(move |k| {
        prop::collection::vec(0..=max_count, 1 << k)
            .prop_map(move |c| CountTable::new(NodeSet::full(k), c).unwrap())
    })
}

/// A labeled clique on `0..k` whose labels share a node and are regular.
fn arb_labeled(
    min: usize,
    max: usize,
    max_count: u64,
) -> impl Strategy<Value = (CountTable, LabelSet)> {
    (
        arb_table(min, max, max_count),
        any::<prop::sample::Index>(),
        prop::collection::vec(0u8..3, 64),
    )
        .prop_map(|(table, centre, coins)| {
            let clique = table.scope();
            let w = clique.to_vec()[centre.index(clique.len())];
            let mut labels: LabelSet = possible_elements(clique, &EdgeSet::default())
                .into_iter()
                .filter(|el| el.edge.contains(w))
                .zip(coins)
                .filter(|(_, c)| *c == 0)
                .map(|(el, _)| el)
                .collect();
            // Drop elements until no stratum is full.
            while !is_regular(clique, &labels) {
                let first = *labels.iter().next().unwrap();
                labels.remove(&first);
            }
            (table, labels)
        })
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

fn valid_orders(clique: NodeSet, labels: &LabelSet) -> Vec<Vec<usize>> {
    let finals = if labels.is_empty() {
        clique
    } else {
        common_node_candidates(clique, labels.iter().map(|l| l.edge))
    };
    let mut out = Vec::new();
    for f in finals.iter() {
        for mut p in permutations(&clique.without(f).to_vec()) {
            p.push(f);
            out.push(p);
        }
    }
    out
}

fn with_one_more(table: &CountTable, outcome: usize) -> CountTable {
    let mut c = table.counts().to_vec();
    c[outcome] += 1;
    CountTable::new(table.scope(), c).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn empty_strata_match_unit_dirichlet(table in arb_table(1, 5, 40)) {
        let clique = table.scope();
        let a = clique_loglik(clique, &LabelSet::new(), &table).unwrap();
        let ones = vec![1.0; table.counts().len()];
        let b = dirichlet_marginal_loglik(&table, &ones).unwrap();
        prop_assert!((a.0 - b.0).abs() < 1e-9, "{} vs {}", a, b);
    }

    #[test]
    fn empty_strata_telescope_to_factorials(table in arb_table(1, 5, 40)) {
        let k = table.counts().len() as u64;
        let n = table.total();
        let expected = -ln_factorial_ratio(n + k - 1, k - 1)
            + table.counts().iter().map(|&c| ln_factorial_ratio(c, 0)).sum::<f64>();
        let got = clique_loglik(table.scope(), &LabelSet::new(), &table).unwrap();
        prop_assert!((got.0 - expected).abs() < 1e-9, "{} vs {}", got, expected);
    }

    #[test]
    fn every_valid_ordering_gives_the_same_score((table, labels) in arb_labeled(1, 4, 30)) {
        let clique = table.scope();
        let reference = clique_loglik(clique, &labels, &table).unwrap();
        for order in valid_orders(clique, &labels) {
            let s = clique_loglik_ordered(clique, &labels, &table, &order).unwrap();
            prop_assert!((s.0 - reference.0).abs() < 1e-9, "order {:?}: {} vs {}", order, s, reference);
        }
    }

    #[test]
    fn predictive_probabilities_sum_to_one((table, labels) in arb_labeled(1, 4, 25)) {
        let clique = table.scope();
        let base = clique_loglik(clique, &labels, &table).unwrap();
        let mut total = 0.0;
        for x in 0..table.counts().len() {
            let step = clique_loglik(clique, &labels, &with_one_more(&table, x)).unwrap().0 - base.0;
            prop_assert!(step <= 0.0 && step.is_finite());
            total += step.exp();
        }
        prop_assert!((total - 1.0).abs() < 1e-9, "sum {}", total);
    }

    #[test]
    fn implied_labels_leave_score_unchanged((table, labels) in arb_labeled(3, 5, 30)) {
        let clique = table.scope();
        let closed = close_labels(clique, &labels, &EdgeSet::default()).unwrap();
        prop_assume!(is_regular(clique, &closed));
        let a = clique_loglik(clique, &labels, &table).unwrap();
        let b = clique_loglik(clique, &closed, &table).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn labels_change_the_score_on_a_three_clique() {
    let clique = NodeSet::full(3);
    let table = CountTable::new(clique, vec![5, 1, 0, 7, 2, 2, 9, 3]).unwrap();
    let empty = clique_loglik(clique, &LabelSet::new(), &table).unwrap();
    let labeled: LabelSet = [StratumElement::new(sgm::nodeset::Edge::new(1, 2), 1)]
        .into_iter()
        .collect();
    assert_ne!(clique_loglik(clique, &labeled, &table).unwrap(), empty);
}
