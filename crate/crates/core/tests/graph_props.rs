use proptest::prelude::*;
use sgm::graph::UndirectedGraph;
use sgm::nodeset::{Edge, NodeSet};
use sgm::oracle::{is_chordal_brute, separates_brute};

fn pairs(d: usize) -> Vec<Edge> {
    (0..d)
        .flat_map(|a| (a + 1..d).map(move |b| Edge::new(a, b)))
        .collect()
}

fn graph_from_mask(d: usize, mask: u64) -> UndirectedGraph {
    UndirectedGraph::from_edges(
        d,
        pairs(d)
            .into_iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, e)| e),
    )
}

fn maximal_complete_sets(g: &UndirectedGraph) -> Vec<NodeSet> {
    let d = g.node_count();
    let complete: Vec<NodeSet> = (1u64..(1 << d))
        .map(NodeSet::from_bits)
        .filter(|&s| g.is_complete_on(s))
        .collect();
    let mut out: Vec<NodeSet> = complete
        .iter()
        .copied()
        .filter(|&s| !complete.iter().any(|&t| t != s && s.is_subset(t)))
        .collect();
    out.sort();
    out
}

#[test]
fn chordality_matches_brute_force_up_to_six_nodes() {
    for d in 0usize..=6 {
        let m = d * d.saturating_sub(1) / 2;
        let mut chordal = 0;
        for mask in 0..(1u64 << m) {
            let g = graph_from_mask(d, mask);
            let expected = is_chordal_brute(&g);
            assert_eq!(g.is_decomposable(), expected, "d={d} mask={mask:#x}");
            chordal += expected as usize;
        }
        // Labeled chordal graph counts on d nodes (OEIS A058862).
        let known = [1, 1, 2, 8, 61, 822, 18154];
        assert_eq!(chordal, known[d], "d={d}");
    }
}

#[test]
fn decompositions_satisfy_running_intersection_up_to_six_nodes() {
    for d in 1..=6 {
        let m = d * (d - 1) / 2;
        for mask in 0..(1u64 << m) {
            let g = graph_from_mask(d, mask);
            if !g.is_decomposable() {
                assert!(g.clique_decomposition().is_err());
                continue;
            }
            let dec = g.clique_decomposition().unwrap();
            assert_eq!(
                dec.sorted_cliques(),
                maximal_complete_sets(&g),
                "mask={mask:#x}"
            );
            let cover = dec.cliques.iter().fold(NodeSet::EMPTY, |a, &c| a.union(c));
            assert_eq!(cover, g.nodes());
            assert_eq!(dec.separators.len() + 1, dec.cliques.len());
            let mut seen = dec.cliques[0];
            for (i, &c) in dec.cliques.iter().enumerate().skip(1) {
                let s = c.intersection(seen);
                assert_eq!(dec.separators[i - 1], s);
                assert!(
                    dec.cliques[..i].iter().any(|&earlier| s.is_subset(earlier)),
                    "running intersection fails at clique {c} (mask={mask:#x})"
                );
                seen = seen.union(c);
            }
        }
    }
}

#[test]
fn lone_clique_edges_have_rest_of_clique_as_common_neighbours() {
    for d in 3..=6 {
        let m = d * (d - 1) / 2;
        for mask in 0..(1u64 << m) {
            let g = graph_from_mask(d, mask);
            if !g.is_decomposable() {
                continue;
            }
            let dec = g.clique_decomposition().unwrap();
            for e in g.edges() {
                if let Some(c) = dec.unique_clique_of(e) {
                    assert_eq!(g.common_neighbors(e).unwrap(), c.difference(e.nodes()));
                }
            }
        }
    }
}

fn arb_graph(max_d: usize) -> impl Strategy<Value = UndirectedGraph> {
    (1..=max_d).prop_flat_map(|d| {
        let m = d * (d - 1) / 2;
        (Just(d), 0u64..(1u64 << m)).prop_map(|(d, mask)| graph_from_mask(d, mask))
    })
}

proptest! {
    #[test]
    fn separation_matches_path_enumeration(
        g in arb_graph(6),
        roles in prop::collection::vec(0u8..4, 6),
        pick in any::<(prop::sample::Index, prop::sample::Index)>(),
    ) {
        let d = g.node_count();
        prop_assume!(d >= 2);
        // Role 0 = A, 1 = B, 2 = S, 3 = neither; one node forced into each of A and B.
        let mut roles = roles[..d].to_vec();
        let i = pick.0.index(d);
        let j = (i + 1 + pick.1.index(d - 1)) % d;
        roles[i] = 0;
        roles[j] = 1;
        let set = |r: u8| (0..d).filter(|&v| roles[v] == r).collect::<NodeSet>();
        let (a, b, s) = (set(0), set(1), set(2));
        prop_assert_eq!(g.separates(a, b, s).unwrap(), separates_brute(&g, a, b, s));
    }

    #[test]
    fn toggling_twice_is_identity(g in arb_graph(7), i in any::<prop::sample::Index>()) {
        prop_assume!(g.node_count() >= 2);
        let all = pairs(g.node_count());
        let e = all[i.index(all.len())];
        prop_assert_eq!(g.toggled(e).toggled(e), g.clone());
        prop_assert_ne!(g.toggled(e).has_edge(e), g.has_edge(e));
    }
}
