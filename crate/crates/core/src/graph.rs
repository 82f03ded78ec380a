//! Undirected graphs, chordality, and junction-tree clique decompositions.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::nodeset::{Edge, NodeSet, MAX_NODES};

/// A simple undirected graph on nodes `0..d`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct UndirectedGraph {
    adj: Vec<NodeSet>,
}

impl UndirectedGraph {
    /// The graph on `d` nodes with no edges.
    pub fn empty(d: usize) -> Self {
        assert!(d <= MAX_NODES, "at most {MAX_NODES} nodes are supported");
        UndirectedGraph {
            adj: vec![NodeSet::EMPTY; d],
        }
    }

    pub fn complete(d: usize) -> Self {
        let mut g = Self::empty(d);
        for e in Edge::within(NodeSet::full(d)) {
            g.add_edge(e);
        }
        g
    }

    pub fn from_edges(d: usize, edges: impl IntoIterator<Item = Edge>) -> Self {
        let mut g = Self::empty(d);
        for e in edges {
            g.add_edge(e);
        }
        g
    }

    /// Builds a graph from 1-based node pairs.
    pub fn from_one_based(d: usize, pairs: &[(usize, usize)]) -> Self {
        Self::from_edges(d, pairs.iter().map(|&(a, b)| Edge::new(a - 1, b - 1)))
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn nodes(&self) -> NodeSet {
        NodeSet::full(self.adj.len())
    }

    pub fn add_edge(&mut self, e: Edge) {
        assert!(e.hi() < self.adj.len(), "edge {e} out of range");
        self.adj[e.lo()].insert(e.hi());
        self.adj[e.hi()].insert(e.lo());
    }

    pub fn remove_edge(&mut self, e: Edge) {
        self.adj[e.lo()].remove(e.hi());
        self.adj[e.hi()].remove(e.lo());
    }

    /// A copy with `e` added if absent or removed if present.
    pub fn toggled(&self, e: Edge) -> Self {
        let mut g = self.clone();
        if g.has_edge(e) {
            g.remove_edge(e);
        } else {
            g.add_edge(e);
        }
        g
    }

    pub fn has_edge(&self, e: Edge) -> bool {
        e.hi() < self.adj.len() && self.adj[e.lo()].contains(e.hi())
    }

    pub fn neighbors(&self, v: usize) -> NodeSet {
        self.adj[v]
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.adj.iter().enumerate().flat_map(|(a, nb)| {
            nb.iter()
                .filter(move |&b| b > a)
                .map(move |b| Edge::new(a, b))
        })
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|n| n.len()).sum::<usize>() / 2
    }

    pub fn is_complete_on(&self, set: NodeSet) -> bool {
        set.iter().all(|v| set.without(v).is_subset(self.adj[v]))
    }

    /// Visit order of a maximum cardinality search. Ties go to the smallest
    /// node index, so the order is deterministic.
    pub fn mcs_order(&self) -> Vec<usize> {
        let d = self.adj.len();
        let mut weight = vec![0usize; d];
        let mut visited = NodeSet::EMPTY;
        let mut order = Vec::with_capacity(d);
        for _ in 0..d {
            let v = (0..d)
                .filter(|&v| !visited.contains(v))
                .max_by(|&a, &b| weight[a].cmp(&weight[b]).then(b.cmp(&a)))
                .expect("unvisited node remains");
            visited.insert(v);
            order.push(v);
            for u in self.adj[v].difference(visited).iter() {
                weight[u] += 1;
            }
        }
        order
    }

    /// Chordality via maximum cardinality search followed by the
    /// Tarjan–Yannakakis zero fill-in check.
    pub fn is_decomposable(&self) -> bool {
        let order = self.mcs_order();
        let mut position = vec![0usize; order.len()];
        for (i, &v) in order.iter().enumerate() {
            position[v] = i;
        }
        let mut earlier = NodeSet::EMPTY;
        for &v in &order {
            let back = self.adj[v].intersection(earlier);
            if let Some(parent) = back.iter().max_by_key(|&u| position[u]) {
                let rest = back.without(parent);
                let parent_back = self.adj[parent].intersection(earlier);
                if !rest.is_subset(parent_back) {
                    return false;
                }
            }
            earlier.insert(v);
        }
        true
    }

    /// Maximal cliques in junction-tree order, with the aligned separators.
    pub fn clique_decomposition(&self) -> Result<CliqueDecomposition> {
        if !self.is_decomposable() {
            return Err(Error::NotDecomposable);
        }
        let order = self.mcs_order();
        let mut earlier = NodeSet::EMPTY;
        let mut candidates = Vec::with_capacity(order.len());
        for &v in &order {
            candidates.push(self.adj[v].intersection(earlier).with(v));
            earlier.insert(v);
        }
        // In MCS order a candidate can only be swallowed by a later one.
        let cliques: Vec<NodeSet> = candidates
            .iter()
            .enumerate()
            .filter(|&(i, c)| !candidates[i + 1..].iter().any(|later| c.is_subset(*later)))
            .map(|(_, &c)| c)
            .collect();
        let mut seen = NodeSet::EMPTY;
        let mut separators = Vec::with_capacity(cliques.len().saturating_sub(1));
        for (i, c) in cliques.iter().enumerate() {
            if i > 0 {
                separators.push(c.intersection(seen));
            }
            seen = seen.union(*c);
        }
        Ok(CliqueDecomposition {
            cliques,
            separators,
        })
    }

    /// True iff every path from `a` to `b` passes through `s`.
    pub fn separates(&self, a: NodeSet, b: NodeSet, s: NodeSet) -> Result<bool> {
        if !a.is_disjoint(b) || !a.is_disjoint(s) || !b.is_disjoint(s) {
            return Err(Error::OverlappingSets);
        }
        let mut reached = a;
        let mut queue: VecDeque<usize> = a.iter().collect();
        while let Some(v) = queue.pop_front() {
            for u in self.adj[v].difference(reached).difference(s).iter() {
                if b.contains(u) {
                    return Ok(false);
                }
                reached.insert(u);
                queue.push_back(u);
            }
        }
        Ok(true)
    }

    /// Nodes adjacent to both endpoints of `e`.
    pub fn common_neighbors(&self, e: Edge) -> Result<NodeSet> {
        if !self.has_edge(e) {
            return Err(Error::MissingEdge(e));
        }
        Ok(self.adj[e.lo()].intersection(self.adj[e.hi()]))
    }
}

/// Maximal cliques of a chordal graph in a running-intersection order.
/// `separators[i]` is the intersection of `cliques[i + 1]` with the union
/// of the cliques before it; empty separators are kept.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CliqueDecomposition {
    pub cliques: Vec<NodeSet>,
    pub separators: Vec<NodeSet>,
}

impl CliqueDecomposition {
    /// Cliques sorted lexicographically.
    pub fn sorted_cliques(&self) -> Vec<NodeSet> {
        let mut c = self.cliques.clone();
        c.sort();
        c
    }

    /// Non-empty separators sorted lexicographically.
    pub fn sorted_separators(&self) -> Vec<NodeSet> {
        let mut s: Vec<NodeSet> = self
            .separators
            .iter()
            .copied()
            .filter(|s| !s.is_empty())
            .collect();
        s.sort();
        s
    }

    /// Every edge with both endpoints in some separator.
    pub fn separator_edges(&self) -> EdgeSet {
        let mut edges: Vec<Edge> = self
            .separators
            .iter()
            .flat_map(|s| Edge::within(*s))
            .collect();
        edges.sort();
        edges.dedup();
        EdgeSet(edges)
    }

    /// The clique containing `e`, if exactly one does.
    pub fn unique_clique_of(&self, e: Edge) -> Option<NodeSet> {
        let mut it = self.cliques.iter().filter(|c| e.nodes().is_subset(**c));
        match (it.next(), it.next()) {
            (Some(c), None) => Some(*c),
            _ => None,
        }
    }

    /// Number of free parameters of a saturated distribution Markov to the graph.
    pub fn free_params(&self) -> u64 {
        let cliques: u64 = self.cliques.iter().map(|c| (1u64 << c.len()) - 1).sum();
        let seps: u64 = self.separators.iter().map(|s| (1u64 << s.len()) - 1).sum();
        cliques - seps
    }
}

/// A sorted, duplicate-free edge list.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default, PartialOrd, Ord)]
pub struct EdgeSet(Vec<Edge>);

impl EdgeSet {
    pub fn new(mut edges: Vec<Edge>) -> Self {
        edges.sort();
        edges.dedup();
        EdgeSet(edges)
    }

    pub fn contains(&self, e: Edge) -> bool {
        self.0.binary_search(&e).is_ok()
    }

    /// The subset lying inside `set`.
    pub fn restricted_to(&self, set: NodeSet) -> EdgeSet {
        EdgeSet(
            self.0
                .iter()
                .copied()
                .filter(|e| e.nodes().is_subset(set))
                .collect(),
        )
    }

    pub fn iter(&self) -> impl Iterator<Item = Edge> + '_ {
        self.0.iter().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }
}
