//! Stratified graphs: undirected graphs whose edges carry strata, i.e. sets
//! of context outcomes under which the two endpoints are independent.
//!
//! A stratum element on edge `{a, b}` is stored as an outcome of the common
//! neighbours of `a` and `b`, packed over those nodes in ascending order. In a
//! decomposable stratified graph every labeled edge sits in exactly one
//! clique and its common neighbours are the rest of that clique, so all label
//! arithmetic below is clique-local.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::graph::{CliqueDecomposition, EdgeSet, UndirectedGraph};
use crate::nodeset::{Edge, NodeSet};
use crate::unionfind::DisjointSets;

/// A single context outcome attached to an edge.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct StratumElement {
    pub edge: Edge,
    /// Outcome of the edge's context nodes, bit `i` = value of the `i`-th
    /// smallest context node.
    pub context: u64,
}

impl StratumElement {
    pub fn new(edge: Edge, context: u64) -> Self {
        StratumElement { edge, context }
    }
}

/// A collection of stratum elements, canonically ordered.
pub type LabelSet = BTreeSet<StratumElement>;

/// Context nodes of `edge` inside `clique`.
pub fn clique_context(clique: NodeSet, edge: Edge) -> NodeSet {
    clique.difference(edge.nodes())
}

/// Nodes shared by every edge in `edges`, starting from `clique`. Empty means
/// the labeled edges have no common node; the whole clique means no labels.
pub fn common_node_candidates(clique: NodeSet, edges: impl IntoIterator<Item = Edge>) -> NodeSet {
    edges
        .into_iter()
        .fold(clique, |acc, e| acc.intersection(e.nodes()))
}

fn labeled_edges(labels: &LabelSet) -> BTreeSet<Edge> {
    labels.iter().map(|l| l.edge).collect()
}

/// The default final variable of a clique: the smallest common-node
/// candidate. `None` if the labeled edges share no node.
pub fn default_final(clique: NodeSet, labels: &LabelSet) -> Option<usize> {
    common_node_candidates(clique, labeled_edges(labels)).first()
}

/// Equivalence classes of the final variable's parent outcomes.
///
/// Parents are the clique minus the final variable, in ascending order; a
/// parent outcome is packed the same way as any other outcome.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct ParentPartition {
    pub clique: NodeSet,
    pub final_variable: usize,
    pub parents: NodeSet,
    class_of: Vec<usize>,
    classes: Vec<Vec<u64>>,
}

impl ParentPartition {
    /// Class id of each parent outcome. Ids follow each class's smallest
    /// outcome, so equal partitions have equal vectors.
    pub fn class_of(&self) -> &[usize] {
        &self.class_of
    }

    pub fn classes(&self) -> &[Vec<u64>] {
        &self.classes
    }

    /// Number of distinguishable parent combinations (q).
    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    /// Class sizes (lambda).
    pub fn sizes(&self) -> Vec<usize> {
        self.classes.iter().map(Vec::len).collect()
    }

    /// Classes rendered as tuples of parent values in ascending node order.
    pub fn class_tuples(&self) -> Vec<Vec<Vec<u8>>> {
        let m = self.parents.len();
        self.classes
            .iter()
            .map(|class| {
                class
                    .iter()
                    .map(|&o| (0..m).map(|i| ((o >> i) & 1) as u8).collect())
                    .collect()
            })
            .collect()
    }

    fn same_class(&self, a: u64, b: u64) -> bool {
        self.class_of[a as usize] == self.class_of[b as usize]
    }
}

/// The two parent outcomes (of `final_var`) that a stratum element on
/// `{other, final_var}` declares equivalent.
fn merged_pair(
    clique: NodeSet,
    parents: NodeSet,
    element: StratumElement,
    final_var: usize,
) -> (u64, u64) {
    let other = element.edge.other(final_var);
    let base = clique_context(clique, element.edge).scatter(element.context);
    (parents.gather(base), parents.gather(base | (1u64 << other)))
}

fn check_element(clique: NodeSet, element: StratumElement) -> Result<()> {
    if !element.edge.nodes().is_subset(clique) {
        return Err(Error::InvalidStrata {
            clique,
            reason: format!("edge {} is not inside the clique", element.edge),
        });
    }
    let ctx = clique_context(clique, element.edge);
    if ctx.is_empty() || element.context >= ctx.outcome_count() as u64 {
        return Err(Error::InvalidStrata {
            clique,
            reason: format!(
                "context outcome {} out of range for edge {}",
                element.context, element.edge
            ),
        });
    }
    Ok(())
}

/// Groups the parent outcomes of `final_var` that the labels make
/// equivalent. Each element merges the two parent outcomes that agree with
/// its context and differ in the edge's other endpoint; merges are closed
/// transitively.
pub fn parent_partition(
    clique: NodeSet,
    labels: &LabelSet,
    final_var: usize,
) -> Result<ParentPartition> {
    if !clique.contains(final_var) {
        return Err(Error::InvalidFinalVariable {
            clique,
            node: final_var,
        });
    }
    let parents = clique.without(final_var);
    let mut sets = DisjointSets::new(parents.outcome_count());
    for &element in labels {
        check_element(clique, element)?;
        if !element.edge.contains(final_var) {
            return Err(Error::InvalidFinalVariable {
                clique,
                node: final_var,
            });
        }
        let (a, b) = merged_pair(clique, parents, element, final_var);
        sets.union(a as usize, b as usize);
    }
    let class_of = sets.canonical_labels();
    let count = class_of.iter().copied().max().map_or(0, |m| m + 1);
    let mut classes = vec![Vec::new(); count];
    for (outcome, &class) in class_of.iter().enumerate() {
        classes[class].push(outcome as u64);
    }
    Ok(ParentPartition {
        clique,
        final_variable: final_var,
        parents,
        class_of,
        classes,
    })
}

/// True if no edge's stratum covers its whole context outcome space.
pub fn is_regular(clique: NodeSet, labels: &LabelSet) -> bool {
    let full = 1usize << clique.len().saturating_sub(2);
    let mut per_edge: BTreeMap<Edge, usize> = BTreeMap::new();
    for l in labels {
        *per_edge.entry(l.edge).or_default() += 1;
    }
    per_edge.values().all(|&n| n < full)
}

/// Every element that could be attached inside `clique` without breaking
/// decomposability of the labels: edges not in `forbidden`, context outcomes
/// in range. Not filtered by the current labels.
pub fn possible_elements(clique: NodeSet, forbidden: &EdgeSet) -> Vec<StratumElement> {
    if clique.len() < 3 {
        return Vec::new();
    }
    let outcomes = 1u64 << (clique.len() - 2);
    Edge::within(clique)
        .filter(|e| !forbidden.contains(*e))
        .flat_map(|e| (0..outcomes).map(move |c| StratumElement::new(e, c)))
        .collect()
}

/// Adds every element on a non-forbidden edge through the common node whose
/// merged parent outcomes are already equivalent. The parent partition is
/// unchanged by construction.
pub fn close_labels(clique: NodeSet, labels: &LabelSet, forbidden: &EdgeSet) -> Result<LabelSet> {
    let candidates = common_node_candidates(clique, labeled_edges(labels));
    if candidates.is_empty() {
        return Err(Error::InvalidStrata {
            clique,
            reason: "labeled edges share no common node".into(),
        });
    }
    if labels.is_empty() {
        return Ok(LabelSet::new());
    }
    let final_var = candidates.first().expect("non-empty");
    let mut closed = labels.clone();
    loop {
        let partition = parent_partition(clique, &closed, final_var)?;
        let additions: Vec<StratumElement> = possible_elements(clique, forbidden)
            .into_iter()
            .filter(|el| el.edge.contains(final_var) && !closed.contains(el))
            .filter(|el| {
                let (a, b) = merged_pair(clique, partition.parents, *el, final_var);
                partition.same_class(a, b)
            })
            .collect();
        if additions.is_empty() {
            return Ok(closed);
        }
        closed.extend(additions);
    }
}

/// Clique-level maximal regularity: labels share a node, are closed, and no
/// stratum is full.
pub fn is_maximal_regular_clique(clique: NodeSet, labels: &LabelSet, forbidden: &EdgeSet) -> bool {
    if labels
        .iter()
        .any(|l| forbidden.contains(l.edge) || check_element(clique, *l).is_err())
    {
        return false;
    }
    match close_labels(clique, labels, forbidden) {
        Ok(closed) => closed == *labels && is_regular(clique, labels),
        Err(_) => false,
    }
}

/// A reason a stratified graph fails to be a decomposable SG.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Violation {
    NotChordal,
    MissingEdge(Edge),
    EmptyContext(Edge),
    ContextOutOfRange { edge: Edge, context: u64 },
    SeparatorEdge(Edge),
    NoCommonNode { clique: NodeSet, edges: Vec<Edge> },
    FullStratum(Edge),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NotChordal => write!(f, "underlying graph is not chordal"),
            Violation::MissingEdge(e) => write!(f, "labeled edge {e} is not in the graph"),
            Violation::EmptyContext(e) => {
                write!(f, "edge {e} has no common neighbours to condition on")
            }
            Violation::ContextOutOfRange { edge, context } => {
                write!(f, "context outcome {context} out of range on edge {edge}")
            }
            Violation::SeparatorEdge(e) => write!(f, "labeled edge {e} lies in a separator"),
            Violation::NoCommonNode { clique, edges } => {
                let list: Vec<String> = edges.iter().map(ToString::to_string).collect();
                write!(
                    f,
                    "labeled edges {} in clique {clique} share no common node",
                    list.join(",")
                )
            }
            Violation::FullStratum(e) => {
                write!(f, "stratum on edge {e} covers every context outcome")
            }
        }
    }
}

/// Stable text key for a label set, e.g. `2-3:1.0,3-4:0`.
pub fn label_key(labels: &LabelSet) -> String {
    let mut strata: BTreeMap<Edge, Vec<u64>> = BTreeMap::new();
    for l in labels {
        strata.entry(l.edge).or_default().push(l.context);
    }
    let parts: Vec<String> = strata
        .into_iter()
        .map(|(e, ctx)| {
            let ctx: Vec<String> = ctx.iter().map(u64::to_string).collect();
            format!("{}-{}:{}", e.lo() + 1, e.hi() + 1, ctx.join("."))
        })
        .collect();
    parts.join(",")
}

/// An undirected graph together with its strata.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct StratifiedGraph {
    graph: UndirectedGraph,
    labels: LabelSet,
}

impl StratifiedGraph {
    pub fn new(graph: UndirectedGraph, labels: LabelSet) -> Self {
        StratifiedGraph { graph, labels }
    }

    pub fn unlabeled(graph: UndirectedGraph) -> Self {
        Self::new(graph, LabelSet::new())
    }

    pub fn graph(&self) -> &UndirectedGraph {
        &self.graph
    }

    pub fn labels(&self) -> &LabelSet {
        &self.labels
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    pub fn labeled_edges(&self) -> BTreeSet<Edge> {
        labeled_edges(&self.labels)
    }

    /// Strata grouped by edge.
    pub fn strata(&self) -> BTreeMap<Edge, Vec<u64>> {
        let mut out: BTreeMap<Edge, Vec<u64>> = BTreeMap::new();
        for l in &self.labels {
            out.entry(l.edge).or_default().push(l.context);
        }
        out
    }

    /// Context nodes of an edge (its common neighbours).
    pub fn context_nodes(&self, e: Edge) -> Result<NodeSet> {
        self.graph.common_neighbors(e)
    }

    /// Labels on edges inside `clique`.
    pub fn clique_labels(&self, clique: NodeSet) -> LabelSet {
        self.labels
            .iter()
            .filter(|l| l.edge.nodes().is_subset(clique))
            .copied()
            .collect()
    }

    /// Canonical text form; used for tie-breaking and cache keys.
    pub fn canonical_key(&self) -> String {
        let edges: Vec<String> = self
            .graph
            .edges()
            .map(|e| format!("{}-{}", e.lo() + 1, e.hi() + 1))
            .collect();
        format!(
            "{}|{}|{}",
            self.node_count(),
            edges.join(","),
            label_key(&self.labels)
        )
    }

    /// Itemized reasons this is not a decomposable SG; empty when it is.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (edge, contexts) in self.strata() {
            if !self.graph.has_edge(edge) {
                out.push(Violation::MissingEdge(edge));
                continue;
            }
            let ctx = self.graph.common_neighbors(edge).expect("edge present");
            if ctx.is_empty() {
                out.push(Violation::EmptyContext(edge));
                continue;
            }
            let full = ctx.outcome_count() as u64;
            for &c in &contexts {
                if c >= full {
                    out.push(Violation::ContextOutOfRange { edge, context: c });
                }
            }
            if contexts.len() as u64 >= full {
                out.push(Violation::FullStratum(edge));
            }
        }
        let Ok(decomposition) = self.graph.clique_decomposition() else {
            out.insert(0, Violation::NotChordal);
            return out;
        };
        let separator_edges = decomposition.separator_edges();
        let labeled = self.labeled_edges();
        for &e in &labeled {
            if separator_edges.contains(e) {
                out.push(Violation::SeparatorEdge(e));
            }
        }
        for &clique in &decomposition.cliques {
            let inside: Vec<Edge> = labeled
                .iter()
                .copied()
                .filter(|e| e.nodes().is_subset(clique))
                .collect();
            if !inside.is_empty()
                && common_node_candidates(clique, inside.iter().copied()).is_empty()
            {
                out.push(Violation::NoCommonNode {
                    clique,
                    edges: inside,
                });
            }
        }
        out
    }

    pub fn is_decomposable_sg(&self) -> bool {
        self.validate().is_empty()
    }

    fn checked_decomposition(&self) -> Result<CliqueDecomposition> {
        let violations = self.validate();
        if !violations.is_empty() {
            return Err(Error::NotDecomposableSg(violations));
        }
        self.graph.clique_decomposition()
    }

    /// Decomposition after checking every requirement except regularity.
    /// Returns whether some stratum is full.
    fn structural_decomposition(&self) -> Result<(CliqueDecomposition, bool)> {
        let violations = self.validate();
        let structural: Vec<Violation> = violations
            .iter()
            .filter(|v| !matches!(v, Violation::FullStratum(_)))
            .cloned()
            .collect();
        if !structural.is_empty() {
            return Err(Error::NotDecomposableSg(structural));
        }
        Ok((self.graph.clique_decomposition()?, !violations.is_empty()))
    }

    /// Adds every label implied by the existing ones, clique by clique. Full
    /// strata are allowed in both input and output; regularity is a separate
    /// check.
    pub fn closure(&self) -> Result<StratifiedGraph> {
        let (decomposition, _) = self.structural_decomposition()?;
        self.closure_unchecked(&decomposition)
    }

    fn closure_unchecked(&self, decomposition: &CliqueDecomposition) -> Result<StratifiedGraph> {
        let forbidden = decomposition.separator_edges();
        let mut labels = LabelSet::new();
        for &clique in &decomposition.cliques {
            let local = self.clique_labels(clique);
            labels.extend(close_labels(
                clique,
                &local,
                &forbidden.restricted_to(clique),
            )?);
        }
        Ok(StratifiedGraph::new(self.graph.clone(), labels))
    }

    /// Closed under implied labels, with every stratum a proper subset.
    /// A full stratum makes the answer `false`; any other violation is an
    /// error.
    pub fn is_maximal_regular(&self) -> Result<bool> {
        let (decomposition, full) = self.structural_decomposition()?;
        if full {
            return Ok(false);
        }
        let closed = self.closure_unchecked(&decomposition)?;
        Ok(closed == *self)
    }

    /// Per-clique parent partitions with a canonical final variable: the
    /// common node, the smaller endpoint of a lone labeled edge, or the
    /// smallest clique node when unlabeled.
    pub fn dependence_structure(&self) -> Result<DependenceStructure> {
        let decomposition = self.checked_decomposition()?;
        let mut partitions: Vec<ParentPartition> = decomposition
            .cliques
            .iter()
            .map(|&clique| {
                let local = self.clique_labels(clique);
                let final_var = default_final(clique, &local).expect("validated");
                parent_partition(clique, &local, final_var)
            })
            .collect::<Result<_>>()?;
        partitions.sort_by_key(|p| p.clique);
        Ok(DependenceStructure {
            graph: self.graph.clone(),
            partitions,
        })
    }

    /// One context-specific independence statement per stratum element.
    pub fn enumerate_csi(&self) -> Result<Vec<CsiStatement>> {
        self.labels
            .iter()
            .map(|l| {
                Ok(CsiStatement {
                    edge: l.edge,
                    context_nodes: self.graph.common_neighbors(l.edge)?,
                    context: l.context,
                })
            })
            .collect()
    }
}

/// The underlying graph plus the per-clique parent partitions it induces.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct DependenceStructure {
    pub graph: UndirectedGraph,
    pub partitions: Vec<ParentPartition>,
}

/// `X_a ⊥ X_b | X_L = x_L`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CsiStatement {
    pub edge: Edge,
    pub context_nodes: NodeSet,
    pub context: u64,
}

impl CsiStatement {
    /// Context assignment as (node, value) pairs in ascending node order.
    pub fn assignment(&self) -> Vec<(usize, u8)> {
        self.context_nodes
            .iter()
            .enumerate()
            .map(|(i, v)| (v, ((self.context >> i) & 1) as u8))
            .collect()
    }

    pub fn render(&self, names: &[String]) -> String {
        let ctx: Vec<String> = self
            .assignment()
            .into_iter()
            .map(|(v, x)| format!("{}={}", names[v], x))
            .collect();
        format!(
            "{} ⊥ {} | {}",
            names[self.edge.lo()],
            names[self.edge.hi()],
            ctx.join(", ")
        )
    }
}

impl fmt::Display for CsiStatement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self
            .edge
            .hi()
            .max(self.context_nodes.iter().last().unwrap_or(0))
            + 1;
        let names: Vec<String> = (1..=n).map(|i| format!("X{i}")).collect();
        f.write_str(&self.render(&names))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Stratum element from 1-based edge endpoints and context values listed
    /// in ascending context-node order.
    fn el(a: usize, b: usize, values: &[u64]) -> StratumElement {
        let context = values.iter().enumerate().map(|(i, &v)| v << i).sum();
        StratumElement::new(Edge::new(a - 1, b - 1), context)
    }

    fn labels(items: &[StratumElement]) -> LabelSet {
        items.iter().copied().collect()
    }

    fn single_label_triangle() -> StratifiedGraph {
        StratifiedGraph::new(UndirectedGraph::complete(3), labels(&[el(2, 3, &[1])]))
    }

    fn two_clique_graph() -> UndirectedGraph {
        UndirectedGraph::from_one_based(
            5,
            &[
                (1, 2),
                (1, 3),
                (1, 4),
                (2, 3),
                (2, 4),
                (3, 4),
                (1, 5),
                (4, 5),
            ],
        )
    }

    fn two_clique_sg() -> StratifiedGraph {
        StratifiedGraph::new(
            two_clique_graph(),
            labels(&[el(2, 3, &[0, 0]), el(3, 4, &[0, 0]), el(3, 4, &[0, 1])]),
        )
    }

    #[test]
    fn two_clique_validation() {
        assert!(two_clique_sg().validate().is_empty());

        let no_common_node = StratifiedGraph::new(
            two_clique_graph(),
            labels(&[el(1, 2, &[0, 0]), el(3, 4, &[0, 0])]),
        );
        let v = no_common_node.validate();
        assert_eq!(v.len(), 1);
        assert!(matches!(
            &v[0],
            Violation::NoCommonNode { clique, edges }
                if *clique == NodeSet::from([0, 1, 2, 3])
                    && *edges == vec![Edge::new(0, 1), Edge::new(2, 3)]
        ));

        let separator_label =
            StratifiedGraph::new(two_clique_graph(), labels(&[el(1, 4, &[0, 0, 0])]));
        assert_eq!(
            separator_label.validate(),
            vec![Violation::SeparatorEdge(Edge::new(0, 3))]
        );
    }

    #[test]
    fn structural_violations() {
        let square = UndirectedGraph::from_one_based(4, &[(1, 2), (2, 3), (3, 4), (4, 1)]);
        assert_eq!(
            StratifiedGraph::unlabeled(square).validate(),
            vec![Violation::NotChordal]
        );
        let pair = UndirectedGraph::from_one_based(3, &[(1, 2)]);
        let sg = StratifiedGraph::new(pair.clone(), labels(&[el(1, 2, &[0])]));
        assert_eq!(
            sg.validate(),
            vec![Violation::EmptyContext(Edge::new(0, 1))]
        );
        let sg = StratifiedGraph::new(pair, labels(&[el(2, 3, &[0])]));
        assert_eq!(sg.validate(), vec![Violation::MissingEdge(Edge::new(1, 2))]);
        let full = StratifiedGraph::new(
            UndirectedGraph::complete(3),
            labels(&[el(2, 3, &[0]), el(2, 3, &[1])]),
        );
        assert_eq!(
            full.validate(),
            vec![Violation::FullStratum(Edge::new(1, 2))]
        );
        assert!(!full.is_maximal_regular().unwrap());
        let out_of_range =
            StratifiedGraph::new(UndirectedGraph::complete(3), labels(&[el(2, 3, &[2])]));
        assert!(matches!(
            out_of_range.validate()[0],
            Violation::ContextOutOfRange { .. }
        ));
    }

    #[test]
    fn common_node_examples() {
        let c = NodeSet::from([0, 1, 2]);
        assert_eq!(
            common_node_candidates(c, [Edge::new(1, 2), Edge::new(0, 2)]),
            NodeSet::from([2])
        );
        assert_eq!(common_node_candidates(c, []), c);
        assert_eq!(
            common_node_candidates(c, [Edge::new(1, 2)]),
            NodeSet::from([1, 2])
        );
    }

    #[test]
    fn single_label_partition() {
        let p = parent_partition(
            NodeSet::from([0, 1, 2]),
            single_label_triangle().labels(),
            2,
        )
        .unwrap();
        assert_eq!(
            p.class_tuples(),
            vec![
                vec![vec![0, 0]],
                vec![vec![1, 0], vec![1, 1]],
                vec![vec![0, 1]]
            ]
        );
        assert_eq!(p.class_count(), 3);
        let mut sizes = p.sizes();
        sizes.sort();
        assert_eq!(sizes, vec![1, 1, 2]);
    }

    #[test]
    fn two_label_partition() {
        let l = labels(&[el(2, 3, &[1]), el(1, 3, &[1])]);
        let p = parent_partition(NodeSet::from([0, 1, 2]), &l, 2).unwrap();
        assert_eq!(
            p.class_tuples(),
            vec![vec![vec![0, 0]], vec![vec![1, 0], vec![0, 1], vec![1, 1]]]
        );
        assert!(matches!(
            parent_partition(NodeSet::from([0, 1, 2]), &l, 0),
            Err(Error::InvalidFinalVariable { .. })
        ));
    }

    #[test]
    fn empty_strata_partition_is_discrete() {
        let p = parent_partition(NodeSet::from([0, 1, 2]), &LabelSet::new(), 0).unwrap();
        assert_eq!(p.class_count(), 4);
        assert_eq!(p.sizes(), vec![1; 4]);
    }

    #[test]
    fn closure_adds_implied_label() {
        let closed = two_clique_sg().closure().unwrap();
        let added: Vec<_> = closed
            .labels()
            .difference(two_clique_sg().labels())
            .copied()
            .collect();
        assert_eq!(added, vec![el(2, 3, &[0, 1])]);
        assert!(!two_clique_sg().is_maximal_regular().unwrap());
        assert!(closed.is_maximal_regular().unwrap());
        assert_eq!(closed.closure().unwrap(), closed);
    }

    #[test]
    fn closure_leaves_single_label_and_unlabeled_alone() {
        assert_eq!(
            single_label_triangle().closure().unwrap(),
            single_label_triangle()
        );
        assert!(single_label_triangle().is_maximal_regular().unwrap());
        let plain = StratifiedGraph::unlabeled(two_clique_graph());
        assert_eq!(plain.closure().unwrap(), plain);
    }

    #[test]
    fn closure_rejects_invalid_sg() {
        let separator_label =
            StratifiedGraph::new(two_clique_graph(), labels(&[el(1, 4, &[0, 0, 0])]));
        assert!(matches!(
            separator_label.closure(),
            Err(Error::NotDecomposableSg(_))
        ));
        assert!(separator_label.is_maximal_regular().is_err());
    }

    #[test]
    fn csi_statements() {
        let s = single_label_triangle().enumerate_csi().unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].to_string(), "X2 ⊥ X3 | X1=1");
        assert!(StratifiedGraph::unlabeled(two_clique_graph())
            .enumerate_csi()
            .unwrap()
            .is_empty());
        let two = two_clique_sg().enumerate_csi().unwrap();
        assert_eq!(two[0].to_string(), "X2 ⊥ X3 | X1=0, X4=0");
    }

    #[test]
    fn partition_ignores_element_order() {
        let clique = NodeSet::from([0, 1, 2, 3]);
        let items = [
            el(2, 3, &[0, 0]),
            el(3, 4, &[0, 0]),
            el(3, 4, &[0, 1]),
            el(1, 3, &[1, 1]),
        ];
        let base = parent_partition(clique, &labels(&items), 2).unwrap();
        // BTreeSet ordering is fixed, so permute by building partitions on
        // growing prefixes of every rotation and comparing the end result.
        for r in 0..items.len() {
            let mut rotated = items.to_vec();
            rotated.rotate_left(r);
            let mut sets = DisjointSets::new(8);
            for e in &rotated {
                let (a, b) = merged_pair(clique, clique.without(2), *e, 2);
                sets.union(a as usize, b as usize);
            }
            assert_eq!(sets.canonical_labels(), base.class_of());
        }
    }

    #[test]
    fn lone_edge_accepts_either_final() {
        let c = NodeSet::from([0, 1, 2]);
        let l = single_label_triangle().labels().clone();
        assert!(parent_partition(c, &l, 1).is_ok());
        assert!(parent_partition(c, &l, 2).is_ok());
    }
}
