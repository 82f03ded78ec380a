//! Bitmask node sets and the outcome encoding shared by every module.
//!
//! Nodes are dense 0-based indices below [`MAX_NODES`]. An outcome of the
//! variables in a node set `A` is packed into an integer whose bit `i` holds
//! the value of the `i`-th smallest node of `A`. A full row of data is stored
//! as an "assignment": bit `v` holds the value of node `v`. [`NodeSet::gather`]
//! and [`NodeSet::scatter`] convert between the two.

use std::cmp::Ordering;
use std::fmt;

/// Largest supported number of variables.
pub const MAX_NODES: usize = 64;

/// A set of node indices, stored as a bitmask.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct NodeSet(u64);

impl NodeSet {
    pub const EMPTY: NodeSet = NodeSet(0);

    pub fn from_bits(bits: u64) -> Self {
        NodeSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    /// All nodes `0..n`.
    pub fn full(n: usize) -> Self {
        assert!(n <= MAX_NODES, "at most {MAX_NODES} nodes are supported");
        if n == MAX_NODES {
            NodeSet(u64::MAX)
        } else {
            NodeSet((1u64 << n) - 1)
        }
    }

    pub fn singleton(v: usize) -> Self {
        NodeSet(1u64 << v)
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, v: usize) -> bool {
        v < MAX_NODES && self.0 & (1u64 << v) != 0
    }

    pub fn insert(&mut self, v: usize) {
        self.0 |= 1u64 << v;
    }

    pub fn remove(&mut self, v: usize) {
        self.0 &= !(1u64 << v);
    }

    pub fn with(self, v: usize) -> Self {
        NodeSet(self.0 | (1u64 << v))
    }

    pub fn without(self, v: usize) -> Self {
        NodeSet(self.0 & !(1u64 << v))
    }

    pub fn union(self, other: NodeSet) -> Self {
        NodeSet(self.0 | other.0)
    }

    pub fn intersection(self, other: NodeSet) -> Self {
        NodeSet(self.0 & other.0)
    }

    pub fn difference(self, other: NodeSet) -> Self {
        NodeSet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: NodeSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_disjoint(self, other: NodeSet) -> bool {
        self.0 & other.0 == 0
    }

    /// Smallest node, if any.
    pub fn first(self) -> Option<usize> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize)
    }

    /// Nodes in ascending order.
    pub fn iter(self) -> NodeIter {
        NodeIter(self.0)
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.iter().collect()
    }

    /// Number of joint outcomes of the binary variables in the set.
    pub fn outcome_count(self) -> usize {
        1usize << self.len()
    }

    /// Position of `v` among the set's nodes in ascending order.
    pub fn rank_of(self, v: usize) -> Option<usize> {
        self.contains(v)
            .then(|| (self.0 & ((1u64 << v) - 1)).count_ones() as usize)
    }

    /// Packs the values that `assignment` gives to this set's nodes into an
    /// outcome index (bit `i` = value of the `i`-th smallest node).
    pub fn gather(self, assignment: u64) -> u64 {
        let mut out = 0u64;
        let mut bit = 0;
        let mut rest = self.0;
        while rest != 0 {
            let v = rest.trailing_zeros();
            if assignment & (1u64 << v) != 0 {
                out |= 1u64 << bit;
            }
            bit += 1;
            rest &= rest - 1;
        }
        out
    }

    /// Inverse of [`NodeSet::gather`]: spreads an outcome index back onto
    /// node positions. Nodes outside the set are zero.
    pub fn scatter(self, outcome: u64) -> u64 {
        let mut out = 0u64;
        let mut bit = 0;
        let mut rest = self.0;
        while rest != 0 {
            let v = rest.trailing_zeros();
            if outcome & (1u64 << bit) != 0 {
                out |= 1u64 << v;
            }
            bit += 1;
            rest &= rest - 1;
        }
        out
    }
}

impl FromIterator<usize> for NodeSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut s = NodeSet::EMPTY;
        for v in iter {
            assert!(v < MAX_NODES, "node index {v} out of range");
            s.insert(v);
        }
        s
    }
}

impl<const N: usize> From<[usize; N]> for NodeSet {
    fn from(nodes: [usize; N]) -> Self {
        nodes.into_iter().collect()
    }
}

/// Lexicographic order of the ascending node lists.
impl Ord for NodeSet {
    fn cmp(&self, other: &Self) -> Ordering {
        self.iter().cmp(other.iter())
    }
}

impl PartialOrd for NodeSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Renders with 1-based labels, e.g. `{1,2,3}`.
impl fmt::Display for NodeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, v) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", v + 1)?;
        }
        write!(f, "}}")
    }
}

impl fmt::Debug for NodeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

pub struct NodeIter(u64);

impl Iterator for NodeIter {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let v = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(v)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for NodeIter {}

/// An undirected edge, normalized so that `lo < hi`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    lo: usize,
    hi: usize,
}

impl Edge {
    /// Panics on a self-loop.
    pub fn new(a: usize, b: usize) -> Self {
        assert_ne!(a, b, "self-loops are not edges");
        Edge {
            lo: a.min(b),
            hi: a.max(b),
        }
    }

    pub fn lo(self) -> usize {
        self.lo
    }

    pub fn hi(self) -> usize {
        self.hi
    }

    pub fn nodes(self) -> NodeSet {
        NodeSet::singleton(self.lo).with(self.hi)
    }

    pub fn contains(self, v: usize) -> bool {
        self.lo == v || self.hi == v
    }

    /// The endpoint that is not `v`.
    pub fn other(self, v: usize) -> usize {
        if self.lo == v {
            self.hi
        } else {
            self.lo
        }
    }

    /// All edges among the nodes of `set`, in canonical order.
    pub fn within(set: NodeSet) -> impl Iterator<Item = Edge> {
        let nodes = set.to_vec();
        let mut out = Vec::with_capacity(nodes.len() * nodes.len().saturating_sub(1) / 2);
        for (i, &a) in nodes.iter().enumerate() {
            for &b in &nodes[i + 1..] {
                out.push(Edge { lo: a, hi: b });
            }
        }
        out.into_iter()
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{},{}}}", self.lo + 1, self.hi + 1)
    }
}

impl fmt::Debug for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
