//! Brute-force references for tests: exhaustive model enumeration on tiny
//! variable sets, naive Monte Carlo integration of Dirichlet marginal
//! likelihoods, and definition-level checks of chordality, separation and
//! maximal regularity.
//!
//! Nothing here reuses the union-find partition, closure, or hyperparameter
//! code of the main library; it works from explicit node lists and outcome
//! tables so that agreement is evidence rather than tautology.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use crate::data::BinaryDataMatrix;
use crate::error::{Error, Result};
use crate::graph::UndirectedGraph;
use crate::nodeset::{Edge, NodeSet};
use crate::scoring::{log_unnormalized_posterior, CountTable, LogScore};
use crate::stratified::{LabelSet, StratifiedGraph, StratumElement};

/// Largest variable count the exhaustive enumeration accepts.
pub const MAX_ENUMERATION_NODES: usize = 3;

/// Chordality straight from the definition: no induced cycle of length four
/// or more. Exponential; meant for graphs with at most about eight nodes.
pub fn is_chordal_brute(g: &UndirectedGraph) -> bool {
    let d = g.node_count();
    assert!(d <= 16, "brute-force chordality is exponential");
    for mask in 0u64..(1u64 << d) {
        let set = NodeSet::from_bits(mask);
        if set.len() >= 4 && is_induced_cycle(g, set) {
            return false;
        }
    }
    true
}

/// True when `set` induces a single cycle through all of its nodes.
fn is_induced_cycle(g: &UndirectedGraph, set: NodeSet) -> bool {
    if set
        .iter()
        .any(|v| g.neighbors(v).intersection(set).len() != 2)
    {
        return false;
    }
    // Every node has degree two inside `set`; it is one cycle iff connected.
    let start = set.first().expect("non-empty");
    let mut seen = NodeSet::singleton(start);
    let mut stack = vec![start];
    while let Some(v) = stack.pop() {
        for u in g.neighbors(v).intersection(set).iter() {
            if !seen.contains(u) {
                seen.insert(u);
                stack.push(u);
            }
        }
    }
    seen == set
}

/// Separation by enumerating simple paths: false as soon as some path from
/// `a` to `b` avoids `s`.
pub fn separates_brute(g: &UndirectedGraph, a: NodeSet, b: NodeSet, s: NodeSet) -> bool {
    fn walk(g: &UndirectedGraph, v: usize, path: NodeSet, b: NodeSet, s: NodeSet) -> bool {
        if b.contains(v) {
            return true;
        }
        for u in g.neighbors(v).iter() {
            if !path.contains(u) && !s.contains(u) && walk(g, u, path.with(u), b, s) {
                return true;
            }
        }
        false
    }
    !a.iter()
        .filter(|&v| !s.contains(v))
        .any(|v| walk(g, v, NodeSet::singleton(v), b, s))
}

/// Values of `nodes` (ascending) in a full assignment, packed with the
/// first node in bit 0.
fn pack(nodes: &[usize], assignment: u64) -> u64 {
    nodes
        .iter()
        .enumerate()
        .fold(0, |acc, (i, &v)| acc | (((assignment >> v) & 1) << i))
}

fn unpack(nodes: &[usize], packed: u64) -> u64 {
    nodes
        .iter()
        .enumerate()
        .fold(0, |acc, (i, &v)| acc | (((packed >> i) & 1) << v))
}

/// Class id for each outcome of the final variable's parents (parents in
/// ascending order, first parent in bit 0). Ids are assigned in order of
/// first appearance, so equal partitions give equal vectors.
#[allow(clippy::needless_range_loop)]
pub fn brute_parent_partition(clique: NodeSet, labels: &LabelSet, final_var: usize) -> Vec<usize> {
    let parents: Vec<usize> = clique.without(final_var).to_vec();
    let m = 1usize << parents.len();
    let mut linked = vec![vec![false; m]; m];
    for l in labels {
        assert!(
            l.edge.contains(final_var),
            "label {} misses the final variable",
            l.edge
        );
        let other = l.edge.other(final_var);
        let ctx_nodes: Vec<usize> = clique.difference(l.edge.nodes()).to_vec();
        for a in 0..m {
            let assignment = unpack(&parents, a as u64);
            if pack(&ctx_nodes, assignment) == l.context && (assignment >> other) & 1 == 0 {
                let b = pack(&parents, assignment | (1 << other)) as usize;
                linked[a][b] = true;
                linked[b][a] = true;
            }
        }
    }
    // Smallest reachable outcome, by relaxation until stable.
    let mut root: Vec<usize> = (0..m).collect();
    loop {
        let mut changed = false;
        for a in 0..m {
            for b in 0..m {
                if linked[a][b] && root[b] < root[a] {
                    root[a] = root[b];
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut ids = Vec::new();
    root.iter()
        .map(|r| match ids.iter().position(|x| x == r) {
            Some(i) => i,
            None => {
                ids.push(*r);
                ids.len() - 1
            }
        })
        .collect()
}

/// Every single-element label on an edge of `clique` outside `forbidden`.
fn all_elements(clique: NodeSet, forbidden: &[Edge]) -> Vec<StratumElement> {
    let nodes = clique.to_vec();
    if nodes.len() < 3 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for (i, &a) in nodes.iter().enumerate() {
        for &b in &nodes[i + 1..] {
            let e = Edge::new(a, b);
            if forbidden.contains(&e) {
                continue;
            }
            for c in 0..(1u64 << (nodes.len() - 2)) {
                out.push(StratumElement::new(e, c));
            }
        }
    }
    out
}

fn common_nodes(clique: NodeSet, labels: &LabelSet) -> Vec<usize> {
    clique
        .iter()
        .filter(|&v| labels.iter().all(|l| l.edge.contains(v)))
        .collect()
}

/// Maximal regularity of a clique labeling from the definition: the labeled
/// edges share a node, no stratum is full, and no further element can be
/// added without changing some parent partition.
pub fn brute_is_maximal_regular_clique(
    clique: NodeSet,
    labels: &LabelSet,
    forbidden: &[Edge],
) -> bool {
    if clique.len() < 3 {
        return labels.is_empty();
    }
    let allowed = all_elements(clique, forbidden);
    if labels.iter().any(|l| !allowed.contains(l)) || common_nodes(clique, labels).is_empty() {
        return false;
    }
    let full = 1usize << (clique.len() - 2);
    for e in allowed.iter().map(|l| l.edge) {
        if labels.iter().filter(|l| l.edge == e).count() >= full {
            return false;
        }
    }
    for extra in allowed.iter().filter(|el| !labels.contains(el)) {
        let mut bigger = labels.clone();
        bigger.insert(*extra);
        for w in common_nodes(clique, &bigger) {
            if brute_parent_partition(clique, labels, w)
                == brute_parent_partition(clique, &bigger, w)
            {
                return false;
            }
        }
    }
    true
}

/// All maximal regular labelings of one clique, by subset enumeration.
pub fn enumerate_clique_labelings(clique: NodeSet, forbidden: &[Edge]) -> Result<Vec<LabelSet>> {
    let elements = all_elements(clique, forbidden);
    if elements.len() > 20 {
        return Err(Error::TooLarge {
            max: 20,
            got: elements.len(),
        });
    }
    let mut out = Vec::new();
    for mask in 0u32..(1u32 << elements.len()) {
        let labels: LabelSet = elements
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, el)| *el)
            .collect();
        if brute_is_maximal_regular_clique(clique, &labels, forbidden) {
            out.push(labels);
        }
    }
    Ok(out)
}

/// Every decomposable maximal regular SG on `d <= 3` variables.
pub fn enumerate_models(d: usize) -> Result<Vec<StratifiedGraph>> {
    if d > MAX_ENUMERATION_NODES {
        return Err(Error::TooLarge {
            max: MAX_ENUMERATION_NODES,
            got: d,
        });
    }
    let pairs: Vec<Edge> = (0..d)
        .flat_map(|a| (a + 1..d).map(move |b| Edge::new(a, b)))
        .collect();
    let mut models = Vec::new();
    for mask in 0u32..(1u32 << pairs.len()) {
        let graph = UndirectedGraph::from_edges(
            d,
            pairs
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, e)| *e),
        );
        if !is_chordal_brute(&graph) {
            continue;
        }
        let decomposition = graph.clique_decomposition()?;
        let forbidden: Vec<Edge> = decomposition.separator_edges().iter().collect();
        let mut labelings = vec![LabelSet::new()];
        for &clique in &decomposition.cliques {
            let options = enumerate_clique_labelings(clique, &forbidden)?;
            labelings = labelings
                .iter()
                .flat_map(|base| {
                    options.iter().map(move |opt| {
                        let mut merged = base.clone();
                        merged.extend(opt.iter().copied());
                        merged
                    })
                })
                .collect();
        }
        models.extend(
            labelings
                .into_iter()
                .map(|l| StratifiedGraph::new(graph.clone(), l)),
        );
    }
    Ok(models)
}

/// Exhaustive argmax of the log unnormalized posterior; ties go to the
/// smallest canonical key, the same rule the search uses.
pub fn brute_force_best(data: &BinaryDataMatrix) -> Result<(StratifiedGraph, LogScore)> {
    let mut best: Option<(String, StratifiedGraph, LogScore)> = None;
    for model in enumerate_models(data.d())? {
        let score = log_unnormalized_posterior(&model, data)?;
        let key = model.canonical_key();
        let better = match &best {
            None => true,
            Some((bk, _, bs)) => score.0 > bs.0 || (score.0 == bs.0 && key < *bk),
        };
        if better {
            best = Some((key, model, score));
        }
    }
    let (_, model, score) = best.expect("enumeration is never empty");
    Ok((model, score))
}

/// A Monte Carlo estimate held on a log scale: the estimate is
/// `exp(log_scale) * mean` with standard error `exp(log_scale) * se`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub log_scale: f64,
    pub mean: f64,
    pub se: f64,
}

impl McEstimate {
    pub fn log_estimate(&self) -> f64 {
        self.log_scale + self.mean.ln()
    }

    /// True when `exp(log_value)` lies within `k` standard errors.
    pub fn brackets(&self, log_value: f64, k: f64) -> bool {
        ((log_value - self.log_scale).exp() - self.mean).abs() <= k * self.se
    }

    /// Distance from `exp(log_value)` in standard errors.
    pub fn z_score(&self, log_value: f64) -> f64 {
        ((log_value - self.log_scale).exp() - self.mean) / self.se
    }
}

fn summarize(log_terms: &[f64]) -> McEstimate {
    let max = log_terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == 0.0 && log_terms.iter().all(|&t| t == 0.0) {
        return McEstimate {
            log_scale: 0.0,
            mean: 1.0,
            se: 0.0,
        };
    }
    let scaled: Vec<f64> = log_terms.iter().map(|t| (t - max).exp()).collect();
    let k = scaled.len() as f64;
    let mean = scaled.iter().sum::<f64>() / k;
    let var = scaled.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0).max(1.0);
    McEstimate {
        log_scale: max,
        mean,
        se: (var / k).sqrt(),
    }
}

/// Log of a Dirichlet draw, via normalized Gamma variates.
fn log_dirichlet<R: rand::Rng>(gammas: &[Gamma<f64>], rng: &mut R) -> Vec<f64> {
    let g: Vec<f64> = gammas.iter().map(|d| d.sample(rng)).collect();
    let total: f64 = g.iter().sum();
    g.iter().map(|x| x.ln() - total.ln()).collect()
}

/// Naive Monte Carlo of `∫ Π θ_i^{n_i} Dir(θ; α) dθ`.
pub fn mc_marginal_loglik(
    counts: &CountTable,
    alphas: &[f64],
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    let n = counts.counts();
    if alphas.len() != n.len() {
        return Err(Error::AlphaMismatch {
            expected: n.len(),
            got: alphas.len(),
        });
    }
    if counts.total() == 0 {
        return Ok(summarize(&[0.0]));
    }
    assert!(
        samples >= 2,
        "need at least two samples for a standard error"
    );
    let gammas = alphas
        .iter()
        .map(|&a| Gamma::new(a, 1.0).map_err(|_| Error::NonPositiveAlpha(a)))
        .collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms: Vec<f64> = (0..samples)
        .map(|_| {
            let log_theta = log_dirichlet(&gammas, &mut rng);
            n.iter()
                .zip(&log_theta)
                .filter(|(&c, _)| c > 0)
                .map(|(&c, &t)| c as f64 * t)
                .sum()
        })
        .collect();
    Ok(summarize(&terms))
}

/// Naive Monte Carlo of a labeled clique's marginal likelihood under the
/// grouped prior. Variables are drawn in `order` (final variable last). Each
/// non-final position has one Beta per parent outcome; the final variable
/// has one Beta per parent class, shared by every outcome in the class. A
/// cell's Beta parameter is the number of joint clique outcomes it covers
/// (one prior pseudo-observation per joint outcome, split evenly).
pub fn mc_clique_loglik(
    clique: NodeSet,
    labels: &LabelSet,
    table: &CountTable,
    order: &[usize],
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    if table.scope() != clique || order.len() != clique.len() {
        return Err(Error::InvalidStrata {
            clique,
            reason: "table scope or ordering does not match the clique".into(),
        });
    }
    let nodes = clique.to_vec();
    let final_var = *order.last().expect("non-empty clique");
    let classes = brute_parent_partition(clique, labels, final_var);
    let final_parents: Vec<usize> = clique.without(final_var).to_vec();
    let class_count = classes.iter().max().map_or(1, |m| m + 1);

    // Cell of every (position, joint outcome): position j's parameter index.
    let joint = 1usize << nodes.len();
    let mut cell_of = vec![vec![0usize; joint]; order.len()];
    let mut cells_per_position = Vec::with_capacity(order.len());
    for j in 0..order.len() {
        let preceding: Vec<usize> = {
            let mut p = order[..j].to_vec();
            p.sort_unstable();
            p
        };
        for (x, cell) in cell_of[j].iter_mut().enumerate() {
            let assignment = unpack(&nodes, x as u64);
            *cell = if j + 1 == order.len() {
                classes[pack(&final_parents, assignment) as usize]
            } else {
                pack(&preceding, assignment) as usize
            };
        }
        cells_per_position.push(if j + 1 == order.len() {
            class_count
        } else {
            1 << j
        });
    }
    // Beta parameters by counting joint outcomes per (cell, value).
    let mut betas: Vec<Vec<[Gamma<f64>; 2]>> = Vec::with_capacity(order.len());
    for (j, &v) in order.iter().enumerate() {
        let mut pseudo = vec![[0.0f64; 2]; cells_per_position[j]];
        for x in 0..joint {
            let value = (unpack(&nodes, x as u64) >> v) & 1;
            pseudo[cell_of[j][x]][value as usize] += 1.0;
        }
        betas.push(
            pseudo
                .iter()
                .map(|p| {
                    [
                        Gamma::new(p[0], 1.0).expect("positive pseudo-count"),
                        Gamma::new(p[1], 1.0).expect("positive pseudo-count"),
                    ]
                })
                .collect(),
        );
    }
    if table.total() == 0 {
        return Ok(summarize(&[0.0]));
    }
    assert!(
        samples >= 2,
        "need at least two samples for a standard error"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms: Vec<f64> = (0..samples)
        .map(|_| {
            let log_theta: Vec<Vec<[f64; 2]>> = betas
                .iter()
                .map(|pos| {
                    pos.iter()
                        .map(|pair| {
                            let l = log_dirichlet(pair, &mut rng);
                            [l[0], l[1]]
                        })
                        .collect()
                })
                .collect();
            let mut total = 0.0;
            for (x, &c) in table.counts().iter().enumerate() {
                if c == 0 {
                    continue;
                }
                let assignment = unpack(&nodes, x as u64);
                let mut lp = 0.0;
                for (j, &v) in order.iter().enumerate() {
                    lp += log_theta[j][cell_of[j][x]][((assignment >> v) & 1) as usize];
                }
                total += c as f64 * lp;
            }
            total
        })
        .collect();
    Ok(summarize(&terms))
}
