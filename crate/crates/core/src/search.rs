//! Non-reversible Metropolis–Hastings structure search.
//!
//! Two chains are used. The label chain walks over maximal regular label sets
//! of a single clique; the graph chain walks over decomposable graphs, each
//! paired with the best labeling the label chain finds for its cliques.
//! Posterior estimates come from the set of distinct visited states, not from
//! visit frequencies, so there is no burn-in or thinning.
//!
//! Random streams: every chain draws from its own ChaCha8 stream seeded with
//! `mix(master, purpose, a, b)`, where `mix` chains SplitMix64 finalizers.
//! The graph chain uses `(GRAPH_STREAM, 0, 0)`; the label search of a clique
//! uses `(LABEL_STREAM, clique bits, hash of its forbidden edges)`. A clique's
//! result therefore never depends on when the graph chain first meets it.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{counts, BinaryDataMatrix};
use crate::error::{Error, Result};
use crate::graph::{EdgeSet, UndirectedGraph};
use crate::nodeset::{Edge, NodeSet};
use crate::scoring::{assemble, clique_loglik, log_prior, separator_loglik, CountTable, LogScore};
use crate::stratified::{
    close_labels, common_node_candidates, is_maximal_regular_clique, label_key, possible_elements,
    LabelSet, StratifiedGraph, StratumElement,
};

const GRAPH_STREAM: u64 = 0x6772_6170_6800;
const LABEL_STREAM: u64 = 0x6c61_6265_6c00;
const MAX_RESTARTS: usize = 10_000;
const MAX_LABEL_ITERATIONS: usize = 100_000;
const LABEL_ITERATIONS_PER_ELEMENT: usize = 50;

pub const DEFAULT_GRAPH_ITERATIONS: usize = 3_000;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent 64-bit seed from a master seed and three tags.
pub fn mix(master: u64, purpose: u64, a: u64, b: u64) -> u64 {
    splitmix(master ^ splitmix(purpose ^ splitmix(a ^ splitmix(b))))
}

fn stream(master: u64, purpose: u64, a: u64, b: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(master, purpose, a, b))
}

fn edges_hash(edges: &EdgeSet) -> u64 {
    edges.iter().fold(0u64, |h, e| {
        splitmix(h ^ ((e.lo() as u64) << 8 | e.hi() as u64))
    })
}

/// Metropolis–Hastings acceptance: `u < min(1, exp(candidate - current))`.
pub fn accept(candidate: LogScore, current: LogScore, u: f64) -> bool {
    u.ln() < candidate.0 - current.0
}

/// Default label-chain length: 50 steps per possible stratum element,
/// capped at 100 000.
pub fn default_label_iterations(clique: NodeSet, forbidden: &EdgeSet) -> usize {
    (LABEL_ITERATIONS_PER_ELEMENT * possible_elements(clique, forbidden).len())
        .min(MAX_LABEL_ITERATIONS)
}

/// Elements that can join `current` while keeping a common node.
pub fn addable_elements(
    clique: NodeSet,
    current: &LabelSet,
    forbidden: &EdgeSet,
) -> Vec<StratumElement> {
    let common = common_node_candidates(clique, current.iter().map(|l| l.edge));
    possible_elements(clique, forbidden)
        .into_iter()
        .filter(|el| !current.contains(el) && !el.edge.nodes().is_disjoint(common))
        .collect()
}

/// One label-chain proposal: add or delete a single element, expand with
/// every implied label, and retry until the result is maximal regular.
pub fn propose_labels<R: Rng + ?Sized>(
    current: &LabelSet,
    clique: NodeSet,
    forbidden: &EdgeSet,
    rng: &mut R,
) -> Result<LabelSet> {
    let addable = addable_elements(clique, current, forbidden);
    if addable.is_empty() && current.is_empty() {
        return Ok(current.clone());
    }
    for _ in 0..MAX_RESTARTS {
        let mut candidate = current.clone();
        let delete = if addable.is_empty() {
            true
        } else if current.is_empty() {
            false
        } else {
            rng.random_bool(0.5)
        };
        if delete {
            let victim = *candidate
                .iter()
                .nth(rng.random_range(0..candidate.len()))
                .expect("index in range");
            candidate.remove(&victim);
        } else {
            candidate.insert(addable[rng.random_range(0..addable.len())]);
        }
        let closed = close_labels(clique, &candidate, forbidden)?;
        if is_maximal_regular_clique(clique, &closed, forbidden) {
            return Ok(closed);
        }
    }
    Err(Error::Internal(format!(
        "label proposal for clique {clique} found no maximal regular candidate in {MAX_RESTARTS} tries"
    )))
}

/// Every candidate [`propose_labels`] can return from `current`, found by
/// trying each single deletion and addition deterministically.
pub fn label_moves(
    current: &LabelSet,
    clique: NodeSet,
    forbidden: &EdgeSet,
) -> Result<BTreeSet<LabelSet>> {
    let mut out = BTreeSet::new();
    let deletions = current.iter().map(|victim| {
        let mut c = current.clone();
        c.remove(victim);
        c
    });
    let additions = addable_elements(clique, current, forbidden)
        .into_iter()
        .map(|el| {
            let mut c = current.clone();
            c.insert(el);
            c
        });
    for candidate in deletions.chain(additions) {
        let closed = close_labels(clique, &candidate, forbidden)?;
        if is_maximal_regular_clique(clique, &closed, forbidden) {
            out.insert(closed);
        }
    }
    Ok(out)
}

/// Best labeling found for one clique.
#[derive(Clone, Debug, PartialEq)]
pub struct CliqueOptimum {
    pub labels: LabelSet,
    pub score: LogScore,
    /// Number of distinct label sets the chain evaluated.
    pub visited: usize,
}

fn argmax_by_key<K: Ord, T>(
    items: impl Iterator<Item = (K, LogScore, T)>,
) -> Option<(K, LogScore, T)> {
    items.fold(None, |best, (k, s, t)| match best {
        None => Some((k, s, t)),
        Some((bk, bs, bt)) => {
            if s.0 > bs.0 || (s.0 == bs.0 && k < bk) {
                Some((k, s, t))
            } else {
                Some((bk, bs, bt))
            }
        }
    })
}

/// Runs the label chain on one clique from the empty label set and returns
/// every distinct state it evaluated, with its clique score.
pub fn label_chain_ledger<R: Rng + ?Sized>(
    clique: NodeSet,
    forbidden: &EdgeSet,
    table: &CountTable,
    iterations: usize,
    rng: &mut R,
) -> Result<BTreeMap<LabelSet, LogScore>> {
    let mut current = LabelSet::new();
    let mut current_score = clique_loglik(clique, &current, table)?;
    let mut ledger: BTreeMap<LabelSet, LogScore> = BTreeMap::new();
    ledger.insert(current.clone(), current_score);
    if possible_elements(clique, forbidden).is_empty() {
        return Ok(ledger);
    }
    for _ in 0..iterations {
        let candidate = propose_labels(&current, clique, forbidden, rng)?;
        if candidate == current {
            continue;
        }
        let score = match ledger.get(&candidate) {
            Some(&s) => s,
            None => {
                let s = clique_loglik(clique, &candidate, table)?;
                ledger.insert(candidate.clone(), s);
                s
            }
        };
        if accept(score, current_score, rng.random::<f64>()) {
            current = candidate;
            current_score = score;
        }
    }
    Ok(ledger)
}

/// Best state of the label chain. Ties go to the lexicographically smallest
/// canonical label key.
pub fn optimal_labels_for_clique<R: Rng + ?Sized>(
    clique: NodeSet,
    forbidden: &EdgeSet,
    table: &CountTable,
    iterations: usize,
    rng: &mut R,
) -> Result<CliqueOptimum> {
    let ledger = label_chain_ledger(clique, forbidden, table, iterations, rng)?;
    let visited = ledger.len();
    let (_, score, labels) = argmax_by_key(ledger.into_iter().map(|(l, s)| (label_key(&l), s, l)))
        .expect("ledger holds the start state");
    Ok(CliqueOptimum {
        labels,
        score,
        visited,
    })
}

/// One graph-chain proposal: toggle a uniformly chosen node pair, redrawing
/// from `current` until the result is decomposable.
pub fn propose_graph<R: Rng + ?Sized>(current: &UndirectedGraph, rng: &mut R) -> UndirectedGraph {
    let d = current.node_count();
    assert!(d >= 2, "graph proposals need at least two nodes");
    loop {
        let a = rng.random_range(0..d);
        let mut b = rng.random_range(0..d - 1);
        if b >= a {
            b += 1;
        }
        let candidate = current.toggled(Edge::new(a, b));
        if candidate.is_decomposable() {
            return candidate;
        }
    }
}

/// Budgets and seed for [`learn`].
#[derive(Clone, Debug, PartialEq)]
pub struct LearnConfig {
    pub graph_iterations: usize,
    /// Fixed label-chain length; `None` uses [`default_label_iterations`].
    pub label_iterations: Option<usize>,
    pub seed: u64,
    /// Reuse per-clique optima, separator scores and count tables.
    pub use_cache: bool,
}

impl Default for LearnConfig {
    fn default() -> Self {
        LearnConfig {
            graph_iterations: DEFAULT_GRAPH_ITERATIONS,
            label_iterations: None,
            seed: 0,
            use_cache: true,
        }
    }
}

/// A visited model with its score and estimated posterior probability.
#[derive(Clone, Debug, PartialEq)]
pub struct RankedModel {
    pub model: StratifiedGraph,
    pub log_posterior: LogScore,
    pub posterior_estimate: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LearnOutcome {
    /// Every distinct visited model, best first.
    pub ranked: Vec<RankedModel>,
    pub iterations: usize,
    pub accepted: usize,
}

impl LearnOutcome {
    pub fn best(&self) -> &RankedModel {
        &self.ranked[0]
    }
}

/// Snapshot passed to the progress hook after every graph-chain step.
#[derive(Clone, Copy, Debug)]
pub struct Progress {
    pub iteration: usize,
    pub current: LogScore,
    pub best: LogScore,
    pub distinct_models: usize,
}

type CliqueKey = (NodeSet, EdgeSet);

/// Memoized per-node-set work for one dataset.
#[derive(Default)]
pub struct ScoreCache {
    counts: HashMap<NodeSet, CountTable>,
    cliques: HashMap<CliqueKey, CliqueOptimum>,
    separators: HashMap<NodeSet, LogScore>,
}

impl ScoreCache {
    pub fn clique_entries(&self) -> usize {
        self.cliques.len()
    }
}

struct GraphScorer<'a> {
    data: &'a BinaryDataMatrix,
    config: &'a LearnConfig,
    cache: ScoreCache,
}

impl GraphScorer<'_> {
    fn table(&mut self, set: NodeSet) -> Result<CountTable> {
        if !self.config.use_cache {
            return counts(self.data, set);
        }
        if let Some(t) = self.cache.counts.get(&set) {
            return Ok(t.clone());
        }
        let t = counts(self.data, set)?;
        self.cache.counts.insert(set, t.clone());
        Ok(t)
    }

    fn clique_optimum(&mut self, clique: NodeSet, forbidden: EdgeSet) -> Result<CliqueOptimum> {
        let key = (clique, forbidden);
        if self.config.use_cache {
            if let Some(hit) = self.cache.cliques.get(&key) {
                return Ok(hit.clone());
            }
        }
        let (clique, forbidden) = key;
        let table = self.table(clique)?;
        let iterations = self
            .config
            .label_iterations
            .unwrap_or_else(|| default_label_iterations(clique, &forbidden));
        let mut rng = stream(
            self.config.seed,
            LABEL_STREAM,
            clique.bits(),
            edges_hash(&forbidden),
        );
        let optimum = optimal_labels_for_clique(clique, &forbidden, &table, iterations, &mut rng)?;
        if self.config.use_cache {
            self.cache
                .cliques
                .insert((clique, forbidden), optimum.clone());
        }
        Ok(optimum)
    }

    fn separator(&mut self, set: NodeSet) -> Result<LogScore> {
        if self.config.use_cache {
            if let Some(&s) = self.cache.separators.get(&set) {
                return Ok(s);
            }
        }
        let s = separator_loglik(&self.table(set)?);
        if self.config.use_cache {
            self.cache.separators.insert(set, s);
        }
        Ok(s)
    }

    /// The graph with its optimal labeling, and the log unnormalized posterior.
    fn evaluate(&mut self, graph: &UndirectedGraph) -> Result<(StratifiedGraph, LogScore)> {
        let decomposition = graph.clique_decomposition()?;
        let forbidden = decomposition.separator_edges();
        let mut labels = LabelSet::new();
        let mut clique_scores = Vec::with_capacity(decomposition.cliques.len());
        for &clique in &decomposition.cliques {
            let optimum = self.clique_optimum(clique, forbidden.restricted_to(clique))?;
            labels.extend(optimum.labels.iter().copied());
            clique_scores.push(optimum.score);
        }
        let separator_scores = decomposition
            .separators
            .iter()
            .map(|&s| self.separator(s))
            .collect::<Result<Vec<_>>>()?;
        let score = assemble(&clique_scores, &separator_scores, log_prior(graph)?);
        Ok((StratifiedGraph::new(graph.clone(), labels), score))
    }
}

/// Runs the graph chain from the empty graph.
pub fn learn(data: &BinaryDataMatrix, config: &LearnConfig) -> Result<LearnOutcome> {
    learn_with_progress(data, config, |_| {})
}

pub fn learn_with_progress(
    data: &BinaryDataMatrix,
    config: &LearnConfig,
    mut progress: impl FnMut(Progress),
) -> Result<LearnOutcome> {
    if data.n() == 0 || data.d() == 0 {
        return Err(Error::EmptyData);
    }
    let d = data.d();
    let mut scorer = GraphScorer {
        data,
        config,
        cache: ScoreCache::default(),
    };
    let mut current = UndirectedGraph::empty(d);
    let (sg, mut current_score) = scorer.evaluate(&current)?;
    let mut best = current_score;
    let mut ledger: HashMap<UndirectedGraph, (StratifiedGraph, LogScore)> = HashMap::new();
    ledger.insert(current.clone(), (sg, current_score));
    let mut rng = stream(config.seed, GRAPH_STREAM, 0, 0);
    let mut accepted = 0;
    let iterations = if d < 2 { 0 } else { config.graph_iterations };
    for iteration in 0..iterations {
        let candidate = propose_graph(&current, &mut rng);
        let score = match ledger.get(&candidate) {
            Some((_, s)) => *s,
            None => {
                let (sg, s) = scorer.evaluate(&candidate)?;
                ledger.insert(candidate.clone(), (sg, s));
                s
            }
        };
        if accept(score, current_score, rng.random::<f64>()) {
            current = candidate;
            current_score = score;
            accepted += 1;
        }
        if score.0 > best.0 {
            best = score;
        }
        progress(Progress {
            iteration,
            current: current_score,
            best,
            distinct_models: ledger.len(),
        });
    }
    log::debug!(
        "graph chain: {iterations} iterations, {accepted} accepted, {} distinct graphs, {} clique searches",
        ledger.len(),
        scorer.cache.clique_entries()
    );
    Ok(LearnOutcome {
        ranked: rank(ledger.into_values().collect()),
        iterations,
        accepted,
    })
}

/// Sorts by score (descending, ties by canonical key) and attaches
/// normalized posterior estimates over the visited set.
pub fn rank(models: Vec<(StratifiedGraph, LogScore)>) -> Vec<RankedModel> {
    let mut keyed: Vec<(String, StratifiedGraph, LogScore)> = models
        .into_iter()
        .map(|(m, s)| (m.canonical_key(), m, s))
        .collect();
    keyed.sort_by(|a, b| b.2 .0.total_cmp(&a.2 .0).then_with(|| a.0.cmp(&b.0)));
    let max = keyed.first().map_or(0.0, |k| k.2 .0);
    let norm: f64 = keyed.iter().map(|k| (k.2 .0 - max).exp()).sum();
    keyed
        .into_iter()
        .map(|(_, model, s)| RankedModel {
            model,
            log_posterior: s,
            posterior_estimate: (s.0 - max).exp() / norm,
        })
        .collect()
}
