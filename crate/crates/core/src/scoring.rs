//! Exact log marginal likelihoods for decomposable stratified graphs.
//!
//! A clique is scored with a Cooper–Herskovits product over a variable
//! ordering that puts the clique's common node last. Every earlier variable
//! conditions on all of its predecessors; the last variable conditions on the
//! classes of its parent partition. Hyperparameters are
//! `alpha = k * lambda / (parent_outcomes * 2)` with `k = 2^|C|`, which makes
//! the value independent of the ordering and, without labels, equal to a
//! Dirichlet(1, ..., 1) marginal likelihood over the clique table.
//! Separators use the all-ones Dirichlet form directly.

use std::f64::consts::LN_2;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Neg, Sub};

use statrs::function::gamma::ln_gamma;

use crate::data::{counts, BinaryDataMatrix};
use crate::error::{Error, Result};
use crate::graph::UndirectedGraph;
use crate::nodeset::NodeSet;
use crate::stratified::{
    common_node_candidates, is_regular, parent_partition, LabelSet, ParentPartition,
    StratifiedGraph,
};

/// A natural-log score.
#[derive(Clone, Copy, PartialEq, PartialOrd, Default, Debug)]
pub struct LogScore(pub f64);

impl LogScore {
    pub const ZERO: LogScore = LogScore(0.0);

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Add for LogScore {
    type Output = LogScore;
    fn add(self, rhs: LogScore) -> LogScore {
        LogScore(self.0 + rhs.0)
    }
}

impl AddAssign for LogScore {
    fn add_assign(&mut self, rhs: LogScore) {
        self.0 += rhs.0;
    }
}

impl Sub for LogScore {
    type Output = LogScore;
    fn sub(self, rhs: LogScore) -> LogScore {
        LogScore(self.0 - rhs.0)
    }
}

impl Neg for LogScore {
    type Output = LogScore;
    fn neg(self) -> LogScore {
        LogScore(-self.0)
    }
}

impl Sum for LogScore {
    fn sum<I: Iterator<Item = LogScore>>(iter: I) -> LogScore {
        iter.fold(LogScore::ZERO, Add::add)
    }
}

impl fmt::Display for LogScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

/// Counts of every outcome of the variables in `scope`, indexed by the
/// packed outcome.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct CountTable {
    scope: NodeSet,
    counts: Vec<u64>,
}

impl CountTable {
    pub fn new(scope: NodeSet, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != scope.outcome_count() {
            return Err(Error::LengthMismatch(counts.len(), scope.outcome_count()));
        }
        Ok(CountTable { scope, counts })
    }

    pub fn scope(&self) -> NodeSet {
        self.scope
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Sums out the variables not in `sub`.
    pub fn marginalize(&self, sub: NodeSet) -> Result<CountTable> {
        if !sub.is_subset(self.scope) {
            return Err(Error::InvalidStrata {
                clique: self.scope,
                reason: format!("cannot marginalize onto {sub}"),
            });
        }
        let mut out = vec![0u64; sub.outcome_count()];
        for (i, &c) in self.counts.iter().enumerate() {
            out[sub.gather(self.scope.scatter(i as u64)) as usize] += c;
        }
        CountTable::new(sub, out)
    }
}

fn dirichlet_terms(counts: &[u64], alphas: &[f64]) -> f64 {
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let alpha: f64 = alphas.iter().sum();
    let mut acc = ln_gamma(alpha) - ln_gamma(n as f64 + alpha);
    for (&c, &a) in counts.iter().zip(alphas) {
        if c > 0 {
            acc += ln_gamma(c as f64 + a) - ln_gamma(a);
        }
    }
    acc
}

/// `log[ Γ(α)/Γ(n+α) · Π Γ(n_i+α_i)/Γ(α_i) ]` with `α = Σ α_i`.
pub fn dirichlet_marginal_loglik(counts: &CountTable, alphas: &[f64]) -> Result<LogScore> {
    if alphas.len() != counts.counts.len() {
        return Err(Error::AlphaMismatch {
            expected: counts.counts.len(),
            got: alphas.len(),
        });
    }
    if let Some(&bad) = alphas.iter().find(|&&a| !(a > 0.0 && a.is_finite())) {
        return Err(Error::NonPositiveAlpha(bad));
    }
    Ok(LogScore(dirichlet_terms(&counts.counts, alphas)))
}

/// Dirichlet marginal likelihood with every hyperparameter equal to one.
pub fn unit_dirichlet_loglik(counts: &CountTable) -> LogScore {
    let ones = vec![1.0; counts.counts.len()];
    LogScore(dirichlet_terms(&counts.counts, &ones))
}

/// Hyperparameters of one position in the clique ordering.
#[derive(Clone, PartialEq, Debug)]
pub struct PositionPlan {
    /// Number of parent outcomes (`2^(j-1)` at 1-based position `j`).
    pub parent_outcomes: usize,
    /// Class sizes; all ones except possibly at the final position.
    pub lambdas: Vec<usize>,
    /// Per-outcome hyperparameter for each class.
    pub alphas: Vec<f64>,
}

/// Per-position hyperparameters for a clique of a given size.
#[derive(Clone, PartialEq, Debug)]
pub struct HyperparameterPlan {
    pub clique_size: usize,
    pub positions: Vec<PositionPlan>,
}

pub fn hyperparameter_plan(
    clique_size: usize,
    partition: &ParentPartition,
) -> Result<HyperparameterPlan> {
    if partition.clique.len() != clique_size || clique_size == 0 {
        return Err(Error::InvalidStrata {
            clique: partition.clique,
            reason: format!("partition does not belong to a clique of size {clique_size}"),
        });
    }
    let k = (1u64 << clique_size) as f64;
    let mut positions = Vec::with_capacity(clique_size);
    for j in 1..clique_size {
        let parent_outcomes = 1usize << (j - 1);
        let alpha = k / (parent_outcomes as f64 * 2.0);
        positions.push(PositionPlan {
            parent_outcomes,
            lambdas: vec![1; parent_outcomes],
            alphas: vec![alpha; parent_outcomes],
        });
    }
    let parent_outcomes = 1usize << (clique_size - 1);
    let lambdas = partition.sizes();
    let alphas = lambdas
        .iter()
        .map(|&l| k * l as f64 / (parent_outcomes as f64 * 2.0))
        .collect();
    positions.push(PositionPlan {
        parent_outcomes,
        lambdas,
        alphas,
    });
    Ok(HyperparameterPlan {
        clique_size,
        positions,
    })
}

fn check_clique_labels(clique: NodeSet, labels: &LabelSet) -> Result<()> {
    if common_node_candidates(clique, labels.iter().map(|l| l.edge)).is_empty() {
        return Err(Error::InvalidStrata {
            clique,
            reason: "labeled edges share no common node".into(),
        });
    }
    if !is_regular(clique, labels) {
        return Err(Error::InvalidStrata {
            clique,
            reason: "a stratum covers every context outcome".into(),
        });
    }
    Ok(())
}

fn beta_term(n0: u64, n1: u64, alpha: f64) -> f64 {
    dirichlet_terms(&[n0, n1], &[alpha, alpha])
}

/// Clique log marginal likelihood with the common node last and the other
/// variables in ascending order.
pub fn clique_loglik(clique: NodeSet, labels: &LabelSet, table: &CountTable) -> Result<LogScore> {
    check_clique_labels(clique, labels)?;
    let final_var = common_node_candidates(clique, labels.iter().map(|l| l.edge))
        .first()
        .ok_or_else(|| Error::InvalidStrata {
            clique,
            reason: "empty clique".into(),
        })?;
    let mut order: Vec<usize> = clique.without(final_var).to_vec();
    order.push(final_var);
    clique_loglik_ordered(clique, labels, table, &order)
}

/// Clique log marginal likelihood for an explicit variable ordering. The last
/// variable must be a common node of the labeled edges.
pub fn clique_loglik_ordered(
    clique: NodeSet,
    labels: &LabelSet,
    table: &CountTable,
    order: &[usize],
) -> Result<LogScore> {
    check_clique_labels(clique, labels)?;
    if order.len() != clique.len() || order.iter().copied().collect::<NodeSet>() != clique {
        return Err(Error::InvalidStrata {
            clique,
            reason: "ordering is not a permutation of the clique".into(),
        });
    }
    let table = if table.scope == clique {
        table.clone()
    } else {
        table.marginalize(clique)?
    };
    let final_var = *order.last().expect("non-empty clique");
    let partition = parent_partition(clique, labels, final_var)?;
    let plan = hyperparameter_plan(clique.len(), &partition)?;

    let mut total = 0.0;
    let mut preceding = NodeSet::EMPTY;
    for (pos, &v) in order[..order.len() - 1].iter().enumerate() {
        let plan = &plan.positions[pos];
        let mut n = vec![[0u64; 2]; plan.parent_outcomes];
        for (i, &c) in table.counts.iter().enumerate() {
            let a = clique.scatter(i as u64);
            n[preceding.gather(a) as usize][((a >> v) & 1) as usize] += c;
        }
        for (cell, &alpha) in n.iter().zip(&plan.alphas) {
            total += beta_term(cell[0], cell[1], alpha);
        }
        preceding.insert(v);
    }

    let last = plan.positions.last().expect("final position");
    let mut n = vec![[0u64; 2]; partition.class_count()];
    let parents = partition.parents;
    for (i, &c) in table.counts.iter().enumerate() {
        let a = clique.scatter(i as u64);
        let class = partition.class_of()[parents.gather(a) as usize];
        n[class][((a >> final_var) & 1) as usize] += c;
    }
    for (cell, &alpha) in n.iter().zip(&last.alphas) {
        total += beta_term(cell[0], cell[1], alpha);
    }
    Ok(LogScore(total))
}

/// Separator term: all-ones Dirichlet over the separator table.
pub fn separator_loglik(table: &CountTable) -> LogScore {
    unit_dirichlet_loglik(table)
}

/// Combines clique and separator terms in decomposition order. Every caller
/// goes through here so that equal inputs give bit-identical sums.
pub(crate) fn assemble(
    clique_scores: &[LogScore],
    separator_scores: &[LogScore],
    log_prior: LogScore,
) -> LogScore {
    let mut total = 0.0;
    for s in clique_scores {
        total += s.0;
    }
    for s in separator_scores {
        total -= s.0;
    }
    LogScore(total + log_prior.0)
}

fn decomposition_terms(
    sg: &StratifiedGraph,
    data: &BinaryDataMatrix,
) -> Result<(Vec<LogScore>, Vec<LogScore>)> {
    let violations = sg.validate();
    if !violations.is_empty() {
        return Err(Error::NotDecomposableSg(violations));
    }
    if data.d() != sg.node_count() {
        return Err(Error::LengthMismatch(data.d(), sg.node_count()));
    }
    let decomposition = sg.graph().clique_decomposition()?;
    let cliques = decomposition
        .cliques
        .iter()
        .map(|&c| clique_loglik(c, &sg.clique_labels(c), &counts(data, c)?))
        .collect::<Result<Vec<_>>>()?;
    let separators = decomposition
        .separators
        .iter()
        .map(|&s| Ok(separator_loglik(&counts(data, s)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok((cliques, separators))
}

/// Log marginal likelihood of the data under a decomposable SG.
pub fn sg_marginal_loglik(sg: &StratifiedGraph, data: &BinaryDataMatrix) -> Result<LogScore> {
    let (c, s) = decomposition_terms(sg, data)?;
    Ok(assemble(&c, &s, LogScore::ZERO))
}

/// Free parameters of a saturated distribution Markov to `g`.
pub fn free_params(g: &UndirectedGraph) -> Result<u64> {
    Ok(g.clique_decomposition()?.free_params())
}

/// `(d - f) log 2`, the log of the unnormalized structure prior `2^(d-f)`.
pub fn log_prior(g: &UndirectedGraph) -> Result<LogScore> {
    let f = free_params(g)?;
    Ok(LogScore((g.node_count() as f64 - f as f64) * LN_2))
}

/// Free parameters once the strata have merged parent outcomes.
pub fn free_params_sg(sg: &StratifiedGraph) -> Result<u64> {
    let violations = sg.validate();
    if !violations.is_empty() {
        return Err(Error::NotDecomposableSg(violations));
    }
    let decomposition = sg.graph().clique_decomposition()?;
    let mut total = 0u64;
    for &c in &decomposition.cliques {
        let labels = sg.clique_labels(c);
        let final_var = common_node_candidates(c, labels.iter().map(|l| l.edge))
            .first()
            .expect("validated");
        let q = parent_partition(c, &labels, final_var)?.class_count() as u64;
        total += (1u64 << (c.len() - 1)) - 1 + q;
    }
    let seps: u64 = decomposition
        .separators
        .iter()
        .map(|s| (1u64 << s.len()) - 1)
        .sum();
    Ok(total - seps)
}

/// Marginal likelihood plus structure prior.
pub fn log_unnormalized_posterior(
    sg: &StratifiedGraph,
    data: &BinaryDataMatrix,
) -> Result<LogScore> {
    let (c, s) = decomposition_terms(sg, data)?;
    Ok(assemble(&c, &s, log_prior(sg.graph())?))
}

/// The score components reported by the `score` command.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreReport {
    pub log_marginal_likelihood: LogScore,
    pub log_prior: LogScore,
    pub log_posterior: LogScore,
    pub free_params: u64,
    pub free_params_sg: u64,
}

pub fn score_report(sg: &StratifiedGraph, data: &BinaryDataMatrix) -> Result<ScoreReport> {
    let (c, s) = decomposition_terms(sg, data)?;
    let prior = log_prior(sg.graph())?;
    Ok(ScoreReport {
        log_marginal_likelihood: assemble(&c, &s, LogScore::ZERO),
        log_prior: prior,
        log_posterior: assemble(&c, &s, prior),
        free_params: free_params(sg.graph())?,
        free_params_sg: free_params_sg(sg)?,
    })
}
