//! JSON model documents and Graphviz export.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::UndirectedGraph;
use crate::nodeset::{Edge, MAX_NODES};
use crate::stratified::{LabelSet, StratifiedGraph, StratumElement};

/// A stratified graph with variables, edges and strata referenced by name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub variables: Vec<String>,
    pub edges: Vec<[String; 2]>,
    #[serde(default)]
    pub strata: Vec<StratumDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<ScoreBlock>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StratumDocument {
    pub edge: [String; 2],
    /// One map per stratum element, assigning 0/1 to every context variable.
    pub contexts: Vec<BTreeMap<String, u8>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreBlock {
    pub log_posterior: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_marginal_likelihood: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_prior: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub posterior_estimate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub free_params: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub free_params_sg: Option<u64>,
}

impl ModelDocument {
    pub fn from_sg(names: &[String], sg: &StratifiedGraph) -> Self {
        let edges = sg
            .graph()
            .edges()
            .map(|e| [names[e.lo()].clone(), names[e.hi()].clone()])
            .collect();
        let strata = sg
            .strata()
            .into_iter()
            .map(|(edge, contexts)| {
                let ctx_nodes = sg.context_nodes(edge).unwrap_or_default();
                StratumDocument {
                    edge: [names[edge.lo()].clone(), names[edge.hi()].clone()],
                    contexts: contexts
                        .into_iter()
                        .map(|c| {
                            ctx_nodes
                                .iter()
                                .enumerate()
                                .map(|(i, v)| (names[v].clone(), ((c >> i) & 1) as u8))
                                .collect()
                        })
                        .collect(),
                }
            })
            .collect();
        ModelDocument {
            variables: names.to_vec(),
            edges,
            strata,
            score: None,
        }
    }

    pub fn with_score(mut self, score: ScoreBlock) -> Self {
        self.score = Some(score);
        self
    }

    /// Resolves names into a stratified graph. Decomposability is not
    /// checked here; see [`StratifiedGraph::validate`].
    pub fn to_sg(&self) -> Result<StratifiedGraph> {
        let d = self.variables.len();
        if d > MAX_NODES {
            return Err(Error::TooManyVariables {
                max: MAX_NODES,
                got: d,
            });
        }
        let index: HashMap<&str, usize> = self
            .variables
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect();
        if index.len() != d {
            return Err(Error::InvalidModel("duplicate variable name".into()));
        }
        let lookup = |name: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| Error::InvalidModel(format!("unknown variable {name:?}")))
        };
        let edge_of = |pair: &[String; 2]| -> Result<Edge> {
            let (a, b) = (lookup(&pair[0])?, lookup(&pair[1])?);
            if a == b {
                return Err(Error::InvalidModel(format!("self-loop on {:?}", pair[0])));
            }
            Ok(Edge::new(a, b))
        };
        let mut graph = UndirectedGraph::empty(d);
        for pair in &self.edges {
            graph.add_edge(edge_of(pair)?);
        }
        let mut labels = LabelSet::new();
        for stratum in &self.strata {
            let edge = edge_of(&stratum.edge)?;
            let ctx_nodes = graph.common_neighbors(edge).map_err(|_| {
                Error::InvalidModel(format!(
                    "stratum on {}-{} refers to a missing edge",
                    stratum.edge[0], stratum.edge[1]
                ))
            })?;
            for assignment in &stratum.contexts {
                if assignment.len() != ctx_nodes.len() {
                    return Err(Error::InvalidModel(format!(
                        "context on {}-{} must assign exactly the common neighbours",
                        stratum.edge[0], stratum.edge[1]
                    )));
                }
                let mut context = 0u64;
                for (name, &value) in assignment {
                    let v = lookup(name)?;
                    let Some(pos) = ctx_nodes.rank_of(v) else {
                        return Err(Error::InvalidModel(format!(
                            "{name:?} is not a common neighbour of {}-{}",
                            stratum.edge[0], stratum.edge[1]
                        )));
                    };
                    match value {
                        0 => {}
                        1 => context |= 1u64 << pos,
                        _ => {
                            return Err(Error::InvalidModel(format!(
                                "context value {value} is not binary"
                            )))
                        }
                    }
                }
                labels.insert(StratumElement::new(edge, context));
            }
        }
        Ok(StratifiedGraph::new(graph, labels))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model documents serialize")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

fn quote(name: &str) -> String {
    format!("\"{}\"", name.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Graphviz DOT: strata become edge labels and labeled edges are red.
pub fn to_dot(names: &[String], sg: &StratifiedGraph) -> String {
    let strata = sg.strata();
    let mut out = String::from("graph sgm {\n  node [shape=circle];\n");
    for name in names {
        let _ = writeln!(out, "  {};", quote(name));
    }
    for e in sg.graph().edges() {
        let head = format!("  {} -- {}", quote(&names[e.lo()]), quote(&names[e.hi()]));
        match strata.get(&e) {
            Some(contexts) => {
                let ctx_nodes = sg.context_nodes(e).unwrap_or_default();
                let parts: Vec<String> = contexts
                    .iter()
                    .map(|&c| {
                        let cells: Vec<String> = ctx_nodes
                            .iter()
                            .enumerate()
                            .map(|(i, v)| format!("{}={}", names[v], (c >> i) & 1))
                            .collect();
                        format!("({})", cells.join(","))
                    })
                    .collect();
                let _ = writeln!(
                    out,
                    "{head} [label={}, color=red];",
                    quote(&parts.join(" "))
                );
            }
            None => {
                let _ = writeln!(out, "{head};");
            }
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::default_names;

    fn single_label_triangle() -> StratifiedGraph {
        StratifiedGraph::new(
            UndirectedGraph::complete(3),
            [StratumElement::new(Edge::new(1, 2), 1)]
                .into_iter()
                .collect(),
        )
    }

    #[test]
    fn json_round_trip() {
        let names = default_names(3);
        let doc = ModelDocument::from_sg(&names, &single_label_triangle());
        let text = doc.to_json();
        let back = ModelDocument::from_json(&text).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.to_sg().unwrap(), single_label_triangle());
        assert!(text.contains("\"X1\": 1"));
    }

    #[test]
    fn rejects_unknown_fields_and_bad_contexts() {
        assert!(ModelDocument::from_json(r#"{"variables":[],"edges":[],"colour":1}"#).is_err());
        let doc = ModelDocument::from_json(
            r#"{"variables":["A","B","C"],"edges":[["A","B"],["B","C"],["A","C"]],
                "strata":[{"edge":["B","C"],"contexts":[{"B":1}]}]}"#,
        )
        .unwrap();
        assert!(matches!(doc.to_sg(), Err(Error::InvalidModel(_))));
        let doc = ModelDocument::from_json(
            r#"{"variables":["A","B","C"],"edges":[["A","B"]],
                "strata":[{"edge":["B","C"],"contexts":[{"A":1}]}]}"#,
        )
        .unwrap();
        assert!(matches!(doc.to_sg(), Err(Error::InvalidModel(_))));
    }

    #[test]
    fn dot_marks_labeled_edges() {
        let names = default_names(3);
        let dot = to_dot(&names, &single_label_triangle());
        assert!(dot.contains("\"X2\" -- \"X3\" [label=\"(X1=1)\", color=red];"));
        assert!(dot.contains("\"X1\" -- \"X2\";"));
        let plain = to_dot(
            &names,
            &StratifiedGraph::unlabeled(UndirectedGraph::complete(3)),
        );
        assert!(!plain.contains("red"));
        assert!(!plain.contains("label"));
    }
}
