//! Sample-size experiment: simulate from a generator, learn, and compare the
//! generating model's score with the learned optimum through the y statistic.

use std::io::Write;

use crate::data::{simulate_sgm, y_statistic, GeneratorSpec};
use crate::error::{Error, Result};
use crate::scoring::score_report;
use crate::search::{learn, mix, LearnConfig};
use crate::stratified::StratifiedGraph;

const DATA_STREAM: u64 = 0x7964_6174_6100;
const SEARCH_STREAM: u64 = 0x7973_6561_7263;

/// Which score enters the y statistic.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ScoreKind {
    /// Log unnormalized posterior, the quantity the search maximizes.
    #[default]
    Posterior,
    /// Log marginal likelihood of the generating model and of the
    /// posterior-optimal learned model.
    MarginalLikelihood,
}

#[derive(Clone, Debug, PartialEq)]
pub struct YExperimentConfig {
    pub sizes: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    pub learn: LearnConfig,
    pub score: ScoreKind,
}

/// One point of the y curve.
#[derive(Clone, Debug, PartialEq)]
pub struct YPoint {
    pub n: usize,
    pub y: f64,
    pub mean_generating: f64,
    pub mean_optimal: f64,
    /// Replicates whose learned model equals the generating one.
    pub recovered: usize,
}

/// The generating SG named by the spec's `model` block, checked against the
/// spec's variables.
pub fn generating_model(spec: &GeneratorSpec) -> Result<StratifiedGraph> {
    let doc = spec.model.as_ref().ok_or_else(|| {
        Error::InvalidSpec("the y experiment needs a `model` block naming the generating SG".into())
    })?;
    if doc.variables != spec.names() {
        return Err(Error::InvalidSpec(
            "model variables must match the generator variables in order".into(),
        ));
    }
    let sg = doc.to_sg()?;
    let violations = sg.validate();
    if !violations.is_empty() {
        return Err(Error::NotDecomposableSg(violations));
    }
    Ok(sg)
}

/// Runs `replicates` simulate-and-learn rounds per sample size. Dataset and
/// search seeds are derived from `(seed, n, replicate)`, so every point can
/// be reproduced on its own.
pub fn run_y_experiment(spec: &GeneratorSpec, config: &YExperimentConfig) -> Result<Vec<YPoint>> {
    let generating = generating_model(spec)?;
    if config.replicates == 0 {
        return Err(Error::InvalidSpec("replicates must be at least 1".into()));
    }
    let mut points = Vec::with_capacity(config.sizes.len());
    for &n in &config.sizes {
        if n == 0 {
            return Err(Error::InvalidSpec("sample sizes must be at least 1".into()));
        }
        let mut gen_scores = Vec::with_capacity(config.replicates);
        let mut opt_scores = Vec::with_capacity(config.replicates);
        let mut recovered = 0;
        for r in 0..config.replicates {
            let data = simulate_sgm(spec, n, mix(config.seed, DATA_STREAM, n as u64, r as u64))?;
            let learn_config = LearnConfig {
                seed: mix(config.seed, SEARCH_STREAM, n as u64, r as u64),
                ..config.learn.clone()
            };
            let best = learn(&data, &learn_config)?.best().model.clone();
            if best == generating {
                recovered += 1;
            }
            let (gen, opt) = (
                score_report(&generating, &data)?,
                score_report(&best, &data)?,
            );
            match config.score {
                ScoreKind::Posterior => {
                    gen_scores.push(gen.log_posterior.0);
                    opt_scores.push(opt.log_posterior.0);
                }
                ScoreKind::MarginalLikelihood => {
                    gen_scores.push(gen.log_marginal_likelihood.0);
                    opt_scores.push(opt.log_marginal_likelihood.0);
                }
            }
        }
        let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
        let point = YPoint {
            n,
            y: y_statistic(&gen_scores, &opt_scores, n)?,
            mean_generating: mean(&gen_scores),
            mean_optimal: mean(&opt_scores),
            recovered,
        };
        log::info!(
            "n = {n}: y = {:.6}, recovered {recovered}/{}",
            point.y,
            config.replicates
        );
        points.push(point);
    }
    Ok(points)
}

/// CSV with header `n,y,mean_generating,mean_optimal,recovered`.
pub fn write_y_csv<W: Write>(points: &[YPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "y", "mean_generating", "mean_optimal", "recovered"])
        .map_err(csv_io)?;
    for p in points {
        w.write_record([
            p.n.to_string(),
            p.y.to_string(),
            p.mean_generating.to_string(),
            p.mean_optimal.to_string(),
            p.recovered.to_string(),
        ])
        .map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// The three-variable generator used for the y-curve acceptance run. Its
/// tables are faithful to the complete graph with stratum `X1=1` on edge
/// {X2,X3}: X3 ignores X2 whenever X1 = 1.
pub const THREE_CLIQUE_SPEC: &str = r#"{
  "variables": [
    {"name": "X1", "groups": [{"when": [[]], "p": 0.5}]},
    {"name": "X2", "parents": ["X1"], "groups": [
      {"when": [[0]], "p": 0.2},
      {"when": [[1]], "p": 0.8}
    ]},
    {"name": "X3", "parents": ["X1", "X2"], "groups": [
      {"when": [[0, 0]], "p": 0.1},
      {"when": [[0, 1]], "p": 0.9},
      {"when": [[1, 0], [1, 1]], "p": 0.5}
    ]}
  ],
  "model": {
    "variables": ["X1", "X2", "X3"],
    "edges": [["X1", "X2"], ["X1", "X3"], ["X2", "X3"]],
    "strata": [{"edge": ["X2", "X3"], "contexts": [{"X1": 1}]}]
  }
}"#;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_variable_gives_zero_y() {
        let spec = GeneratorSpec::from_json(
            r#"{"variables":[{"name":"A","groups":[{"when":[[]],"p":0.3}]}],
                "model":{"variables":["A"],"edges":[]}}"#,
        )
        .unwrap();
        let config = YExperimentConfig {
            sizes: vec![5, 20],
            replicates: 3,
            seed: 1,
            learn: LearnConfig::default(),
            score: ScoreKind::Posterior,
        };
        let points = run_y_experiment(&spec, &config).unwrap();
        assert!(points.iter().all(|p| p.y == 0.0 && p.recovered == 3));
    }

    #[test]
    fn spec_without_model_is_rejected() {
        let spec = GeneratorSpec::from_json(
            r#"{"variables":[{"name":"A","groups":[{"when":[[]],"p":0.3}]}]}"#,
        )
        .unwrap();
        let config = YExperimentConfig {
            sizes: vec![5],
            replicates: 1,
            seed: 1,
            learn: LearnConfig::default(),
            score: ScoreKind::Posterior,
        };
        assert!(matches!(
            run_y_experiment(&spec, &config),
            Err(Error::InvalidSpec(_))
        ));
    }

    #[test]
    fn documented_spec_is_valid() {
        let spec = GeneratorSpec::from_json(THREE_CLIQUE_SPEC).unwrap();
        spec.validate().unwrap();
        let sg = generating_model(&spec).unwrap();
        assert!(sg.is_maximal_regular().unwrap());
    }

    #[test]
    fn csv_layout() {
        let mut out = Vec::new();
        let p = YPoint {
            n: 10,
            y: -0.5,
            mean_generating: -7.0,
            mean_optimal: -6.0,
            recovered: 2,
        };
        write_y_csv(&[p], &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "n,y,mean_generating,mean_optimal,recovered\n10,-0.5,-7,-6,2\n"
        );
    }
}
