//! The `sgm` command line: argument parsing and command execution, kept in a
//! library so tests can drive it in-process.

use std::ffi::OsString;
use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use sgm::data::{load_csv, simulate_seven_variable, simulate_sgm, BinaryDataMatrix, GeneratorSpec};
use sgm::experiment::{run_y_experiment, write_y_csv, ScoreKind, YExperimentConfig};
use sgm::io::{to_dot, ModelDocument, ScoreBlock};
use sgm::search::{learn_with_progress, LearnConfig, DEFAULT_GRAPH_ITERATIONS};
use sgm::{score_report, StratifiedGraph};

pub const EXIT_IO: i32 = 2;
pub const EXIT_USAGE: i32 = 3;
pub const EXIT_INVALID: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "sgm",
    version,
    about = "Learn decomposable stratified graphical models from binary data"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Search for high-posterior models and write the top K as JSON.
    Learn(LearnArgs),
    /// Score a model against a data set.
    Score(ScoreArgs),
    /// Sample a binary data set from a generator spec.
    Simulate(SimulateArgs),
    /// List the context-specific independences encoded by a model.
    Csi(ModelArgs),
    /// Run the y-statistic experiment and write its curve as CSV.
    ExperimentY(ExperimentArgs),
    /// Render a model as Graphviz DOT.
    ExportDot(ModelArgs),
}

#[derive(Debug, Args)]
pub struct LearnArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = DEFAULT_GRAPH_ITERATIONS)]
    pub graph_iters: usize,
    /// Label-search iterations per clique; scaled to the clique by default.
    #[arg(long)]
    pub label_iters: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub top: usize,
    /// Where to write the JSON document; stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["spec", "builtin"])))]
pub struct SimulateArgs {
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Use the built-in seven-variable generator.
    #[arg(long = "appendix-b")]
    pub builtin: bool,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub model: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScoreChoice {
    Posterior,
    Marginal,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Generator spec with a `model` block naming the generating model.
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 50)]
    pub replicates: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_GRAPH_ITERATIONS)]
    pub graph_iters: usize,
    #[arg(long)]
    pub label_iters: Option<usize>,
    #[arg(long, value_enum, default_value_t = ScoreChoice::Posterior)]
    pub score: ScoreChoice,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A model that parsed but is not a valid decomposable stratified graph, or
/// does not fit the data it is paired with.
#[derive(Debug)]
pub struct Invalid(pub String);

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

/// Exit code for an error returned by [`execute`].
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.is::<Invalid>() {
            return EXIT_INVALID;
        }
        if let Some(e) = cause.downcast_ref::<sgm::Error>() {
            return match e {
                sgm::Error::NotDecomposable
                | sgm::Error::NotDecomposableSg(_)
                | sgm::Error::MissingEdge(_)
                | sgm::Error::InvalidFinalVariable { .. }
                | sgm::Error::InvalidStrata { .. } => EXIT_INVALID,
                _ => EXIT_IO,
            };
        }
    }
    EXIT_IO
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Normal output goes to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(&cli, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            exit_code(&e)
        }
    }
}

pub fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<()> {
    match &cli.command {
        Command::Learn(a) => learn_cmd(a, out, err),
        Command::Score(a) => score_cmd(a, out),
        Command::Simulate(a) => simulate_cmd(a, out),
        Command::Csi(a) => {
            let (names, sg) = read_model(&a.model)?;
            for statement in sg.enumerate_csi()? {
                writeln!(out, "{}", statement.render(&names))?;
            }
            Ok(())
        }
        Command::ExperimentY(a) => experiment_cmd(a, out),
        Command::ExportDot(a) => {
            let (names, sg) = read_model(&a.model)?;
            out.write_all(to_dot(&names, &sg).as_bytes())?;
            Ok(())
        }
    }
}

fn read_data(path: &Path) -> anyhow::Result<BinaryDataMatrix> {
    load_csv(path).with_context(|| format!("reading data from {}", path.display()))
}

/// Loads a model document and checks that it is a decomposable SG.
fn read_model(path: &Path) -> anyhow::Result<(Vec<String>, StratifiedGraph)> {
    let doc = ModelDocument::load(path)
        .with_context(|| format!("reading model from {}", path.display()))?;
    let sg = doc
        .to_sg()
        .with_context(|| format!("reading model from {}", path.display()))?;
    let violations = sg.validate();
    if !violations.is_empty() {
        let list: Vec<String> = violations
            .iter()
            .map(|v| render_with_names(&v.to_string(), &doc.variables))
            .collect();
        return Err(Invalid(format!(
            "{} is not a decomposable stratified graph: {}",
            path.display(),
            list.join("; ")
        ))
        .into());
    }
    Ok((doc.variables, sg))
}

/// Violations print one-based node numbers; tack the names on when they are
/// not the default X1..Xd.
fn render_with_names(text: &str, names: &[String]) -> String {
    let default = names
        .iter()
        .enumerate()
        .all(|(i, n)| *n == format!("X{}", i + 1));
    if default {
        return text.to_string();
    }
    let legend: Vec<String> = names
        .iter()
        .enumerate()
        .map(|(i, n)| format!("{}={n}", i + 1))
        .collect();
    format!("{text} (nodes: {})", legend.join(", "))
}

fn open_out(path: &Option<PathBuf>) -> anyhow::Result<Option<BufWriter<File>>> {
    path.as_ref()
        .map(|p| {
            File::create(p)
                .map(BufWriter::new)
                .with_context(|| format!("creating {}", p.display()))
        })
        .transpose()
}

fn learn_cmd(a: &LearnArgs, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<()> {
    let data = read_data(&a.data)?;
    let config = LearnConfig {
        graph_iterations: a.graph_iters,
        label_iterations: a.label_iters,
        seed: a.seed,
        ..LearnConfig::default()
    };
    let report_every = (a.graph_iters / 10).max(1);
    let outcome = learn_with_progress(&data, &config, |p| {
        if p.iteration % report_every == 0 {
            log::info!(
                "iteration {}: current {:.4}, best {:.4}, {} distinct models",
                p.iteration,
                p.current.0,
                p.best.0,
                p.distinct_models
            );
        }
    })?;
    let names = data.names();
    let models: Vec<Value> = outcome
        .ranked
        .iter()
        .take(a.top)
        .map(|r| {
            let doc = ModelDocument::from_sg(names, &r.model).with_score(ScoreBlock {
                log_posterior: r.log_posterior.0,
                log_marginal_likelihood: None,
                log_prior: None,
                posterior_estimate: Some(r.posterior_estimate),
                free_params: None,
                free_params_sg: None,
            });
            serde_json::to_value(doc)
        })
        .collect::<Result<_, _>>()?;
    let document = json!({
        "variables": names,
        "n": data.n(),
        "seed": a.seed,
        "graph_iterations": outcome.iterations,
        "accepted": outcome.accepted,
        "distinct_models": outcome.ranked.len(),
        "models": models,
    });
    let text = serde_json::to_string_pretty(&document)? + "\n";

    let best = outcome.best();
    let mut summary = format!(
        "best log posterior {:.6} (P-hat {:.4}), {} edges, {} stratum elements, {} distinct models visited\n",
        best.log_posterior.0,
        best.posterior_estimate,
        best.model.graph().edge_count(),
        best.model.labels().len(),
        outcome.ranked.len()
    );
    for statement in best.model.enumerate_csi()? {
        summary.push_str(&format!("  {}\n", statement.render(names)));
    }

    match open_out(&a.out)? {
        Some(mut file) => {
            file.write_all(text.as_bytes())?;
            file.flush()?;
            out.write_all(summary.as_bytes())?;
        }
        None => {
            out.write_all(text.as_bytes())?;
            err.write_all(summary.as_bytes())?;
        }
    }
    Ok(())
}

fn score_cmd(a: &ScoreArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    let data = read_data(&a.data)?;
    let (names, sg) = read_model(&a.model)?;
    if names.as_slice() != data.names() {
        return Err(Invalid(format!(
            "model variables {:?} do not match data columns {:?}",
            names,
            data.names()
        ))
        .into());
    }
    let r = score_report(&sg, &data)?;
    writeln!(
        out,
        "log_marginal_likelihood\t{:.6}",
        r.log_marginal_likelihood.0
    )?;
    writeln!(out, "log_prior\t{:.6}", r.log_prior.0)?;
    writeln!(out, "log_posterior\t{:.6}", r.log_posterior.0)?;
    writeln!(out, "free_params\t{}", r.free_params)?;
    writeln!(out, "free_params_sg\t{}", r.free_params_sg)?;
    Ok(())
}

fn simulate_cmd(a: &SimulateArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    let data = match &a.spec {
        Some(path) => {
            let spec = GeneratorSpec::load(path)
                .with_context(|| format!("reading spec from {}", path.display()))?;
            simulate_sgm(&spec, a.n, a.seed)?
        }
        None => simulate_seven_variable(a.n, a.seed),
    };
    match open_out(&a.out)? {
        Some(mut file) => {
            data.write_csv(&mut file)?;
            file.flush()?;
        }
        None => data.write_csv(out)?,
    }
    Ok(())
}

fn experiment_cmd(a: &ExperimentArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    let spec = GeneratorSpec::load(&a.spec)
        .with_context(|| format!("reading spec from {}", a.spec.display()))?;
    let config = YExperimentConfig {
        sizes: a.sizes.clone(),
        replicates: a.replicates,
        seed: a.seed,
        learn: LearnConfig {
            graph_iterations: a.graph_iters,
            label_iterations: a.label_iters,
            ..LearnConfig::default()
        },
        score: match a.score {
            ScoreChoice::Posterior => ScoreKind::Posterior,
            ScoreChoice::Marginal => ScoreKind::MarginalLikelihood,
        },
    };
    let points = run_y_experiment(&spec, &config)?;
    for p in &points {
        log::info!(
            "n = {}: y = {:.6}, recovered {}/{}",
            p.n,
            p.y,
            p.recovered,
            a.replicates
        );
    }
    match open_out(&a.out)? {
        Some(mut file) => {
            write_y_csv(&points, &mut file)?;
            file.flush()?;
        }
        None => write_y_csv(&points, out)?,
    }
    Ok(())
}

/// Initializes logging from `SGM_LOG` (e.g. `info`, `debug`); warnings only
/// by default.
pub fn init_logging() {
    let env = env_logger::Env::new().filter_or("SGM_LOG", "warn");
    let _ = env_logger::Builder::from_env(env)
        .target(env_logger::Target::Stderr)
        .try_init();
}

pub fn main_with_std() -> i32 {
    init_logging();
    let stdout = io::stdout();
    let stderr = io::stderr();
    let mut out = stdout.lock();
    let mut err = stderr.lock();
    let code = run(std::env::args_os(), &mut out, &mut err);
    let _ = out.flush();
    code
}
