//! Binary data matrices, marginal count tables, and synthetic data generators.

use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::ModelDocument;
use crate::nodeset::{NodeSet, MAX_NODES};
use crate::scoring::CountTable;

/// `n` observations of `d` binary variables. Each row is stored as an
/// assignment bitmask: bit `j` is the value of column `j`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BinaryDataMatrix {
    names: Vec<String>,
    rows: Vec<u64>,
}

impl BinaryDataMatrix {
    pub fn new(names: Vec<String>, rows: Vec<u64>) -> Result<Self> {
        if names.len() > MAX_NODES {
            return Err(Error::TooManyVariables {
                max: MAX_NODES,
                got: names.len(),
            });
        }
        let mut seen = HashSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateColumn(name.clone()));
            }
        }
        let mask = NodeSet::full(names.len()).bits();
        if let Some(pos) = rows.iter().position(|r| r & !mask != 0) {
            return Err(Error::Parse {
                row: pos + 1,
                col: names.len() + 1,
                message: "row has bits beyond the last column".into(),
            });
        }
        Ok(BinaryDataMatrix { names, rows })
    }

    /// Columns named `X1..Xd`.
    pub fn with_default_names(d: usize, rows: Vec<u64>) -> Result<Self> {
        Self::new(default_names(d), rows)
    }

    /// Builds a matrix from explicit 0/1 rows.
    pub fn from_rows(names: Vec<String>, rows: &[Vec<u8>]) -> Result<Self> {
        let packed = rows
            .iter()
            .enumerate()
            .map(|(r, row)| {
                if row.len() != names.len() {
                    return Err(Error::Parse {
                        row: r + 1,
                        col: row.len(),
                        message: format!("expected {} cells", names.len()),
                    });
                }
                row.iter()
                    .enumerate()
                    .try_fold(0u64, |acc, (c, &v)| match v {
                        0 => Ok(acc),
                        1 => Ok(acc | (1u64 << c)),
                        _ => Err(Error::NonBinaryValue {
                            row: r + 1,
                            col: c + 1,
                            value: v.to_string(),
                        }),
                    })
            })
            .collect::<Result<Vec<u64>>>()?;
        Self::new(names, packed)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn rows(&self) -> &[u64] {
        &self.rows
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn d(&self) -> usize {
        self.names.len()
    }

    pub fn value(&self, row: usize, col: usize) -> u8 {
        ((self.rows[row] >> col) & 1) as u8
    }

    /// A copy with one extra observation appended.
    pub fn with_row(&self, row: u64) -> Result<Self> {
        let mut rows = self.rows.clone();
        rows.push(row);
        Self::new(self.names.clone(), rows)
    }

    /// The first `n` rows.
    pub fn head(&self, n: usize) -> Self {
        BinaryDataMatrix {
            names: self.names.clone(),
            rows: self.rows[..n.min(self.rows.len())].to_vec(),
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(&self.names).map_err(csv_to_io)?;
        for &row in &self.rows {
            w.write_record((0..self.d()).map(|c| if row >> c & 1 == 1 { "1" } else { "0" }))
                .map_err(csv_to_io)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

pub fn default_names(d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("X{i}")).collect()
}

fn csv_to_io(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

/// Reads a header row of names followed by rows of 0/1 cells.
pub fn read_csv<R: Read>(input: R) -> Result<BinaryDataMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let names: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Parse {
            row: 1,
            col: 0,
            message: e.to_string(),
        })?
        .iter()
        .map(str::to_owned)
        .collect();
    if names.len() > MAX_NODES {
        return Err(Error::TooManyVariables {
            max: MAX_NODES,
            got: names.len(),
        });
    }
    let mut rows = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let line = r + 2;
        let record = record.map_err(|e| Error::Parse {
            row: line,
            col: 0,
            message: e.to_string(),
        })?;
        let mut row = 0u64;
        for (c, cell) in record.iter().enumerate() {
            match cell {
                "0" => {}
                "1" => row |= 1u64 << c,
                other => {
                    return Err(Error::NonBinaryValue {
                        row: line,
                        col: c + 1,
                        value: other.to_owned(),
                    })
                }
            }
        }
        rows.push(row);
    }
    BinaryDataMatrix::new(names, rows)
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<BinaryDataMatrix> {
    read_csv(std::fs::File::open(path)?)
}

/// Marginal counts of the variables in `scope`.
pub fn counts(data: &BinaryDataMatrix, scope: NodeSet) -> Result<CountTable> {
    if let Some(bad) = scope.difference(NodeSet::full(data.d())).first() {
        return Err(Error::UnknownColumn(bad));
    }
    let mut table = vec![0u64; scope.outcome_count()];
    for &row in &data.rows {
        table[scope.gather(row) as usize] += 1;
    }
    CountTable::new(scope, table)
}

/// The seven-variable generator behind the synthetic recovery experiment.
/// Columns are X1..X7; each row is drawn ancestrally in the order
/// X2, X3, X4, X1, X5, X6, X7.
pub fn simulate_seven_variable(n: usize, seed: u64) -> BinaryDataMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |p: f64| -> bool { rng.random::<f64>() < p };
    let rows = (0..n)
        .map(|_| {
            let x2 = draw(0.5);
            let x3 = draw(if x2 { 0.8 } else { 0.3 });
            let x4 = draw(match (x2, x3) {
                (true, true) => 0.6,
                (true, false) => 0.8,
                (false, true) => 0.2,
                (false, false) => 0.4,
            });
            let x1 = draw(match (x2, x3, x4) {
                (false, false, false) => 0.5,
                (false, false, true) => 0.7,
                (false, true, false) => 0.2,
                (false, true, true) => 0.4,
                (true, false, false) => 0.2,
                (true, false, true) => 0.8,
                (true, true, false) => 0.2,
                (true, true, true) => 0.8,
            });
            let x5 = draw(match (x3, x4) {
                (false, _) => 0.8,
                (true, false) => 0.2,
                (true, true) => 0.5,
            });
            let x6 = draw(if x5 { 0.7 } else { 0.3 });
            let x7 = draw(if x5 || !x6 { 0.4 } else { 0.8 });
            [x1, x2, x3, x4, x5, x6, x7]
                .iter()
                .enumerate()
                .fold(0u64, |acc, (i, &b)| acc | ((b as u64) << i))
        })
        .collect();
    BinaryDataMatrix::with_default_names(7, rows).expect("seven binary columns")
}

/// A group of parent outcomes sharing one success probability.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CptGroup {
    /// Parent outcomes, each listing values in the order of `parents`.
    pub when: Vec<Vec<u8>>,
    /// P(variable = 1) for these parent outcomes.
    pub p: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GeneratorVariable {
    pub name: String,
    #[serde(default)]
    pub parents: Vec<String>,
    pub groups: Vec<CptGroup>,
}

/// Ancestral sampler description. Variables are listed in column order;
/// sampling order is derived from the parent relation. The optional `model`
/// names the stratified graph the tables are faithful to.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub variables: Vec<GeneratorVariable>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelDocument>,
}

struct CompiledVariable {
    parents: Vec<usize>,
    /// P(1) indexed by parent outcome (bit i = value of the i-th parent).
    table: Vec<f64>,
}

impl GeneratorSpec {
    pub fn names(&self) -> Vec<String> {
        self.variables.iter().map(|v| v.name.clone()).collect()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    fn compile(&self) -> Result<(Vec<usize>, Vec<CompiledVariable>)> {
        let d = self.variables.len();
        if d > MAX_NODES {
            return Err(Error::TooManyVariables {
                max: MAX_NODES,
                got: d,
            });
        }
        let index: BTreeMap<&str, usize> = self
            .variables
            .iter()
            .enumerate()
            .map(|(i, v)| (v.name.as_str(), i))
            .collect();
        if index.len() != d {
            return Err(Error::InvalidSpec("duplicate variable name".into()));
        }
        let mut compiled = Vec::with_capacity(d);
        for v in &self.variables {
            let parents = v
                .parents
                .iter()
                .map(|p| {
                    index.get(p.as_str()).copied().ok_or_else(|| {
                        Error::InvalidSpec(format!("{}: unknown parent {p}", v.name))
                    })
                })
                .collect::<Result<Vec<usize>>>()?;
            let k = parents.len();
            if k > 20 {
                return Err(Error::InvalidSpec(format!("{}: too many parents", v.name)));
            }
            let mut table = vec![f64::NAN; 1 << k];
            for g in &v.groups {
                if !(0.0..=1.0).contains(&g.p) {
                    return Err(Error::InvalidSpec(format!(
                        "{}: probability {} out of [0,1]",
                        v.name, g.p
                    )));
                }
                for outcome in &g.when {
                    if outcome.len() != k || outcome.iter().any(|&x| x > 1) {
                        return Err(Error::InvalidSpec(format!(
                            "{}: parent outcome {outcome:?} does not match {k} binary parents",
                            v.name
                        )));
                    }
                    let idx = outcome
                        .iter()
                        .enumerate()
                        .fold(0usize, |a, (i, &x)| a | ((x as usize) << i));
                    if !table[idx].is_nan() {
                        return Err(Error::InvalidSpec(format!(
                            "{}: parent outcome {outcome:?} appears in two groups",
                            v.name
                        )));
                    }
                    table[idx] = g.p;
                }
            }
            if table.iter().any(|p| p.is_nan()) {
                return Err(Error::InvalidSpec(format!(
                    "{}: groups do not cover every parent outcome",
                    v.name
                )));
            }
            compiled.push(CompiledVariable { parents, table });
        }
        // Kahn's algorithm, smallest ready index first.
        let mut indegree: Vec<usize> = compiled.iter().map(|c| c.parents.len()).collect();
        let mut order = Vec::with_capacity(d);
        let mut done = vec![false; d];
        while order.len() < d {
            let next = (0..d)
                .find(|&i| !done[i] && indegree[i] == 0)
                .ok_or_else(|| Error::InvalidSpec("parent relation has a cycle".into()))?;
            done[next] = true;
            order.push(next);
            for (i, c) in compiled.iter().enumerate() {
                if !done[i] {
                    indegree[i] -= c.parents.iter().filter(|&&p| p == next).count();
                }
            }
        }
        Ok((order, compiled))
    }

    pub fn validate(&self) -> Result<()> {
        self.compile().map(|_| ())
    }
}

/// Ancestral sampling from a generator spec.
pub fn simulate_sgm(spec: &GeneratorSpec, n: usize, seed: u64) -> Result<BinaryDataMatrix> {
    let (order, vars) = spec.compile()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..n)
        .map(|_| {
            let mut row = 0u64;
            for &v in &order {
                let cv = &vars[v];
                let idx = cv
                    .parents
                    .iter()
                    .enumerate()
                    .fold(0usize, |a, (i, &p)| a | ((((row >> p) & 1) as usize) << i));
                if rng.random::<f64>() < cv.table[idx] {
                    row |= 1u64 << v;
                }
            }
            row
        })
        .collect();
    BinaryDataMatrix::new(spec.names(), rows)
}

/// `exp(mean(gen)/n) - exp(mean(opt)/n)`: the gap in per-observation
/// geometric-mean probability between the generating and learned models.
pub fn y_statistic(gen: &[f64], opt: &[f64], n: usize) -> Result<f64> {
    if gen.len() != opt.len() {
        return Err(Error::LengthMismatch(gen.len(), opt.len()));
    }
    if gen.is_empty() || n == 0 {
        return Err(Error::LengthMismatch(gen.len(), n));
    }
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let n = n as f64;
    Ok((mean(gen) / n).exp() - (mean(opt) / n).exp())
}
