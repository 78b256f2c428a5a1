use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::resolve_hypothesis;
use crate::bootstrap::{bootstrap_test_with, BootstrapOptions, DEFAULT_REPLICATES};
use crate::funcdata::SampleSet;
use crate::glht::{run_test, TestOptions};
use crate::parallel::Execution;
use crate::seed::derive_seed;
use crate::simgen::{sim1_generate, sim2_generate, Sim1Config, Sim2Config, Sim2Scenario};
use crate::{Error, Result};

/// Stream offset separating bootstrap resampling from data generation.
const BOOTSTRAP_STREAM: u64 = 0xB007_5712_A9E1_0001;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "design", rename_all = "lowercase")]
pub enum Generator {
    Sim1(Sim1Config),
    Sim2(Sim2Config),
}

impl Generator {
    pub fn k(&self) -> usize {
        match self {
            Self::Sim1(c) => c.sizes.len(),
            Self::Sim2(c) => c.sizes.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Sim1(c) => c.validate(),
            Self::Sim2(c) => c.validate(),
        }
    }

    /// Draws one data set, overriding the configured seed.
    pub fn generate(&self, seed: u64) -> Result<SampleSet> {
        match self {
            Self::Sim1(c) => sim1_generate(&Sim1Config { seed, ..c.clone() }),
            Self::Sim2(c) => sim2_generate(&Sim2Config { seed, ..c.clone() }),
        }
    }

    /// `(distribution, sizes, M, setting)` labels for a table row.
    pub fn row_labels(&self) -> (String, String, usize, String) {
        let sizes = |s: &[usize]| s.iter().map(|n| n.to_string()).collect::<Vec<_>>().join("/");
        match self {
            Self::Sim1(c) => {
                let setting = if c.delta > 0.0 { format!("rho={} delta={}", c.rho, c.delta) } else { format!("rho={}", c.rho) };
                (c.error_dist.label().to_string(), sizes(&c.sizes), c.m, setting)
            }
            Self::Sim2(c) => {
                let setting = match c.scenario {
                    Sim2Scenario::S1 { sigma } => format!("S1 sigma={sigma}"),
                    Sim2Scenario::S2 { a } => format!("S2 a={a}"),
                };
                ("brownian".to_string(), sizes(&c.sizes), c.m, setting)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Adjusted three-cumulant test.
    New,
    /// Same approximation without `c_n`.
    NewUnadjusted,
    Bootstrap,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Self::New => "new",
            Self::NewUnadjusted => "new-unadjusted",
            Self::Bootstrap => "bootstrap",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "new" => Ok(Self::New),
            "new-unadjusted" | "unadjusted" => Ok(Self::NewUnadjusted),
            "bootstrap" => Ok(Self::Bootstrap),
            other => Err(Error::InvalidArgument(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub generator: Generator,
    /// Tag (`G1`..`G5`, `anova`) or matrix text.
    pub hypothesis: String,
    /// All methods are applied to the same simulated data sets.
    pub methods: Vec<Method>,
    pub reps: usize,
    pub alpha: f64,
    pub seed: u64,
    pub bootstrap_b: usize,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for Experiment {
    fn default() -> Self {
        Self {
            generator: Generator::Sim1(Sim1Config::default()),
            hypothesis: "G1".into(),
            methods: vec![Method::New],
            reps: 1000,
            alpha: 0.05,
            seed: 0,
            bootstrap_b: DEFAULT_REPLICATES,
            execution: Execution::default(),
        }
    }
}

impl Experiment {
    pub fn validate(&self) -> Result<()> {
        if self.reps < 1 {
            return Err(Error::InvalidArgument("reps must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidArgument(format!("alpha = {} outside (0, 1)", self.alpha)));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidArgument("no methods requested".into()));
        }
        if self.methods.contains(&Method::Bootstrap) && self.bootstrap_b < 1 {
            return Err(Error::InvalidArgument("the bootstrap needs B >= 1".into()));
        }
        self.generator.validate()
    }
}

/// Outcome of one replication, one entry per method in experiment order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub rep: usize,
    pub seed: u64,
    pub p_values: Vec<f64>,
    pub rejected: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub method: Method,
    pub rejections: usize,
    /// `100 * rejections / reps`
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub reps: usize,
    pub alpha: f64,
    pub cells: Vec<CellResult>,
    #[serde(skip)]
    pub records: Vec<ReplicationRecord>,
}

impl ExperimentResult {
    pub fn percent(&self, method: Method) -> Option<f64> {
        self.cells.iter().find(|c| c.method == method).map(|c| c.percent)
    }
}

pub fn run_experiment(exp: &Experiment) -> Result<ExperimentResult> {
    run_experiment_logged(exp, None)
}

/// Runs the experiment, appending each finished replication to the JSONL
/// log at `log` (first line: the experiment) and skipping replications
/// already recorded there.
pub fn run_experiment_logged(exp: &Experiment, log: Option<&Path>) -> Result<ExperimentResult> {
    exp.validate()?;
    let g = resolve_hypothesis(&exp.hypothesis, exp.generator.k())?;

    let mut done: BTreeMap<usize, ReplicationRecord> = BTreeMap::new();
    let writer = match log {
        Some(path) => {
            let fresh = !path.exists() || std::fs::metadata(path)?.len() == 0;
            if !fresh {
                done = read_log(path, exp)?;
            }
            let mut file = OpenOptions::new().create(true).append(true).open(path)?;
            if fresh {
                writeln!(file, "{}", serde_json::to_string(&LogHeader { experiment: exp.clone() })?)?;
            }
            Some(Mutex::new(file))
        }
        None => None,
    };

    let todo: Vec<usize> = (0..exp.reps).filter(|r| !done.contains_key(r)).collect();
    let fresh = exp.execution.try_map(todo.len(), |j| {
        let rep = todo[j];
        let record = replicate(exp, &g, rep).map_err(|e| Error::Replication { rep, source: Box::new(e) })?;
        if let Some(w) = &writer {
            let line = serde_json::to_string(&record)?;
            let mut file = w.lock().expect("run log writer poisoned");
            writeln!(file, "{line}")?;
            file.flush()?;
        }
        Ok::<_, Error>(record)
    })?;
    for r in fresh {
        done.insert(r.rep, r);
    }

    let records: Vec<ReplicationRecord> = done.into_values().collect();
    let cells = exp
        .methods
        .iter()
        .enumerate()
        .map(|(j, &method)| {
            let rejections = records.iter().filter(|r| r.rejected[j]).count();
            CellResult { method, rejections, percent: 100.0 * rejections as f64 / exp.reps as f64 }
        })
        .collect();
    Ok(ExperimentResult { reps: exp.reps, alpha: exp.alpha, cells, records })
}

fn replicate(exp: &Experiment, g: &nalgebra::DMatrix<f64>, rep: usize) -> Result<ReplicationRecord> {
    let seed = derive_seed(exp.seed, rep as u64);
    let data = exp.generator.generate(seed)?;
    let mut p_values = Vec::with_capacity(exp.methods.len());
    for method in &exp.methods {
        let p = match method {
            Method::New | Method::NewUnadjusted => {
                let opts = TestOptions { adjusted: *method == Method::New, alphas: vec![exp.alpha], ..Default::default() };
                run_test(&data, g, &opts)?.p_value
            }
            Method::Bootstrap => {
                let opts = BootstrapOptions {
                    replicates: exp.bootstrap_b,
                    seed: derive_seed(seed, BOOTSTRAP_STREAM),
                    execution: Execution::Sequential,
                    ..Default::default()
                };
                bootstrap_test_with(&data, g, &opts)?.p_value
            }
        };
        p_values.push(p);
    }
    let rejected = p_values.iter().map(|&p| p < exp.alpha).collect();
    Ok(ReplicationRecord { rep, seed, p_values, rejected })
}

#[derive(Serialize, Deserialize)]
struct LogHeader {
    experiment: Experiment,
}

fn read_log(path: &Path, exp: &Experiment) -> Result<BTreeMap<usize, ReplicationRecord>> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let header: LogHeader = match lines.next() {
        Some(line) => serde_json::from_str(&line?)?,
        None => return Ok(BTreeMap::new()),
    };
    if header.experiment != (Experiment { execution: header.experiment.execution, ..exp.clone() }) {
        return Err(Error::InvalidArgument(format!("run log {} belongs to a different experiment", path.display())));
    }
    let mut out = BTreeMap::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        // a torn final line from an interrupted run is ignored
        match serde_json::from_str::<ReplicationRecord>(&line) {
            Ok(r) if r.rep < exp.reps && r.rejected.len() == exp.methods.len() => {
                out.insert(r.rep, r);
            }
            Ok(_) => {}
            Err(e) => {
                return Err(Error::Parse { line: i as u64 + 2, msg: format!("run log: {e}") });
            }
        }
    }
    Ok(out)
}
