//! Command-line flags and the optional TOML config file.
//!
//! Every value flag is optional on the command line so that it can come from
//! `--config` instead; a flag given explicitly wins over the file.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

#[derive(Debug, Parser)]
#[command(name = "mfglht", version, about = "General linear hypothesis tests for multivariate functional data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the adjusted three-cumulant test on a long-format CSV.
    Test(DataArgs),
    /// Run the residual bootstrap test on a long-format CSV.
    Bootstrap(DataArgs),
    /// Monte Carlo size/power study on a simulation design.
    Simulate(SimArgs),
    /// Local-alternative asymptotic power under the Sim1 population model.
    Power(SimArgs),
    /// Put long-format observations on a grid and write them back out.
    Reconstruct(DataArgs),
}

#[derive(Debug, Args, Default)]
pub struct DataArgs {
    /// Long-format CSV with columns group,subject,component,time,value.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Evaluation grid `a,b,M`; defaults to the observed time range with one
    /// point per distinct observation time.
    #[arg(long)]
    pub grid: Option<String>,
    /// Coefficient matrix, rows separated by `;`, entries by `,`.
    #[arg(long, allow_hyphen_values = true)]
    pub contrast: Option<String>,
    /// Named hypothesis: G1..G5 or anova.
    #[arg(long)]
    pub hypothesis: Option<String>,
    /// Significance level(s), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub alpha: Vec<f64>,
    /// Bootstrap replicates.
    #[arg(long = "B")]
    pub b: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Report the test without the adjustment coefficient.
    #[arg(long)]
    pub no_adjust: bool,
    /// Reconstruction method: linear or spline.
    #[arg(long)]
    pub smoother: Option<String>,
    /// Keep the bootstrap statistics in the report.
    #[arg(long)]
    pub keep_stats: bool,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// TOML file with the same keys as the long flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct SimArgs {
    /// sim1 or sim2.
    #[arg(long)]
    pub design: Option<String>,
    /// Named hypothesis (G1..G5, anova) or matrix text.
    #[arg(long, allow_hyphen_values = true)]
    pub hypothesis: Option<String>,
    /// Alias of --hypothesis for matrix text.
    #[arg(long, allow_hyphen_values = true)]
    pub contrast: Option<String>,
    /// Methods, comma separated: new, new-unadjusted, bootstrap.
    #[arg(long, value_delimiter = ',')]
    pub method: Vec<String>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub alpha: Vec<f64>,
    #[arg(long = "B")]
    pub b: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// n1, n2, n3 or explicit comma-separated group sizes.
    #[arg(long)]
    pub sizes: Option<String>,
    /// Grid size M.
    #[arg(long = "M")]
    pub m: Option<usize>,
    /// Sim1 correlation parameter(s); one table row each.
    #[arg(long, value_delimiter = ',')]
    pub rho: Vec<f64>,
    /// Sim1 alternative size(s); one table row each.
    #[arg(long, value_delimiter = ',')]
    pub delta: Vec<f64>,
    /// Sim1 error distribution: gaussian, t4, chisq4.
    #[arg(long)]
    pub dist: Option<String>,
    /// Sim2 S1 noise level(s).
    #[arg(long, value_delimiter = ',')]
    pub sigma: Vec<f64>,
    /// Sim2 S2 observed fraction(s).
    #[arg(long = "a", value_delimiter = ',')]
    pub frac: Vec<f64>,
    /// Test Sim2 S1 curves without smoothing them first.
    #[arg(long)]
    pub no_smooth: bool,
    /// Power mode: normal or finite-d.
    #[arg(long)]
    pub mode: Option<String>,
    /// Table format: csv or text.
    #[arg(long)]
    pub format: Option<String>,
    /// JSONL run log for resumable experiments (single-row runs only).
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Keys accepted in a `--config` file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ConfigFile {
    pub data: Option<PathBuf>,
    pub grid: Option<String>,
    pub contrast: Option<String>,
    pub hypothesis: Option<String>,
    pub alpha: Option<OneOrMany<f64>>,
    #[serde(rename = "B")]
    pub b: Option<usize>,
    pub seed: Option<u64>,
    pub no_adjust: Option<bool>,
    pub smoother: Option<String>,
    pub keep_stats: Option<bool>,
    pub out: Option<PathBuf>,
    pub design: Option<String>,
    pub method: Option<OneOrMany<String>>,
    pub reps: Option<usize>,
    pub sizes: Option<String>,
    #[serde(rename = "M")]
    pub m: Option<usize>,
    pub rho: Option<OneOrMany<f64>>,
    pub delta: Option<OneOrMany<f64>>,
    pub dist: Option<String>,
    pub sigma: Option<OneOrMany<f64>>,
    pub a: Option<OneOrMany<f64>>,
    pub no_smooth: Option<bool>,
    pub mode: Option<String>,
    pub format: Option<String>,
    pub log: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            Self::One(v) => vec![v],
            Self::Many(v) => v,
        }
    }
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("config {}: {e}", path.display()))
    }
}

fn merge_vec<T>(flag: &mut Vec<T>, file: Option<OneOrMany<T>>) {
    if flag.is_empty() {
        if let Some(v) = file {
            *flag = v.into_vec();
        }
    }
}

impl DataArgs {
    pub fn merge(mut self) -> Result<Self, String> {
        let Some(path) = self.config.clone() else { return Ok(self) };
        let c = ConfigFile::load(&path)?;
        self.data = self.data.or(c.data);
        self.grid = self.grid.or(c.grid);
        self.contrast = self.contrast.or(c.contrast);
        self.hypothesis = self.hypothesis.or(c.hypothesis);
        merge_vec(&mut self.alpha, c.alpha);
        self.b = self.b.or(c.b);
        self.seed = self.seed.or(c.seed);
        self.no_adjust |= c.no_adjust.unwrap_or(false);
        self.smoother = self.smoother.or(c.smoother);
        self.keep_stats |= c.keep_stats.unwrap_or(false);
        self.out = self.out.or(c.out);
        Ok(self)
    }
}

impl SimArgs {
    pub fn merge(mut self) -> Result<Self, String> {
        let Some(path) = self.config.clone() else { return Ok(self) };
        let c = ConfigFile::load(&path)?;
        self.design = self.design.or(c.design);
        self.hypothesis = self.hypothesis.or(c.hypothesis);
        self.contrast = self.contrast.or(c.contrast);
        merge_vec(&mut self.method, c.method);
        self.reps = self.reps.or(c.reps);
        merge_vec(&mut self.alpha, c.alpha);
        self.b = self.b.or(c.b);
        self.seed = self.seed.or(c.seed);
        self.sizes = self.sizes.or(c.sizes);
        self.m = self.m.or(c.m);
        merge_vec(&mut self.rho, c.rho);
        merge_vec(&mut self.delta, c.delta);
        self.dist = self.dist.or(c.dist);
        merge_vec(&mut self.sigma, c.sigma);
        merge_vec(&mut self.frac, c.a);
        self.no_smooth |= c.no_smooth.unwrap_or(false);
        self.mode = self.mode.or(c.mode);
        self.format = self.format.or(c.format);
        self.log = self.log.or(c.log);
        self.out = self.out.or(c.out);
        Ok(self)
    }
}
