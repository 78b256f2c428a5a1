//! Residual bootstrap for `T_n`: whole residual curves are resampled with
//! replacement within each group and the unadjusted statistic is recomputed
//! (means and `Omega` included) on every replicate.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::estimators::{build_omega, moments_from_values, SingularPolicy};
use crate::glht::{fit, statistic_from};
use crate::funcdata::SampleSet;
use crate::parallel::Execution;
use crate::seed::derived_rng;
use crate::{Error, Result};

/// Number of replicates used when none is given.
pub const DEFAULT_REPLICATES: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapOptions {
    pub replicates: usize,
    pub seed: u64,
    pub execution: Execution,
    pub policy: SingularPolicy,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        Self { replicates: DEFAULT_REPLICATES, seed: 0, execution: Execution::default(), policy: SingularPolicy::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReport {
    #[serde(rename = "T_n_observed")]
    pub t_n_observed: f64,
    #[serde(rename = "B")]
    pub b: usize,
    /// Empty once [`BootstrapReport::without_stats`] has been applied.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub boot_stats: Vec<f64>,
    /// `#{b : T*_b > T_n}`.
    pub exceedances: usize,
    pub p_value: f64,
    pub seed: u64,
}

impl BootstrapReport {
    pub fn without_stats(mut self) -> Self {
        self.boot_stats = Vec::new();
        self
    }

    pub fn reject(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

pub fn bootstrap_test(set: &SampleSet, g: &DMatrix<f64>, replicates: usize, seed: u64) -> Result<BootstrapReport> {
    bootstrap_test_with(set, g, &BootstrapOptions { replicates, seed, ..Default::default() })
}

pub fn bootstrap_test_with(set: &SampleSet, g: &DMatrix<f64>, options: &BootstrapOptions) -> Result<BootstrapReport> {
    let b = options.replicates;
    if b < 1 {
        return Err(Error::InvalidArgument("the bootstrap needs B >= 1".into()));
    }
    let fitted = fit(set, g, options.policy)?;
    let grid = set.grid();
    let t_obs = statistic_from(&fitted.moments, &fitted.omega, &fitted.hyp, grid);
    let (p, m) = (set.p(), grid.len());
    let len = p * m;

    let boot_stats = options.execution.try_map(b, |r| {
        let mut rng = derived_rng(options.seed, r as u64);
        let mut moments = Vec::with_capacity(fitted.moments.len());
        for (group, mo) in set.groups().iter().zip(&fitted.moments) {
            let n = mo.n;
            let mut values = Vec::with_capacity(n * len);
            for _ in 0..n {
                let i = rng.random_range(0..n);
                values.extend_from_slice(&mo.residuals[i * len..(i + 1) * len]);
            }
            moments.push(moments_from_values(group.group_id(), &values, n, p, m)?);
        }
        let omega = build_omega(&moments, &fitted.hyp, grid, options.policy)?;
        Ok::<_, Error>(statistic_from(&moments, &omega, &fitted.hyp, grid))
    })?;

    let exceedances = boot_stats.iter().filter(|&&s| s > t_obs).count();
    Ok(BootstrapReport {
        t_n_observed: t_obs,
        b,
        boot_stats,
        exceedances,
        p_value: exceedances as f64 / b as f64,
        seed: options.seed,
    })
}
