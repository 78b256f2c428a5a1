//! Global tests of general linear hypotheses `G M(t) = 0` on the mean
//! functions of `k` independent samples of multivariate functional data.
//!
//! The pipeline is:
//!
//! 1. [`funcdata`]: put curves on a common equispaced [`Grid`] (long-format
//!    ingestion, linear or smoothing-spline reconstruction).
//! 2. [`estimators`]: group means, residuals, the pooled error matrix
//!    `Omega_n(t,t)` and the `Delta` cross-product blocks.
//! 3. [`glht`]: the integrated statistic `T_n`, the three-cumulant matched
//!    chi-square approximation `beta0 + beta1 * chi2_d`, the adjustment
//!    coefficient `c_n` and the resulting p-value.
//! 4. [`bootstrap`]: the residual bootstrap alternative.
//! 5. [`simgen`] and [`harness`]: the Monte Carlo size/power studies.
//!
//! ```no_run
//! use mfglht::{funcdata::Grid, glht::{run_test, TestOptions}, simgen::{sim1_generate, Sim1Config}};
//!
//! let cfg = Sim1Config::default();
//! let data = sim1_generate(&cfg).unwrap();
//! let g = mfglht::harness::Contrast::G1.matrix();
//! let report = run_test(&data, &g, &TestOptions::default()).unwrap();
//! println!("T_n = {}, p = {}", report.t_n, report.p_value);
//! ```

// Negated float comparisons deliberately send NaN to the error branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bootstrap;
pub mod distributions;
pub mod error;
pub mod estimators;
pub mod funcdata;
pub mod glht;
pub mod harness;
#[cfg(any(test, feature = "oracle"))]
pub mod oracle;
pub mod parallel;
pub mod seed;
pub mod simgen;

pub use error::{Error, Result};
pub use funcdata::{Grid, MfdSample, SampleSet};
pub use glht::{Hypothesis, TestOptions, TestReport};
pub use parallel::Execution;
