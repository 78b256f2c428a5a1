//! General linear hypothesis `G M(t) = 0`: the global statistic, the
//! three-cumulant matched chi-squared approximation with its adjustment
//! coefficient, and the asymptotic power under local alternatives.

mod hypothesis;
mod power;
mod test;

pub use hypothesis::{make_hypothesis, Hypothesis};
pub use power::{asymptotic_power, AsymptoticPowerInput, PowerMode};
pub use test::{
    adjustment_coefficient, chisq_params, cumulant_estimates, fit, run_test, statistic, statistic_from, ChiSqParams,
    Fitted, GridInfo, TestDiagnostics, TestOptions, TestReport,
};
