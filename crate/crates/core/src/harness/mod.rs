//! Monte Carlo experiments (empirical size and power), result tables with
//! the average relative error summary, and contrast matrices.

mod contrast;
mod experiment;
mod table;

pub use contrast::{anova_contrast, parse_matrix, resolve_hypothesis, Contrast};
pub use experiment::{
    run_experiment, run_experiment_logged, CellResult, Experiment, ExperimentResult, Generator, Method, ReplicationRecord,
};
pub use table::{are_of, ResultTable, TableRow};
