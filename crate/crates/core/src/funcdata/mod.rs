//! Discretized multivariate functional samples on a common equispaced grid.

mod grid;
mod io;
pub(crate) mod reconstruct;
mod sample;
pub mod spline;

pub use grid::Grid;
pub use io::{
    ingest_long_csv, read_long_csv, write_gridded_csv, write_long_csv, ColumnSchema, RawObservation,
};
pub use reconstruct::{reconstruct, reconstruct_with, ReconstructMethod, Reconstruction};
pub use sample::{MfdSample, SampleSet};
