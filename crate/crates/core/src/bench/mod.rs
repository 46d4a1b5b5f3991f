//! Benchmark problems, run orchestration, cost accounting and output files.

mod config;
mod export;
mod problem;
mod reference;
mod report;
mod run;

pub use config::{ModelConfig, RunConfig};
pub use export::{export_density, DensityField, DensityFormat};
pub use problem::{builtin_problem, EdgeName, LoadSegment, ProblemSpec, Support, BUILTIN_PROBLEMS};
pub use reference::{compute_reference, load_or_compute_reference, reference_key, reference_path, Reference};
pub use report::{parse_run_csv, report_table, Table};
pub use run::{
    equivalent_cost, history_cutoffs, row_cutoffs, run, Cutoff, CutoffHit, IterationRow, Method, RunReport,
};
