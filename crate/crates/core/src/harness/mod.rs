//! Experiment runner behind the `ivi` command-line tool.

pub mod cases;
pub mod config;
pub mod record;
pub mod run;

pub use cases::{builtin_case, CASE_IDS};
pub use config::{CaseSpec, ExperimentConfig, Quantity};
pub use record::{read_csv, write_csv, Flag, ResultRecord, CSV_HEADER};
pub use run::{reference_value, run_convergence, run_paths, run_smile, RunReport};
