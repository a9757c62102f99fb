//! Batch driver: experiment files, trajectory output, and the parameter-count table.

mod config;
mod run;
mod table1;

pub use config::{parse_config, parse_config_str, ExperimentConfig, Mode, RkInit};
pub use run::{
    build_liouvillian, initial_state, rk_initial_state, run_experiment, scheme_for, write_density_csv, RunSummary,
    TRAJECTORY_HEADER,
};
pub use table1::{render_table1_csv, table1_report, Table1Row};
