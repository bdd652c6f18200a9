//! Experiment configs, seeded runs, metrics and report files.

mod bounds;
mod config;
mod metrics;
pub mod presets;
mod report;
mod run;
mod runlog;

pub use bounds::{run_bound_cell, run_bounds_grid, BoundCell, BoundStatus, BoundsFile, CellReport};
pub use config::{parse_seeds, ExperimentConfig, ExperimentFile};
pub use metrics::{compute_metrics, compute_metrics_window, Aggregate, MetricsSummary, SeedMetrics, LAST_WINDOW};
pub use report::{
    emit_report, load_run_dir, write_curves_csv, write_epochs_csv, write_run_dir, write_steps_csv, write_table_csv,
    CURVES_HEADER, STEPS_HEADER, TABLE_HEADER,
};
pub use run::{run_experiment, run_seed};
pub use runlog::{DivergenceInfo, EpochRecord, RunLog};
