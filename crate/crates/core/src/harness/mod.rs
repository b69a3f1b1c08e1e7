//! Experiment orchestration: configuration, multi-trial runs, sweeps and
//! reporting.

mod aggregate;
mod config;
mod report;
mod run;
mod sweep;

pub use aggregate::{mean_stderr, AggregateCurve, AggregatePoint, AGGREGATE_HEADER, FINAL_WINDOW};
pub use config::{ArchSettings, Architecture, ExperimentConfig, HiddenMode, SweepSettings};
pub use report::{distinguishable, find_curves, report, FoundCurve, Report, SummaryRow};
pub use run::{
    plan_jobs, preload_masks, run_experiment, run_experiment_with, run_job, with_pool,
    worker_count, ExperimentOutcome, TrialJob, TrialRunner, WORKERS_VAR,
};
pub use sweep::{
    l1_table, l1_trainer, select_best, select_nearest_target, sweep_l1_beta, sweep_step_sizes,
    L1Measure, L1Row, L1Sweep, StepSizeRow, StepSizeSweep, TARGET_SPARSITY,
};
