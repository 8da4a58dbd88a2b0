//! Configuration, parallel ensembles and result files.

mod config;
mod output;
mod runner;
mod studies;

pub use config::{
    CompensationConfig, DriveConfig, EnvelopeConfig, HistogramConfig, InitialState, OutputConfig, ParamsConfig,
    Resolved, SimulationConfig, SimulationSection, SweepConfig, MAX_DT_KAPPA,
};
pub use output::{
    write_coherence_csv, write_compensation_csv, write_conditional_csv, write_histogram_csv, write_json, write_summary,
    write_sweep_cells_csv, write_sweep_csv, write_trajectory_csv,
};
pub use runner::{
    matrix_entries, resolve_workers, run_config, run_ensemble, run_plan, worker_ranges, EnsembleRun, EnsembleSummary,
    RunManifest, TrajectoryResult, WorkerRange, SCHEMA_VERSION,
};
pub use studies::{
    configured_sweep, max_concurrence_sweep, voltage_histograms, ConcurrenceGrid, HistogramSet, SweepCell,
};
