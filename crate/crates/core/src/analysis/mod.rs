//! Experiment orchestration and the comparisons built on top of it.

pub mod bootstrap;
pub mod config;
pub mod experiment;
pub mod heatmap;
pub mod stats;

pub use bootstrap::{bootstrap_ensembles, BootstrapScore, BOOTSTRAP_ENSEMBLE_SIZE};
pub use config::{Aggregate, ReferenceSource, RunConfig};
pub use experiment::{
    ensemble_name, master_data, persist, read_rows, repeat_seed, run_experiment, run_on_data, train_grid, variant_name,
    write_rows, CellResult, MasterData, RunResult, ScoreRow, TelemetryRow, WeightRow,
};
pub use heatmap::{emit_heatmap, heatmap_csv, heatmap_ppm, luminance, HeatmapFiles};
pub use stats::{
    improvement_delta, summarize_runs, wilcoxon_rank_sum, wilcoxon_rank_sum_exact, wilcoxon_rank_sum_normal,
    RankSumMethod, RankSumTest, RunSummary,
};
