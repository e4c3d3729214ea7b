//! Training, compound-rollout evaluation, embedding analysis and ablation grids.

mod ablate;
mod embed;
pub mod fmt;
mod gradsweep;
mod modes;
mod rollout;
mod train;

pub use ablate::{
    ablation_grid, config_hash, run_one, AblationGrid, AblationRecord, AblationSummary, GridBlock, RunStatus,
};
pub use embed::{cluster_labels, embedding_report, silhouette, Cluster, EmbeddingReport};
pub use gradsweep::{gradient_sweep, Family, SweepReport};
pub use modes::{mover_split, MoverSplit};
pub use rollout::{
    aggregate, compound_rollout, mean_std, oracle_rollout, rollout_with, uniform_rollout, write_csv_aggregate,
    write_csv_header, write_csv_rows, AggregateReport, RolloutReport, CSV_HEADER, DEFAULT_ROLLOUTS,
};
pub use train::{
    fit, sample_transition, train, train_on_episodes, LearningCurve, Trained, Transition, TransitionSource,
    CURVE_BIN,
};
