//! Dataset generation, training, evaluation and the experiment suites.

pub mod dataset;
pub mod eval;
pub mod experiments;
pub mod manifest;
pub mod train;

pub use dataset::{build_dataset, feature_from_covariance, feature_from_snapshots, Dataset, DatasetSpec, Role, Sample};
pub use eval::{evaluate, predict, Condition, EvalReport};
pub use experiments::{run_trials, Methods, MonteCarlo, MusicSettings, TrialCondition};
pub use manifest::{ManifestBuilder, RunManifest};
pub use train::{train_model, write_history_csv, EpochRecord, ModelKind, TrainOutcome};
