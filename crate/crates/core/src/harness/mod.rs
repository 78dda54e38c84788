//! Data plumbing, training loop, evaluation and attention export.

mod data;
mod export;
mod metrics;
mod suite;
pub mod synthetic;
mod train;

pub use data::{all_windows, load_csv, make_windows, zscore, Dataset, NormStats, Split, SplitWindows};
pub use export::{export_attention, matrix_from_csv, matrix_to_csv};
pub use suite::{grad_check_suite, GradCheckCase};
pub use metrics::{edge_recovery_auc, evaluate, mean_influence, ranking_auc, EvalReport, Metrics};
pub use train::{
    mean_loss, prepare, prepare_with, train, train_prepared, AttentionObserver, EpochRecord, History, Prepared, Trained,
};
