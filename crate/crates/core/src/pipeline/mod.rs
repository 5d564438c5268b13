//! Orchestration: configuration, preprocessing, splitting, baselines,
//! metrics and experiment runs.

pub mod config;
pub mod experiment;
pub mod io;
pub mod knn;
pub mod metrics;
pub mod preprocess;
pub mod split;

pub use config::PipelineConfig;
pub use experiment::{
    compare_pcs, evaluate_checkpoint, loss_curve_csv, predict, prepare_examples, render_comparison, run_experiment,
    run_on_dataset, split_examples, synthesize, train_baseline, train_wcnn, ExampleSplit, ExperimentOutcome,
    PcComparisonRow,
};
pub use io::{read_dataset_dir, write_dataset_dir, FileFormat};
pub use knn::{knn_classify, knn_vote};
pub use metrics::{evaluate, ClassMetrics, MetricsReport};
pub use preprocess::{preprocess, preprocess_all, FeatureExample, PreprocessConfig};
pub use split::{stratified_split, Split};
