//! Experiment plumbing: datasets, classifier training, metrics files, charts
//! and the self-check suites.

mod data;
mod metrics;
mod plot;
mod train;
pub mod verify;

pub use data::{load_csv, load_iris, make_synthetic, margin_loss, Dataset, DatasetSpec, IRIS_SHA256};
pub use metrics::{format_sig10, read_metrics_csv, write_metrics_csv, CSV_HEADER};
pub use plot::{render_loss_svg, render_svg, XAxis};
pub use train::{
    classifier_problem, initial_theta, train_classifier, train_on, ExperimentConfig, MetricRow,
    OptimizerKind, TrainOutcome,
};
pub use verify::{run_verify, Fault, SuiteReport};
