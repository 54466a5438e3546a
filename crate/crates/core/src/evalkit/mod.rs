//! Dataset loading, pixel-level ROC AUC and class gap, and the H₀
//! false-alarm calibration harness.

mod calibrate;
mod dataset;
mod metrics;
mod noise;
mod report;

pub use calibrate::{
    calibrate_h0, calibrate_trials, merge_reports, CalibrationReport, CalibrationRow,
    CALIBRATION_EPSILONS,
};
pub use dataset::{find_categories, load_dataset, Dataset, LabeledSample, LoadIssue};
pub use metrics::{gap, median, roc_auc, ClassScores};
pub use noise::NoiseSpec;
pub use report::{evaluate_category, feature_path, EvalReport, EvalRow};
