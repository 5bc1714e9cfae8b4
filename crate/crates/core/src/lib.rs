//! Group-aware evaluation of binary classifier posteriors.
//!
//! Posteriors for a "disordered" positive class are scored per demographic
//! group with cost-normalized decision metrics and normalized cross-entropy,
//! recalibrated with cross-validated affine transforms (globally or per
//! group), and given speaker-level bootstrap intervals.

pub mod calibration;
pub mod data_model;
pub mod error;
pub mod histogram;
pub mod metrics;
pub mod resampling;
pub mod synthetic;

pub use calibration::{
    calibration_loss, cv_calibrate, cv_calibrate_with_folds, fit_affine, fit_pav, AffineCalibrator,
    CalibrationFamily, CalibrationScope, Calibrator, CvCalibration, PavCalibrator,
};
pub use data_model::{
    assign_folds, derive_group, empirical_priors, filter_severity, parse_eval_csv, write_eval_csv,
    AgeBand, ClassLabel, EvalSet, FoldAssignment, Gender, GroupKey, Priors, ScoredSample,
};
pub use error::{Error, ErrorKind, Result};
pub use histogram::{histogram_table, HistogramTable, Transform};
pub use metrics::{
    subset_metric, summarize, summarize_with_bootstrap, CostMatrix, MetricName, MetricReport,
    Subset,
};
pub use resampling::{bootstrap_metric, BootstrapEstimate, BootstrapSettings};
pub use synthetic::{generate, metadata_baseline, reference_groups, GroupScenario, SyntheticSpec};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
