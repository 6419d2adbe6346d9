//! Evaluation harness: datasets, corruption protocols and metrics.

pub mod corrupt;
pub mod data;
pub mod ingest;
pub mod metrics;
pub mod roc;

pub use corrupt::{corrupt_mislabel, corrupt_noise};
pub use data::{gen_gaussian_toy, gen_process_data, gen_two_class, robust_scale, ProcessSpec, GaussianMixture, LabeledDataset, RobustScaler, Standardizer};
pub use ingest::{load_csv, CsvSchema};
pub use metrics::{
    average_rank, detection_rates, mean_sem, principal_angles, reconstruction_error, spe,
    spe_scores, DetectionCounts, DetectionRates,
};
pub use roc::{roc_prc, RocCurves, ThresholdGrid};
