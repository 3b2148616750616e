//! Post-processing of detector output and the evaluation metrics used to
//! score wind-farm detection: IoU, score filtering with NMS, cascading
//! merge, greedy matching, precision/recall/F1, all-point interpolated AP,
//! turbine-level recall, chipping and anchor scale factors.

pub mod anchors;
pub mod chips;
pub mod fixture;
pub mod geometry;
pub mod metrics;
pub mod post;
pub mod report;

use thiserror::Error;

pub use anchors::{anchor_scales, ontology_target_sizes, AnchorConfig};
pub use chips::{chip_plan, ChipWindow, DEFAULT_CHIP, DEFAULT_OVERLAP};
pub use geometry::{bbox, iou, region_area, Detection, Region, TARGET_LABEL};
pub use metrics::{average_precision, match_and_count, pr_curve, precision_recall_f1, turbine_recall, MatchResult, PrPoint, Prf, TurbineRecall};
pub use post::{cascade_merge, score_filter_nms, MergedDetection, NmsConfig, DEFAULT_MERGE_IOU};
pub use report::{evaluate, evaluate_files, EvalConfig, GroundTruth, MetricsReport, MetricsRow, Predictions, DEFAULT_MATCH_IOU};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid detection {index}: {message}")]
    InvalidDetection { index: usize, message: String },
    #[error("average precision is undefined without ground truth")]
    NoGroundTruth,
    #[error("invalid anchor configuration: {0}")]
    InvalidAnchorConfig(String),
    #[error("frame mismatch: predictions use {predictions:?}, ground truth uses {ground_truth:?}")]
    FrameMismatch { predictions: String, ground_truth: String },
    #[error("{0} has no frame tag")]
    MissingFrame(&'static str),
    #[error("malformed GeoJSON: {0}")]
    GeoJson(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
