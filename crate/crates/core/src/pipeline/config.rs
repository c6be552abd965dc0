//! Pipeline-wide configuration shared by the library entry points and the
//! CLI.

use crate::mlp::TrainConfig;
use crate::perfusion::{GradientNorm, ThresholdMode};
use crate::segmentation::Connectivity;

/// Every knob of the per-image pipeline plus training hyperparameters and
/// the global seed. [`Default`] gives the documented baseline: 8-
/// connectivity, unit ellipse scales, L2 magnitude, mean threshold,
/// thinning on, 8-pixel blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub connectivity: Connectivity,
    pub scale_major: f64,
    pub scale_minor: f64,
    pub norm: GradientNorm,
    pub threshold: ThresholdMode,
    /// Thin ridges before minutiae extraction. Disabling this reproduces
    /// the raw thresholded gradient behavior, where the one-neighbor
    /// termination rule almost never fires.
    pub thinning: bool,
    pub block_size: usize,
    pub train: TrainConfig,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            connectivity: Connectivity::Eight,
            scale_major: 1.0,
            scale_minor: 1.0,
            norm: GradientNorm::L2,
            threshold: ThresholdMode::Mean,
            thinning: true,
            block_size: 8,
            train: TrainConfig::default(),
            seed: 0,
        }
    }
}
