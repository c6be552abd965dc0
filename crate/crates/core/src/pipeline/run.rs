//! The composed per-image pipeline.

use thiserror::Error;

use crate::ellipse::{crop_ellipse, estimate_axes, EllipseError, EllipseSpec};
use crate::minutiae::{block_features, extract_minutiae, FeatureVector, Minutia, MinutiaeError};
use crate::perfusion::{binarize_gradient_with, sobel, thin, GradientField, PerfusionError};
use crate::raster::{binarize_mean, to_grayscale, BinaryImage, ColorImage, GrayImage};
use crate::segmentation::{centroid, label_components, largest_component};

use super::PipelineConfig;

/// A stage failure, labeled with the stage that raised it.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("segmentation stage: binarized image has no foreground component")]
    EmptyMask,
    #[error("ellipse stage: {0}")]
    Ellipse(#[from] EllipseError),
    #[error("gradient stage: {0}")]
    Perfusion(#[from] PerfusionError),
    #[error("feature stage: {0}")]
    Minutiae(#[from] MinutiaeError),
}

impl PipelineError {
    /// The pipeline stage this error belongs to.
    pub fn stage(&self) -> &'static str {
        match self {
            PipelineError::EmptyMask => "segmentation",
            PipelineError::Ellipse(_) => "ellipse",
            PipelineError::Perfusion(_) => "gradient",
            PipelineError::Minutiae(_) => "feature",
        }
    }
}

/// Everything the pipeline computes for one image, kept around for debug
/// exports and reporting.
#[derive(Debug, Clone)]
pub struct StageArtifacts {
    pub gray: GrayImage,
    pub face_mask: BinaryImage,
    pub centroid: (f64, f64),
    pub ellipse: EllipseSpec,
    pub cropped: GrayImage,
    pub gradient: GradientField,
    pub ridges: BinaryImage,
    pub thinned: BinaryImage,
    pub minutiae: Vec<Minutia>,
    pub features: FeatureVector,
}

/// Runs every stage on an already-grayscale image and keeps the
/// intermediate artifacts.
pub fn run_stages(gray: &GrayImage, cfg: &PipelineConfig) -> Result<StageArtifacts, PipelineError> {
    let binary = binarize_mean(gray);
    let labels = label_components(&binary, cfg.connectivity);
    let face_mask = largest_component(&labels).ok_or(PipelineError::EmptyMask)?;
    let c = centroid(&face_mask).expect("largest component is never empty");
    let ellipse = estimate_axes(&face_mask, c, cfg.scale_major, cfg.scale_minor)?;
    let cropped = crop_ellipse(gray, &ellipse);
    let gradient = sobel(&cropped, cfg.norm)?;
    let ridges = binarize_gradient_with(&gradient, cfg.threshold)?;
    let thinned = if cfg.thinning {
        thin(&ridges)
    } else {
        ridges.clone()
    };
    let minutiae = extract_minutiae(&thinned);
    let features = block_features(&minutiae, gray.width(), gray.height(), cfg.block_size)?;
    Ok(StageArtifacts {
        gray: gray.clone(),
        face_mask,
        centroid: c,
        ellipse,
        cropped,
        gradient,
        ridges,
        thinned,
        minutiae,
        features,
    })
}

/// Grayscale image to block-count feature vector.
pub fn run_pipeline_gray(
    gray: &GrayImage,
    cfg: &PipelineConfig,
) -> Result<FeatureVector, PipelineError> {
    Ok(run_stages(gray, cfg)?.features)
}

/// Color image to block-count feature vector.
pub fn run_pipeline(img: &ColorImage, cfg: &PipelineConfig) -> Result<FeatureVector, PipelineError> {
    run_pipeline_gray(&to_grayscale(img), cfg)
}
