//! Thermal faceprint recognition pipeline.
//!
//! The stages mirror the classic fingerprint recipe applied to thermal
//! face images: segment the warm face region from the background, crop it
//! to an ellipse around its centroid, turn the intensity field into a
//! binary vessel ("blood perfusion") ridge map via Sobel gradients, thin
//! the ridges, collect minutiae (ridge terminations and bifurcations),
//! count them over a fixed block grid, and classify the resulting feature
//! vectors with a tanh multilayer perceptron trained by gradient descent
//! with momentum.
//!
//! Modules are usable on their own; [`pipeline`] wires them together, adds
//! dataset ingestion and a synthetic faceprint generator, and produces the
//! evaluation reports exposed by the `faceprint` CLI.

pub mod ellipse;
pub mod minutiae;
pub mod mlp;
pub mod perfusion;
pub mod pipeline;
pub mod pnm;
pub mod raster;
pub mod segmentation;
