//! End-to-end orchestration: configuration, dataset handling, the
//! image → feature-vector pipeline, synthetic data generation, and
//! train/evaluate reporting.

mod config;
mod dataset;
mod eval;
mod run;
mod synth;

pub use config::PipelineConfig;
pub use dataset::{
    ingest, load_features_csv, DatasetError, DatasetManifest, FeatureDataset, ManifestEntry, Split,
};
pub use eval::{evaluate, EvalError, EvalReport, SweepEntry};
pub use run::{run_pipeline, run_pipeline_gray, run_stages, PipelineError, StageArtifacts};
pub use synth::{synth_faces, SynthError, SynthSpec};
