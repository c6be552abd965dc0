//! Train/test evaluation over a dataset manifest, with a block-size sweep
//! and text/CSV report rendering.

use std::path::PathBuf;
use std::time::Instant;

use thiserror::Error;

use super::config::PipelineConfig;
use super::dataset::{DatasetManifest, Split};
use super::run::run_stages;
use crate::minutiae::{block_features, Minutia, MinutiaeError};
use crate::mlp::{default_dims, train, LabeledSample, MlpError, MlpModel};
use crate::pnm::read_gray_auto;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("manifest has {0} subjects, need at least 2")]
    TooFewSubjects(usize),
    #[error("manifest has no entries")]
    NoEntries,
    #[error("every image failed the feature pipeline")]
    AllImagesFailed,
    #[error("{split} split is empty after skipping failed images")]
    EmptySplit { split: Split },
    #[error("training diverged at block size {block_size}, epoch {epoch}")]
    TrainingDiverged { block_size: usize, epoch: usize },
    #[error(transparent)]
    Feature(#[from] MinutiaeError),
    #[error(transparent)]
    Mlp(#[from] MlpError),
}

/// Results for one block size in the sweep.
#[derive(Debug, Clone)]
pub struct SweepEntry {
    pub block_size: usize,
    /// Test accuracy in percent: `100 * trace(confusion) / total`.
    pub rate: f64,
    /// Row-major `n x n` counts; rows are true subjects, columns predicted.
    pub confusion: Vec<u32>,
    /// Per-subject accuracy in percent; NaN when a subject has no test images.
    pub per_class: Vec<f64>,
    pub train_count: usize,
    pub test_count: usize,
    pub model: MlpModel,
}

/// Full evaluation outcome: one [`SweepEntry`] per requested block size,
/// plus the images that failed the pipeline and were left out.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub subjects: Vec<String>,
    pub entries: Vec<SweepEntry>,
    pub skipped: Vec<(PathBuf, String)>,
    pub runtime_secs: f64,
}

impl EvalReport {
    /// Aligned text table. Pass `include_runtime = false` when the output
    /// must be reproducible byte-for-byte across runs.
    pub fn render_text(&self, include_runtime: bool) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        let (train, test) = self
            .entries
            .first()
            .map(|e| (e.train_count, e.test_count))
            .unwrap_or((0, 0));
        writeln!(
            out,
            "dataset: {} subjects, {} train / {} test, {} skipped",
            self.subjects.len(),
            train,
            test,
            self.skipped.len()
        )
        .unwrap();
        writeln!(out).unwrap();
        writeln!(out, "{:>5}  {:>6}  {:>5}  {:>4}", "block", "rate%", "train", "test").unwrap();
        for e in &self.entries {
            writeln!(
                out,
                "{:>5}  {:>6.2}  {:>5}  {:>4}",
                e.block_size, e.rate, e.train_count, e.test_count
            )
            .unwrap();
        }

        let n = self.subjects.len();
        let name_w = self
            .subjects
            .iter()
            .map(|s| s.len())
            .max()
            .unwrap_or(0)
            .max("subject".len());
        for e in &self.entries {
            writeln!(out).unwrap();
            writeln!(
                out,
                "block {} confusion (rows = true subject, columns = predicted):",
                e.block_size
            )
            .unwrap();
            write!(out, "{:<name_w$}", "subject").unwrap();
            for j in 0..n {
                write!(out, "  {:>4}", format!("s{j:02}")).unwrap();
            }
            writeln!(out, "  {:>6}", "acc%").unwrap();
            for i in 0..n {
                write!(out, "{:<name_w$}", self.subjects[i]).unwrap();
                for j in 0..n {
                    write!(out, "  {:>4}", e.confusion[i * n + j]).unwrap();
                }
                if e.per_class[i].is_nan() {
                    writeln!(out, "  {:>6}", "n/a").unwrap();
                } else {
                    writeln!(out, "  {:>6.1}", e.per_class[i]).unwrap();
                }
            }
        }

        if !self.skipped.is_empty() {
            writeln!(out).unwrap();
            writeln!(out, "skipped images:").unwrap();
            for (path, reason) in &self.skipped {
                writeln!(out, "  {}: {}", path.display(), reason).unwrap();
            }
        }
        if include_runtime {
            writeln!(out).unwrap();
            writeln!(out, "runtime: {:.2} s", self.runtime_secs).unwrap();
        }
        out
    }

    /// One row per block size: `block_size,rate_percent,train_count,test_count`.
    pub fn render_csv(&self) -> String {
        let mut out = String::from("block_size,rate_percent,train_count,test_count\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{:.4},{},{}\n",
                e.block_size, e.rate, e.train_count, e.test_count
            ));
        }
        out
    }
}

/// Runs the feature pipeline over every manifest image, trains one
/// classifier per block size on the train split, and scores the test
/// split. `block_sizes` may be empty, which means "just `cfg.block_size`".
///
/// Images that fail a pipeline stage are skipped and listed in the report
/// rather than aborting the run. Stage work is shared across the sweep:
/// minutiae are extracted once per image and re-binned per block size.
pub fn evaluate(
    manifest: &DatasetManifest,
    cfg: &PipelineConfig,
    block_sizes: &[usize],
) -> Result<EvalReport, EvalError> {
    let started = Instant::now();
    if manifest.subjects.len() < 2 {
        return Err(EvalError::TooFewSubjects(manifest.subjects.len()));
    }
    if manifest.entries.is_empty() {
        return Err(EvalError::NoEntries);
    }

    let mut survivors: Vec<(usize, Vec<Minutia>)> = Vec::new();
    let mut skipped: Vec<(PathBuf, String)> = Vec::new();
    for (idx, entry) in manifest.entries.iter().enumerate() {
        let gray = match read_gray_auto(&entry.path) {
            Ok(g) => g,
            Err(e) => {
                skipped.push((entry.path.clone(), e.to_string()));
                continue;
            }
        };
        match run_stages(&gray, cfg) {
            Ok(stages) => survivors.push((idx, stages.minutiae)),
            Err(e) => skipped.push((entry.path.clone(), e.to_string())),
        }
    }
    if survivors.is_empty() {
        return Err(EvalError::AllImagesFailed);
    }
    for split in [Split::Train, Split::Test] {
        if !survivors
            .iter()
            .any(|(i, _)| manifest.entries[*i].split == split)
        {
            return Err(EvalError::EmptySplit { split });
        }
    }

    let sweep: Vec<usize> = if block_sizes.is_empty() {
        vec![cfg.block_size]
    } else {
        block_sizes.to_vec()
    };
    let n_classes = manifest.subjects.len();
    let mut entries = Vec::new();
    for &bs in &sweep {
        let mut train_set = Vec::new();
        let mut test_set = Vec::new();
        for (idx, minutiae) in &survivors {
            let entry = &manifest.entries[*idx];
            let fv = block_features(minutiae, manifest.width, manifest.height, bs)?;
            let sample = LabeledSample {
                features: fv.to_f64(),
                label: entry.label,
            };
            match entry.split {
                Split::Train => train_set.push(sample),
                Split::Test => test_set.push(sample),
            }
        }

        let dims = default_dims(train_set[0].features.len(), n_classes);
        let init = MlpModel::new(&dims, cfg.seed)?;
        let model = train(&init, &train_set, &cfg.train).map_err(|e| match e {
            MlpError::NonFinite { epoch } => EvalError::TrainingDiverged {
                block_size: bs,
                epoch,
            },
            other => EvalError::Mlp(other),
        })?;

        let mut confusion = vec![0u32; n_classes * n_classes];
        for sample in &test_set {
            let pred = model.predict(&sample.features)?;
            confusion[sample.label * n_classes + pred] += 1;
        }
        let total: u32 = confusion.iter().sum();
        let trace: u32 = (0..n_classes).map(|i| confusion[i * n_classes + i]).sum();
        let rate = 100.0 * f64::from(trace) / f64::from(total);
        let per_class = (0..n_classes)
            .map(|i| {
                let row: u32 = confusion[i * n_classes..(i + 1) * n_classes].iter().sum();
                if row == 0 {
                    f64::NAN
                } else {
                    100.0 * f64::from(confusion[i * n_classes + i]) / f64::from(row)
                }
            })
            .collect();
        entries.push(SweepEntry {
            block_size: bs,
            rate,
            confusion,
            per_class,
            train_count: train_set.len(),
            test_count: test_set.len(),
            model,
        });
    }

    Ok(EvalReport {
        subjects: manifest.subjects.clone(),
        entries,
        skipped,
        runtime_secs: started.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{ingest, synth_faces, DatasetManifest, SynthSpec};
    use crate::pnm::write_pgm;
    use crate::raster::GrayImage;
    use std::path::Path;

    fn synth_manifest(
        root: &Path,
        subjects: usize,
        per_subject: usize,
        noise: u8,
        seed: u64,
    ) -> DatasetManifest {
        let mut spec = SynthSpec::new(subjects, per_subject, 64, 64, seed);
        spec.noise = noise;
        synth_faces(root, &spec).unwrap();
        ingest(root, 0.5, seed).unwrap()
    }

    #[test]
    fn train_equals_test_is_nearly_perfect_on_separable_data() {
        let dir = tempfile::tempdir().unwrap();
        let mut manifest = synth_manifest(dir.path(), 3, 6, 2, 40);
        // duplicate every image into both splits: memorization sanity bound
        let mut entries = Vec::new();
        for e in &manifest.entries {
            let mut train = e.clone();
            train.split = Split::Train;
            let mut test = e.clone();
            test.split = Split::Test;
            entries.push(train);
            entries.push(test);
        }
        manifest.entries = entries;

        let cfg = PipelineConfig::default();
        let report = evaluate(&manifest, &cfg, &[]).unwrap();
        assert_eq!(report.entries.len(), 1);
        let entry = &report.entries[0];
        assert_eq!(entry.train_count, 18);
        assert_eq!(entry.test_count, 18);
        assert!(entry.rate >= 95.0, "rate {}", entry.rate);
    }

    #[test]
    fn rejects_degenerate_manifests() {
        let single = DatasetManifest {
            root: PathBuf::new(),
            subjects: vec!["only".into()],
            entries: Vec::new(),
            width: 8,
            height: 8,
        };
        assert!(matches!(
            evaluate(&single, &PipelineConfig::default(), &[]),
            Err(EvalError::TooFewSubjects(1))
        ));

        let empty = DatasetManifest {
            root: PathBuf::new(),
            subjects: vec!["a".into(), "b".into()],
            entries: Vec::new(),
            width: 8,
            height: 8,
        };
        assert!(matches!(
            evaluate(&empty, &PipelineConfig::default(), &[]),
            Err(EvalError::NoEntries)
        ));
    }

    #[test]
    fn empty_test_split_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let mut manifest = synth_manifest(dir.path(), 2, 2, 0, 5);
        for e in &mut manifest.entries {
            e.split = Split::Train;
        }
        assert!(matches!(
            evaluate(&manifest, &PipelineConfig::default(), &[]),
            Err(EvalError::EmptySplit { split: Split::Test })
        ));
    }

    #[test]
    fn all_failed_images_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = synth_manifest(dir.path(), 2, 2, 0, 6);
        // replace every image with a constant frame: segmentation finds nothing
        for e in &manifest.entries {
            write_pgm(&e.path, &GrayImage::filled(64, 64, 7)).unwrap();
        }
        assert!(matches!(
            evaluate(&manifest, &PipelineConfig::default(), &[]),
            Err(EvalError::AllImagesFailed)
        ));
    }

    #[test]
    fn failed_images_are_skipped_and_listed() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = synth_manifest(dir.path(), 2, 4, 2, 11);
        let blanked = manifest.entries[1].path.clone();
        write_pgm(&blanked, &GrayImage::filled(64, 64, 7)).unwrap();
        let deleted = manifest.entries[6].path.clone();
        std::fs::remove_file(&deleted).unwrap();

        let report = evaluate(&manifest, &PipelineConfig::default(), &[]).unwrap();
        assert_eq!(report.skipped.len(), 2);
        let paths: Vec<&PathBuf> = report.skipped.iter().map(|(p, _)| p).collect();
        assert!(paths.contains(&&blanked) && paths.contains(&&deleted));
        let blank_reason = &report
            .skipped
            .iter()
            .find(|(p, _)| p == &blanked)
            .unwrap()
            .1;
        assert!(blank_reason.contains("segmentation"), "{blank_reason}");
        let entry = &report.entries[0];
        assert_eq!(entry.train_count + entry.test_count, 6);
        assert!(entry.rate.is_finite());
        assert!(report.render_text(false).contains("skipped images:"));
    }

    #[test]
    fn sweep_invariants_and_determinism() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = synth_manifest(dir.path(), 3, 6, 2, 7);
        let cfg = PipelineConfig::default();

        let r1 = evaluate(&manifest, &cfg, &[8, 16]).unwrap();
        let r2 = evaluate(&manifest, &cfg, &[8, 16]).unwrap();

        assert_eq!(r1.entries.len(), 2);
        assert_eq!(r1.entries[0].block_size, 8);
        assert_eq!(r1.entries[1].block_size, 16);
        let n = r1.subjects.len();
        for e in &r1.entries {
            let trace: u32 = (0..n).map(|i| e.confusion[i * n + i]).sum();
            let total: u32 = e.confusion.iter().sum();
            assert_eq!(total as usize, e.test_count);
            assert_eq!(e.rate, 100.0 * f64::from(trace) / f64::from(total));
            for i in 0..n {
                let row: u32 = e.confusion[i * n..(i + 1) * n].iter().sum();
                assert_eq!(row, 3, "each subject has 3 test images");
            }
        }

        // identical config and inputs: identical reports and model bytes
        assert_eq!(r1.render_text(false), r2.render_text(false));
        assert_eq!(r1.render_csv(), r2.render_csv());
        for (e1, e2) in r1.entries.iter().zip(&r2.entries) {
            assert_eq!(e1.model.to_bytes(), e2.model.to_bytes());
        }

        let text = r1.render_text(true);
        assert!(text.contains("block"));
        assert!(text.contains("subject_00"));
        assert!(text.contains("runtime:"));
        assert!(!r1.render_text(false).contains("runtime:"));
        assert!(r1.render_csv().starts_with("block_size,rate_percent,"));
    }

    #[test]
    fn noise_monotonically_degrades_mean_accuracy() {
        let mut means = Vec::new();
        for &noise in &[0u8, 10, 24] {
            let mut rates = Vec::new();
            for seed in [1u64, 2, 3, 4, 5] {
                let dir = tempfile::tempdir().unwrap();
                let manifest = synth_manifest(dir.path(), 3, 8, noise, seed);
                let cfg = PipelineConfig {
                    seed,
                    ..PipelineConfig::default()
                };
                let report = evaluate(&manifest, &cfg, &[]).unwrap();
                rates.push(report.entries[0].rate);
            }
            means.push(rates.iter().sum::<f64>() / rates.len() as f64);
        }
        for pair in means.windows(2) {
            assert!(
                pair[1] <= pair[0] + 2.0,
                "noise should not help: {means:?}"
            );
        }
    }
}
