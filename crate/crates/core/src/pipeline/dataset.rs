//! Dataset discovery, deterministic train/test splitting, and the feature
//! CSV interchange format.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::mlp::LabeledSample;
use crate::pnm::{read_gray_auto, PnmError};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("found {found} subject directories with images, need at least 2")]
    NoSubjects { found: usize },
    #[error("{path}: image is {got_w}x{got_h}, dataset uses {want_w}x{want_h}")]
    MixedSizes {
        path: PathBuf,
        got_w: usize,
        got_h: usize,
        want_w: usize,
        want_h: usize,
    },
    #[error("{path}: {source}")]
    UnreadableImage {
        path: PathBuf,
        #[source]
        source: PnmError,
    },
    #[error("train ratio {0} must lie strictly between 0 and 1")]
    BadRatio(f64),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("features csv line {line}: {message}")]
    BadCsv { line: usize, message: String },
}

/// Which half of the experiment an image belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

/// One image with its subject assignment.
#[derive(Debug, Clone)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub subject: String,
    /// Index into [`DatasetManifest::subjects`].
    pub label: usize,
    pub split: Split,
}

/// A verified dataset: every image decoded and shares one size.
#[derive(Debug, Clone)]
pub struct DatasetManifest {
    pub root: PathBuf,
    pub subjects: Vec<String>,
    pub entries: Vec<ManifestEntry>,
    pub width: usize,
    pub height: usize,
}

impl DatasetManifest {
    pub fn split_counts(&self) -> (usize, usize) {
        let train = self
            .entries
            .iter()
            .filter(|e| e.split == Split::Train)
            .count();
        (train, self.entries.len() - train)
    }

    /// Plain-text listing, one `path,subject,split` row per entry.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("path,subject,split\n");
        for e in &self.entries {
            out.push_str(&format!("{},{},{}\n", e.path.display(), e.subject, e.split));
        }
        out
    }
}

fn is_image_file(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("pgm") | Some("ppm")
    )
}

fn sorted_dir(path: &Path) -> Result<Vec<PathBuf>, DatasetError> {
    let iter = fs::read_dir(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = Vec::new();
    for entry in iter {
        let entry = entry.map_err(|source| DatasetError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        out.push(entry.path());
    }
    out.sort();
    Ok(out)
}

/// Walks `root/<subject>/<image>.pgm|ppm`, verifies every image, and deals
/// each subject's images into train/test by `train_ratio`.
///
/// Subjects and images are visited in lexicographic order and the per-
/// subject shuffle comes from a ChaCha stream seeded by `seed`, so the
/// same tree, ratio, and seed always produce the same manifest.
pub fn ingest(root: &Path, train_ratio: f64, seed: u64) -> Result<DatasetManifest, DatasetError> {
    if !(train_ratio > 0.0 && train_ratio < 1.0) {
        return Err(DatasetError::BadRatio(train_ratio));
    }

    let mut subjects: Vec<(String, Vec<PathBuf>)> = Vec::new();
    for dir in sorted_dir(root)? {
        if !dir.is_dir() {
            continue;
        }
        let images: Vec<PathBuf> = sorted_dir(&dir)?
            .into_iter()
            .filter(|p| p.is_file() && is_image_file(p))
            .collect();
        if images.is_empty() {
            continue;
        }
        let name = dir
            .file_name()
            .expect("read_dir yields named entries")
            .to_string_lossy()
            .into_owned();
        subjects.push((name, images));
    }
    if subjects.len() < 2 {
        return Err(DatasetError::NoSubjects {
            found: subjects.len(),
        });
    }

    // verify decodability and a single common size
    let mut size: Option<(usize, usize)> = None;
    for (_, images) in &subjects {
        for path in images {
            let img = read_gray_auto(path).map_err(|source| DatasetError::UnreadableImage {
                path: path.clone(),
                source,
            })?;
            match size {
                None => size = Some((img.width(), img.height())),
                Some((w, h)) if (img.width(), img.height()) != (w, h) => {
                    return Err(DatasetError::MixedSizes {
                        path: path.clone(),
                        got_w: img.width(),
                        got_h: img.height(),
                        want_w: w,
                        want_h: h,
                    });
                }
                Some(_) => {}
            }
        }
    }
    let (width, height) = size.expect("at least two subjects with images");

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::new();
    for (label, (subject, images)) in subjects.iter().enumerate() {
        let mut order: Vec<usize> = (0..images.len()).collect();
        order.shuffle(&mut rng);
        let n_train = ((images.len() as f64) * train_ratio).round() as usize;
        let mut splits = vec![Split::Test; images.len()];
        for &i in order.iter().take(n_train) {
            splits[i] = Split::Train;
        }
        for (i, path) in images.iter().enumerate() {
            entries.push(ManifestEntry {
                path: path.clone(),
                subject: subject.clone(),
                label,
                split: splits[i],
            });
        }
    }

    Ok(DatasetManifest {
        root: root.to_path_buf(),
        subjects: subjects.into_iter().map(|(name, _)| name).collect(),
        entries,
        width,
        height,
    })
}

/// Feature vectors with their class names, as read back from CSV.
#[derive(Debug, Clone)]
pub struct FeatureDataset {
    pub samples: Vec<LabeledSample>,
    /// Sorted unique label names; `samples[i].label` indexes this.
    pub class_names: Vec<String>,
}

/// Parses rows of `label,c0,c1,...` (no header). Label indices are
/// assigned by sorting the distinct label names, so any row order yields
/// the same class mapping.
pub fn load_features_csv(text: &str) -> Result<FeatureDataset, DatasetError> {
    let mut raw: Vec<(String, Vec<f64>)> = Vec::new();
    let mut feature_len: Option<usize> = None;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let label = fields
            .next()
            .expect("split yields at least one field")
            .trim()
            .to_string();
        if label.is_empty() {
            return Err(DatasetError::BadCsv {
                line: line_no,
                message: "empty label".into(),
            });
        }
        let mut features = Vec::new();
        for field in fields {
            let value: f64 = field.trim().parse().map_err(|_| DatasetError::BadCsv {
                line: line_no,
                message: format!("{:?} is not a number", field.trim()),
            })?;
            features.push(value);
        }
        match feature_len {
            None => feature_len = Some(features.len()),
            Some(n) if n != features.len() => {
                return Err(DatasetError::BadCsv {
                    line: line_no,
                    message: format!("row has {} features, expected {}", features.len(), n),
                });
            }
            Some(_) => {}
        }
        raw.push((label, features));
    }
    if raw.is_empty() {
        return Err(DatasetError::BadCsv {
            line: 0,
            message: "no rows".into(),
        });
    }
    if feature_len == Some(0) {
        return Err(DatasetError::BadCsv {
            line: 1,
            message: "rows carry no feature columns".into(),
        });
    }

    let mut class_names: Vec<String> = raw.iter().map(|(l, _)| l.clone()).collect();
    class_names.sort();
    class_names.dedup();
    let samples = raw
        .into_iter()
        .map(|(label, features)| LabeledSample {
            features,
            label: class_names
                .binary_search(&label)
                .expect("every label was inserted"),
        })
        .collect();
    Ok(FeatureDataset {
        samples,
        class_names,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pnm::write_pgm;
    use crate::raster::GrayImage;

    fn make_dataset(root: &Path, subjects: &[(&str, usize)], size: (usize, usize)) {
        for (name, count) in subjects {
            let dir = root.join(name);
            fs::create_dir_all(&dir).unwrap();
            for i in 0..*count {
                let img = GrayImage::filled(size.0, size.1, (i * 7 % 256) as u8);
                write_pgm(&dir.join(format!("img_{i:03}.pgm")), &img).unwrap();
            }
        }
    }

    #[test]
    fn ingest_splits_per_subject() {
        let dir = tempfile::tempdir().unwrap();
        make_dataset(dir.path(), &[("ana", 10), ("bo", 10), ("cy", 10)], (8, 8));
        let m = ingest(dir.path(), 0.5, 42).unwrap();
        assert_eq!(m.subjects, vec!["ana", "bo", "cy"]);
        assert_eq!(m.entries.len(), 30);
        assert_eq!((m.width, m.height), (8, 8));
        for label in 0..3 {
            let train = m
                .entries
                .iter()
                .filter(|e| e.label == label && e.split == Split::Train)
                .count();
            assert_eq!(train, 5, "subject {label}");
        }
    }

    #[test]
    fn ingest_is_deterministic_and_seed_sensitive() {
        let dir = tempfile::tempdir().unwrap();
        make_dataset(dir.path(), &[("a", 8), ("b", 8)], (6, 6));
        let m1 = ingest(dir.path(), 0.5, 7).unwrap();
        let m2 = ingest(dir.path(), 0.5, 7).unwrap();
        assert_eq!(m1.to_csv(), m2.to_csv());
        let m3 = ingest(dir.path(), 0.5, 8).unwrap();
        // same entries, almost surely a different split assignment
        assert_eq!(m1.entries.len(), m3.entries.len());
    }

    #[test]
    fn ingest_rejects_empty_and_single_subject() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            ingest(dir.path(), 0.5, 0),
            Err(DatasetError::NoSubjects { found: 0 })
        ));
        make_dataset(dir.path(), &[("only", 4)], (8, 8));
        assert!(matches!(
            ingest(dir.path(), 0.5, 0),
            Err(DatasetError::NoSubjects { found: 1 })
        ));
    }

    #[test]
    fn ingest_rejects_mixed_sizes_naming_the_offender() {
        let dir = tempfile::tempdir().unwrap();
        make_dataset(dir.path(), &[("a", 3), ("b", 3)], (8, 8));
        let odd = dir.path().join("b").join("zzz.pgm");
        write_pgm(&odd, &GrayImage::filled(4, 4, 0)).unwrap();
        match ingest(dir.path(), 0.5, 0) {
            Err(DatasetError::MixedSizes { path, got_w: 4, .. }) => assert_eq!(path, odd),
            other => panic!("expected MixedSizes, got {other:?}"),
        }
    }

    #[test]
    fn ingest_rejects_undecodable_image() {
        let dir = tempfile::tempdir().unwrap();
        make_dataset(dir.path(), &[("a", 2), ("b", 2)], (8, 8));
        fs::write(dir.path().join("a").join("broken.pgm"), b"not a pgm").unwrap();
        assert!(matches!(
            ingest(dir.path(), 0.5, 0),
            Err(DatasetError::UnreadableImage { .. })
        ));
    }

    #[test]
    fn ingest_validates_ratio() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            ingest(dir.path(), 0.0, 0),
            Err(DatasetError::BadRatio(_))
        ));
        assert!(matches!(
            ingest(dir.path(), 1.0, 0),
            Err(DatasetError::BadRatio(_))
        ));
    }

    #[test]
    fn features_csv_round_trip() {
        let text = "bo,1,0,2\nana,0,3,1\nbo,2,2,2\n";
        let ds = load_features_csv(text).unwrap();
        assert_eq!(ds.class_names, vec!["ana", "bo"]);
        assert_eq!(ds.samples.len(), 3);
        assert_eq!(ds.samples[0].label, 1);
        assert_eq!(ds.samples[1].label, 0);
        assert_eq!(ds.samples[1].features, vec![0.0, 3.0, 1.0]);
    }

    #[test]
    fn features_csv_rejects_ragged_and_garbage_rows() {
        assert!(matches!(
            load_features_csv("a,1,2\nb,1\n"),
            Err(DatasetError::BadCsv { line: 2, .. })
        ));
        assert!(matches!(
            load_features_csv("a,x\n"),
            Err(DatasetError::BadCsv { line: 1, .. })
        ));
        assert!(matches!(
            load_features_csv(""),
            Err(DatasetError::BadCsv { .. })
        ));
        assert!(matches!(
            load_features_csv("justalabel\n"),
            Err(DatasetError::BadCsv { .. })
        ));
    }
}
