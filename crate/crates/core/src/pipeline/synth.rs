//! Synthetic faceprint generator.
//!
//! Each subject gets a fixed random vessel skeleton — a small tree of
//! axis-aligned polylines inside an elliptical warm "face" on a cool
//! background — and each image of that subject re-renders the skeleton
//! with a small translation jitter plus per-pixel noise. The skeleton's
//! branch tips and fork points are the planted minutiae; they are
//! recorded per image in a `ground_truth.csv` sidecar so downstream
//! feature extraction can be checked against known answers.

use std::fs;
use std::io;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::minutiae::MinutiaKind;
use crate::pnm::{write_pgm, PnmError};
use crate::raster::GrayImage;

/// Background (ambient) intensity.
const BG: u8 = 35;
/// Face blob intensity.
const FACE: u8 = 180;
/// Vessel stroke intensity.
const VESSEL: u8 = 230;
/// Vessel skeletons are kept inside this fraction of the face ellipse so
/// strokes never touch the face boundary.
const VESSEL_MARGIN: f64 = 0.78;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("need at least 2 subjects, got {0}")]
    TooFewSubjects(usize),
    #[error("need at least 1 image per subject")]
    NoImages,
    #[error("canvas {width}x{height} is too small, need at least 32x32")]
    CanvasTooSmall { width: usize, height: usize },
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {source}")]
    Encode {
        path: std::path::PathBuf,
        #[source]
        source: PnmError,
    },
}

/// Parameters for [`synth_faces`].
#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub subjects: usize,
    pub per_subject: usize,
    pub width: usize,
    pub height: usize,
    /// Per-pixel uniform noise amplitude (intensity units).
    pub noise: u8,
    pub seed: u64,
}

impl SynthSpec {
    /// Spec with the default noise amplitude.
    pub fn new(subjects: usize, per_subject: usize, width: usize, height: usize, seed: u64) -> Self {
        SynthSpec {
            subjects,
            per_subject,
            width,
            height,
            noise: 3,
            seed,
        }
    }

    fn validate(&self) -> Result<(), SynthError> {
        if self.subjects < 2 {
            return Err(SynthError::TooFewSubjects(self.subjects));
        }
        if self.per_subject == 0 {
            return Err(SynthError::NoImages);
        }
        if self.width < 32 || self.height < 32 {
            return Err(SynthError::CanvasTooSmall {
                width: self.width,
                height: self.height,
            });
        }
        Ok(())
    }
}

/// A subject's fixed geometry: the face ellipse and the vessel skeleton.
struct SubjectFace {
    center: (f64, f64),
    semi_vert: f64,
    semi_horiz: f64,
    /// Polyline segments in un-jittered image coordinates.
    segments: Vec<((f64, f64), (f64, f64))>,
    /// Planted minutiae: branch tips and fork nodes.
    minutiae: Vec<(f64, f64, MinutiaKind)>,
}

fn grow_subject(rng: &mut ChaCha8Rng, width: usize, height: usize) -> SubjectFace {
    let cx = width as f64 / 2.0 + rng.gen_range(-3.0..=3.0);
    let cy = height as f64 / 2.0 + rng.gen_range(-3.0..=3.0);
    let semi_vert = 0.38 * height as f64 * rng.gen_range(0.92..=1.08);
    let semi_horiz = 0.30 * width as f64 * rng.gen_range(0.92..=1.08);
    let center = (cx, cy);

    // Horizontal/vertical reach of the margin ellipse at a given offset
    // from the center, used to keep strokes clear of the face boundary.
    let max_dx = |dy: f64| -> f64 {
        let r = 1.0 - (dy / (VESSEL_MARGIN * semi_vert)).powi(2);
        if r <= 0.0 {
            0.0
        } else {
            VESSEL_MARGIN * semi_horiz * r.sqrt()
        }
    };
    let max_dy = |dx: f64| -> f64 {
        let r = 1.0 - (dx / (VESSEL_MARGIN * semi_horiz)).powi(2);
        if r <= 0.0 {
            0.0
        } else {
            VESSEL_MARGIN * semi_vert * r.sqrt()
        }
    };

    // The skeleton is a Manhattan tree on integer coordinates: a vertical
    // trunk, one T-fork into two horizontal arms, a vertical riser per
    // arm, and optional outward stubs on the risers. Axis-aligned strokes
    // matter: they yield a solid gradient band whose thinned centerline
    // reproduces the skeleton, whereas diagonal strokes leave periodic
    // holes in the band that survive as loops and flood the image with
    // spurious junction points.
    let sx = cx.round();
    let root_y = (cy + 0.30 * semi_vert).round();
    let trunk_len = (0.35 * semi_vert * rng.gen_range(0.9..=1.1)).round().max(5.0);
    let top_y = root_y - trunk_len;

    let mut segments = vec![((sx, root_y), (sx, top_y))];
    let mut minutiae = vec![
        (sx, root_y, MinutiaKind::Termination),
        (sx, top_y, MinutiaKind::Bifurcation),
    ];

    let arm_reach = max_dx(top_y - cy);
    for side in [-1.0, 1.0] {
        let arm_len = (0.45 * semi_horiz * rng.gen_range(0.6..=1.1))
            .min(arm_reach - 2.0)
            .round()
            .max(5.0);
        let end_x = sx + side * arm_len;
        segments.push(((sx, top_y), (end_x, top_y)));

        // the riser turns upward at the arm's end; the corner is a plain
        // bend and plants no minutia
        let reach_up = top_y - (cy - max_dy(end_x - cx));
        let riser_len = (0.50 * semi_vert * rng.gen_range(0.5..=1.0))
            .min(reach_up - 1.0)
            .round()
            .max(4.0);
        let tip_y = top_y - riser_len;
        segments.push(((end_x, top_y), (end_x, tip_y)));
        minutiae.push((end_x, tip_y, MinutiaKind::Termination));

        // optional outward stub partway up the riser (draws are
        // unconditional so the random stream stays aligned)
        let has_stub = rng.gen_bool(0.5);
        let frac = rng.gen_range(0.35..=0.65);
        let stub_draw = 0.25 * semi_horiz * rng.gen_range(0.7..=1.2);
        if has_stub {
            let stub_y = (top_y - frac * riser_len).round();
            let avail = max_dx(stub_y - cy) - (end_x - cx).abs() - 1.0;
            let stub_len = stub_draw.min(avail).round();
            // a stub shorter than the stroke band would be invisible to
            // the feature pipeline, so drop it entirely
            if stub_len >= 5.0 {
                let stub_end = end_x + side * stub_len;
                segments.push(((end_x, stub_y), (stub_end, stub_y)));
                minutiae.push((end_x, stub_y, MinutiaKind::Bifurcation));
                minutiae.push((stub_end, stub_y, MinutiaKind::Termination));
            }
        }
    }

    SubjectFace {
        center,
        semi_vert,
        semi_horiz,
        segments,
        minutiae,
    }
}

/// All-octant Bresenham line, endpoints inclusive.
fn line_points(x0: i64, y0: i64, x1: i64, y1: i64) -> Vec<(i64, i64)> {
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    let (mut x, mut y) = (x0, y0);
    let mut pts = Vec::new();
    loop {
        pts.push((x, y));
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
    pts
}

fn render_image(
    face: &SubjectFace,
    jitter: (f64, f64),
    noise: u8,
    rng: &mut ChaCha8Rng,
    width: usize,
    height: usize,
) -> GrayImage {
    let (cx, cy) = (face.center.0 + jitter.0, face.center.1 + jitter.1);
    let mut img = GrayImage::filled(width, height, BG);
    for y in 0..height {
        for x in 0..width {
            let q = ((x as f64 - cx) / face.semi_horiz).powi(2)
                + ((y as f64 - cy) / face.semi_vert).powi(2);
            if q <= 1.0 {
                img.set(x, y, FACE);
            }
        }
    }
    // Strokes are painted with a 2x2 stamp: a two-pixel-wide vessel yields
    // one solid gradient band, so thinning recovers a single centerline
    // whose tips and forks match the planted skeleton.
    for &(p0, p1) in &face.segments {
        let x0 = (p0.0 + jitter.0).round() as i64;
        let y0 = (p0.1 + jitter.1).round() as i64;
        let x1 = (p1.0 + jitter.0).round() as i64;
        let y1 = (p1.1 + jitter.1).round() as i64;
        for (lx, ly) in line_points(x0, y0, x1, y1) {
            for (ox, oy) in [(0i64, 0i64), (1, 0), (0, 1), (1, 1)] {
                let (sx, sy) = (lx + ox, ly + oy);
                if sx >= 0 && sy >= 0 && (sx as usize) < width && (sy as usize) < height {
                    img.set(sx as usize, sy as usize, VESSEL);
                }
            }
        }
    }
    if noise > 0 {
        let amp = noise as i16;
        for y in 0..height {
            for x in 0..width {
                let d = rng.gen_range(-amp..=amp);
                let v = (img.get(x, y) as i16 + d).clamp(0, 255) as u8;
                img.set(x, y, v);
            }
        }
    }
    img
}

/// Writes `spec.subjects x spec.per_subject` PGM images under
/// `out_root/subject_XX/img_YYY.pgm` plus a `ground_truth.csv` listing
/// every planted minutia per image (`subject,image,x,y,kind`).
///
/// The same spec always produces byte-identical output.
pub fn synth_faces(out_root: &Path, spec: &SynthSpec) -> Result<(), SynthError> {
    spec.validate()?;
    fs::create_dir_all(out_root).map_err(|source| SynthError::Io {
        path: out_root.to_path_buf(),
        source,
    })?;

    let mut master = ChaCha8Rng::seed_from_u64(spec.seed);
    let subject_seeds: Vec<u64> = (0..spec.subjects).map(|_| master.gen()).collect();

    let mut ground_truth = String::from("subject,image,x,y,kind\n");
    for (s, &subject_seed) in subject_seeds.iter().enumerate() {
        let subject = format!("subject_{s:02}");
        let dir = out_root.join(&subject);
        fs::create_dir_all(&dir).map_err(|source| SynthError::Io {
            path: dir.clone(),
            source,
        })?;

        let mut subject_rng = ChaCha8Rng::seed_from_u64(subject_seed);
        let face = grow_subject(&mut subject_rng, spec.width, spec.height);
        let image_seeds: Vec<u64> = (0..spec.per_subject).map(|_| subject_rng.gen()).collect();

        for (i, &image_seed) in image_seeds.iter().enumerate() {
            let mut image_rng = ChaCha8Rng::seed_from_u64(image_seed);
            let jitter = (
                image_rng.gen_range(-2i64..=2) as f64,
                image_rng.gen_range(-2i64..=2) as f64,
            );
            let img = render_image(
                &face,
                jitter,
                spec.noise,
                &mut image_rng,
                spec.width,
                spec.height,
            );
            let name = format!("img_{i:03}.pgm");
            let path = dir.join(&name);
            write_pgm(&path, &img).map_err(|source| SynthError::Encode { path, source })?;
            for m in &face.minutiae {
                ground_truth.push_str(&format!(
                    "{},{},{},{},{}\n",
                    subject,
                    name,
                    (m.0 + jitter.0).round() as i64,
                    (m.1 + jitter.1).round() as i64,
                    m.2,
                ));
            }
        }
    }

    let gt_path = out_root.join("ground_truth.csv");
    fs::write(&gt_path, ground_truth).map_err(|source| SynthError::Io {
        path: gt_path,
        source,
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pnm::read_gray_auto;
    use std::collections::BTreeMap;
    use std::path::PathBuf;

    fn walk_files(root: &Path) -> Vec<PathBuf> {
        let mut out = Vec::new();
        let mut stack = vec![root.to_path_buf()];
        while let Some(dir) = stack.pop() {
            for entry in fs::read_dir(&dir).unwrap() {
                let path = entry.unwrap().path();
                if path.is_dir() {
                    stack.push(path);
                } else {
                    out.push(path);
                }
            }
        }
        out.sort();
        out
    }

    #[test]
    fn same_seed_is_byte_identical() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let spec = SynthSpec::new(3, 2, 64, 64, 99);
        synth_faces(a.path(), &spec).unwrap();
        synth_faces(b.path(), &spec).unwrap();
        let fa = walk_files(a.path());
        let fb = walk_files(b.path());
        assert_eq!(fa.len(), fb.len());
        assert_eq!(fa.len(), 3 * 2 + 1); // images + ground truth
        for (pa, pb) in fa.iter().zip(&fb) {
            assert_eq!(
                pa.strip_prefix(a.path()).unwrap(),
                pb.strip_prefix(b.path()).unwrap()
            );
            assert_eq!(fs::read(pa).unwrap(), fs::read(pb).unwrap(), "{pa:?}");
        }
    }

    #[test]
    fn different_seeds_differ() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        synth_faces(a.path(), &SynthSpec::new(2, 1, 64, 64, 1)).unwrap();
        synth_faces(b.path(), &SynthSpec::new(2, 1, 64, 64, 2)).unwrap();
        let img_a = fs::read(a.path().join("subject_00/img_000.pgm")).unwrap();
        let img_b = fs::read(b.path().join("subject_00/img_000.pgm")).unwrap();
        assert_ne!(img_a, img_b);
    }

    #[test]
    fn validates_spec() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            synth_faces(dir.path(), &SynthSpec::new(1, 5, 64, 64, 0)),
            Err(SynthError::TooFewSubjects(1))
        ));
        assert!(matches!(
            synth_faces(dir.path(), &SynthSpec::new(2, 0, 64, 64, 0)),
            Err(SynthError::NoImages)
        ));
        assert!(matches!(
            synth_faces(dir.path(), &SynthSpec::new(2, 1, 16, 64, 0)),
            Err(SynthError::CanvasTooSmall { .. })
        ));
    }

    #[test]
    fn layout_images_and_ground_truth_agree() {
        let dir = tempfile::tempdir().unwrap();
        let spec = SynthSpec::new(3, 4, 64, 80, 5);
        synth_faces(dir.path(), &spec).unwrap();

        for s in 0..3 {
            for i in 0..4 {
                let path = dir.path().join(format!("subject_{s:02}/img_{i:03}.pgm"));
                let img = read_gray_auto(&path).unwrap();
                assert_eq!((img.width(), img.height()), (64, 80), "{path:?}");
            }
        }

        let gt = fs::read_to_string(dir.path().join("ground_truth.csv")).unwrap();
        let mut lines = gt.lines();
        assert_eq!(lines.next(), Some("subject,image,x,y,kind"));
        let mut per_image: BTreeMap<(String, String), usize> = BTreeMap::new();
        for line in lines {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields.len(), 5, "{line}");
            let img_path = dir.path().join(fields[0]).join(fields[1]);
            assert!(img_path.is_file(), "{line}");
            let x: i64 = fields[2].parse().unwrap();
            let y: i64 = fields[3].parse().unwrap();
            assert!((0..64).contains(&x) && (0..80).contains(&y), "{line}");
            assert!(
                fields[4] == "termination" || fields[4] == "bifurcation",
                "{line}"
            );
            *per_image
                .entry((fields[0].to_string(), fields[1].to_string()))
                .or_default() += 1;
        }
        assert_eq!(per_image.len(), 12);
        // A subject's planted count is fixed across its images, and a tree
        // always has at least the root, the trunk fork, and two riser tips.
        let mut per_subject: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for ((subject, _), count) in per_image {
            per_subject.entry(subject).or_default().push(count);
        }
        for (subject, counts) in per_subject {
            assert!(counts.iter().all(|&c| c == counts[0]), "{subject}: {counts:?}");
            assert!(counts[0] >= 4, "{subject}: {counts:?}");
        }
    }

    #[test]
    fn subjects_get_distinct_faces() {
        let dir = tempfile::tempdir().unwrap();
        synth_faces(dir.path(), &SynthSpec::new(2, 1, 64, 64, 3)).unwrap();
        let a = fs::read(dir.path().join("subject_00/img_000.pgm")).unwrap();
        let b = fs::read(dir.path().join("subject_01/img_000.pgm")).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn images_contain_background_face_and_vessels() {
        let dir = tempfile::tempdir().unwrap();
        let mut spec = SynthSpec::new(2, 1, 64, 64, 11);
        spec.noise = 0;
        synth_faces(dir.path(), &spec).unwrap();
        let img = read_gray_auto(&dir.path().join("subject_00/img_000.pgm")).unwrap();
        let mut seen = [0usize; 3];
        for y in 0..img.height() {
            for x in 0..img.width() {
                match img.get(x, y) {
                    BG => seen[0] += 1,
                    FACE => seen[1] += 1,
                    VESSEL => seen[2] += 1,
                    other => panic!("unexpected intensity {other} with noise off"),
                }
            }
        }
        assert!(seen[0] > 0 && seen[1] > 0 && seen[2] > 0, "{seen:?}");
        // vessels are a sparse overlay on the face
        assert!(seen[2] < seen[1]);
    }
}
