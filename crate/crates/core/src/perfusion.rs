//! Blood-perfusion ridge maps: Sobel gradients, magnitude thresholding,
//! and thinning to unit-width ridges.
//!
//! The gradient is the 3x3 Sobel correlation with the masks written out in
//! [`PX_MASK`] / [`PY_MASK`] (y grows downward). The outer one-pixel border
//! has no full window; it is excluded from threshold statistics and always
//! maps to background.

use thiserror::Error;

use crate::raster::{BinaryImage, GrayImage};

/// Horizontal-derivative mask, row-major, applied as a correlation.
pub const PX_MASK: [[i32; 3]; 3] = [[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]];
/// Vertical-derivative mask: positive response when the row above is
/// brighter than the row below.
pub const PY_MASK: [[i32; 3]; 3] = [[1, 2, 1], [0, 0, 0], [-1, -2, -1]];

#[derive(Debug, Error, PartialEq)]
pub enum PerfusionError {
    #[error("gradient needs at least a 3x3 image, got {width}x{height}")]
    ImageTooSmall { width: usize, height: usize },
    #[error("percentile {0} outside [0, 100]")]
    InvalidPercentile(f64),
}

/// Magnitude formula selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GradientNorm {
    /// Euclidean: sqrt(px^2 + py^2).
    #[default]
    L2,
    /// Taxicab: |px| + |py|.
    L1,
}

/// How the ridge threshold over gradient magnitudes is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ThresholdMode {
    /// Arithmetic mean of the interior magnitudes.
    #[default]
    Mean,
    /// Linearly interpolated percentile (0-100) of the interior magnitudes.
    Percentile(f64),
}

/// Per-pixel Sobel responses. Border pixels (outside the interior window)
/// hold zeros and are reported invalid by [`GradientField::is_interior`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    width: usize,
    height: usize,
    px: Vec<i32>,
    py: Vec<i32>,
    magnitude: Vec<f64>,
    orientation: Vec<f64>,
}

impl GradientField {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn px(&self, x: usize, y: usize) -> i32 {
        self.px[y * self.width + x]
    }

    pub fn py(&self, x: usize, y: usize) -> i32 {
        self.py[y * self.width + x]
    }

    pub fn magnitude(&self, x: usize, y: usize) -> f64 {
        self.magnitude[y * self.width + x]
    }

    /// Gradient direction in radians, `atan2(py, px)`, in (-pi, pi].
    pub fn orientation(&self, x: usize, y: usize) -> f64 {
        self.orientation[y * self.width + x]
    }

    /// True when (x, y) has a full 3x3 window inside the image.
    pub fn is_interior(&self, x: usize, y: usize) -> bool {
        x >= 1 && y >= 1 && x + 1 < self.width && y + 1 < self.height
    }

    fn interior_magnitudes(&self) -> impl Iterator<Item = f64> + '_ {
        (1..self.height - 1)
            .flat_map(move |y| (1..self.width - 1).map(move |x| self.magnitude(x, y)))
    }
}

/// Computes the Sobel gradient field of `img`.
pub fn sobel(img: &GrayImage, norm: GradientNorm) -> Result<GradientField, PerfusionError> {
    let width = img.width();
    let height = img.height();
    if width < 3 || height < 3 {
        return Err(PerfusionError::ImageTooSmall { width, height });
    }
    let mut field = GradientField {
        width,
        height,
        px: vec![0; width * height],
        py: vec![0; width * height],
        magnitude: vec![0.0; width * height],
        orientation: vec![0.0; width * height],
    };
    for y in 1..height - 1 {
        for x in 1..width - 1 {
            let mut px = 0i32;
            let mut py = 0i32;
            for j in 0..3 {
                for i in 0..3 {
                    let v = i32::from(img.get(x + i - 1, y + j - 1));
                    px += PX_MASK[j][i] * v;
                    py += PY_MASK[j][i] * v;
                }
            }
            let idx = y * width + x;
            field.px[idx] = px;
            field.py[idx] = py;
            field.magnitude[idx] = match norm {
                GradientNorm::L2 => f64::from(px * px + py * py).sqrt(),
                GradientNorm::L1 => f64::from(px.abs() + py.abs()),
            };
            field.orientation[idx] = f64::from(py).atan2(f64::from(px));
        }
    }
    Ok(field)
}

/// Linearly interpolated percentile of an ascending-sorted slice.
fn percentile_of_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    if sorted.len() == 1 {
        return sorted[0];
    }
    let rank = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Thresholds the magnitude field into a ridge map.
///
/// A pixel becomes 1 iff it is interior and its magnitude strictly exceeds
/// the threshold derived from the interior magnitudes by `mode`.
pub fn binarize_gradient_with(
    g: &GradientField,
    mode: ThresholdMode,
) -> Result<BinaryImage, PerfusionError> {
    let threshold = match mode {
        ThresholdMode::Mean => {
            let (sum, n) = g
                .interior_magnitudes()
                .fold((0.0, 0usize), |(s, n), m| (s + m, n + 1));
            sum / n as f64
        }
        ThresholdMode::Percentile(p) => {
            if !(0.0..=100.0).contains(&p) {
                return Err(PerfusionError::InvalidPercentile(p));
            }
            let mut values: Vec<f64> = g.interior_magnitudes().collect();
            values.sort_by(|a, b| a.partial_cmp(b).expect("magnitudes are finite"));
            percentile_of_sorted(&values, p)
        }
    };
    let mut out = BinaryImage::zeros(g.width, g.height);
    for y in 1..g.height - 1 {
        for x in 1..g.width - 1 {
            if g.magnitude(x, y) > threshold {
                out.set(x, y, 1);
            }
        }
    }
    Ok(out)
}

/// [`binarize_gradient_with`] at the default mean threshold.
pub fn binarize_gradient(g: &GradientField) -> BinaryImage {
    binarize_gradient_with(g, ThresholdMode::Mean).expect("mean mode cannot fail")
}

/// Neighbor values P2..P9 = N, NE, E, SE, S, SW, W, NW; out of bounds = 0.
fn neighborhood(img: &BinaryImage, x: usize, y: usize) -> [u8; 8] {
    let (x, y) = (x as isize, y as isize);
    [
        img.get_or_zero(x, y - 1),
        img.get_or_zero(x + 1, y - 1),
        img.get_or_zero(x + 1, y),
        img.get_or_zero(x + 1, y + 1),
        img.get_or_zero(x, y + 1),
        img.get_or_zero(x - 1, y + 1),
        img.get_or_zero(x - 1, y),
        img.get_or_zero(x - 1, y - 1),
    ]
}

/// Number of 0->1 transitions walking the neighborhood cyclically.
fn transitions(n: &[u8; 8]) -> u32 {
    (0..8)
        .filter(|&i| n[i] == 0 && n[(i + 1) % 8] == 1)
        .count() as u32
}

fn deletable(n: &[u8; 8], first_subiteration: bool) -> bool {
    let b: u8 = n.iter().sum();
    if !(2..=6).contains(&b) || transitions(n) != 1 {
        return false;
    }
    // indices: 0=N, 2=E, 4=S, 6=W
    if first_subiteration {
        n[0] * n[2] * n[4] == 0 && n[2] * n[4] * n[6] == 0
    } else {
        n[0] * n[2] * n[6] == 0 && n[0] * n[4] * n[6] == 0
    }
}

fn thin_pass(img: &mut BinaryImage, first_subiteration: bool) -> usize {
    // Collect candidates against a frozen snapshot, then delete them one by
    // one in raster order, re-checking each against the live image. Pure
    // parallel deletion can remove an entire 2x2 block (every pixel of one
    // satisfies the first-subiteration test simultaneously), splitting or
    // erasing components; the sequential re-check makes every deletion a
    // connectivity-safe single-pixel removal.
    let snapshot = img.clone();
    let mut candidates = Vec::new();
    for y in 0..snapshot.height() {
        for x in 0..snapshot.width() {
            if snapshot.get(x, y) == 1 && deletable(&neighborhood(&snapshot, x, y), first_subiteration)
            {
                candidates.push((x, y));
            }
        }
    }
    let mut deleted = 0;
    for (x, y) in candidates {
        if deletable(&neighborhood(img, x, y), first_subiteration) {
            img.set(x, y, 0);
            deleted += 1;
        }
    }
    deleted
}

/// Thins ridges to unit width.
///
/// Two-subiteration thinning iterated to a fixpoint. The output is a subset
/// of the input and keeps the 8-connected component count: a pixel is only
/// deleted while its neighborhood forms a single arc (one 0->1 transition)
/// with 2..=6 foreground neighbors, so no deletion can split, erase, or
/// merge a component.
pub fn thin(ridges: &BinaryImage) -> BinaryImage {
    let mut img = ridges.clone();
    loop {
        let deleted = thin_pass(&mut img, true) + thin_pass(&mut img, false);
        if deleted == 0 {
            return img;
        }
    }
}

/// Renders the gradient field as CSV with header
/// `x,y,px,py,magnitude,orientation`, one row per interior pixel.
pub fn gradient_to_csv(g: &GradientField) -> String {
    let mut out = String::from("x,y,px,py,magnitude,orientation\n");
    for y in 1..g.height - 1 {
        for x in 1..g.width - 1 {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                x,
                y,
                g.px(x, y),
                g.py(x, y),
                g.magnitude(x, y),
                g.orientation(x, y)
            ));
        }
    }
    out
}
