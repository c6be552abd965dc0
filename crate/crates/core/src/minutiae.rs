//! Minutiae detection on thinned ridge maps and block-count features.
//!
//! A ridge pixel is classified purely by how many of its 8 neighbors are
//! foreground: one neighbor makes it a ridge termination, three a
//! bifurcation, two an ordinary ridge interior. Anything denser (crossings)
//! is treated as ordinary as well, so feature vectors stay comparable
//! across images.

use thiserror::Error;

use crate::raster::{BinaryImage, ColorImage, GrayImage};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MinutiaeError {
    #[error("block size must be at least 1, got {0}")]
    BlockSizeInvalid(usize),
    #[error("minutia at ({x}, {y}) lies outside a {width}x{height} image")]
    OutOfBounds {
        x: usize,
        y: usize,
        width: usize,
        height: usize,
    },
}

/// Outcome of classifying one ridge-map pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PixelClass {
    /// Center pixel is background.
    Background,
    /// Ridge interior or a dense crossing; not a minutia.
    Normal,
    /// Ridge end: exactly one foreground neighbor.
    Termination,
    /// Ridge split: exactly three foreground neighbors.
    Bifurcation,
}

/// Minutia kind kept for reporting and overlays.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MinutiaKind {
    Termination,
    Bifurcation,
}

impl std::fmt::Display for MinutiaKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MinutiaKind::Termination => "termination",
            MinutiaKind::Bifurcation => "bifurcation",
        })
    }
}

/// A classified ridge feature point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Minutia {
    pub x: usize,
    pub y: usize,
    pub kind: MinutiaKind,
}

/// Per-block minutiae counts over a fixed grid, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureVector {
    pub block_size: usize,
    pub grid_w: usize,
    pub grid_h: usize,
    pub counts: Vec<u32>,
}

impl FeatureVector {
    pub fn total(&self) -> u32 {
        self.counts.iter().sum()
    }

    /// Counts as f64, the classifier's input representation.
    pub fn to_f64(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| f64::from(c)).collect()
    }
}

/// Classifies the center of a 3x3 window (`window[row][col]`, values 0/1).
pub fn classify_pixel(window: [[u8; 3]; 3]) -> PixelClass {
    if window[1][1] == 0 {
        return PixelClass::Background;
    }
    let neighbors: u8 = window.iter().flatten().sum::<u8>() - window[1][1];
    match neighbors {
        1 => PixelClass::Termination,
        3 => PixelClass::Bifurcation,
        _ => PixelClass::Normal,
    }
}

/// Collects minutiae over all interior pixels in raster order.
///
/// Border pixels lack a full 3x3 window and never produce minutiae; feed
/// ridge maps with a clear border (the perfusion stages guarantee one).
pub fn extract_minutiae(ridges: &BinaryImage) -> Vec<Minutia> {
    let mut out = Vec::new();
    if ridges.width() < 3 || ridges.height() < 3 {
        return out;
    }
    for y in 1..ridges.height() - 1 {
        for x in 1..ridges.width() - 1 {
            let mut window = [[0u8; 3]; 3];
            for (j, row) in window.iter_mut().enumerate() {
                for (i, cell) in row.iter_mut().enumerate() {
                    *cell = ridges.get(x + i - 1, y + j - 1);
                }
            }
            let kind = match classify_pixel(window) {
                PixelClass::Termination => MinutiaKind::Termination,
                PixelClass::Bifurcation => MinutiaKind::Bifurcation,
                PixelClass::Background | PixelClass::Normal => continue,
            };
            out.push(Minutia { x, y, kind });
        }
    }
    out
}

/// Bins minutiae into a `ceil(width/bs) x ceil(height/bs)` grid of counts.
/// Terminations and bifurcations share one count per block.
pub fn block_features(
    minutiae: &[Minutia],
    width: usize,
    height: usize,
    block_size: usize,
) -> Result<FeatureVector, MinutiaeError> {
    if block_size < 1 {
        return Err(MinutiaeError::BlockSizeInvalid(block_size));
    }
    let grid_w = width.div_ceil(block_size);
    let grid_h = height.div_ceil(block_size);
    let mut counts = vec![0u32; grid_w * grid_h];
    for m in minutiae {
        if m.x >= width || m.y >= height {
            return Err(MinutiaeError::OutOfBounds {
                x: m.x,
                y: m.y,
                width,
                height,
            });
        }
        counts[(m.y / block_size) * grid_w + m.x / block_size] += 1;
    }
    Ok(FeatureVector {
        block_size,
        grid_w,
        grid_h,
        counts,
    })
}

/// Renders minutiae as CSV with header `x,y,kind`.
pub fn minutiae_to_csv(minutiae: &[Minutia]) -> String {
    let mut out = String::from("x,y,kind\n");
    for m in minutiae {
        out.push_str(&format!("{},{},{}\n", m.x, m.y, m.kind));
    }
    out
}

/// One dataset CSV row: `label,c0,c1,...`.
pub fn feature_csv_row(label: &str, fv: &FeatureVector) -> String {
    let mut row = String::from(label);
    for c in &fv.counts {
        row.push(',');
        row.push_str(&c.to_string());
    }
    row.push('\n');
    row
}

/// Paints minutiae over a grayscale base: terminations red, bifurcations
/// green.
pub fn overlay_minutiae(base: &GrayImage, minutiae: &[Minutia]) -> ColorImage {
    let mut img = ColorImage::from_raw(
        base.width(),
        base.height(),
        base.pixels().iter().map(|&v| [v, v, v]).collect(),
    )
    .expect("dimensions come from a valid image");
    for m in minutiae {
        let rgb = match m.kind {
            MinutiaKind::Termination => [255, 0, 0],
            MinutiaKind::Bifurcation => [0, 255, 0],
        };
        img.set(m.x, m.y, rgb);
    }
    img
}
