//! Ellipse estimation, midpoint rasterization, and elliptic cropping.
//!
//! The face region is approximated by an axis-aligned ellipse centered on
//! the segmented component's centroid. The vertical semi-axis (`semi_major`)
//! is measured from the centroid to the top of the component in the
//! centroid's column; the horizontal semi-axis (`semi_minor`) from the
//! centroid to the component's right edge in the centroid's row. Both are
//! adjustable by scale multipliers.

use thiserror::Error;

use crate::raster::{BinaryImage, GrayImage};

#[derive(Debug, Error, PartialEq)]
pub enum EllipseError {
    #[error("mask has no foreground pixel in the centroid {axis} scan line, or the centroid sits on the component edge")]
    DegenerateAxis { axis: &'static str },
    #[error("axis scale {0} must be finite and positive")]
    InvalidScale(f64),
}

/// Axis-aligned ellipse: `semi_major` runs vertically (rows), `semi_minor`
/// horizontally (columns). Invariant: `semi_major >= semi_minor >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipseSpec {
    pub center: (f64, f64),
    pub semi_major: usize,
    pub semi_minor: usize,
}

impl EllipseSpec {
    /// Center rounded to the pixel grid, as used by rasterization.
    pub fn center_rounded(&self) -> (i64, i64) {
        (self.center.0.round() as i64, self.center.1.round() as i64)
    }
}

/// Measures the ellipse semi-axes from the component extents.
///
/// `semi_major = scale_major * (c.y - y_top)` with `y_top` the topmost
/// foreground row in the column nearest `c.x`; `semi_minor = scale_minor *
/// (x_right - c.x)` with `x_right` the rightmost foreground column in the
/// row nearest `c.y`. Results are rounded, clamped to at least 1 and to the
/// image extent, and `semi_major` is raised to `semi_minor` if the
/// measurement came out flatter than wide, preserving the type invariant.
pub fn estimate_axes(
    mask: &BinaryImage,
    c: (f64, f64),
    scale_major: f64,
    scale_minor: f64,
) -> Result<EllipseSpec, EllipseError> {
    for scale in [scale_major, scale_minor] {
        if !scale.is_finite() || scale <= 0.0 {
            return Err(EllipseError::InvalidScale(scale));
        }
    }
    let width = mask.width();
    let height = mask.height();
    let col = (c.0.round() as i64).clamp(0, width as i64 - 1) as usize;
    let row = (c.1.round() as i64).clamp(0, height as i64 - 1) as usize;

    let y_top = (0..height).find(|&y| mask.get(col, y) == 1);
    let raw_major = match y_top {
        Some(y) if c.1 - y as f64 > 0.0 => c.1 - y as f64,
        _ => return Err(EllipseError::DegenerateAxis { axis: "major" }),
    };
    let x_right = (0..width).rev().find(|&x| mask.get(x, row) == 1);
    let raw_minor = match x_right {
        Some(x) if x as f64 - c.0 > 0.0 => x as f64 - c.0,
        _ => return Err(EllipseError::DegenerateAxis { axis: "minor" }),
    };

    let clamp_axis = |raw: f64, extent: usize| -> usize {
        let bound = extent.saturating_sub(1).max(1);
        (raw.round() as i64).clamp(1, bound as i64) as usize
    };
    let mut semi_major = clamp_axis(raw_major * scale_major, height);
    let semi_minor = clamp_axis(raw_minor * scale_minor, width);
    if semi_major < semi_minor {
        semi_major = semi_minor;
    }
    Ok(EllipseSpec {
        center: c,
        semi_major,
        semi_minor,
    })
}

/// Rasterizes the ellipse boundary with the integer midpoint method.
///
/// Decision variables are the textbook region-1/region-2 forms scaled by 4
/// so all arithmetic stays integral. Points are generated for one quadrant
/// and mirrored four ways; for very flat ellipses region 1 can terminate
/// before reaching the horizontal extreme, so the remaining axis run is
/// filled in explicitly to keep the boundary closed. The returned set is
/// deduplicated and sorted.
pub fn rasterize_ellipse(e: &EllipseSpec) -> Vec<(i64, i64)> {
    let (cx, cy) = e.center_rounded();
    let rx = e.semi_minor as i64; // horizontal
    let ry = e.semi_major as i64; // vertical
    let rx2 = rx * rx;
    let ry2 = ry * ry;

    let mut points = std::collections::BTreeSet::new();
    let mut plot = |dx: i64, dy: i64| {
        for &(sx, sy) in &[(1i64, 1i64), (1, -1), (-1, 1), (-1, -1)] {
            points.insert((cx + sx * dx, cy + sy * dy));
        }
    };

    let mut x = 0i64;
    let mut y = ry;
    plot(x, y);

    // Region 1: |slope| < 1. p = 4*(ry^2 - rx^2*ry + rx^2/4).
    let mut p = 4 * ry2 - 4 * rx2 * ry + rx2;
    while 2 * ry2 * x < 2 * rx2 * y {
        x += 1;
        if p < 0 {
            p += 8 * ry2 * x + 4 * ry2;
        } else {
            y -= 1;
            p += 8 * ry2 * x - 8 * rx2 * y + 4 * ry2;
        }
        plot(x, y);
    }

    // Region 2: p = 4*(ry^2*(x+1/2)^2 + rx^2*(y-1)^2 - rx^2*ry^2).
    let mut p = ry2 * (2 * x + 1) * (2 * x + 1) + 4 * rx2 * (y - 1) * (y - 1) - 4 * rx2 * ry2;
    while y > 0 {
        y -= 1;
        if p > 0 {
            p += -8 * rx2 * y + 4 * rx2;
        } else {
            x += 1;
            p += 8 * ry2 * x - 8 * rx2 * y + 4 * rx2;
        }
        plot(x, y);
    }

    // Flat ellipses exit region 1 with y already 0 short of the extreme;
    // complete the horizontal run so (±rx, 0) is always present.
    while x < rx {
        x += 1;
        plot(x, 0);
    }

    points.into_iter().collect()
}

/// Masks `img` to the ellipse interior.
///
/// A pixel survives iff `(x-cx)^2/b^2 + (y-cy)^2/a^2 <= 1` with the
/// sub-pixel center; everything else becomes 0. Dimensions are preserved
/// so downstream block grids share one coordinate frame, and regions of the
/// ellipse outside the canvas are simply clipped.
pub fn crop_ellipse(img: &GrayImage, e: &EllipseSpec) -> GrayImage {
    let a = e.semi_major as f64;
    let b = e.semi_minor as f64;
    let mut out = GrayImage::filled(img.width(), img.height(), 0);
    for y in 0..img.height() {
        for x in 0..img.width() {
            let dx = x as f64 - e.center.0;
            let dy = y as f64 - e.center.1;
            if (dx / b).powi(2) + (dy / a).powi(2) <= 1.0 {
                out.set(x, y, img.get(x, y));
            }
        }
    }
    out
}
