//! Raster containers and intensity-threshold operations.
//!
//! Three grid types share the same row-major layout: [`ColorImage`] for
//! 24-bit RGB input, [`GrayImage`] for 8-bit luminance, and [`BinaryImage`]
//! for 0/1 masks. Coordinates are `x` = column, `y` = row, origin at the
//! top-left.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RasterError {
    #[error("image dimensions must be at least 1x1, got {width}x{height}")]
    EmptyDimensions { width: usize, height: usize },
    #[error("pixel buffer length {got} does not match {width}x{height}")]
    DataLengthMismatch {
        width: usize,
        height: usize,
        got: usize,
    },
    #[error("binary image holds value {value}, expected 0 or 1")]
    NotBinary { value: u8 },
}

/// 24-bit RGB image, one `[r, g, b]` triple per pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorImage {
    width: usize,
    height: usize,
    data: Vec<[u8; 3]>,
}

/// 8-bit grayscale image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

/// Binary mask; every stored value is 0 or 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

fn check_dims(width: usize, height: usize, len: usize) -> Result<(), RasterError> {
    if width == 0 || height == 0 {
        return Err(RasterError::EmptyDimensions { width, height });
    }
    if len != width * height {
        return Err(RasterError::DataLengthMismatch {
            width,
            height,
            got: len,
        });
    }
    Ok(())
}

impl ColorImage {
    pub fn from_raw(width: usize, height: usize, data: Vec<[u8; 3]>) -> Result<Self, RasterError> {
        check_dims(width, height, data.len())?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        assert!(width >= 1 && height >= 1);
        Self {
            width,
            height,
            data: vec![rgb; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        self.data[y * self.width + x] = rgb;
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.data
    }
}

impl GrayImage {
    pub fn from_raw(width: usize, height: usize, data: Vec<u8>) -> Result<Self, RasterError> {
        check_dims(width, height, data.len())?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        assert!(width >= 1 && height >= 1);
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        self.data[y * self.width + x] = value;
    }

    pub fn pixels(&self) -> &[u8] {
        &self.data
    }
}

impl BinaryImage {
    pub fn from_raw(width: usize, height: usize, data: Vec<u8>) -> Result<Self, RasterError> {
        check_dims(width, height, data.len())?;
        if let Some(&value) = data.iter().find(|&&v| v > 1) {
            return Err(RasterError::NotBinary { value });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        assert!(width >= 1 && height >= 1);
        Self {
            width,
            height,
            data: vec![0; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    /// Value at (x, y), or 0 when the coordinate lies outside the image.
    pub fn get_or_zero(&self, x: isize, y: isize) -> u8 {
        if x < 0 || y < 0 || x as usize >= self.width || y as usize >= self.height {
            0
        } else {
            self.data[y as usize * self.width + x as usize]
        }
    }

    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        debug_assert!(value <= 1);
        self.data[y * self.width + x] = value;
    }

    pub fn pixels(&self) -> &[u8] {
        &self.data
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().filter(|&&v| v == 1).count()
    }
}

/// ITU-R 601 luma conversion: `round(0.299 r + 0.587 g + 0.114 b)`.
///
/// The source material never names a formula, so the standard weights are
/// used. Output is clamped to `[0, 255]` and dimensions are preserved.
pub fn to_grayscale(img: &ColorImage) -> GrayImage {
    let data = img
        .pixels()
        .iter()
        .map(|&[r, g, b]| {
            let luma = 0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b);
            luma.round().clamp(0.0, 255.0) as u8
        })
        .collect();
    GrayImage {
        width: img.width,
        height: img.height,
        data,
    }
}

/// Threshold at the arithmetic mean intensity.
///
/// A pixel maps to 1 iff it is strictly greater than the mean of all pixels
/// (computed in double precision), so a constant image binarizes to all
/// zeros and ties go to background.
pub fn binarize_mean(img: &GrayImage) -> BinaryImage {
    let sum: u64 = img.pixels().iter().map(|&v| u64::from(v)).sum();
    let mean = sum as f64 / img.pixels().len() as f64;
    let data = img
        .pixels()
        .iter()
        .map(|&v| u8::from(f64::from(v) > mean))
        .collect();
    BinaryImage {
        width: img.width,
        height: img.height,
        data,
    }
}
