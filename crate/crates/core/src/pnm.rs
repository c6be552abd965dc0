//! Binary netpbm reading and writing (P5 grayscale, P6 color).
//!
//! Only the 8-bit binary variants are supported: `maxval` must be at most
//! 255. Header comments introduced by `#` are skipped. Binary masks are
//! exchanged as P5 files using 0 for background and 255 for foreground.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use thiserror::Error;

use crate::raster::{BinaryImage, ColorImage, GrayImage, RasterError};

#[derive(Debug, Error)]
pub enum PnmError {
    #[error("i/o failure: {0}")]
    Io(#[from] io::Error),
    #[error("unsupported magic number {found:?}, expected {expected:?}")]
    BadMagic { expected: String, found: String },
    #[error("malformed header: {0}")]
    BadHeader(String),
    #[error("maxval {0} exceeds the supported 8-bit maximum of 255")]
    UnsupportedMaxval(u32),
    #[error("pixel data truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error(transparent)]
    Raster(#[from] RasterError),
}

/// Incremental tokenizer over a PNM header.
struct HeaderScanner<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderScanner<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Result<&'a [u8], PnmError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(PnmError::BadHeader("unexpected end of header".into()));
        }
        Ok(&self.bytes[start..self.pos])
    }

    fn number(&mut self, what: &str) -> Result<u32, PnmError> {
        let tok = self.token()?;
        let text = std::str::from_utf8(tok)
            .map_err(|_| PnmError::BadHeader(format!("{what} is not ASCII")))?;
        text.parse()
            .map_err(|_| PnmError::BadHeader(format!("{what} {text:?} is not a number")))
    }

    /// Consumes the single whitespace byte separating the header from the
    /// raster and returns the remaining bytes.
    fn raster(mut self) -> Result<&'a [u8], PnmError> {
        if self.pos >= self.bytes.len() || !self.bytes[self.pos].is_ascii_whitespace() {
            return Err(PnmError::BadHeader(
                "missing whitespace between header and pixel data".into(),
            ));
        }
        self.pos += 1;
        Ok(&self.bytes[self.pos..])
    }
}

fn parse_header<'a>(
    bytes: &'a [u8],
    expected_magic: &str,
) -> Result<(usize, usize, &'a [u8]), PnmError> {
    let mut scanner = HeaderScanner::new(bytes);
    let magic = scanner.token()?;
    if magic != expected_magic.as_bytes() {
        return Err(PnmError::BadMagic {
            expected: expected_magic.into(),
            found: String::from_utf8_lossy(magic).into_owned(),
        });
    }
    let width = scanner.number("width")? as usize;
    let height = scanner.number("height")? as usize;
    let maxval = scanner.number("maxval")?;
    if maxval > 255 {
        return Err(PnmError::UnsupportedMaxval(maxval));
    }
    if maxval == 0 {
        return Err(PnmError::BadHeader("maxval must be positive".into()));
    }
    let raster = scanner.raster()?;
    Ok((width, height, raster))
}

fn take_exact(raster: &[u8], expected: usize) -> Result<&[u8], PnmError> {
    if raster.len() < expected {
        return Err(PnmError::Truncated {
            expected,
            found: raster.len(),
        });
    }
    Ok(&raster[..expected])
}

/// Decodes a binary PPM (P6) from memory.
pub fn decode_ppm(bytes: &[u8]) -> Result<ColorImage, PnmError> {
    let (width, height, raster) = parse_header(bytes, "P6")?;
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(3))
        .ok_or_else(|| PnmError::BadHeader("dimensions overflow".into()))?;
    let raster = take_exact(raster, expected)?;
    let data = raster.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
    Ok(ColorImage::from_raw(width, height, data)?)
}

/// Decodes a binary PGM (P5) from memory.
pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage, PnmError> {
    let (width, height, raster) = parse_header(bytes, "P5")?;
    let expected = width
        .checked_mul(height)
        .ok_or_else(|| PnmError::BadHeader("dimensions overflow".into()))?;
    let raster = take_exact(raster, expected)?;
    Ok(GrayImage::from_raw(width, height, raster.to_vec())?)
}

pub fn encode_ppm(img: &ColorImage) -> Vec<u8> {
    let mut out = Vec::with_capacity(img.width() * img.height() * 3 + 32);
    write!(out, "P6\n{} {}\n255\n", img.width(), img.height()).expect("vec write");
    for &[r, g, b] in img.pixels() {
        out.extend_from_slice(&[r, g, b]);
    }
    out
}

pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = Vec::with_capacity(img.width() * img.height() + 32);
    write!(out, "P5\n{} {}\n255\n", img.width(), img.height()).expect("vec write");
    out.extend_from_slice(img.pixels());
    out
}

/// Encodes a mask as P5 with foreground 255 and background 0.
pub fn encode_mask(img: &BinaryImage) -> Vec<u8> {
    let mut out = Vec::with_capacity(img.width() * img.height() + 32);
    write!(out, "P5\n{} {}\n255\n", img.width(), img.height()).expect("vec write");
    out.extend(img.pixels().iter().map(|&v| if v == 1 { 255u8 } else { 0 }));
    out
}

/// Reads a mask written by [`encode_mask`]; any nonzero sample counts as
/// foreground.
pub fn decode_mask(bytes: &[u8]) -> Result<BinaryImage, PnmError> {
    let gray = decode_pgm(bytes)?;
    let data = gray.pixels().iter().map(|&v| u8::from(v != 0)).collect();
    Ok(BinaryImage::from_raw(gray.width(), gray.height(), data)?)
}

pub fn read_ppm(path: &Path) -> Result<ColorImage, PnmError> {
    decode_ppm(&fs::read(path)?)
}

pub fn read_pgm(path: &Path) -> Result<GrayImage, PnmError> {
    decode_pgm(&fs::read(path)?)
}

pub fn read_mask(path: &Path) -> Result<BinaryImage, PnmError> {
    decode_mask(&fs::read(path)?)
}

pub fn write_ppm(path: &Path, img: &ColorImage) -> Result<(), PnmError> {
    Ok(fs::write(path, encode_ppm(img))?)
}

pub fn write_pgm(path: &Path, img: &GrayImage) -> Result<(), PnmError> {
    Ok(fs::write(path, encode_pgm(img))?)
}

pub fn write_mask(path: &Path, img: &BinaryImage) -> Result<(), PnmError> {
    Ok(fs::write(path, encode_mask(img))?)
}

/// Reads either a P6 color image (converted to luma) or a P5 grayscale
/// image, selected by the magic number.
pub fn read_gray_auto(path: &Path) -> Result<GrayImage, PnmError> {
    let bytes = fs::read(path)?;
    let mut scanner = HeaderScanner::new(&bytes);
    let magic = scanner.token()?.to_vec();
    match magic.as_slice() {
        b"P6" => Ok(crate::raster::to_grayscale(&decode_ppm(&bytes)?)),
        b"P5" => decode_pgm(&bytes),
        other => Err(PnmError::BadMagic {
            expected: "P5 or P6".into(),
            found: String::from_utf8_lossy(other).into_owned(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_round_trip() {
        let img = GrayImage::from_raw(3, 2, vec![0, 50, 100, 150, 200, 255]).unwrap();
        let encoded = encode_pgm(&img);
        assert_eq!(decode_pgm(&encoded).unwrap(), img);
    }

    #[test]
    fn ppm_round_trip() {
        let img =
            ColorImage::from_raw(2, 2, vec![[1, 2, 3], [4, 5, 6], [7, 8, 9], [10, 11, 12]])
                .unwrap();
        let encoded = encode_ppm(&img);
        assert_eq!(decode_ppm(&encoded).unwrap(), img);
    }

    #[test]
    fn mask_round_trip_uses_0_and_255() {
        let mask = BinaryImage::from_raw(2, 2, vec![1, 0, 0, 1]).unwrap();
        let encoded = encode_mask(&mask);
        let body = &encoded[encoded.len() - 4..];
        assert_eq!(body, &[255, 0, 0, 255]);
        assert_eq!(decode_mask(&encoded).unwrap(), mask);
    }

    #[test]
    fn header_comments_are_skipped() {
        let bytes = b"P5 # comment after magic\n# full-line comment\n2 # width\n1\n255\n\x07\x09";
        let img = decode_pgm(bytes).unwrap();
        assert_eq!(img.width(), 2);
        assert_eq!(img.height(), 1);
        assert_eq!(img.pixels(), &[7, 9]);
    }

    #[test]
    fn rejects_wrong_magic() {
        let err = decode_pgm(b"P6\n1 1\n255\n\x00").unwrap_err();
        assert!(matches!(err, PnmError::BadMagic { .. }), "{err}");
    }

    #[test]
    fn rejects_16_bit_maxval() {
        let err = decode_pgm(b"P5\n1 1\n65535\n\x00\x00").unwrap_err();
        assert!(matches!(err, PnmError::UnsupportedMaxval(65535)), "{err}");
    }

    #[test]
    fn rejects_truncated_raster() {
        let err = decode_pgm(b"P5\n2 2\n255\n\x01\x02").unwrap_err();
        assert!(
            matches!(
                err,
                PnmError::Truncated {
                    expected: 4,
                    found: 2
                }
            ),
            "{err}"
        );
    }

    #[test]
    fn rejects_garbage_header() {
        assert!(decode_pgm(b"P5\nwide tall\n255\n").is_err());
        assert!(decode_pgm(b"P5\n2").is_err());
    }

    #[test]
    fn extra_trailing_bytes_are_ignored() {
        let img = decode_pgm(b"P5\n1 1\n255\n\x2a\xff\xff").unwrap();
        assert_eq!(img.pixels(), &[42]);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sample.pgm");
        let img = GrayImage::from_raw(4, 1, vec![9, 8, 7, 6]).unwrap();
        write_pgm(&path, &img).unwrap();
        assert_eq!(read_pgm(&path).unwrap(), img);
        assert_eq!(read_gray_auto(&path).unwrap(), img);
    }

    #[test]
    fn read_gray_auto_converts_color() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sample.ppm");
        let img = ColorImage::filled(2, 2, [255, 255, 255]);
        write_ppm(&path, &img).unwrap();
        let gray = read_gray_auto(&path).unwrap();
        assert!(gray.pixels().iter().all(|&v| v == 255));
    }
}
