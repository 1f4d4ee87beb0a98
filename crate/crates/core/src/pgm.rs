//! Binary PGM (P5, 8-bit) reading and writing.

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::error::Result;
use crate::image::Image;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PgmError {
    #[error("not a PNM file (magic {0:?})")]
    BadMagic(String),
    #[error("unsupported PNM variant {0} (only binary P5 is supported)")]
    UnsupportedFormat(String),
    #[error("malformed PGM header: {0}")]
    MalformedHeader(String),
    #[error("unsupported maxval {0} (only 255 is supported)")]
    UnsupportedMaxval(u64),
    #[error("truncated PGM payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<Image> {
    let bytes = fs::read(path)?;
    decode_pgm(&bytes)
}

pub fn save_pgm(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_pgm(img))?;
    Ok(())
}

pub fn decode_pgm(bytes: &[u8]) -> Result<Image> {
    let mut header = HeaderReader { bytes, pos: 0 };
    let magic = bytes.get(..2).unwrap_or(bytes);
    match magic {
        b"P5" => {}
        [b'P', b'1'..=b'7'] => {
            return Err(PgmError::UnsupportedFormat(String::from_utf8_lossy(magic).into()).into())
        }
        _ => return Err(PgmError::BadMagic(String::from_utf8_lossy(magic).into()).into()),
    }
    header.pos = 2;
    let width = header.number("width")?;
    let height = header.number("height")?;
    let maxval = header.number("maxval")?;
    if maxval != 255 {
        return Err(PgmError::UnsupportedMaxval(maxval).into());
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(header.pos) {
        Some(c) if c.is_ascii_whitespace() => header.pos += 1,
        _ => {
            return Err(PgmError::MalformedHeader("missing whitespace after maxval".into()).into())
        }
    }
    if width == 0 || height == 0 {
        return Err(PgmError::MalformedHeader("zero dimension".into()).into());
    }
    let (width, height) = (width as usize, height as usize);
    let expected = width * height;
    let payload = &bytes[header.pos..];
    if payload.len() < expected {
        return Err(PgmError::Truncated {
            expected,
            found: payload.len(),
        }
        .into());
    }
    let data = payload[..expected]
        .iter()
        .map(|&b| f64::from(b) / 255.0)
        .collect();
    Image::new(height, width, data)
}

/// Encodes as P5 with `round(v·255)` (half rounds up), clamped to `0..=255`.
pub fn encode_pgm(img: &Image) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.data().iter().map(|&v| quantize(v)));
    out
}

#[inline]
pub fn quantize(v: f64) -> u8 {
    (v * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderReader<'_> {
    fn skip_separators(&mut self) {
        while let Some(&c) = self.bytes.get(self.pos) {
            if c.is_ascii_whitespace() {
                self.pos += 1;
            } else if c == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn number(&mut self, field: &str) -> std::result::Result<u64, PgmError> {
        let start = self.pos;
        self.skip_separators();
        if self.pos == start {
            return Err(PgmError::MalformedHeader(format!(
                "expected whitespace before {field}"
            )));
        }
        let digits_start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if self.pos == digits_start {
            return Err(PgmError::MalformedHeader(format!("missing {field}")));
        }
        std::str::from_utf8(&self.bytes[digits_start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| PgmError::MalformedHeader(format!("{field} out of range")))
    }
}
