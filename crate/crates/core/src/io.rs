//! Image file I/O: 8-bit grayscale PGM (P2/P5) and 8-bit grayscale PNG.
//!
//! The PGM writer is the bit-exact interchange path: it emits P5 with
//! maxval 255 and single whitespace separators. PNG goes through the
//! `image` crate for convenience.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::ImageGrid;

/// Loads an 8-bit grayscale image, dispatching on the file extension
/// (`.pgm` -> P2/P5 reader, `.png` -> PNG reader). Samples come back as
/// reals in [0, 255].
pub fn load_image(path: impl AsRef<Path>) -> Result<ImageGrid> {
    let path = path.as_ref();
    match extension_of(path)?.as_str() {
        "pgm" => load_pgm(path),
        "png" => load_png(path),
        ext => Err(Error::format(format!("unsupported image extension .{ext}"))),
    }
}

/// Saves a grid as 8-bit grayscale, quantizing each sample to
/// `round(clamp(sample + offset, 0, 255))`. Format follows the extension:
/// `.pgm` writes binary P5 (maxval 255), `.png` writes 8-bit gray PNG.
pub fn save_image(img: &ImageGrid, path: impl AsRef<Path>, offset: f64) -> Result<()> {
    let path = path.as_ref();
    let bytes = quantize(img, offset);
    match extension_of(path)?.as_str() {
        "pgm" => save_pgm(img.width(), img.height(), &bytes, path),
        "png" => save_png(img.width(), img.height(), bytes, path),
        ext => Err(Error::format(format!("unsupported image extension .{ext}"))),
    }
}

fn extension_of(path: &Path) -> Result<String> {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .ok_or_else(|| Error::format(format!("missing file extension: {}", path.display())))
}

fn quantize(img: &ImageGrid, offset: f64) -> Vec<u8> {
    img.as_slice()
        .iter()
        .map(|&x| (x + offset).clamp(0.0, 255.0).round() as u8)
        .collect()
}

// ---------------------------------------------------------------- PGM

fn load_pgm(path: &Path) -> Result<ImageGrid> {
    let bytes = fs::read(path)?;
    let mut cursor = PgmCursor::new(&bytes);
    let magic = cursor.token()?;
    let binary = match magic.as_str() {
        "P5" => true,
        "P2" => false,
        other => {
            return Err(Error::format(format!(
                "not a PGM file (magic {other:?})"
            )))
        }
    };
    let width: usize = cursor.number()?;
    let height: usize = cursor.number()?;
    let maxval: usize = cursor.number()?;
    if width == 0 || height == 0 {
        return Err(Error::format("PGM with zero dimension".to_string()));
    }
    if maxval == 0 || maxval > 255 {
        return Err(Error::format(format!(
            "only 8-bit PGM supported (maxval {maxval})"
        )));
    }
    let n = width * height;
    let mut data = Vec::with_capacity(n);
    if binary {
        // Exactly one whitespace byte separates the header from the raster.
        let raster = cursor.raster(n)?;
        data.extend(raster.iter().map(|&b| b as f64));
    } else {
        for _ in 0..n {
            let v: usize = cursor.number()?;
            if v > maxval {
                return Err(Error::format(format!(
                    "sample {v} exceeds maxval {maxval}"
                )));
            }
            data.push(v as f64);
        }
    }
    ImageGrid::from_vec(width, height, data)
}

fn save_pgm(width: usize, height: usize, bytes: &[u8], path: &Path) -> Result<()> {
    let mut out = Vec::with_capacity(bytes.len() + 32);
    write!(out, "P5\n{width} {height}\n255\n").expect("write to vec");
    out.extend_from_slice(bytes);
    fs::write(path, out)?;
    Ok(())
}

/// Tokenizer over PGM headers/ASCII rasters: skips whitespace and `#`
/// comments, then hands out the binary raster tail.
struct PgmCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> PgmCursor<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        PgmCursor { bytes, pos: 0 }
    }

    fn skip_ws_and_comments(&mut self) {
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

    fn token(&mut self) -> Result<String> {
        self.skip_ws_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::format("unexpected end of data".to_string()));
        }
        String::from_utf8(self.bytes[start..self.pos].to_vec())
            .map_err(|_| Error::format("non-ASCII token in PGM header".to_string()))
    }

    fn number(&mut self) -> Result<usize> {
        let tok = self.token()?;
        tok.parse::<usize>()
            .map_err(|_| Error::format(format!("expected integer, got {tok:?}")))
    }

    fn raster(&mut self, n: usize) -> Result<&'a [u8]> {
        // Single whitespace byte after the maxval, then raw bytes.
        if self.pos >= self.bytes.len() || !self.bytes[self.pos].is_ascii_whitespace() {
            return Err(Error::format("missing separator before PGM raster".to_string()));
        }
        self.pos += 1;
        let rest = &self.bytes[self.pos..];
        if rest.len() < n {
            return Err(Error::format("unexpected end of data".to_string()));
        }
        Ok(&rest[..n])
    }
}

// ---------------------------------------------------------------- PNG

fn load_png(path: &Path) -> Result<ImageGrid> {
    let img = image::open(path).map_err(|e| Error::format(format!("PNG decode: {e}")))?;
    let gray = match img {
        image::DynamicImage::ImageLuma8(g) => g,
        other => {
            // Accept any representation that is losslessly 8-bit gray.
            let converted = other.to_luma8();
            if image::DynamicImage::from(converted.clone()) != other {
                return Err(Error::format(
                    "only 8-bit grayscale PNG is supported".to_string(),
                ));
            }
            converted
        }
    };
    let (width, height) = (gray.width() as usize, gray.height() as usize);
    let data = gray.into_raw().into_iter().map(|b| b as f64).collect();
    ImageGrid::from_vec(width, height, data)
}

fn save_png(width: usize, height: usize, bytes: Vec<u8>, path: &Path) -> Result<()> {
    let buf = image::GrayImage::from_raw(width as u32, height as u32, bytes)
        .expect("buffer length matches dimensions");
    buf.save(path)
        .map_err(|e| Error::format(format!("PNG encode: {e}")))
}
