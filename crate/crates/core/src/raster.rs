//! Grayscale raster with a real-valued working plane, PGM (P5) I/O and
//! first/second moment statistics.

use std::path::Path;

use serde::Serialize;

use crate::error::{domain, Error, Result};

/// Row-major grayscale image. `bit_depth` is the storage depth used when the
/// plane is quantized or written; the working plane itself is `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    width: usize,
    height: usize,
    bit_depth: u8,
    data: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImageStats {
    pub mean: f64,
    /// Population variance (divisor = pixel count).
    pub variance: f64,
    pub min: f64,
    pub max: f64,
}

/// Result of [`Raster::quantize`].
#[derive(Debug, Clone, PartialEq)]
pub struct Quantized {
    pub raster: Raster,
    /// Number of samples that fell outside `[0, maxval]` and were clamped.
    pub clamped: usize,
}

fn check_depth(bit_depth: u8) -> Result<()> {
    match bit_depth {
        8 | 16 => Ok(()),
        d => domain(format!("bit depth must be 8 or 16, got {d}")),
    }
}

impl Raster {
    pub fn new(width: usize, height: usize, bit_depth: u8, data: Vec<f64>) -> Result<Self> {
        check_depth(bit_depth)?;
        if width < 2 || height < 2 {
            return domain(format!("raster must be at least 2x2, got {width}x{height}"));
        }
        if data.len() != width * height {
            return Err(Error::SizeMismatch { expected: width * height, got: data.len() });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return domain(format!("non-finite intensity at index {i}"));
        }
        Ok(Self { width, height, bit_depth, data })
    }

    pub fn filled(width: usize, height: usize, bit_depth: u8, value: f64) -> Result<Self> {
        Self::new(width, height, bit_depth, vec![value; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        bit_depth: u8,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, bit_depth, data)
    }

    /// Same geometry and depth, new plane.
    pub fn with_data(&self, data: Vec<f64>) -> Result<Self> {
        Self::new(self.width, self.height, self.bit_depth, data)
    }

    /// Same plane with a different storage depth.
    pub fn with_depth(self, bit_depth: u8) -> Result<Self> {
        check_depth(bit_depth)?;
        Ok(Self { bit_depth, ..self })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        self.with_data(self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bit_depth(&self) -> u8 {
        self.bit_depth
    }

    pub fn maxval(&self) -> f64 {
        ((1u32 << self.bit_depth) - 1) as f64
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn row(&self, y: usize) -> &[f64] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    /// Rectangular sub-image.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Self> {
        if x0 + w > self.width || y0 + h > self.height {
            return domain(format!(
                "crop {w}x{h}+{x0}+{y0} exceeds {}x{}",
                self.width, self.height
            ));
        }
        let mut data = Vec::with_capacity(w * h);
        for y in y0..y0 + h {
            data.extend_from_slice(&self.row(y)[x0..x0 + w]);
        }
        Self::new(w, h, self.bit_depth, data)
    }

    pub fn stats(&self) -> ImageStats {
        stats(self)
    }

    /// Round half away from zero and clamp to `[0, 2^bit_depth - 1]`.
    pub fn quantize(&self, bit_depth: u8) -> Result<Quantized> {
        check_depth(bit_depth)?;
        let maxval = ((1u32 << bit_depth) - 1) as f64;
        let mut clamped = 0;
        let data = self
            .data
            .iter()
            .map(|&v| {
                let q = v.round();
                if q < 0.0 {
                    clamped += 1;
                    0.0
                } else if q > maxval {
                    clamped += 1;
                    maxval
                } else {
                    q
                }
            })
            .collect();
        let raster = Self::new(self.width, self.height, bit_depth, data)?;
        Ok(Quantized { raster, clamped })
    }

    /// Mean squared difference against another raster of the same size.
    pub fn mse(&self, other: &Raster) -> Result<f64> {
        if self.width != other.width || self.height != other.height {
            return domain(format!(
                "size mismatch {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            ));
        }
        let s: f64 = self.data.iter().zip(&other.data).map(|(a, b)| (a - b) * (a - b)).sum();
        Ok(s / self.len() as f64)
    }
}

pub fn stats(r: &Raster) -> ImageStats {
    let n = r.data.len() as f64;
    let mean = r.data.iter().sum::<f64>() / n;
    let variance = r.data.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let (min, max) = r
        .data
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    ImageStats { mean, variance, min, max }
}

// ---------------------------------------------------------------------------
// PGM (P5)
// ---------------------------------------------------------------------------

struct HeaderCursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> HeaderCursor<'a> {
    fn skip_ws_and_comments(&mut self) {
        while self.pos < self.buf.len() {
            let c = self.buf[self.pos];
            if c == b'#' {
                while self.pos < self.buf.len() && self.buf[self.pos] != b'\n' && self.buf[self.pos] != b'\r' {
                    self.pos += 1;
                }
            } else if c.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> String {
        self.skip_ws_and_comments();
        let start = self.pos;
        while self.pos < self.buf.len() && !self.buf[self.pos].is_ascii_whitespace() && self.buf[self.pos] != b'#' {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.buf[start..self.pos]).into_owned()
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        let tok = self.token();
        tok.parse::<usize>().map_err(|_| Error::Parse {
            token: tok.clone(),
            reason: format!("expected {what}"),
        })
    }
}

/// Parse a binary PGM image. Only maxval 255 and 65535 are accepted; 16-bit
/// samples are big-endian.
pub fn read_pgm(bytes: &[u8]) -> Result<Raster> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        let tok = String::from_utf8_lossy(&bytes[..bytes.len().min(2)]).into_owned();
        return Err(Error::Parse { token: tok, reason: "expected magic P5".into() });
    }
    let mut cur = HeaderCursor { buf: bytes, pos: 2 };
    if cur.pos < bytes.len() && !bytes[cur.pos].is_ascii_whitespace() && bytes[cur.pos] != b'#' {
        let tok = cur.token();
        return Err(Error::Parse { token: format!("P5{tok}"), reason: "expected magic P5".into() });
    }
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval = cur.number("maxval")?;
    let bit_depth = match maxval {
        255 => 8,
        65535 => 16,
        m => {
            return Err(Error::Parse {
                token: m.to_string(),
                reason: "maxval must be 255 or 65535".into(),
            });
        }
    };
    // Exactly one whitespace byte separates the header from the payload.
    if cur.pos >= bytes.len() || !bytes[cur.pos].is_ascii_whitespace() {
        return Err(Error::SizeMismatch { expected: 1, got: 0 });
    }
    cur.pos += 1;
    let payload = &bytes[cur.pos..];
    let bps = if bit_depth == 8 { 1 } else { 2 };
    let expected = width * height * bps;
    if payload.len() != expected {
        return Err(Error::SizeMismatch { expected, got: payload.len() });
    }
    let data = if bps == 1 {
        payload.iter().map(|&b| b as f64).collect()
    } else {
        payload.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]]) as f64).collect()
    };
    Raster::new(width, height, bit_depth, data)
}

/// Serialize as binary PGM with the canonical header `P5\n<w> <h>\n<maxval>\n`.
/// The plane is quantized to the raster's bit depth on the way out.
pub fn write_pgm(r: &Raster) -> Vec<u8> {
    let q = r.quantize(r.bit_depth).expect("bit depth validated at construction").raster;
    let mut out = format!("P5\n{} {}\n{}\n", r.width, r.height, r.maxval() as u32).into_bytes();
    if r.bit_depth == 8 {
        out.extend(q.data.iter().map(|&v| v as u8));
    } else {
        for &v in &q.data {
            out.extend_from_slice(&(v as u16).to_be_bytes());
        }
    }
    out
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<Raster> {
    read_pgm(&std::fs::read(path)?)
}

pub fn save_pgm(r: &Raster, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, write_pgm(r))?;
    Ok(())
}
