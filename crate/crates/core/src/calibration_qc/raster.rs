use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::QcError;

/// 8-bit grayscale image, row-major, 0 = black.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayRaster {
    pub width: usize,
    pub height: usize,
    pub ppi: u32,
    pub pixels: Vec<u8>,
}

/// Pixel rectangle, half-open on the right and bottom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PixelBox {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl GrayRaster {
    pub fn new(width: usize, height: usize, ppi: u32, pixels: Vec<u8>) -> Result<Self, QcError> {
        if ppi == 0 {
            return Err(QcError::Domain("ppi must be positive".into()));
        }
        if width.checked_mul(height) != Some(pixels.len()) {
            return Err(QcError::Domain(format!(
                "{width}x{height} raster needs {} pixels, got {}",
                width.saturating_mul(height),
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            ppi,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, ppi: u32, value: u8) -> Result<Self, QcError> {
        let n = width
            .checked_mul(height)
            .ok_or_else(|| QcError::Domain("raster too large".into()))?;
        Self::new(width, height, ppi, vec![value; n])
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.pixels[y * self.width + x] = v;
    }

    pub fn row(&self, y: usize) -> &[u8] {
        &self.pixels[y * self.width..(y + 1) * self.width]
    }

    pub fn pixel_pitch_um(&self) -> f64 {
        25_400.0 / self.ppi as f64
    }

    pub fn crop(&self, b: PixelBox) -> Result<GrayRaster, QcError> {
        if b.x + b.width > self.width || b.y + b.height > self.height {
            return Err(QcError::Domain(format!(
                "crop box {b:?} outside {}x{} raster",
                self.width, self.height
            )));
        }
        let mut pixels = Vec::with_capacity(b.width * b.height);
        for y in b.y..b.y + b.height {
            pixels.extend_from_slice(&self.row(y)[b.x..b.x + b.width]);
        }
        GrayRaster::new(b.width, b.height, self.ppi, pixels)
    }

    /// Binary PGM with a `# ppi N` comment after the magic number.
    pub fn to_pgm(&self) -> Vec<u8> {
        let header = format!("P5\n# ppi {}\n{} {}\n255\n", self.ppi, self.width, self.height);
        let mut out = Vec::with_capacity(header.len() + self.pixels.len());
        out.extend_from_slice(header.as_bytes());
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn from_pgm(bytes: &[u8]) -> Result<Self, QcError> {
        let mut pos = 0;
        let mut ppi = None;
        let mut fields = Vec::with_capacity(4);
        while fields.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos >= bytes.len() {
                return Err(QcError::Format("truncated header".into()));
            }
            if bytes[pos] == b'#' {
                let end = bytes[pos..]
                    .iter()
                    .position(|&b| b == b'\n')
                    .map_or(bytes.len(), |i| pos + i);
                let comment = String::from_utf8_lossy(&bytes[pos + 1..end]);
                let mut words = comment.split_whitespace();
                if words.next() == Some("ppi") {
                    ppi = words.next().and_then(|v| v.parse::<u32>().ok());
                }
                pos = end;
                continue;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() && bytes[pos] != b'#' {
                pos += 1;
            }
            fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
        }
        if fields[0] != "P5" {
            return Err(QcError::Format(format!("expected P5 magic, got {:?}", fields[0])));
        }
        let num = |i: usize, what: &str| {
            fields[i]
                .parse::<usize>()
                .map_err(|_| QcError::Format(format!("bad {what} {:?}", fields[i])))
        };
        let (width, height, maxval) = (num(1, "width")?, num(2, "height")?, num(3, "maxval")?);
        if maxval != 255 {
            return Err(QcError::Format(format!("only 8-bit graymaps are supported, maxval {maxval}")));
        }
        // Exactly one whitespace byte separates the header from the data.
        pos += 1;
        let ppi = ppi.ok_or_else(|| QcError::Format("missing `# ppi N` comment".into()))?;
        let n = width * height;
        let data = bytes
            .get(pos..pos + n)
            .ok_or_else(|| QcError::Format(format!("expected {n} pixel bytes")))?;
        GrayRaster::new(width, height, ppi, data.to_vec())
    }

    pub fn write_pgm(&self, path: &Path) -> Result<(), QcError> {
        let mut f = fs::File::create(path).map_err(|e| QcError::io(path, e))?;
        f.write_all(&self.to_pgm()).map_err(|e| QcError::io(path, e))
    }

    pub fn read_pgm(path: &Path) -> Result<Self, QcError> {
        let bytes = fs::read(path).map_err(|e| QcError::io(path, e))?;
        Self::from_pgm(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_round_trip() {
        let r = GrayRaster::new(3, 2, 600, vec![0, 10, 20, 30, 255, 128]).unwrap();
        let bytes = r.to_pgm();
        assert!(bytes.starts_with(b"P5\n# ppi 600\n3 2\n255\n"));
        assert_eq!(GrayRaster::from_pgm(&bytes).unwrap(), r);
    }

    #[test]
    fn pgm_needs_ppi() {
        assert!(matches!(
            GrayRaster::from_pgm(b"P5\n1 1\n255\n\x00"),
            Err(QcError::Format(_))
        ));
        assert!(GrayRaster::from_pgm(b"P5\n# ppi 300\n2 2\n255\n\x00").is_err());
    }

    #[test]
    fn shape_is_checked() {
        assert!(GrayRaster::new(2, 2, 300, vec![0; 3]).is_err());
        assert!(GrayRaster::new(1, 1, 0, vec![0]).is_err());
    }
}
