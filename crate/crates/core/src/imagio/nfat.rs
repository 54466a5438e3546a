//! `NFAT` float tensor files.
//!
//! Layout: the magic bytes `NFAT`, then four little-endian `u32` fields
//! (`version = 1`, `C`, `H`, `W`), then `C·H·W` little-endian `f32` values in
//! channel-major, row-major order.

use std::fs;
use std::path::Path;

use super::Plane;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"NFAT";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn from_planes(planes: &[Plane]) -> Result<Self> {
        let first = planes
            .first()
            .ok_or_else(|| Error::invalid("tensor needs at least one plane"))?;
        let (width, height) = first.dims();
        let mut data = Vec::with_capacity(planes.len() * width * height);
        for p in planes {
            if p.dims() != (width, height) {
                return Err(Error::invalid("tensor planes differ in size"));
            }
            data.extend(p.as_slice().iter().map(|&v| v as f32));
        }
        Ok(Tensor {
            channels: planes.len(),
            height,
            width,
            data,
        })
    }

    pub fn plane(&self, c: usize) -> Plane {
        let n = self.width * self.height;
        let data = self.data[c * n..(c + 1) * n]
            .iter()
            .map(|&v| v as f64)
            .collect();
        Plane::new(self.width, self.height, data).expect("tensor dims are positive")
    }

    pub fn planes(&self) -> Vec<Plane> {
        (0..self.channels).map(|c| self.plane(c)).collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 4 * self.data.len());
        out.extend_from_slice(MAGIC);
        for field in [
            VERSION,
            self.channels as u32,
            self.height as u32,
            self.width as u32,
        ] {
            out.extend_from_slice(&field.to_le_bytes());
        }
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::format("NFAT header truncated"));
        }
        if &bytes[..4] != MAGIC {
            return Err(Error::format(format!(
                "bad NFAT magic {:?}",
                String::from_utf8_lossy(&bytes[..4])
            )));
        }
        let field = |i: usize| {
            let off = 4 + 4 * i;
            u32::from_le_bytes(bytes[off..off + 4].try_into().expect("4 bytes"))
        };
        let version = field(0);
        if version != VERSION {
            return Err(Error::format(format!("unsupported NFAT version {version}")));
        }
        let (channels, height, width) = (field(1) as usize, field(2) as usize, field(3) as usize);
        if channels == 0 || height == 0 || width == 0 {
            return Err(Error::format(format!(
                "NFAT dimensions {channels}x{height}x{width} must be positive"
            )));
        }
        let count = channels
            .checked_mul(height)
            .and_then(|n| n.checked_mul(width))
            .ok_or_else(|| Error::format("NFAT dimensions overflow"))?;
        let body = &bytes[HEADER_LEN..];
        if body.len() != 4 * count {
            return Err(Error::format(format!(
                "NFAT body holds {} bytes, header promises {}",
                body.len(),
                4 * count
            )));
        }
        let data = body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        Ok(Tensor {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }
}
