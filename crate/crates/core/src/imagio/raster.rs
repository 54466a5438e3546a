use std::path::Path;

use image::{DynamicImage, GrayImage, ImageReader};

use super::{ImageStack, Plane};
use crate::error::{Error, Result};

fn open(path: &Path) -> Result<DynamicImage> {
    let reader = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    reader.decode().map_err(|e| match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        image::ImageError::Unsupported(u) => Error::format(format!("{}: {u}", path.display())),
        other => Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::InvalidData, other.to_string()),
        ),
    })
}

/// Reads an 8- or 16-bit grayscale or RGB raster, rescaled to `[0, 1]`.
/// An alpha channel, if present, is dropped.
pub fn load_image(path: impl AsRef<Path>) -> Result<ImageStack> {
    let path = path.as_ref();
    let img = open(path)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let planes = match img {
        DynamicImage::ImageLuma8(buf) => vec![to_plane(w, h, buf.as_raw(), 1, 0, 255.0)],
        DynamicImage::ImageLumaA8(buf) => vec![to_plane(w, h, buf.as_raw(), 2, 0, 255.0)],
        DynamicImage::ImageLuma16(buf) => vec![to_plane(w, h, buf.as_raw(), 1, 0, 65535.0)],
        DynamicImage::ImageLumaA16(buf) => vec![to_plane(w, h, buf.as_raw(), 2, 0, 65535.0)],
        DynamicImage::ImageRgb8(buf) => (0..3)
            .map(|c| to_plane(w, h, buf.as_raw(), 3, c, 255.0))
            .collect(),
        DynamicImage::ImageRgba8(buf) => (0..3)
            .map(|c| to_plane(w, h, buf.as_raw(), 4, c, 255.0))
            .collect(),
        DynamicImage::ImageRgb16(buf) => (0..3)
            .map(|c| to_plane(w, h, buf.as_raw(), 3, c, 65535.0))
            .collect(),
        DynamicImage::ImageRgba16(buf) => (0..3)
            .map(|c| to_plane(w, h, buf.as_raw(), 4, c, 65535.0))
            .collect(),
        other => {
            return Err(Error::format(format!(
                "{}: unsupported pixel type {:?}",
                path.display(),
                other.color()
            )))
        }
    };
    ImageStack::new(planes)
}

fn to_plane<T: Copy + Into<f64>>(
    w: usize,
    h: usize,
    raw: &[T],
    stride: usize,
    offset: usize,
    max: f64,
) -> Plane {
    let data = raw
        .iter()
        .skip(offset)
        .step_by(stride)
        .map(|&v| v.into() / max)
        .collect();
    Plane::new(w, h, data).expect("decoder returned consistent dimensions")
}

/// Reads a ground-truth mask; any nonzero sample in any channel is anomalous.
pub fn load_mask(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<bool>)> {
    let stack = load_image(path)?;
    let (w, h) = (stack.width(), stack.height());
    let mut mask = vec![false; w * h];
    for c in stack.channels() {
        for (m, &v) in mask.iter_mut().zip(c.as_slice()) {
            *m |= v > 0.0;
        }
    }
    Ok((w, h, mask))
}

pub fn save_gray8(
    path: impl AsRef<Path>,
    width: usize,
    height: usize,
    pixels: Vec<u8>,
) -> Result<()> {
    let path = path.as_ref();
    let img = GrayImage::from_raw(width as u32, height as u32, pixels)
        .ok_or_else(|| Error::invalid("pixel buffer does not match dimensions"))?;
    img.save(path).map_err(|e| match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::format(other.to_string()),
    })
}

/// Writes a plane with values in `[0, 1]` as an 8-bit grayscale PNG.
pub fn save_plane_png(path: impl AsRef<Path>, plane: &Plane) -> Result<()> {
    let pixels = plane
        .as_slice()
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    save_gray8(path, plane.width(), plane.height(), pixels)
}
