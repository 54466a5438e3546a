use super::{ImageStack, Plane};
use crate::error::{Error, Result};

/// Successive ceil-halvings of an image, level 0 being the input.
#[derive(Debug, Clone)]
pub struct ScalePyramid {
    levels: Vec<ImageStack>,
}

impl ScalePyramid {
    pub fn levels(&self) -> &[ImageStack] {
        &self.levels
    }

    pub fn num_scales(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, k: usize) -> &ImageStack {
        &self.levels[k]
    }
}

/// Size of pyramid level `k` for a level-0 size `(width, height)`.
pub fn level_size(width: usize, height: usize, k: usize) -> (usize, usize) {
    let mut size = (width, height);
    for _ in 0..k {
        size = (size.0.div_ceil(2), size.1.div_ceil(2));
    }
    size
}

pub fn build_pyramid(img: &ImageStack, num_scales: usize) -> Result<ScalePyramid> {
    if num_scales == 0 {
        return Err(Error::invalid("pyramid needs at least one scale"));
    }
    let (w, h) = level_size(img.width(), img.height(), num_scales - 1);
    if num_scales > 1 && (w < 2 || h < 2) {
        return Err(Error::invalid(format!(
            "{} scales of a {}x{} image would produce a {w}x{h} level",
            num_scales,
            img.width(),
            img.height()
        )));
    }
    let mut levels = Vec::with_capacity(num_scales);
    levels.push(img.clone());
    for _ in 1..num_scales {
        let prev = levels.last().expect("nonempty");
        let next = prev.channels().iter().map(downsample).collect();
        levels.push(ImageStack::new(next)?);
    }
    Ok(ScalePyramid { levels })
}

/// 2×2 box average followed by decimation. A trailing odd row or column is
/// averaged over the samples that exist.
pub fn downsample(plane: &Plane) -> Plane {
    let (w, h) = plane.dims();
    let (nw, nh) = (w.div_ceil(2), h.div_ceil(2));
    Plane::from_fn(nw, nh, |x, y| {
        let (x0, y0) = (2 * x, 2 * y);
        let x1 = (x0 + 1).min(w - 1);
        let y1 = (y0 + 1).min(h - 1);
        let mut sum = 0.0;
        let mut n = 0.0;
        for yy in y0..=y1 {
            for xx in x0..=x1 {
                sum += plane.get(xx, yy);
                n += 1.0;
            }
        }
        sum / n
    })
}
