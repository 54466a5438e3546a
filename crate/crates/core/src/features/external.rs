use std::path::Path;

use nalgebra::DMatrix;

use super::{ExtractorKind, FeatureStack};
use crate::error::{Error, Result};
use crate::imagio::{resize_bilinear, Plane, Tensor};
use crate::linalg::sorted_symmetric_eigen;

pub const DEFAULT_EXTERNAL_COMPONENTS: usize = 5;

/// Reads an `NFAT` activation tensor and turns it into decorrelated,
/// full-resolution feature planes.
pub fn ingest_external_features(
    path: impl AsRef<Path>,
    image_width: usize,
    image_height: usize,
    num_components: usize,
) -> Result<FeatureStack> {
    let tensor = Tensor::read(path)?;
    features_from_tensor(&tensor, image_width, image_height, num_components)
}

/// Integral ratio of image size to feature-grid size.
fn grid_stride(tensor: &Tensor, image_width: usize, image_height: usize) -> Result<usize> {
    let sx = image_width as f64 / tensor.width as f64;
    let sy = image_height as f64 / tensor.height as f64;
    let stride = sx.round();
    let consistent = stride >= 1.0
        && sy.round() == stride
        && (stride * tensor.width as f64 - image_width as f64).abs() < stride
        && (stride * tensor.height as f64 - image_height as f64).abs() < stride;
    if !consistent {
        return Err(Error::invalid(format!(
            "{}x{} feature grid does not divide the {image_width}x{image_height} image",
            tensor.width, tensor.height
        )));
    }
    Ok(stride as usize)
}

/// PCA across the tensor channels (one sample per grid position), keeping
/// the top `num_components` projections, each bilinearly upsampled to the
/// image size. The declared stride becomes the independence length.
pub fn features_from_tensor(
    tensor: &Tensor,
    image_width: usize,
    image_height: usize,
    num_components: usize,
) -> Result<FeatureStack> {
    let c = tensor.channels;
    if num_components == 0 || num_components > c {
        return Err(Error::invalid(format!(
            "cannot keep {num_components} components of a {c}-channel tensor"
        )));
    }
    if tensor.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::format("feature tensor holds non-finite values"));
    }
    let stride = grid_stride(tensor, image_width, image_height)?;
    let planes = tensor.planes();
    let n = (tensor.width * tensor.height) as f64;
    let means: Vec<f64> = planes.iter().map(Plane::mean).collect();
    let mut cov = DMatrix::<f64>::zeros(c, c);
    for i in 0..c {
        for j in i..c {
            let v = planes[i]
                .as_slice()
                .iter()
                .zip(planes[j].as_slice())
                .map(|(a, b)| (a - means[i]) * (b - means[j]))
                .sum::<f64>()
                / n;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    let (_, vectors) = sorted_symmetric_eigen(cov);
    let (gw, gh) = (tensor.width, tensor.height);
    let out = (0..num_components)
        .map(|j| {
            let mut data = vec![0.0; gw * gh];
            for (ch, plane) in planes.iter().enumerate() {
                let e = vectors[(ch, j)];
                for (d, &v) in data.iter_mut().zip(plane.as_slice()) {
                    *d += e * (v - means[ch]);
                }
            }
            let grid = Plane::new(gw, gh, data)?;
            Ok(resize_bilinear(&grid, image_width, image_height))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FeatureStack {
        planes: out,
        scale_index: 0,
        channel_index: 0,
        extractor: ExtractorKind::External,
        independence_length: stride as f64,
    })
}
