use nalgebra::DMatrix;

use super::{ImageStack, Plane};
use crate::error::{Error, Result};
use crate::linalg::sorted_symmetric_eigen;

pub const NUM_VIEWS: usize = 5;

/// One diffuse and four grazing-light views of the same sample.
#[derive(Debug, Clone)]
pub struct MultiLightSet {
    views: Vec<Plane>,
}

impl MultiLightSet {
    pub fn new(views: Vec<Plane>) -> Result<Self> {
        if views.len() != NUM_VIEWS {
            return Err(Error::invalid(format!(
                "multi-light set needs {NUM_VIEWS} views, got {}",
                views.len()
            )));
        }
        let dims = views[0].dims();
        if let Some(bad) = views.iter().position(|v| v.dims() != dims) {
            return Err(Error::invalid(format!(
                "view {bad} is {:?}, expected {:?}",
                views[bad].dims(),
                dims
            )));
        }
        Ok(MultiLightSet { views })
    }

    /// Builds the set from five single-channel images.
    pub fn from_stacks(stacks: Vec<ImageStack>) -> Result<Self> {
        let mut views = Vec::with_capacity(stacks.len());
        for (i, s) in stacks.into_iter().enumerate() {
            if s.num_channels() != 1 {
                return Err(Error::invalid(format!(
                    "view {i} has {} channels, expected a single channel",
                    s.num_channels()
                )));
            }
            views.extend(s.into_channels());
        }
        Self::new(views)
    }

    pub fn views(&self) -> &[Plane] {
        &self.views
    }
}

/// Raw per-pixel PCA of the five views.
#[derive(Debug, Clone)]
pub struct MultiLightComponents {
    /// Eigenvalues of the 5×5 view covariance, descending.
    pub eigenvalues: Vec<f64>,
    /// Columns are the eigenvectors, in the same order as `eigenvalues`.
    pub eigenvectors: DMatrix<f64>,
    pub view_means: Vec<f64>,
    /// Mean-subtracted projections, one plane per component.
    pub projections: Vec<Plane>,
}

impl MultiLightComponents {
    /// Inverts the projection, recovering the original views.
    pub fn reconstruct(&self) -> Vec<Plane> {
        let (w, h) = self.projections[0].dims();
        (0..NUM_VIEWS)
            .map(|v| {
                Plane::from_fn(w, h, |x, y| {
                    let mut acc = self.view_means[v];
                    for (j, p) in self.projections.iter().enumerate() {
                        acc += self.eigenvectors[(v, j)] * p.get(x, y);
                    }
                    acc
                })
            })
            .collect()
    }
}

pub fn multilight_components(set: &MultiLightSet) -> MultiLightComponents {
    let views = set.views();
    let n = views[0].len() as f64;
    let view_means: Vec<f64> = views.iter().map(Plane::mean).collect();
    let mut cov = DMatrix::<f64>::zeros(NUM_VIEWS, NUM_VIEWS);
    for i in 0..NUM_VIEWS {
        for j in i..NUM_VIEWS {
            let c = views[i]
                .as_slice()
                .iter()
                .zip(views[j].as_slice())
                .map(|(a, b)| (a - view_means[i]) * (b - view_means[j]))
                .sum::<f64>()
                / n;
            cov[(i, j)] = c;
            cov[(j, i)] = c;
        }
    }
    let (eigenvalues, eigenvectors) = sorted_symmetric_eigen(cov);
    let (w, h) = views[0].dims();
    let projections = (0..NUM_VIEWS)
        .map(|j| {
            let mut data = vec![0.0; w * h];
            for (v, view) in views.iter().enumerate() {
                let e = eigenvectors[(v, j)];
                let m = view_means[v];
                for (d, &x) in data.iter_mut().zip(view.as_slice()) {
                    *d += e * (x - m);
                }
            }
            Plane::new(w, h, data).expect("same dims as views")
        })
        .collect();
    MultiLightComponents {
        eigenvalues,
        eigenvectors,
        view_means,
        projections,
    }
}

/// Projects the five views onto their pixel-wise principal axes and keeps the
/// `keep_last` lowest-variance components, each rescaled to `[0, 1]`.
pub fn multilight_pca(set: &MultiLightSet, keep_last: usize) -> Result<ImageStack> {
    if !(1..=NUM_VIEWS).contains(&keep_last) {
        return Err(Error::invalid(format!(
            "keep_last must be in 1..={NUM_VIEWS}, got {keep_last}"
        )));
    }
    let comps = multilight_components(set);
    let total_std = comps
        .eigenvalues
        .iter()
        .map(|v| v.max(0.0))
        .sum::<f64>()
        .sqrt();
    let planes = comps.projections[NUM_VIEWS - keep_last..]
        .iter()
        .map(|p| rescale_unit(p, total_std))
        .collect();
    ImageStack::new(planes)
}

/// Affine map of a plane onto `[0, 1]`. Planes whose range is numerically
/// zero (relative to `scale`) map to a constant 0.
fn rescale_unit(plane: &Plane, scale: f64) -> Plane {
    let (lo, hi) = plane.min_max();
    let range = hi - lo;
    if range <= 1e-9 * scale.max(f64::MIN_POSITIVE) || range == 0.0 {
        return plane.map(|_| 0.0);
    }
    plane.map(|v| ((v - lo) / range).clamp(0.0, 1.0))
}
