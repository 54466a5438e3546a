use crate::error::{Error, Result};
use crate::features::FeatureStack;
use crate::imagio::Plane;

/// Per-feature Gaussian model of normality estimated from the whole image.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalityModel {
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
    /// Absolute floor applied to every variance.
    pub variance_floor: f64,
}

impl NormalityModel {
    pub fn num_components(&self) -> usize {
        self.means.len()
    }
}

/// Squared distances to normality, with the χ² degrees of freedom they follow
/// under the background model.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMap {
    pub d2: Plane,
    pub df: f64,
    /// Spacing in pixels beyond which samples are treated as independent.
    pub independence_length: f64,
}

impl DistanceMap {
    pub fn width(&self) -> usize {
        self.d2.width()
    }

    pub fn height(&self) -> usize {
        self.d2.height()
    }

    /// Zeroes the distances of pixels closer than `margin` to the image
    /// edge; no NFA statistic can flag them afterwards.
    pub fn clear_border(&mut self, margin: usize) {
        let (w, h) = self.d2.dims();
        for y in 0..h {
            for x in 0..w {
                if x < margin || y < margin || x + margin >= w || y + margin >= h {
                    self.d2.set(x, y, 0.0);
                }
            }
        }
    }
}

pub fn fit_normality(stack: &FeatureStack) -> NormalityModel {
    let (means, raw): (Vec<f64>, Vec<f64>) = stack
        .planes
        .iter()
        .map(|p| (p.mean(), p.variance()))
        .unzip();
    let mean_var = raw.iter().sum::<f64>() / raw.len() as f64;
    let variance_floor = (1e-9 * mean_var).max(1e-12);
    NormalityModel {
        means,
        variances: raw.iter().map(|v| v.max(variance_floor)).collect(),
        variance_floor,
    }
}

fn check_match(stack: &FeatureStack, model: &NormalityModel) -> Result<()> {
    if stack.planes.len() != model.num_components() {
        return Err(Error::invalid(format!(
            "feature stack has {} planes, model has {} components",
            stack.planes.len(),
            model.num_components()
        )));
    }
    Ok(())
}

/// Joint squared Mahalanobis distance over all components (`df = m`).
pub fn mahalanobis_map(stack: &FeatureStack, model: &NormalityModel) -> Result<DistanceMap> {
    check_match(stack, model)?;
    let (w, h) = stack.planes[0].dims();
    let mut d2 = vec![0.0; w * h];
    for ((plane, mu), var) in stack.planes.iter().zip(&model.means).zip(&model.variances) {
        let inv = 1.0 / var;
        for (acc, &a) in d2.iter_mut().zip(plane.as_slice()) {
            let z = a - mu;
            *acc += z * z * inv;
        }
    }
    Ok(DistanceMap {
        d2: Plane::new(w, h, d2)?,
        df: model.num_components() as f64,
        independence_length: stack.independence_length,
    })
}

/// One single-degree-of-freedom distance map per component.
pub fn component_distance_maps(
    stack: &FeatureStack,
    model: &NormalityModel,
) -> Result<Vec<DistanceMap>> {
    check_match(stack, model)?;
    Ok(stack
        .planes
        .iter()
        .zip(&model.means)
        .zip(&model.variances)
        .map(|((plane, mu), var)| DistanceMap {
            d2: plane.map(|a| (a - mu) * (a - mu) / var),
            df: 1.0,
            independence_length: stack.independence_length,
        })
        .collect())
}
