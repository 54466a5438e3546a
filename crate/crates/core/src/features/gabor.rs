use std::f64::consts::PI;

use super::{ExtractorKind, FilterBank, Kernel};
use crate::error::{Error, Result};

/// Parameters of the fixed Gabor bank. Wavelength is half the kernel size and
/// the isotropic Gaussian envelope has `σ = 0.4 · size`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaborBankConfig {
    pub kernel_sizes: Vec<usize>,
    /// Orientations in radians.
    pub orientations: Vec<f64>,
    /// Phase offsets in radians.
    pub phases: Vec<f64>,
}

impl Default for GaborBankConfig {
    /// Nine odd sizes spanning 7–31, four orientations and two phases: 72
    /// filters.
    fn default() -> Self {
        GaborBankConfig {
            kernel_sizes: vec![7, 11, 13, 17, 19, 23, 25, 29, 31],
            orientations: vec![0.0, PI / 4.0, PI / 2.0, 3.0 * PI / 4.0],
            phases: vec![0.0, PI / 2.0],
        }
    }
}

impl GaborBankConfig {
    pub fn num_filters(&self) -> usize {
        self.kernel_sizes.len() * self.orientations.len() * self.phases.len()
    }
}

/// Raw (not normalized) Gabor kernel, row-major.
pub fn gabor_kernel(size: usize, orientation: f64, phase: f64) -> Vec<f64> {
    let half = (size / 2) as f64;
    let sigma = 0.4 * size as f64;
    let wavelength = size as f64 / 2.0;
    let (sin_t, cos_t) = orientation.sin_cos();
    let mut out = Vec::with_capacity(size * size);
    for iy in 0..size {
        for ix in 0..size {
            let (x, y) = (ix as f64 - half, iy as f64 - half);
            let xr = x * cos_t + y * sin_t;
            let yr = -x * sin_t + y * cos_t;
            let envelope = (-(xr * xr + yr * yr) / (2.0 * sigma * sigma)).exp();
            out.push(envelope * (2.0 * PI * xr / wavelength + phase).cos());
        }
    }
    out
}

/// Zero-mean, unit-norm Gabor kernels ordered by size, then orientation, then
/// phase.
pub fn build_gabor_bank(cfg: &GaborBankConfig) -> Result<FilterBank> {
    if cfg.kernel_sizes.is_empty() || cfg.orientations.is_empty() || cfg.phases.is_empty() {
        return Err(Error::invalid(
            "Gabor bank needs sizes, orientations and phases",
        ));
    }
    let mut kernels = Vec::with_capacity(cfg.num_filters());
    for &size in &cfg.kernel_sizes {
        if size < 3 || size % 2 == 0 {
            return Err(Error::invalid(format!(
                "Gabor size must be odd and at least 3, got {size}"
            )));
        }
        for &theta in &cfg.orientations {
            for &phase in &cfg.phases {
                let mut k = gabor_kernel(size, theta, phase);
                let mean = k.iter().sum::<f64>() / k.len() as f64;
                k.iter_mut().for_each(|v| *v -= mean);
                let norm = k.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm < 1e-12 {
                    return Err(Error::invalid(format!(
                        "Gabor kernel (size {size}, θ {theta}, φ {phase}) vanishes after centering"
                    )));
                }
                k.iter_mut().for_each(|v| *v /= norm);
                kernels.push(Kernel::new(size, k)?);
            }
        }
    }
    FilterBank::from_kernels(kernels, ExtractorKind::Gabor)
}
