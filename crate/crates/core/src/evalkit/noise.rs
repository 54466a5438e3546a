//! Seeded synthetic background images for H₀ experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::imagio::Plane;

#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSpec {
    /// i.i.d. normal values, clamped to [0, 1].
    Gaussian { mean: f64, std: f64 },
    /// i.i.d. values uniform on [0, 1].
    Uniform,
    /// The source texture with its Fourier phases replaced by random ones.
    /// Keeps the power spectrum and the mean and variance of the source.
    PhaseRandomized { source: Plane },
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec::Gaussian {
            mean: 0.5,
            std: 0.08,
        }
    }
}

impl NoiseSpec {
    pub fn name(&self) -> &'static str {
        match self {
            NoiseSpec::Gaussian { .. } => "gaussian",
            NoiseSpec::Uniform => "uniform",
            NoiseSpec::PhaseRandomized { .. } => "phase",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            NoiseSpec::Gaussian { mean, std }
                if !(mean.is_finite() && *std > 0.0 && std.is_finite()) =>
            {
                Err(Error::invalid(format!(
                    "bad Gaussian noise parameters mean={mean} std={std}"
                )))
            }
            _ => Ok(()),
        }
    }

    /// Generator for trial `trial` of the run seeded with `seed`. Each trial
    /// draws from its own stream so trials can run in any order.
    pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial);
        rng
    }

    /// A `width`×`height` image. Phase randomization ignores the requested
    /// size and returns an image as large as its source.
    pub fn sample(&self, width: usize, height: usize, rng: &mut impl Rng) -> Result<Plane> {
        self.validate()?;
        match self {
            NoiseSpec::Gaussian { mean, std } => {
                let normal = Normal::new(*mean, *std).map_err(|e| Error::invalid(e.to_string()))?;
                let data = (0..width * height)
                    .map(|_| normal.sample(rng).clamp(0.0, 1.0))
                    .collect();
                Plane::new(width, height, data)
            }
            NoiseSpec::Uniform => {
                let data = (0..width * height).map(|_| rng.random::<f64>()).collect();
                Plane::new(width, height, data)
            }
            NoiseSpec::PhaseRandomized { source } => Ok(phase_randomize(source, rng)),
        }
    }
}

fn fft2(data: &mut [Complex<f64>], width: usize, height: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let (row, col) = if inverse {
        (
            planner.plan_fft_inverse(width),
            planner.plan_fft_inverse(height),
        )
    } else {
        (
            planner.plan_fft_forward(width),
            planner.plan_fft_forward(height),
        )
    };
    for r in data.chunks_exact_mut(width) {
        row.process(r);
    }
    let mut column = vec![Complex::default(); height];
    for x in 0..width {
        for y in 0..height {
            column[y] = data[y * width + x];
        }
        col.process(&mut column);
        for y in 0..height {
            data[y * width + x] = column[y];
        }
    }
}

/// Multiplies the spectrum by the unit-modulus phase of the spectrum of a
/// white-noise image. That phase field is Hermitian, so the result stays
/// real.
fn phase_randomize(source: &Plane, rng: &mut impl Rng) -> Plane {
    let (w, h) = source.dims();
    let n = w * h;
    let mut spec: Vec<Complex<f64>> = source
        .as_slice()
        .iter()
        .map(|&v| Complex::new(v, 0.0))
        .collect();
    let mut phase: Vec<Complex<f64>> = (0..n)
        .map(|_| Complex::new(rng.random::<f64>() - 0.5, 0.0))
        .collect();
    fft2(&mut spec, w, h, false);
    fft2(&mut phase, w, h, false);
    for (s, p) in spec.iter_mut().zip(&phase).skip(1) {
        let norm = p.norm();
        if norm > 0.0 {
            *s *= p / norm;
        }
    }
    fft2(&mut spec, w, h, true);
    let raw: Vec<f64> = spec.iter().map(|c| c.re / n as f64).collect();
    let out = Plane::new(w, h, raw).expect("same size as source");
    let (mean, sd) = (out.mean(), out.variance().sqrt());
    let (src_mean, src_sd) = (source.mean(), source.variance().sqrt());
    out.map(|v| {
        let z = if sd > 0.0 { (v - mean) / sd } else { 0.0 };
        (src_mean + z * src_sd).clamp(0.0, 1.0)
    })
}
