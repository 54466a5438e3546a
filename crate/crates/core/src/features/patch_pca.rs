use nalgebra::DMatrix;

use super::bank::PaddedPlane;
use super::{ExtractorKind, FilterBank, Kernel};
use crate::error::{Error, Result};
use crate::imagio::Plane;
use crate::linalg::sorted_symmetric_eigen;

/// Relative eigenvalue floor, as a fraction of the total patch variance.
const EIGEN_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchPcaConfig {
    pub patch_size: usize,
    pub num_components: usize,
}

impl Default for PatchPcaConfig {
    fn default() -> Self {
        PatchPcaConfig {
            patch_size: 17,
            num_components: 45,
        }
    }
}

impl PatchPcaConfig {
    pub fn validate(&self) -> Result<()> {
        let s = self.patch_size;
        if s < 3 || s.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "patch size must be odd and at least 3, got {s}"
            )));
        }
        if self.num_components == 0 || self.num_components > s * s {
            return Err(Error::invalid(format!(
                "component count must lie in 1..={}, got {}",
                s * s,
                self.num_components
            )));
        }
        Ok(())
    }
}

/// Learns the image's own filters: the top principal directions of all its
/// `s × s` patches (one per pixel, reflect padded), as correlation kernels.
pub fn fit_patch_pca(plane: &Plane, cfg: &PatchPcaConfig) -> Result<FilterBank> {
    cfg.validate()?;
    let s = cfg.patch_size;
    if plane.width() < s || plane.height() < s {
        return Err(Error::invalid(format!(
            "{}x{} plane is smaller than the {s}x{s} patch",
            plane.width(),
            plane.height()
        )));
    }
    let k = s * s;
    let padded = PaddedPlane::new(plane, s);
    let total = padded.num_pixels();
    let shift = plane.mean();
    let (sum, gram) = patch_moments(&padded, s, shift);
    let n = total as f64;
    let mean: Vec<f64> = sum.iter().map(|v| v / n).collect();
    let cov = DMatrix::from_fn(k, k, |i, j| gram[i * k + j] / n - mean[i] * mean[j]);
    let mean: Vec<f64> = mean.iter().map(|v| v + shift).collect();
    let trace: f64 = (0..k).map(|i| cov[(i, i)].max(0.0)).sum();
    let floor = if trace > 0.0 {
        EIGEN_FLOOR * trace
    } else {
        EIGEN_FLOOR * EIGEN_FLOOR
    };

    let (values, vectors) = sorted_symmetric_eigen(cov);
    let m = cfg.num_components;
    let degenerate = values[..m].iter().any(|&v| v < floor);
    let kernels = (0..m)
        .map(|j| Kernel::new(s, vectors.column(j).iter().copied().collect()))
        .collect::<Result<Vec<_>>>()?;
    Ok(FilterBank {
        kernels,
        kind: ExtractorKind::PatchPca,
        patch_mean: Some(mean),
        eigenvalues: values[..m].iter().map(|v| v.max(floor)).collect(),
        degenerate,
    })
}

/// First and second moments of all `s × s` patches of `padded`, shifted by
/// `shift`: the patch sum (length `s²`) and the full `s² × s²` Gram matrix.
///
/// Every Gram entry pairs two patch offsets `a` and `a + lag`; its value is
/// the sum of the lag product image over an image-sized window anchored at
/// `a`. Windows at different anchors share everything but strips narrower
/// than `s`, so each row contributes one long dot product plus short edges.
fn patch_moments(padded: &PaddedPlane, s: usize, shift: f64) -> (Vec<f64>, Vec<f64>) {
    let (w, h) = padded.dims();
    let (pw, ph) = (padded.stride(), h + s - 1);
    let k = s * s;
    let data: Vec<f64> = padded.data().iter().map(|v| v - shift).collect();
    // row_sums[y * s + dx]: sum over x in [dx, dx + w) of the product row y
    let mut row_sums = vec![0.0; ph * s];
    let mut col = vec![0.0; ph + 1];
    let mut sum = vec![0.0; k];
    let mut gram = vec![0.0; k * k];

    for y in 0..ph {
        let r = &data[y * pw..(y + 1) * pw];
        strip_sums(r, r, 0, s, w, &mut row_sums[y * s..(y + 1) * s], |a, _| a);
    }
    column_windows(&row_sums, s, h, ph, 0..s, &mut col, |dy, dx, v| {
        sum[dy * s + dx] = v
    });

    let si = s as isize;
    for ly in 0..s {
        for lx in (1 - si)..si {
            if ly == 0 && lx < 0 {
                continue;
            }
            let rows = ph - ly;
            let lo = (-lx).max(0) as usize;
            let hi = s - lx.max(0) as usize;
            for y in 0..rows {
                let r1 = &data[y * pw..(y + 1) * pw];
                let r2 = &data[(y + ly) * pw..(y + ly + 1) * pw];
                strip_sums(
                    r1,
                    r2,
                    lx,
                    s,
                    w,
                    &mut row_sums[y * s..(y + 1) * s],
                    |a, b| a * b,
                );
            }
            column_windows(&row_sums, s, h, rows, lo..hi, &mut col, |dy, dx, v| {
                let a = dy * s + dx;
                let b = (dy + ly) * s + (dx as isize + lx) as usize;
                gram[a * k + b] = v;
                gram[b * k + a] = v;
            });
        }
    }
    (sum, gram)
}

/// Sums `h` consecutive rows of each column `dx` of `row_sums` for every
/// start row `dy`.
fn column_windows(
    row_sums: &[f64],
    s: usize,
    h: usize,
    rows: usize,
    dx_range: std::ops::Range<usize>,
    col: &mut [f64],
    mut store: impl FnMut(usize, usize, f64),
) {
    for dx in dx_range {
        for y in 0..rows {
            col[y + 1] = col[y] + row_sums[y * s + dx];
        }
        for dy in 0..=rows - h {
            store(dy, dx, col[dy + h] - col[dy]);
        }
    }
}

/// For each anchor `dx` whose shifted window stays inside the row, writes
/// `Σ_{x ∈ [dx, dx + w)} f(r1[x], r2[x + lag])` into `out[dx]`.
fn strip_sums(
    r1: &[f64],
    r2: &[f64],
    lag: isize,
    s: usize,
    w: usize,
    out: &mut [f64],
    f: impl Fn(f64, f64) -> f64,
) {
    let at = |x: usize| f(r1[x], r2[(x as isize + lag) as usize]);
    let lo = (-lag).max(0) as usize;
    let hi = s - lag.max(0) as usize;
    // shared core [s - 1, w)
    let core = if w >= s {
        let start = s - 1;
        let (a, b) = (
            &r1[start..w],
            &r2[(start as isize + lag) as usize..(w as isize + lag) as usize],
        );
        let mut acc = [0.0; 4];
        let mut ca = a.chunks_exact(4);
        let mut cb = b.chunks_exact(4);
        for (x, y) in (&mut ca).zip(&mut cb) {
            for i in 0..4 {
                acc[i] += f(x[i], y[i]);
            }
        }
        let tail: f64 = ca
            .remainder()
            .iter()
            .zip(cb.remainder())
            .map(|(&x, &y)| f(x, y))
            .sum();
        (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
    } else {
        0.0
    };
    for dx in lo..hi {
        let out_dx = if w >= s {
            let left: f64 = (dx..s - 1).map(at).sum();
            let right: f64 = (w..dx + w).map(at).sum();
            core + left + right
        } else {
            (dx..dx + w).map(at).sum()
        };
        out[dx] = out_dx;
    }
}
