use matrixmultiply::dgemm;

use super::{ExtractorKind, FeatureStack};
use crate::error::{Error, Result};
use crate::imagio::{reflect_index, Plane};

/// Pixels per GEMM chunk when streaming patches.
pub(crate) const CHUNK_ROWS: usize = 4096;

/// A square, odd-sized correlation kernel stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    size: usize,
    weights: Vec<f64>,
}

impl Kernel {
    pub fn new(size: usize, weights: Vec<f64>) -> Result<Self> {
        if size.is_multiple_of(2) || size == 0 {
            return Err(Error::invalid(format!(
                "kernel size must be odd, got {size}"
            )));
        }
        if weights.len() != size * size {
            return Err(Error::invalid(format!(
                "kernel of size {size} needs {} weights, got {}",
                size * size,
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::invalid("kernel weights must be finite"));
        }
        Ok(Kernel { size, weights })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// A set of kernels applied by cross-correlation. Banks learned by patch PCA
/// also carry the patch mean, which is subtracted before projection.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    pub(crate) kernels: Vec<Kernel>,
    pub(crate) kind: ExtractorKind,
    pub(crate) patch_mean: Option<Vec<f64>>,
    pub(crate) eigenvalues: Vec<f64>,
    pub(crate) degenerate: bool,
}

impl FilterBank {
    /// A bank of arbitrary kernels applied without mean subtraction.
    pub fn from_kernels(kernels: Vec<Kernel>, kind: ExtractorKind) -> Result<Self> {
        if kernels.is_empty() {
            return Err(Error::invalid("filter bank needs at least one kernel"));
        }
        Ok(FilterBank {
            kernels,
            kind,
            patch_mean: None,
            eigenvalues: Vec::new(),
            degenerate: false,
        })
    }

    pub fn kernels(&self) -> &[Kernel] {
        &self.kernels
    }

    pub fn len(&self) -> usize {
        self.kernels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernels.is_empty()
    }

    pub fn kind(&self) -> ExtractorKind {
        self.kind
    }

    pub fn max_kernel_size(&self) -> usize {
        self.kernels.iter().map(Kernel::size).max().unwrap_or(1)
    }

    pub fn patch_mean(&self) -> Option<&[f64]> {
        self.patch_mean.as_deref()
    }

    /// PCA eigenvalues (after flooring) for the kept components; empty for
    /// fixed banks.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Set when the patch covariance was numerically singular.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }
}

/// A plane padded by reflection so every `size × size` patch is a plain slice
/// lookup.
pub(crate) struct PaddedPlane {
    width: usize,
    height: usize,
    half: usize,
    stride: usize,
    data: Vec<f64>,
}

impl PaddedPlane {
    pub(crate) fn new(plane: &Plane, size: usize) -> Self {
        let half = size / 2;
        let (w, h) = plane.dims();
        let stride = w + 2 * half;
        let mut data = Vec::with_capacity(stride * (h + 2 * half));
        for py in 0..h + 2 * half {
            let y = reflect_index(py as isize - half as isize, h);
            for px in 0..stride {
                let x = reflect_index(px as isize - half as isize, w);
                data.push(plane.get(x, y));
            }
        }
        PaddedPlane {
            width: w,
            height: h,
            half,
            stride,
            data,
        }
    }

    pub(crate) fn num_pixels(&self) -> usize {
        self.width * self.height
    }

    /// Padded samples, row-major with `stride` columns.
    pub(crate) fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn stride(&self) -> usize {
        self.stride
    }

    pub(crate) fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Writes the patches of pixels `start..start + rows` (row-major pixel
    /// index) into `out`, one patch of `size²` values per row.
    pub(crate) fn fill_patches(&self, start: usize, rows: usize, out: &mut [f64]) {
        let size = 2 * self.half + 1;
        let k = size * size;
        for r in 0..rows {
            let idx = start + r;
            let (x, y) = (idx % self.width, idx / self.width);
            let dst = &mut out[r * k..(r + 1) * k];
            for dy in 0..size {
                let src = (y + dy) * self.stride + x;
                dst[dy * size..(dy + 1) * size].copy_from_slice(&self.data[src..src + size]);
            }
        }
    }
}

/// `c (rows×n) = a (rows×k) · b (k×n)`, all row-major.
pub(crate) fn matmul(rows: usize, k: usize, n: usize, a: &[f64], b: &[f64], c: &mut [f64]) {
    unsafe {
        dgemm(
            rows,
            k,
            n,
            1.0,
            a.as_ptr(),
            k as isize,
            1,
            b.as_ptr(),
            n as isize,
            1,
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Cross-correlates `plane` with every kernel of `bank` (reflect padding,
/// output the size of the input). For PCA banks the patch mean is
/// subtracted first, so each output value is the projection of the centered
/// patch on the eigenvector.
pub fn apply_bank(plane: &Plane, bank: &FilterBank) -> Result<FeatureStack> {
    let largest = bank.max_kernel_size();
    if plane.width() < largest || plane.height() < largest {
        return Err(Error::invalid(format!(
            "{}x{} plane is smaller than the {largest}x{largest} kernel",
            plane.width(),
            plane.height()
        )));
    }
    let (w, h) = plane.dims();
    let mut outputs: Vec<Vec<f64>> = vec![Vec::new(); bank.len()];

    // group kernels by size so each group shares one patch matrix
    let mut sizes: Vec<usize> = bank.kernels.iter().map(Kernel::size).collect();
    sizes.sort_unstable();
    sizes.dedup();
    for size in sizes {
        let members: Vec<usize> = (0..bank.len())
            .filter(|&i| bank.kernels[i].size == size)
            .collect();
        let k = size * size;
        let n = members.len();
        // k × n weight matrix, row-major
        let mut weights = vec![0.0; k * n];
        let mut offsets = vec![0.0; n];
        for (j, &i) in members.iter().enumerate() {
            let kern = &bank.kernels[i].weights;
            for q in 0..k {
                weights[q * n + j] = kern[q];
            }
            if let Some(mean) = &bank.patch_mean {
                if mean.len() == k {
                    offsets[j] = kern.iter().zip(mean).map(|(a, b)| a * b).sum();
                }
            }
        }
        let padded = PaddedPlane::new(plane, size);
        let total = padded.num_pixels();
        let mut group_out = vec![vec![0.0; total]; n];
        let mut patches = vec![0.0; CHUNK_ROWS * k];
        let mut prod = vec![0.0; CHUNK_ROWS * n];
        let mut start = 0;
        while start < total {
            let rows = CHUNK_ROWS.min(total - start);
            padded.fill_patches(start, rows, &mut patches);
            matmul(
                rows,
                k,
                n,
                &patches[..rows * k],
                &weights,
                &mut prod[..rows * n],
            );
            for r in 0..rows {
                for j in 0..n {
                    group_out[j][start + r] = prod[r * n + j] - offsets[j];
                }
            }
            start += rows;
        }
        for (j, &i) in members.iter().enumerate() {
            outputs[i] = std::mem::take(&mut group_out[j]);
        }
    }

    let planes = outputs
        .into_iter()
        .map(|d| Plane::new(w, h, d))
        .collect::<Result<Vec<_>>>()?;
    Ok(FeatureStack {
        planes,
        scale_index: 0,
        channel_index: 0,
        extractor: bank.kind,
        independence_length: largest as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct correlation with explicit reflect lookups.
    fn correlate(plane: &Plane, kernel: &Kernel) -> Plane {
        let s = kernel.size() as isize;
        let half = s / 2;
        Plane::from_fn(plane.width(), plane.height(), |x, y| {
            let mut acc = 0.0;
            for dy in 0..s {
                for dx in 0..s {
                    acc += kernel.weights()[(dy * s + dx) as usize]
                        * plane.get_reflect(x as isize + dx - half, y as isize + dy - half);
                }
            }
            acc
        })
    }

    fn delta(size: usize) -> Kernel {
        let mut w = vec![0.0; size * size];
        w[size * size / 2] = 1.0;
        Kernel::new(size, w).unwrap()
    }

    #[test]
    fn delta_kernel_is_identity() {
        let p = Plane::from_fn(9, 7, |x, y| ((x * 3 + y * 5) % 8) as f64 / 7.0);
        let bank =
            FilterBank::from_kernels(vec![delta(3), delta(5)], ExtractorKind::Gabor).unwrap();
        let out = apply_bank(&p, &bank).unwrap();
        assert_eq!(out.planes[0], p);
        assert_eq!(out.planes[1], p);
        assert_eq!(out.independence_length, 5.0);
    }

    #[test]
    fn mixed_sizes_match_direct_correlation() {
        let p = Plane::from_fn(12, 10, |x, y| ((x * x + 3 * y) % 13) as f64 / 12.0);
        let k3 = Kernel::new(3, (0..9).map(|i| (i as f64 * 0.7).sin()).collect()).unwrap();
        let k5 = Kernel::new(5, (0..25).map(|i| (i as f64 * 0.3).cos()).collect()).unwrap();
        let bank =
            FilterBank::from_kernels(vec![k5.clone(), k3.clone()], ExtractorKind::Gabor).unwrap();
        let out = apply_bank(&p, &bank).unwrap();
        for (got, k) in out.planes.iter().zip([&k5, &k3]) {
            let want = correlate(&p, k);
            for (a, b) in got.as_slice().iter().zip(want.as_slice()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_plane_gives_zero_features() {
        let p = Plane::filled(8, 8, 0.0);
        let k = Kernel::new(3, (0..9).map(|i| i as f64).collect()).unwrap();
        let bank = FilterBank::from_kernels(vec![k], ExtractorKind::Gabor).unwrap();
        let out = apply_bank(&p, &bank).unwrap();
        assert!(out.planes[0].as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn plane_smaller_than_kernel_is_rejected() {
        let p = Plane::filled(4, 8, 0.0);
        let bank = FilterBank::from_kernels(vec![delta(5)], ExtractorKind::Gabor).unwrap();
        assert!(apply_bank(&p, &bank).is_err());
    }

    #[test]
    fn kernel_validation() {
        assert!(Kernel::new(4, vec![0.0; 16]).is_err());
        assert!(Kernel::new(3, vec![0.0; 8]).is_err());
        assert!(Kernel::new(3, vec![f64::NAN; 9]).is_err());
        assert!(FilterBank::from_kernels(vec![], ExtractorKind::Gabor).is_err());
    }
}
