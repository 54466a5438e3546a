//! Merging per-scale NFA maps into one full-resolution anomaly score map.

use std::path::Path;

use crate::error::{Error, Result};
use crate::imagio::{level_size, resize_bilinear, resize_nearest, save_gray8, Plane, Tensor};
use crate::nfa::{NfaMap, Strategy};

/// Score range mapped onto `0..=255` in PNG visualizations.
pub const VIS_RANGE: (f64, f64) = (-2.0, 10.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Upsampling {
    #[default]
    Bilinear,
    Nearest,
}

/// Anomaly score `AS = −log10 NFA` at full resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct AnomalyMap {
    pub scores: Plane,
    pub strategies: Vec<Strategy>,
    pub num_scales: usize,
    /// Largest `log10` test count among the fused maps.
    pub log10_tests: f64,
}

impl AnomalyMap {
    pub fn to_tensor(&self) -> Result<Tensor> {
        Tensor::from_planes(std::slice::from_ref(&self.scores))
    }

    /// 8-bit rendering: `AS` clipped to `[-2, 10]`, mapped affinely to
    /// `[0, 255]`.
    pub fn visualization(&self) -> Vec<u8> {
        let (lo, hi) = VIS_RANGE;
        self.scores
            .as_slice()
            .iter()
            .map(|&v| ((v.clamp(lo, hi) - lo) / (hi - lo) * 255.0).round() as u8)
            .collect()
    }

    pub fn save_visualization(&self, path: impl AsRef<Path>) -> Result<()> {
        save_gray8(
            path,
            self.scores.width(),
            self.scores.height(),
            self.visualization(),
        )
    }
}

/// Upsamples each scale's `log10 NFA` to the level-0 size and keeps the
/// element-wise minimum. Map `k` must have the size of pyramid level `k`.
pub fn fuse_scales(maps: &[NfaMap], upsampling: Upsampling) -> Result<AnomalyMap> {
    let first = maps
        .first()
        .ok_or_else(|| Error::invalid("fuse_scales needs at least one map"))?;
    let (w, h) = first.dims();
    let mut fused = Plane::filled(w, h, f64::INFINITY);
    for (k, m) in maps.iter().enumerate() {
        let expected = level_size(w, h, k);
        if m.dims() != expected {
            return Err(Error::invalid(format!(
                "scale {k} map is {:?}, expected {:?} for a {w}x{h} pyramid",
                m.dims(),
                expected
            )));
        }
        let up = match upsampling {
            Upsampling::Bilinear => resize_bilinear(&m.log10_nfa, w, h),
            Upsampling::Nearest => resize_nearest(&m.log10_nfa, w, h),
        };
        for (f, &v) in fused.as_mut_slice().iter_mut().zip(up.as_slice()) {
            if v < *f {
                *f = v;
            }
        }
    }
    let mut strategies: Vec<Strategy> = maps.iter().map(|m| m.strategy).collect();
    strategies.dedup();
    Ok(AnomalyMap {
        scores: fused.map(|v| -v),
        strategies,
        num_scales: maps.len(),
        log10_tests: maps
            .iter()
            .map(|m| m.log10_tests)
            .fold(f64::NEG_INFINITY, f64::max),
    })
}

/// Fuses same-size maps (for example several external feature layers) as if
/// they were one scale.
pub fn fuse_same_size(maps: &[NfaMap]) -> Result<AnomalyMap> {
    let combined = crate::nfa::min_combine(maps)?;
    fuse_scales(std::slice::from_ref(&combined), Upsampling::Bilinear)
}

/// Binary detection mask `AS > threshold_as`. The default threshold 0
/// corresponds to `NFA < 1`.
pub fn segment(map: &AnomalyMap, threshold_as: f64) -> Vec<bool> {
    map.scores
        .as_slice()
        .iter()
        .map(|&v| v > threshold_as)
        .collect()
}

pub fn mask_to_png_bytes(mask: &[bool]) -> Vec<u8> {
    mask.iter().map(|&m| if m { 255 } else { 0 }).collect()
}
