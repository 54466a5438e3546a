//! Feature extraction: per-image patch PCA filters, a fixed Gabor bank, and
//! PCA-decorrelated external deep-feature tensors.

mod bank;
mod external;
mod gabor;
mod patch_pca;

pub use bank::{apply_bank, FilterBank, Kernel};
pub use external::{features_from_tensor, ingest_external_features, DEFAULT_EXTERNAL_COMPONENTS};
pub use gabor::{build_gabor_bank, gabor_kernel, GaborBankConfig};
pub use patch_pca::{fit_patch_pca, PatchPcaConfig};

use crate::imagio::Plane;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExtractorKind {
    PatchPca,
    Gabor,
    External,
}

impl ExtractorKind {
    pub fn name(self) -> &'static str {
        match self {
            ExtractorKind::PatchPca => "pca",
            ExtractorKind::Gabor => "gabor",
            ExtractorKind::External => "external",
        }
    }
}

/// The `m` feature planes one extractor produced for one scale and channel.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStack {
    pub planes: Vec<Plane>,
    pub scale_index: usize,
    pub channel_index: usize,
    pub extractor: ExtractorKind,
    /// Spacing in pixels beyond which feature values are treated as
    /// independent: the patch or filter size, or the receptive field for
    /// external features.
    pub independence_length: f64,
}

impl FeatureStack {
    pub fn num_components(&self) -> usize {
        self.planes.len()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.planes[0].dims()
    }
}
