//! A contrario texture anomaly detection.
//!
//! An image is decomposed into a scale pyramid; at each scale a bank of
//! filters (per-image patch PCA, a fixed Gabor bank, or PCA-reduced external
//! deep features) produces decorrelated feature planes. Deviations from the
//! per-feature normality model are scored by their number of false alarms
//! (NFA) at pixel, block or region level, and the scales are fused into one
//! anomaly score map `-log10 NFA`.
//!
//! ```no_run
//! use nfa_inspect::{load_image, Detector, DetectorConfig};
//!
//! let image = load_image("leather.png")?;
//! let detection = Detector::new(DetectorConfig::default())?.detect(&image, &[])?;
//! let mask = detection.mask(0.0);
//! # Ok::<(), nfa_inspect::Error>(())
//! ```

pub mod error;
pub mod evalkit;
pub mod features;
pub mod fusion;
pub mod imagio;
mod linalg;
pub mod nfa;
pub mod pipeline;
pub mod statcore;

pub use error::{Error, Result};
pub use fusion::{fuse_scales, segment, AnomalyMap, Upsampling};
pub use imagio::{load_image, load_mask, ImageStack, MultiLightSet, Plane, Tensor};
pub use nfa::{NfaMap, Strategy};
pub use pipeline::{ChannelResult, Detection, Detector, DetectorConfig, Extractor};
