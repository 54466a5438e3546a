//! End-to-end detector: pyramid, features, distances, NFA and fusion.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::{
    apply_bank, build_gabor_bank, features_from_tensor, fit_patch_pca, FeatureStack, FilterBank,
    GaborBankConfig, PatchPcaConfig, DEFAULT_EXTERNAL_COMPONENTS,
};
use crate::fusion::{fuse_same_size, fuse_scales, AnomalyMap, Upsampling};
use crate::imagio::{build_pyramid, ImageStack, Plane, Tensor};
use crate::nfa::{
    min_combine, nfa_block, nfa_pixel, nfa_region, BlockNfaConfig, BlockRecord, NfaMap,
    RegionNfaConfig, RegionSet, Strategy,
};
use crate::statcore::{component_distance_maps, fit_normality, mahalanobis_map};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Extractor {
    Pca,
    Gabor,
    External,
}

impl Extractor {
    pub fn name(self) -> &'static str {
        match self {
            Extractor::Pca => "pca",
            Extractor::Gabor => "gabor",
            Extractor::External => "external",
        }
    }
}

impl fmt::Display for Extractor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Extractor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pca" => Ok(Extractor::Pca),
            "gabor" => Ok(Extractor::Gabor),
            "external" => Ok(Extractor::External),
            other => Err(Error::invalid(format!("unknown extractor {other:?}"))),
        }
    }
}

/// Detection parameters. Defaults: 45 components of 17×17 patches over 4
/// scales, 51-pixel blocks with stride 10, `p = 0.01`.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorConfig {
    pub extractor: Extractor,
    pub nfa: Strategy,
    pub num_scales: usize,
    pub patch_size: usize,
    /// Components kept; `None` picks the extractor default (45 for patch
    /// PCA, 5 for external features; the Gabor bank size is fixed).
    pub components: Option<usize>,
    pub block_size: usize,
    pub block_stride: usize,
    pub tail_p: f64,
    /// Receptive field override for region and block statistics.
    pub stilde: Option<f64>,
    pub threshold_as: f64,
    /// Components kept from the multi-light PCA.
    pub keep_last: usize,
    pub upsampling: Upsampling,
    /// Leave untested the pixels whose filter support crosses the image
    /// edge.
    pub exclude_border: bool,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            extractor: Extractor::Pca,
            nfa: Strategy::Pixel,
            num_scales: 4,
            patch_size: 17,
            components: None,
            block_size: 51,
            block_stride: 10,
            tail_p: 0.01,
            stilde: None,
            threshold_as: 0.0,
            keep_last: 3,
            upsampling: Upsampling::Bilinear,
            exclude_border: true,
        }
    }
}

impl DetectorConfig {
    pub fn variant(&self) -> String {
        format!("{}+{}", self.extractor, self.nfa)
    }

    pub fn effective_components(&self) -> usize {
        match (self.components, self.extractor) {
            (Some(m), _) => m,
            (None, Extractor::Pca) => 45,
            (None, Extractor::Gabor) => GaborBankConfig::default().num_filters(),
            (None, Extractor::External) => DEFAULT_EXTERNAL_COMPONENTS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_scales == 0 {
            return Err(Error::invalid("at least one scale is required"));
        }
        if !(self.tail_p > 0.0 && self.tail_p < 1.0) {
            return Err(Error::invalid(format!(
                "tail probability must lie in (0, 1), got {}",
                self.tail_p
            )));
        }
        if self.block_stride == 0 {
            return Err(Error::invalid("block stride must be at least 1"));
        }
        if let Some(s) = self.stilde {
            if !(s >= 1.0) {
                return Err(Error::invalid(format!(
                    "receptive field must be at least 1, got {s}"
                )));
            }
        }
        if !(1..=5).contains(&self.keep_last) {
            return Err(Error::invalid(format!(
                "keep-last must lie in 1..=5, got {}",
                self.keep_last
            )));
        }
        match self.extractor {
            Extractor::Pca => PatchPcaConfig {
                patch_size: self.patch_size,
                num_components: self.effective_components(),
            }
            .validate(),
            Extractor::Gabor => {
                if self
                    .components
                    .is_some_and(|m| m != GaborBankConfig::default().num_filters())
                {
                    return Err(Error::invalid(
                        "the Gabor bank has a fixed number of filters",
                    ));
                }
                Ok(())
            }
            Extractor::External => {
                if self.effective_components() == 0 {
                    return Err(Error::invalid("at least one component is required"));
                }
                Ok(())
            }
        }
    }

    /// `key = value` lines for every setting.
    pub fn to_kv(&self) -> Vec<(&'static str, String)> {
        let mut out = vec![
            ("extractor", self.extractor.to_string()),
            ("nfa", self.nfa.to_string()),
            ("scales", self.num_scales.to_string()),
            ("patch-size", self.patch_size.to_string()),
        ];
        if self.extractor != Extractor::Gabor || self.components.is_some() {
            out.push(("components", self.effective_components().to_string()));
        }
        out.extend([
            ("block-size", self.block_size.to_string()),
            ("block-stride", self.block_stride.to_string()),
            ("tail-p", format!("{:?}", self.tail_p)),
        ]);
        if let Some(s) = self.stilde {
            out.push(("stilde", format!("{s:?}")));
        }
        out.extend([
            ("threshold-as", format!("{:?}", self.threshold_as)),
            ("keep-last", self.keep_last.to_string()),
            (
                "upsampling",
                match self.upsampling {
                    Upsampling::Bilinear => "bilinear".into(),
                    Upsampling::Nearest => "nearest".into(),
                },
            ),
            ("exclude-border", self.exclude_border.to_string()),
        ]);
        out
    }

    /// Applies one setting; returns `Ok(false)` for keys it does not own.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::invalid(format!("bad value {value:?} for {key}")))
        }
        let key = key.replace('_', "-");
        match key.as_str() {
            "extractor" => self.extractor = value.parse()?,
            "nfa" => self.nfa = value.parse()?,
            "scales" => self.num_scales = parse(&key, value)?,
            "patch-size" => self.patch_size = parse(&key, value)?,
            "components" => self.components = Some(parse(&key, value)?),
            "block-size" => self.block_size = parse(&key, value)?,
            "block-stride" => self.block_stride = parse(&key, value)?,
            "tail-p" => self.tail_p = parse(&key, value)?,
            "stilde" => self.stilde = Some(parse(&key, value)?),
            "threshold-as" => self.threshold_as = parse(&key, value)?,
            "keep-last" => self.keep_last = parse(&key, value)?,
            "exclude-border" => self.exclude_border = parse(&key, value)?,
            "upsampling" => {
                self.upsampling = match value {
                    "bilinear" => Upsampling::Bilinear,
                    "nearest" => Upsampling::Nearest,
                    other => return Err(Error::invalid(format!("unknown upsampling {other:?}"))),
                }
            }
            _ => return Ok(false),
        }
        Ok(true)
    }
}

/// Maps for one scale and channel.
#[derive(Debug, Clone)]
pub struct ChannelResult {
    pub scale_index: usize,
    pub channel_index: usize,
    pub map: NfaMap,
    pub blocks: Vec<BlockRecord>,
    /// One region set per feature component (region strategy only).
    pub regions: Vec<RegionSet>,
    pub degenerate: bool,
}

#[derive(Debug, Clone)]
pub struct Detection {
    /// Channel-combined map per scale (per feature file for external inputs).
    pub scale_maps: Vec<NfaMap>,
    pub channels: Vec<ChannelResult>,
    pub anomaly: AnomalyMap,
}

impl Detection {
    /// Number of ε-meaningful events: pixels for the pixel statistic, blocks
    /// and regions for the others, summed over scales.
    pub fn count_meaningful(&self, epsilon: f64, strategy: Strategy) -> usize {
        let t = epsilon.log10();
        match strategy {
            Strategy::Pixel => self.scale_maps.iter().map(|m| m.count_below(epsilon)).sum(),
            Strategy::Block => self
                .channels
                .iter()
                .flat_map(|c| &c.blocks)
                .filter(|b| b.log10_nfa < t)
                .count(),
            Strategy::Region => self
                .channels
                .iter()
                .flat_map(|c| &c.regions)
                .flat_map(|s| &s.regions)
                .filter(|r| r.log10_nfa < t)
                .count(),
        }
    }

    pub fn mask(&self, threshold_as: f64) -> Vec<bool> {
        crate::fusion::segment(&self.anomaly, threshold_as)
    }
}

pub struct Detector {
    cfg: DetectorConfig,
    gabor: Option<FilterBank>,
}

impl Detector {
    pub fn new(cfg: DetectorConfig) -> Result<Self> {
        cfg.validate()?;
        let gabor = match cfg.extractor {
            Extractor::Gabor => Some(build_gabor_bank(&GaborBankConfig::default())?),
            _ => None,
        };
        Ok(Detector { cfg, gabor })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.cfg
    }

    /// Runs the detector on an image. External features, when configured,
    /// are given as one tensor per network layer; each is treated as its own
    /// full-resolution scale.
    pub fn detect(&self, image: &ImageStack, external: &[Tensor]) -> Result<Detection> {
        match self.cfg.extractor {
            Extractor::External => self.detect_external(image, external),
            _ => self.detect_pyramid(image),
        }
    }

    fn features(&self, plane: &Plane) -> Result<(FeatureStack, bool)> {
        match self.cfg.extractor {
            Extractor::Pca => {
                let bank = fit_patch_pca(
                    plane,
                    &PatchPcaConfig {
                        patch_size: self.cfg.patch_size,
                        num_components: self.cfg.effective_components(),
                    },
                )?;
                Ok((apply_bank(plane, &bank)?, bank.is_degenerate()))
            }
            Extractor::Gabor => {
                let bank = self.gabor.as_ref().expect("built in new");
                Ok((apply_bank(plane, bank)?, false))
            }
            Extractor::External => unreachable!("external features bypass the pyramid"),
        }
    }

    fn smallest_kernel(&self) -> usize {
        match self.cfg.extractor {
            Extractor::Pca => self.cfg.patch_size,
            _ => self.gabor.as_ref().map_or(1, FilterBank::max_kernel_size),
        }
    }

    fn detect_pyramid(&self, image: &ImageStack) -> Result<Detection> {
        let k = self.cfg.num_scales;
        let pyramid = build_pyramid(image, k)?;
        let need = self.smallest_kernel();
        let top = pyramid.level(k - 1);
        if top.width() < need || top.height() < need {
            return Err(Error::invalid(format!(
                "scale {} is {}x{}, smaller than the {need}x{need} filters; use fewer scales",
                k - 1,
                top.width(),
                top.height()
            )));
        }
        let jobs: Vec<(usize, usize)> = (0..k)
            .flat_map(|s| (0..image.num_channels()).map(move |c| (s, c)))
            .collect();
        let channels = jobs
            .par_iter()
            .map(|&(s, c)| {
                let plane = pyramid.level(s).channel(c);
                let (mut feats, degenerate) = self.features(plane)?;
                feats.scale_index = s;
                feats.channel_index = c;
                self.statistic(&feats, degenerate)
            })
            .collect::<Result<Vec<_>>>()?;
        let scale_maps = (0..k)
            .map(|s| {
                let maps: Vec<NfaMap> = channels
                    .iter()
                    .filter(|r| r.scale_index == s)
                    .map(|r| r.map.clone())
                    .collect();
                let mut m = min_combine(&maps)?;
                m.scale_index = s;
                Ok(m)
            })
            .collect::<Result<Vec<_>>>()?;
        let anomaly = fuse_scales(&scale_maps, self.cfg.upsampling)?;
        Ok(Detection {
            scale_maps,
            channels,
            anomaly,
        })
    }

    fn detect_external(&self, image: &ImageStack, tensors: &[Tensor]) -> Result<Detection> {
        if tensors.is_empty() {
            return Err(Error::invalid("external extractor needs a feature tensor"));
        }
        let m = self.cfg.effective_components();
        let channels = tensors
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let mut feats = features_from_tensor(t, image.width(), image.height(), m)?;
                feats.scale_index = i;
                self.statistic(&feats, false)
            })
            .collect::<Result<Vec<_>>>()?;
        let scale_maps: Vec<NfaMap> = channels.iter().map(|c| c.map.clone()).collect();
        let anomaly = fuse_same_size(&scale_maps)?;
        Ok(Detection {
            scale_maps,
            channels,
            anomaly,
        })
    }

    fn statistic(&self, feats: &FeatureStack, degenerate: bool) -> Result<ChannelResult> {
        let margin = match (self.cfg.exclude_border, self.cfg.extractor) {
            (true, Extractor::Pca | Extractor::Gabor) => feats.independence_length as usize / 2,
            _ => 0,
        };
        let mut feats_owned;
        let feats = match self.cfg.stilde {
            Some(s) => {
                feats_owned = feats.clone();
                feats_owned.independence_length = s;
                &feats_owned
            }
            None => feats,
        };
        let model = fit_normality(feats);
        let mut blocks = Vec::new();
        let mut regions = Vec::new();
        let mut map = match self.cfg.nfa {
            Strategy::Pixel => {
                let mut dist = mahalanobis_map(feats, &model)?;
                dist.clear_border(margin);
                nfa_pixel(&dist)?
            }
            Strategy::Block => {
                let mut dist = mahalanobis_map(feats, &model)?;
                dist.clear_border(margin);
                let (w, h) = dist.d2.dims();
                // coarse levels may be smaller than the block
                let cfg = BlockNfaConfig {
                    block_size: self.cfg.block_size.min(w).min(h),
                    stride: self.cfg.block_stride,
                    tail_p: self.cfg.tail_p,
                    independence_length: None,
                };
                let out = nfa_block(&dist, &cfg)?;
                blocks = out.blocks;
                out.map
            }
            Strategy::Region => {
                let cfg = RegionNfaConfig {
                    independence_length: None,
                    tail_p: self.cfg.tail_p,
                };
                let maps = component_distance_maps(feats, &model)?
                    .into_iter()
                    .enumerate()
                    .map(|(i, mut d)| {
                        d.clear_border(margin);
                        let out = nfa_region(&d, &cfg)?;
                        regions.push(out.regions);
                        let mut m = out.map;
                        m.component = Some(i);
                        Ok(m)
                    })
                    .collect::<Result<Vec<_>>>()?;
                min_combine(&maps)?
            }
        };
        map.scale_index = feats.scale_index;
        map.component = Some(feats.channel_index);
        Ok(ChannelResult {
            scale_index: feats.scale_index,
            channel_index: feats.channel_index,
            map,
            blocks,
            regions,
            degenerate,
        })
    }
}
