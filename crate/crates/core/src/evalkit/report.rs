//! Per-category evaluation on a labelled dataset and its reports.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::dataset::{load_dataset, LabeledSample, LoadIssue};
use super::metrics::ClassScores;
use crate::error::{Error, Result};
use crate::imagio::{load_image, load_mask, Tensor};
use crate::pipeline::{Detector, DetectorConfig, Extractor};

const CHUNK: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub category: String,
    pub variant: String,
    pub auc: f64,
    pub gap: f64,
    pub n_pixels: usize,
    pub n_anomalous: usize,
    pub n_samples: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    pub issues: Vec<LoadIssue>,
}

impl EvalReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("category,variant,auc,gap,n_pixels\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{:.6},{:.6},{}",
                r.category, r.variant, r.auc, r.gap, r.n_pixels
            );
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<12} {:<16} AUC {:.4}  GAP {:+.3}  ({} images, {} pixels, {} anomalous)",
                r.category, r.variant, r.auc, r.gap, r.n_samples, r.n_pixels, r.n_anomalous
            );
        }
        if !self.rows.is_empty() {
            let mean = self.rows.iter().map(|r| r.auc).sum::<f64>() / self.rows.len() as f64;
            let _ = writeln!(
                out,
                "mean AUC {mean:.4} over {} categories",
                self.rows.len()
            );
        }
        for i in &self.issues {
            let _ = writeln!(out, "skipped {}: {}", i.path.display(), i.reason);
        }
        out
    }
}

/// Where to find the feature tensor of a sample for the external extractor:
/// `<root>/<defect>/<stem>.nfat`.
pub fn feature_path(features_root: &Path, sample: &LabeledSample) -> PathBuf {
    let stem = sample
        .image
        .file_stem()
        .unwrap_or_default()
        .to_string_lossy();
    features_root
        .join(&sample.defect)
        .join(format!("{stem}.nfat"))
}

fn score_sample(
    detector: &Detector,
    sample: &LabeledSample,
    features_root: Option<&Path>,
) -> Result<(Vec<f64>, Vec<bool>)> {
    let image = load_image(&sample.image)?;
    let tensors = match (detector.config().extractor, features_root) {
        (Extractor::External, Some(root)) => vec![Tensor::read(feature_path(root, sample))?],
        (Extractor::External, None) => {
            return Err(Error::invalid(
                "external extractor needs a feature directory",
            ));
        }
        _ => Vec::new(),
    };
    let det = detector.detect(&image, &tensors)?;
    let labels = match &sample.mask {
        Some(m) => {
            let (w, h, mask) = load_mask(m)?;
            if (w, h) != (image.width(), image.height()) {
                return Err(Error::format(format!(
                    "{} does not match its image size",
                    m.display()
                )));
            }
            mask
        }
        None => vec![false; image.width() * image.height()],
    };
    Ok((det.anomaly.scores.as_slice().to_vec(), labels))
}

/// Evaluates one category directory. Per-image work runs in parallel; pixel
/// scores are merged in sample order so the result is deterministic.
pub fn evaluate_category(
    root: &Path,
    cfg: &DetectorConfig,
    features_root: Option<&Path>,
) -> Result<(Option<EvalRow>, Vec<LoadIssue>)> {
    let ds = load_dataset(root)?;
    let mut issues = ds.issues;
    let detector = Detector::new(cfg.clone())?;
    let mut scores = ClassScores::default();
    let mut n_samples = 0;
    let category = root
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    for chunk in ds.samples.chunks(CHUNK) {
        let results: Vec<_> = chunk
            .par_iter()
            .map(|s| score_sample(&detector, s, features_root))
            .collect();
        for (sample, r) in chunk.iter().zip(results) {
            match r {
                Ok((s, l)) => {
                    scores.extend(&s, &l);
                    n_samples += 1;
                }
                Err(Error::InvalidArgument(msg)) => return Err(Error::InvalidArgument(msg)),
                Err(e) => issues.push(LoadIssue {
                    path: sample.image.clone(),
                    reason: e.to_string(),
                }),
            }
        }
    }
    if scores.anomalous.is_empty() || scores.normal.is_empty() {
        return Ok((None, issues));
    }
    let row = EvalRow {
        category,
        variant: cfg.variant(),
        auc: scores.auc()?,
        gap: scores.gap()?,
        n_pixels: scores.len(),
        n_anomalous: scores.anomalous.len(),
        n_samples,
    };
    Ok((Some(row), issues))
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::{GrayImage, Luma};
    use rand::{Rng, SeedableRng};

    fn write_sample(root: &Path, defect: &str, idx: usize, blob: bool, rng: &mut impl Rng) {
        let dir = root.join("test").join(defect);
        std::fs::create_dir_all(&dir).unwrap();
        let (w, h) = (64u32, 64u32);
        let mut img = GrayImage::new(w, h);
        let mut mask = GrayImage::new(w, h);
        for (x, y, p) in img.enumerate_pixels_mut() {
            let inside = blob && (24..36).contains(&x) && (24..36).contains(&y);
            let v = 100.0 + rng.random::<f64>() * 40.0 + if inside { 80.0 } else { 0.0 };
            *p = Luma([v as u8]);
            if inside {
                mask.put_pixel(x, y, Luma([255]));
            }
        }
        img.save(dir.join(format!("{idx:03}.png"))).unwrap();
        if blob {
            let gt = root.join("ground_truth").join(defect);
            std::fs::create_dir_all(&gt).unwrap();
            mask.save(gt.join(format!("{idx:03}_mask.png"))).unwrap();
        }
    }

    #[test]
    fn evaluates_a_synthetic_category() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().join("synthetic");
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        write_sample(&root, "good", 0, false, &mut rng);
        write_sample(&root, "bump", 0, true, &mut rng);
        write_sample(&root, "bump", 1, true, &mut rng);
        let cfg = DetectorConfig {
            num_scales: 2,
            patch_size: 5,
            components: Some(8),
            ..Default::default()
        };
        let (row, issues) = evaluate_category(&root, &cfg, None).unwrap();
        let row = row.unwrap();
        assert!(issues.is_empty());
        assert_eq!(row.n_samples, 3);
        assert_eq!(row.n_pixels, 3 * 64 * 64);
        assert_eq!(row.n_anomalous, 2 * 144);
        assert!(row.auc > 0.9, "{}", row.auc);
        assert!(row.gap > 0.0);
        let report = EvalReport {
            rows: vec![row],
            issues,
        };
        let csv = report.to_csv();
        assert!(csv.starts_with("category,variant,auc,gap,n_pixels\nsynthetic,pca+pixel,"));
        assert!(report.to_text().contains("mean AUC"));
    }

    #[test]
    fn only_normal_pixels_gives_no_row() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        write_sample(dir.path(), "good", 0, false, &mut rng);
        let cfg = DetectorConfig {
            num_scales: 1,
            patch_size: 5,
            components: Some(4),
            ..Default::default()
        };
        let (row, _) = evaluate_category(dir.path(), &cfg, None).unwrap();
        assert!(row.is_none());
    }
}
