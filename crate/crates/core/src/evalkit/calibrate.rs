//! False-alarm counts of the full detector on synthetic background images.

use rayon::prelude::*;

use super::noise::NoiseSpec;
use crate::error::{Error, Result};
use crate::imagio::ImageStack;
use crate::pipeline::{Detector, DetectorConfig};

pub const CALIBRATION_EPSILONS: [f64; 3] = [1.0, 0.1, 0.01];

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationRow {
    pub epsilon: f64,
    pub total: u64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationReport {
    pub variant: String,
    pub noise: &'static str,
    pub width: usize,
    pub height: usize,
    pub trials: usize,
    pub seed: u64,
    pub rows: Vec<CalibrationRow>,
    /// Meaningful-event count at each ε for every trial, in trial order.
    pub per_trial: Vec<[u64; 3]>,
}

impl CalibrationReport {
    pub fn mean_at(&self, epsilon: f64) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.epsilon == epsilon)
            .map(|r| r.mean)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("variant,noise,width,height,trials,epsilon,total,mean\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{:.6}\n",
                self.variant,
                self.noise,
                self.width,
                self.height,
                self.trials,
                r.epsilon,
                r.total,
                r.mean
            ));
        }
        out
    }
}

/// Runs the detector on `trials` independent noise images of size
/// `width`×`height` and counts ε-meaningful events. Trial `t` uses stream `t`
/// of `seed`, so the report does not depend on scheduling.
pub fn calibrate_h0(
    noise: &NoiseSpec,
    cfg: &DetectorConfig,
    width: usize,
    height: usize,
    trials: usize,
    seed: u64,
) -> Result<CalibrationReport> {
    calibrate_trials(noise, cfg, width, height, 0..trials as u64, seed)
}

/// Same as [`calibrate_h0`] for an explicit range of trial indices, so that
/// long runs can be split and merged.
pub fn calibrate_trials(
    noise: &NoiseSpec,
    cfg: &DetectorConfig,
    width: usize,
    height: usize,
    trials: std::ops::Range<u64>,
    seed: u64,
) -> Result<CalibrationReport> {
    if trials.is_empty() {
        return Err(Error::invalid("at least one trial is required"));
    }
    noise.validate()?;
    let detector = Detector::new(cfg.clone())?;
    let per_trial = trials
        .clone()
        .into_par_iter()
        .map(|t| {
            let mut rng = NoiseSpec::trial_rng(seed, t);
            let plane = noise.sample(width, height, &mut rng)?;
            let det = detector.detect(&ImageStack::from_plane(plane)?, &[])?;
            let mut counts = [0u64; 3];
            for (c, &eps) in counts.iter_mut().zip(&CALIBRATION_EPSILONS) {
                *c = det.count_meaningful(eps, cfg.nfa) as u64;
            }
            Ok(counts)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = CalibrationReport {
        variant: cfg.variant(),
        noise: noise.name(),
        width,
        height,
        trials: per_trial.len(),
        seed,
        rows: Vec::new(),
        per_trial,
    };
    report.rows = summarize(&report.per_trial);
    Ok(report)
}

fn summarize(per_trial: &[[u64; 3]]) -> Vec<CalibrationRow> {
    CALIBRATION_EPSILONS
        .iter()
        .enumerate()
        .map(|(i, &epsilon)| {
            let total: u64 = per_trial.iter().map(|c| c[i]).sum();
            CalibrationRow {
                epsilon,
                total,
                mean: total as f64 / per_trial.len() as f64,
            }
        })
        .collect()
}

/// Concatenates reports of disjoint trial ranges from the same setup.
pub fn merge_reports(parts: &[CalibrationReport]) -> Result<CalibrationReport> {
    let first = parts
        .first()
        .ok_or_else(|| Error::invalid("nothing to merge"))?;
    let mut merged = first.clone();
    for p in &parts[1..] {
        if (p.variant.as_str(), p.noise, p.width, p.height, p.seed)
            != (
                first.variant.as_str(),
                first.noise,
                first.width,
                first.height,
                first.seed,
            )
        {
            return Err(Error::invalid(
                "calibration reports come from different setups",
            ));
        }
        merged.per_trial.extend_from_slice(&p.per_trial);
    }
    merged.trials = merged.per_trial.len();
    merged.rows = summarize(&merged.per_trial);
    Ok(merged)
}
