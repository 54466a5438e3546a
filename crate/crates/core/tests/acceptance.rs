//! Acceptance gate. Every criterion runs in sequence inside one test so the
//! runtime limits are measured without competing test threads; each prints
//! a single `PASS`, `FAIL` or `SKIP` line.
//!
//! The dataset criteria need MVTec AD on disk: set `MVTEC_AD` to the
//! directory holding the category folders. `MVTEC_FEATURES`, when set, holds
//! exported network features as `<category>/<defect>/<stem>.nfat`.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use nfa_inspect::evalkit::{
    calibrate_trials, evaluate_category, merge_reports, roc_auc, NoiseSpec,
};
use nfa_inspect::features::{apply_bank, fit_patch_pca, PatchPcaConfig};
use nfa_inspect::fusion::{fuse_same_size, segment};
use nfa_inspect::nfa::{
    configuration_log10, min_combine, nfa_region, NfaMap, RegionNfaConfig, Strategy,
};
use nfa_inspect::statcore::{binomial_tail, chi2_cdf, fit_normality, mahalanobis_map, DistanceMap};
use nfa_inspect::{DetectorConfig, Extractor, Plane};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn within(elapsed: Duration, limit: Duration) -> (bool, String) {
    (
        elapsed < limit,
        format!("{:.1}s of {}s", elapsed.as_secs_f64(), limit.as_secs()),
    )
}

// 1
fn special_functions() -> Outcome {
    let start = Instant::now();
    let mut worst_cdf: f64 = 0.0;
    for i in 0..1000 {
        let x = i as f64 * 0.05;
        let want = -(-x / 2.0).exp_m1();
        worst_cdf = worst_cdf.max((chi2_cdf(x, 2.0).unwrap() - want).abs());
    }
    let mut worst_tail: f64 = 0.0;
    for p in [0.01f64, 0.1, 0.5] {
        for n in 0..=30usize {
            let mut pascal = vec![1.0f64; n + 1];
            for i in 1..n {
                pascal[i] = pascal[i - 1] * (n - i + 1) as f64 / i as f64;
                pascal[i] = pascal[i].round();
            }
            let terms: Vec<f64> = (0..=n)
                .map(|j| pascal[j] * p.powi(j as i32) * (1.0 - p).powi((n - j) as i32))
                .collect();
            for k in 0..=n {
                let want: f64 = terms[k..].iter().sum();
                let got = binomial_tail(n as f64, k as f64, p).unwrap();
                worst_tail = worst_tail.max((got - want).abs() / want);
            }
        }
    }
    let (fast, time) = within(start.elapsed(), Duration::from_secs(10));
    verdict(
        worst_cdf <= 1e-10 && worst_tail <= 1e-9 && fast,
        format!("chi2(2) cdf max abs err {worst_cdf:.2e} (≤1e-10), binomial tail max rel err {worst_tail:.2e} (≤1e-9), {time}"),
    )
}

// 2
fn conv_vs_patch() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let s = [3, 5, 7][rng.random_range(0..3)];
        let (w, h) = (rng.random_range(s..=32), rng.random_range(s..=32));
        let m = rng.random_range(1..=s * s);
        let plane = Plane::from_fn(w, h, |_, _| rng.random::<f64>());
        let bank = fit_patch_pca(
            &plane,
            &PatchPcaConfig {
                patch_size: s,
                num_components: m,
            },
        )
        .unwrap();
        let feats = apply_bank(&plane, &bank).unwrap();
        let mean = bank.patch_mean().unwrap();
        let half = s / 2;
        for y in half..h - half {
            for x in half..w - half {
                for (j, kernel) in bank.kernels().iter().enumerate() {
                    let mut dot = 0.0;
                    for dy in 0..s {
                        for dx in 0..s {
                            let q = dy * s + dx;
                            dot += (plane.get(x + dx - half, y + dy - half) - mean[q])
                                * kernel.weights()[q];
                        }
                    }
                    worst = worst.max((feats.planes[j].get(x, y) - dot).abs());
                }
            }
        }
    }
    let (fast, time) = within(start.elapsed(), Duration::from_secs(30));
    verdict(
        worst <= 1e-6 && fast,
        format!("max |conv − patch·kernel| {worst:.2e} (≤1e-6) over 50 planes, {time}"),
    )
}

// 3
fn chi2_fit() -> Outcome {
    let start = Instant::now();
    let s = 17;
    let noise = NoiseSpec::default();
    let mut samples = Vec::new();
    let mut trial = 0;
    while samples.len() < 10_000 {
        let plane = noise
            .sample(256, 256, &mut NoiseSpec::trial_rng(3, trial))
            .unwrap();
        trial += 1;
        let bank = fit_patch_pca(
            &plane,
            &PatchPcaConfig {
                patch_size: s,
                num_components: 3,
            },
        )
        .unwrap();
        let feats = apply_bank(&plane, &bank).unwrap();
        let dist = mahalanobis_map(&feats, &fit_normality(&feats)).unwrap();
        let mut y = s / 2;
        while y + s / 2 < 256 {
            let mut x = s / 2;
            while x + s / 2 < 256 {
                samples.push(dist.d2.get(x, y));
                x += s;
            }
            y += s;
        }
    }
    samples.truncate(10_000);
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    let ks = samples
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = chi2_cdf(v, 3.0).unwrap();
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max);
    let (fast, time) = within(start.elapsed(), Duration::from_secs(60));
    verdict(
        ks <= 0.05 && fast,
        format!("KS(d², χ²(3)) = {ks:.4} (≤0.05) from {trial} images, {time}"),
    )
}

// 4
fn false_alarms() -> Outcome {
    let start = Instant::now();
    let cfg = DetectorConfig::default();
    let noise = NoiseSpec::default();
    let first = calibrate_trials(&noise, &cfg, 256, 256, 0..100, 4).unwrap();
    let rest = calibrate_trials(&noise, &cfg, 256, 256, 100..1000, 4).unwrap();
    let at_one = first.mean_at(1.0).unwrap();
    let all = merge_reports(&[first, rest]).unwrap();
    let at_hundredth = all.mean_at(0.01).unwrap();
    let (fast, time) = within(start.elapsed(), Duration::from_secs(600));
    verdict(
        at_one <= 2.0 && at_hundredth <= 0.02 && fast,
        format!(
            "mean detections ε=1: {at_one:.3} over 100 images (≤2), ε=0.01: {at_hundredth:.4} over {} images (≤0.02), {time}",
            all.trials
        ),
    )
}

// 5
fn region_structure() -> Outcome {
    let start = Instant::now();
    let fixtures: Vec<(usize, usize, Vec<(usize, usize)>)> = vec![
        (
            32,
            32,
            (10..16)
                .flat_map(|y| (8..20).map(move |x| (x, y)))
                .collect(),
        ),
        (
            40,
            24,
            (5..15)
                .flat_map(|y| (5..8).map(move |x| (x, y)))
                .chain((12..15).flat_map(|y| (8..20).map(move |x| (x, y))))
                .collect(),
        ),
        (
            48,
            48,
            (20..29)
                .flat_map(|y| (20..29).map(move |x| (x, y)))
                .filter(|&(x, y)| x == 24 || y == 24)
                .collect(),
        ),
    ];
    let mut decreasing = true;
    let mut exact = true;
    for (w, h, plateau) in &fixtures {
        let mut d2 = Plane::filled(*w, *h, 0.05);
        for &(x, y) in plateau {
            d2.set(x, y, 30.0);
        }
        let dist = DistanceMap {
            d2,
            df: 1.0,
            independence_length: 1.0,
        };
        let out = nfa_region(
            &dist,
            &RegionNfaConfig {
                independence_length: Some(1.0),
                tail_p: 0.01,
            },
        )
        .unwrap();
        for r in &out.regions.regions {
            decreasing &= r.trace.windows(2).all(|t| t[1] < t[0]);
        }
        let mut want: Vec<usize> = plateau.iter().map(|&(x, y)| y * w + x).collect();
        want.sort_unstable();
        exact &= out.regions.regions.len() == 1 && {
            let mut got = out.regions.regions[0].pixels.clone();
            got.sort_unstable();
            got == want
        };
    }
    let term = 10f64.powf(configuration_log10(1.0));
    let term_ok = (term - 1.287486).abs() <= 1e-6;
    let (fast, time) = within(start.elapsed(), Duration::from_secs(60));
    verdict(
        decreasing && exact && term_ok && fast,
        format!(
            "(a) traces strictly decreasing: {decreasing}, (b) plateaus recovered exactly: {exact}, \
             (c) configuration term {term:.7} vs 1.287486 (|Δ| = {:.1e}, ≤1e-6), {time}",
            (term - 1.287486).abs()
        ),
    )
}

fn random_map(rng: &mut ChaCha8Rng, w: usize, h: usize) -> NfaMap {
    NfaMap {
        log10_nfa: Plane::from_fn(w, h, |_, _| rng.random_range(-20.0..5.0)),
        strategy: Strategy::Pixel,
        scale_index: 0,
        component: None,
        log10_tests: ((w * h) as f64).log10(),
    }
}

fn bits(m: &NfaMap) -> Vec<u64> {
    m.log10_nfa.as_slice().iter().map(|v| v.to_bits()).collect()
}

// 6
fn fusion_algebra() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut algebra = true;
    let mut monotone = true;
    for _ in 0..100 {
        let (w, h) = (rng.random_range(1..40), rng.random_range(1..40));
        let (a, b, c) = (
            random_map(&mut rng, w, h),
            random_map(&mut rng, w, h),
            random_map(&mut rng, w, h),
        );
        let ab_c =
            min_combine(&[min_combine(&[a.clone(), b.clone()]).unwrap(), c.clone()]).unwrap();
        let a_bc =
            min_combine(&[a.clone(), min_combine(&[b.clone(), c.clone()]).unwrap()]).unwrap();
        let ba = min_combine(&[b.clone(), a.clone()]).unwrap();
        let ab = min_combine(&[a.clone(), b.clone()]).unwrap();
        let aa = min_combine(&[a.clone(), a.clone()]).unwrap();
        algebra &= bits(&ab_c) == bits(&a_bc) && bits(&ab) == bits(&ba) && bits(&aa) == bits(&a);

        let fused = fuse_same_size(&[a, b, c]).unwrap();
        let mut thresholds: Vec<f64> = (0..6).map(|_| rng.random_range(-5.0..20.0)).collect();
        thresholds.sort_by(f64::total_cmp);
        for t in thresholds.windows(2) {
            let (low, high) = (segment(&fused, t[0]), segment(&fused, t[1]));
            monotone &= high.iter().zip(&low).all(|(&hi, &lo)| !hi || lo);
        }
    }
    let (fast, time) = within(start.elapsed(), Duration::from_secs(10));
    verdict(
        algebra && monotone && fast,
        format!("bitwise min associative/commutative/idempotent: {algebra}, segment monotone: {monotone}, 100 maps, {time}"),
    )
}

const TEXTURES: [&str; 5] = ["carpet", "grid", "leather", "tile", "wood"];

fn mvtec_root() -> Option<PathBuf> {
    std::env::var_os("MVTEC_AD")
        .map(PathBuf::from)
        .filter(|p| p.join("leather").is_dir())
}

fn category_auc_gap(
    root: &Path,
    cat: &str,
    cfg: &DetectorConfig,
    features: Option<&Path>,
) -> (f64, f64) {
    let (row, _) = evaluate_category(&root.join(cat), cfg, features).unwrap();
    let row = row.unwrap_or_else(|| panic!("{cat} has no anomalous and normal pixels"));
    (row.auc, row.gap)
}

// 7 and 8
fn dataset_criteria() -> (Outcome, Outcome) {
    let Some(root) = mvtec_root() else {
        let why = "MVTEC_AD is not set to an MVTec AD directory".to_string();
        return (Outcome::Skip(why.clone()), Outcome::Skip(why));
    };
    let start = Instant::now();
    let pca = DetectorConfig::default();
    let (leather_auc, leather_gap) = category_auc_gap(&root, "leather", &pca, None);
    let gabor = DetectorConfig {
        extractor: Extractor::Gabor,
        ..Default::default()
    };
    let gabor_runs: Vec<(f64, f64)> = TEXTURES
        .iter()
        .map(|c| category_auc_gap(&root, c, &gabor, None))
        .collect();
    let gabor_mean = gabor_runs.iter().map(|r| r.0).sum::<f64>() / gabor_runs.len() as f64;
    let mut gaps = vec![leather_gap];
    gaps.extend(gabor_runs.iter().map(|r| r.1));
    let mut detail = format!("PCA+Pixel leather AUC {leather_auc:.4} (≥0.93), Gabor+Pixel mean AUC {gabor_mean:.4} (≥0.80)");
    let mut ok = leather_auc >= 0.93 && gabor_mean >= 0.80;
    match std::env::var_os("MVTEC_FEATURES").map(PathBuf::from) {
        Some(features) => {
            let resnet = DetectorConfig {
                extractor: Extractor::External,
                nfa: Strategy::Region,
                ..Default::default()
            };
            let (auc, gap) =
                category_auc_gap(&root, "leather", &resnet, Some(&features.join("leather")));
            ok &= auc >= 0.94;
            gaps.push(gap);
            detail.push_str(&format!(", External+Region leather AUC {auc:.4} (≥0.94)"));
        }
        None => detail.push_str(", External+Region row skipped (MVTEC_FEATURES not set)"),
    }
    let (fast, time) = within(start.elapsed(), Duration::from_secs(30 * 60));
    let seven = verdict(ok && fast, format!("{detail}, {time}"));
    let direction = gaps.iter().all(|&g| g > 0.0);
    let eight = verdict(
        leather_gap >= 1.5 && direction,
        format!("PCA+Pixel leather GAP {leather_gap:.3} (≥1.5), positive for all {} variant runs: {direction}", gaps.len()),
    );
    (seven, eight)
}

// 9
fn metric_kernel() -> Outcome {
    let start = Instant::now();
    let hand = roc_auc(&[1.0, 2.0, 3.0, 4.0], &[false, true, false, true]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let scores: Vec<f64> = (0..2000).map(|_| rng.random_range(-3.0..8.0)).collect();
    let labels: Vec<bool> = scores
        .iter()
        .map(|&s| rng.random::<f64>() < 0.2 + 0.05 * s.max(0.0))
        .collect();
    let base = roc_auc(&scores, &labels).unwrap();
    let exp: Vec<f64> = scores.iter().map(|s| 10f64.powf(*s)).collect();
    let cubed: Vec<f64> = scores.iter().map(|s| s.powi(3) + 2.0).collect();
    let drift = (roc_auc(&exp, &labels).unwrap() - base)
        .abs()
        .max((roc_auc(&cubed, &labels).unwrap() - base).abs());
    let (fast, time) = within(start.elapsed(), Duration::from_secs(1));
    verdict(
        (hand - 0.75).abs() < 1e-15 && drift <= 1e-12 && fast,
        format!(
            "four-point AUC {hand} (0.75), monotone-transform drift {drift:.1e} (≤1e-12), {time}"
        ),
    )
}

#[test]
fn acceptance_criteria() {
    let (seven, eight) = dataset_criteria();
    let results = vec![
        ("1 special functions", special_functions()),
        ("2 convolution equals patch projection", conv_vs_patch()),
        ("3 χ² fit of patch-PCA distances", chi2_fit()),
        ("4 false-alarm control under noise", false_alarms()),
        ("5 region NFA structure", region_structure()),
        ("6 fusion and segmentation algebra", fusion_algebra()),
        ("7 MVTec texture ROC AUC", seven),
        ("8 MVTec class gap", eight),
        ("9 ROC AUC kernel", metric_kernel()),
    ];
    let mut failed = Vec::new();
    for (name, outcome) in &results {
        match outcome {
            Outcome::Pass(d) => println!("criterion {name}: PASS  {d}"),
            Outcome::Skip(d) => println!("criterion {name}: SKIP  {d}"),
            Outcome::Fail(d) => {
                println!("criterion {name}: FAIL  {d}");
                failed.push(*name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
