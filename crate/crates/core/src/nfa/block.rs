use super::{NfaMap, Strategy};
use crate::error::{Error, Result};
use crate::imagio::Plane;
use crate::statcore::{chi2_quantile, log10_binomial_tail, DistanceMap};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockNfaConfig {
    /// Block side `w` in pixels.
    pub block_size: usize,
    pub stride: usize,
    /// Tail probability defining the candidate threshold `τ`.
    pub tail_p: f64,
    /// Overrides the distance map's independence length `s`.
    pub independence_length: Option<f64>,
}

impl Default for BlockNfaConfig {
    fn default() -> Self {
        BlockNfaConfig {
            block_size: 51,
            stride: 10,
            tail_p: 0.01,
            independence_length: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockRecord {
    /// Top-left corner.
    pub x: usize,
    pub y: usize,
    /// Number of candidates `|L_B|` in the block.
    pub candidates: usize,
    pub log10_nfa: f64,
}

#[derive(Debug, Clone)]
pub struct BlockNfa {
    pub map: NfaMap,
    pub blocks: Vec<BlockRecord>,
    pub threshold: f64,
}

/// Block origins along one axis: every `stride` pixels, plus a final block
/// flush with the far edge so that every pixel is covered.
fn origins(len: usize, block: usize, stride: usize) -> Vec<usize> {
    let last = len - block;
    let mut out: Vec<usize> = (0..=last).step_by(stride).collect();
    if *out.last().expect("nonempty") != last {
        out.push(last);
    }
    out
}

/// `log10` of the block NFA `(HW / w²) · s² · B(w²/s², |L_B|/s², p)`.
pub fn block_log10_nfa(
    width: usize,
    height: usize,
    block: usize,
    s: f64,
    candidates: usize,
    p: f64,
) -> Result<f64> {
    let w2 = (block * block) as f64;
    let n = w2 / (s * s);
    let k = candidates as f64 / (s * s);
    let log10_tests = ((width * height) as f64 * s * s / w2).log10();
    Ok(log10_tests + log10_binomial_tail(n, k, p)?)
}

/// Detects unusual concentrations of over-threshold pixels in sliding
/// `w × w` blocks. Each pixel receives the smallest NFA of the blocks that
/// cover it.
pub fn nfa_block(dist: &DistanceMap, cfg: &BlockNfaConfig) -> Result<BlockNfa> {
    let (width, height) = dist.d2.dims();
    let w = cfg.block_size;
    let s = cfg.independence_length.unwrap_or(dist.independence_length);
    if !(s >= 1.0) {
        return Err(Error::invalid(format!(
            "independence length must be at least 1, got {s}"
        )));
    }
    if (w as f64) < s {
        return Err(Error::invalid(format!(
            "block size {w} is smaller than the independence length {s}"
        )));
    }
    if cfg.stride == 0 {
        return Err(Error::invalid("block stride must be at least 1"));
    }
    if width < w || height < w {
        return Err(Error::invalid(format!(
            "{width}x{height} map is smaller than the {w}x{w} block"
        )));
    }
    let threshold = chi2_quantile(1.0 - cfg.tail_p, dist.df)?;

    // summed-area table of the candidate indicator
    let stride_i = width + 1;
    let mut integral = vec![0usize; (width + 1) * (height + 1)];
    for y in 0..height {
        let mut row = 0;
        for x in 0..width {
            row += usize::from(dist.d2.get(x, y) > threshold);
            integral[(y + 1) * stride_i + x + 1] = integral[y * stride_i + x + 1] + row;
        }
    }
    let count = |x: usize, y: usize| {
        integral[(y + w) * stride_i + x + w] + integral[y * stride_i + x]
            - integral[y * stride_i + x + w]
            - integral[(y + w) * stride_i + x]
    };

    let w2 = (w * w) as f64;
    let log10_tests = ((width * height) as f64 * s * s / w2).log10();
    let mut out = Plane::filled(width, height, f64::INFINITY);
    let mut blocks = Vec::new();
    for &y0 in &origins(height, w, cfg.stride) {
        for &x0 in &origins(width, w, cfg.stride) {
            let candidates = count(x0, y0);
            let log10_nfa = block_log10_nfa(width, height, w, s, candidates, cfg.tail_p)?;
            blocks.push(BlockRecord {
                x: x0,
                y: y0,
                candidates,
                log10_nfa,
            });
            for y in y0..y0 + w {
                let row = &mut out.as_mut_slice()[y * width + x0..y * width + x0 + w];
                for v in row {
                    if log10_nfa < *v {
                        *v = log10_nfa;
                    }
                }
            }
        }
    }
    Ok(BlockNfa {
        map: NfaMap {
            log10_nfa: out,
            strategy: Strategy::Block,
            scale_index: 0,
            component: None,
            log10_tests,
        },
        blocks,
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist_with(
        width: usize,
        height: usize,
        s: f64,
        hot: impl Fn(usize, usize) -> bool,
    ) -> DistanceMap {
        DistanceMap {
            d2: Plane::from_fn(width, height, |x, y| if hot(x, y) { 100.0 } else { 0.0 }),
            df: 2.0,
            independence_length: s,
        }
    }

    #[test]
    fn empty_block_has_maximal_nfa() {
        let d = dist_with(20, 20, 2.0, |_, _| false);
        let cfg = BlockNfaConfig {
            block_size: 10,
            stride: 5,
            ..Default::default()
        };
        let out = nfa_block(&d, &cfg).unwrap();
        let max = (400.0 * 4.0 / 100.0f64).log10();
        assert!(out
            .map
            .log10_nfa
            .as_slice()
            .iter()
            .all(|&v| (v - max).abs() < 1e-12));
        assert_eq!(out.blocks.len(), 9);
    }

    #[test]
    fn number_of_tests_for_default_settings() {
        let nt: f64 = 1024.0 * 1024.0 * 289.0 / 2601.0;
        assert!((nt - 116_508.4).abs() < 0.1);
        let got = block_log10_nfa(1024, 1024, 51, 17.0, 0, 0.01).unwrap();
        assert!((10f64.powf(got) - nt).abs() / nt < 1e-12);
    }

    #[test]
    fn saturated_block() {
        let d = dist_with(51, 51, 17.0, |_, _| true);
        let out = nfa_block(&d, &BlockNfaConfig::default()).unwrap();
        let nt: f64 = 51.0 * 51.0 * 289.0 / 2601.0;
        let want = nt.log10() + 9.0 * 0.01f64.log10();
        assert_eq!(out.blocks.len(), 1);
        assert_eq!(out.blocks[0].candidates, 2601);
        assert!((out.blocks[0].log10_nfa - want).abs() < 1e-9);
    }

    #[test]
    fn pixels_take_min_over_covering_blocks() {
        let d = dist_with(30, 30, 2.0, |x, y| x >= 20 && y >= 20);
        let cfg = BlockNfaConfig {
            block_size: 10,
            stride: 5,
            ..Default::default()
        };
        let out = nfa_block(&d, &cfg).unwrap();
        let best = out
            .blocks
            .iter()
            .map(|b| b.log10_nfa)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(out.map.log10_nfa.get(25, 25), best);
        for b in &out.blocks {
            for y in b.y..b.y + 10 {
                for x in b.x..b.x + 10 {
                    assert!(out.map.log10_nfa.get(x, y) <= b.log10_nfa);
                }
            }
        }
    }

    #[test]
    fn nonincreasing_in_candidate_count() {
        let mut prev = f64::INFINITY;
        for c in 0..=2601 {
            let v = block_log10_nfa(256, 256, 51, 17.0, c, 0.01).unwrap();
            assert!(v <= prev + 1e-12);
            prev = v;
        }
    }

    #[test]
    fn origins_cover_the_far_edge() {
        assert_eq!(origins(30, 10, 7), vec![0, 7, 14, 20]);
        assert_eq!(origins(30, 10, 10), vec![0, 10, 20]);
        assert_eq!(origins(10, 10, 3), vec![0]);
    }

    #[test]
    fn block_smaller_than_independence_length_is_rejected() {
        let d = dist_with(40, 40, 17.0, |_, _| false);
        let cfg = BlockNfaConfig {
            block_size: 15,
            ..Default::default()
        };
        assert!(nfa_block(&d, &cfg).is_err());
        let cfg = BlockNfaConfig {
            block_size: 51,
            ..Default::default()
        };
        assert!(nfa_block(&d, &cfg).is_err());
    }
}
