use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::fmt::Write as _;

use super::{NfaMap, Strategy};
use crate::error::{Error, Result};
use crate::imagio::Plane;
use crate::statcore::{chi2_quantile, log10_chi2_sf, DistanceMap};

/// Constants of the asymptotic count `α β^N / N` of 4-connected pixel sets
/// (polyominoes) of size `N`.
pub const REGION_ALPHA: f64 = 0.316915;
pub const REGION_BETA: f64 = 4.062570;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionNfaConfig {
    /// Receptive field `s̃`; defaults to the distance map's independence length.
    pub independence_length: Option<f64>,
    /// Tail probability of the single-component seed threshold.
    pub tail_p: f64,
}

impl Default for RegionNfaConfig {
    fn default() -> Self {
        RegionNfaConfig {
            independence_length: None,
            tail_p: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    /// Pixel indices (`y · width + x`) in the order they were added; the
    /// first one is the seed.
    pub pixels: Vec<usize>,
    pub sum_d2: f64,
    pub log10_nfa: f64,
    /// `log10 NFA` after each accepted step, starting with the seed alone.
    pub trace: Vec<f64>,
}

impl Region {
    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }
}

/// Disjoint 4-connected regions grown on one map.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RegionSet {
    pub width: usize,
    pub height: usize,
    pub regions: Vec<Region>,
}

impl RegionSet {
    /// One line per region: `N_R log10_nfa x0,y0;x1,y1;...`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.regions {
            write!(out, "{} {}", r.len(), r.log10_nfa).expect("write to string");
            let coords: Vec<String> = r
                .pixels
                .iter()
                .map(|&i| format!("{},{}", i % self.width, i / self.width))
                .collect();
            writeln!(out, " {}", coords.join(";")).expect("write to string");
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct RegionNfa {
    pub regions: RegionSet,
    pub map: NfaMap,
    pub threshold: f64,
}

/// `log10(α β^n / n)` with `n` the (possibly fractional) effective size.
pub fn configuration_log10(n_eff: f64) -> f64 {
    REGION_ALPHA.log10() + n_eff * REGION_BETA.log10() - n_eff.log10()
}

/// `log10 NFA(R)` for a region of `n` pixels accumulating `sum_d2`:
/// `(HW/s̃²) · α β^{n/s̃²} / (n/s̃²) · (1 − CDF_χ²(n/s̃²)(Σd² / s̃²))`.
pub fn region_log10_nfa(
    width: usize,
    height: usize,
    s_tilde: f64,
    n: usize,
    sum_d2: f64,
) -> Result<f64> {
    let s2 = s_tilde * s_tilde;
    let n_eff = n as f64 / s2;
    Ok(((width * height) as f64 / s2).log10()
        + configuration_log10(n_eff)
        + log10_chi2_sf(sum_d2 / s2, n_eff)?)
}

/// Frontier entry ordered by larger `d²` first, then by smaller index.
#[derive(Debug, PartialEq)]
struct Candidate {
    d2: f64,
    index: Reverse<usize>,
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.d2
            .total_cmp(&other.d2)
            .then(self.index.cmp(&other.index))
    }
}

/// Greedy region NFA on a single-component distance map.
///
/// Seeds are the 4-neighborhood local maxima of `d²` above the `1 − p`
/// quantile of χ²(1), visited by decreasing `d²`. A region absorbs its best
/// free 4-neighbor only while doing so strictly lowers its NFA. Pixels that
/// end up in no region get the largest NFA evaluated (never below the number
/// of tests).
pub fn nfa_region(dist: &DistanceMap, cfg: &RegionNfaConfig) -> Result<RegionNfa> {
    let (width, height) = dist.d2.dims();
    let s_tilde = cfg.independence_length.unwrap_or(dist.independence_length);
    if !(s_tilde >= 1.0) {
        return Err(Error::invalid(format!(
            "receptive field must be at least 1, got {s_tilde}"
        )));
    }
    let threshold = chi2_quantile(1.0 - cfg.tail_p, 1.0)?;
    let d2 = dist.d2.as_slice();
    let n_pix = width * height;

    let neighbors = |i: usize| {
        let (x, y) = (i % width, i / width);
        let mut out = [usize::MAX; 4];
        if y > 0 {
            out[0] = i - width;
        }
        if x > 0 {
            out[1] = i - 1;
        }
        if x + 1 < width {
            out[2] = i + 1;
        }
        if y + 1 < height {
            out[3] = i + width;
        }
        out
    };

    let mut seeds: Vec<usize> = (0..n_pix)
        .filter(|&i| {
            d2[i] > threshold
                && neighbors(i)
                    .iter()
                    .all(|&j| j == usize::MAX || d2[j] <= d2[i])
        })
        .collect();
    seeds.sort_by(|&a, &b| d2[b].total_cmp(&d2[a]).then(a.cmp(&b)));

    const FREE: u32 = u32::MAX;
    let mut owner = vec![FREE; n_pix];
    let mut queued = vec![FREE; n_pix];
    let log10_tests = (n_pix as f64 / (s_tilde * s_tilde)).log10();
    let mut max_seen = log10_tests;
    let mut regions = Vec::new();

    for seed in seeds {
        if owner[seed] != FREE {
            continue;
        }
        let id = regions.len() as u32;
        owner[seed] = id;
        let mut pixels = vec![seed];
        let mut sum = d2[seed];
        let mut current = region_log10_nfa(width, height, s_tilde, 1, sum)?;
        max_seen = max_seen.max(current);
        let mut trace = vec![current];
        let mut frontier = BinaryHeap::new();
        let push_neighbors =
            |i: usize, frontier: &mut BinaryHeap<Candidate>, queued: &mut [u32], owner: &[u32]| {
                for j in neighbors(i) {
                    if j != usize::MAX && owner[j] == FREE && queued[j] != id {
                        queued[j] = id;
                        frontier.push(Candidate {
                            d2: d2[j],
                            index: Reverse(j),
                        });
                    }
                }
            };
        push_neighbors(seed, &mut frontier, &mut queued, &owner);
        while let Some(Candidate {
            index: Reverse(j), ..
        }) = frontier.pop()
        {
            if owner[j] != FREE {
                continue;
            }
            let candidate =
                region_log10_nfa(width, height, s_tilde, pixels.len() + 1, sum + d2[j])?;
            max_seen = max_seen.max(candidate);
            // the best frontier pixel failing means every other one fails too
            if candidate >= current {
                break;
            }
            owner[j] = id;
            pixels.push(j);
            sum += d2[j];
            current = candidate;
            trace.push(current);
            push_neighbors(j, &mut frontier, &mut queued, &owner);
        }
        regions.push(Region {
            pixels,
            sum_d2: sum,
            log10_nfa: current,
            trace,
        });
    }

    let mut out = Plane::filled(width, height, max_seen);
    for r in &regions {
        for &i in &r.pixels {
            out.as_mut_slice()[i] = r.log10_nfa;
        }
    }
    Ok(RegionNfa {
        regions: RegionSet {
            width,
            height,
            regions,
        },
        map: NfaMap {
            log10_nfa: out,
            strategy: Strategy::Region,
            scale_index: 0,
            component: None,
            log10_tests,
        },
        threshold,
    })
}
