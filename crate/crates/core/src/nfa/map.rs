use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::imagio::Plane;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    Pixel,
    Block,
    Region,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Pixel => "pixel",
            Strategy::Block => "block",
            Strategy::Region => "region",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pixel" => Ok(Strategy::Pixel),
            "block" => Ok(Strategy::Block),
            "region" => Ok(Strategy::Region),
            other => Err(Error::invalid(format!("unknown NFA strategy {other:?}"))),
        }
    }
}

/// Per-pixel `log10 NFA` for one strategy at one scale.
#[derive(Debug, Clone, PartialEq)]
pub struct NfaMap {
    pub log10_nfa: Plane,
    pub strategy: Strategy,
    pub scale_index: usize,
    /// Channel or component the map came from; `None` once combined.
    pub component: Option<usize>,
    /// `log10` of the number of tests behind the map.
    pub log10_tests: f64,
}

impl NfaMap {
    pub fn dims(&self) -> (usize, usize) {
        self.log10_nfa.dims()
    }

    /// Number of pixels with `NFA < epsilon`.
    pub fn count_below(&self, epsilon: f64) -> usize {
        let t = epsilon.log10();
        self.log10_nfa.as_slice().iter().filter(|&&v| v < t).count()
    }
}

/// Element-wise minimum of `log10 NFA` across maps of equal size.
pub fn min_combine(maps: &[NfaMap]) -> Result<NfaMap> {
    let first = maps
        .first()
        .ok_or_else(|| Error::invalid("min_combine needs at least one map"))?;
    if let Some(bad) = maps.iter().find(|m| m.dims() != first.dims()) {
        return Err(Error::invalid(format!(
            "cannot combine a {:?} map with a {:?} map",
            bad.dims(),
            first.dims()
        )));
    }
    let mut out = first.log10_nfa.clone();
    for m in &maps[1..] {
        for (o, &v) in out.as_mut_slice().iter_mut().zip(m.log10_nfa.as_slice()) {
            if v < *o {
                *o = v;
            }
        }
    }
    let component = if maps.len() == 1 {
        first.component
    } else {
        None
    };
    Ok(NfaMap {
        log10_nfa: out,
        strategy: first.strategy,
        scale_index: first.scale_index,
        component,
        log10_tests: maps
            .iter()
            .map(|m| m.log10_tests)
            .fold(f64::NEG_INFINITY, f64::max),
    })
}
