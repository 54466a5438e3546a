use super::{NfaMap, Strategy};
use crate::error::Result;
use crate::imagio::Plane;
use crate::statcore::{log10_chi2_sf, DistanceMap};

/// `NFA = H·W · (1 − CDF_χ²(df)(d²))` at every pixel.
pub fn nfa_pixel(dist: &DistanceMap) -> Result<NfaMap> {
    let (w, h) = dist.d2.dims();
    let log10_tests = ((w * h) as f64).log10();
    let data = dist
        .d2
        .as_slice()
        .iter()
        .map(|&d2| Ok(log10_tests + log10_chi2_sf(d2, dist.df)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(NfaMap {
        log10_nfa: Plane::new(w, h, data)?,
        strategy: Strategy::Pixel,
        scale_index: 0,
        component: None,
        log10_tests,
    })
}
