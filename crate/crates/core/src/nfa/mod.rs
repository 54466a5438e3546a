//! The a contrario detection statistics. Every map is kept as `log10 NFA`
//! so that extremely significant events do not underflow.

mod block;
mod map;
mod pixel;
mod region;

pub use block::{nfa_block, BlockNfa, BlockNfaConfig, BlockRecord};
pub use map::{min_combine, NfaMap, Strategy};
pub use pixel::nfa_pixel;
pub use region::{
    configuration_log10, nfa_region, region_log10_nfa, Region, RegionNfa, RegionNfaConfig,
    RegionSet, REGION_ALPHA, REGION_BETA,
};
