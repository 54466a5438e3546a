//! Normality model, Mahalanobis distance maps and the χ² / binomial kernels
//! the NFA statistics are built on.

mod binomial;
mod chi2;
mod normality;
pub mod special;

pub use binomial::{binomial_tail, log10_binomial_tail};
pub use chi2::{chi2_cdf, chi2_quantile, chi2_sf, log10_chi2_sf};
pub use normality::{
    component_distance_maps, fit_normality, mahalanobis_map, DistanceMap, NormalityModel,
};
