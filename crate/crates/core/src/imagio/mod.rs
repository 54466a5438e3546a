//! Image loading and saving, scale pyramids, the `NFAT` tensor format, and
//! multi-illumination preprocessing.

mod multilight;
mod nfat;
mod plane;
mod pyramid;
mod raster;
mod resample;
mod stack;

pub use multilight::{
    multilight_components, multilight_pca, MultiLightComponents, MultiLightSet, NUM_VIEWS,
};
pub use nfat::Tensor;
pub use plane::{reflect_index, Plane};
pub use pyramid::{build_pyramid, downsample, level_size, ScalePyramid};
pub use raster::{load_image, load_mask, save_gray8, save_plane_png};
pub use resample::{resize_bilinear, resize_nearest};
pub use stack::ImageStack;
