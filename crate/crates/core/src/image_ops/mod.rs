//! Raster primitives: the RGBA image type, HSV saturation anchoring,
//! white-background object extraction, placement, compositing and
//! diffusion inpainting.

mod hsv;
mod inpaint;
mod object;
mod raster;

pub use hsv::{hsv_to_rgb, match_saturation, mean_saturation, rgb_to_hsv, scale_saturation, Hsv};
pub use inpaint::{inpaint, TextBox, CONVERGENCE_STEP, MAX_ITERATIONS};
pub use object::{
    composite_over, extract_object, is_white, placement_anchor, resize_reposition, scaled_dims, BBox, ObjectRegion,
    DEFAULT_WHITE_THRESHOLD,
};
pub use raster::{RasterImage, Rgba, DEFAULT_SIZE, WHITE};

#[derive(Debug, thiserror::Error)]
pub enum ImageError {
    #[error("image dimensions differ: {left:?} vs {right:?}")]
    DimMismatch { left: (u32, u32), right: (u32, u32) },
    #[error("no non-white pixels found")]
    NoObject,
    #[error("placement falls outside the canvas")]
    OutOfBounds,
    #[error("scale must be in (0, 1], got {0}")]
    BadScale(f64),
    #[error("pixel buffer has {actual} bytes, expected {expected}")]
    BadBuffer { expected: usize, actual: usize },
    #[error("image codec: {0}")]
    Codec(#[from] image::ImageError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
