//! Application layer: color-space conversion, noise synthesis, quality
//! metrics, synthetic data generators, and temporal frame stacking.

pub mod color;
pub mod metrics;
pub mod noise;
pub mod synth;
pub mod video;

pub use color::{hsv_to_rgb, rgb_to_hsv, HsvImage, RgbImage};
pub use metrics::{mse, psnr, psnr_angular, ssim};
pub use noise::add_wrapped_gaussian;
pub use synth::{make_disc_mask, make_synthetic};
pub use video::{make_rotation_video, stack_frames, unstack_frames};
