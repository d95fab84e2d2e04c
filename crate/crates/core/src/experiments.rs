//! Experiment pipelines: restoration in the different color models,
//! video denoising via frame stacking, and parameter grid search.

use crate::cppa::{solve, SolverConfig};
use crate::error::{Error, Result};
use crate::functional::{InpaintMask, RegParams};
use crate::geometry::ProductImage;
use crate::imaging::color::{hsv_to_rgb, rgb_to_hsv, HsvImage, RgbImage};
use crate::imaging::video::{stack_frames, unstack_frames};
use rayon::prelude::*;

/// The product-space model an RGB raster is restored in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Space {
    /// Vectorial in ℝ³.
    Rgb,
    /// Vectorial in S¹ × ℝ² (hue cyclic).
    Hsv,
    /// Three independent ℝ solves.
    RgbChannelwise,
    /// Independent S¹ solve for the hue, ℝ solves for saturation and value.
    HsvChannelwise,
}

/// Restores an RGB raster in the requested model.  The mask and mode come
/// from the caller: an empty mask with a denoising mode, or an inpainting
/// mode with its region Ω.  Channelwise variants run one solver per channel
/// with the same configuration.
pub fn restore(
    noisy: &RgbImage,
    mask: &InpaintMask,
    space: Space,
    cfg: &SolverConfig,
) -> Result<RgbImage> {
    match space {
        Space::Rgb => {
            let rep = solve(&noisy.to_product(), mask, cfg)?;
            RgbImage::from_product(&rep.result)
        }
        Space::Hsv => {
            let hsv = rgb_to_hsv(noisy);
            let rep = solve(&hsv.to_product(), mask, cfg)?;
            Ok(hsv_to_rgb(&HsvImage::from_product(&rep.result)?))
        }
        Space::RgbChannelwise => {
            let mut planes = Vec::with_capacity(3);
            for c in 0..3 {
                planes.push(solve(&noisy.channel_product(c), mask, cfg)?.result);
            }
            RgbImage::from_channel_products([&planes[0], &planes[1], &planes[2]])
        }
        Space::HsvChannelwise => {
            let hsv = rgb_to_hsv(noisy);
            let hue = solve(&hsv.hue_product(), mask, cfg)?.result;
            let sat = solve(&hsv.linear_channel_product(1), mask, cfg)?.result;
            let val = solve(&hsv.linear_channel_product(2), mask, cfg)?.result;
            Ok(hsv_to_rgb(&HsvImage::from_channel_products(&hue, &sat, &val)?))
        }
    }
}

/// Rescales regularization parameters for a stacked window of `2l + 1`
/// frames.  Stacking multiplies the joint norm of every difference by up to
/// √(2l+1) while the per-channel data terms add up linearly, so the raw
/// parameters act √(2l+1) weaker per frame.  Scaling by √(2l+1) restores
/// the single-frame trade-off: a video of identical frames is denoised
/// exactly as one frame would be.
pub fn stacked_params(params: &RegParams, l: usize) -> RegParams {
    params.scaled(((2 * l + 1) as f64).sqrt())
}

/// Denoises a video frame by frame: each frame is stacked with its 2l+1
/// temporal neighbors (the window shrinks symmetrically near the ends),
/// solved as one product image, and the center frame of the window is kept.
/// Parameters are interpreted per frame and rescaled with [`stacked_params`]
/// for each window.
pub fn denoise_video(
    frames: &[ProductImage],
    l: usize,
    cfg: &SolverConfig,
) -> Result<Vec<ProductImage>> {
    if frames.is_empty() {
        return Err(Error::InvalidArgument("empty video".into()));
    }
    let (m, n) = frames[0].signature();
    let empty = InpaintMask::empty(frames[0].width(), frames[0].height());
    let mut out = Vec::with_capacity(frames.len());
    for k in 0..frames.len() {
        let lk = l.min(k).min(frames.len() - 1 - k);
        let stacked = stack_frames(frames, k, lk)?;
        let cfg_k = SolverConfig {
            params: stacked_params(&cfg.params, lk),
            ..cfg.clone()
        };
        let rep = solve(&stacked, &empty, &cfg_k)?;
        let window = unstack_frames(&rep.result, m, n)?;
        out.push(window[lk].clone());
    }
    Ok(out)
}

/// Best cell of a coupled parameter grid search.
#[derive(Debug, Clone, PartialEq)]
pub struct GridOutcome {
    pub alpha: f64,
    pub beta: f64,
    pub score: f64,
    /// All evaluated cells as (α, β, score), in grid order.
    pub cells: Vec<(f64, f64, f64)>,
}

/// Maximizes `eval(α, β)` over the Cartesian grid.  The all-zero cell is
/// always skipped (a zero functional restores nothing); cells with β = 0
/// are skipped unless `allow_zero_beta` is set.  Cells run in parallel;
/// ties keep the earliest cell in grid order, so the result is
/// deterministic.
pub fn grid_search<F>(
    alphas: &[f64],
    betas: &[f64],
    allow_zero_beta: bool,
    eval: F,
) -> Result<GridOutcome>
where
    F: Fn(f64, f64) -> Result<f64> + Sync,
{
    let mut grid = Vec::new();
    for &a in alphas {
        for &b in betas {
            if a == 0.0 && b == 0.0 {
                continue;
            }
            if b == 0.0 && !allow_zero_beta {
                continue;
            }
            grid.push((a, b));
        }
    }
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty parameter grid".into()));
    }
    let cells: Vec<(f64, f64, f64)> = grid
        .par_iter()
        .map(|&(a, b)| eval(a, b).map(|s| (a, b, s)))
        .collect::<Result<_>>()?;
    let mut best = cells[0];
    for &c in &cells[1..] {
        if c.2 > best.2 {
            best = c;
        }
    }
    Ok(GridOutcome {
        alpha: best.0,
        beta: best.1,
        score: best.2,
        cells,
    })
}

/// The grid (step)ℕ₀ up to and including `max` (within rounding slack).
pub fn grid_values(step: f64, max: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(max >= 0.0) || !step.is_finite() || !max.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "grid needs step > 0 and max >= 0, got step {step}, max {max}"
        )));
    }
    let count = (max / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|k| k as f64 * step).collect())
}
