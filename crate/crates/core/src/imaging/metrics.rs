//! Image quality metrics: PSNR, SSIM, and an angular PSNR for circle-valued
//! images.

use crate::error::{Error, Result};
use crate::geometry::{dist_circle_rad, ProductImage};
use crate::imaging::color::RgbImage;
use std::f64::consts::PI;

fn check_dims(aw: usize, ah: usize, bw: usize, bh: usize) -> Result<()> {
    if aw != bw || ah != bh {
        return Err(Error::DimensionMismatch(format!(
            "image sizes differ: {aw}x{ah} vs {bw}x{bh}"
        )));
    }
    Ok(())
}

/// Mean squared error over all pixels and channels.
pub fn mse(x: &RgbImage, reference: &RgbImage) -> Result<f64> {
    check_dims(x.width(), x.height(), reference.width(), reference.height())?;
    let mut acc = 0.0;
    for (a, b) in x.pixels().iter().zip(reference.pixels()) {
        for c in 0..3 {
            let d = a[c] - b[c];
            acc += d * d;
        }
    }
    Ok(acc / (3.0 * x.pixels().len() as f64))
}

/// Peak signal-to-noise ratio in dB at peak 1.0; +∞ for identical images.
pub fn psnr(x: &RgbImage, reference: &RgbImage) -> Result<f64> {
    let e = mse(x, reference)?;
    if e == 0.0 {
        Ok(f64::INFINITY)
    } else {
        Ok(10.0 * (1.0 / e).log10())
    }
}

/// PSNR analogue on product images: squared error uses the circle distance
/// on cyclic components, plain differences on linear ones, with peak π
/// (the circle diameter).  +∞ for identical images.
pub fn psnr_angular(x: &ProductImage, reference: &ProductImage) -> Result<f64> {
    check_dims(x.width(), x.height(), reference.width(), reference.height())?;
    if x.signature() != reference.signature() {
        return Err(Error::DimensionMismatch("signatures differ".into()));
    }
    let (m, _) = x.signature();
    let chans = x.chans();
    let mut acc = 0.0;
    for (a, b) in x
        .raw()
        .chunks_exact(chans)
        .zip(reference.raw().chunks_exact(chans))
    {
        for r in 0..chans {
            let d = if r < m {
                dist_circle_rad(a[r], b[r])
            } else {
                a[r] - b[r]
            };
            acc += d * d;
        }
    }
    let e = acc / x.raw().len() as f64;
    if e == 0.0 {
        Ok(f64::INFINITY)
    } else {
        Ok(10.0 * (PI * PI / e).log10())
    }
}

const SSIM_WIN: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_C1: f64 = 0.01 * 0.01;
const SSIM_C2: f64 = 0.03 * 0.03;

fn gaussian_window() -> [f64; SSIM_WIN * SSIM_WIN] {
    let mut w = [0.0; SSIM_WIN * SSIM_WIN];
    let c = (SSIM_WIN / 2) as f64;
    let mut sum = 0.0;
    for j in 0..SSIM_WIN {
        for i in 0..SSIM_WIN {
            let dx = i as f64 - c;
            let dy = j as f64 - c;
            let v = (-(dx * dx + dy * dy) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
            w[j * SSIM_WIN + i] = v;
            sum += v;
        }
    }
    for v in &mut w {
        *v /= sum;
    }
    w
}

/// Structural similarity index with the standard 11×11 Gaussian window
/// (σ = 1.5, C₁ = 0.01², C₂ = 0.03², peak 1.0), evaluated on all fully
/// interior windows and averaged over the three channels.
pub fn ssim(x: &RgbImage, reference: &RgbImage) -> Result<f64> {
    check_dims(x.width(), x.height(), reference.width(), reference.height())?;
    let (w, h) = (x.width(), x.height());
    if w < SSIM_WIN || h < SSIM_WIN {
        return Err(Error::InvalidArgument(format!(
            "ssim needs at least {SSIM_WIN}x{SSIM_WIN} pixels, got {w}x{h}"
        )));
    }
    let win = gaussian_window();
    let mut total = 0.0;
    for c in 0..3 {
        let mut acc = 0.0;
        let mut count = 0usize;
        for j0 in 0..=h - SSIM_WIN {
            for i0 in 0..=w - SSIM_WIN {
                let (mut mx, mut my) = (0.0, 0.0);
                let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
                for dj in 0..SSIM_WIN {
                    for di in 0..SSIM_WIN {
                        let g = win[dj * SSIM_WIN + di];
                        let a = x.px(i0 + di, j0 + dj)[c];
                        let b = reference.px(i0 + di, j0 + dj)[c];
                        mx += g * a;
                        my += g * b;
                        sxx += g * a * a;
                        syy += g * b * b;
                        sxy += g * a * b;
                    }
                }
                let vx = (sxx - mx * mx).max(0.0);
                let vy = (syy - my * my).max(0.0);
                let cov = sxy - mx * my;
                let v = ((2.0 * mx * my + SSIM_C1) * (2.0 * cov + SSIM_C2))
                    / ((mx * mx + my * my + SSIM_C1) * (vx + vy + SSIM_C2));
                acc += v;
                count += 1;
            }
        }
        total += acc / count as f64;
    }
    Ok(total / 3.0)
}
