//! The rotating-phase test video and temporal frame stacking.

use crate::error::{Error, Result};
use crate::geometry::{wrap_rad, PixelValue, ProductImage};
use std::f64::consts::{FRAC_PI_4, PI};

/// Per-frame rotation increment of the test video.
pub const FRAME_ROTATION: f64 = PI / 12.0;

fn coord(i: usize, n: usize) -> f64 {
    -0.5 + i as f64 / (n - 1) as f64
}

/// Generates the phase-valued rotation video: each frame is an S¹ image
/// (signature (1, 0)) of the atan2 angle on [−½, ½]², with an extra +π/4
/// offset outside the disc of radius ½.  Frame t ∈ {−(F−1)/2, …, (F−1)/2}
/// rotates the sampling coordinates of the disc interior by +t·π/12 and of
/// the exterior by −t·π/12, so the two regions spin in opposite directions
/// and the center frame is the unrotated base image.
pub fn make_rotation_video(npix: usize, frames: usize) -> Result<Vec<ProductImage>> {
    if npix < 2 {
        return Err(Error::InvalidArgument("grid needs at least 2 pixels".into()));
    }
    if frames == 0 || frames % 2 == 0 {
        return Err(Error::InvalidArgument(format!(
            "frame count must be odd and positive, got {frames}"
        )));
    }
    let half = (frames as i64 - 1) / 2;
    let mut out = Vec::with_capacity(frames);
    for t in -half..=half {
        let frame = ProductImage::from_fn(npix, npix, 1, 0, |i, j| {
            let x = coord(i, npix);
            let y = coord(j, npix);
            let inner = x * x + y * y < 0.25;
            let theta = if inner { 1.0 } else { -1.0 } * t as f64 * FRAME_ROTATION;
            let (s, c) = theta.sin_cos();
            let xr = c * x - s * y;
            let yr = s * x + c * y;
            let mut a = xr.atan2(yr);
            if !inner {
                a += FRAC_PI_4;
            }
            PixelValue::new(vec![wrap_rad(a)], vec![]).unwrap()
        })?;
        out.push(frame);
    }
    Ok(out)
}

/// Concatenates the 2l+1 frames centered at index `k` into one product
/// image of signature (m·(2l+1), n·(2l+1)): per pixel, first all cyclic
/// components frame by frame, then all linear ones.
pub fn stack_frames(video: &[ProductImage], k: usize, l: usize) -> Result<ProductImage> {
    if video.is_empty() {
        return Err(Error::InvalidArgument("empty video".into()));
    }
    let (m, n) = video[0].signature();
    let (w, h) = (video[0].width(), video[0].height());
    for f in video {
        if f.signature() != (m, n) || f.width() != w || f.height() != h {
            return Err(Error::DimensionMismatch("inhomogeneous video frames".into()));
        }
    }
    if k < l || k + l >= video.len() {
        return Err(Error::InvalidArgument(format!(
            "window l = {l} around frame {k} exceeds the {}-frame video",
            video.len()
        )));
    }
    let window = &video[k - l..=k + l];
    ProductImage::from_fn(w, h, m * window.len(), n * window.len(), |i, j| {
        let mut cyc = Vec::with_capacity(m * window.len());
        let mut lin = Vec::with_capacity(n * window.len());
        for f in window {
            let v = f.pixel_value(i, j);
            cyc.extend(v.cyclic.iter().map(|a| a.rad()));
            lin.extend_from_slice(&v.linear);
        }
        PixelValue::new(cyc, lin).unwrap()
    })
}

/// Splits a stacked image back into its 2l+1 frames of per-frame signature
/// (m, n); inverse of [`stack_frames`].
pub fn unstack_frames(stacked: &ProductImage, m: usize, n: usize) -> Result<Vec<ProductImage>> {
    let (sm, sn) = stacked.signature();
    if m + n == 0 {
        return Err(Error::InvalidArgument("per-frame signature is empty".into()));
    }
    let count = if m > 0 { sm / m } else { sn / n };
    if count == 0 || sm != m * count || sn != n * count {
        return Err(Error::DimensionMismatch(format!(
            "stacked signature ({sm}, {sn}) is not a multiple of ({m}, {n})"
        )));
    }
    let mut frames = Vec::with_capacity(count);
    for t in 0..count {
        frames.push(ProductImage::from_fn(
            stacked.width(),
            stacked.height(),
            m,
            n,
            |i, j| {
                let v = stacked.px(i, j);
                PixelValue::new(
                    v[t * m..(t + 1) * m].to_vec(),
                    v[sm + t * n..sm + (t + 1) * n].to_vec(),
                )
                .unwrap()
            },
        )?);
    }
    Ok(frames)
}
