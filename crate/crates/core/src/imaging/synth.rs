//! Synthetic test data: the two-argument arctangent HSV image and the disc
//! inpainting mask on the unit square [−½, ½]².

use crate::error::{Error, Result};
use crate::functional::InpaintMask;
use crate::imaging::color::HsvImage;
use std::f64::consts::{PI, TAU};

/// Grid coordinate of sample index `i` on an `n`-point axis: −½ + i/(n−1).
fn coord(i: usize, n: usize) -> f64 {
    -0.5 + i as f64 / (n - 1) as f64
}

/// The synthetic HSV test image on an `npix`×`npix` grid: at (x, y) with x
/// the column and y the row coordinate, hue = atan2(x, y) rescaled from
/// [−π, π) to [0, 1), saturation = 1 − x², value = 1 − |x + y|.  The hue
/// has its 2π branch cut along the ray x = 0, y < 0.
pub fn make_synthetic(npix: usize) -> Result<HsvImage> {
    if npix < 2 {
        return Err(Error::InvalidArgument("grid needs at least 2 pixels".into()));
    }
    HsvImage::from_fn(npix, npix, |i, j| {
        let x = coord(i, npix);
        let y = coord(j, npix);
        let h = (x.atan2(y) + PI) / TAU;
        [h, 1.0 - x * x, 1.0 - (x + y).abs()]
    })
}

/// Mask of the open disc x² + y² < radius² centered in [−½, ½]².
pub fn make_disc_mask(npix: usize, radius: f64) -> Result<InpaintMask> {
    if npix < 2 {
        return Err(Error::InvalidArgument("grid needs at least 2 pixels".into()));
    }
    if !radius.is_finite() || radius < 0.0 || radius > 0.5 * std::f64::consts::SQRT_2 {
        return Err(Error::InvalidArgument(format!(
            "disc radius must lie in [0, sqrt(2)/2], got {radius}"
        )));
    }
    Ok(InpaintMask::from_fn(npix, npix, |i, j| {
        let x = coord(i, npix);
        let y = coord(j, npix);
        x * x + y * y < radius * radius
    }))
}
