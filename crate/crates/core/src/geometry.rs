//! Circle arithmetic and distances on the product space (S¹)^m × ℝⁿ.
//!
//! Angles are represented by their unique value in the half-open interval
//! [−π, π); the seam sits at ±π and +π wraps to −π.  A pixel of the product
//! space carries m wrapped angles followed by n unconstrained reals.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Full turn, 2π.
pub const TAU: f64 = 2.0 * PI;

/// Absolute tolerance for detecting odd multiples of π (the antipodal seam).
///
/// Exact seam hits are measure-zero in real data; a tight tolerance keeps the
/// generic code path single-valued.
pub const SEAM_TOL: f64 = 1e-12;

/// Reduces `v` modulo 2π into [−π, π).
///
/// This is the raw f64 version used on hot paths; the caller must pass a
/// finite value.  Use [`Angle::wrap`] when input validation is needed.
#[inline]
pub fn wrap_rad(v: f64) -> f64 {
    let mut r = (v + PI).rem_euclid(TAU) - PI;
    // rem_euclid can round up to exactly 2π for tiny negative inputs.
    if r >= PI {
        r -= TAU;
    }
    r
}

/// Returns true when `v` lies within [`SEAM_TOL`] of an odd multiple of π.
#[inline]
pub fn is_seam(v: f64) -> bool {
    wrap_rad(v - PI).abs() <= SEAM_TOL
}

/// Multivalued reduction modulo 2π: `{wrap(v)}` generically, both branch
/// values `{−π, +π}` when `v` is an odd multiple of π.
///
/// The +π branch is not a valid [`Angle`]; it is reported so that callers can
/// enumerate multivalued proximal outputs.
pub fn wrap_multi(v: f64) -> Vec<f64> {
    if is_seam(v) {
        vec![-PI, PI]
    } else {
        vec![wrap_rad(v)]
    }
}

/// An angle stored as radians in [−π, π).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Angle(f64);

impl Angle {
    /// Wraps an arbitrary finite value into [−π, π).
    pub fn wrap(v: f64) -> Result<Angle> {
        if !v.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite angle {v}")));
        }
        Ok(Angle(wrap_rad(v)))
    }

    /// The wrapped value in radians.
    #[inline]
    pub fn rad(self) -> f64 {
        self.0
    }
}

/// Arc-length distance on the circle, `|wrap(p − q)| ∈ [0, π]`.
#[inline]
pub fn dist_circle(p: Angle, q: Angle) -> f64 {
    dist_circle_rad(p.rad(), q.rad())
}

/// [`dist_circle`] on raw radian values (wrapped internally).  Built from
/// `|p − q|` so the distance is exactly symmetric in its arguments.
#[inline]
pub fn dist_circle_rad(p: f64, q: f64) -> f64 {
    let d = (p - q).abs().rem_euclid(TAU);
    d.min(TAU - d)
}

/// One point of (S¹)^m × ℝⁿ: m wrapped angles plus n reals.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelValue {
    pub cyclic: Vec<Angle>,
    pub linear: Vec<f64>,
}

impl PixelValue {
    /// Builds a pixel value, wrapping every cyclic entry.
    pub fn new(cyclic_rad: Vec<f64>, linear: Vec<f64>) -> Result<PixelValue> {
        let cyclic = cyclic_rad
            .into_iter()
            .map(Angle::wrap)
            .collect::<Result<Vec<_>>>()?;
        for &v in &linear {
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!("non-finite linear component {v}")));
            }
        }
        Ok(PixelValue { cyclic, linear })
    }

    /// The (m, n) signature of this pixel.
    pub fn signature(&self) -> (usize, usize) {
        (self.cyclic.len(), self.linear.len())
    }
}

fn check_signature(x: &PixelValue, y: &PixelValue) -> Result<()> {
    let (mx, nx) = x.signature();
    let (my, ny) = y.signature();
    if (mx, nx) != (my, ny) {
        return Err(Error::SignatureMismatch(mx, nx, my, ny));
    }
    Ok(())
}

/// Distance on the full product space:
/// `sqrt(‖x_R − y_R‖² + Σ dist_circle(x_i, y_i)²)`.
pub fn dist_product(x: &PixelValue, y: &PixelValue) -> Result<f64> {
    check_signature(x, y)?;
    let mut acc = 0.0;
    for (&p, &q) in x.cyclic.iter().zip(&y.cyclic) {
        let d = dist_circle(p, q);
        acc += d * d;
    }
    for (&p, &q) in x.linear.iter().zip(&y.linear) {
        let d = p - q;
        acc += d * d;
    }
    Ok(acc.sqrt())
}

/// Distance restricted to the first m (cyclic) components; 0 when m = 0.
pub fn dist_cyclic_part(x: &PixelValue, y: &PixelValue) -> f64 {
    debug_assert_eq!(x.cyclic.len(), y.cyclic.len());
    let mut acc = 0.0;
    for (&p, &q) in x.cyclic.iter().zip(&y.cyclic) {
        let d = dist_circle(p, q);
        acc += d * d;
    }
    acc.sqrt()
}

/// A 2D grid of pixel values with a shared (m, n) signature.
///
/// Storage is pixel-major: the m cyclic components (radians in [−π, π))
/// followed by the n linear components, for pixel (i, j) at flat index
/// `(j·width + i)·(m + n)`.  The grid is always fully populated; missing data
/// is expressed through a mask, not through holes.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductImage {
    width: usize,
    height: usize,
    m: usize,
    n: usize,
    data: Vec<f64>,
}

impl ProductImage {
    /// Creates an all-zero image.
    pub fn new(width: usize, height: usize, m: usize, n: usize) -> Result<ProductImage> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument("image dimensions must be positive".into()));
        }
        if m + n == 0 {
            return Err(Error::InvalidArgument("signature must satisfy m + n >= 1".into()));
        }
        Ok(ProductImage {
            width,
            height,
            m,
            n,
            data: vec![0.0; width * height * (m + n)],
        })
    }

    /// Builds an image by evaluating `f(i, j)` for every pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        m: usize,
        n: usize,
        mut f: impl FnMut(usize, usize) -> PixelValue,
    ) -> Result<ProductImage> {
        let mut img = ProductImage::new(width, height, m, n)?;
        for j in 0..height {
            for i in 0..width {
                img.set_pixel(i, j, &f(i, j))?;
            }
        }
        Ok(img)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// The (m, n) signature shared by all pixels.
    pub fn signature(&self) -> (usize, usize) {
        (self.m, self.n)
    }

    /// Number of stored components per pixel, m + n.
    pub fn chans(&self) -> usize {
        self.m + self.n
    }

    /// Flat pixel index of (i, j).
    #[inline]
    pub fn pixel_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.width && j < self.height);
        j * self.width + i
    }

    /// Raw components of pixel (i, j): m wrapped radians then n reals.
    #[inline]
    pub fn px(&self, i: usize, j: usize) -> &[f64] {
        let c = self.chans();
        let base = self.pixel_index(i, j) * c;
        &self.data[base..base + c]
    }

    /// Mutable raw components of pixel (i, j).
    ///
    /// Callers must keep the first m entries wrapped to [−π, π).
    #[inline]
    pub fn px_mut(&mut self, i: usize, j: usize) -> &mut [f64] {
        let c = self.chans();
        let base = self.pixel_index(i, j) * c;
        &mut self.data[base..base + c]
    }

    /// Pixel (i, j) as a [`PixelValue`].
    pub fn pixel_value(&self, i: usize, j: usize) -> PixelValue {
        let p = self.px(i, j);
        PixelValue {
            cyclic: p[..self.m].iter().map(|&v| Angle(v)).collect(),
            linear: p[self.m..].to_vec(),
        }
    }

    /// Overwrites pixel (i, j).
    pub fn set_pixel(&mut self, i: usize, j: usize, v: &PixelValue) -> Result<()> {
        if v.signature() != (self.m, self.n) {
            let (m, n) = v.signature();
            return Err(Error::SignatureMismatch(self.m, self.n, m, n));
        }
        let m = self.m;
        let p = self.px_mut(i, j);
        for (k, a) in v.cyclic.iter().enumerate() {
            p[k] = a.rad();
        }
        for (k, &x) in v.linear.iter().enumerate() {
            p[m + k] = x;
        }
        Ok(())
    }

    /// Flat component storage (read-only).
    pub fn raw(&self) -> &[f64] {
        &self.data
    }

    /// Flat component storage (mutable); first m entries of each pixel must
    /// stay wrapped.
    pub fn raw_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
}
