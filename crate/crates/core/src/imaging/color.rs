//! RGB/HSV raster types, hexcone color conversion, PNG I/O, and the
//! embeddings into cyclic/linear product images.

use crate::error::{Error, Result};
use crate::geometry::{wrap_rad, PixelValue, ProductImage, TAU};
use std::path::Path;

/// An N×M raster of (r, g, b) values, each clamped to [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<[f64; 3]>,
}

/// An N×M raster of (h, s, v) with h cyclic in [0, 1) and s, v in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct HsvImage {
    width: usize,
    height: usize,
    data: Vec<[f64; 3]>,
}

fn clamp01(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

/// Reduces a hue to its representative in [0, 1).
pub fn wrap_hue(h: f64) -> f64 {
    let r = h.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Hue in [0, 1) to its angle in [−π, π).
pub fn hue_to_angle(h: f64) -> f64 {
    wrap_rad(h * TAU)
}

/// Angle in radians to the hue representative in [0, 1).
pub fn angle_to_hue(a: f64) -> f64 {
    wrap_hue(a / TAU)
}

/// Standard hexcone conversion of a single color.
pub fn rgb_to_hsv_px(rgb: [f64; 3]) -> [f64; 3] {
    let [r, g, b] = [clamp01(rgb[0]), clamp01(rgb[1]), clamp01(rgb[2])];
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let v = max;
    let s = if max == 0.0 { 0.0 } else { delta / max };
    let h = if delta == 0.0 {
        0.0
    } else if max == r {
        wrap_hue(((g - b) / delta) / 6.0)
    } else if max == g {
        ((b - r) / delta + 2.0) / 6.0
    } else {
        ((r - g) / delta + 4.0) / 6.0
    };
    [h, s, v]
}

/// Inverse hexcone conversion of a single color.
pub fn hsv_to_rgb_px(hsv: [f64; 3]) -> [f64; 3] {
    let h = wrap_hue(hsv[0]);
    let s = clamp01(hsv[1]);
    let v = clamp01(hsv[2]);
    let h6 = h * 6.0;
    let sector = (h6.floor() as i64).rem_euclid(6) as usize;
    let f = h6 - h6.floor();
    let p = v * (1.0 - s);
    let q = v * (1.0 - f * s);
    let t = v * (1.0 - (1.0 - f) * s);
    match sector {
        0 => [v, t, p],
        1 => [q, v, p],
        2 => [p, v, t],
        3 => [p, q, v],
        4 => [t, p, v],
        _ => [v, p, q],
    }
}

macro_rules! raster_common {
    ($t:ident) => {
        impl $t {
            pub fn width(&self) -> usize {
                self.width
            }

            pub fn height(&self) -> usize {
                self.height
            }

            pub fn px(&self, i: usize, j: usize) -> [f64; 3] {
                self.data[j * self.width + i]
            }

            pub fn set_px(&mut self, i: usize, j: usize, v: [f64; 3]) {
                let w = self.width;
                self.data[j * w + i] = Self::normalize(v);
            }

            pub fn pixels(&self) -> &[[f64; 3]] {
                &self.data
            }

            pub fn from_fn(
                width: usize,
                height: usize,
                mut f: impl FnMut(usize, usize) -> [f64; 3],
            ) -> Result<$t> {
                if width == 0 || height == 0 {
                    return Err(Error::InvalidArgument("empty raster".into()));
                }
                let mut data = Vec::with_capacity(width * height);
                for j in 0..height {
                    for i in 0..width {
                        data.push(Self::normalize(f(i, j)));
                    }
                }
                Ok($t {
                    width,
                    height,
                    data,
                })
            }
        }
    };
}

raster_common!(RgbImage);
raster_common!(HsvImage);

impl RgbImage {
    fn normalize(v: [f64; 3]) -> [f64; 3] {
        [clamp01(v[0]), clamp01(v[1]), clamp01(v[2])]
    }

    pub fn load_png(path: &Path) -> Result<RgbImage> {
        let img = image::open(path)?.to_rgb8();
        let (w, h) = (img.width() as usize, img.height() as usize);
        RgbImage::from_fn(w, h, |i, j| {
            let p = img.get_pixel(i as u32, j as u32);
            [
                p[0] as f64 / 255.0,
                p[1] as f64 / 255.0,
                p[2] as f64 / 255.0,
            ]
        })
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        let mut out = image::RgbImage::new(self.width as u32, self.height as u32);
        for j in 0..self.height {
            for i in 0..self.width {
                let p = self.px(i, j);
                out.put_pixel(
                    i as u32,
                    j as u32,
                    image::Rgb([
                        (p[0] * 255.0).round() as u8,
                        (p[1] * 255.0).round() as u8,
                        (p[2] * 255.0).round() as u8,
                    ]),
                );
            }
        }
        out.save(path)?;
        Ok(())
    }

    /// Embeds into the purely linear product space, signature (0, 3).
    pub fn to_product(&self) -> ProductImage {
        ProductImage::from_fn(self.width, self.height, 0, 3, |i, j| {
            PixelValue::new(vec![], self.px(i, j).to_vec()).unwrap()
        })
        .unwrap()
    }

    pub fn from_product(p: &ProductImage) -> Result<RgbImage> {
        if p.signature() != (0, 3) {
            return Err(Error::DimensionMismatch(
                "rgb raster needs signature (0, 3)".into(),
            ));
        }
        RgbImage::from_fn(p.width(), p.height(), |i, j| {
            let v = p.px(i, j);
            [v[0], v[1], v[2]]
        })
    }

    /// One channel as a scalar linear product image, signature (0, 1).
    pub fn channel_product(&self, c: usize) -> ProductImage {
        ProductImage::from_fn(self.width, self.height, 0, 1, |i, j| {
            PixelValue::new(vec![], vec![self.px(i, j)[c]]).unwrap()
        })
        .unwrap()
    }

    pub fn from_channel_products(ch: [&ProductImage; 3]) -> Result<RgbImage> {
        for c in ch {
            if c.signature() != (0, 1) || c.width() != ch[0].width() || c.height() != ch[0].height()
            {
                return Err(Error::DimensionMismatch("channel planes disagree".into()));
            }
        }
        RgbImage::from_fn(ch[0].width(), ch[0].height(), |i, j| {
            [ch[0].px(i, j)[0], ch[1].px(i, j)[0], ch[2].px(i, j)[0]]
        })
    }
}

impl HsvImage {
    fn normalize(v: [f64; 3]) -> [f64; 3] {
        [wrap_hue(v[0]), clamp01(v[1]), clamp01(v[2])]
    }

    /// Embeds into the product space S¹ × ℝ², signature (1, 2): the hue as
    /// an angle in radians, saturation and value as linear components.
    pub fn to_product(&self) -> ProductImage {
        ProductImage::from_fn(self.width, self.height, 1, 2, |i, j| {
            let [h, s, v] = self.px(i, j);
            PixelValue::new(vec![hue_to_angle(h)], vec![s, v]).unwrap()
        })
        .unwrap()
    }

    pub fn from_product(p: &ProductImage) -> Result<HsvImage> {
        if p.signature() != (1, 2) {
            return Err(Error::DimensionMismatch(
                "hsv raster needs signature (1, 2)".into(),
            ));
        }
        HsvImage::from_fn(p.width(), p.height(), |i, j| {
            let v = p.px(i, j);
            [angle_to_hue(v[0]), v[1], v[2]]
        })
    }

    /// The hue channel alone as an S¹-valued image, signature (1, 0).
    pub fn hue_product(&self) -> ProductImage {
        ProductImage::from_fn(self.width, self.height, 1, 0, |i, j| {
            PixelValue::new(vec![hue_to_angle(self.px(i, j)[0])], vec![]).unwrap()
        })
        .unwrap()
    }

    /// Saturation (c = 1) or value (c = 2) as a linear image, signature (0, 1).
    pub fn linear_channel_product(&self, c: usize) -> ProductImage {
        assert!(c == 1 || c == 2, "hue is not a linear channel");
        ProductImage::from_fn(self.width, self.height, 0, 1, |i, j| {
            PixelValue::new(vec![], vec![self.px(i, j)[c]]).unwrap()
        })
        .unwrap()
    }

    pub fn from_channel_products(
        hue: &ProductImage,
        sat: &ProductImage,
        val: &ProductImage,
    ) -> Result<HsvImage> {
        if hue.signature() != (1, 0)
            || sat.signature() != (0, 1)
            || val.signature() != (0, 1)
            || sat.width() != hue.width()
            || val.width() != hue.width()
            || sat.height() != hue.height()
            || val.height() != hue.height()
        {
            return Err(Error::DimensionMismatch("channel planes disagree".into()));
        }
        HsvImage::from_fn(hue.width(), hue.height(), |i, j| {
            [angle_to_hue(hue.px(i, j)[0]), sat.px(i, j)[0], val.px(i, j)[0]]
        })
    }
}

/// Converts a whole raster to HSV.
pub fn rgb_to_hsv(img: &RgbImage) -> HsvImage {
    HsvImage::from_fn(img.width(), img.height(), |i, j| rgb_to_hsv_px(img.px(i, j))).unwrap()
}

/// Converts a whole raster back to RGB.
pub fn hsv_to_rgb(img: &HsvImage) -> RgbImage {
    RgbImage::from_fn(img.width(), img.height(), |i, j| hsv_to_rgb_px(img.px(i, j))).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn primary_colors() {
        assert_eq!(rgb_to_hsv_px([1.0, 0.0, 0.0]), [0.0, 1.0, 1.0]);
        let g = rgb_to_hsv_px([0.0, 1.0, 0.0]);
        assert!((g[0] - 1.0 / 3.0).abs() < 1e-15 && g[1] == 1.0 && g[2] == 1.0);
        let b = rgb_to_hsv_px([0.0, 0.0, 1.0]);
        assert!((b[0] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn gray_axis() {
        for c in [0.0, 0.25, 0.7, 1.0] {
            assert_eq!(rgb_to_hsv_px([c, c, c]), [0.0, 0.0, c]);
        }
    }

    #[test]
    fn round_trip_random_colors() {
        let mut rng = ChaCha8Rng::seed_from_u64(60);
        for _ in 0..10_000 {
            let rgb = [rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()];
            let back = hsv_to_rgb_px(rgb_to_hsv_px(rgb));
            for c in 0..3 {
                assert!(
                    (rgb[c] - back[c]).abs() <= 1e-12,
                    "{rgb:?} -> {back:?} channel {c}"
                );
            }
        }
    }

    #[test]
    fn hue_is_modular() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for _ in 0..1000 {
            let h = rng.gen::<f64>();
            let s = rng.gen_range(0.1..1.0);
            let v = rng.gen_range(0.1..1.0);
            let a = rgb_to_hsv_px(hsv_to_rgb_px([h, s, v]));
            let b = rgb_to_hsv_px(hsv_to_rgb_px([h + 1.0, s, v]));
            assert!((a[0] - b[0]).abs() <= 1e-12);
        }
    }

    #[test]
    fn hue_angle_round_trip() {
        for h in [0.0, 0.1, 0.49999, 0.5, 0.75, 0.999] {
            assert!((angle_to_hue(hue_to_angle(h)) - h).abs() <= 1e-12);
        }
    }

    #[test]
    fn product_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(62);
        let rgb = RgbImage::from_fn(7, 5, |_, _| {
            [rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()]
        })
        .unwrap();
        assert_eq!(RgbImage::from_product(&rgb.to_product()).unwrap(), rgb);

        let hsv = rgb_to_hsv(&rgb);
        let back = HsvImage::from_product(&hsv.to_product()).unwrap();
        for (a, b) in hsv.pixels().iter().zip(back.pixels()) {
            for c in 0..3 {
                assert!((a[c] - b[c]).abs() <= 1e-12);
            }
        }

        let rebuilt = HsvImage::from_channel_products(
            &hsv.hue_product(),
            &hsv.linear_channel_product(1),
            &hsv.linear_channel_product(2),
        )
        .unwrap();
        for (a, b) in hsv.pixels().iter().zip(rebuilt.pixels()) {
            for c in 0..3 {
                assert!((a[c] - b[c]).abs() <= 1e-12);
            }
        }

        let r2 = RgbImage::from_channel_products([
            &rgb.channel_product(0),
            &rgb.channel_product(1),
            &rgb.channel_product(2),
        ])
        .unwrap();
        assert_eq!(r2, rgb);
    }

    #[test]
    fn png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.png");
        let img = RgbImage::from_fn(16, 12, |i, j| {
            [
                (i as f64 / 15.0 * 255.0).round() / 255.0,
                (j as f64 / 11.0 * 255.0).round() / 255.0,
                0.5f64 * 255.0 / 255.0 / 255.0 * 255.0,
            ]
        })
        .unwrap();
        img.save_png(&path).unwrap();
        let back = RgbImage::load_png(&path).unwrap();
        for (a, b) in img.pixels().iter().zip(back.pixels()) {
            for c in 0..3 {
                assert!((a[c] - b[c]).abs() <= 0.5 / 255.0 + 1e-12);
            }
        }
    }
}
