//! The "PFI" raw product-image file format and PNG mask I/O.
//!
//! PFI layout (little-endian): magic `PFI1`, u32 width N, u32 height M,
//! u32 cyclic count m, u32 linear count n, then (m + n) planes of N·M
//! float64 values in row-major order; cyclic planes store radians in
//! [−π, π).  PNG cannot carry wrapped floats losslessly, hence the raw
//! format.  Masks are PNGs with nonzero pixels marking the inpainting
//! region Ω.

use crate::error::{Error, Result};
use crate::functional::InpaintMask;
use crate::geometry::{wrap_rad, ProductImage};
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: [u8; 4] = *b"PFI1";

/// Writes a product image as a PFI file.
pub fn write_pfi(path: &Path, img: &ProductImage) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    w.write_all(&MAGIC)?;
    let (m, n) = img.signature();
    for v in [img.width(), img.height(), m, n] {
        w.write_all(&(v as u32).to_le_bytes())?;
    }
    let chans = img.chans();
    for plane in 0..chans {
        for p in 0..img.width() * img.height() {
            w.write_all(&img.raw()[p * chans + plane].to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a PFI file back into a product image.
pub fn read_pfi(path: &Path) -> Result<ProductImage> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if magic != MAGIC {
        return Err(Error::InvalidArgument(format!(
            "{}: not a PFI file",
            path.display()
        )));
    }
    let mut header = [0u8; 16];
    r.read_exact(&mut header)?;
    let field = |k: usize| u32::from_le_bytes(header[4 * k..4 * k + 4].try_into().unwrap()) as usize;
    let (width, height, m, n) = (field(0), field(1), field(2), field(3));
    if width == 0 || height == 0 || m + n == 0 {
        return Err(Error::InvalidArgument(format!(
            "{}: degenerate PFI header {width}x{height}, signature ({m}, {n})",
            path.display()
        )));
    }
    let chans = m + n;
    let total = width
        .checked_mul(height)
        .and_then(|t| t.checked_mul(chans))
        .ok_or_else(|| Error::InvalidArgument("PFI dimensions overflow".into()))?;
    let mut data = vec![0.0f64; total];
    let mut buf = [0u8; 8];
    for plane in 0..chans {
        for p in 0..width * height {
            r.read_exact(&mut buf)?;
            let v = f64::from_le_bytes(buf);
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "{}: non-finite sample in plane {plane}",
                    path.display()
                )));
            }
            data[p * chans + plane] = if plane < m { wrap_rad(v) } else { v };
        }
    }
    let mut img = ProductImage::new(width, height, m, n)?;
    img.raw_mut().copy_from_slice(&data);
    Ok(img)
}

/// Reads a PNG mask: any pixel with a nonzero luma marks Ω.
pub fn read_mask_png(path: &Path) -> Result<InpaintMask> {
    let img = image::open(path)?.to_luma8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    Ok(InpaintMask::from_fn(w, h, |i, j| {
        img.get_pixel(i as u32, j as u32)[0] != 0
    }))
}

/// Writes a mask as an 8-bit PNG (Ω white, observed pixels black).
pub fn write_mask_png(path: &Path, mask: &InpaintMask) -> Result<()> {
    let mut img = image::GrayImage::new(mask.width() as u32, mask.height() as u32);
    for j in 0..mask.height() {
        for i in 0..mask.width() {
            img.put_pixel(
                i as u32,
                j as u32,
                image::Luma([if mask.is_masked(i, j) { 255 } else { 0 }]),
            );
        }
    }
    img.save(path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PixelValue;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn pfi_round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(66);
        let img = ProductImage::from_fn(9, 6, 2, 1, |_, _| {
            PixelValue::new(
                vec![rng.gen_range(-PI..PI), rng.gen_range(-PI..PI)],
                vec![rng.gen_range(-10.0..10.0)],
            )
            .unwrap()
        })
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.pfi");
        write_pfi(&path, &img).unwrap();
        let back = read_pfi(&path).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn pfi_rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.pfi");
        std::fs::write(&path, b"not a pfi at all").unwrap();
        assert!(read_pfi(&path).is_err());
    }

    #[test]
    fn mask_png_round_trip() {
        let mask = InpaintMask::from_fn(13, 8, |i, j| (i + 2 * j) % 5 == 0);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.png");
        write_mask_png(&path, &mask).unwrap();
        let back = read_mask_png(&path).unwrap();
        assert_eq!(back, mask);
    }
}
