//! Foreground extraction and `over` compositing.
//!
//! The foreground color is approximated by the observed color, so the
//! extracted layer stores `α·I` (premultiplied). This is exact wherever
//! `α ∈ {0, 1}`.

use std::path::Path;

use crate::error::{Error, Result};
use crate::imaging::{clamp01, quantize_u8, save_rgba_straight, AlphaMatte, RgbImage};
use crate::scalar::Real;

/// Premultiplied RGBA.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbaImage<T> {
    height: usize,
    width: usize,
    data: Vec<T>,
}

impl<T: Real> RgbaImage<T> {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    /// Premultiplied `[r, g, b, a]` at linear index `idx`.
    pub fn pixel(&self, idx: usize) -> [T; 4] {
        let o = idx * 4;
        [
            self.data[o],
            self.data[o + 1],
            self.data[o + 2],
            self.data[o + 3],
        ]
    }
}

fn check_dims(expected: (usize, usize), actual: (usize, usize)) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

pub fn extract_foreground<T: Real>(img: &RgbImage<T>, matte: &AlphaMatte<T>) -> Result<RgbaImage<T>> {
    check_dims(img.dims(), matte.dims())?;
    let mut data = Vec::with_capacity(img.pixel_count() * 4);
    for (i, &a) in matte.values().iter().enumerate() {
        let px = img.pixel(i);
        data.extend([px[0] * a, px[1] * a, px[2] * a, a]);
    }
    Ok(RgbaImage {
        height: img.height(),
        width: img.width(),
        data,
    })
}

/// `fg.color + (1 − fg.alpha) · bg`, clamped to `[0, 1]`.
pub fn composite<T: Real>(fg: &RgbaImage<T>, bg: &RgbImage<T>) -> Result<RgbImage<T>> {
    check_dims(fg.dims(), bg.dims())?;
    let w = fg.width;
    Ok(RgbImage::from_fn(fg.height, fg.width, |r, c| {
        let i = r * w + c;
        let f = fg.pixel(i);
        let b = bg.pixel(i);
        let keep = T::one() - f[3];
        [
            clamp01(f[0] + keep * b[0]),
            clamp01(f[1] + keep * b[1]),
            clamp01(f[2] + keep * b[2]),
        ]
    }))
}

/// Writes an 8-bit RGBA PNG (un-premultiplied on the way out).
pub fn save_rgba<T: Real>(img: &RgbaImage<T>, path: impl AsRef<Path>) -> Result<()> {
    let mut raw = Vec::with_capacity(img.data.len());
    for px in img.data.chunks_exact(4) {
        let a = px[3];
        for &ch in &px[..3] {
            let straight = if a > T::zero() { ch / a } else { T::zero() };
            raw.push(quantize_u8(straight));
        }
        raw.push(quantize_u8(a));
    }
    save_rgba_straight(img.height, img.width, raw, path.as_ref())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solid(h: usize, w: usize, c: [f64; 3]) -> RgbImage<f64> {
        RgbImage::from_fn(h, w, |_, _| c)
    }

    #[test]
    fn opaque_and_transparent() {
        let img = solid(2, 2, [0.8, 0.4, 0.2]);
        let fg = extract_foreground(&img, &AlphaMatte::filled(2, 2, 1.0)).unwrap();
        assert_eq!(fg.pixel(0), [0.8, 0.4, 0.2, 1.0]);
        let bg = solid(2, 2, [0.1, 0.2, 0.3]);
        assert_eq!(composite(&fg, &bg).unwrap(), img);

        let clear = extract_foreground(&img, &AlphaMatte::filled(2, 2, 0.0)).unwrap();
        assert_eq!(clear.pixel(3), [0.0; 4]);
        assert_eq!(composite(&clear, &bg).unwrap(), bg);
    }

    #[test]
    fn half_alpha_premultiplies() {
        let img = solid(1, 1, [0.8, 0.4, 0.2]);
        let fg = extract_foreground(&img, &AlphaMatte::filled(1, 1, 0.5)).unwrap();
        assert_eq!(fg.pixel(0), [0.4, 0.2, 0.1, 0.5]);
        for px in fg.data().chunks_exact(4) {
            assert!(px[..3].iter().all(|&c| c <= px[3] + 1e-9));
        }
    }

    #[test]
    fn mismatch_rejected() {
        let img = solid(2, 2, [0.5; 3]);
        assert!(extract_foreground(&img, &AlphaMatte::filled(2, 3, 0.5)).is_err());
        let fg = extract_foreground(&img, &AlphaMatte::filled(2, 2, 0.5)).unwrap();
        assert!(composite(&fg, &solid(3, 2, [0.0; 3])).is_err());
    }

    #[test]
    fn rgba_png_written() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("fg.png");
        let img = solid(2, 2, [0.8, 0.4, 0.2]);
        let fg = extract_foreground(&img, &AlphaMatte::filled(2, 2, 0.5)).unwrap();
        save_rgba(&fg, &p).unwrap();
        let back = image::open(&p).unwrap().to_rgba8();
        assert_eq!(back.get_pixel(0, 0).0, [204, 102, 51, 128]);
    }
}
