//! Raster containers, file I/O and resampling.
//!
//! Channel values are normalized to `[0, 1]`. Trimaps follow the
//! alphamatting convention (0 background, 255 foreground, anything
//! between unknown) with a tolerance band for compression noise.

use std::path::Path;

use image::{DynamicImage, GrayImage, ImageBuffer, Luma, Rgb, Rgba};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage<T> {
    height: usize,
    width: usize,
    data: Vec<T>,
}

impl<T: Real> RgbImage<T> {
    /// Wraps row-major RGB triples, validating length and channel range.
    pub fn new(height: usize, width: usize, data: Vec<T>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::ZeroArea);
        }
        if data.len() != height * width * 3 {
            return Err(Error::invalid(format!(
                "rgb buffer length {} != {}x{}x3",
                data.len(),
                height,
                width
            )));
        }
        if let Some(v) = data.iter().find(|v| !(**v >= T::zero() && **v <= T::one())) {
            return Err(Error::invalid(format!("channel value {v} outside [0,1]")));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    /// Builds an image from a per-pixel closure; values are clamped to `[0, 1]`.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> [T; 3]) -> Self {
        assert!(height > 0 && width > 0, "zero-area image");
        let mut data = Vec::with_capacity(height * width * 3);
        for r in 0..height {
            for c in 0..width {
                data.extend(f(r, c).iter().map(|&v| clamp01(v)));
            }
        }
        Self {
            height,
            width,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn pixel_count(&self) -> usize {
        self.height * self.width
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    /// RGB of the pixel at linear (row-major) index `idx`.
    pub fn pixel(&self, idx: usize) -> [T; 3] {
        let o = idx * 3;
        [self.data[o], self.data[o + 1], self.data[o + 2]]
    }

    pub fn at(&self, row: usize, col: usize) -> [T; 3] {
        self.pixel(row * self.width + col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Background,
    Foreground,
    Unknown,
}

impl Label {
    /// Classifies an 8-bit trimap value: `[0,10]` background, `[245,255]` foreground.
    pub fn from_u8(v: u8) -> Self {
        match v {
            0..=10 => Label::Background,
            245..=255 => Label::Foreground,
            _ => Label::Unknown,
        }
    }

    /// Target alpha of a labeled pixel.
    pub fn target<T: Real>(self) -> Option<T> {
        match self {
            Label::Background => Some(T::zero()),
            Label::Foreground => Some(T::one()),
            Label::Unknown => None,
        }
    }

    pub fn is_known(self) -> bool {
        self != Label::Unknown
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trimap {
    height: usize,
    width: usize,
    labels: Vec<Label>,
}

impl Trimap {
    pub fn new(height: usize, width: usize, labels: Vec<Label>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::ZeroArea);
        }
        if labels.len() != height * width {
            return Err(Error::invalid(format!(
                "trimap length {} != {}x{}",
                labels.len(),
                height,
                width
            )));
        }
        Ok(Self {
            height,
            width,
            labels,
        })
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> Label) -> Self {
        assert!(height > 0 && width > 0, "zero-area trimap");
        let labels = (0..height * width).map(|i| f(i / width, i % width)).collect();
        Self {
            height,
            width,
            labels,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn unknown_count(&self) -> usize {
        self.labels.iter().filter(|l| !l.is_known()).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaMatte<T> {
    height: usize,
    width: usize,
    values: Vec<T>,
}

impl<T: Real> AlphaMatte<T> {
    pub fn new(height: usize, width: usize, values: Vec<T>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::ZeroArea);
        }
        if values.len() != height * width {
            return Err(Error::invalid(format!(
                "matte length {} != {}x{}",
                values.len(),
                height,
                width
            )));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= T::zero() && **v <= T::one())) {
            return Err(Error::invalid(format!("alpha value {v} outside [0,1]")));
        }
        Ok(Self {
            height,
            width,
            values,
        })
    }

    pub fn filled(height: usize, width: usize, value: T) -> Self {
        Self::from_fn(height, width, |_, _| value)
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        assert!(height > 0 && width > 0, "zero-area matte");
        let values = (0..height * width)
            .map(|i| clamp01(f(i / width, i % width)))
            .collect();
        Self {
            height,
            width,
            values,
        }
    }

    /// Known pixels take their trimap value, unknown ones keep `self`.
    pub fn overwrite_known(&mut self, trimap: &Trimap) {
        debug_assert_eq!(self.dims(), trimap.dims());
        for (v, l) in self.values.iter_mut().zip(trimap.labels()) {
            if let Some(t) = l.target::<T>() {
                *v = t;
            }
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn at(&self, row: usize, col: usize) -> T {
        self.values[row * self.width + col]
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }
}

pub(crate) fn clamp01<T: Real>(v: T) -> T {
    if v.is_nan() {
        return T::zero();
    }
    v.max(T::zero()).min(T::one())
}

fn decode(path: &Path) -> Result<DynamicImage> {
    if !path.exists() {
        return Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
        ));
    }
    let img = image::ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?
        .decode()
        .map_err(|source| Error::Decode {
            path: path.to_path_buf(),
            source,
        })?;
    if img.width() == 0 || img.height() == 0 {
        return Err(Error::ZeroArea);
    }
    Ok(img)
}

enum Depth {
    Eight,
    Sixteen,
}

fn depth_of(img: &DynamicImage, path: &Path) -> Result<Depth> {
    match img {
        DynamicImage::ImageLuma8(_)
        | DynamicImage::ImageLumaA8(_)
        | DynamicImage::ImageRgb8(_)
        | DynamicImage::ImageRgba8(_) => Ok(Depth::Eight),
        DynamicImage::ImageLuma16(_)
        | DynamicImage::ImageLumaA16(_)
        | DynamicImage::ImageRgb16(_)
        | DynamicImage::ImageRgba16(_) => Ok(Depth::Sixteen),
        other => Err(Error::UnsupportedFormat {
            path: path.to_path_buf(),
            format: format!("{:?}", other.color()),
        }),
    }
}

/// Loads an 8- or 16-bit PNG/PPM as normalized RGB; grayscale is replicated.
pub fn load_image<T: Real>(path: impl AsRef<Path>) -> Result<RgbImage<T>> {
    let path = path.as_ref();
    let img = decode(path)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data: Vec<T> = match depth_of(&img, path)? {
        Depth::Eight => {
            let max = T::lit(255.0);
            img.to_rgb8()
                .into_raw()
                .into_iter()
                .map(|v| T::lit(v as f64) / max)
                .collect()
        }
        Depth::Sixteen => {
            let max = T::lit(65535.0);
            img.to_rgb16()
                .into_raw()
                .into_iter()
                .map(|v| T::lit(v as f64) / max)
                .collect()
        }
    };
    RgbImage::new(h, w, data)
}

fn load_gray_u8(path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let img = decode(path)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let raw = match depth_of(&img, path)? {
        Depth::Eight => img.to_luma8().into_raw(),
        Depth::Sixteen => img
            .to_luma16()
            .into_raw()
            .into_iter()
            .map(|v| ((v as u32 + 128) / 257) as u8)
            .collect(),
    };
    Ok((h, w, raw))
}

pub fn load_trimap(path: impl AsRef<Path>) -> Result<Trimap> {
    let (h, w, raw) = load_gray_u8(path.as_ref())?;
    Trimap::new(h, w, raw.into_iter().map(Label::from_u8).collect())
}

/// Loads a ground-truth matte stored as a grayscale raster.
pub fn load_alpha<T: Real>(path: impl AsRef<Path>) -> Result<AlphaMatte<T>> {
    let path = path.as_ref();
    let img = decode(path)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let values = match depth_of(&img, path)? {
        Depth::Eight => img
            .to_luma8()
            .into_raw()
            .into_iter()
            .map(|v| T::lit(v as f64 / 255.0))
            .collect(),
        Depth::Sixteen => img
            .to_luma16()
            .into_raw()
            .into_iter()
            .map(|v| T::lit(v as f64 / 65535.0))
            .collect(),
    };
    AlphaMatte::new(h, w, values)
}

/// 8-bit quantization with round-half-up.
pub fn quantize_u8<T: Real>(v: T) -> u8 {
    let scaled = clamp01(v).to_f64_lossy() * 255.0;
    (scaled + 0.5).floor().clamp(0.0, 255.0) as u8
}

fn save_dynamic(img: DynamicImage, path: &Path) -> Result<()> {
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|source| Error::Encode {
            path: path.to_path_buf(),
            source,
        })
}

/// Writes the matte as an 8-bit single-channel PNG, `round(α·255)`.
pub fn save_alpha<T: Real>(matte: &AlphaMatte<T>, path: impl AsRef<Path>) -> Result<()> {
    let raw: Vec<u8> = matte.values().iter().map(|&v| quantize_u8(v)).collect();
    let buf: GrayImage = ImageBuffer::<Luma<u8>, _>::from_raw(
        matte.width() as u32,
        matte.height() as u32,
        raw,
    )
    .expect("buffer sized from matte");
    save_dynamic(DynamicImage::ImageLuma8(buf), path.as_ref())
}

/// Writes a trimap using the canonical values 0 / 128 / 255.
pub fn save_trimap(trimap: &Trimap, path: impl AsRef<Path>) -> Result<()> {
    let raw: Vec<u8> = trimap
        .labels()
        .iter()
        .map(|l| match l {
            Label::Background => 0,
            Label::Unknown => 128,
            Label::Foreground => 255,
        })
        .collect();
    let buf: GrayImage =
        ImageBuffer::from_raw(trimap.width() as u32, trimap.height() as u32, raw)
            .expect("buffer sized from trimap");
    save_dynamic(DynamicImage::ImageLuma8(buf), path.as_ref())
}

pub fn save_rgb<T: Real>(img: &RgbImage<T>, path: impl AsRef<Path>) -> Result<()> {
    let raw: Vec<u8> = img.data().iter().map(|&v| quantize_u8(v)).collect();
    let buf = ImageBuffer::<Rgb<u8>, _>::from_raw(img.width() as u32, img.height() as u32, raw)
        .expect("buffer sized from image");
    save_dynamic(DynamicImage::ImageRgb8(buf), path.as_ref())
}

/// Writes straight (non-premultiplied) RGBA bytes.
pub(crate) fn save_rgba_straight(
    height: usize,
    width: usize,
    raw: Vec<u8>,
    path: &Path,
) -> Result<()> {
    let buf = ImageBuffer::<Rgba<u8>, _>::from_raw(width as u32, height as u32, raw)
        .expect("buffer sized from image");
    save_dynamic(DynamicImage::ImageRgba8(buf), path)
}

/// Source sample position for output index `dst` under half-pixel-center alignment.
fn source_coord(dst: usize, in_len: usize, out_len: usize) -> (usize, usize, f64) {
    let scale = in_len as f64 / out_len as f64;
    let x = ((dst as f64 + 0.5) * scale - 0.5).clamp(0.0, (in_len - 1) as f64);
    let x0 = x.floor() as usize;
    let x1 = (x0 + 1).min(in_len - 1);
    (x0, x1, x - x0 as f64)
}

fn nearest_coord(dst: usize, in_len: usize, out_len: usize) -> usize {
    let scale = in_len as f64 / out_len as f64;
    (((dst as f64 + 0.5) * scale).floor() as usize).min(in_len - 1)
}

fn bilinear_plane<T: Real>(
    src: &[T],
    channels: usize,
    (in_h, in_w): (usize, usize),
    (out_h, out_w): (usize, usize),
) -> Vec<T> {
    let mut out = Vec::with_capacity(out_h * out_w * channels);
    let cols: Vec<_> = (0..out_w).map(|c| source_coord(c, in_w, out_w)).collect();
    for r in 0..out_h {
        let (r0, r1, fy) = source_coord(r, in_h, out_h);
        let fy = T::lit(fy);
        for &(c0, c1, fx) in &cols {
            let fx = T::lit(fx);
            for ch in 0..channels {
                let at = |rr: usize, cc: usize| src[(rr * in_w + cc) * channels + ch];
                let top = at(r0, c0) * (T::one() - fx) + at(r0, c1) * fx;
                let bot = at(r1, c0) * (T::one() - fx) + at(r1, c1) * fx;
                out.push(clamp01(top * (T::one() - fy) + bot * fy));
            }
        }
    }
    out
}

fn check_target(out_h: usize, out_w: usize) -> Result<()> {
    if out_h == 0 || out_w == 0 {
        return Err(Error::invalid("resize target dimension must be >= 1"));
    }
    Ok(())
}

/// Bilinear resampling with half-pixel centers and edge clamping.
pub fn resize_image<T: Real>(img: &RgbImage<T>, out_h: usize, out_w: usize) -> Result<RgbImage<T>> {
    check_target(out_h, out_w)?;
    if img.dims() == (out_h, out_w) {
        return Ok(img.clone());
    }
    let data = bilinear_plane(img.data(), 3, img.dims(), (out_h, out_w));
    Ok(RgbImage {
        height: out_h,
        width: out_w,
        data,
    })
}

/// Bilinear resampling of a matte (used for ground truth).
pub fn resize_alpha<T: Real>(
    matte: &AlphaMatte<T>,
    out_h: usize,
    out_w: usize,
) -> Result<AlphaMatte<T>> {
    check_target(out_h, out_w)?;
    if matte.dims() == (out_h, out_w) {
        return Ok(matte.clone());
    }
    let values = bilinear_plane(matte.values(), 1, matte.dims(), (out_h, out_w));
    Ok(AlphaMatte {
        height: out_h,
        width: out_w,
        values,
    })
}

/// Nearest-neighbor resampling, which keeps the three-label alphabet.
pub fn resize_trimap(trimap: &Trimap, out_h: usize, out_w: usize) -> Result<Trimap> {
    check_target(out_h, out_w)?;
    if trimap.dims() == (out_h, out_w) {
        return Ok(trimap.clone());
    }
    let (in_h, in_w) = trimap.dims();
    let cols: Vec<usize> = (0..out_w).map(|c| nearest_coord(c, in_w, out_w)).collect();
    let mut labels = Vec::with_capacity(out_h * out_w);
    for r in 0..out_h {
        let sr = nearest_coord(r, in_h, out_h);
        labels.extend(cols.iter().map(|&sc| trimap.labels[sr * in_w + sc]));
    }
    Trimap::new(out_h, out_w, labels)
}
