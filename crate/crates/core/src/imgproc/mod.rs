//! Image ingestion: RGB to gray, Otsu binarization, block-alignment padding.

mod pnm;

use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use pnm::{read_pbm, write_pbm};

/// Side length every padded image is a multiple of (the largest block level).
pub const BLOCK_ALIGN: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        check_dims(width, height, pixels.len())?;
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn histogram(&self) -> [u64; 256] {
        let mut hist = [0u64; 256];
        for &p in &self.pixels {
            hist[p as usize] += 1;
        }
        hist
    }
}

/// Row-major bilevel raster. Each element is 0 or 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    bits: Vec<u8>,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize, bits: Vec<u8>) -> Result<Self> {
        check_dims(width, height, bits.len())?;
        if let Some(pos) = bits.iter().position(|&b| b > 1) {
            return Err(Error::input(format!(
                "bit at index {pos} is {}, expected 0 or 1",
                bits[pos]
            )));
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        Self {
            width,
            height,
            bits: vec![0; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut img = Self::zeros(width, height);
        for y in 0..height {
            for x in 0..width {
                img.bits[y * width + x] = f(x, y) as u8;
            }
        }
        img
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel_count(&self) -> u64 {
        (self.width * self.height) as u64
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, bit: bool) {
        self.bits[y * self.width + x] = bit as u8;
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }
}

/// A block-aligned image that remembers the size of the original.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PaddedImage {
    image: BinaryImage,
    orig_width: usize,
    orig_height: usize,
}

impl PaddedImage {
    /// Assembles a padded image without validating the recorded dimensions;
    /// [`crop`] performs the check.
    pub fn from_parts(image: BinaryImage, orig_width: usize, orig_height: usize) -> Self {
        Self {
            image,
            orig_width,
            orig_height,
        }
    }

    pub fn image(&self) -> &BinaryImage {
        &self.image
    }

    pub fn orig_width(&self) -> usize {
        self.orig_width
    }

    pub fn orig_height(&self) -> usize {
        self.orig_height
    }
}

fn check_dims(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::input(format!(
            "image dimensions must be positive, got {width}x{height}"
        )));
    }
    match width.checked_mul(height) {
        Some(n) if n == len => Ok(()),
        _ => Err(Error::input(format!(
            "{width}x{height} image needs {} samples, got {len}",
            width.saturating_mul(height)
        ))),
    }
}

/// BT.601 luma of an interleaved 8-bit RGB raster.
pub fn to_gray(rgb: &[u8], width: usize, height: usize) -> Result<GrayImage> {
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(3))
        .ok_or_else(|| Error::input("image dimensions overflow"))?;
    if rgb.len() != expected {
        return Err(Error::input(format!(
            "{width}x{height} RGB raster needs {expected} bytes, got {}",
            rgb.len()
        )));
    }
    let pixels = rgb
        .chunks_exact(3)
        .map(|px| {
            let y = 0.299 * px[0] as f64 + 0.587 * px[1] as f64 + 0.114 * px[2] as f64;
            y.round().clamp(0.0, 255.0) as u8
        })
        .collect();
    GrayImage::new(width, height, pixels)
}

/// Otsu's global threshold over a 256-bin histogram.
///
/// Returns the smallest `t` maximizing the between-class variance of the
/// split `[0, t]` vs `(t, 255]`. A histogram with a single occupied bin
/// returns that intensity.
pub fn otsu_threshold<T: Scalar>(hist: &[u64; 256]) -> Result<u8> {
    let total: u64 = hist.iter().sum();
    if total == 0 {
        return Err(Error::input("histogram is empty"));
    }
    let occupied: Vec<usize> = (0..256).filter(|&i| hist[i] > 0).collect();
    if occupied.len() == 1 {
        return Ok(occupied[0] as u8);
    }

    let n = T::from_count(total);
    let sum_all: T = (0..256).fold(T::zero(), |acc, i| {
        acc + T::from_count(hist[i]) * T::from_count(i as u64)
    });
    let mean_all = sum_all / n;

    let mut best_t = 0u8;
    let mut best_var = T::neg_infinity();
    let mut w0 = 0u64;
    let mut sum0 = T::zero();
    for t in 0..255usize {
        w0 += hist[t];
        sum0 = sum0 + T::from_count(hist[t]) * T::from_count(t as u64);
        let var = if w0 == 0 || w0 == total {
            T::zero()
        } else {
            let omega = T::from_count(w0) / n;
            let mu = sum0 / n;
            let diff = mean_all * omega - mu;
            diff * diff / (omega * (T::one() - omega))
        };
        if var > best_var {
            best_var = var;
            best_t = t as u8;
        }
    }
    Ok(best_t)
}

/// Pixels strictly above the Otsu threshold become 1.
pub fn binarize(img: &GrayImage) -> BinaryImage {
    // A validated GrayImage always has a non-empty histogram.
    let t = otsu_threshold::<f64>(&img.histogram()).expect("non-empty image");
    binarize_at(img, t)
}

pub fn binarize_at(img: &GrayImage, threshold: u8) -> BinaryImage {
    BinaryImage {
        width: img.width,
        height: img.height,
        bits: img.pixels.iter().map(|&p| (p > threshold) as u8).collect(),
    }
}

fn round_up(v: usize) -> usize {
    v.div_ceil(BLOCK_ALIGN) * BLOCK_ALIGN
}

/// Zero-pads both dimensions up to the next multiple of 16.
pub fn pad_to_16(img: &BinaryImage) -> PaddedImage {
    let (w, h) = (img.width, img.height);
    let (pw, ph) = (round_up(w), round_up(h));
    let image = if (pw, ph) == (w, h) {
        img.clone()
    } else {
        let mut bits = vec![0u8; pw * ph];
        for y in 0..h {
            bits[y * pw..y * pw + w].copy_from_slice(&img.bits[y * w..(y + 1) * w]);
        }
        BinaryImage {
            width: pw,
            height: ph,
            bits,
        }
    };
    PaddedImage {
        image,
        orig_width: w,
        orig_height: h,
    }
}

/// Inverse of [`pad_to_16`].
pub fn crop(p: &PaddedImage) -> Result<BinaryImage> {
    let (w, h) = (p.orig_width, p.orig_height);
    let src = &p.image;
    if w == 0 || h == 0 || w > src.width || h > src.height {
        return Err(Error::corrupt(format!(
            "original size {w}x{h} does not fit padded size {}x{}",
            src.width, src.height
        )));
    }
    if (w, h) == (src.width, src.height) {
        return Ok(src.clone());
    }
    let mut bits = Vec::with_capacity(w * h);
    for y in 0..h {
        bits.extend_from_slice(&src.bits[y * src.width..y * src.width + w]);
    }
    Ok(BinaryImage {
        width: w,
        height: h,
        bits,
    })
}

/// Decodes PNG, JPEG, PGM or PPM and converts to gray.
pub fn load_gray(path: &Path) -> Result<GrayImage> {
    let img = image::open(path).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let rgb = img.to_rgb8();
    to_gray(rgb.as_raw(), rgb.width() as usize, rgb.height() as usize)
}

/// Loads any supported image as a binary image. PBM files are taken as-is;
/// everything else is converted to gray and binarized.
pub fn load_binary(path: &Path) -> Result<BinaryImage> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(b"P1") || bytes.starts_with(b"P4") {
        return read_pbm(&bytes);
    }
    Ok(binarize(&load_gray(path)?))
}

/// File extensions [`load_binary`] understands.
pub const IMAGE_EXTENSIONS: [&str; 7] = ["png", "jpg", "jpeg", "pbm", "pgm", "ppm", "pnm"];

/// Image files directly inside `dir`, sorted by file name.
pub fn list_images(dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    let rd = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();
    for entry in rd {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        if path.is_file() && ext.is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.as_str())) {
            out.push(path);
        }
    }
    out.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(out)
}
