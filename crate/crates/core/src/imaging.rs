//! Raster primitives shared by every stage: grayscale conversion, 3×3
//! convolution with clamp-to-edge borders, and variance statistics.
//!
//! Samples are `f64` so that convolution output can stay signed and
//! unclamped; the variance-of-Laplacian statistic depends on it.

use std::path::Path;

use image::RgbImage;

use crate::error::{Error, Result};

/// Single-channel luminance raster, row-major, samples in `[0, 255]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!("zero-sized raster {width}x{height}")));
        }
        if data.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "expected {} samples for {width}x{height}, got {}",
                width * height,
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite() || **v < 0.0 || **v > 255.0) {
            return Err(Error::InvalidImage(format!("sample {bad} outside [0, 255]")));
        }
        Ok(Self { width, height, data })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Sample with clamp-to-edge addressing.
    #[inline]
    fn clamped(&self, x: isize, y: isize) -> f64 {
        let cx = x.clamp(0, self.width as isize - 1) as usize;
        let cy = y.clamp(0, self.height as isize - 1) as usize;
        self.data[cy * self.width + cx]
    }
}

/// Signed raster produced by convolution. Samples may be negative.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedRaster {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

/// 3×3 convolution kernel, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel3x3([f64; 9]);

impl Kernel3x3 {
    pub fn new(coefficients: [f64; 9]) -> Result<Self> {
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidImage("kernel coefficients must be finite".into()));
        }
        Ok(Self(coefficients))
    }

    pub fn identity() -> Self {
        Self([0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0])
    }

    /// 4-neighbour discrete Laplacian `[[0,1,0],[1,-4,1],[0,1,0]]`.
    pub fn laplacian() -> Self {
        Self([0.0, 1.0, 0.0, 1.0, -4.0, 1.0, 0.0, 1.0, 0.0])
    }

    pub fn coefficients(&self) -> &[f64; 9] {
        &self.0
    }

    #[inline]
    fn apply(&self, img: &GrayImage, x: usize, y: usize) -> f64 {
        let (x, y) = (x as isize, y as isize);
        let mut acc = 0.0;
        for ky in 0..3 {
            for kx in 0..3 {
                let c = self.0[ky * 3 + kx];
                if c != 0.0 {
                    acc += c * img.clamped(x + kx as isize - 1, y + ky as isize - 1);
                }
            }
        }
        acc
    }
}

/// BT.601 luminance of an 8-bit RGB raster.
pub fn to_grayscale(image: &RgbImage) -> Result<GrayImage> {
    let (w, h) = image.dimensions();
    if w == 0 || h == 0 {
        return Err(Error::InvalidImage(format!("zero-sized raster {w}x{h}")));
    }
    // Integer weights keep pure greys exact.
    let data = image
        .pixels()
        .map(|p| {
            let [r, g, b] = p.0;
            (299 * r as u32 + 587 * g as u32 + 114 * b as u32) as f64 / 1000.0
        })
        .collect();
    GrayImage::new(w as usize, h as usize, data)
}

/// Decode a PNG or JPEG file into a grayscale raster.
pub fn load_gray(path: &Path) -> Result<GrayImage> {
    let decoded = image::ImageReader::open(path)?
        .with_guessed_format()?
        .decode()
        .map_err(|e| Error::Decode {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
    to_grayscale(&decoded.into_rgb8())
}

/// Convolve with clamp-to-edge borders; output is signed and unclamped.
pub fn convolve3x3(img: &GrayImage, kernel: &Kernel3x3) -> SignedRaster {
    let mut data = Vec::with_capacity(img.width * img.height);
    for y in 0..img.height {
        for x in 0..img.width {
            data.push(kernel.apply(img, x, y));
        }
    }
    SignedRaster {
        width: img.width,
        height: img.height,
        data,
    }
}

/// Population variance (divide by N), two-pass.
pub fn variance(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidImage("variance of empty raster".into()));
    }
    if samples.iter().all(|&v| v == samples[0]) {
        return Ok(0.0);
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let mut sq = 0.0;
    let mut comp = 0.0;
    for v in samples {
        let d = v - mean;
        sq += d * d;
        comp += d;
    }
    // Corrected two-pass: `comp` absorbs rounding in the mean.
    Ok(((sq - comp * comp / n) / n).max(0.0))
}

/// Variance of the 4-neighbour Laplacian response.
///
/// Computes the response on the fly twice rather than materialising the
/// signed raster, so peak memory stays at one input frame.
pub fn variance_of_laplacian(img: &GrayImage) -> f64 {
    let k = Kernel3x3::laplacian();
    let n = (img.width * img.height) as f64;
    let mut sum = 0.0;
    for y in 0..img.height {
        for x in 0..img.width {
            sum += k.apply(img, x, y);
        }
    }
    let mean = sum / n;
    let mut sq = 0.0;
    let mut comp = 0.0;
    for y in 0..img.height {
        for x in 0..img.width {
            let d = k.apply(img, x, y) - mean;
            sq += d * d;
            comp += d;
        }
    }
    ((sq - comp * comp / n) / n).max(0.0)
}

/// Box-average downscale by an integer factor. Factor 1 returns a copy.
pub fn downscale(img: &GrayImage, factor: usize) -> Result<GrayImage> {
    if factor == 0 {
        return Err(Error::Config("downscale factor must be >= 1".into()));
    }
    if factor == 1 {
        return Ok(img.clone());
    }
    let w = (img.width / factor).max(1);
    let h = (img.height / factor).max(1);
    resize_area(img, w, h)
}

/// Area-average resize; each output pixel averages the source pixels whose
/// index falls in its box.
pub fn resize_area(img: &GrayImage, width: usize, height: usize) -> Result<GrayImage> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidImage(format!("zero-sized target {width}x{height}")));
    }
    let bounds = |o: usize, out: usize, src: usize| {
        let lo = o * src / out;
        let hi = ((o + 1) * src / out).max(lo + 1).min(src);
        (lo, hi)
    };
    let mut data = Vec::with_capacity(width * height);
    for oy in 0..height {
        let (y0, y1) = bounds(oy, height, img.height);
        for ox in 0..width {
            let (x0, x1) = bounds(ox, width, img.width);
            let mut acc = 0.0;
            for y in y0..y1 {
                acc += img.data[y * img.width + x0..y * img.width + x1]
                    .iter()
                    .sum::<f64>();
            }
            data.push(acc / ((y1 - y0) * (x1 - x0)) as f64);
        }
    }
    GrayImage::new(width, height, data)
}

/// Separable Gaussian blur with clamp-to-edge borders and a `ceil(3σ)`
/// support. `sigma <= 0` returns the input unchanged.
pub fn gaussian_blur(img: &GrayImage, sigma: f64) -> GrayImage {
    if sigma.is_nan() || sigma <= 0.0 {
        return img.clone();
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let mut weights: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);

    let (w, h) = (img.width as isize, img.height as isize);
    let mut tmp = vec![0.0; img.data.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (i, wt) in weights.iter().enumerate() {
                acc += wt * img.clamped(x + i as isize - radius, y);
            }
            tmp[(y * w + x) as usize] = acc;
        }
    }
    let mut out = vec![0.0; img.data.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (i, wt) in weights.iter().enumerate() {
                let sy = (y + i as isize - radius).clamp(0, h - 1);
                acc += wt * tmp[(sy * w + x) as usize];
            }
            out[(y * w + x) as usize] = acc.clamp(0.0, 255.0);
        }
    }
    GrayImage {
        width: img.width,
        height: img.height,
        data: out,
    }
}
