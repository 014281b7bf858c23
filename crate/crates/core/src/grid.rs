//! Image container and the pixel-level utilities shared by every stage:
//! seeded Gaussian noise, PSNR, and symmetric padding/cropping.

use crate::error::{Error, Result};
use crate::rng::Xoshiro256pp;

/// 2-D array of real samples, row-major, double precision.
///
/// Values are nominally in 0..=255 but are never clamped internally;
/// quantization happens only when an image is saved.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl ImageGrid {
    /// All-zero grid.
    pub fn new(width: usize, height: usize) -> Self {
        ImageGrid {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Self {
        ImageGrid {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    /// Wraps row-major samples; the length must be `width * height`.
    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::dimension(format!(
                "data length {} does not match {}x{}",
                data.len(),
                width,
                height
            )));
        }
        Ok(ImageGrid {
            width,
            height,
            data,
        })
    }

    /// Seeded uniform random grid with samples in [lo, hi).
    pub fn random_uniform(width: usize, height: usize, lo: f64, hi: f64, seed: u64) -> Self {
        let mut rng = Xoshiro256pp::new(seed);
        let data = (0..width * height).map(|_| rng.next_range(lo, hi)).collect();
        ImageGrid {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        debug_assert!(row < self.height && col < self.width);
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.height && col < self.width);
        self.data[row * self.width + col] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.width..(row + 1) * self.width]
    }

    pub fn same_shape(&self, other: &ImageGrid) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Elementwise map into a new grid.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> ImageGrid {
        ImageGrid {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Elementwise combination of two same-shaped grids.
    pub fn zip_map(&self, other: &ImageGrid, f: impl Fn(f64, f64) -> f64) -> ImageGrid {
        assert!(self.same_shape(other), "shape mismatch in zip_map");
        ImageGrid {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .zip(other.data.iter())
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn add(&self, other: &ImageGrid) -> ImageGrid {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ImageGrid) -> ImageGrid {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> ImageGrid {
        self.map(|x| c * x)
    }

    /// Largest absolute sample.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, &x| m.max(x.abs()))
    }

    /// Largest absolute difference against another grid.
    pub fn max_abs_diff(&self, other: &ImageGrid) -> f64 {
        assert!(self.same_shape(other), "shape mismatch in max_abs_diff");
        self.data
            .iter()
            .zip(other.data.iter())
            .fold(0.0, |m, (&a, &b)| m.max((a - b).abs()))
    }

    /// Sum of squared samples.
    pub fn energy(&self) -> f64 {
        self.data.iter().map(|&x| x * x).sum()
    }

    pub fn mean(&self) -> f64 {
        if self.data.is_empty() {
            0.0
        } else {
            self.data.iter().sum::<f64>() / self.data.len() as f64
        }
    }

    pub fn has_non_finite(&self) -> bool {
        self.data.iter().any(|x| !x.is_finite())
    }

    /// Symmetric (mirror) padding to `new_width` x `new_height`; the original
    /// content is centered, borders are reflected without repeating the edge
    /// sample's neighbor order (half-sample symmetric extension).
    pub fn pad_symmetric(&self, new_width: usize, new_height: usize) -> Result<ImageGrid> {
        if new_width < self.width || new_height < self.height {
            return Err(Error::dimension(
                "padded size must not be smaller than the image".to_string(),
            ));
        }
        let left = (new_width - self.width) / 2;
        let top = (new_height - self.height) / 2;
        let mut out = ImageGrid::new(new_width, new_height);
        for i in 0..new_height {
            let src_i = mirror_index(i as isize - top as isize, self.height);
            for j in 0..new_width {
                let src_j = mirror_index(j as isize - left as isize, self.width);
                out.set(i, j, self.get(src_i, src_j));
            }
        }
        Ok(out)
    }

    /// Extracts the centered `width` x `height` window placed by
    /// [`ImageGrid::pad_symmetric`].
    pub fn crop_centered(&self, width: usize, height: usize) -> Result<ImageGrid> {
        if width > self.width || height > self.height {
            return Err(Error::dimension(
                "crop size exceeds the image".to_string(),
            ));
        }
        let left = (self.width - width) / 2;
        let top = (self.height - height) / 2;
        let mut out = ImageGrid::new(width, height);
        for i in 0..height {
            for j in 0..width {
                out.set(i, j, self.get(top + i, left + j));
            }
        }
        Ok(out)
    }
}

/// Half-sample symmetric reflection of an out-of-range index.
fn mirror_index(idx: isize, len: usize) -> usize {
    let n = len as isize;
    debug_assert!(n > 0);
    let period = 2 * n;
    let mut k = idx.rem_euclid(period);
    if k >= n {
        k = period - 1 - k;
    }
    k as usize
}

/// Additive Gaussian noise description: standard deviation in intensity
/// units plus the stream seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma >= 0.0) {
            return Err(Error::invalid(format!("sigma must be >= 0, got {sigma}")));
        }
        Ok(NoiseSpec { sigma, seed })
    }
}

/// Adds i.i.d. Normal(0, sigma^2) noise from the seeded stream. The stream
/// is consumed pixel by pixel in row-major order, so the same spec always
/// produces bit-identical output.
pub fn add_gaussian_noise(img: &ImageGrid, spec: &NoiseSpec) -> ImageGrid {
    if spec.sigma == 0.0 {
        return img.clone();
    }
    let mut rng = Xoshiro256pp::new(spec.seed);
    let mut out = img.clone();
    for x in out.as_mut_slice() {
        *x += spec.sigma * rng.next_gaussian();
    }
    out
}

/// Peak signal-to-noise ratio in dB; `f64::INFINITY` when the grids agree
/// exactly.
pub fn psnr(a: &ImageGrid, b: &ImageGrid, peak: f64) -> Result<f64> {
    if !a.same_shape(b) {
        return Err(Error::dimension(format!(
            "psnr inputs {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    let n = a.len() as f64;
    let mse = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<f64>()
        / n;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}
