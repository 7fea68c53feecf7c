//! Grayscale image containers and the raster reshape between images and
//! flat vectors.
//!
//! All intensities are `f64` on the 8-bit scale `[0, 255]`; nothing is
//! quantized until an image is written to disk.

use crate::error::{Error, Result};

/// Peak value used for PSNR.
pub const PEAK: f64 = 255.0;

/// PSNR reported for identical images.
pub const PSNR_CAP_DB: f64 = 99.0;

/// A 2-D grayscale intensity grid stored in row-major raster order.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

/// A flattened image, `R(I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageVector(pub Vec<f64>);

impl Image {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::dims(
                format!("{} samples ({}x{})", width * height, height, width),
                format!("{} samples", data.len()),
            ));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sample {i} is not finite"
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                data.push(f(row, col));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.width + col] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Clamp every sample to `[0, 255]`.
    pub fn clamped(&self) -> Image {
        Image {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|v| v.clamp(0.0, PEAK)).collect(),
        }
    }

    /// Round half-up and clamp to 8-bit values, as done when saving.
    pub fn quantized_u8(&self) -> Vec<u8> {
        self.data.iter().map(|&v| quantize_u8(v)).collect()
    }

    pub fn same_dims(&self, other: &Image) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::dims(
                format!("{}x{}", self.height, self.width),
                format!("{}x{}", other.height, other.width),
            ));
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn quantize_u8(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, PEAK) as u8
}

impl ImageVector {
    pub fn zeros(len: usize) -> Self {
        ImageVector(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Row-major flattening `R(I)`.
pub fn reshape(image: &Image) -> ImageVector {
    ImageVector(image.data.clone())
}

/// Inverse of [`reshape`] for an `n1 x n2` (rows x cols) image.
pub fn reshape_inverse(vector: &ImageVector, n1: usize, n2: usize) -> Result<Image> {
    if vector.len() != n1 * n2 {
        return Err(Error::dims(
            format!("vector of length {} for {n1}x{n2}", n1 * n2),
            format!("length {}", vector.len()),
        ));
    }
    Image::new(n2, n1, vector.0.clone())
}

pub fn mse(a: &Image, b: &Image) -> Result<f64> {
    a.same_dims(b)?;
    if a.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(sum / a.len() as f64)
}

/// Peak signal-to-noise ratio with a 255 peak, capped at [`PSNR_CAP_DB`].
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    let mse = mse(a, b)?;
    if mse == 0.0 {
        return Ok(PSNR_CAP_DB);
    }
    Ok((10.0 * (PEAK * PEAK / mse).log10()).min(PSNR_CAP_DB))
}

pub fn mean_psnr(originals: &[Image], decoded: &[Image]) -> Result<f64> {
    if originals.len() != decoded.len() || originals.is_empty() {
        return Err(Error::dims(
            format!("{} views", originals.len()),
            format!("{} views", decoded.len()),
        ));
    }
    let mut sum = 0.0;
    for (a, b) in originals.iter().zip(decoded) {
        sum += psnr(a, b)?;
    }
    Ok(sum / originals.len() as f64)
}
