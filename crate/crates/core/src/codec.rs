//! Block-DCT intra codec used to simulate independent compression of each
//! view.
//!
//! Every 8x8 block is transformed with an orthonormal type-II DCT and all
//! coefficients are quantized with the uniform step `2 * qp`. The rate is
//! the zeroth-order empirical entropy of the whole quantized symbol stream
//! times its length; no actual entropy coder is run.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::{Image, PEAK};

pub const BLOCK: usize = 8;
pub const MIN_QP: u32 = 1;
pub const MAX_QP: u32 = 50;
const MAGIC: &[u8; 4] = b"MVJC";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodecConfig {
    qp: u32,
}

impl CodecConfig {
    pub fn new(qp: u32) -> Result<Self> {
        if !(MIN_QP..=MAX_QP).contains(&qp) {
            return Err(Error::InvalidParameter(format!(
                "quality {qp} outside [{MIN_QP}, {MAX_QP}]"
            )));
        }
        Ok(Self { qp })
    }

    pub fn qp(&self) -> u32 {
        self.qp
    }

    /// Quantizer step size.
    pub fn step(&self) -> f64 {
        2.0 * self.qp as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompressedImage {
    width: usize,
    height: usize,
    qp: u32,
    /// Quantized coefficients, block by block in raster order, 64 per block.
    coefficients: Vec<i16>,
    estimated_bits: f64,
}

impl CompressedImage {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn qp(&self) -> u32 {
        self.qp
    }

    pub fn coefficients(&self) -> &[i16] {
        &self.coefficients
    }

    pub fn estimated_bits(&self) -> f64 {
        self.estimated_bits
    }

    fn blocks_x(&self) -> usize {
        self.width.div_ceil(BLOCK)
    }

    fn blocks_y(&self) -> usize {
        self.height.div_ceil(BLOCK)
    }

    /// Flat little-endian serialization:
    /// `"MVJC" | width u32 | height u32 | qp u32 | coefficients i16... | bits f64`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(24 + 2 * self.coefficients.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.width as u32).to_le_bytes());
        out.extend_from_slice(&(self.height as u32).to_le_bytes());
        out.extend_from_slice(&self.qp.to_le_bytes());
        for c in &self.coefficients {
            out.extend_from_slice(&c.to_le_bytes());
        }
        out.extend_from_slice(&self.estimated_bits.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 12 + 4 + 8 || &bytes[..4] != MAGIC {
            return Err(Error::Malformed("not an MVJC stream".into()));
        }
        let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
        let width = u32_at(4) as usize;
        let height = u32_at(8) as usize;
        let qp = u32_at(12);
        CodecConfig::new(qp)?;
        let count = width.div_ceil(BLOCK) * height.div_ceil(BLOCK) * BLOCK * BLOCK;
        let expected = 16 + 2 * count + 8;
        if bytes.len() != expected {
            return Err(Error::Malformed(format!(
                "MVJC stream has {} bytes, expected {expected}",
                bytes.len()
            )));
        }
        let coefficients = bytes[16..16 + 2 * count]
            .chunks_exact(2)
            .map(|c| i16::from_le_bytes([c[0], c[1]]))
            .collect();
        let estimated_bits = f64::from_le_bytes(bytes[16 + 2 * count..].try_into().unwrap());
        if !(estimated_bits >= 0.0) {
            return Err(Error::Malformed("negative bit estimate".into()));
        }
        Ok(Self {
            width,
            height,
            qp,
            coefficients,
            estimated_bits,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_bytes(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
    }
}

/// Orthonormal DCT-II basis, `basis[k][n]`.
fn dct_basis() -> [[f64; BLOCK]; BLOCK] {
    let mut b = [[0.0; BLOCK]; BLOCK];
    let n = BLOCK as f64;
    for (k, row) in b.iter_mut().enumerate() {
        let alpha = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
        for (i, v) in row.iter_mut().enumerate() {
            *v = alpha * ((2 * i + 1) as f64 * k as f64 * std::f64::consts::PI / (2.0 * n)).cos();
        }
    }
    b
}

/// 2-D forward DCT of one block (row-major 64 samples).
pub fn forward_dct(block: &[f64; 64]) -> [f64; 64] {
    let b = dct_basis();
    let mut tmp = [0.0; 64];
    for r in 0..BLOCK {
        for k in 0..BLOCK {
            tmp[r * BLOCK + k] = (0..BLOCK).map(|c| b[k][c] * block[r * BLOCK + c]).sum();
        }
    }
    let mut out = [0.0; 64];
    for k in 0..BLOCK {
        for c in 0..BLOCK {
            out[k * BLOCK + c] = (0..BLOCK).map(|r| b[k][r] * tmp[r * BLOCK + c]).sum();
        }
    }
    out
}

pub fn inverse_dct(coeffs: &[f64; 64]) -> [f64; 64] {
    let b = dct_basis();
    let mut tmp = [0.0; 64];
    for r in 0..BLOCK {
        for c in 0..BLOCK {
            tmp[r * BLOCK + c] = (0..BLOCK).map(|k| b[k][r] * coeffs[k * BLOCK + c]).sum();
        }
    }
    let mut out = [0.0; 64];
    for r in 0..BLOCK {
        for c in 0..BLOCK {
            out[r * BLOCK + c] = (0..BLOCK).map(|k| b[k][c] * tmp[r * BLOCK + k]).sum();
        }
    }
    out
}

/// Empirical zeroth-order entropy of the symbol stream times its length.
fn stream_bits(symbols: &[i16]) -> f64 {
    if symbols.is_empty() {
        return 0.0;
    }
    let mut counts: HashMap<i16, usize> = HashMap::new();
    for &s in symbols {
        *counts.entry(s).or_default() += 1;
    }
    let n = symbols.len() as f64;
    let mut counts: Vec<usize> = counts.into_values().collect();
    counts.sort_unstable();
    let entropy: f64 = counts
        .into_iter()
        .map(|c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum();
    (entropy * n).max(0.0)
}

pub fn encode(image: &Image, config: CodecConfig) -> CompressedImage {
    let (width, height) = (image.width(), image.height());
    let bx = width.div_ceil(BLOCK);
    let by = height.div_ceil(BLOCK);
    let step = config.step();
    let mut coefficients = Vec::with_capacity(bx * by * 64);
    for block_row in 0..by {
        for block_col in 0..bx {
            let mut block = [0.0; 64];
            for r in 0..BLOCK {
                // edge replication
                let y = (block_row * BLOCK + r).min(height.saturating_sub(1));
                for c in 0..BLOCK {
                    let x = (block_col * BLOCK + c).min(width.saturating_sub(1));
                    block[r * BLOCK + c] = if image.is_empty() { 0.0 } else { image.get(y, x) };
                }
            }
            let coeffs = forward_dct(&block);
            coefficients.extend(coeffs.iter().map(|&v| {
                (v / step).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16
            }));
        }
    }
    let estimated_bits = stream_bits(&coefficients);
    CompressedImage {
        width,
        height,
        qp: config.qp(),
        coefficients,
        estimated_bits,
    }
}

pub fn decode(compressed: &CompressedImage) -> Image {
    let step = 2.0 * compressed.qp as f64;
    let bx = compressed.blocks_x();
    let mut out = Image::filled(compressed.width, compressed.height, 0.0);
    for block_row in 0..compressed.blocks_y() {
        for block_col in 0..bx {
            let base = (block_row * bx + block_col) * 64;
            let mut coeffs = [0.0; 64];
            for (dst, &q) in coeffs.iter_mut().zip(&compressed.coefficients[base..base + 64]) {
                *dst = f64::from(q) * step;
            }
            let pixels = inverse_dct(&coeffs);
            for r in 0..BLOCK {
                let y = block_row * BLOCK + r;
                if y >= compressed.height {
                    break;
                }
                for c in 0..BLOCK {
                    let x = block_col * BLOCK + c;
                    if x >= compressed.width {
                        break;
                    }
                    out.set(y, x, pixels[r * BLOCK + c].clamp(0.0, PEAK));
                }
            }
        }
    }
    out
}

/// Encode then decode, returning the decoded view and its bit estimate.
pub fn compress_view(image: &Image, config: CodecConfig) -> (Image, f64) {
    let c = encode(image, config);
    (decode(&c), c.estimated_bits())
}
