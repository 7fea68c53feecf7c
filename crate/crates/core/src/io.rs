//! Image file I/O: 8-bit PGM (binary `P5` and ASCII `P2`) and 8-bit
//! grayscale PNG, plus 16-bit big-endian PGM for label maps.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::Image;

const PNG_SIGNATURE: &[u8] = b"\x89PNG\r\n\x1a\n";

/// Load an 8-bit grayscale image, detecting the format from the file
/// contents.
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes)
}

pub fn decode_image(bytes: &[u8]) -> Result<Image> {
    if bytes.starts_with(PNG_SIGNATURE) {
        return decode_png(bytes);
    }
    if bytes.starts_with(b"P5") || bytes.starts_with(b"P2") {
        let pgm = parse_pgm(bytes)?;
        if pgm.maxval > 255 {
            return Err(Error::UnsupportedBitDepth(16));
        }
        let data = pgm.samples.into_iter().map(f64::from).collect();
        return Image::new(pgm.width, pgm.height, data);
    }
    Err(Error::UnsupportedFormat(
        "expected PGM (P2/P5) or PNG".to_string(),
    ))
}

/// Save an image, choosing PNG for a `.png` extension and binary PGM
/// otherwise. Samples are rounded half-up and clamped to 8 bits.
pub fn save_image(image: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = match extension(path).as_deref() {
        Some("png") => encode_png(image)?,
        _ => encode_pgm(image),
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn encode_pgm(image: &Image) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend(image.quantized_u8());
    out
}

/// ASCII (`P2`) variant of [`encode_pgm`].
pub fn encode_pgm_ascii(image: &Image) -> Vec<u8> {
    let mut out = format!("P2\n{} {}\n255\n", image.width(), image.height());
    for (row, chunk) in image.quantized_u8().chunks(image.width().max(1)).enumerate() {
        let line: Vec<String> = chunk.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(" "));
        if row + 1 < image.height() {
            out.push('\n');
        }
    }
    out.push('\n');
    out.into_bytes()
}

/// Write 16-bit big-endian binary PGM.
pub fn save_pgm16(width: usize, height: usize, values: &[u16], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if values.len() != width * height {
        return Err(Error::dims(width * height, values.len()));
    }
    let mut out = format!("P5\n{width} {height}\n65535\n").into_bytes();
    for v in values {
        out.extend_from_slice(&v.to_be_bytes());
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Read a PGM of any bit depth, returning raw sample values.
pub fn load_pgm_raw(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<u16>)> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let pgm = parse_pgm(&bytes)?;
    Ok((pgm.width, pgm.height, pgm.samples))
}

fn extension(path: &Path) -> Option<String> {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
}

struct Pgm {
    width: usize,
    height: usize,
    maxval: u32,
    samples: Vec<u16>,
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderReader<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Malformed(format!("PGM: missing {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Malformed(format!("PGM: bad {what}")))
    }
}

fn parse_pgm(bytes: &[u8]) -> Result<Pgm> {
    let ascii = match bytes.get(..2) {
        Some(b"P5") => false,
        Some(b"P2") => true,
        _ => return Err(Error::UnsupportedFormat("not a PGM file".into())),
    };
    let mut rd = HeaderReader { bytes, pos: 2 };
    let width = rd.number("width")? as usize;
    let height = rd.number("height")? as usize;
    let maxval = rd.number("maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Malformed(format!("PGM: maxval {maxval}")));
    }
    let count = width * height;
    let mut samples = Vec::with_capacity(count);
    if ascii {
        for _ in 0..count {
            let v = rd
                .number("sample")
                .map_err(|_| Error::Malformed("PGM: truncated raster".into()))?;
            if v > maxval {
                return Err(Error::Malformed(format!("PGM: sample {v} > maxval")));
            }
            samples.push(v as u16);
        }
    } else {
        // exactly one whitespace byte separates the header from the raster
        let start = rd.pos + 1;
        let wide = maxval > 255;
        let need = if wide { 2 * count } else { count };
        let raster = bytes
            .get(start..start + need)
            .ok_or_else(|| Error::Malformed("PGM: truncated raster".into()))?;
        if wide {
            samples.extend(raster.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])));
        } else {
            samples.extend(raster.iter().map(|&b| u16::from(b)));
        }
    }
    Ok(Pgm {
        width,
        height,
        maxval,
        samples,
    })
}

fn decode_png(bytes: &[u8]) -> Result<Image> {
    let decoded = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)?;
    match decoded {
        image::DynamicImage::ImageLuma8(gray) => {
            let (w, h) = gray.dimensions();
            let data = gray.into_raw().into_iter().map(f64::from).collect();
            Image::new(w as usize, h as usize, data)
        }
        image::DynamicImage::ImageLuma16(_) | image::DynamicImage::ImageLumaA16(_) => {
            Err(Error::UnsupportedBitDepth(16))
        }
        other => Err(Error::UnsupportedFormat(format!(
            "PNG color type {:?}; only 8-bit grayscale is supported",
            other.color()
        ))),
    }
}

fn encode_png(image: &Image) -> Result<Vec<u8>> {
    let buf = image::GrayImage::from_raw(
        image.width() as u32,
        image.height() as u32,
        image.quantized_u8(),
    )
    .ok_or_else(|| Error::Malformed("PNG buffer size".into()))?;
    let mut out = std::io::Cursor::new(Vec::new());
    buf.write_to(&mut out, image::ImageFormat::Png)?;
    Ok(out.into_inner())
}
