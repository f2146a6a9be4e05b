//! Portable anymap input/output, margin trimming and binarization.
//!
//! Everything downstream consumes either a [`GrayImage`] (intensities with a
//! known bit depth) or a [`BinaryMatrix`] (the `{0,1}` expansion of one).
//! Color pixmaps are reduced to gray with the integer luma
//! `round(0.299 R + 0.587 G + 0.114 B)`.

use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("malformed portable anymap: {0}")]
    Parse(String),
    #[error("maxval {0} exceeds 255")]
    UnsupportedDepth(u32),
    #[error("invalid image: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Grayscale raster, row-major, `bit_depth` bits per pixel.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GrayImage {
    width: usize,
    height: usize,
    bit_depth: u8,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(
        width: usize,
        height: usize,
        bit_depth: u8,
        pixels: Vec<u8>,
    ) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::Invalid(format!("empty image {width}x{height}")));
        }
        if !(1..=8).contains(&bit_depth) {
            return Err(ImageError::Invalid(format!("bit depth {bit_depth} not in 1..=8")));
        }
        if pixels.len() != width * height {
            return Err(ImageError::Invalid(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        let max = max_value(bit_depth);
        if let Some(p) = pixels.iter().find(|&&p| p > max) {
            return Err(ImageError::Invalid(format!(
                "pixel {p} exceeds {max} at bit depth {bit_depth}"
            )));
        }
        Ok(GrayImage { width, height, bit_depth, pixels })
    }

    /// Builds an image from a per-pixel function of `(row, col)`.
    pub fn from_fn(
        width: usize,
        height: usize,
        bit_depth: u8,
        mut f: impl FnMut(usize, usize) -> u8,
    ) -> Result<Self, ImageError> {
        let mut pixels = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                pixels.push(f(r, c));
            }
        }
        GrayImage::new(width, height, bit_depth, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bit_depth(&self) -> u8 {
        self.bit_depth
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn max_value(&self) -> u8 {
        max_value(self.bit_depth)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.width + col]
    }

    /// Copies the rectangle `rows x cols` starting at `(top, left)`.
    pub fn crop(&self, top: usize, left: usize, rows: usize, cols: usize) -> GrayImage {
        assert!(top + rows <= self.height && left + cols <= self.width && rows > 0 && cols > 0);
        let mut pixels = Vec::with_capacity(rows * cols);
        for r in top..top + rows {
            let start = r * self.width + left;
            pixels.extend_from_slice(&self.pixels[start..start + cols]);
        }
        GrayImage { width: cols, height: rows, bit_depth: self.bit_depth, pixels }
    }

    /// Same geometry and depth with replaced pixels.
    pub fn with_pixels(&self, pixels: Vec<u8>) -> Result<GrayImage, ImageError> {
        GrayImage::new(self.width, self.height, self.bit_depth, pixels)
    }
}

fn max_value(bit_depth: u8) -> u8 {
    ((1u16 << bit_depth) - 1) as u8
}

/// Row-major matrix over `{0,1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BinaryMatrix {
    rows: usize,
    cols: usize,
    bits: Vec<u8>,
}

impl BinaryMatrix {
    pub fn new(rows: usize, cols: usize, bits: Vec<u8>) -> Result<Self, ImageError> {
        if rows == 0 || cols == 0 {
            return Err(ImageError::Invalid(format!("empty matrix {rows}x{cols}")));
        }
        if bits.len() != rows * cols {
            return Err(ImageError::Invalid(format!(
                "{} bits for a {rows}x{cols} matrix",
                bits.len()
            )));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(ImageError::Invalid("symbol outside {0,1}".into()));
        }
        Ok(BinaryMatrix { rows, cols, bits })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0);
        BinaryMatrix { rows, cols, bits: vec![0; rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        assert!(rows > 0 && cols > 0);
        let mut bits = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                bits.push(f(r, c) as u8);
            }
        }
        BinaryMatrix { rows, cols, bits }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Number of symbols, `rows * cols`.
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.bits[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, bit: bool) {
        self.bits[row * self.cols + col] = bit as u8;
    }

    /// Bitwise complement.
    pub fn complement(&self) -> BinaryMatrix {
        BinaryMatrix {
            rows: self.rows,
            cols: self.cols,
            bits: self.bits.iter().map(|b| b ^ 1).collect(),
        }
    }

    /// Renders the matrix as `0`/`1` ASCII characters, one line per row.
    pub fn to_ascii(&self, newlines: bool) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.bits.len() + if newlines { self.rows } else { 0 });
        for row in self.bits.chunks(self.cols) {
            out.extend(row.iter().map(|&b| b'0' + b));
            if newlines {
                out.push(b'\n');
            }
        }
        out
    }

    /// Packs the bits MSB-first into bytes; the final byte is zero-padded.
    pub fn pack(&self) -> Vec<u8> {
        pack_bits(&self.bits)
    }
}

pub(crate) fn pack_bits(bits: &[u8]) -> Vec<u8> {
    bits.chunks(8)
        .map(|chunk| {
            chunk
                .iter()
                .enumerate()
                .fold(0u8, |acc, (i, &b)| acc | (b << (7 - i)))
        })
        .collect()
}

/// Reads a P2, P3, P5 or P6 file.
pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage, ImageError> {
    let data = fs::read(path)?;
    parse_pnm(&data)
}

struct Header<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Header<'a> {
    fn skip_ws_and_comments(&mut self) {
        while self.pos < self.data.len() {
            let b = self.data[self.pos];
            if b == b'#' {
                while self.pos < self.data.len() && self.data[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32, ImageError> {
        self.skip_ws_and_comments();
        let start = self.pos;
        while self.pos < self.data.len() && self.data[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(ImageError::Parse(format!("expected {what} at byte {start}")));
        }
        std::str::from_utf8(&self.data[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| ImageError::Parse(format!("{what} out of range")))
    }
}

/// Parses an in-memory portable anymap.
pub fn parse_pnm(data: &[u8]) -> Result<GrayImage, ImageError> {
    if data.len() < 2 || data[0] != b'P' {
        return Err(ImageError::Parse("missing P magic".into()));
    }
    let kind = data[1];
    let (ascii, channels) = match kind {
        b'2' => (true, 1),
        b'3' => (true, 3),
        b'5' => (false, 1),
        b'6' => (false, 3),
        _ => return Err(ImageError::Parse(format!("unsupported magic P{}", kind as char))),
    };
    let mut h = Header { data, pos: 2 };
    let width = h.number("width")? as usize;
    let height = h.number("height")? as usize;
    let maxval = h.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(ImageError::Parse(format!("empty dimensions {width}x{height}")));
    }
    if maxval == 0 {
        return Err(ImageError::Parse("maxval 0".into()));
    }
    if maxval > 255 {
        return Err(ImageError::UnsupportedDepth(maxval));
    }
    let samples = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| ImageError::Parse("dimensions overflow".into()))?;

    let raw: Vec<u32> = if ascii {
        let mut v = Vec::with_capacity(samples);
        for _ in 0..samples {
            v.push(h.number("sample")?);
        }
        v
    } else {
        // exactly one whitespace byte separates maxval from the raster
        if h.pos >= data.len() || !data[h.pos].is_ascii_whitespace() {
            return Err(ImageError::Parse("missing raster separator".into()));
        }
        let start = h.pos + 1;
        let body = data
            .get(start..start + samples)
            .ok_or_else(|| ImageError::Parse("truncated raster".into()))?;
        body.iter().map(|&b| b as u32).collect()
    };
    if let Some(s) = raw.iter().find(|&&s| s > maxval) {
        return Err(ImageError::Parse(format!("sample {s} exceeds maxval {maxval}")));
    }

    let pixels = if channels == 1 {
        raw.into_iter().map(|s| s as u8).collect()
    } else {
        raw.chunks_exact(3).map(|p| luma(p[0], p[1], p[2])).collect()
    };
    let bit_depth = (1..=8u8).find(|&b| (1u32 << b) > maxval).unwrap_or(8);
    GrayImage::new(width, height, bit_depth, pixels)
}

/// Integer luma, rounded half up.
pub fn luma(r: u32, g: u32, b: u32) -> u8 {
    ((299 * r + 587 * g + 114 * b + 500) / 1000) as u8
}

/// Binary P5 encoding with maxval `2^bit_depth - 1`.
pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n{}\n", img.width, img.height, img.max_value()).into_bytes();
    out.extend_from_slice(&img.pixels);
    out
}

pub fn save_pgm(img: &GrayImage, path: impl AsRef<Path>) -> Result<(), ImageError> {
    fs::write(path, encode_pgm(img))?;
    Ok(())
}

/// Removes uniform border rows and columns.
///
/// A border line is removable when every pixel on it lies within
/// `tolerance` of the corner pixel where that line starts (top-left for the
/// top row and left column, bottom-left for the bottom row, top-right for the
/// right column). Trimming repeats until no side changes, so the result is a
/// fixed point. If the whole image would be removed the original is returned.
pub fn trim_margins(img: &GrayImage, tolerance: u8) -> GrayImage {
    let (mut top, mut bottom, mut left, mut right) = (0, img.height, 0, img.width);
    let near = |p: u8, reference: u8| p.abs_diff(reference) <= tolerance;
    let row_uniform = |r: usize, left: usize, right: usize, reference: u8| {
        (left..right).all(|c| near(img.get(r, c), reference))
    };
    let col_uniform = |c: usize, top: usize, bottom: usize, reference: u8| {
        (top..bottom).all(|r| near(img.get(r, c), reference))
    };

    loop {
        let mut changed = false;
        if row_uniform(top, left, right, img.get(top, left)) {
            top += 1;
            changed = true;
        }
        if top == bottom {
            return img.clone();
        }
        if row_uniform(bottom - 1, left, right, img.get(bottom - 1, left)) {
            bottom -= 1;
            changed = true;
        }
        if top == bottom {
            return img.clone();
        }
        if col_uniform(left, top, bottom, img.get(top, left)) {
            left += 1;
            changed = true;
        }
        if left == right {
            return img.clone();
        }
        if col_uniform(right - 1, top, bottom, img.get(top, right - 1)) {
            right -= 1;
            changed = true;
        }
        if left == right {
            return img.clone();
        }
        if !changed {
            break;
        }
    }
    img.crop(top, left, bottom - top, right - left)
}

/// Expands each pixel into `bit_depth` bits, most significant first.
pub fn binarize(img: &GrayImage) -> BinaryMatrix {
    let depth = img.bit_depth as usize;
    let mut bits = Vec::with_capacity(img.pixels.len() * depth);
    for &p in &img.pixels {
        for shift in (0..depth).rev() {
            bits.push((p >> shift) & 1);
        }
    }
    BinaryMatrix { rows: img.height, cols: img.width * depth, bits }
}
