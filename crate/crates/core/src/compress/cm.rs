//! Bit-level context-mixing compressor.
//!
//! Each bit is predicted by a set of adaptive context models: order-k models
//! over the preceding bit window and one two-dimensional model whose context
//! is taken from the row above (the row width travels in the stream header).
//! Predictions are combined in the logistic domain by a gated linear mixer
//! with online weight updates and fed to a binary arithmetic coder. All
//! arithmetic is integer, so streams are identical on every platform.
//!
//! Stream layout:
//!
//! ```text
//! u64 LE   number of bits
//! varint   row width in bits (0 = no 2D context)
//! u32 LE   CRC-32 of the MSB-first packed bits
//! ...      arithmetic-coded payload
//! ```

use std::sync::OnceLock;

use super::coder::{Decoder, Encoder};
use super::CompressError;
use crate::imageio::{pack_bits, BinaryMatrix};

/// Orders of the bit-window models.
const ORDERS: [u32; 6] = [1, 2, 4, 8, 16, 24];
const N_INPUTS: usize = ORDERS.len() + 2; // + 2D model + bias
const COUNT_LIMIT: u32 = 127;
const INITIAL_WEIGHT: i32 = 19_661; // 0.3 in 16.16
/// Largest bit count accepted from a header; guards allocations on corrupt input.
const MAX_BITS: u64 = 1 << 40;

/// Decoded stream contents.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodedBits {
    pub bits: Vec<u8>,
    pub row_width: usize,
}

impl DecodedBits {
    pub fn into_matrix(self) -> Result<BinaryMatrix, CompressError> {
        if self.row_width == 0 || !self.bits.len().is_multiple_of(self.row_width) {
            return Err(CompressError::Decode("stream has no matrix shape".into()));
        }
        BinaryMatrix::new(self.bits.len() / self.row_width, self.row_width, self.bits)
            .map_err(|e| CompressError::Decode(e.to_string()))
    }
}

struct Tables {
    stretch: Vec<i16>,
    recip: [u32; COUNT_LIMIT as usize + 1],
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let mut stretch = vec![0i16; 4096];
        let mut pi = 0usize;
        for x in -2047..=2047 {
            let v = squash(x) as usize;
            for slot in stretch.iter_mut().take(v + 1).skip(pi) {
                *slot = x as i16;
            }
            pi = v + 1;
        }
        for slot in stretch.iter_mut().skip(pi) {
            *slot = 2047;
        }
        let mut recip = [0u32; COUNT_LIMIT as usize + 1];
        for (n, r) in recip.iter_mut().enumerate() {
            *r = (65536.0 * 2.0 / (2 * n + 3) as f64) as u32;
        }
        Tables { stretch, recip }
    })
}

/// Logistic function `4096 / (1 + e^(-d/256))` by piecewise-linear interpolation.
#[inline]
fn squash(d: i32) -> i32 {
    const T: [i32; 33] = [
        1, 2, 3, 6, 10, 16, 27, 45, 73, 120, 194, 310, 488, 747, 1101, 1546, 2047, 2549, 2994,
        3348, 3607, 3785, 3901, 3975, 4024, 4050, 4068, 4079, 4085, 4089, 4092, 4093, 4094,
    ];
    if d > 2047 {
        return 4095;
    }
    if d < -2047 {
        return 1;
    }
    let w = d & 127;
    let i = ((d >> 7) + 16) as usize;
    (T[i] * (128 - w) + T[i + 1] * w + 64) >> 7
}

#[inline]
fn stretch(p12: u32) -> i32 {
    tables().stretch[p12 as usize] as i32
}

/// Adaptive probability slots: high 16 bits = P(1), low bits = hit count.
struct CounterTable {
    slots: Vec<u32>,
    mask: usize,
}

impl CounterTable {
    fn new(bits: u32) -> Self {
        CounterTable { slots: vec![0x8000_0000; 1 << bits], mask: (1 << bits) - 1 }
    }

    #[inline]
    fn p12(&self, idx: usize) -> u32 {
        self.slots[idx & self.mask] >> 20
    }

    #[inline]
    fn update(&mut self, idx: usize, bit: u8, recip: &[u32]) {
        let slot = &mut self.slots[idx & self.mask];
        let n = *slot & 0xff;
        let p = (*slot >> 16) as i64;
        let target = if bit != 0 { 65535 } else { 0 };
        let p = p + (((target - p) * recip[n as usize] as i64) >> 16);
        let n = (n + 1).min(COUNT_LIMIT);
        *slot = ((p as u32) << 16) | n;
    }
}

struct Predictor {
    models: Vec<CounterTable>,
    hashed: Vec<bool>,
    two_d: CounterTable,
    weights: Vec<[i32; N_INPUTS]>,
    row_width: usize,
    history: u64,
    // per-bit scratch
    idx: [usize; N_INPUTS - 1],
    inputs: [i32; N_INPUTS],
    weight_set: usize,
    p: i32,
}

impl Predictor {
    fn new(n_bits: usize, row_width: usize) -> Self {
        let size_bits = (usize::BITS - n_bits.max(1).leading_zeros() + 1).clamp(12, 22);
        let mut models = Vec::with_capacity(ORDERS.len());
        let mut hashed = Vec::with_capacity(ORDERS.len());
        for &k in &ORDERS {
            if k <= size_bits {
                models.push(CounterTable::new(k));
                hashed.push(false);
            } else {
                models.push(CounterTable::new(size_bits));
                hashed.push(true);
            }
        }
        Predictor {
            models,
            hashed,
            two_d: CounterTable::new(12),
            weights: vec![[INITIAL_WEIGHT; N_INPUTS]; 4],
            row_width,
            history: 0,
            idx: [0; N_INPUTS - 1],
            inputs: [0; N_INPUTS],
            weight_set: 0,
            p: 2048,
        }
    }

    /// Probability (12-bit) that bit `pos` is 1, given `coded[..pos]`.
    #[inline]
    fn predict(&mut self, coded: &[u8], pos: usize) -> u32 {
        for (i, &k) in ORDERS.iter().enumerate() {
            let ctx = self.history & ((1u64 << k) - 1);
            self.idx[i] = if self.hashed[i] {
                let h = (ctx | (1u64 << k)).wrapping_mul(0x9E37_79B9_7F4A_7C15);
                (h >> 40) as usize
            } else {
                ctx as usize
            };
            self.inputs[i] = stretch(self.models[i].p12(self.idx[i]));
        }

        let w = self.row_width;
        let above = |dx: isize| -> u64 {
            if w == 0 || pos < w {
                return 0;
            }
            let col = (pos % w) as isize + dx;
            if col < 0 || col >= w as isize {
                return 0;
            }
            coded[((pos - w) as isize + dx) as usize] as u64
        };
        let up_up = if w > 0 && pos >= 2 * w { coded[pos - 2 * w] as u64 } else { 0 };
        let mut ctx2 = 0u64;
        for dx in -2..=2 {
            ctx2 = (ctx2 << 1) | above(dx);
        }
        ctx2 = (ctx2 << 1) | up_up;
        ctx2 = (ctx2 << 6) | (self.history & 0x3f);
        let j = ORDERS.len();
        self.idx[j] = ctx2 as usize;
        self.inputs[j] = stretch(self.two_d.p12(self.idx[j]));
        self.inputs[j + 1] = 256;

        self.weight_set = ((above(0) << 1) | (self.history & 1)) as usize;
        let ws = &self.weights[self.weight_set];
        let dot: i64 = ws
            .iter()
            .zip(&self.inputs)
            .map(|(&w, &x)| w as i64 * x as i64)
            .sum();
        let d = (dot >> 16).clamp(-2047, 2047) as i32;
        self.p = squash(d).clamp(1, 4095);
        self.p as u32
    }

    #[inline]
    fn update(&mut self, bit: u8) {
        let t = tables();
        for i in 0..ORDERS.len() {
            self.models[i].update(self.idx[i], bit, &t.recip);
        }
        self.two_d.update(self.idx[ORDERS.len()], bit, &t.recip);

        // learning rate ~0.02 in real units: 65536 * 0.02 / (4096 * 256) ~= 41 / 2^15
        let err = ((bit as i32) << 12) - self.p;
        let ws = &mut self.weights[self.weight_set];
        for (w, &x) in ws.iter_mut().zip(&self.inputs) {
            *w += (x * err * 41 + (1 << 14)) >> 15;
        }
        self.history = (self.history << 1) | bit as u64;
    }
}

fn write_varint(out: &mut Vec<u8>, mut v: u64) {
    while v >= 0x80 {
        out.push((v as u8) | 0x80);
        v >>= 7;
    }
    out.push(v as u8);
}

fn read_varint(data: &[u8], pos: &mut usize) -> Result<u64, CompressError> {
    let mut v = 0u64;
    for shift in (0..64).step_by(7) {
        let b = *data
            .get(*pos)
            .ok_or_else(|| CompressError::Decode("truncated header".into()))?;
        *pos += 1;
        v |= ((b & 0x7f) as u64) << shift;
        if b & 0x80 == 0 {
            return Ok(v);
        }
    }
    Err(CompressError::Decode("varint overflow".into()))
}

/// Compresses a sequence of `{0,1}` symbols laid out in rows of `row_width` bits.
pub fn cm_compress(bits: &[u8], row_width: usize) -> Vec<u8> {
    debug_assert!(bits.iter().all(|&b| b <= 1));
    let mut out = Vec::with_capacity(16 + bits.len() / 16);
    out.extend_from_slice(&(bits.len() as u64).to_le_bytes());
    write_varint(&mut out, row_width as u64);
    out.extend_from_slice(&crc32fast::hash(&pack_bits(bits)).to_le_bytes());

    let mut model = Predictor::new(bits.len(), row_width);
    let mut enc = Encoder::new(out);
    for (pos, &bit) in bits.iter().enumerate() {
        let p = model.predict(bits, pos);
        enc.encode(bit, p);
        model.update(bit);
    }
    enc.finish()
}

/// Compresses a matrix row-major, passing its column count as the row width.
pub fn cm_compress_matrix(x: &BinaryMatrix) -> Vec<u8> {
    cm_compress(x.bits(), x.cols())
}

/// Compresses arbitrary bytes, MSB-first, without 2D context.
pub fn cm_compress_bytes(data: &[u8]) -> Vec<u8> {
    let bits: Vec<u8> = data
        .iter()
        .flat_map(|&b| (0..8).rev().map(move |s| (b >> s) & 1))
        .collect();
    cm_compress(&bits, 0)
}

/// Inverse of [`cm_compress`].
pub fn cm_decompress(stream: &[u8]) -> Result<DecodedBits, CompressError> {
    if stream.len() < 8 {
        return Err(CompressError::Decode("truncated header".into()));
    }
    let n_bits = u64::from_le_bytes(stream[..8].try_into().expect("8 bytes"));
    if n_bits > MAX_BITS {
        return Err(CompressError::Decode(format!("implausible length {n_bits}")));
    }
    let mut pos = 8;
    let row_width = read_varint(stream, &mut pos)?;
    if row_width > MAX_BITS {
        return Err(CompressError::Decode(format!("implausible row width {row_width}")));
    }
    let crc_bytes = stream
        .get(pos..pos + 4)
        .ok_or_else(|| CompressError::Decode("truncated header".into()))?;
    let crc = u32::from_le_bytes(crc_bytes.try_into().expect("4 bytes"));
    let payload = &stream[pos + 4..];
    if payload.is_empty() {
        return Err(CompressError::Decode("empty payload".into()));
    }

    let n = n_bits as usize;
    let row_width = row_width as usize;
    let mut bits = vec![0u8; n];
    let mut model = Predictor::new(n, row_width);
    let mut dec = Decoder::new(payload);
    for pos in 0..n {
        let p = model.predict(&bits, pos);
        let bit = dec.decode(p);
        bits[pos] = bit;
        model.update(bit);
        if dec.reads() > payload.len() + 3 {
            return Err(CompressError::Decode("payload truncated".into()));
        }
    }
    if dec.reads() != payload.len() + 3 {
        return Err(CompressError::Decode("payload length mismatch".into()));
    }
    if crc32fast::hash(&pack_bits(&bits)) != crc {
        return Err(CompressError::Decode("checksum mismatch".into()));
    }
    Ok(DecodedBits { bits, row_width })
}
