//! 32-bit binary arithmetic coder driven by 12-bit probabilities.
//!
//! `p1` is the probability that the next bit is 1, scaled to `[1, 4095]`.
//! The encoder emits one byte per renormalization plus one flush byte; the
//! decoder pads past the end of input with `0xFF`, so a well-formed payload
//! of `L` bytes is read as exactly `L + 3` bytes.

pub(crate) struct Encoder {
    x1: u32,
    x2: u32,
    out: Vec<u8>,
}

impl Encoder {
    pub fn new(out: Vec<u8>) -> Self {
        Encoder { x1: 0, x2: u32::MAX, out }
    }

    #[inline]
    pub fn encode(&mut self, bit: u8, p1: u32) {
        debug_assert!((1..4096).contains(&p1));
        let xmid = self.x1 + ((self.x2 - self.x1) >> 12) * p1;
        if bit != 0 {
            self.x2 = xmid;
        } else {
            self.x1 = xmid + 1;
        }
        while (self.x1 ^ self.x2) & 0xff00_0000 == 0 {
            self.out.push((self.x2 >> 24) as u8);
            self.x1 <<= 8;
            self.x2 = (self.x2 << 8) | 0xff;
        }
    }

    pub fn finish(mut self) -> Vec<u8> {
        self.out.push((self.x1 >> 24) as u8);
        self.out
    }
}

pub(crate) struct Decoder<'a> {
    x1: u32,
    x2: u32,
    x: u32,
    data: &'a [u8],
    reads: usize,
}

impl<'a> Decoder<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        let mut d = Decoder { x1: 0, x2: u32::MAX, x: 0, data, reads: 0 };
        for _ in 0..4 {
            d.x = (d.x << 8) | d.next_byte();
        }
        d
    }

    #[inline]
    fn next_byte(&mut self) -> u32 {
        let b = self.data.get(self.reads).copied().unwrap_or(0xff);
        self.reads += 1;
        b as u32
    }

    #[inline]
    pub fn decode(&mut self, p1: u32) -> u8 {
        let xmid = self.x1 + ((self.x2 - self.x1) >> 12) * p1;
        let bit = if self.x <= xmid {
            self.x2 = xmid;
            1
        } else {
            self.x1 = xmid + 1;
            0
        };
        while (self.x1 ^ self.x2) & 0xff00_0000 == 0 {
            self.x1 <<= 8;
            self.x2 = (self.x2 << 8) | 0xff;
            self.x = (self.x << 8) | self.next_byte();
        }
        bit
    }

    /// Bytes consumed including padding.
    pub fn reads(&self) -> usize {
        self.reads
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_probability_round_trip() {
        let bits: Vec<u8> = (0..5000u32).map(|i| ((i * 7919) % 13 < 4) as u8).collect();
        let mut enc = Encoder::new(Vec::new());
        for &b in &bits {
            enc.encode(b, 1300);
        }
        let out = enc.finish();
        let mut dec = Decoder::new(&out);
        let back: Vec<u8> = bits.iter().map(|_| dec.decode(1300)).collect();
        assert_eq!(back, bits);
        assert_eq!(dec.reads(), out.len() + 3);
    }
}
