//! Deterministic synthetic images: painter-like styles, cellular automata
//! and a structured test card.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::imageio::{BinaryMatrix, GrayImage};

/// Generative style of a synthetic author.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Style {
    /// Broad low-frequency tonal waves.
    Smooth,
    /// Dense short strokes over a mid-gray ground.
    Textured,
    /// Dark ground lit by one bright pool of light.
    Chiaroscuro,
    /// Flat rectangles with hard edges.
    Geometric,
}

impl Style {
    pub const ALL: [Style; 4] = [Style::Smooth, Style::Textured, Style::Chiaroscuro, Style::Geometric];

    pub fn name(self) -> &'static str {
        match self {
            Style::Smooth => "smooth",
            Style::Textured => "textured",
            Style::Chiaroscuro => "chiaroscuro",
            Style::Geometric => "geometric",
        }
    }
}

fn clamp_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// One 8-bit image in `style`; `seed` varies composition.
pub fn painting(style: Style, size: usize, seed: u64) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = size as f64;
    match style {
        Style::Smooth => {
            let waves: Vec<(f64, f64, f64, f64)> = (0..3)
                .map(|_| {
                    (
                        rng.random_range(0.5..2.0),
                        rng.random_range(0.5..2.0),
                        rng.random_range(0.0..2.0 * PI),
                        rng.random_range(20.0..45.0),
                    )
                })
                .collect();
            let base = rng.random_range(100.0..150.0);
            GrayImage::from_fn(size, size, 8, |r, c| {
                let (y, x) = (r as f64 / s, c as f64 / s);
                let v: f64 = waves
                    .iter()
                    .map(|&(fx, fy, ph, amp)| amp * (2.0 * PI * (fx * x + fy * y) + ph).sin())
                    .sum();
                clamp_u8(base + v)
            })
            .expect("valid size")
        }
        Style::Textured => {
            let ground = rng.random_range(90.0..160.0);
            let mut px: Vec<f64> =
                (0..size * size).map(|_| ground + rng.random_range(-25.0..25.0)).collect();
            for _ in 0..size * size / 6 {
                let (r0, c0) = (rng.random_range(0..size), rng.random_range(0..size));
                let len = rng.random_range(2..7);
                let tone = rng.random_range(0.0..255.0);
                let horizontal = rng.random_bool(0.5);
                for k in 0..len {
                    let (r, c) = if horizontal { (r0, c0 + k) } else { (r0 + k, c0) };
                    if r < size && c < size {
                        px[r * size + c] = tone;
                    }
                }
            }
            GrayImage::new(size, size, 8, px.into_iter().map(clamp_u8).collect()).expect("valid size")
        }
        Style::Chiaroscuro => {
            let (cy, cx) = (rng.random_range(0.3..0.7) * s, rng.random_range(0.3..0.7) * s);
            let radius = rng.random_range(0.12..0.25) * s;
            let peak = rng.random_range(200.0..250.0);
            let dark = rng.random_range(10.0..30.0);
            GrayImage::from_fn(size, size, 8, |r, c| {
                let d2 = (r as f64 - cy).powi(2) + (c as f64 - cx).powi(2);
                let light = (-d2 / (2.0 * radius * radius)).exp();
                clamp_u8(dark + (peak - dark) * light + rng.random_range(-3.0..3.0))
            })
            .expect("valid size")
        }
        Style::Geometric => {
            let mut px = vec![rng.random_range(0..=255u8); size * size];
            for _ in 0..rng.random_range(5..10) {
                let (r0, c0) = (rng.random_range(0..size), rng.random_range(0..size));
                let (h, w) = (rng.random_range(size / 8..size / 2), rng.random_range(size / 8..size / 2));
                let tone = rng.random_range(0..=255u8);
                for r in r0..(r0 + h).min(size) {
                    px[r * size + c0..r * size + (c0 + w).min(size)].fill(tone);
                }
            }
            GrayImage::new(size, size, 8, px).expect("valid size")
        }
    }
}

/// Initial row of an elementary cellular automaton.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CaStart {
    SingleCell,
    Random(u64),
}

/// Space-time diagram of an elementary CA (Wolfram numbering) with periodic
/// boundaries; row `t` is generation `t`.
pub fn elementary_ca(rule: u8, width: usize, steps: usize, start: CaStart) -> BinaryMatrix {
    let mut row = vec![0u8; width];
    match start {
        CaStart::SingleCell => row[width / 2] = 1,
        CaStart::Random(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            row.iter_mut().for_each(|b| *b = rng.random_bool(0.5) as u8);
        }
    }
    let mut bits = Vec::with_capacity(width * steps);
    for _ in 0..steps {
        bits.extend_from_slice(&row);
        row = (0..width)
            .map(|i| {
                let l = row[(i + width - 1) % width];
                let r = row[(i + 1) % width];
                (rule >> (l << 2 | row[i] << 1 | r)) & 1
            })
            .collect();
    }
    BinaryMatrix::new(steps, width, bits).expect("consistent size")
}

/// A binary matrix as a 1-bit image.
pub fn to_image(x: &BinaryMatrix) -> GrayImage {
    GrayImage::new(x.cols(), x.rows(), 1, x.bits().to_vec()).expect("nonempty matrix")
}

/// Uniform random binary matrix.
pub fn random_binary(rows: usize, cols: usize, seed: u64) -> BinaryMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    BinaryMatrix::from_fn(rows, cols, |_, _| rng.random_bool(0.5))
}

/// Smooth 8-bit test card: a diagonal gradient with concentric rings and two
/// flat panels.
pub fn structured_image(size: usize) -> GrayImage {
    let s = size as f64;
    GrayImage::from_fn(size, size, 8, |r, c| {
        let (y, x) = (r as f64 / s, c as f64 / s);
        if (0.1..0.3).contains(&y) && (0.6..0.9).contains(&x) {
            return 230;
        }
        if (0.7..0.9).contains(&y) && (0.1..0.4).contains(&x) {
            return 20;
        }
        let ring = ((x - 0.5).hypot(y - 0.5) * 24.0).sin() * 30.0;
        clamp_u8(60.0 + 120.0 * (x + y) / 2.0 + ring)
    })
    .expect("valid size")
}
