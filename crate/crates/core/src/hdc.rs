//! Height-difference correlation and the roughness exponent.
//!
//! Pixel intensities are treated as surface heights. `HDC(r)` is the mean
//! squared height difference over all right and down pairs at distance `r`,
//! pooled; `alpha` is the log-log slope of the curve between two radii.

use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::imageio::GrayImage;
use crate::meta::Metadata;
use crate::scalar::Real;

pub const DEFAULT_R_INITIAL: usize = 10;
pub const DEFAULT_R_FINAL_FRACTION: f64 = 0.3;

#[derive(Debug, Error, PartialEq)]
pub enum HdcError {
    #[error("radius {r_max} must be in 1..{limit}")]
    Radius { r_max: usize, limit: usize },
    #[error("HDC is zero at r={0}; the surface is flat or aligned with the radius")]
    DegenerateSurface(usize),
    #[error("radius range {0}..{1} is empty after clamping to the curve")]
    EmptyRange(usize, usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct HdcCurve<T> {
    pub radii: Vec<usize>,
    pub values: Vec<T>,
    pub n_pairs: Vec<u64>,
}

impl<T: Real> HdcCurve<T> {
    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    /// Value at `r`, if computed.
    pub fn at(&self, r: usize) -> Option<T> {
        self.radii.binary_search(&r).ok().map(|i| self.values[i])
    }

    /// Index of the computed radius nearest to `r`; ties go to the smaller radius.
    fn nearest(&self, r: usize) -> usize {
        let i = self.radii.partition_point(|&x| x < r);
        if i == 0 {
            0
        } else if i == self.radii.len() {
            i - 1
        } else if self.radii[i] - r < r - self.radii[i - 1] {
            i
        } else {
            i - 1
        }
    }

    /// `r,hdc,n_pairs` rows.
    pub fn to_csv(&self, meta: &Metadata) -> String {
        let mut s = meta.line();
        s.push_str("r,hdc,n_pairs\n");
        for ((r, v), n) in self.radii.iter().zip(&self.values).zip(&self.n_pairs) {
            let _ = writeln!(s, "{r},{v},{n}");
        }
        s
    }
}

/// Sum of squared differences and pair count at offset `r`.
fn pairs_at(img: &GrayImage, r: usize) -> (u64, u64) {
    let (w, h) = (img.width(), img.height());
    let px = img.pixels();
    let mut sum = 0u64;
    for y in 0..h {
        let row = &px[y * w..(y + 1) * w];
        for x in 0..w - r {
            let d = row[x + r] as i64 - row[x] as i64;
            sum += (d * d) as u64;
        }
    }
    for y in 0..h - r {
        let (a, b) = (&px[y * w..(y + 1) * w], &px[(y + r) * w..(y + r + 1) * w]);
        for x in 0..w {
            let d = b[x] as i64 - a[x] as i64;
            sum += (d * d) as u64;
        }
    }
    (sum, (h * (w - r) + w * (h - r)) as u64)
}

/// `HDC(r)` for `r = 1..=r_max`.
pub fn hdc_curve<T: Real>(img: &GrayImage, r_max: usize) -> Result<HdcCurve<T>, HdcError> {
    let limit = img.width().min(img.height());
    if r_max == 0 || r_max >= limit {
        return Err(HdcError::Radius { r_max, limit });
    }
    let sums: Vec<(u64, u64)> = (1..=r_max).into_par_iter().map(|r| pairs_at(img, r)).collect();
    Ok(HdcCurve {
        radii: (1..=r_max).collect(),
        values: sums.iter().map(|&(s, n)| T::from_count(s) / T::from_count(n)).collect(),
        n_pairs: sums.iter().map(|&(_, n)| n).collect(),
    })
}

/// Two-point log-log slope between the radii nearest to `r_initial` and `r_final`.
pub fn alpha<T: Real>(curve: &HdcCurve<T>, r_initial: usize, r_final: usize) -> Result<T, HdcError> {
    if curve.is_empty() {
        return Err(HdcError::EmptyRange(r_initial, r_final));
    }
    let (i, f) = (curve.nearest(r_initial), curve.nearest(r_final));
    if i >= f {
        return Err(HdcError::EmptyRange(r_initial, r_final));
    }
    let (hi, hf) = (curve.values[i], curve.values[f]);
    for (h, r) in [(hi, curve.radii[i]), (hf, curve.radii[f])] {
        if !(h > T::zero()) {
            return Err(HdcError::DegenerateSurface(r));
        }
    }
    let (ri, rf) = (T::from_count(curve.radii[i] as u64), T::from_count(curve.radii[f] as u64));
    Ok((hf.log10() - hi.log10()) / (rf.log10() - ri.log10()))
}

/// `round(0.3 * width)`.
pub fn default_r_final(width: usize) -> usize {
    (DEFAULT_R_FINAL_FRACTION * width as f64).round() as usize
}

/// Alpha between `r_initial` and `r_final` (default `round(0.3 * width)`),
/// computing the curve only as far as needed.
pub fn image_alpha<T: Real>(
    img: &GrayImage,
    r_initial: usize,
    r_final: Option<usize>,
) -> Result<T, HdcError> {
    let r_final = r_final.unwrap_or_else(|| default_r_final(img.width()));
    let limit = img.width().min(img.height());
    let r_max = r_final.min(limit.saturating_sub(1));
    if r_max == 0 {
        return Err(HdcError::Radius { r_max: r_final, limit });
    }
    alpha(&hdc_curve::<T>(img, r_max)?, r_initial, r_final)
}
