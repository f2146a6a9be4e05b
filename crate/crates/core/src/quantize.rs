//! Lloyd-Max scalar quantization of 8-bit intensities.

use thiserror::Error;

use crate::imageio::GrayImage;
use crate::scalar::Real;

#[derive(Debug, Error, PartialEq)]
pub enum QuantizeError {
    #[error("histogram has no mass")]
    EmptyInput,
    #[error("invalid codebook: {0}")]
    InvalidCodebook(String),
}

/// Scalar quantizer: reconstruction values and the decision thresholds
/// between them.
///
/// `levels` is the nominal level count and fixes the index alphabet
/// (`bit_depth`). A codebook trained on a histogram with fewer distinct
/// values than `levels` carries one reconstruction per distinct value, so
/// `reconstructions().len()` may be smaller than `levels`.
#[derive(Clone, Debug, PartialEq)]
pub struct Codebook<T> {
    levels: usize,
    boundaries: Vec<T>,
    reconstructions: Vec<T>,
}

impl<T: Real> Codebook<T> {
    /// Builds a codebook with midpoint boundaries.
    pub fn new(levels: usize, reconstructions: Vec<T>) -> Result<Self, QuantizeError> {
        if !(2..=256).contains(&levels) {
            return Err(QuantizeError::InvalidCodebook(format!("{levels} levels")));
        }
        if reconstructions.is_empty() || reconstructions.len() > levels {
            return Err(QuantizeError::InvalidCodebook(format!(
                "{} reconstructions for {levels} levels",
                reconstructions.len()
            )));
        }
        if reconstructions.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(QuantizeError::InvalidCodebook("reconstructions not ascending".into()));
        }
        let boundaries = midpoints(&reconstructions);
        Ok(Codebook { levels, boundaries, reconstructions })
    }

    /// Equal-width cells over `[0, 256)` with reconstructions at cell centers.
    pub fn uniform(levels: usize) -> Result<Self, QuantizeError> {
        let width = T::lit(256.0) / T::from_count(levels as u64);
        let half = T::lit(0.5);
        let recon = (0..levels)
            .map(|k| (T::from_count(k as u64) + half) * width - half)
            .collect();
        Codebook::new(levels, recon)
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn boundaries(&self) -> &[T] {
        &self.boundaries
    }

    pub fn reconstructions(&self) -> &[T] {
        &self.reconstructions
    }

    /// Bits needed to store an index, `ceil(log2(levels))`.
    pub fn bit_depth(&self) -> u8 {
        (usize::BITS - (self.levels - 1).leading_zeros()).max(1) as u8
    }

    /// Cell index of an intensity; values on a boundary go to the lower cell.
    #[inline]
    pub fn index_of(&self, value: T) -> usize {
        self.boundaries.partition_point(|&b| b < value)
    }

    /// Mean squared reconstruction error over a histogram.
    pub fn mse(&self, histogram: &[u64]) -> T {
        mse_of(histogram, &self.reconstructions, &self.boundaries)
    }
}

fn midpoints<T: Real>(recon: &[T]) -> Vec<T> {
    let half = T::lit(0.5);
    recon.windows(2).map(|w| (w[0] + w[1]) * half).collect()
}

fn mse_of<T: Real>(histogram: &[u64], recon: &[T], bounds: &[T]) -> T {
    let mut total = 0u64;
    let mut err = T::zero();
    for (v, &count) in histogram.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let x = T::from_count(v as u64);
        let cell = bounds.partition_point(|&b| b < x);
        let d = x - recon[cell];
        err = err + T::from_count(count) * d * d;
        total += count;
    }
    if total == 0 {
        T::zero()
    } else {
        err / T::from_count(total)
    }
}

/// 256-bin intensity histogram.
pub fn histogram(img: &GrayImage) -> [u64; 256] {
    let mut h = [0u64; 256];
    for &p in img.pixels() {
        h[p as usize] += 1;
    }
    h
}

/// Lloyd-Max training parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LloydMax {
    pub levels: usize,
    pub max_iters: usize,
    pub epsilon: f64,
}

impl LloydMax {
    pub fn new(levels: usize) -> Self {
        LloydMax { levels, max_iters: 200, epsilon: 1e-6 }
    }
}

/// Trained codebook plus the MSE after initialization and after every
/// iteration.
#[derive(Clone, Debug)]
pub struct Training<T> {
    pub codebook: Codebook<T>,
    pub mse_history: Vec<T>,
}

impl<T: Real> Training<T> {
    pub fn final_mse(&self) -> T {
        *self.mse_history.last().expect("history starts with the initial MSE")
    }
}

impl LloydMax {
    /// Trains a codebook on a histogram indexed by intensity.
    ///
    /// Two Lloyd runs are made: one seeded at the histogram quantiles
    /// `(i + 0.5) / levels` and one seeded at the uniform quantizer. The run
    /// with the lower final MSE wins (the quantile run on ties), so the result
    /// never does worse than the uniform quantizer.
    pub fn train<T: Real>(&self, histogram: &[u64]) -> Result<Training<T>, QuantizeError> {
        let support: Vec<usize> = histogram
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(v, _)| v)
            .collect();
        if support.is_empty() {
            return Err(QuantizeError::EmptyInput);
        }
        if self.levels < 2 || self.levels > 256 {
            return Err(QuantizeError::InvalidCodebook(format!("{} levels", self.levels)));
        }
        if support.len() <= self.levels {
            let recon = support.iter().map(|&v| T::from_count(v as u64)).collect();
            let codebook = Codebook::new(self.levels, recon)?;
            let mse = codebook.mse(histogram);
            return Ok(Training { codebook, mse_history: vec![mse] });
        }

        let quantile = self.run(histogram, quantile_init(histogram, &support, self.levels));
        let uniform_seed = Codebook::<T>::uniform(self.levels)?.reconstructions;
        let uniform = self.run(histogram, uniform_seed);
        let best = if uniform.final_mse() < quantile.final_mse() { uniform } else { quantile };
        Ok(best)
    }

    fn run<T: Real>(&self, histogram: &[u64], mut recon: Vec<T>) -> Training<T> {
        let eps = T::lit(self.epsilon);
        let mut bounds = midpoints(&recon);
        let mut mse = mse_of(histogram, &recon, &bounds);
        let mut history = vec![mse];
        let levels = recon.len();

        for _ in 0..self.max_iters {
            let mut sums = vec![T::zero(); levels];
            let mut counts = vec![0u64; levels];
            for (v, &count) in histogram.iter().enumerate() {
                if count == 0 {
                    continue;
                }
                let x = T::from_count(v as u64);
                let cell = bounds.partition_point(|&b| b < x);
                sums[cell] = sums[cell] + T::from_count(count) * x;
                counts[cell] += count;
            }
            // empty cells keep their reconstruction
            let next: Vec<T> = recon
                .iter()
                .zip(sums.iter().zip(&counts))
                .map(|(&r, (&s, &n))| if n > 0 { s / T::from_count(n) } else { r })
                .collect();
            let next_bounds = midpoints(&next);
            let next_mse = mse_of(histogram, &next, &next_bounds);
            if next_mse > mse {
                // rounding noise at convergence
                break;
            }
            let rel = if mse > T::zero() { (mse - next_mse) / mse } else { T::zero() };
            recon = next;
            bounds = next_bounds;
            mse = next_mse;
            history.push(mse);
            if rel < eps {
                break;
            }
        }
        Training {
            codebook: Codebook { levels, boundaries: bounds, reconstructions: recon },
            mse_history: history,
        }
    }
}

/// Distinct support values nearest to the `(i + 0.5) / levels` quantiles.
fn quantile_init<T: Real>(histogram: &[u64], support: &[usize], levels: usize) -> Vec<T> {
    let total: u64 = histogram.iter().sum();
    let mut cum = Vec::with_capacity(support.len());
    let mut acc = 0u64;
    for &v in support {
        acc += histogram[v];
        cum.push(acc);
    }
    let mut out = Vec::with_capacity(levels);
    let mut prev: Option<usize> = None;
    for i in 0..levels {
        // smallest j with cum[j] >= (i + 0.5) / levels * total, in integers
        let target = (2 * i as u128 + 1) * total as u128;
        let mut j = cum.partition_point(|&c| (c as u128) * (2 * levels as u128) < target);
        let lo = prev.map_or(0, |p| p + 1);
        let hi = support.len() - (levels - i);
        j = j.clamp(lo, hi);
        out.push(T::from_count(support[j] as u64));
        prev = Some(j);
    }
    out
}

/// Replaces every pixel by its codebook index.
pub fn quantize_image<T: Real>(img: &GrayImage, codebook: &Codebook<T>) -> GrayImage {
    let mut lut = [0u8; 256];
    for (v, slot) in lut.iter_mut().enumerate() {
        *slot = codebook.index_of(T::from_count(v as u64)) as u8;
    }
    let pixels = img.pixels().iter().map(|&p| lut[p as usize]).collect();
    GrayImage::new(img.width(), img.height(), codebook.bit_depth(), pixels)
        .expect("indices fit the codebook bit depth")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_when_levels_match_support() {
        let hist = [1u64; 256];
        let t = LloydMax::new(256).train::<f64>(&hist).unwrap();
        let expect: Vec<f64> = (0..256).map(|v| v as f64).collect();
        assert_eq!(t.codebook.reconstructions(), expect.as_slice());
        assert_eq!(t.final_mse(), 0.0);
        assert_eq!(t.codebook.bit_depth(), 8);
    }

    #[test]
    fn two_point_distribution() {
        let mut hist = [0u64; 256];
        hist[0] = 10;
        hist[255] = 3;
        let t = LloydMax::new(2).train::<f64>(&hist).unwrap();
        assert_eq!(t.codebook.reconstructions(), &[0.0, 255.0]);
        assert_eq!(t.codebook.boundaries(), &[127.5]);
    }

    #[test]
    fn beats_uniform_on_uniform_histogram() {
        let hist = [5u64; 256];
        let uniform = Codebook::<f64>::uniform(16).unwrap().mse(&hist);
        // centered 16-wide cells: (16^2 - 1) / 12
        assert!((uniform - 21.25).abs() < 1e-12);
        let t = LloydMax::new(16).train::<f64>(&hist).unwrap();
        assert!(t.final_mse() <= uniform);
    }

    #[test]
    fn empty_histogram() {
        let r = LloydMax::new(16).train::<f64>(&[0u64; 256]);
        assert_eq!(r.unwrap_err(), QuantizeError::EmptyInput);
    }

    #[test]
    fn invalid_codebooks() {
        assert!(Codebook::<f64>::new(1, vec![0.0]).is_err());
        assert!(Codebook::<f64>::new(4, vec![1.0, 1.0]).is_err());
        assert!(Codebook::<f64>::new(2, vec![0.0, 1.0, 2.0]).is_err());
    }

    #[test]
    fn quantize_examples() {
        let img = GrayImage::new(4, 1, 8, vec![0, 100, 200, 255]).unwrap();
        let cb = Codebook::new(2, vec![0.0f64, 255.0]).unwrap();
        let q = quantize_image(&img, &cb);
        assert_eq!(q.pixels(), &[0, 0, 1, 1]);
        assert_eq!(q.bit_depth(), 1);

        let id = Codebook::new(256, (0..256).map(|v| v as f64).collect()).unwrap();
        let img = GrayImage::from_fn(16, 16, 8, |r, c| (r * 16 + c) as u8).unwrap();
        assert_eq!(quantize_image(&img, &id), img);

        let flat = GrayImage::new(3, 3, 8, vec![77; 9]).unwrap();
        let cb16 = Codebook::<f32>::uniform(16).unwrap();
        let q = quantize_image(&flat, &cb16);
        assert!(q.pixels().iter().all(|&p| p == q.pixels()[0]));
    }

    #[test]
    fn skewed_histogram_keeps_levels_distinct() {
        let mut hist = [0u64; 256];
        hist[3] = 1_000_000;
        for v in (10..250).step_by(7) {
            hist[v] = 1;
        }
        let t = LloydMax::new(16).train::<f64>(&hist).unwrap();
        let r = t.codebook.reconstructions();
        assert_eq!(r.len(), 16);
        assert!(r.windows(2).all(|w| w[0] < w[1]));
        let b = t.codebook.boundaries();
        for i in 0..b.len() {
            assert!(r[i] < b[i] && b[i] < r[i + 1]);
        }
    }

    proptest! {
        #[test]
        fn monotone_and_non_increasing(
            hist in proptest::collection::vec(0u64..50, 256),
            levels in prop_oneof![Just(16usize), Just(64usize)],
        ) {
            prop_assume!(hist.iter().any(|&c| c > 0));
            let t = LloydMax::new(levels).train::<f64>(&hist).unwrap();
            prop_assert!(t.mse_history.windows(2).all(|w| w[1] <= w[0]));
            prop_assert!(t.final_mse() <= Codebook::<f64>::uniform(levels).unwrap().mse(&hist));
            let idx: Vec<usize> = (0..256).map(|v| t.codebook.index_of(v as f64)).collect();
            prop_assert!(idx.windows(2).all(|w| w[0] <= w[1]));
            let again = LloydMax::new(levels).train::<f64>(&hist).unwrap();
            prop_assert_eq!(again.codebook, t.codebook);
        }
    }
}
