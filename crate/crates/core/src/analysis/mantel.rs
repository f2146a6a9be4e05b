use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{pearson, AnalysisError, DistanceMatrix};
use crate::scalar::Real;

pub const DEFAULT_PERMUTATIONS: usize = 999;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MantelResult<T> {
    pub r: T,
    pub p: T,
    pub permutations: usize,
}

/// Permutation test for correlation between two distance matrices.
///
/// Permutation `k` shuffles the rows and columns of `b` with a ChaCha8
/// generator seeded by `seed` on stream `k`, so results do not depend on the
/// thread count.
pub fn mantel<T: Real>(
    a: &DistanceMatrix<T>,
    b: &DistanceMatrix<T>,
    permutations: usize,
    seed: u64,
) -> Result<MantelResult<T>, AnalysisError> {
    if a.labels() != b.labels() {
        return Err(AnalysisError::LabelMismatch);
    }
    a.require_pairwise()?;
    let x = a.upper_triangle();
    let r = pearson(&x, &b.upper_triangle()).ok_or(AnalysisError::DegenerateMatrix)?;
    let n = a.len();
    let hits = (0..permutations as u64)
        .into_par_iter()
        .filter(|&k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k);
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            let y: Vec<T> = (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .map(|(i, j)| b.get(perm[i], perm[j]))
                .collect();
            pearson(&x, &y).is_some_and(|rp| rp >= r)
        })
        .count();
    let p = T::from_count(1 + hits as u64) / T::from_count(1 + permutations as u64);
    Ok(MantelResult { r, p, permutations })
}
