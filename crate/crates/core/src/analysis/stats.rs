use super::AnalysisError;
use crate::scalar::Real;

/// Sample Pearson correlation, clamped to `[-1, 1]`. `None` when either
/// input has zero variance.
pub fn pearson<T: Real>(x: &[T], y: &[T]) -> Option<T> {
    assert_eq!(x.len(), y.len());
    if x.is_empty() {
        return None;
    }
    let n = T::from_count(x.len() as u64);
    let mx = x.iter().copied().sum::<T>() / n;
    let my = y.iter().copied().sum::<T>() / n;
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy = sxy + da * db;
        sxx = sxx + da * da;
        syy = syy + db * db;
    }
    if !(sxx > T::zero() && syy > T::zero()) {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).max(-T::one()).min(T::one()))
}

/// Ranks starting at 1; ties get the average rank.
fn ranks<T: Real>(x: &[T]) -> Vec<T> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).expect("finite"));
    let mut out = vec![T::zero(); x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = T::from_count((i + j + 2) as u64) / T::lit(2.0);
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation.
pub fn spearman<T: Real>(x: &[T], y: &[T]) -> Option<T> {
    pearson(&ranks(x), &ranks(y))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MpdResult<T> {
    /// `sum_i |a_i - b_i| / ((a_i + b_i) / 2) * 100`
    pub percentage: T,
    pub mean_abs: T,
    /// Population standard deviation of `|a_i - b_i|`.
    pub std_abs: T,
}

pub fn mean_percentage_difference<T: Real>(a: &[T], b: &[T]) -> Result<MpdResult<T>, AnalysisError> {
    if a.len() != b.len() {
        return Err(AnalysisError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    let two = T::lit(2.0);
    let hundred = T::lit(100.0);
    let mut pct = T::zero();
    let mut diffs = Vec::with_capacity(a.len());
    for (i, (&x, &y)) in a.iter().zip(b).enumerate() {
        let mean = (x + y) / two;
        if mean == T::zero() {
            return Err(AnalysisError::DegeneratePair(i));
        }
        let d = (x - y).abs();
        pct = pct + d / mean * hundred;
        diffs.push(d);
    }
    let n = T::from_count(diffs.len() as u64);
    let mean_abs = diffs.iter().copied().sum::<T>() / n;
    let var = diffs.iter().map(|&d| (d - mean_abs) * (d - mean_abs)).sum::<T>() / n;
    Ok(MpdResult { percentage: pct, mean_abs, std_abs: var.sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mpd_examples() {
        assert_eq!(mean_percentage_difference(&[1.0], &[3.0]).unwrap().percentage, 100.0);
        let r = mean_percentage_difference(&[2.0], &[2.0]).unwrap();
        assert_eq!((r.percentage, r.std_abs), (0.0, 0.0));
        let r = mean_percentage_difference(&[1.0, 2.0, 4.0], &[1.0, 2.0, 4.0]).unwrap();
        assert_eq!(r.percentage, 0.0);
        let r = mean_percentage_difference(&[1.0, 0.0], &[3.0, 2.0]).unwrap();
        assert_eq!(r.percentage, 300.0);
        assert_eq!((r.mean_abs, r.std_abs), (2.0, 0.0));
        assert_eq!(
            mean_percentage_difference(&[1.0, 0.0], &[1.0, 0.0]),
            Err(AnalysisError::DegeneratePair(1))
        );
        assert!(mean_percentage_difference(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn rank_correlation() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(spearman(&x, &[10.0, 20.0, 30.0, 1000.0]), Some(1.0));
        assert_eq!(spearman(&x, &[4.0, 3.0, 2.0, 1.0]), Some(-1.0));
        assert_eq!(ranks(&[5.0, 1.0, 5.0]), vec![2.5, 1.0, 2.5]);
        assert_eq!(pearson(&x, &[1.0; 4]), None);
    }
}
