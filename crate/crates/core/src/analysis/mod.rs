//! Distance matrices, clustering, the Mantel test and summary statistics.

mod mantel;
mod mst;
mod newick;
mod stats;
mod upgma;

pub mod experiments;

use std::collections::HashSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::meta::Metadata;
use crate::scalar::Real;

pub use mantel::{mantel, MantelResult, DEFAULT_PERMUTATIONS};
pub use mst::{export_dot, kruskal_mst, Edge, SpanningTree};
pub use newick::{export_newick, parse_newick, NewickNode};
pub use stats::{mean_percentage_difference, pearson, spearman, MpdResult};
pub use upgma::{upgma, Dendrogram, Merge};

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("need at least 2 labels, got {0}")]
    TooFewLabels(usize),
    #[error("invalid distance matrix: {0}")]
    InvalidMatrix(String),
    #[error("matrices have different labels")]
    LabelMismatch,
    #[error("zero variance in the distance triangle")]
    DegenerateMatrix,
    #[error("pair {0} has zero mean")]
    DegeneratePair(usize),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    EmptyInput,
    #[error("newick: {0}")]
    Newick(String),
}

/// Symmetric, zero-diagonal, nonnegative matrix over unique labels.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix<T> {
    labels: Vec<String>,
    d: Vec<T>,
}

impl<T: Real> DistanceMatrix<T> {
    /// `d` is row-major `n x n`.
    pub fn new(labels: Vec<String>, d: Vec<T>) -> Result<Self, AnalysisError> {
        let n = labels.len();
        if n == 0 {
            return Err(AnalysisError::EmptyInput);
        }
        if d.len() != n * n {
            return Err(AnalysisError::InvalidMatrix(format!("{} entries for {n} labels", d.len())));
        }
        let mut seen = HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(AnalysisError::InvalidMatrix(format!("duplicate label '{l}'")));
            }
        }
        for i in 0..n {
            if d[i * n + i] != T::zero() {
                return Err(AnalysisError::InvalidMatrix(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let v = d[i * n + j];
                if !v.is_finite() || v < T::zero() {
                    return Err(AnalysisError::InvalidMatrix(format!("bad entry ({i},{j}) = {v}")));
                }
                if v != d[j * n + i] {
                    return Err(AnalysisError::InvalidMatrix(format!("asymmetric at ({i},{j})")));
                }
            }
        }
        Ok(DistanceMatrix { labels, d })
    }

    /// Builds from `f(i, j)` evaluated for `i < j`.
    pub fn from_fn(
        labels: Vec<String>,
        mut f: impl FnMut(usize, usize) -> T,
    ) -> Result<Self, AnalysisError> {
        let n = labels.len();
        let mut d = vec![T::zero(); n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = f(i, j);
                d[i * n + j] = v;
                d[j * n + i] = v;
            }
        }
        DistanceMatrix::new(labels, d)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.d[i * self.labels.len() + j]
    }

    /// Strictly-upper-triangle entries, row by row.
    pub fn upper_triangle(&self) -> Vec<T> {
        let n = self.len();
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| self.get(i, j)).collect()
    }

    /// Applies `f` to every off-diagonal entry.
    pub fn map(&self, f: impl Fn(T) -> T) -> Result<Self, AnalysisError> {
        DistanceMatrix::from_fn(self.labels.clone(), |i, j| f(self.get(i, j)))
    }

    /// Square CSV with a leading label column and a label header row.
    pub fn to_csv(&self, meta: &Metadata) -> String {
        let mut s = meta.line();
        s.push_str("label");
        for l in &self.labels {
            let _ = write!(s, ",{l}");
        }
        s.push('\n');
        for (i, l) in self.labels.iter().enumerate() {
            s.push_str(l);
            for j in 0..self.len() {
                let _ = write!(s, ",{}", self.get(i, j));
            }
            s.push('\n');
        }
        s
    }

    pub fn parse_csv(text: &str) -> Result<Self, AnalysisError> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or(AnalysisError::EmptyInput)?;
        let labels: Vec<String> = header.split(',').skip(1).map(|s| s.trim().to_string()).collect();
        let n = labels.len();
        let mut d = Vec::with_capacity(n * n);
        for (i, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if i >= n || fields.len() != n + 1 || fields[0] != labels[i] {
                return Err(AnalysisError::InvalidMatrix(format!("row {}: '{line}'", i + 1)));
            }
            for f in &fields[1..] {
                let v = f
                    .parse::<f64>()
                    .ok()
                    .and_then(T::from_f64)
                    .ok_or_else(|| AnalysisError::InvalidMatrix(format!("bad value '{f}'")))?;
                d.push(v);
            }
        }
        DistanceMatrix::new(labels, d)
    }

    pub(crate) fn require_pairwise(&self) -> Result<(), AnalysisError> {
        if self.len() < 2 {
            return Err(AnalysisError::TooFewLabels(self.len()));
        }
        Ok(())
    }
}
