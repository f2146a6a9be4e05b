//! Measure-evaluation experiments: pixel edition, dataset comparison and
//! super-sampling.

use std::fmt::Write as _;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bdm::{bdm, super_sample, CtmTable};
use crate::fingerprint::AuthorCatalog;
use crate::imageio::{binarize, BinaryMatrix, GrayImage};
use crate::meta::Metadata;
use crate::pipeline::{MeasureKind, Measurer, Pipeline, PipelineError};
use crate::scalar::Real;

/// Number of pixels edited at `rate` percent: `round(rate / 100 * n)`.
pub fn edit_count(rate: f64, n: usize) -> usize {
    ((rate / 100.0 * n as f64).round() as usize).min(n)
}

/// Replaces `edit_count(rate, N)` distinct pixels, chosen uniformly, with
/// uniform values over the full intensity range (a replacement may equal the
/// original). Returns the edited image and the sorted edited positions.
pub fn edit_pixels(img: &GrayImage, rate: f64, rng: &mut impl Rng) -> (GrayImage, Vec<usize>) {
    let n = img.pixels().len();
    let mut positions = index::sample(rng, n, edit_count(rate, n)).into_vec();
    let max = img.max_value();
    let mut px = img.pixels().to_vec();
    for &p in &positions {
        px[p] = rng.random_range(0..=max);
    }
    positions.sort_unstable();
    (img.with_pixels(px).expect("same shape and depth"), positions)
}

/// Generator for one rate; depends only on `seed` and the rate.
pub fn rate_rng(seed: u64, rate: f64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rate.to_bits());
    rng
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow<T> {
    pub rate: f64,
    pub measure: MeasureKind,
    pub value: T,
}

/// Measures of edited copies of `img`, one row per (rate, measure), in input order.
pub fn pixel_edition_sweep<T: Real>(
    img: &GrayImage,
    rates: &[f64],
    seed: u64,
    measures: &[MeasureKind],
    measurer: &Measurer<'_, T>,
) -> Result<Vec<SweepRow<T>>, PipelineError> {
    if let Some(&bad) = rates.iter().find(|&&r| !(r > 0.0 && r <= 100.0)) {
        return Err(PipelineError::InvalidRate(bad));
    }
    let per_rate: Vec<Vec<SweepRow<T>>> = rates
        .par_iter()
        .map(|&rate| {
            let (edited, _) = edit_pixels(img, rate, &mut rate_rng(seed, rate));
            let x = binarize(&edited);
            measures
                .iter()
                .map(|&m| Ok(SweepRow { rate, measure: m, value: measurer.measure(m, &x)? }))
                .collect::<Result<Vec<_>, PipelineError>>()
        })
        .collect::<Result<_, _>>()?;
    Ok(per_rate.into_iter().flatten().collect())
}

pub fn sweep_csv<T: Real>(rows: &[SweepRow<T>], meta: &Metadata) -> String {
    let mut s = meta.line();
    s.push_str("rate,measure,value\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{}", r.rate, r.measure, r.value);
    }
    s
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonRow<T> {
    pub dataset: String,
    pub author: String,
    pub image: String,
    /// One value per requested measure, in request order.
    pub values: Vec<T>,
}

/// Per-image measures for every image of every dataset.
pub fn dataset_comparison<T: Real>(
    datasets: &[(String, AuthorCatalog)],
    measures: &[MeasureKind],
    measurer: &Measurer<'_, T>,
    pipeline: &Pipeline,
) -> Result<Vec<ComparisonRow<T>>, PipelineError> {
    let jobs: Vec<(&str, &str, &std::path::Path)> = datasets
        .iter()
        .flat_map(|(name, cat)| {
            cat.authors.iter().flat_map(move |(author, paths)| {
                paths.iter().map(move |p| (name.as_str(), author.as_str(), p.as_path()))
            })
        })
        .collect();
    jobs.par_iter()
        .map(|&(dataset, author, path)| {
            let x = binarize(&pipeline.load(path)?);
            Ok(ComparisonRow {
                dataset: dataset.to_string(),
                author: author.to_string(),
                image: path.file_name().map_or_else(
                    || path.display().to_string(),
                    |f| f.to_string_lossy().into_owned(),
                ),
                values: measurer.measure_all(measures, &x)?,
            })
        })
        .collect()
}

pub fn comparison_csv<T: Real>(
    rows: &[ComparisonRow<T>],
    measures: &[MeasureKind],
    meta: &Metadata,
) -> String {
    let mut s = meta.line();
    s.push_str("dataset,author,image");
    for m in measures {
        let _ = write!(s, ",{m}");
    }
    s.push('\n');
    if measures.is_empty() {
        return s;
    }
    for r in rows {
        let _ = write!(s, "{},{},{}", r.dataset, r.author, r.image);
        for v in &r.values {
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
    }
    s
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuperSampleRow<T> {
    pub index: usize,
    pub original_bits: T,
    pub supersampled_bits: T,
    pub ratio: T,
}

/// BDM before and after `factor x factor` super-sampling.
pub fn supersample_experiment<T: Real>(
    xs: &[BinaryMatrix],
    factor: usize,
    table: &CtmTable<T>,
) -> Result<Vec<SuperSampleRow<T>>, PipelineError> {
    xs.par_iter()
        .enumerate()
        .map(|(index, x)| {
            let original_bits = bdm(x, table)?.total_bits;
            let supersampled_bits = bdm(&super_sample(x, factor), table)?.total_bits;
            Ok(SuperSampleRow {
                index,
                original_bits,
                supersampled_bits,
                ratio: supersampled_bits / original_bits,
            })
        })
        .collect()
}

pub fn supersample_csv<T: Real>(rows: &[SuperSampleRow<T>], meta: &Metadata) -> String {
    let mut s = meta.line();
    s.push_str("index,bdm_original,bdm_supersampled,ratio\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{}", r.index, r.original_bits, r.supersampled_bits, r.ratio);
    }
    s
}
