//! Image preparation (trim, quantize) and the per-image measures.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::bdm::{nbdm1, nbdm2, BdmError, CtmTable};
use crate::compress::{nc, Codec, CompressError};
use crate::hdc::{image_alpha, HdcError, DEFAULT_R_INITIAL};
use crate::imageio::{binarize, load_image, trim_margins, BinaryMatrix, GrayImage, ImageError};
use crate::quantize::{histogram, quantize_image, LloydMax, QuantizeError};
use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Quantize(#[from] QuantizeError),
    #[error(transparent)]
    Compress(#[from] CompressError),
    #[error(transparent)]
    Bdm(#[from] BdmError),
    #[error(transparent)]
    Hdc(#[from] HdcError),
    #[error("edition rate {0} outside (0, 100]")]
    InvalidRate(f64),
}

/// Trim, then quantize to `levels` gray levels.
#[derive(Clone, Debug, PartialEq)]
pub struct Pipeline {
    pub levels: usize,
    /// Margin tolerance; `None` disables trimming.
    pub trim: Option<u8>,
    pub lloyd: LloydMax,
}

impl Pipeline {
    pub fn new(levels: usize) -> Self {
        Pipeline { levels, trim: None, lloyd: LloydMax::new(levels) }
    }

    pub fn with_trim(mut self, tolerance: Option<u8>) -> Self {
        self.trim = tolerance;
        self
    }

    pub fn trimmed(&self, img: &GrayImage) -> GrayImage {
        match self.trim {
            Some(tol) => trim_margins(img, tol),
            None => img.clone(),
        }
    }

    /// Images whose depth already fits in `levels` pass through unquantized.
    pub fn prepare(&self, img: &GrayImage) -> Result<GrayImage, PipelineError> {
        let img = self.trimmed(img);
        if self.levels >= 1usize << img.bit_depth() {
            return Ok(img);
        }
        let training = self.lloyd.train::<f64>(&histogram(&img))?;
        Ok(quantize_image(&img, &training.codebook))
    }

    pub fn load(&self, path: impl AsRef<Path>) -> Result<GrayImage, PipelineError> {
        self.prepare(&load_image(path)?)
    }
}

impl Default for Pipeline {
    fn default() -> Self {
        Pipeline::new(256)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MeasureKind {
    Nc,
    Nbdm1,
    Nbdm2,
}

impl MeasureKind {
    pub const ALL: [MeasureKind; 3] = [MeasureKind::Nc, MeasureKind::Nbdm1, MeasureKind::Nbdm2];
}

impl fmt::Display for MeasureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MeasureKind::Nc => "nc",
            MeasureKind::Nbdm1 => "nbdm1",
            MeasureKind::Nbdm2 => "nbdm2",
        })
    }
}

impl FromStr for MeasureKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "nc" => Ok(MeasureKind::Nc),
            "nbdm1" => Ok(MeasureKind::Nbdm1),
            "nbdm2" => Ok(MeasureKind::Nbdm2),
            other => Err(format!("unknown measure '{other}'")),
        }
    }
}

/// Codec and CTM table shared by all measure evaluations.
#[derive(Clone, Copy)]
pub struct Measurer<'a, T> {
    pub codec: &'a dyn Codec,
    pub table: &'a CtmTable<T>,
}

impl<'a, T: Real> Measurer<'a, T> {
    pub fn new(codec: &'a dyn Codec, table: &'a CtmTable<T>) -> Self {
        Measurer { codec, table }
    }

    pub fn measure(&self, kind: MeasureKind, x: &BinaryMatrix) -> Result<T, PipelineError> {
        Ok(match kind {
            MeasureKind::Nc => nc(x, self.codec)?,
            MeasureKind::Nbdm1 => nbdm1(x, self.table)?,
            MeasureKind::Nbdm2 => nbdm2(x, self.table)?,
        })
    }

    pub fn measure_all(&self, kinds: &[MeasureKind], x: &BinaryMatrix) -> Result<Vec<T>, PipelineError> {
        kinds.iter().map(|&k| self.measure(k, x)).collect()
    }
}

/// Every global measure of one prepared image.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImageMeasures<T> {
    pub nc: T,
    pub nbdm1: T,
    pub nbdm2: T,
    /// `None` when the image is too small or too flat for a slope.
    pub alpha: Option<T>,
}

impl<T: Real> Measurer<'_, T> {
    pub fn image_measures(
        &self,
        img: &GrayImage,
        r_initial: Option<usize>,
        r_final: Option<usize>,
    ) -> Result<ImageMeasures<T>, PipelineError> {
        let x = binarize(img);
        let alpha = image_alpha(img, r_initial.unwrap_or(DEFAULT_R_INITIAL), r_final).ok();
        Ok(ImageMeasures {
            nc: self.measure(MeasureKind::Nc, &x)?,
            nbdm1: self.measure(MeasureKind::Nbdm1, &x)?,
            nbdm2: self.measure(MeasureKind::Nbdm2, &x)?,
            alpha,
        })
    }
}
