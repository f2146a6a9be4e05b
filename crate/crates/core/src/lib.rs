//! Information-theoretic measures for digital images of paintings.
//!
//! The crate turns images into binary matrices and scores them with a
//! lossless compressor (normalized compression, NC) and with the block
//! decomposition method over a CTM table (NBDM). Tiled NC gives per-author
//! complexity fingerprints that are compared, clustered and tested with the
//! tools in [`analysis`]. Surface roughness is measured with the
//! height-difference correlation in [`hdc`].
//!
//! Real-valued code is generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root fix the common choices.

pub mod analysis;
pub mod bdm;
pub mod compress;
pub mod fingerprint;
pub mod hdc;
pub mod imageio;
pub mod meta;
pub mod pipeline;
pub mod quantize;
pub mod scalar;
pub mod synth;

pub use analysis::{AnalysisError, Dendrogram, DistanceMatrix, MantelResult, SpanningTree};
pub use bdm::{BdmError, BdmValue, CtmTable};
pub use compress::{nc, CmCodec, Codec, CodecRegistry, CompressError};
pub use fingerprint::{AuthorCatalog, ComplexityMatrix, FingerprintError, TileMode};
pub use hdc::{HdcCurve, HdcError};
pub use imageio::{BinaryMatrix, GrayImage, ImageError};
pub use meta::Metadata;
pub use pipeline::{MeasureKind, Measurer, Pipeline, PipelineError};
pub use quantize::{Codebook, LloydMax, QuantizeError};
pub use scalar::Real;

pub type CtmTableF64 = CtmTable<f64>;
pub type CtmTableF32 = CtmTable<f32>;
pub type ComplexityMatrixF64 = ComplexityMatrix<f64>;
pub type ComplexityMatrixF32 = ComplexityMatrix<f32>;
pub type DistanceMatrixF64 = DistanceMatrix<f64>;
pub type DistanceMatrixF32 = DistanceMatrix<f32>;
pub type DendrogramF64 = Dendrogram<f64>;
pub type SpanningTreeF64 = SpanningTree<f64>;
pub type HdcCurveF64 = HdcCurve<f64>;
pub type CodebookF64 = Codebook<f64>;
