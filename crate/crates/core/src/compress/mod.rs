//! Lossless compression and the Normalized Compression measure.
//!
//! `NC(x) = C(x) / |x|` where `C(x)` is the compressed size in bits
//! (8 x compressed bytes, headers included) and `|x|` the number of binary
//! symbols. The alphabet is `{0,1}`, so no `log2 |A|` factor appears.

mod bench;
mod cm;
mod coder;
mod external;

use std::collections::BTreeMap;
use std::fmt;
use std::io;
use std::sync::Arc;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::imageio::BinaryMatrix;
use crate::scalar::Real;

pub use bench::{benchmark, BenchmarkReport, BenchmarkRow};
pub use cm::{cm_compress, cm_compress_bytes, cm_compress_matrix, cm_decompress, DecodedBits};
pub use external::{ExternalCodec, ExternalCodecSpec};

#[derive(Debug, Error)]
pub enum CompressError {
    #[error("corrupt stream: {0}")]
    Decode(String),
    #[error("unknown codec '{0}'")]
    UnknownCodec(String),
    #[error("duplicate codec '{0}'")]
    DuplicateCodec(String),
    #[error("codec '{0}' is not available on this host")]
    Unavailable(String),
    #[error("external codec '{name}' failed: {message}")]
    External { name: String, message: String },
    #[error("invalid command template: {0}")]
    Template(String),
    #[error("empty input")]
    EmptyInput,
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CodecKind {
    Builtin,
    External,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CodecId {
    pub name: String,
    pub kind: CodecKind,
}

impl CodecId {
    pub fn new(name: impl Into<String>, kind: CodecKind) -> Self {
        CodecId { name: name.into(), kind }
    }
}

impl fmt::Display for CodecId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Outcome of compressing one object.
#[derive(Clone, Debug, PartialEq)]
pub struct CompressionResult {
    pub codec: CodecId,
    pub input_bits: u64,
    pub output_bits: u64,
    pub wall_time: Duration,
    pub peak_memory: Option<u64>,
}

/// A lossless compressor usable as an NC engine.
pub trait Codec: Send + Sync {
    fn id(&self) -> &CodecId;

    /// Changes whenever output sizes may change; part of cache keys.
    fn version(&self) -> &str;

    fn is_available(&self) -> bool {
        true
    }

    /// `C(x)` in bits.
    fn compressed_bits(&self, x: &BinaryMatrix) -> Result<u64, CompressError>;

    /// Compresses an opaque byte stream (benchmark path).
    fn compress_bytes(&self, data: &[u8]) -> Result<CompressionResult, CompressError>;
}

/// The built-in context-mixing codec.
#[derive(Clone, Debug)]
pub struct CmCodec {
    id: CodecId,
}

impl CmCodec {
    pub const NAME: &'static str = "cm";
    pub const VERSION: &'static str = "cm-1";

    pub fn new() -> Self {
        CmCodec { id: CodecId::new(Self::NAME, CodecKind::Builtin) }
    }
}

impl Default for CmCodec {
    fn default() -> Self {
        Self::new()
    }
}

impl Codec for CmCodec {
    fn id(&self) -> &CodecId {
        &self.id
    }

    fn version(&self) -> &str {
        Self::VERSION
    }

    fn compressed_bits(&self, x: &BinaryMatrix) -> Result<u64, CompressError> {
        Ok(8 * cm_compress_matrix(x).len() as u64)
    }

    fn compress_bytes(&self, data: &[u8]) -> Result<CompressionResult, CompressError> {
        let start = Instant::now();
        let out = cm_compress_bytes(data);
        Ok(CompressionResult {
            codec: self.id.clone(),
            input_bits: 8 * data.len() as u64,
            output_bits: 8 * out.len() as u64,
            wall_time: start.elapsed(),
            peak_memory: None,
        })
    }
}

/// Normalized Compression of a binary matrix.
pub fn nc<T: Real>(x: &BinaryMatrix, codec: &dyn Codec) -> Result<T, CompressError> {
    if x.is_empty() {
        return Err(CompressError::EmptyInput);
    }
    let bits = codec.compressed_bits(x)?;
    Ok(T::from_count(bits) / T::from_count(x.len() as u64))
}

/// Immutable-after-build set of codecs keyed by name.
#[derive(Clone, Default)]
pub struct CodecRegistry {
    codecs: BTreeMap<String, Arc<dyn Codec>>,
}

impl CodecRegistry {
    pub fn new() -> Self {
        CodecRegistry::default()
    }

    /// Built-in codec plus adapters for the usual external stream compressors.
    pub fn with_defaults() -> Self {
        let mut reg = CodecRegistry::new();
        reg.register(Arc::new(CmCodec::new())).expect("empty registry");
        for spec in ExternalCodecSpec::defaults() {
            reg.register(Arc::new(ExternalCodec::new(spec))).expect("default names are unique");
        }
        reg
    }

    pub fn register(&mut self, codec: Arc<dyn Codec>) -> Result<(), CompressError> {
        let name = codec.id().name.clone();
        if self.codecs.contains_key(&name) {
            return Err(CompressError::DuplicateCodec(name));
        }
        self.codecs.insert(name, codec);
        Ok(())
    }

    /// Replaces any codec of the same name.
    pub fn replace(&mut self, codec: Arc<dyn Codec>) {
        self.codecs.insert(codec.id().name.clone(), codec);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Codec>, CompressError> {
        self.codecs
            .get(name)
            .cloned()
            .ok_or_else(|| CompressError::UnknownCodec(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.codecs.keys().map(String::as_str)
    }

    pub fn nc<T: Real>(&self, x: &BinaryMatrix, name: &str) -> Result<T, CompressError> {
        nc(x, self.get(name)?.as_ref())
    }
}
