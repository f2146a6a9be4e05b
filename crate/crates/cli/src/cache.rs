//! Persistent compressed-size cache keyed by input content.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use artinfo::compress::{CodecId, CompressionResult};
use artinfo::{BinaryMatrix, Codec, CompressError};
use sha2::{Digest, Sha256};

pub const CACHE_ENV: &str = "ARTINFO_CACHE_DIR";
const FILE_NAME: &str = "compressed_bits.tsv";

type Key = (String, String, String);

/// SHA-256 of the matrix shape and its packed bits, hex encoded.
pub fn content_hash(x: &BinaryMatrix) -> String {
    let mut h = Sha256::new();
    h.update((x.rows() as u64).to_le_bytes());
    h.update((x.cols() as u64).to_le_bytes());
    h.update(x.pack());
    hex(&h.finalize())
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Short digest of a codec version string (templates may hold tabs).
fn version_key(version: &str) -> String {
    hex(&Sha256::digest(version.as_bytes())[..8])
}

struct Inner {
    map: HashMap<Key, u64>,
    file: File,
}

/// Append-only `hash\tcodec\tversion\tbits` log, loaded into memory on open.
/// Writes are serialized through one lock.
pub struct ResultCache {
    path: PathBuf,
    inner: Mutex<Inner>,
}

impl ResultCache {
    pub fn open(dir: impl AsRef<Path>) -> io::Result<Self> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let path = dir.join(FILE_NAME);
        let mut map = HashMap::new();
        if path.exists() {
            for line in BufReader::new(File::open(&path)?).lines() {
                let line = line?;
                let f: Vec<&str> = line.split('\t').collect();
                // a torn final line from an interrupted run is skipped
                if let [hash, codec, version, bits] = f[..] {
                    if let Ok(bits) = bits.parse() {
                        map.insert((hash.to_string(), codec.to_string(), version.to_string()), bits);
                    }
                }
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(ResultCache { path, inner: Mutex::new(Inner { map, file }) })
    }

    /// Opens the directory named by the cache environment variable, if set.
    pub fn from_env() -> io::Result<Option<Self>> {
        match std::env::var_os(CACHE_ENV) {
            Some(dir) if !dir.is_empty() => ResultCache::open(PathBuf::from(dir)).map(Some),
            _ => Ok(None),
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.inner.lock().expect("cache lock").map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn key(hash: &str, codec: &dyn Codec) -> Key {
        (hash.to_string(), codec.id().name.clone(), version_key(codec.version()))
    }

    pub fn get(&self, hash: &str, codec: &dyn Codec) -> Option<u64> {
        self.inner.lock().expect("cache lock").map.get(&Self::key(hash, codec)).copied()
    }

    pub fn insert(&self, hash: &str, codec: &dyn Codec, bits: u64) -> io::Result<()> {
        let key = Self::key(hash, codec);
        let mut inner = self.inner.lock().expect("cache lock");
        if inner.map.contains_key(&key) {
            return Ok(());
        }
        writeln!(inner.file, "{}\t{}\t{}\t{bits}", key.0, key.1, key.2)?;
        inner.map.insert(key, bits);
        Ok(())
    }
}

/// Codec wrapper that answers `compressed_bits` from the cache when possible.
pub struct CachedCodec {
    inner: Arc<dyn Codec>,
    cache: Arc<ResultCache>,
}

impl CachedCodec {
    pub fn new(inner: Arc<dyn Codec>, cache: Arc<ResultCache>) -> Self {
        CachedCodec { inner, cache }
    }
}

impl Codec for CachedCodec {
    fn id(&self) -> &CodecId {
        self.inner.id()
    }

    fn version(&self) -> &str {
        self.inner.version()
    }

    fn is_available(&self) -> bool {
        self.inner.is_available()
    }

    fn compressed_bits(&self, x: &BinaryMatrix) -> Result<u64, CompressError> {
        let hash = content_hash(x);
        if let Some(bits) = self.cache.get(&hash, self.inner.as_ref()) {
            return Ok(bits);
        }
        let bits = self.inner.compressed_bits(x)?;
        self.cache.insert(&hash, self.inner.as_ref(), bits)?;
        Ok(bits)
    }

    fn compress_bytes(&self, data: &[u8]) -> Result<CompressionResult, CompressError> {
        self.inner.compress_bytes(data)
    }
}
