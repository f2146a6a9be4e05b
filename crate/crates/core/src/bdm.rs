//! Block Decomposition Method over precomputed CTM tables.
//!
//! A binary matrix is tiled into non-overlapping `4x4` blocks from the top
//! left (partial blocks at the right and bottom edges are dropped). With `n_b`
//! the multiplicity of each distinct block `b`,
//!
//! ```text
//! BDM(x) = sum_b [ CTM(b) + log2(n_b) ]
//! ```
//!
//! Blocks missing from the table are scored by their Shannon entropy,
//! `16 * H(ones / 16)`.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::imageio::BinaryMatrix;
use crate::scalar::{binary_entropy, Real};

pub const DEFAULT_BLOCK: (usize, usize) = (4, 4);

#[derive(Debug, Error)]
pub enum BdmError {
    #[error("matrix {rows}x{cols} holds no {block_rows}x{block_cols} block")]
    EmptyDecomposition { rows: usize, cols: usize, block_rows: usize, block_cols: usize },
    #[error("invalid CTM table: {0}")]
    Table(String),
    #[error("BDM max equals BDM min ({0}); NBDM2 undefined")]
    DegenerateNormalization(f64),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Row-major bit code of a block; the first cell is the most significant bit.
pub type BlockCode = u64;

/// CTM complexities (bits) for binary blocks of one shape.
#[derive(Clone, Debug, PartialEq)]
pub struct CtmTable<T> {
    shape: (usize, usize),
    entries: BTreeMap<BlockCode, T>,
}

impl<T: Real> CtmTable<T> {
    /// Validates values, rejects conflicting duplicates and fills missing
    /// complements by symmetry.
    pub fn from_entries(
        shape: (usize, usize),
        entries: impl IntoIterator<Item = (BlockCode, T)>,
    ) -> Result<Self, BdmError> {
        let cells = shape.0 * shape.1;
        if cells == 0 || cells > 64 {
            return Err(BdmError::Table(format!("unsupported block shape {shape:?}")));
        }
        let mask = full_mask(cells);
        let mut map = BTreeMap::new();
        for (code, value) in entries {
            if code & !mask != 0 {
                return Err(BdmError::Table(format!("block {code:#x} exceeds {cells} bits")));
            }
            if !value.is_finite() || value <= T::zero() {
                return Err(BdmError::Table(format!("block {code:#x}: value {value} not finite and positive")));
            }
            if let Some(&prev) = map.get(&code) {
                if !close(prev, value) {
                    return Err(BdmError::Table(format!(
                        "block {code:#x} listed as both {prev} and {value}"
                    )));
                }
                continue;
            }
            map.insert(code, value);
        }
        let stored: Vec<(BlockCode, T)> = map.iter().map(|(&c, &v)| (c, v)).collect();
        for (code, value) in stored {
            let comp = code ^ mask;
            match map.get(&comp) {
                Some(&other) if !close(other, value) => {
                    return Err(BdmError::Table(format!(
                        "complement pair {code:#x}/{comp:#x} has {value} vs {other}"
                    )));
                }
                Some(_) => {}
                None => {
                    map.insert(comp, value);
                }
            }
        }
        if map.is_empty() {
            return Err(BdmError::Table("no entries".into()));
        }
        Ok(CtmTable { shape, entries: map })
    }

    pub fn shape(&self) -> (usize, usize) {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, code: BlockCode) -> Option<T> {
        self.entries.get(&code).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (BlockCode, T)> + '_ {
        self.entries.iter().map(|(&c, &v)| (c, v))
    }

    /// Table score of a block, or its entropy fallback (`true` in the flag).
    pub fn score(&self, code: BlockCode) -> (T, bool) {
        match self.entries.get(&code) {
            Some(&v) => (v, false),
            None => {
                let cells = (self.shape.0 * self.shape.1) as u64;
                let ones = T::from_count(code.count_ones() as u64);
                let n = T::from_count(cells);
                (n * binary_entropy(ones / n), true)
            }
        }
    }

    /// Entries by decreasing CTM, ties by increasing code.
    pub fn ranked(&self) -> Vec<(BlockCode, T)> {
        let mut v: Vec<(BlockCode, T)> = self.iter().collect();
        v.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("finite").then(a.0.cmp(&b.0)));
        v
    }

    /// Stable content digest used in output metadata.
    pub fn digest(&self) -> String {
        let mut h = crc32fast::Hasher::new();
        h.update(format!("{:?}", self.shape).as_bytes());
        for (c, v) in self.iter() {
            h.update(format!("{c:x}:{:e};", v.to_f64_lossy()).as_bytes());
        }
        format!("{:08x}", h.finalize())
    }

    /// Serializes 4x4 tables back into the `block_hex,ctm_bits` format.
    pub fn to_csv(&self) -> String {
        let digits = (self.shape.0 * self.shape.1).div_ceil(4);
        let mut s = String::from("block_hex,ctm_bits\n");
        for (c, v) in self.iter() {
            s.push_str(&format!("{c:0digits$x},{v}\n"));
        }
        s
    }
}

fn close<T: Real>(a: T, b: T) -> bool {
    (a - b).abs() <= T::lit(1e-9) * a.abs().max(b.abs())
}

fn full_mask(cells: usize) -> u64 {
    if cells == 64 {
        u64::MAX
    } else {
        (1u64 << cells) - 1
    }
}

/// Parses a `block_hex,ctm_bits` table for 4x4 blocks.
///
/// Lines starting with `#` and blank lines are ignored, as is a leading
/// `block_hex,...` header.
pub fn parse_ctm<T: Real>(text: &str) -> Result<CtmTable<T>, BdmError> {
    let mut entries = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("block") {
            continue;
        }
        let err = |msg: &str| BdmError::Table(format!("line {}: {msg}: '{line}'", lineno + 1));
        let (hex, value) = line.split_once(',').ok_or_else(|| err("expected block_hex,ctm_bits"))?;
        let hex = hex.trim();
        if hex.is_empty() || hex.len() > 4 {
            return Err(err("block must be up to 4 hex digits"));
        }
        let code = u64::from_str_radix(hex, 16).map_err(|_| err("bad hex"))?;
        let value: f64 = value.trim().parse().map_err(|_| err("bad number"))?;
        entries.push((code, T::from_f64(value).ok_or_else(|| err("unrepresentable"))?));
    }
    CtmTable::from_entries(DEFAULT_BLOCK, entries)
}

pub fn load_ctm<T: Real>(path: impl AsRef<Path>) -> Result<CtmTable<T>, BdmError> {
    parse_ctm(&fs::read_to_string(path)?)
}

fn block_count(rows: usize, cols: usize, shape: (usize, usize)) -> Result<usize, BdmError> {
    let n = (rows / shape.0) * (cols / shape.1);
    if n == 0 {
        return Err(BdmError::EmptyDecomposition {
            rows,
            cols,
            block_rows: shape.0,
            block_cols: shape.1,
        });
    }
    Ok(n)
}

/// Multiset of blocks (code -> multiplicity) of a non-overlapping tiling.
pub fn decompose(
    x: &BinaryMatrix,
    shape: (usize, usize),
) -> Result<BTreeMap<BlockCode, usize>, BdmError> {
    let (br, bc) = shape;
    if br * bc == 0 || br * bc > 64 {
        return Err(BdmError::Table(format!("unsupported block shape {shape:?}")));
    }
    block_count(x.rows(), x.cols(), shape)?;
    let mut out = BTreeMap::new();
    for top in (0..=x.rows() - br).step_by(br) {
        for left in (0..=x.cols() - bc).step_by(bc) {
            let mut code = 0u64;
            for r in top..top + br {
                for c in left..left + bc {
                    code = (code << 1) | x.get(r, c) as u64;
                }
            }
            *out.entry(code).or_insert(0) += 1;
        }
    }
    Ok(out)
}

/// BDM value with bookkeeping on how each distinct block was scored.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BdmValue<T> {
    pub total_bits: T,
    /// Distinct blocks scored.
    pub blocks_used: usize,
    /// Distinct blocks scored by the entropy fallback.
    pub fallback_blocks: usize,
}

fn aggregate<T: Real>(table: &CtmTable<T>, blocks: &BTreeMap<BlockCode, usize>) -> BdmValue<T> {
    let mut total = T::zero();
    let mut fallback = 0;
    for (&code, &mult) in blocks {
        let (score, fell_back) = table.score(code);
        fallback += fell_back as usize;
        total = total + score + T::from_count(mult as u64).log2();
    }
    BdmValue { total_bits: total, blocks_used: blocks.len(), fallback_blocks: fallback }
}

pub fn bdm<T: Real>(x: &BinaryMatrix, table: &CtmTable<T>) -> Result<BdmValue<T>, BdmError> {
    Ok(aggregate(table, &decompose(x, table.shape())?))
}

/// BDM of the all-zero matrix of the given shape.
pub fn bdm_min<T: Real>(shape: (usize, usize), table: &CtmTable<T>) -> Result<T, BdmError> {
    let n = block_count(shape.0, shape.1, table.shape())?;
    Ok(aggregate(table, &BTreeMap::from([(0, n)])).total_bits)
}

/// Block multiset of the maximal-complexity object: the highest-CTM blocks,
/// each used once before any is repeated.
fn max_multiset<T: Real>(n: usize, table: &CtmTable<T>) -> BTreeMap<BlockCode, usize> {
    let ranked = table.ranked();
    let t = ranked.len();
    let (q, rem) = (n / t, n % t);
    ranked
        .iter()
        .enumerate()
        .map(|(i, &(code, _))| (code, q + (i < rem) as usize))
        .filter(|&(_, m)| m > 0)
        .collect()
}

pub fn bdm_max<T: Real>(shape: (usize, usize), table: &CtmTable<T>) -> Result<T, BdmError> {
    let n = block_count(shape.0, shape.1, table.shape())?;
    Ok(aggregate(table, &max_multiset(n, table)).total_bits)
}

/// Builds a matrix whose decomposition is the maximal multiset. Cells outside
/// the block grid are zero.
pub fn max_object<T: Real>(
    shape: (usize, usize),
    table: &CtmTable<T>,
) -> Result<BinaryMatrix, BdmError> {
    let (br, bc) = table.shape();
    let n = block_count(shape.0, shape.1, table.shape())?;
    let blocks: Vec<BlockCode> = max_multiset(n, table)
        .into_iter()
        .flat_map(|(code, m)| std::iter::repeat_n(code, m))
        .collect();
    let per_row = shape.1 / bc;
    let cells = br * bc;
    let mut x = BinaryMatrix::zeros(shape.0, shape.1);
    for (k, &code) in blocks.iter().enumerate() {
        let (top, left) = ((k / per_row) * br, (k % per_row) * bc);
        for i in 0..cells {
            let bit = (code >> (cells - 1 - i)) & 1 == 1;
            x.set(top + i / bc, left + i % bc, bit);
        }
    }
    Ok(x)
}

/// BDM normalized by the number of symbols.
pub fn nbdm1<T: Real>(x: &BinaryMatrix, table: &CtmTable<T>) -> Result<T, BdmError> {
    Ok(bdm(x, table)?.total_bits / T::from_count(x.len() as u64))
}

/// BDM rescaled between the minimal and maximal objects of the same shape.
///
/// Values fall in `[0, 1]` when every block is in the table; entropy-scored
/// blocks can push them outside.
pub fn nbdm2<T: Real>(x: &BinaryMatrix, table: &CtmTable<T>) -> Result<T, BdmError> {
    let shape = (x.rows(), x.cols());
    let lo = bdm_min(shape, table)?;
    let hi = bdm_max(shape, table)?;
    if !(hi > lo) {
        return Err(BdmError::DegenerateNormalization(hi.to_f64_lossy()));
    }
    Ok((bdm(x, table)?.total_bits - lo) / (hi - lo))
}

/// Replaces every cell by a `factor x factor` block of the same bit.
pub fn super_sample(x: &BinaryMatrix, factor: usize) -> BinaryMatrix {
    assert!(factor >= 1);
    BinaryMatrix::from_fn(x.rows() * factor, x.cols() * factor, |r, c| {
        x.get(r / factor, c / factor) == 1
    })
}

/// Small synthetic table for tests and demos. Its values are illustrative,
/// not published CTM estimates.
pub const FIXTURE_CTM: &str = include_str!("../fixtures/ctm_fixture.csv");

pub fn fixture_table<T: Real>() -> CtmTable<T> {
    parse_ctm(FIXTURE_CTM).expect("bundled fixture parses")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table(entries: &[(u64, f64)]) -> CtmTable<f64> {
        CtmTable::from_entries(DEFAULT_BLOCK, entries.iter().copied()).unwrap()
    }

    fn block_matrix(code: u64) -> BinaryMatrix {
        BinaryMatrix::from_fn(4, 4, |r, c| (code >> (15 - (r * 4 + c))) & 1 == 1)
    }

    #[test]
    fn parse_direct_and_symmetry() {
        let t: CtmTable<f64> = parse_ctm("# demo\nblock_hex,ctm_bits\n000f,12.5\n").unwrap();
        assert_eq!(t.get(0x000f), Some(12.5));
        assert_eq!(t.get(0xfff0), Some(12.5));
        assert_eq!(t.len(), 2);
        // last row all ones
        let m = block_matrix(0x000f);
        assert_eq!(m.bits()[12..], [1, 1, 1, 1]);
        assert_eq!(m.bits()[..12], [0; 12]);

        let t: CtmTable<f64> = parse_ctm("0000,20\nffff,20\n").unwrap();
        assert_eq!(t.len(), 2);
        assert!(parse_ctm::<f64>("0000,20\nffff,21\n").is_err());
    }

    #[test]
    fn parse_errors() {
        assert!(parse_ctm::<f64>("0000,20\n0000,25\n").is_err());
        assert!(parse_ctm::<f64>("0000,20\n0000,20\n").is_ok());
        assert!(parse_ctm::<f64>("0000,inf\n").is_err());
        assert!(parse_ctm::<f64>("0000,NaN\n").is_err());
        assert!(parse_ctm::<f64>("0000,-1\n").is_err());
        assert!(parse_ctm::<f64>("zzzz,1\n").is_err());
        assert!(parse_ctm::<f64>("12345,1\n").is_err());
        assert!(parse_ctm::<f64>("# nothing\n").is_err());
    }

    #[test]
    fn fixtures_load() {
        let t: CtmTable<f64> = fixture_table();
        assert_eq!(t.len(), 16);
        let small: CtmTable<f64> = parse_ctm(include_str!("../fixtures/ctm_small.csv")).unwrap();
        assert!(small.len() >= 10);
        for (c, v) in t.iter() {
            assert_eq!(t.get(c ^ 0xffff), Some(v));
        }
    }

    #[test]
    fn decompose_examples() {
        let d = decompose(&BinaryMatrix::zeros(8, 8), DEFAULT_BLOCK).unwrap();
        assert_eq!(d, BTreeMap::from([(0, 4)]));
        let d = decompose(&BinaryMatrix::from_fn(4, 5, |_, c| c == 4), DEFAULT_BLOCK).unwrap();
        assert_eq!(d, BTreeMap::from([(0, 1)]));
        assert!(matches!(
            decompose(&BinaryMatrix::zeros(3, 8), DEFAULT_BLOCK),
            Err(BdmError::EmptyDecomposition { .. })
        ));

        let codes: Vec<u64> = (0..9).map(|k| 0x1111 * k + 7).collect();
        let x = BinaryMatrix::from_fn(12, 12, |r, c| {
            let code = codes[(r / 4) * 3 + c / 4];
            (code >> (15 - ((r % 4) * 4 + c % 4))) & 1 == 1
        });
        let d = decompose(&x, DEFAULT_BLOCK).unwrap();
        assert_eq!(d.len(), 9);
        assert!(d.values().all(|&m| m == 1));
        assert!(codes.iter().all(|c| d.contains_key(c)));
    }

    #[test]
    fn bdm_examples() {
        let t = table(&[(0x000f, 12.5), (0x0000, 10.0)]);
        let single = bdm(&block_matrix(0x000f), &t).unwrap();
        assert_eq!(single.total_bits, 12.5);
        assert_eq!(single.fallback_blocks, 0);

        let four = BinaryMatrix::from_fn(8, 8, |r, c| r % 4 == 3 && c < 8);
        assert_eq!(bdm(&four, &t).unwrap().total_bits, 14.5);

        let eight_ones = bdm(&block_matrix(0x00ff), &t).unwrap();
        assert_eq!(eight_ones.total_bits, 16.0);
        assert_eq!((eight_ones.blocks_used, eight_ones.fallback_blocks), (1, 1));

        assert_eq!(nbdm1(&block_matrix(0x000f), &t).unwrap(), 0.78125);
        assert_eq!(nbdm1(&BinaryMatrix::zeros(8, 8), &t).unwrap(), 12.0 / 64.0);
    }

    #[test]
    fn min_and_max() {
        let t: CtmTable<f64> = fixture_table();
        let zero = t.get(0).unwrap();
        assert_eq!(bdm_min((4, 4), &t).unwrap(), zero);
        assert_eq!(bdm_min((8, 8), &t).unwrap(), zero + 2.0);
        assert_eq!(bdm_min((4, 7), &t).unwrap(), zero);

        let ranked = t.ranked();
        assert_eq!(bdm_max((4, 4), &t).unwrap(), ranked[0].1);
        let total: f64 = t.iter().map(|(_, v)| v).sum();
        let tsize = t.len();
        // n = T: 4 x 16 blocks; n = 2T: 8 x 16 blocks
        assert!((bdm_max((4, 4 * tsize), &t).unwrap() - total).abs() < 1e-9);
        assert!((bdm_max((8, 4 * tsize), &t).unwrap() - (total + tsize as f64)).abs() < 1e-9);
    }

    #[test]
    fn nbdm2_endpoints() {
        let t: CtmTable<f64> = fixture_table();
        for shape in [(8, 8), (16, 64), (37, 41)] {
            assert_eq!(nbdm2(&BinaryMatrix::zeros(shape.0, shape.1), &t).unwrap(), 0.0);
            let m = max_object(shape, &t).unwrap();
            assert_eq!(nbdm2(&m, &t).unwrap(), 1.0);
        }
        let only_zero = table(&[(0x0000, 5.0)]);
        assert!(matches!(
            nbdm2(&BinaryMatrix::zeros(4, 4), &only_zero),
            Err(BdmError::DegenerateNormalization(_))
        ));
    }

    #[test]
    fn super_sample_examples() {
        let one = BinaryMatrix::new(1, 1, vec![1]).unwrap();
        assert_eq!(super_sample(&one, 4), BinaryMatrix::new(4, 4, vec![1; 16]).unwrap());
        let eye = BinaryMatrix::new(2, 2, vec![1, 0, 0, 1]).unwrap();
        let s = super_sample(&eye, 2);
        assert_eq!(
            s.bits(),
            &[1, 1, 0, 0, 1, 1, 0, 0, 0, 0, 1, 1, 0, 0, 1, 1]
        );
    }

    fn arb_matrix() -> impl Strategy<Value = BinaryMatrix> {
        (4usize..24, 4usize..24).prop_flat_map(|(r, c)| {
            proptest::collection::vec(0u8..=1, r * c)
                .prop_map(move |bits| BinaryMatrix::new(r, c, bits).unwrap())
        })
    }

    proptest! {
        #[test]
        fn complement_symmetric(x in arb_matrix()) {
            let t: CtmTable<f64> = fixture_table();
            let a = bdm(&x, &t).unwrap().total_bits;
            let b = bdm(&x.complement(), &t).unwrap().total_bits;
            prop_assert!((a - b).abs() < 1e-9);
        }

        #[test]
        fn fallback_bounded(x in arb_matrix()) {
            let v = bdm(&x, &fixture_table::<f64>()).unwrap();
            prop_assert!(v.fallback_blocks <= v.blocks_used);
        }

        #[test]
        fn super_sampled_bound(x in arb_matrix()) {
            let t: CtmTable<f64> = fixture_table();
            let s = super_sample(&x, 4);
            let blocks = (s.rows() / 4) * (s.cols() / 4);
            let zero = t.score(0).0;
            let ones = t.score(0xffff).0;
            let bound = zero + ones + 2.0 * (blocks as f64 / 2.0).log2() + 2.0;
            prop_assert!(bdm(&s, &t).unwrap().total_bits <= bound);
        }

        #[test]
        fn block_permutation_invariant(x in arb_matrix(), seed in 0u64..1000) {
            use rand::{SeedableRng, seq::SliceRandom};
            let t: CtmTable<f64> = fixture_table();
            let (br, bc) = (x.rows() / 4, x.cols() / 4);
            let mut order: Vec<usize> = (0..br * bc).collect();
            order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let y = BinaryMatrix::from_fn(x.rows(), x.cols(), |r, c| {
                if r >= br * 4 || c >= bc * 4 {
                    return x.get(r, c) == 1;
                }
                let src = order[(r / 4) * bc + c / 4];
                x.get((src / bc) * 4 + r % 4, (src % bc) * 4 + c % 4) == 1
            });
            prop_assert_eq!(bdm(&x, &t).unwrap(), bdm(&y, &t).unwrap());
        }
    }
}
