//! Regional complexity matrices and author fingerprints.
//!
//! An image is cut into an `R x C` grid of tiles, each tile is binarized and
//! compressed on its own, and the per-tile NC values form a complexity
//! matrix. Averaging the matrices of an author's images gives the author's
//! fingerprint; fingerprints are compared with the entrywise L1 distance.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::analysis::{AnalysisError, DistanceMatrix};
use crate::compress::{nc, Codec, CompressError};
use crate::imageio::{binarize, GrayImage};
use crate::meta::Metadata;
use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum FingerprintError {
    #[error("{height}x{width} image cannot be cut into a {rows}x{cols} grid")]
    GridTooFine { width: usize, height: usize, rows: usize, cols: usize },
    #[error("matrix shape mismatch: {0:?} vs {1:?}")]
    ShapeMismatch((usize, usize), (usize, usize)),
    #[error("no matrices to average")]
    EmptyInput,
    #[error("catalog: {0}")]
    Catalog(String),
    #[error("matrix csv: {0}")]
    Parse(String),
    #[error(transparent)]
    Compress(#[from] CompressError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// How tile boundaries are placed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TileMode {
    /// Tile `i` spans `[floor(i*H/R), floor((i+1)*H/R))`; sizes differ by at most one.
    EqualDivision,
    /// Tiles of `floor(H/R)`; the last row/column absorbs the remainder.
    FixedBlock,
}

impl FromStr for TileMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "equal" | "equal_division" | "equal-division" => Ok(TileMode::EqualDivision),
            "fixed" | "fixed_block" | "fixed-block" => Ok(TileMode::FixedBlock),
            other => Err(format!("unknown grid mode '{other}'")),
        }
    }
}

impl std::fmt::Display for TileMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TileMode::EqualDivision => "equal_division",
            TileMode::FixedBlock => "fixed_block",
        })
    }
}

/// `(start, len)` of each of `parts` segments covering `0..len`.
pub fn segments(len: usize, parts: usize, mode: TileMode) -> Vec<(usize, usize)> {
    assert!(parts > 0 && parts <= len);
    match mode {
        TileMode::EqualDivision => (0..parts)
            .map(|i| {
                let a = i * len / parts;
                let b = (i + 1) * len / parts;
                (a, b - a)
            })
            .collect(),
        TileMode::FixedBlock => {
            let size = len / parts;
            (0..parts)
                .map(|i| {
                    let start = i * size;
                    let end = if i + 1 == parts { len } else { start + size };
                    (start, end - start)
                })
                .collect()
        }
    }
}

/// Cuts an image into a row-major list of `grid.0 x grid.1` tiles.
pub fn tile(
    img: &GrayImage,
    grid: (usize, usize),
    mode: TileMode,
) -> Result<Vec<GrayImage>, FingerprintError> {
    let (rows, cols) = grid;
    if rows == 0 || cols == 0 || img.height() < rows || img.width() < cols {
        return Err(FingerprintError::GridTooFine {
            width: img.width(),
            height: img.height(),
            rows,
            cols,
        });
    }
    let ys = segments(img.height(), rows, mode);
    let xs = segments(img.width(), cols, mode);
    Ok(ys
        .iter()
        .flat_map(|&(top, h)| xs.iter().map(move |&(left, w)| img.crop(top, left, h, w)))
        .collect())
}

/// Grid of local complexity values with an identifying label.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexityMatrix<T> {
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub values: Vec<T>,
    pub label: String,
}

impl<T: Real> ComplexityMatrix<T> {
    pub fn new(
        label: impl Into<String>,
        grid_rows: usize,
        grid_cols: usize,
        values: Vec<T>,
    ) -> Result<Self, FingerprintError> {
        if values.len() != grid_rows * grid_cols || values.is_empty() {
            return Err(FingerprintError::Parse(format!(
                "{} values for a {grid_rows}x{grid_cols} grid",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(FingerprintError::Parse("non-finite value".into()));
        }
        Ok(ComplexityMatrix { grid_rows, grid_cols, values, label: label.into() })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.grid_rows, self.grid_cols)
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        self.values[row * self.grid_cols + col]
    }

    pub fn min_max(&self) -> (T, T) {
        self.values.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
    }

    /// Grid as CSV, one grid row per line.
    pub fn to_csv(&self, meta: &Metadata) -> String {
        let mut s = meta.line();
        for row in self.values.chunks(self.grid_cols) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        s
    }

    pub fn parse_csv(label: &str, text: &str) -> Result<Self, FingerprintError> {
        let mut values = Vec::new();
        let mut rows = 0;
        let mut cols = None;
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let row: Vec<T> = line
                .split(',')
                .map(|f| {
                    f.trim()
                        .parse::<f64>()
                        .ok()
                        .and_then(T::from_f64)
                        .ok_or_else(|| FingerprintError::Parse(format!("bad value '{f}'")))
                })
                .collect::<Result<_, _>>()?;
            if *cols.get_or_insert(row.len()) != row.len() {
                return Err(FingerprintError::Parse("ragged rows".into()));
            }
            values.extend(row);
            rows += 1;
        }
        ComplexityMatrix::new(label, rows, cols.unwrap_or(0), values)
    }

    /// SVG heat map colormapped over `[min, max]`; a constant matrix renders
    /// in a single color.
    pub fn to_svg(&self) -> String {
        const CELL: usize = 20;
        let (lo, hi) = self.min_max();
        let span = hi - lo;
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}">"#,
            self.grid_cols * CELL,
            self.grid_rows * CELL
        );
        let _ = writeln!(s, "<!-- {} -->", xml_escape(&self.label));
        for r in 0..self.grid_rows {
            for c in 0..self.grid_cols {
                let v = self.get(r, c);
                let t = if span > T::zero() { ((v - lo) / span).to_f64_lossy() } else { 0.0 };
                let _ = writeln!(
                    s,
                    r#"<rect x="{}" y="{}" width="{CELL}" height="{CELL}" fill="{}"><title>{v}</title></rect>"#,
                    c * CELL,
                    r * CELL,
                    colormap(t)
                );
            }
        }
        s.push_str("</svg>\n");
        s
    }
}

/// Linear ramp from dark purple (low) to yellow (high).
fn colormap(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", lerp(68.0, 253.0), lerp(1.0, 231.0), lerp(84.0, 37.0))
}

pub(crate) fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Writes `path` as SVG and a CSV twin next to it (`.csv` extension).
pub fn export_heatmap<T: Real>(
    m: &ComplexityMatrix<T>,
    path: impl AsRef<Path>,
    meta: &Metadata,
) -> Result<(), FingerprintError> {
    let path = path.as_ref();
    fs::write(path, m.to_svg())?;
    fs::write(path.with_extension("csv"), m.to_csv(meta))?;
    Ok(())
}

/// NC of every tile, each tile compressed as an independent object.
pub fn local_complexity<T: Real>(
    img: &GrayImage,
    grid: (usize, usize),
    mode: TileMode,
    codec: &dyn Codec,
    label: impl Into<String>,
) -> Result<ComplexityMatrix<T>, FingerprintError> {
    let tiles = tile(img, grid, mode)?;
    let values = tiles
        .par_iter()
        .map(|t| nc::<T>(&binarize(t), codec))
        .collect::<Result<Vec<T>, _>>()?;
    ComplexityMatrix::new(label, grid.0, grid.1, values)
}

/// Entrywise mean. Each entry is summed in sorted order, so the result does
/// not depend on the order of `images`.
pub fn author_fingerprint<T: Real>(
    label: impl Into<String>,
    images: &[ComplexityMatrix<T>],
) -> Result<ComplexityMatrix<T>, FingerprintError> {
    let first = images.first().ok_or(FingerprintError::EmptyInput)?;
    for m in images {
        if m.shape() != first.shape() {
            return Err(FingerprintError::ShapeMismatch(first.shape(), m.shape()));
        }
    }
    let n = T::from_count(images.len() as u64);
    let mut column = Vec::with_capacity(images.len());
    let values = (0..first.values.len())
        .map(|k| {
            column.clear();
            column.extend(images.iter().map(|m| m.values[k]));
            column.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
            column.iter().copied().sum::<T>() / n
        })
        .collect();
    ComplexityMatrix::new(label, first.grid_rows, first.grid_cols, values)
}

/// `sum_ij |a_ij - b_ij|`.
pub fn matrix_distance<T: Real>(
    a: &ComplexityMatrix<T>,
    b: &ComplexityMatrix<T>,
) -> Result<T, FingerprintError> {
    if a.shape() != b.shape() {
        return Err(FingerprintError::ShapeMismatch(a.shape(), b.shape()));
    }
    Ok(a.values.iter().zip(&b.values).map(|(&x, &y)| (x - y).abs()).sum())
}

/// Pairwise L1 distances, labeled by fingerprint labels.
pub fn distance_matrix<T: Real>(
    fingerprints: &[ComplexityMatrix<T>],
) -> Result<DistanceMatrix<T>, FingerprintError> {
    if fingerprints.len() < 2 {
        return Err(FingerprintError::Analysis(AnalysisError::TooFewLabels(fingerprints.len())));
    }
    let n = fingerprints.len();
    let mut d = vec![T::zero(); n * n];
    for i in 0..n {
        for j in i + 1..n {
            let v = matrix_distance(&fingerprints[i], &fingerprints[j])?;
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    let labels = fingerprints.iter().map(|f| f.label.clone()).collect();
    Ok(DistanceMatrix::new(labels, d)?)
}

/// Dataset manifest: images per author, optional style label per author.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AuthorCatalog {
    pub authors: BTreeMap<String, Vec<PathBuf>>,
    pub styles: BTreeMap<String, String>,
}

impl AuthorCatalog {
    /// Parses `author_id,image_path[,style_label]` lines. Relative paths are
    /// resolved against `base`. `#` comments and an `author_id,...` header
    /// are skipped.
    pub fn parse(text: &str, base: &Path) -> Result<Self, FingerprintError> {
        let mut cat = AuthorCatalog::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("author_id") {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() < 2 || fields.len() > 3 || fields[0].is_empty() || fields[1].is_empty() {
                return Err(FingerprintError::Catalog(format!(
                    "line {}: expected author_id,image_path[,style_label]",
                    lineno + 1
                )));
            }
            let author = fields[0].to_string();
            let path = Path::new(fields[1]);
            let path = if path.is_absolute() { path.to_path_buf() } else { base.join(path) };
            cat.authors.entry(author.clone()).or_default().push(path);
            if let Some(style) = fields.get(2).filter(|s| !s.is_empty()) {
                match cat.styles.get(&author) {
                    Some(prev) if prev != style => {
                        return Err(FingerprintError::Catalog(format!(
                            "author '{author}' has styles '{prev}' and '{style}'"
                        )));
                    }
                    _ => {
                        cat.styles.insert(author, style.to_string());
                    }
                }
            }
        }
        if cat.authors.is_empty() {
            return Err(FingerprintError::Catalog("no entries".into()));
        }
        Ok(cat)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, FingerprintError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        AuthorCatalog::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn image_count(&self) -> usize {
        self.authors.values().map(Vec::len).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compress::CmCodec;
    use proptest::prelude::*;

    fn cm(label: &str, r: usize, c: usize, v: Vec<f64>) -> ComplexityMatrix<f64> {
        ComplexityMatrix::new(label, r, c, v).unwrap()
    }

    #[test]
    fn equal_division_sizes() {
        let img = GrayImage::new(256, 256, 8, vec![0; 256 * 256]).unwrap();
        let tiles = tile(&img, (16, 16), TileMode::EqualDivision).unwrap();
        assert_eq!(tiles.len(), 256);
        assert!(tiles.iter().all(|t| t.width() == 16 && t.height() == 16));

        let heights: Vec<usize> =
            segments(10, 4, TileMode::EqualDivision).iter().map(|s| s.1).collect();
        assert_eq!(heights, vec![2, 3, 2, 3]);
    }

    #[test]
    fn fixed_block_sizes() {
        let segs = segments(100, 32, TileMode::FixedBlock);
        assert!(segs[..31].iter().all(|s| s.1 == 3));
        assert_eq!(segs[31], (93, 7));
        let img = GrayImage::new(100, 100, 8, vec![1; 10_000]).unwrap();
        let tiles = tile(&img, (32, 32), TileMode::FixedBlock).unwrap();
        assert_eq!(tiles.len(), 1024);
        assert_eq!((tiles[0].height(), tiles[0].width()), (3, 3));
        assert_eq!((tiles[31].height(), tiles[31].width()), (3, 7));
        assert_eq!((tiles[1023].height(), tiles[1023].width()), (7, 7));
    }

    #[test]
    fn grid_too_fine() {
        let img = GrayImage::new(3, 5, 8, vec![0; 15]).unwrap();
        assert!(matches!(
            tile(&img, (6, 2), TileMode::EqualDivision),
            Err(FingerprintError::GridTooFine { .. })
        ));
        assert!(tile(&img, (5, 3), TileMode::EqualDivision).is_ok());
    }

    #[test]
    fn tiles_cover_image() {
        let img = GrayImage::from_fn(23, 17, 8, |r, c| (r * 23 + c) as u8).unwrap();
        for mode in [TileMode::EqualDivision, TileMode::FixedBlock] {
            let tiles = tile(&img, (4, 5), mode).unwrap();
            let area: usize = tiles.iter().map(|t| t.width() * t.height()).sum();
            assert_eq!(area, 23 * 17);
            let mut sum: u64 = 0;
            for t in &tiles {
                sum += t.pixels().iter().map(|&p| p as u64).sum::<u64>();
            }
            assert_eq!(sum, img.pixels().iter().map(|&p| p as u64).sum::<u64>());
        }
    }

    #[test]
    fn local_complexity_behaviour() {
        let codec = CmCodec::new();
        let flat = GrayImage::new(512, 512, 8, vec![120; 512 * 512]).unwrap();
        let m: ComplexityMatrix<f64> =
            local_complexity(&flat, (16, 16), TileMode::EqualDivision, &codec, "flat").unwrap();
        let (lo, hi) = m.min_max();
        assert!(hi < 0.1, "{hi}");
        assert!(hi - lo <= 0.02);

        let mut state = 12345u32;
        let half = GrayImage::from_fn(128, 64, 8, |_, c| {
            if c < 64 {
                state = state.wrapping_mul(1_103_515_245).wrapping_add(12345);
                (state >> 16) as u8
            } else {
                30
            }
        })
        .unwrap();
        let m: ComplexityMatrix<f64> =
            local_complexity(&half, (1, 2), TileMode::EqualDivision, &codec, "half").unwrap();
        assert!(m.values[0] > 5.0 * m.values[1], "{:?}", m.values);

        let whole: f64 = nc(&binarize(&half), &codec).unwrap();
        let m: ComplexityMatrix<f64> =
            local_complexity(&half, (1, 1), TileMode::EqualDivision, &codec, "one").unwrap();
        assert_eq!(m.values, vec![whole]);
    }

    #[test]
    fn fingerprint_means() {
        let a = cm("a", 1, 1, vec![0.0]);
        let b = cm("b", 1, 1, vec![1.0]);
        assert_eq!(author_fingerprint("x", std::slice::from_ref(&a)).unwrap().values, a.values);
        assert_eq!(author_fingerprint("x", &[a.clone(), b.clone()]).unwrap().values, vec![0.5]);
        assert!(matches!(author_fingerprint::<f64>("x", &[]), Err(FingerprintError::EmptyInput)));
        let wide = cm("w", 1, 2, vec![0.0, 1.0]);
        assert!(matches!(
            author_fingerprint("x", &[a, wide]),
            Err(FingerprintError::ShapeMismatch(..))
        ));
    }

    #[test]
    fn distance_examples() {
        let a = cm("a", 1, 2, vec![0.0, 1.0]);
        let b = cm("b", 1, 2, vec![1.0, 0.0]);
        assert_eq!(matrix_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(matrix_distance(&a, &b).unwrap(), 2.0);
        let c = cm("c", 2, 1, vec![0.0, 1.0]);
        assert!(matrix_distance(&a, &c).is_err());

        let same = cm("a2", 1, 2, vec![0.0, 1.0]);
        let d = distance_matrix(&[a.clone(), same]).unwrap();
        assert_eq!(d.get(0, 1), 0.0);
        let c = cm("c", 1, 2, vec![0.5, 0.25]);
        let d = distance_matrix(&[a.clone(), b.clone(), c.clone()]).unwrap();
        assert_eq!(d.len(), 3);
        let fps = [a, b, c];
        for i in 0..3 {
            assert_eq!(d.get(i, i), 0.0);
            for j in 0..3 {
                assert_eq!(d.get(i, j), d.get(j, i));
                assert_eq!(d.get(i, j), matrix_distance(&fps[i], &fps[j]).unwrap());
            }
        }
    }

    #[test]
    fn heatmap_outputs() {
        let m = cm("m", 2, 2, vec![0.1, 0.2, 0.3, 0.4]);
        let svg = m.to_svg();
        assert_eq!(svg.matches("<rect").count(), 4);
        let back = ComplexityMatrix::<f64>::parse_csv("m", &m.to_csv(&Metadata::new())).unwrap();
        for (x, y) in back.values.iter().zip(&m.values) {
            assert!((x - y).abs() < 1e-9);
        }
        let flat = cm("f", 2, 3, vec![0.7; 6]);
        let svg = flat.to_svg();
        let fills: std::collections::HashSet<&str> =
            svg.match_indices("fill=\"").map(|(i, _)| &svg[i + 6..i + 13]).collect();
        assert_eq!(fills.len(), 1);

        let dir = tempfile::tempdir().unwrap();
        export_heatmap(&m, dir.path().join("m.svg"), &Metadata::new().with("grid", "2x2")).unwrap();
        let csv = fs::read_to_string(dir.path().join("m.csv")).unwrap();
        assert!(csv.starts_with("# grid=2x2\n"));
    }

    #[test]
    fn catalog_parsing() {
        let text = "author_id,image_path,style_label\n# c\na,x.pgm,Baroque\na,/abs/y.pgm\nb,z.pgm\n";
        let cat = AuthorCatalog::parse(text, Path::new("/data")).unwrap();
        assert_eq!(cat.authors["a"], vec![PathBuf::from("/data/x.pgm"), PathBuf::from("/abs/y.pgm")]);
        assert_eq!(cat.styles.get("a").map(String::as_str), Some("Baroque"));
        assert!(!cat.styles.contains_key("b"));
        assert_eq!(cat.image_count(), 3);
        assert!(AuthorCatalog::parse("a\n", Path::new(".")).is_err());
        assert!(AuthorCatalog::parse("a,x,S1\na,y,S2\n", Path::new(".")).is_err());
    }

    fn arb_triple() -> impl Strategy<Value = [Vec<f64>; 3]> {
        (1usize..20).prop_flat_map(|n| {
            let v = || proptest::collection::vec(0.0f64..2.0, n);
            (v(), v(), v()).prop_map(|(a, b, c)| [a, b, c])
        })
    }

    proptest! {
        #[test]
        fn l1_metric(t in arb_triple()) {
            let n = t[0].len();
            let [a, b, c] = t.map(|v| cm("m", 1, n, v));
            let ab = matrix_distance(&a, &b).unwrap();
            let bc = matrix_distance(&b, &c).unwrap();
            let ac = matrix_distance(&a, &c).unwrap();
            prop_assert!(ab >= 0.0);
            prop_assert_eq!(ab, matrix_distance(&b, &a).unwrap());
            prop_assert!(ac <= ab + bc + 1e-12);
        }

        #[test]
        fn mean_order_and_duplication(t in arb_triple()) {
            let n = t[0].len();
            let ms: Vec<_> = t.iter().map(|v| cm("m", 1, n, v.clone())).collect();
            let base = author_fingerprint("f", &ms).unwrap();
            let rev: Vec<_> = ms.iter().rev().cloned().collect();
            prop_assert_eq!(&author_fingerprint("f", &rev).unwrap(), &base);
            let doubled: Vec<_> = ms.iter().chain(ms.iter()).cloned().collect();
            let d = author_fingerprint("f", &doubled).unwrap();
            for (x, y) in d.values.iter().zip(&base.values) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn equal_division_balanced(len in 1usize..400, parts in 1usize..40) {
            prop_assume!(parts <= len);
            let segs = segments(len, parts, TileMode::EqualDivision);
            let sizes: Vec<usize> = segs.iter().map(|s| s.1).collect();
            let lo = *sizes.iter().min().unwrap();
            let hi = *sizes.iter().max().unwrap();
            prop_assert!(hi - lo <= 1);
            prop_assert_eq!(sizes.iter().sum::<usize>(), len);
        }
    }
}
