//! Command implementations. Every data file starts with the run metadata line.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use artinfo::analysis::experiments::{
    comparison_csv, dataset_comparison, pixel_edition_sweep, supersample_csv, supersample_experiment,
    sweep_csv,
};
use artinfo::analysis::{export_dot, export_newick, kruskal_mst, mantel, upgma};
use artinfo::bdm::{fixture_table, load_ctm};
use artinfo::compress::{benchmark, ExternalCodec, ExternalCodecSpec};
use artinfo::fingerprint::{author_fingerprint, distance_matrix, export_heatmap, local_complexity};
use artinfo::hdc::image_alpha;
use artinfo::imageio::{binarize, load_image, save_pgm};
use artinfo::synth::{self, CaStart, Style};
use artinfo::{
    nc, AuthorCatalog, Codec, CodecRegistry, ComplexityMatrix, CtmTable, DistanceMatrix, GrayImage,
    MeasureKind, Measurer, Metadata, Pipeline,
};
use log::{info, warn};
use rayon::prelude::*;

use crate::cache::{CachedCodec, ResultCache};
use crate::config::RunConfig;
use crate::style::{mean_std, style_ellipses, ArtistPoint};
use crate::svg;
use crate::UsageError;

/// Resolved configuration plus the shared resources of a run.
pub struct Env {
    pub config: RunConfig,
    pub registry: CodecRegistry,
    pub cache: Option<Arc<ResultCache>>,
    pub table: CtmTable<f64>,
}

impl Env {
    pub fn new(config: RunConfig, cache: Option<ResultCache>) -> Result<Self> {
        let mut registry = CodecRegistry::with_defaults();
        for (name, template) in &config.codecs {
            let spec = ExternalCodecSpec::new(name.as_str(), template.as_str())
                .map_err(|e| UsageError(e.to_string()))?;
            registry.replace(Arc::new(ExternalCodec::new(spec)));
        }
        let table = match &config.ctm {
            Some(path) => {
                load_ctm(path).with_context(|| format!("loading CTM table {}", path.display()))?
            }
            None => {
                log::warn!("no --ctm table given; block measures use the small built-in table");
                fixture_table()
            }
        };
        Ok(Env { config, registry, cache: cache.map(Arc::new), table })
    }

    /// The configured codec, wrapped by the cache when one is open.
    pub fn codec(&self) -> Result<Arc<dyn Codec>> {
        let codec = self.registry.get(&self.config.codec).map_err(|e| UsageError(e.to_string()))?;
        if !codec.is_available() {
            bail!("codec '{}' is not available on this host", self.config.codec);
        }
        Ok(match &self.cache {
            Some(cache) => Arc::new(CachedCodec::new(codec, cache.clone())),
            None => codec,
        })
    }

    pub fn meta(&self) -> Metadata {
        let c = &self.config;
        Metadata::new()
            .with("seed", c.seed)
            .with("codec", &c.codec)
            .with("grid", c.grid_label())
            .with("grid_mode", c.tile_mode())
            .with("levels", c.levels)
            .with("trim", c.trim.map_or("off".to_string(), |t| t.to_string()))
            .with("table", self.table.digest())
    }

    pub fn pipeline(&self) -> Pipeline {
        Pipeline::new(self.config.levels).with_trim(self.config.trim)
    }

    fn out_dir(&self, sub: Option<&str>) -> Result<PathBuf> {
        let dir = match sub {
            Some(s) => self.config.out.join(s),
            None => self.config.out.clone(),
        };
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(dir)
    }
}

fn write(dir: &Path, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    info!("wrote {}", path.display());
    Ok(path)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Empty for NaN, the shortest round-trip form otherwise.
fn num(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        v.to_string()
    }
}

/// File-name-safe form of a label.
pub fn safe_name(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' }).collect()
}

struct Job {
    author: String,
    image: String,
    path: PathBuf,
}

struct Failure {
    author: String,
    image: String,
    error: String,
}

fn catalog_jobs(cat: &AuthorCatalog) -> Vec<Job> {
    cat.authors
        .iter()
        .flat_map(|(author, paths)| {
            paths.iter().map(move |p| Job {
                author: author.clone(),
                image: p.file_name().map_or_else(|| p.display().to_string(), |f| f.to_string_lossy().into_owned()),
                path: p.clone(),
            })
        })
        .collect()
}

/// Runs `f` on every prepared catalog image in parallel; failures are
/// logged and returned separately, both lists in catalog order.
fn over_images<R: Send>(
    env: &Env,
    cat: &AuthorCatalog,
    f: impl Fn(&GrayImage) -> Result<R> + Sync,
) -> (Vec<(String, String, R)>, Vec<Failure>) {
    let pipeline = env.pipeline();
    let results: Vec<(Job, Result<R>)> = catalog_jobs(cat)
        .into_par_iter()
        .map(|job| {
            let r = pipeline
                .load(&job.path)
                .with_context(|| job.path.display().to_string())
                .and_then(|img| f(&img));
            (job, r)
        })
        .collect();
    let mut ok = Vec::new();
    let mut failed = Vec::new();
    for (job, r) in results {
        match r {
            Ok(v) => ok.push((job.author, job.image, v)),
            Err(e) => {
                warn!("skipping {}: {e:#}", job.path.display());
                failed.push(Failure { author: job.author, image: job.image, error: format!("{e:#}") });
            }
        }
    }
    (ok, failed)
}

fn errors_csv(failed: &[Failure], meta: &Metadata) -> String {
    let mut s = meta.line();
    s.push_str("author,image,error\n");
    for f in failed {
        let _ = writeln!(s, "{},{},{}", csv_field(&f.author), csv_field(&f.image), csv_field(&f.error));
    }
    s
}

fn load_catalog(path: &Path) -> Result<AuthorCatalog> {
    AuthorCatalog::load(path).with_context(|| format!("loading manifest {}", path.display()))
}

/// Per-image NC, NBDM1, NBDM2 and alpha, plus per-author summaries ranked by mean NC.
pub fn cmd_measure(env: &Env, manifest: &Path) -> Result<Vec<PathBuf>> {
    let cat = load_catalog(manifest)?;
    let codec = env.codec()?;
    let measurer = Measurer::new(codec.as_ref(), &env.table);
    let (rows, failed) = over_images(env, &cat, |img| {
        Ok(measurer.image_measures(img, Some(env.config.r_initial), env.config.r_final)?)
    });
    let meta = env.meta();
    let dir = env.out_dir(None)?;

    let mut s = meta.line();
    s.push_str("author,image,nc,nbdm1,nbdm2,alpha\n");
    for (author, image, m) in &rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            csv_field(author),
            csv_field(image),
            m.nc,
            m.nbdm1,
            m.nbdm2,
            m.alpha.map_or(String::new(), |a| a.to_string())
        );
    }
    let mut out = vec![write(&dir, "measures.csv", s)?];

    let mut per_author: BTreeMap<&str, Vec<&artinfo::pipeline::ImageMeasures<f64>>> = BTreeMap::new();
    for (author, _, m) in &rows {
        per_author.entry(author).or_default().push(m);
    }
    let mut summary: Vec<(&str, usize, [(f64, f64); 4])> = per_author
        .iter()
        .map(|(author, ms)| {
            let col = |f: &dyn Fn(&artinfo::pipeline::ImageMeasures<f64>) -> Option<f64>| {
                mean_std(&ms.iter().filter_map(|m| f(m)).collect::<Vec<_>>())
            };
            let stats = [
                col(&|m| Some(m.nc)),
                col(&|m| Some(m.nbdm1)),
                col(&|m| Some(m.nbdm2)),
                col(&|m| m.alpha),
            ];
            (*author, ms.len(), stats)
        })
        .collect();
    // stable: equal means keep author-name order
    summary.sort_by(|a, b| a.2[0].0.total_cmp(&b.2[0].0));
    let mut s = meta.line();
    s.push_str("rank,author,n_images,nc_mean,nc_std,nbdm1_mean,nbdm1_std,nbdm2_mean,nbdm2_std,alpha_mean,alpha_std\n");
    for (rank, (author, n, stats)) in summary.iter().enumerate() {
        let _ = write!(s, "{},{},{}", rank + 1, csv_field(author), n);
        for (mean, std) in stats {
            let _ = write!(s, ",{},{}", num(*mean), num(*std));
        }
        s.push('\n');
    }
    out.push(write(&dir, "authors.csv", s)?);
    out.push(write(&dir, "errors.csv", errors_csv(&failed, &meta))?);
    Ok(out)
}

fn write_trees(dir: &Path, d: &DistanceMatrix<f64>, meta: &Metadata) -> Result<Vec<PathBuf>> {
    let tree = upgma(d)?;
    let mst = kruskal_mst(d)?;
    Ok(vec![
        write(dir, "upgma.nwk", format!("[{}]\n{}\n", meta.line().trim_start_matches('#').trim(), export_newick(&tree)))?,
        write(dir, "mst.dot", export_dot(&mst, meta))?,
    ])
}

/// Author fingerprints, their distance matrix, UPGMA tree and MST. Output
/// goes to `fingerprint_<R>x<C>/` under the output directory.
pub fn cmd_fingerprint(env: &Env, manifest: &Path) -> Result<PathBuf> {
    let cat = load_catalog(manifest)?;
    let codec = env.codec()?;
    let (grid, mode) = (env.config.grid, env.config.tile_mode());
    let (rows, failed) = over_images(env, &cat, |img| {
        Ok(local_complexity::<f64>(img, grid, mode, codec.as_ref(), "")?)
    });
    let meta = env.meta();
    let dir = env.out_dir(Some(&format!("fingerprint_{}", env.config.grid_label())))?;

    let mut per_author: BTreeMap<String, Vec<ComplexityMatrix<f64>>> = BTreeMap::new();
    for (author, _, m) in rows {
        per_author.entry(author).or_default().push(m);
    }
    let mut fingerprints = Vec::new();
    for (author, ms) in &per_author {
        let fp = author_fingerprint(author.as_str(), ms)?;
        export_heatmap(&fp, dir.join(format!("{}.svg", safe_name(author))), &meta)?;
        fingerprints.push(fp);
    }
    write(&dir, "errors.csv", errors_csv(&failed, &meta))?;
    if fingerprints.len() < 2 {
        warn!("{} author(s) with usable images; no distance matrix or trees", fingerprints.len());
        return Ok(dir);
    }
    let d = distance_matrix(&fingerprints)?;
    write(&dir, "distances.csv", d.to_csv(&meta))?;
    write_trees(&dir, &d, &meta)?;
    Ok(dir)
}

/// Per-artist mean NC and alpha, per-style ellipses and a scatter plot.
pub fn cmd_style_scatter(env: &Env, manifest: &Path) -> Result<Vec<PathBuf>> {
    let cat = load_catalog(manifest)?;
    let codec = env.codec()?;
    let (r_initial, r_final) = (env.config.r_initial, env.config.r_final);
    let (rows, failed) = over_images(env, &cat, |img| {
        let v: f64 = nc(&binarize(img), codec.as_ref())?;
        Ok((v, image_alpha::<f64>(img, r_initial, r_final).ok()))
    });
    let mut per_author: BTreeMap<&str, Vec<(f64, Option<f64>)>> = BTreeMap::new();
    for (author, _, v) in &rows {
        per_author.entry(author).or_default().push(*v);
    }
    let mut points = Vec::new();
    for (author, vals) in per_author {
        let Some(style) = cat.styles.get(author) else {
            warn!("author '{author}' has no style label; excluded");
            continue;
        };
        let alphas: Vec<f64> = vals.iter().filter_map(|v| v.1).collect();
        if alphas.is_empty() {
            warn!("author '{author}' has no image with a defined alpha; excluded");
            continue;
        }
        let ncs: Vec<f64> = vals.iter().map(|v| v.0).collect();
        points.push(ArtistPoint {
            author: author.to_string(),
            style: style.clone(),
            nc: mean_std(&ncs).0,
            alpha: mean_std(&alphas).0,
        });
    }
    if points.is_empty() {
        warn!("no labeled artists; writing empty outputs");
    }
    let ellipses = style_ellipses(&points);
    let meta = env.meta();
    let dir = env.out_dir(None)?;

    let mut s = meta.line();
    s.push_str("author,style,nc_mean,alpha_mean\n");
    for p in &points {
        let _ = writeln!(s, "{},{},{},{}", csv_field(&p.author), csv_field(&p.style), p.nc, p.alpha);
    }
    let mut out = vec![write(&dir, "style_artists.csv", s)?];
    let mut s = meta.line();
    s.push_str("style,n_artists,nc_center,alpha_center,nc_std,alpha_std\n");
    for e in &ellipses {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            csv_field(&e.style),
            e.n_artists,
            e.nc_center,
            e.alpha_center,
            e.nc_std,
            e.alpha_std
        );
    }
    out.push(write(&dir, "style_ellipses.csv", s)?);

    let groups: Vec<String> = ellipses.iter().map(|e| e.style.clone()).collect();
    let group_of = |style: &str| groups.iter().position(|g| g == style).unwrap_or(0);
    let pts: Vec<svg::Point> = points
        .iter()
        .map(|p| svg::Point { x: p.nc, y: p.alpha, label: p.author.clone(), group: group_of(&p.style) })
        .collect();
    let els: Vec<svg::Ellipse> = ellipses
        .iter()
        .map(|e| svg::Ellipse {
            cx: e.nc_center,
            cy: e.alpha_center,
            rx: e.nc_std,
            ry: e.alpha_std,
            group: group_of(&e.style),
        })
        .collect();
    out.push(write(&dir, "style_scatter.svg", svg::scatter("Styles", "mean NC", "mean alpha", &groups, &pts, &els))?);
    out.push(write(&dir, "style_errors.csv", errors_csv(&failed, &meta))?);
    Ok(out)
}

/// UPGMA tree and MST of a distance matrix CSV.
pub fn cmd_tree(env: &Env, distances: &Path) -> Result<Vec<PathBuf>> {
    let text = fs::read_to_string(distances).with_context(|| format!("reading {}", distances.display()))?;
    let d = DistanceMatrix::<f64>::parse_csv(&text).with_context(|| distances.display().to_string())?;
    write_trees(&env.out_dir(None)?, &d, &env.meta())
}

/// Compresses every file with every selected codec.
pub fn cmd_benchmark(env: &Env, files: &[PathBuf], codecs: Option<&[String]>) -> Result<Vec<PathBuf>> {
    let names: Vec<String> = match codecs {
        Some(list) => list.to_vec(),
        None => env.registry.names().map(String::from).collect(),
    };
    let selected = names
        .iter()
        .map(|n| env.registry.get(n).map_err(|e| UsageError(e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    let report = benchmark(files, &selected)?;
    for name in report.unavailable() {
        warn!("codec '{name}' is not installed; skipped");
    }
    let dir = env.out_dir(None)?;
    let meta = env.meta();
    let bars: Vec<(String, f64)> =
        report.totals().into_iter().map(|(c, i, o, _)| (c, o as f64 / i.max(1) as f64)).collect();
    Ok(vec![
        write(&dir, "benchmark.csv", format!("{}{}", meta.line(), report.to_csv()))?,
        write(&dir, "benchmark.svg", svg::bars("Compressed / original size", "ratio", &bars))?,
    ])
}

/// Measures of progressively edited copies of one image (a built-in test
/// card when `image` is `None`).
pub fn cmd_pixel_edition(
    env: &Env,
    image: Option<&Path>,
    rates: &[f64],
    measures: &[MeasureKind],
) -> Result<Vec<PathBuf>> {
    let img = match image {
        Some(p) => env.pipeline().prepare(&load_image(p).with_context(|| p.display().to_string())?)?,
        None => synth::structured_image(256),
    };
    let codec = env.codec()?;
    let measurer = Measurer::new(codec.as_ref(), &env.table);
    let rows = pixel_edition_sweep(&img, rates, env.config.seed, measures, &measurer)?;
    let series: Vec<(String, Vec<(f64, f64)>)> = measures
        .iter()
        .map(|&m| (m.to_string(), rows.iter().filter(|r| r.measure == m).map(|r| (r.rate, r.value)).collect()))
        .collect();
    let dir = env.out_dir(None)?;
    Ok(vec![
        write(&dir, "pixel_edition.csv", sweep_csv(&rows, &env.meta()))?,
        write(&dir, "pixel_edition.svg", svg::lines("Pixel edition", "edition rate (%)", "value", &series))?,
    ])
}

/// Per-image measures over several datasets.
pub fn cmd_datasets(env: &Env, datasets: &[(String, PathBuf)], measures: &[MeasureKind]) -> Result<Vec<PathBuf>> {
    let cats = datasets
        .iter()
        .map(|(name, path)| Ok((name.clone(), load_catalog(path)?)))
        .collect::<Result<Vec<_>>>()?;
    let codec = env.codec()?;
    let measurer = Measurer::new(codec.as_ref(), &env.table);
    let rows = dataset_comparison(&cats, measures, &measurer, &env.pipeline())?;
    let groups: Vec<String> = cats.iter().map(|c| c.0.clone()).collect();
    let points: Vec<svg::Point> = rows
        .iter()
        .map(|r| svg::Point {
            x: r.values.first().copied().unwrap_or(f64::NAN),
            y: r.values.get(1).copied().unwrap_or(0.0),
            label: String::new(),
            group: groups.iter().position(|g| *g == r.dataset).unwrap_or(0),
        })
        .collect();
    let label = |i: usize| measures.get(i).map_or(String::new(), |m| m.to_string());
    let dir = env.out_dir(None)?;
    Ok(vec![
        write(&dir, "datasets.csv", comparison_csv(&rows, measures, &env.meta()))?,
        write(&dir, "datasets.svg", svg::scatter("Datasets", &label(0), &label(1), &groups, &points, &[]))?,
    ])
}

/// BDM before and after super-sampling random binary matrices.
pub fn cmd_supersample(env: &Env, count: usize, size: usize, factor: usize) -> Result<Vec<PathBuf>> {
    if factor == 0 || size == 0 {
        return Err(UsageError("size and factor must be positive".into()).into());
    }
    let xs: Vec<_> =
        (0..count as u64).map(|i| synth::random_binary(size, size, env.config.seed.wrapping_add(i))).collect();
    let rows = supersample_experiment(&xs, factor, &env.table)?;
    let bars: Vec<(String, f64)> = rows.iter().map(|r| (r.index.to_string(), r.ratio)).collect();
    let dir = env.out_dir(None)?;
    Ok(vec![
        write(&dir, "supersample.csv", supersample_csv(&rows, &env.meta()))?,
        write(&dir, "supersample.svg", svg::bars("BDM(super-sampled) / BDM(original)", "ratio", &bars))?,
    ])
}

/// Mantel test between two distance matrix CSVs with identical labels.
pub fn cmd_mantel(env: &Env, a: &Path, b: &Path, permutations: usize) -> Result<(f64, f64, PathBuf)> {
    let read = |p: &Path| -> Result<DistanceMatrix<f64>> {
        let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        DistanceMatrix::parse_csv(&text).with_context(|| p.display().to_string())
    };
    let res = mantel(&read(a)?, &read(b)?, permutations, env.config.seed)?;
    let mut s = env.meta().line();
    s.push_str("r,p,permutations\n");
    let _ = writeln!(s, "{},{},{}", res.r, res.p, res.permutations);
    let path = write(&env.out_dir(None)?, "mantel.csv", s)?;
    Ok((res.r, res.p, path))
}

/// Synthetic authors in the corpus: (name, style).
pub const SYNTH_AUTHORS: [(&str, Style); 6] = [
    ("smooth-1", Style::Smooth),
    ("smooth-2", Style::Smooth),
    ("textured-1", Style::Textured),
    ("textured-2", Style::Textured),
    ("chiaroscuro-1", Style::Chiaroscuro),
    ("geometric-1", Style::Geometric),
];

pub const CA_RULES: [u8; 12] = [18, 22, 30, 45, 54, 60, 73, 90, 105, 110, 126, 150];

/// Writes the synthetic corpus: painter-like authors with a manifest, a
/// cellular-automaton dataset with its own manifest, and a test card.
pub fn cmd_synth(dir: &Path, size: usize, per_author: usize, seed: u64) -> Result<Vec<PathBuf>> {
    if size < 8 || per_author == 0 {
        return Err(UsageError("size must be at least 8 and images per author positive".into()).into());
    }
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut manifest = String::from("author_id,image_path,style_label\n");
    for (a, (author, style)) in SYNTH_AUTHORS.iter().enumerate() {
        fs::create_dir_all(dir.join(author))?;
        for k in 0..per_author {
            let rel = format!("{author}/{k:02}.pgm");
            let img_seed = seed.wrapping_mul(1_000_003).wrapping_add((a * 1000 + k) as u64);
            save_pgm(&synth::painting(*style, size, img_seed), dir.join(&rel))?;
            let _ = writeln!(manifest, "{author},{rel},{}", style.name());
        }
    }
    let mut out = vec![write(dir, "manifest.csv", manifest)?];

    fs::create_dir_all(dir.join("ca"))?;
    let mut ca = String::from("author_id,image_path\n");
    for rule in CA_RULES {
        let rel = format!("ca/rule{rule:03}.pgm");
        save_pgm(&synth::to_image(&synth::elementary_ca(rule, size, size, CaStart::SingleCell)), dir.join(&rel))?;
        let _ = writeln!(ca, "rule{rule:03},{rel}");
    }
    out.push(write(dir, "ca_manifest.csv", ca)?);
    save_pgm(&synth::structured_image(2 * size), dir.join("structured.pgm"))?;
    out.push(dir.join("structured.pgm"));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quoting_and_names() {
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
        assert_eq!(csv_field("plain"), "plain");
        assert_eq!(safe_name("Van Gogh/1"), "Van_Gogh_1");
        assert_eq!(num(f64::NAN), "");
        assert_eq!(num(0.5), "0.5");
    }
}
