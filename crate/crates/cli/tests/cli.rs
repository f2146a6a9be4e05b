use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::Arc;
use std::time::Instant;

use artinfo::imageio::save_pgm;
use artinfo::synth::{painting, random_binary, Style};
use artinfo::{CmCodec, Codec, GrayImage};
use artinfo_cli::cache::{CachedCodec, ResultCache};

fn artinfo(args: &[&str], cache: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_artinfo"));
    cmd.args(args).env("RUST_LOG", "error");
    match cache {
        Some(dir) => cmd.env("ARTINFO_CACHE_DIR", dir),
        None => cmd.env_remove("ARTINFO_CACHE_DIR"),
    };
    cmd.output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = artinfo(args, None);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/corpus")
}

/// Writes `author -> images` as PGMs plus a manifest; returns the manifest path.
fn catalog(dir: &Path, authors: &[(&str, Option<&str>, Vec<GrayImage>)]) -> PathBuf {
    let mut manifest = String::from("author_id,image_path,style_label\n");
    for (author, style, images) in authors {
        for (k, img) in images.iter().enumerate() {
            let rel = format!("{author}_{k}.pgm");
            save_pgm(img, dir.join(&rel)).unwrap();
            manifest.push_str(&format!("{author},{rel},{}\n", style.unwrap_or("")));
        }
    }
    let path = dir.join("manifest.csv");
    fs::write(&path, manifest).unwrap();
    path
}

fn read(p: impl AsRef<Path>) -> String {
    fs::read_to_string(p.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", p.as_ref().display()))
}

/// Non-comment rows after the header.
fn data_rows(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).skip(1).collect()
}

fn files(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = corpus().join("manifest.csv");
    assert_eq!(artinfo(&["--help"], None).status.code(), Some(0));
    assert_eq!(artinfo(&["--version"], None).status.code(), Some(0));
    assert_eq!(artinfo(&["frobnicate"], None).status.code(), Some(1));
    assert_eq!(artinfo(&["--levels", "3", "measure", s(&manifest)], None).status.code(), Some(1));
    assert_eq!(artinfo(&["--grid", "4by4", "fingerprint", s(&manifest)], None).status.code(), Some(1));
    assert_eq!(artinfo(&["--codec", "nope", "--out", s(tmp.path()), "measure", s(&manifest)], None).status.code(), Some(1));
    let missing = tmp.path().join("missing.csv");
    assert_eq!(artinfo(&["--out", s(tmp.path()), "measure", s(&missing)], None).status.code(), Some(2));
}

#[test]
fn every_output_carries_run_metadata() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path();
    let manifest = corpus().join("manifest.csv");
    ok(&["--seed", "3", "--out", s(out), "measure", s(&manifest)]);
    ok(&["--seed", "3", "--out", s(out), "fingerprint", s(&manifest)]);
    let mut checked = 0;
    for (rel, bytes) in files(out) {
        let first = String::from_utf8(bytes).unwrap().lines().next().unwrap_or("").to_string();
        let prefix = match rel.extension().and_then(|e| e.to_str()) {
            Some("csv") => "# ",
            Some("nwk") => "[",
            Some("dot") => "// ",
            _ => continue,
        };
        assert!(first.starts_with(prefix) && first.contains("seed=3"), "{}: {first}", rel.display());
        checked += 1;
    }
    assert!(checked >= 10);
}

#[test]
fn two_author_catalog() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = catalog(
        tmp.path(),
        &[
            ("alice", None, vec![painting(Style::Smooth, 48, 1), painting(Style::Smooth, 48, 2)]),
            ("bob", None, vec![painting(Style::Textured, 48, 3)]),
        ],
    );
    let out = tmp.path().join("out");
    ok(&["--grid", "4x4", "--out", s(&out), "fingerprint", s(&manifest)]);
    let dir = out.join("fingerprint_4x4");
    let distances = read(dir.join("distances.csv"));
    assert_eq!(data_rows(&distances).len(), 2);
    let d: f64 = data_rows(&distances)[0].split(',').nth(2).unwrap().parse().unwrap();
    assert!(d > 0.0);
    let heat = read(dir.join("alice.csv"));
    assert_eq!(data_rows(&heat).len() + 1, 4, "4 grid rows");
    assert!(dir.join("alice.svg").exists() && dir.join("bob.svg").exists());
    assert_eq!(read(dir.join("mst.dot")).matches(" -- ").count(), 1);
    let nwk = read(dir.join("upgma.nwk"));
    assert!(nwk.contains("alice") && nwk.contains("bob"));
}

#[test]
fn identical_authors_are_at_distance_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let imgs = vec![painting(Style::Geometric, 40, 9)];
    let manifest = catalog(tmp.path(), &[("a", None, imgs.clone()), ("b", None, imgs)]);
    let out = tmp.path().join("out");
    ok(&["--grid", "2x2", "--out", s(&out), "fingerprint", s(&manifest)]);
    let dir = out.join("fingerprint_2x2");
    let distances = read(dir.join("distances.csv"));
    assert_eq!(data_rows(&distances)[0], "a,0,0");
    let nwk = read(dir.join("upgma.nwk"));
    let tree = artinfo::analysis::parse_newick(&nwk).unwrap();
    assert!(tree.children.iter().all(|c| c.length == Some(0.0)), "{nwk}");
}

#[test]
fn grid_override_names_the_output_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = corpus().join("manifest.csv");
    ok(&["--grid", "8x8", "--out", s(tmp.path()), "fingerprint", s(&manifest)]);
    ok(&["--grid", "3x5", "--out", s(tmp.path()), "fingerprint", s(&manifest)]);
    assert!(tmp.path().join("fingerprint_8x8/distances.csv").exists());
    let heat = read(tmp.path().join("fingerprint_3x5/smooth-1.csv"));
    let rows = data_rows(&heat);
    assert_eq!(rows.len() + 1, 3);
    assert_eq!(rows[0].split(',').count(), 5);
}

#[test]
fn measure_output_shape() {
    let tmp = tempfile::tempdir().unwrap();
    let flat = GrayImage::new(32, 32, 8, vec![0; 1024]).unwrap();
    let manifest = catalog(tmp.path(), &[("flat", None, vec![flat.clone(), flat]), ("art", None, vec![painting(Style::Chiaroscuro, 48, 4)])]);
    let out = tmp.path().join("out");
    ok(&["--out", s(&out), "measure", s(&manifest)]);
    let measures = read(out.join("measures.csv"));
    assert!(measures.lines().nth(1).unwrap().starts_with("author,image,nc,nbdm1,nbdm2,alpha"));
    let rows = data_rows(&measures);
    assert_eq!(rows.len(), 3);
    let flat_row: Vec<&str> = rows.iter().find(|r| r.starts_with("flat,")).unwrap().split(',').collect();
    assert_eq!(flat_row[4], "0");
    assert_eq!(flat_row[5], "", "no slope on a flat image");
    let authors = read(out.join("authors.csv"));
    let ranked: Vec<&str> = data_rows(&authors).iter().map(|r| r.split(',').nth(1).unwrap()).collect();
    assert_eq!(ranked, ["flat", "art"]);
    assert!(data_rows(&read(out.join("errors.csv"))).is_empty());
}

#[test]
fn unreadable_images_are_reported_not_fatal() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = catalog(tmp.path(), &[("a", None, vec![painting(Style::Smooth, 32, 1)])]);
    fs::write(tmp.path().join("broken.pgm"), b"P5\n9 9\n255\nxx").unwrap();
    let mut text = read(&manifest);
    text.push_str("a,broken.pgm,\n");
    fs::write(&manifest, text).unwrap();
    let out = tmp.path().join("out");
    ok(&["--out", s(&out), "measure", s(&manifest)]);
    assert_eq!(data_rows(&read(out.join("measures.csv"))).len(), 1);
    let errors = read(out.join("errors.csv"));
    assert_eq!(data_rows(&errors).len(), 1);
    assert!(errors.contains("broken.pgm"));
}

#[test]
fn style_scatter_without_labels_writes_empty_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = catalog(tmp.path(), &[("a", None, vec![painting(Style::Smooth, 48, 1)])]);
    let out = tmp.path().join("out");
    ok(&["--out", s(&out), "style-scatter", s(&manifest)]);
    assert!(data_rows(&read(out.join("style_artists.csv"))).is_empty());
    assert!(data_rows(&read(out.join("style_ellipses.csv"))).is_empty());
    assert!(out.join("style_scatter.svg").exists());
}

#[test]
fn style_scatter_groups_by_label() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = corpus().join("manifest.csv");
    ok(&["--out", s(tmp.path()), "style-scatter", s(&manifest)]);
    let ellipses = read(tmp.path().join("style_ellipses.csv"));
    assert_eq!(data_rows(&ellipses).len(), 4);
    assert_eq!(data_rows(&read(tmp.path().join("style_artists.csv"))).len(), 6);
}

#[test]
fn runs_are_deterministic_and_tree_rereads_distances() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = corpus().join("manifest.csv");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        ok(&["--jobs", "2", "--out", s(dir), "fingerprint", s(&manifest)]);
    }
    assert_eq!(files(&a), files(&b));
    let fp = a.join("fingerprint_16x16");
    let c = tmp.path().join("c");
    ok(&["--out", s(&c), "tree", s(&fp.join("distances.csv"))]);
    assert_eq!(read(c.join("upgma.nwk")), read(fp.join("upgma.nwk")));
    assert_eq!(read(c.join("mst.dot")), read(fp.join("mst.dot")));
}

#[test]
fn mantel_of_a_matrix_with_itself() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = corpus().join("manifest.csv");
    ok(&["--out", s(tmp.path()), "fingerprint", s(&manifest)]);
    let d = tmp.path().join("fingerprint_16x16/distances.csv");
    let out = ok(&["--out", s(tmp.path()), "mantel", s(&d), s(&d)]);
    // six labels leave few distinct permutations, so p sits above its floor
    let line = String::from_utf8_lossy(&out.stdout).trim().to_string();
    let (r, p) = line.split_once(' ').unwrap();
    assert_eq!(r, "r=1");
    let p: f64 = p.strip_prefix("p=").unwrap().parse().unwrap();
    assert!((0.001..0.05).contains(&p), "{line}");
}

#[test]
fn experiments_write_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path();
    ok(&["--out", s(out), "experiment", "pixel-edition", "--rates", "1,10,40", "--measures", "nc"]);
    assert_eq!(data_rows(&read(out.join("pixel_edition.csv"))).len(), 3);
    ok(&["--out", s(out), "experiment", "supersample", "--count", "2", "--size", "32"]);
    assert_eq!(data_rows(&read(out.join("supersample.csv"))).len(), 2);
    let ca = corpus().join("ca_manifest.csv");
    ok(&["--out", s(out), "experiment", "datasets", &format!("ca={}", s(&ca))]);
    assert_eq!(data_rows(&read(out.join("datasets.csv"))).len(), 12);
    assert_eq!(artinfo(&["experiment", "pixel-edition", "--rates", "0..5"], None).status.code(), Some(1));
}

#[test]
fn benchmark_reports_the_builtin_codec() {
    let tmp = tempfile::tempdir().unwrap();
    let input = corpus().join("structured.pgm");
    ok(&["--out", s(tmp.path()), "benchmark", "--codecs", "cm", s(&input)]);
    let csv = read(tmp.path().join("benchmark.csv"));
    assert!(data_rows(&csv).iter().any(|r| r.contains("cm")));
}

#[test]
fn committed_corpus_matches_generator() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&["synth", s(tmp.path())]);
    let (fresh, committed) = (files(tmp.path()), files(&corpus()));
    assert_eq!(fresh.keys().collect::<Vec<_>>(), committed.keys().collect::<Vec<_>>());
    assert!(fresh == committed, "regenerate with `artinfo synth fixtures/corpus`");
}

#[test]
fn warm_cache_rerun_is_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cache = tmp.path().join("cache");
    let manifest = corpus().join("manifest.csv");
    let run = |out: &Path, cache: Option<&Path>| {
        let o = artinfo(&["--out", s(out), "measure", s(&manifest)], cache);
        assert!(o.status.success());
        read(out.join("measures.csv"))
    };
    let cold = run(&tmp.path().join("cold"), Some(&cache));
    let lines = read(cache.join("compressed_bits.tsv")).lines().count();
    assert!(lines >= 30);
    let warm = run(&tmp.path().join("warm"), Some(&cache));
    assert_eq!(cold, warm);
    assert_eq!(read(cache.join("compressed_bits.tsv")).lines().count(), lines);
    assert_eq!(run(&tmp.path().join("none"), None), cold);

    let o = artinfo(&["--no-cache", "--out", s(&tmp.path().join("nc")), "measure", s(&manifest)], Some(&tmp.path().join("unused")));
    assert!(o.status.success());
    assert!(!tmp.path().join("unused").exists());
}

#[test]
fn cache_is_coherent_and_fast_when_warm() {
    let tmp = tempfile::tempdir().unwrap();
    let inner: Arc<dyn Codec> = Arc::new(CmCodec::new());
    let inputs: Vec<_> = (0..1000).map(|i| random_binary(8 + i % 40, 8 + i % 23, i as u64)).collect();
    {
        let cache = Arc::new(ResultCache::open(tmp.path()).unwrap());
        let cached = CachedCodec::new(inner.clone(), cache.clone());
        for x in &inputs {
            assert_eq!(cached.compressed_bits(x).unwrap(), inner.compressed_bits(x).unwrap());
        }
        assert_eq!(cache.len(), 1000);
    }
    let reopened = Arc::new(ResultCache::open(tmp.path()).unwrap());
    assert_eq!(reopened.len(), 1000);
    let cached = CachedCodec::new(inner.clone(), reopened);
    for x in &inputs {
        assert_eq!(cached.compressed_bits(x).unwrap(), inner.compressed_bits(x).unwrap());
    }

    let big: Vec<_> = (0..40).map(|i| random_binary(128, 128, 5000 + i)).collect();
    let cache = Arc::new(ResultCache::open(tmp.path().join("timing")).unwrap());
    let cached = CachedCodec::new(inner, cache);
    let t = Instant::now();
    let cold: Vec<u64> = big.iter().map(|x| cached.compressed_bits(x).unwrap()).collect();
    let cold_time = t.elapsed();
    let t = Instant::now();
    let warm: Vec<u64> = big.iter().map(|x| cached.compressed_bits(x).unwrap()).collect();
    let warm_time = t.elapsed();
    assert_eq!(cold, warm);
    assert!(warm_time * 10 <= cold_time, "cold {cold_time:?}, warm {warm_time:?}");
}
