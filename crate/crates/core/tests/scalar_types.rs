use artinfo::analysis::{kruskal_mst, upgma};
use artinfo::bdm::{fixture_table, nbdm1, nbdm2};
use artinfo::fingerprint::{author_fingerprint, distance_matrix, local_complexity};
use artinfo::hdc::image_alpha;
use artinfo::synth::{painting, random_binary, Style};
use artinfo::{nc, CmCodec, ComplexityMatrix, Real, TileMode};

fn fingerprints<T: Real>() -> Vec<ComplexityMatrix<T>> {
    let codec = CmCodec::new();
    Style::ALL
        .iter()
        .enumerate()
        .map(|(a, &style)| {
            let tiles: Vec<_> = (0..3)
                .map(|k| {
                    let img = painting(style, 64, (a * 10 + k) as u64);
                    local_complexity::<T>(&img, (4, 4), TileMode::EqualDivision, &codec, style.name()).unwrap()
                })
                .collect();
            author_fingerprint(style.name(), &tiles).unwrap()
        })
        .collect()
}

#[test]
fn f32_and_f64_agree() {
    let x = random_binary(40, 56, 11);
    let (t64, t32) = (fixture_table::<f64>(), fixture_table::<f32>());
    assert!((nbdm1(&x, &t64).unwrap() - nbdm1(&x, &t32).unwrap() as f64).abs() < 1e-5);
    assert!((nbdm2(&x, &t64).unwrap() - nbdm2(&x, &t32).unwrap() as f64).abs() < 1e-4);
    let codec = CmCodec::new();
    assert_eq!(nc::<f64>(&x, &codec).unwrap() as f32, nc::<f32>(&x, &codec).unwrap());

    let img = painting(Style::Textured, 96, 5);
    let a64: f64 = image_alpha(&img, 10, None).unwrap();
    let a32: f32 = image_alpha(&img, 10, None).unwrap();
    assert!((a64 - a32 as f64).abs() < 1e-4);
}

#[test]
fn fingerprint_to_tree_in_both_precisions() {
    let d64 = distance_matrix(&fingerprints::<f64>()).unwrap();
    let d32 = distance_matrix(&fingerprints::<f32>()).unwrap();
    assert_eq!(d64.labels(), d32.labels());
    for i in 0..d64.len() {
        for j in 0..d64.len() {
            assert!((d64.get(i, j) - d32.get(i, j) as f64).abs() < 1e-3);
        }
    }
    let (t64, t32) = (upgma(&d64).unwrap(), upgma(&d32).unwrap());
    let shape = |c: Vec<(Vec<String>, f64)>| c.into_iter().map(|(m, _)| m).collect::<Vec<_>>();
    assert_eq!(
        shape(t64.clusters()),
        shape(t32.clusters().into_iter().map(|(m, h)| (m, h as f64)).collect())
    );
    let (m64, m32) = (kruskal_mst(&d64).unwrap(), kruskal_mst(&d32).unwrap());
    assert_eq!(m64.edges.len(), Style::ALL.len() - 1);
    assert!((m64.total_weight() - m32.total_weight() as f64).abs() < 1e-3);
}
