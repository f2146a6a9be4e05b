use std::fmt::Write as _;

use super::{AnalysisError, DistanceMatrix};
use crate::meta::Metadata;
use crate::scalar::Real;

/// Undirected edge with `a < b` lexicographically.
#[derive(Clone, Debug, PartialEq)]
pub struct Edge<T> {
    pub a: String,
    pub b: String,
    pub weight: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpanningTree<T> {
    pub labels: Vec<String>,
    pub edges: Vec<Edge<T>>,
}

impl<T: Real> SpanningTree<T> {
    pub fn total_weight(&self) -> T {
        self.edges.iter().map(|e| e.weight).sum()
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Minimum spanning tree. Equal weights are taken in lexicographic order of
/// the (smaller, larger) label pair.
pub fn kruskal_mst<T: Real>(m: &DistanceMatrix<T>) -> Result<SpanningTree<T>, AnalysisError> {
    m.require_pairwise()?;
    let n = m.len();
    let labels = m.labels();
    let mut edges: Vec<(usize, usize)> =
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let key = |&(i, j): &(usize, usize)| {
        let (a, b) = (&labels[i], &labels[j]);
        if a <= b { (a, b) } else { (b, a) }
    };
    edges.sort_by(|x, y| {
        m.get(x.0, x.1)
            .partial_cmp(&m.get(y.0, y.1))
            .expect("finite distances")
            .then_with(|| key(x).cmp(&key(y)))
    });
    let mut parent: Vec<usize> = (0..n).collect();
    let mut tree = Vec::with_capacity(n - 1);
    for e in edges {
        let (ri, rj) = (find(&mut parent, e.0), find(&mut parent, e.1));
        if ri != rj {
            parent[ri] = rj;
            let (a, b) = key(&e);
            tree.push(Edge { a: a.clone(), b: b.clone(), weight: m.get(e.0, e.1) });
            if tree.len() == n - 1 {
                break;
            }
        }
    }
    Ok(SpanningTree { labels: labels.to_vec(), edges: tree })
}

fn dot_id(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Graphviz `graph` with one node per label and weight-labeled edges.
pub fn export_dot<T: Real>(t: &SpanningTree<T>, meta: &Metadata) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "// {}", meta.line().trim_start_matches('#').trim());
    s.push_str("graph mst {\n");
    for l in &t.labels {
        let _ = writeln!(s, "  {};", dot_id(l));
    }
    for e in &t.edges {
        let _ = writeln!(s, "  {} -- {} [label=\"{}\", weight={}];", dot_id(&e.a), dot_id(&e.b), e.weight, e.weight);
    }
    s.push_str("}\n");
    s
}
