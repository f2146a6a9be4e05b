use super::{AnalysisError, DistanceMatrix};
use crate::scalar::Real;

/// One agglomeration step. Cluster ids `0..n` are the leaves; merge `k`
/// creates cluster `n + k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Merge<T> {
    pub a: usize,
    pub b: usize,
    pub height: T,
    pub id: usize,
    pub size: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dendrogram<T> {
    pub leaves: Vec<String>,
    pub merges: Vec<Merge<T>>,
}

impl<T: Real> Dendrogram<T> {
    pub fn root(&self) -> usize {
        self.merges.last().map_or(0, |m| m.id)
    }

    pub fn height_of(&self, id: usize) -> T {
        if id < self.leaves.len() {
            T::zero()
        } else {
            self.merges[id - self.leaves.len()].height
        }
    }

    pub fn children(&self, id: usize) -> Option<(usize, usize)> {
        id.checked_sub(self.leaves.len()).map(|k| (self.merges[k].a, self.merges[k].b))
    }

    /// Leaf labels under `id`, sorted.
    pub fn members(&self, id: usize) -> Vec<String> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(c) = stack.pop() {
            match self.children(c) {
                Some((a, b)) => stack.extend([a, b]),
                None => out.push(self.leaves[c].clone()),
            }
        }
        out.sort();
        out
    }

    /// Every internal cluster as (sorted members, height), sorted.
    pub fn clusters(&self) -> Vec<(Vec<String>, T)> {
        let mut out: Vec<_> =
            self.merges.iter().map(|m| (self.members(m.id), m.height)).collect();
        out.sort_by(|x, y| x.0.cmp(&y.0));
        out
    }
}

struct Cluster<T> {
    id: usize,
    size: usize,
    rep: String,
    /// Distance to every cluster slot, indexed like `active`.
    dist: Vec<T>,
}

/// Average-linkage agglomerative clustering with merge height `d / 2`.
///
/// Among equally close pairs, the pair whose representatives (smallest member
/// label) sort first is merged.
pub fn upgma<T: Real>(m: &DistanceMatrix<T>) -> Result<Dendrogram<T>, AnalysisError> {
    m.require_pairwise()?;
    let n = m.len();
    let mut slots: Vec<Option<Cluster<T>>> = (0..n)
        .map(|i| {
            Some(Cluster {
                id: i,
                size: 1,
                rep: m.labels()[i].clone(),
                dist: (0..n).map(|j| m.get(i, j)).collect(),
            })
        })
        .collect();
    let two = T::lit(2.0);
    let mut merges = Vec::with_capacity(n - 1);

    for step in 0..n - 1 {
        let mut best: Option<(T, &str, &str, usize, usize)> = None;
        for i in 0..n {
            let Some(ci) = &slots[i] else { continue };
            for j in i + 1..n {
                let Some(cj) = &slots[j] else { continue };
                let d = ci.dist[j];
                let (lo, hi) =
                    if ci.rep <= cj.rep { (ci.rep.as_str(), cj.rep.as_str()) } else { (cj.rep.as_str(), ci.rep.as_str()) };
                let better = match &best {
                    None => true,
                    Some((bd, blo, bhi, ..)) => d < *bd || (d == *bd && (lo, hi) < (*blo, *bhi)),
                };
                if better {
                    best = Some((d, lo, hi, i, j));
                }
            }
        }
        let (d, _, _, i, j) = best.expect("at least two active clusters");
        let ci = slots[i].take().expect("active");
        let cj = slots[j].take().expect("active");
        let (first, second) = if ci.rep <= cj.rep { (&ci, &cj) } else { (&cj, &ci) };
        let size = ci.size + cj.size;
        let (wi, wj) = (T::from_count(ci.size as u64), T::from_count(cj.size as u64));
        let total = T::from_count(size as u64);
        let mut dist = vec![T::zero(); n];
        for k in 0..n {
            if slots[k].is_some() {
                dist[k] = (wi * ci.dist[k] + wj * cj.dist[k]) / total;
            }
        }
        let id = n + step;
        merges.push(Merge { a: first.id, b: second.id, height: d / two, id, size });
        for k in 0..n {
            if let Some(c) = slots[k].as_mut() {
                c.dist[i] = dist[k];
            }
        }
        slots[i] = Some(Cluster { id, size, rep: first.rep.clone(), dist });
    }
    Ok(Dendrogram { leaves: m.labels().to_vec(), merges })
}
