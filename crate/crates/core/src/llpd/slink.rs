use super::dendrogram::MultiscaleDendrogram;
use super::ladder::ScaleLadder;
use crate::dataset::PointCloud;
use crate::error::Result;
use crate::union_find::UnionFind;

/// Sibson's pointer representation of a single-linkage dendrogram: point `j`
/// joins the cluster of `pi[j]` at height `lambda[j]` (infinite for the last point).
#[derive(Clone, Debug, PartialEq)]
pub struct PointerRepresentation {
    pub pi: Vec<usize>,
    pub lambda: Vec<f64>,
}

/// SLINK: single linkage on the complete Euclidean graph in O(n^2) time and O(n) memory.
pub fn slink(points: &PointCloud) -> PointerRepresentation {
    let n = points.len();
    let mut pi = vec![0usize; n];
    let mut lambda = vec![f64::INFINITY; n];
    let mut m = vec![0.0; n];
    for i in 0..n {
        pi[i] = i;
        lambda[i] = f64::INFINITY;
        for j in 0..i {
            m[j] = points.dist(j, i);
        }
        for j in 0..i {
            if lambda[j] >= m[j] {
                m[pi[j]] = m[pi[j]].min(lambda[j]);
                lambda[j] = m[j];
                pi[j] = i;
            } else {
                m[pi[j]] = m[pi[j]].min(m[j]);
            }
        }
        for j in 0..i {
            if lambda[j] >= lambda[pi[j]] {
                pi[j] = i;
            }
        }
    }
    PointerRepresentation { pi, lambda }
}

/// Cuts the single-linkage dendrogram at every ladder threshold: the
/// partition at scale `s` applies every merge of height at most `t_s`.
pub fn single_linkage_prune(points: &PointCloud, ladder: &ScaleLadder) -> Result<MultiscaleDendrogram> {
    let rep = slink(points);
    let mut merges: Vec<(f64, usize, usize)> = (0..points.len())
        .filter(|&j| rep.lambda[j].is_finite())
        .map(|j| (rep.lambda[j], j, rep.pi[j]))
        .collect();
    merges.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut uf = UnionFind::new(points.len());
    let mut next = 0;
    let mut raw = Vec::with_capacity(ladder.len());
    for &t in ladder.thresholds() {
        while next < merges.len() && merges[next].0 <= t {
            uf.union(merges[next].1, merges[next].2);
            next += 1;
        }
        raw.push(uf.labels());
    }
    MultiscaleDendrogram::from_partitions(raw)
}
