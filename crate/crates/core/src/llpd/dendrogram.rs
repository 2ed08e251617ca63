use std::path::Path;

use serde::Serialize;

use super::ladder::ScaleLadder;
use crate::error::{Error, Result};
use crate::graph::NeighborGraph;
use crate::io::write_atomic;
use crate::union_find::UnionFind;

/// Nested partitions of the points, one per ladder scale.
///
/// Component ids at each scale are dense and numbered by first occurrence in
/// point-index order, so two dendrograms over the same points describe the
/// same partitions exactly when their label arrays are equal.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MultiscaleDendrogram {
    /// `labels[s][i]`: component of point `i` at scale `s`.
    labels: Vec<Vec<u32>>,
    /// `sizes[s][c]`: number of points in component `c` at scale `s`.
    sizes: Vec<Vec<usize>>,
    /// `parents[s][c]`: component at scale `s + 1` containing component `c`.
    parents: Vec<Vec<u32>>,
}

impl MultiscaleDendrogram {
    /// Canonicalises arbitrary per-scale labelings. Each scale must be a
    /// coarsening of the previous one.
    pub fn from_partitions(raw: Vec<Vec<usize>>) -> Result<Self> {
        let n = raw.first().map_or(0, Vec::len);
        if raw.is_empty() || n == 0 || raw.iter().any(|r| r.len() != n) {
            return Err(crate::error::invalid("partitions must be non-empty and of equal length"));
        }
        let labels: Vec<Vec<u32>> = raw.iter().map(|r| canonical(r)).collect();
        let mut sizes = Vec::with_capacity(labels.len());
        for l in &labels {
            let count = l.iter().max().map_or(0, |&m| m as usize + 1);
            let mut sz = vec![0usize; count];
            for &c in l {
                sz[c as usize] += 1;
            }
            sizes.push(sz);
        }
        let mut parents = Vec::with_capacity(labels.len().saturating_sub(1));
        for s in 0..labels.len() - 1 {
            let mut p = vec![u32::MAX; sizes[s].len()];
            for i in 0..n {
                let c = labels[s][i] as usize;
                let up = labels[s + 1][i];
                if p[c] == u32::MAX {
                    p[c] = up;
                } else if p[c] != up {
                    return Err(crate::error::invalid(format!(
                        "scale {} does not coarsen scale {s}",
                        s + 1
                    )));
                }
            }
            parents.push(p);
        }
        Ok(Self {
            labels,
            sizes,
            parents,
        })
    }

    pub fn n(&self) -> usize {
        self.labels[0].len()
    }

    pub fn scales(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self, s: usize) -> &[u32] {
        &self.labels[s]
    }

    pub fn sizes(&self, s: usize) -> &[usize] {
        &self.sizes[s]
    }

    /// Parent links from scale `s` to `s + 1`; `s` must be below the top scale.
    pub fn parents(&self, s: usize) -> &[u32] {
        &self.parents[s]
    }

    /// Number of components `nu_s` at scale `s`.
    pub fn component_count(&self, s: usize) -> usize {
        self.sizes[s].len()
    }

    pub fn component_counts(&self) -> Vec<usize> {
        self.sizes.iter().map(Vec::len).collect()
    }

    /// Smallest zero-based scale at which `i` and `j` share a component.
    pub fn merge_scale(&self, i: usize, j: usize) -> Option<usize> {
        let s = self.labels.partition_point(|l| l[i] != l[j]);
        (s < self.labels.len()).then_some(s)
    }

    /// JSON with the thresholds and, per scale, the component id of every point.
    pub fn save_json(&self, ladder: &ScaleLadder, path: impl AsRef<Path>) -> Result<()> {
        #[derive(Serialize)]
        struct Export<'a> {
            thresholds: &'a [f64],
            components: &'a [Vec<u32>],
        }
        let json = serde_json::to_vec(&Export {
            thresholds: ladder.thresholds(),
            components: &self.labels,
        })?;
        write_atomic(path, &json)
    }
}

fn canonical(raw: &[usize]) -> Vec<u32> {
    let mut map = std::collections::HashMap::new();
    raw.iter()
        .map(|&r| {
            let next = map.len() as u32;
            *map.entry(r).or_insert(next)
        })
        .collect()
}

/// Points reordered so that every component at every scale occupies one
/// contiguous run of positions.
#[derive(Clone, Debug, PartialEq)]
pub struct SortedComponentMatrix {
    /// `order[p]`: point at position `p`.
    order: Vec<usize>,
    /// `position[i]`: position of point `i`.
    position: Vec<usize>,
    /// Position-major component ids, `m` per row, renumbered so that ids
    /// increase along the positions.
    matrix: Vec<u32>,
    /// `runs[s]`: run boundaries at scale `s`, length `nu_s + 1`.
    runs: Vec<Vec<usize>>,
    m: usize,
}

impl SortedComponentMatrix {
    /// Hierarchical row sort: points ordered by (component at the top scale,
    /// ..., component at the finest scale, index), done as a stable counting
    /// sort per scale from the finest up.
    pub fn new(dendro: &MultiscaleDendrogram) -> Self {
        let n = dendro.n();
        let m = dendro.scales();
        let mut order: Vec<usize> = (0..n).collect();
        let mut scratch = vec![0usize; n];
        for s in 0..m {
            let labels = dendro.labels(s);
            let mut start = vec![0usize; dendro.component_count(s) + 1];
            for &i in &order {
                start[labels[i] as usize + 1] += 1;
            }
            for c in 1..start.len() {
                start[c] += start[c - 1];
            }
            for &i in &order {
                let c = labels[i] as usize;
                scratch[start[c]] = i;
                start[c] += 1;
            }
            std::mem::swap(&mut order, &mut scratch);
        }
        let mut position = vec![0usize; n];
        for (p, &i) in order.iter().enumerate() {
            position[i] = p;
        }
        let mut matrix = vec![0u32; n * m];
        let mut runs = Vec::with_capacity(m);
        for s in 0..m {
            let labels = dendro.labels(s);
            let mut r = vec![0usize];
            let mut id = 0u32;
            for p in 0..n {
                if p > 0 && labels[order[p]] != labels[order[p - 1]] {
                    id += 1;
                    r.push(p);
                }
                matrix[p * m + s] = id;
            }
            r.push(n);
            runs.push(r);
        }
        Self {
            order,
            position,
            matrix,
            runs,
            m,
        }
    }

    pub fn n(&self) -> usize {
        self.order.len()
    }

    pub fn scales(&self) -> usize {
        self.m
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn position(&self, i: usize) -> usize {
        self.position[i]
    }

    /// Component id (in sorted numbering) of the point at position `p`.
    pub fn id(&self, p: usize, s: usize) -> u32 {
        self.matrix[p * self.m + s]
    }

    pub fn row(&self, p: usize) -> &[u32] {
        &self.matrix[p * self.m..(p + 1) * self.m]
    }

    pub fn runs(&self, s: usize) -> &[usize] {
        &self.runs[s]
    }

    /// Position range of the component containing position `p` at scale `s`.
    pub fn run(&self, p: usize, s: usize) -> (usize, usize) {
        let c = self.id(p, s) as usize;
        (self.runs[s][c], self.runs[s][c + 1])
    }

    /// Smallest zero-based scale where positions `p` and `q` share a run.
    pub fn merge_scale(&self, p: usize, q: usize) -> Option<usize> {
        let (rp, rq) = (self.row(p), self.row(q));
        // shared components stay shared at coarser scales, so bisect
        let (mut lo, mut hi) = (0, self.m);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if rp[mid] == rq[mid] {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        (lo < self.m).then_some(lo)
    }
}

/// Bins the edges by scale, unions them scale by scale and sorts
/// the resulting component matrix.
pub fn build_dendrogram(
    graph: &NeighborGraph,
    ladder: &ScaleLadder,
) -> Result<(MultiscaleDendrogram, SortedComponentMatrix)> {
    let n = graph.n();
    let mut edges: Vec<(f64, usize, usize)> = graph.edges().iter().map(|e| (e.w, e.i, e.j)).collect();
    edges.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut uf = UnionFind::new(n);
    let mut next = 0;
    let mut raw = Vec::with_capacity(ladder.len());
    for &t in ladder.thresholds() {
        while next < edges.len() && edges[next].0 <= t {
            uf.union(edges[next].1, edges[next].2);
            next += 1;
        }
        raw.push(uf.labels());
    }
    if uf.sets() > 1 {
        return Err(Error::Disconnected {
            components: uf.sets(),
        });
    }
    let dendro = MultiscaleDendrogram::from_partitions(raw)?;
    let sorted = SortedComponentMatrix::new(&dendro);
    Ok((dendro, sorted))
}
