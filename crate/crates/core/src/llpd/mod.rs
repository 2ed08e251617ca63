//! Longest-leg path distances: exact values via a minimum spanning tree, and
//! the multiscale approximation built from a ladder of connectivity scales.

mod dendrogram;
mod ladder;
mod slink;

use std::path::Path;

use log::warn;

pub use dendrogram::{build_dendrogram, MultiscaleDendrogram, SortedComponentMatrix};
pub use ladder::{choose_scales, LadderMode, ScaleLadder};
pub use slink::{single_linkage_prune, slink, PointerRepresentation};

use crate::dataset::PointCloud;
use crate::error::{invalid, Error, Result};
use crate::exec::{map_indices, Execution};
use crate::graph::{build_knn_graph, ensure_connected, NeighborGraph};
use crate::io::write_atomic;
use crate::union_find::UnionFind;

/// Approximate LLPD between points `i` and `j`: the threshold of the first
/// scale at which they share a component. A point's distance to itself is
/// `t_1`, the value the kernel sees; see [`approx_llpd_metric`].
pub fn approx_llpd(ccs: &SortedComponentMatrix, ladder: &ScaleLadder, i: usize, j: usize) -> f64 {
    let s = ccs
        .merge_scale(ccs.position(i), ccs.position(j))
        .expect("the top scale is a single component");
    ladder.t(s)
}

/// [`approx_llpd`] with a zero diagonal, for use as a metric.
pub fn approx_llpd_metric(ccs: &SortedComponentMatrix, ladder: &ScaleLadder, i: usize, j: usize) -> f64 {
    if i == j {
        0.0
    } else {
        approx_llpd(ccs, ladder, i, j)
    }
}

/// Dense matrix of approximate LLPDs with a zero diagonal.
pub fn approx_llpd_matrix(ccs: &SortedComponentMatrix, ladder: &ScaleLadder) -> LlpdMatrix {
    let n = ccs.n();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = approx_llpd(ccs, ladder, i, j);
            data[i * n + j] = d;
            data[j * n + i] = d;
        }
    }
    LlpdMatrix { n, data }
}

/// Per-point approximate LLPD nearest neighbors.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborTable {
    /// `neighbors[i]`: `(point, llpd)` pairs in nondecreasing distance.
    pub neighbors: Vec<Vec<(usize, f64)>>,
    pub k: usize,
}

impl NeighborTable {
    /// Writes `point,neighbor,llpd` rows with a header.
    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = String::from("point,neighbor,llpd\n");
        for (i, row) in self.neighbors.iter().enumerate() {
            for &(j, d) in row {
                out.push_str(&format!("{i},{j},{d:?}\n"));
            }
        }
        write_atomic(path, out.as_bytes())
    }
}

/// For each point, walks the scales from finest to coarsest and
/// extends two cursors over its run in the sorted matrix, first towards lower
/// positions and then towards higher ones, until `k` neighbors are found.
/// The point itself is not counted.
pub fn llpd_knn(ccs: &SortedComponentMatrix, ladder: &ScaleLadder, k: usize, exec: Execution) -> Result<NeighborTable> {
    let n = ccs.n();
    if k == 0 {
        return Err(invalid("kLLPD must be at least 1"));
    }
    let k = if k >= n {
        warn!("kLLPD = {k} >= n = {n}; returning all {} neighbors", n - 1);
        n - 1
    } else {
        k
    };
    let rows = map_indices(exec, n, |p| sweep(ccs, ladder, p, k));
    let mut neighbors = vec![Vec::new(); n];
    for (p, row) in rows.into_iter().enumerate() {
        neighbors[ccs.order()[p]] = row;
    }
    Ok(NeighborTable { neighbors, k })
}

fn sweep(ccs: &SortedComponentMatrix, ladder: &ScaleLadder, p: usize, k: usize) -> Vec<(usize, f64)> {
    let order = ccs.order();
    let mut found = Vec::with_capacity(k);
    let (mut up, mut down) = (p, p);
    for s in 0..ccs.scales() {
        if found.len() == k {
            break;
        }
        let (start, end) = ccs.run(p, s);
        let t = ladder.t(s);
        while up > start && found.len() < k {
            up -= 1;
            found.push((order[up], t));
        }
        while down + 1 < end && found.len() < k {
            down += 1;
            found.push((order[down], t));
        }
    }
    found
}

/// `beta[i]`: approximate LLPD from point `i` to its `k`-th LLPD-nearest
/// neighbor. Equivalent to stopping the [`llpd_knn`] sweep at `k` neighbors:
/// the answer is the first scale whose run holds `k` other points.
pub fn knn_llpd_radius(ccs: &SortedComponentMatrix, ladder: &ScaleLadder, k: usize, exec: Execution) -> Result<Vec<f64>> {
    let n = ccs.n();
    if k == 0 || k >= n {
        return Err(invalid(format!("kNoise must lie in 1..{n}, got {k}")));
    }
    let by_position = map_indices(exec, n, |p| {
        let s = (0..ccs.scales())
            .find(|&s| {
                let (a, b) = ccs.run(p, s);
                b - a > k
            })
            .expect("the top run holds every point");
        ladder.t(s)
    });
    let mut beta = vec![0.0; n];
    for (p, b) in by_position.into_iter().enumerate() {
        beta[ccs.order()[p]] = b;
    }
    Ok(beta)
}

/// Symmetric `n x n` LLPD values with a zero diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct LlpdMatrix {
    n: usize,
    data: Vec<f64>,
}

impl LlpdMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }
}

/// Minimum spanning tree (Kruskal) as an edge list `(i, j, w)`.
pub fn minimum_spanning_tree(graph: &NeighborGraph) -> Result<Vec<(usize, usize, f64)>> {
    let mut edges: Vec<(f64, usize, usize)> = graph.edges().iter().map(|e| (e.w, e.i, e.j)).collect();
    edges.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut uf = UnionFind::new(graph.n());
    let mut tree = Vec::with_capacity(graph.n().saturating_sub(1));
    for (w, i, j) in edges {
        if uf.union(i, j) {
            tree.push((i, j, w));
        }
    }
    if uf.sets() > 1 {
        return Err(Error::Disconnected { components: uf.sets() });
    }
    Ok(tree)
}

/// Exact LLPD between all pairs: the largest edge on the MST path, found by
/// one traversal of the tree from every root.
pub fn exact_llpd_matrix(graph: &NeighborGraph) -> Result<LlpdMatrix> {
    let n = graph.n();
    let tree = minimum_spanning_tree(graph)?;
    let mut adj = vec![Vec::new(); n];
    for &(i, j, w) in &tree {
        adj[i].push((j, w));
        adj[j].push((i, w));
    }
    let mut data = vec![0.0f64; n * n];
    let mut stack = Vec::new();
    for root in 0..n {
        let row = &mut data[root * n..(root + 1) * n];
        let mut visited = vec![false; n];
        visited[root] = true;
        stack.push(root);
        while let Some(u) = stack.pop() {
            for &(v, w) in &adj[u] {
                if !visited[v] {
                    visited[v] = true;
                    row[v] = row[u].max(w);
                    stack.push(v);
                }
            }
        }
    }
    Ok(LlpdMatrix { n, data })
}

/// Everything the clustering pipeline derives from one point cloud: the
/// connected kNN graph, the ladder and the multiscale structure.
#[derive(Clone, Debug)]
pub struct LlpdIndex {
    pub graph: NeighborGraph,
    pub ladder: ScaleLadder,
    pub dendrogram: MultiscaleDendrogram,
    pub sorted: SortedComponentMatrix,
}

impl LlpdIndex {
    pub fn build(points: &PointCloud, k_euc: usize, mode: LadderMode, m: usize, exec: Execution) -> Result<Self> {
        let graph = build_knn_graph(points, k_euc, exec)?;
        let graph = ensure_connected(&graph, points);
        let ladder = choose_scales(&graph, mode, m)?;
        let (dendrogram, sorted) = build_dendrogram(&graph, &ladder)?;
        Ok(Self {
            graph,
            ladder,
            dendrogram,
            sorted,
        })
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn approx_llpd(&self, i: usize, j: usize) -> f64 {
        approx_llpd(&self.sorted, &self.ladder, i, j)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;

    fn path_index() -> (SortedComponentMatrix, ScaleLadder, NeighborGraph) {
        let g = NeighborGraph::from_edges(3, [Edge { i: 0, j: 1, w: 1.0 }, Edge { i: 1, j: 2, w: 2.0 }], 1).unwrap();
        let l = ScaleLadder::new(vec![1.0, 2.0], LadderMode::Exp).unwrap();
        let (_, s) = build_dendrogram(&g, &l).unwrap();
        (s, l, g)
    }

    #[test]
    fn path_graph_distances() {
        let (s, l, _) = path_index();
        assert_eq!(approx_llpd(&s, &l, 0, 2), 2.0);
        assert_eq!(approx_llpd(&s, &l, 0, 1), 1.0);
        assert_eq!(approx_llpd(&s, &l, 1, 1), 1.0);
        assert_eq!(approx_llpd_metric(&s, &l, 1, 1), 0.0);
    }

    #[test]
    fn path_graph_neighbors() {
        let (s, l, _) = path_index();
        let t = llpd_knn(&s, &l, 2, Execution::Sequential).unwrap();
        assert_eq!(t.neighbors[0], vec![(1, 1.0), (2, 2.0)]);
        let all = llpd_knn(&s, &l, 10, Execution::Sequential).unwrap();
        assert_eq!(all.k, 2);
    }

    #[test]
    fn collinear_exact() {
        let pts = PointCloud::new(vec![0.0, 1.0, 3.0], 1).unwrap();
        let m = exact_llpd_matrix(&NeighborGraph::complete(&pts)).unwrap();
        assert_eq!(m.get(0, 2), 2.0);
        assert_eq!(m.get(2, 0), 2.0);
        assert_eq!(m.get(1, 1), 0.0);
    }

    #[test]
    fn duplicates_share_the_first_scale() {
        let pts = PointCloud::new(vec![0.0, 0.0, 1.0, 3.0], 1).unwrap();
        let g = NeighborGraph::complete(&pts);
        let l = choose_scales(&g, LadderMode::Exp, 4).unwrap();
        let (_, s) = build_dendrogram(&g, &l).unwrap();
        let t = llpd_knn(&s, &l, 1, Execution::Sequential).unwrap();
        assert_eq!(t.neighbors[0], vec![(1, l.first())]);
        assert_eq!(t.neighbors[1], vec![(0, l.first())]);
        let beta = knn_llpd_radius(&s, &l, 1, Execution::Sequential).unwrap();
        assert_eq!(&beta[..2], &[l.first(), l.first()]);
    }

    #[test]
    fn radius_rejects_bad_k() {
        let (s, l, _) = path_index();
        assert!(knn_llpd_radius(&s, &l, 3, Execution::Sequential).is_err());
        assert!(knn_llpd_radius(&s, &l, 0, Execution::Sequential).is_err());
    }
}
