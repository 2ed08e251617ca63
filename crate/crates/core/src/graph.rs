//! Symmetric k-nearest-neighbor graphs in Euclidean space.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::path::Path;

use log::{info, warn};
use nalgebra::DMatrix;

use crate::dataset::{sq_dist, PointCloud};
use crate::error::{invalid, Result};
use crate::exec::{map_indices, Execution};
use crate::io::write_atomic;
use crate::union_find::UnionFind;

/// Clouds up to this size are searched by brute force, larger ones by a k-d tree.
pub const BRUTE_FORCE_CUTOFF: usize = 2048;

/// Above this dimension the kd-tree prunes too little to beat brute force.
pub const KD_TREE_MAX_DIM: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

/// Undirected weighted graph. Edges satisfy `i < j` and are sorted by `(i, j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborGraph {
    n: usize,
    edges: Vec<Edge>,
    k_euc: usize,
}

impl NeighborGraph {
    /// Builds a graph from arbitrary undirected edges, normalising orientation
    /// and dropping duplicates (the first weight wins).
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = Edge>, k_euc: usize) -> Result<Self> {
        let mut out = Vec::new();
        for e in edges {
            if e.i == e.j || e.i >= n || e.j >= n {
                return Err(invalid(format!("bad edge ({}, {}) for {n} nodes", e.i, e.j)));
            }
            if !(e.w.is_finite() && e.w >= 0.0) {
                return Err(invalid(format!("edge ({}, {}) has weight {}", e.i, e.j, e.w)));
            }
            out.push(Edge {
                i: e.i.min(e.j),
                j: e.i.max(e.j),
                w: e.w,
            });
        }
        out.sort_by_key(|e| (e.i, e.j));
        out.dedup_by_key(|e| (e.i, e.j));
        Ok(Self { n, edges: out, k_euc })
    }

    /// The complete graph on `points`.
    pub fn complete(points: &PointCloud) -> Self {
        let n = points.len();
        let mut edges = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                edges.push(Edge {
                    i,
                    j,
                    w: points.dist(i, j),
                });
            }
        }
        Self {
            n,
            edges,
            k_euc: n.saturating_sub(1),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn k_euc(&self) -> usize {
        self.k_euc
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for e in &self.edges {
            deg[e.i] += 1;
            deg[e.j] += 1;
        }
        deg
    }

    /// Connected-component id of every node, numbered by first occurrence.
    pub fn components(&self) -> Vec<usize> {
        let mut uf = UnionFind::new(self.n);
        for e in &self.edges {
            uf.union(e.i, e.j);
        }
        uf.labels()
    }

    pub fn component_count(&self) -> usize {
        self.components().iter().max().map_or(0, |m| m + 1)
    }

    pub fn min_weight(&self) -> Option<f64> {
        self.edges.iter().map(|e| e.w).min_by(f64::total_cmp)
    }

    pub fn max_weight(&self) -> Option<f64> {
        self.edges.iter().map(|e| e.w).max_by(f64::total_cmp)
    }

    /// Writes `i,j,w` rows with a header.
    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = String::from("i,j,w\n");
        for e in &self.edges {
            out.push_str(&format!("{},{},{:?}\n", e.i, e.j, e.w));
        }
        write_atomic(path, out.as_bytes())
    }
}

/// Candidate neighbor ordered by squared distance, then index.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Candidate {
    d2: f64,
    idx: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.d2.total_cmp(&other.d2).then(self.idx.cmp(&other.idx))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Exact k-nearest-neighbor search over a fixed point cloud.
pub trait NeighborSearch: Sync {
    /// The `k` nearest points to point `i`, excluding `i` itself, ordered by
    /// distance with ties broken by index.
    fn knn(&self, i: usize, k: usize) -> Vec<usize>;
}

pub struct BruteForce<'a> {
    points: &'a PointCloud,
}

impl<'a> BruteForce<'a> {
    pub fn new(points: &'a PointCloud) -> Self {
        Self { points }
    }
}

impl NeighborSearch for BruteForce<'_> {
    fn knn(&self, i: usize, k: usize) -> Vec<usize> {
        let mut all: Vec<Candidate> = (0..self.points.len())
            .filter(|&j| j != i)
            .map(|j| Candidate {
                d2: self.points.sq_dist(i, j),
                idx: j,
            })
            .collect();
        let k = k.min(all.len());
        if k == 0 {
            return Vec::new();
        }
        all.select_nth_unstable(k - 1);
        all.truncate(k);
        all.sort_unstable();
        all.into_iter().map(|c| c.idx).collect()
    }
}

const LEAF_SIZE: usize = 16;

#[derive(Debug)]
struct KdNode {
    lo: Vec<f64>,
    hi: Vec<f64>,
    /// Range into the permuted index array.
    start: usize,
    end: usize,
    children: Option<(usize, usize)>,
}

/// Axis-aligned k-d tree splitting the widest dimension at its median.
pub struct KdTree<'a> {
    points: &'a PointCloud,
    perm: Vec<usize>,
    nodes: Vec<KdNode>,
}

impl<'a> KdTree<'a> {
    pub fn new(points: &'a PointCloud) -> Self {
        let mut tree = KdTree {
            points,
            perm: (0..points.len()).collect(),
            nodes: Vec::new(),
        };
        tree.build(0, points.len());
        tree
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let dim = self.points.dim();
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for &p in &self.perm[start..end] {
            for (d, &x) in self.points.point(p).iter().enumerate() {
                lo[d] = lo[d].min(x);
                hi[d] = hi[d].max(x);
            }
        }
        let (split_dim, spread) = (0..dim)
            .map(|d| (d, hi[d] - lo[d]))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("dim >= 1");
        let id = self.nodes.len();
        self.nodes.push(KdNode {
            lo,
            hi,
            start,
            end,
            children: None,
        });
        if end - start <= LEAF_SIZE || spread == 0.0 {
            return id;
        }
        let mid = start + (end - start) / 2;
        let points = self.points;
        self.perm[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points.point(a)[split_dim].total_cmp(&points.point(b)[split_dim])
        });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id].children = Some((left, right));
        id
    }

    /// Squared distance from `q` to the node's box. Never exceeds the computed
    /// squared distance to any point inside, because rounding is monotone.
    fn box_sq_dist(&self, node: &KdNode, q: &[f64]) -> f64 {
        let mut s = 0.0;
        for (d, &x) in q.iter().enumerate() {
            let gap = if x < node.lo[d] {
                node.lo[d] - x
            } else if x > node.hi[d] {
                x - node.hi[d]
            } else {
                0.0
            };
            s += gap * gap;
        }
        s
    }

    fn search(&self, node_id: usize, i: usize, k: usize, heap: &mut BinaryHeap<Candidate>) {
        let node = &self.nodes[node_id];
        let q = self.points.point(i);
        match node.children {
            None => {
                for &p in &self.perm[node.start..node.end] {
                    if p == i {
                        continue;
                    }
                    let c = Candidate {
                        d2: sq_dist(q, self.points.point(p)),
                        idx: p,
                    };
                    if heap.len() < k {
                        heap.push(c);
                    } else if c < *heap.peek().expect("k >= 1") {
                        heap.pop();
                        heap.push(c);
                    }
                }
            }
            Some((l, r)) => {
                let dl = self.box_sq_dist(&self.nodes[l], q);
                let dr = self.box_sq_dist(&self.nodes[r], q);
                let order = if dl <= dr { [(l, dl), (r, dr)] } else { [(r, dr), (l, dl)] };
                for (child, bound) in order {
                    // equal bounds may still hide a smaller-index tie
                    if heap.len() < k || bound <= heap.peek().expect("k >= 1").d2 {
                        self.search(child, i, k, heap);
                    }
                }
            }
        }
    }
}

impl NeighborSearch for KdTree<'_> {
    fn knn(&self, i: usize, k: usize) -> Vec<usize> {
        let k = k.min(self.points.len() - 1);
        if k == 0 {
            return Vec::new();
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.search(0, i, k, &mut heap);
        heap.into_sorted_vec().into_iter().map(|c| c.idx).collect()
    }
}

/// kNN lists for every point: a kd-tree for more than [`BRUTE_FORCE_CUTOFF`]
/// points in at most [`KD_TREE_MAX_DIM`] dimensions, blocked inner products
/// for large high-dimensional clouds, brute force otherwise.
pub fn knn_lists(points: &PointCloud, k: usize, exec: Execution) -> Vec<Vec<usize>> {
    if points.len() <= BRUTE_FORCE_CUTOFF {
        let search = BruteForce::new(points);
        map_indices(exec, points.len(), |i| search.knn(i, k))
    } else if points.dim() > KD_TREE_MAX_DIM {
        gram_knn_lists(points, k, exec)
    } else {
        let search = KdTree::new(points);
        map_indices(exec, points.len(), |i| search.knn(i, k))
    }
}

const GRAM_BLOCK: usize = 256;

/// Brute force through `|x|^2 + |y|^2 - 2 x.y` with a matrix product per
/// block of rows. The product only shortlists candidates; the final ranking
/// uses exact distances, with a shortlist wide enough to absorb the
/// cancellation error of the expansion.
fn gram_knn_lists(points: &PointCloud, k: usize, exec: Execution) -> Vec<Vec<usize>> {
    let n = points.len();
    let d = points.dim();
    let k = k.min(n - 1);
    if k == 0 {
        return vec![Vec::new(); n];
    }
    let shortlist = (2 * k + 8).min(n - 1);
    let xt = DMatrix::from_column_slice(d, n, points.coords());
    let norms: Vec<f64> = points.rows().map(|p| p.iter().map(|v| v * v).sum()).collect();
    let blocks = n.div_ceil(GRAM_BLOCK);
    let per_block = map_indices(exec, blocks, |b| {
        let start = b * GRAM_BLOCK;
        let len = GRAM_BLOCK.min(n - start);
        let gram = xt.columns(start, len).transpose() * &xt;
        (0..len)
            .map(|r| {
                let i = start + r;
                let mut approx: Vec<Candidate> = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| Candidate {
                        d2: norms[i] + norms[j] - 2.0 * gram[(r, j)],
                        idx: j,
                    })
                    .collect();
                approx.select_nth_unstable(shortlist - 1);
                let mut exact: Vec<Candidate> = approx[..shortlist]
                    .iter()
                    .map(|c| Candidate {
                        d2: points.sq_dist(i, c.idx),
                        idx: c.idx,
                    })
                    .collect();
                exact.sort_unstable();
                exact.truncate(k);
                exact.into_iter().map(|c| c.idx).collect::<Vec<usize>>()
            })
            .collect::<Vec<_>>()
    });
    per_block.into_iter().flatten().collect()
}

/// Symmetric kNN graph: `(i, j)` is an edge when either endpoint lists the
/// other among its `k_euc` nearest neighbors.
pub fn build_knn_graph(points: &PointCloud, k_euc: usize, exec: Execution) -> Result<NeighborGraph> {
    let n = points.len();
    if n < 2 {
        return Err(invalid("a neighbor graph needs at least 2 points"));
    }
    if k_euc == 0 {
        return Err(invalid("kEuc must be at least 1"));
    }
    if k_euc >= n {
        warn!("kEuc = {k_euc} >= n = {n}; building the complete graph");
    }
    let lists = knn_lists(points, k_euc, exec);
    let mut pairs: Vec<(usize, usize)> = lists
        .iter()
        .enumerate()
        .flat_map(|(i, nbrs)| nbrs.iter().map(move |&j| (i.min(j), i.max(j))))
        .collect();
    pairs.sort_unstable();
    pairs.dedup();
    let edges = pairs
        .into_iter()
        .map(|(i, j)| Edge {
            i,
            j,
            w: points.dist(i, j),
        })
        .collect();
    Ok(NeighborGraph {
        n,
        edges,
        k_euc: k_euc.min(n - 1),
    })
}

/// Connects a graph by adding, for `c > 1` components, the `c - 1` bridges
/// of a minimum spanning tree over components, where each candidate bridge is
/// the closest point pair between two components. Costs one pass over all
/// point pairs when bridging is needed.
pub fn ensure_connected(graph: &NeighborGraph, points: &PointCloud) -> NeighborGraph {
    let comp = graph.components();
    let c = comp.iter().max().map_or(0, |m| m + 1);
    if c <= 1 {
        return graph.clone();
    }
    let n = graph.n;
    // closest pair between every pair of components
    let mut best = vec![(f64::INFINITY, 0usize, 0usize); c * c];
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (comp[i], comp[j]);
            if a == b {
                continue;
            }
            let d2 = points.sq_dist(i, j);
            let slot = &mut best[a.min(b) * c + a.max(b)];
            if d2 < slot.0 {
                *slot = (d2, i, j);
            }
        }
    }
    let mut candidates: Vec<(f64, usize, usize, usize, usize)> = Vec::new();
    for a in 0..c {
        for b in a + 1..c {
            let (d2, i, j) = best[a * c + b];
            candidates.push((d2, a, b, i, j));
        }
    }
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2).cmp(&(y.1, y.2))));
    let mut uf = UnionFind::new(c);
    let mut edges = graph.edges.clone();
    for (_, a, b, i, j) in candidates {
        if uf.union(a, b) {
            edges.push(Edge {
                i,
                j,
                w: points.dist(i, j),
            });
        }
    }
    info!("bridged {c} graph components with {} edges", c - 1);
    NeighborGraph::from_edges(n, edges, graph.k_euc).expect("bridges are valid edges")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gram_lists_match_brute_force_in_high_dimension() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let coords: Vec<f64> = (0..300 * 40).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
        let pts = PointCloud::new(coords, 40).unwrap();
        let brute = BruteForce::new(&pts);
        let lists = gram_knn_lists(&pts, 7, Execution::Sequential);
        for (i, list) in lists.iter().enumerate() {
            assert_eq!(list, &brute.knn(i, 7));
        }
    }
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cloud(n: usize, dim: usize, seed: u64) -> PointCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coords = (0..n * dim).map(|_| rng.random::<f64>()).collect();
        PointCloud::new(coords, dim).unwrap()
    }

    fn line(xs: &[f64]) -> PointCloud {
        PointCloud::new(xs.to_vec(), 1).unwrap()
    }

    #[test]
    fn collinear_k1() {
        let g = build_knn_graph(&line(&[0.0, 1.0, 3.0]), 1, Execution::Sequential).unwrap();
        assert_eq!(
            g.edges(),
            &[Edge { i: 0, j: 1, w: 1.0 }, Edge { i: 1, j: 2, w: 2.0 }]
        );
    }

    #[test]
    fn k_n_minus_one_is_complete() {
        let pts = random_cloud(12, 3, 1);
        let g = build_knn_graph(&pts, 11, Execution::Sequential).unwrap();
        assert_eq!(g.edges().len(), 66);
        assert_eq!(g, NeighborGraph::complete(&pts));
        let big_k = build_knn_graph(&pts, 50, Execution::Sequential).unwrap();
        assert_eq!(big_k.edges(), g.edges());
    }

    #[test]
    fn kd_tree_matches_brute_force() {
        for (n, dim, seed) in [(200, 3, 2), (500, 2, 3), (300, 10, 4)] {
            let pts = random_cloud(n, dim, seed);
            let brute = BruteForce::new(&pts);
            let tree = KdTree::new(&pts);
            for i in 0..n {
                assert_eq!(brute.knn(i, 5), tree.knn(i, 5), "point {i}");
            }
        }
    }

    #[test]
    fn kd_tree_breaks_ties_by_index() {
        // integer lattice with many equidistant neighbors and duplicates
        let mut coords = Vec::new();
        for x in 0..12 {
            for y in 0..12 {
                coords.extend([x as f64, y as f64]);
            }
        }
        coords.extend([3.0, 3.0, 3.0, 3.0]);
        let pts = PointCloud::new(coords, 2).unwrap();
        let brute = BruteForce::new(&pts);
        let tree = KdTree::new(&pts);
        for i in 0..pts.len() {
            for k in [1, 4, 9] {
                assert_eq!(brute.knn(i, k), tree.knn(i, k));
            }
        }
    }

    #[test]
    fn weights_and_degree() {
        let pts = random_cloud(150, 2, 5);
        let g = build_knn_graph(&pts, 4, Execution::Parallel).unwrap();
        assert!(g.degrees().iter().all(|&d| d >= 4));
        for e in g.edges() {
            assert!(e.i < e.j);
            assert_eq!(e.w, pts.dist(e.i, e.j));
        }
    }

    #[test]
    fn rejects_degenerate_input() {
        assert!(build_knn_graph(&line(&[1.0]), 1, Execution::Sequential).is_err());
        assert!(build_knn_graph(&line(&[1.0, 2.0]), 0, Execution::Sequential).is_err());
    }

    #[test]
    fn two_singletons_bridge() {
        let pts = line(&[0.0, 5.0]);
        let g = NeighborGraph::from_edges(2, [], 1).unwrap();
        let c = ensure_connected(&g, &pts);
        assert_eq!(c.edges(), &[Edge { i: 0, j: 1, w: 5.0 }]);
        assert_eq!(ensure_connected(&c, &pts), c);
    }

    #[test]
    fn three_blobs_bridge_with_closest_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let centres = [[0.0, 0.0], [10.0, 0.0], [0.0, 25.0]];
        let mut coords = Vec::new();
        for c in centres {
            for _ in 0..20 {
                coords.push(c[0] + rng.random::<f64>());
                coords.push(c[1] + rng.random::<f64>());
            }
        }
        let pts = PointCloud::new(coords, 2).unwrap();
        let g = build_knn_graph(&pts, 2, Execution::Sequential).unwrap();
        let before = g.component_count();
        assert!(before >= 3);
        let c = ensure_connected(&g, &pts);
        assert_eq!(c.component_count(), 1);
        assert_eq!(c.edges().len(), g.edges().len() + before - 1);
    }

    #[test]
    fn blob_bridges_are_true_closest_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let centres = [[0.0, 0.0], [10.0, 0.0], [0.0, 25.0]];
        let mut coords = Vec::new();
        for c in centres {
            for _ in 0..20 {
                coords.push(c[0] + rng.random::<f64>());
                coords.push(c[1] + rng.random::<f64>());
            }
        }
        let pts = PointCloud::new(coords, 2).unwrap();
        // complete graph within each blob, nothing across
        let mut edges = Vec::new();
        for b in 0..3 {
            for i in b * 20..(b + 1) * 20 {
                for j in i + 1..(b + 1) * 20 {
                    edges.push(Edge { i, j, w: pts.dist(i, j) });
                }
            }
        }
        let g = NeighborGraph::from_edges(60, edges, 19).unwrap();
        let c = ensure_connected(&g, &pts);
        let added: Vec<Edge> = c.edges().iter().filter(|e| e.i / 20 != e.j / 20).copied().collect();
        assert_eq!(added.len(), 2);
        let closest = |a: usize, b: usize| {
            let mut best = f64::INFINITY;
            for i in a * 20..(a + 1) * 20 {
                for j in b * 20..(b + 1) * 20 {
                    best = best.min(pts.dist(i, j));
                }
            }
            best
        };
        // blob 0 is nearest to blob 1 (distance ~9) and to blob 2 (~24)
        assert_eq!(added.iter().map(|e| e.w).fold(0.0, f64::max), closest(0, 2).min(closest(1, 2)));
        assert!(added.iter().any(|e| e.w == closest(0, 1)));
    }
}
