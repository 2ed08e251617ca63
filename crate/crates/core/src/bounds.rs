//! Finite-sample LLPD bounds for clusters sampled near low-dimensional sets
//! with uniform ambient noise, and the matching empirical quantities.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::dataset::{Label, LabeledPointCloud, PointCloud, NOISE};
use crate::error::{invalid, Result};
use crate::exec::{map_indices, Execution};
use crate::io::write_atomic;
use crate::llpd::{MultiscaleDendrogram, ScaleLadder};
use crate::union_find::UnionFind;

/// Volume of the unit ball in `R^d`, `pi^(d/2) / Gamma(d/2 + 1)`.
pub fn unit_ball_volume(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    std::f64::consts::PI.powf(h) / gamma(h + 1.0)
}

/// Model constants for the bounds. Measures are in the units of the data.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LdlnParams {
    /// Intrinsic dimension of the cluster sets.
    pub d: usize,
    /// Ambient dimension.
    pub big_d: usize,
    /// Regularity constant of the cluster sets (at least 1).
    pub kappa: f64,
    /// d-dimensional measure of each cluster set.
    pub hd_cluster: f64,
    /// D-dimensional volume of the noise region.
    pub hd_noise: f64,
    /// Tube radius around the cluster sets; 0 for clusters on the sets.
    pub tau: f64,
    /// D-dimensional volume of the tube, required when `tau > 0`.
    pub tube_volume: Option<f64>,
    /// Points per cluster.
    pub n_cluster: usize,
    pub n_noise: usize,
    /// Failure probability.
    pub t: f64,
    /// Minimal Euclidean distance between cluster sets.
    pub delta: f64,
    pub k_noise: usize,
}

impl LdlnParams {
    fn validate(&self) -> Result<()> {
        if self.d == 0 || self.d > self.big_d {
            return Err(invalid("need 1 <= d <= D"));
        }
        if !(self.kappa >= 1.0) {
            return Err(invalid("kappa must be at least 1"));
        }
        if !(self.hd_cluster > 0.0 && self.hd_noise > 0.0) {
            return Err(invalid("measures must be positive"));
        }
        if !(self.t > 0.0 && self.t < 1.0) {
            return Err(invalid("t must lie in (0, 1)"));
        }
        if !(self.tau >= 0.0) {
            return Err(invalid("tau must be nonnegative"));
        }
        Ok(())
    }
}

const REL_TOL: f64 = 1e-9;

/// Bisection on `[lo, hi]` for the boundary of a monotone predicate with
/// `pred(lo) != pred(hi)`; returns the endpoint on the `pred(lo)` side.
fn bisect(mut lo: f64, mut hi: f64, pred: impl Fn(f64) -> bool) -> f64 {
    let side = pred(lo);
    while (hi - lo).abs() > REL_TOL * hi.abs().max(lo.abs()) {
        let mid = 0.5 * (lo + hi);
        if pred(mid) == side {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Sample size at which the within-cluster bound reaches `eps`, or `None`
/// where the logarithm's argument is below `e`. Past that point the
/// requirement falls to 0 as `eps` grows and stops describing the sample.
fn within_requirement(p: &LdlnParams, eps: f64) -> Option<f64> {
    let (d, big_d) = (p.d as f64, p.big_d as f64);
    let (lead, inner) = if p.tau == 0.0 {
        let c = p.kappa * p.hd_cluster / unit_ball_volume(p.d);
        (c / (eps / 4.0).powf(d), c / ((eps / 8.0).powf(d) * p.t))
    } else {
        let volume = p.tube_volume?;
        let c = p.kappa.powi(2) * 2f64.powf(2.0 * big_d + d) * volume / unit_ball_volume(p.big_d);
        let tube = |r: f64| (eps / r).powf(d) * p.tau.min(eps / r).powf(big_d - d);
        (c / tube(4.0), c / (tube(8.0) * p.t))
    };
    (inner >= std::f64::consts::E).then(|| lead * inner.ln())
}

/// Smallest `eps` for which the sampling condition guaranteeing that all
/// within-cluster LLPDs are below `eps` (with probability `1 - t`) holds for
/// `n_cluster` points. `None` when no `eps` qualifies.
///
/// With `tau > 0` the condition uses the tube volume, which must be supplied.
pub fn within_cluster_bound(p: &LdlnParams) -> Result<Option<f64>> {
    p.validate()?;
    if p.tau > 0.0 && p.tube_volume.is_none() {
        return Err(invalid("tau > 0 needs the tube volume"));
    }
    let n = p.n_cluster as f64;
    let holds = |eps: f64| within_requirement(p, eps).is_some_and(|req| n >= req);
    // the largest eps with a meaningful condition: log argument exactly e
    let mut hi = 1.0;
    while within_requirement(p, hi).is_some() {
        hi *= 2.0;
    }
    let edge = bisect(hi / 2.0, hi, |e| within_requirement(p, e).is_some());
    if !holds(edge) {
        return Ok(None);
    }
    let mut lo = edge;
    while holds(lo) {
        lo /= 2.0;
        if lo < 1e-300 {
            return Ok(Some(0.0));
        }
    }
    // lo fails, edge holds
    Ok(Some(bisect(edge, lo, holds)))
}

/// Largest `eps` with `n_noise <= t^(1/floor(delta/eps)) H(noise) / (eps^D H(B_1))`,
/// which guarantees all between-cluster LLPDs exceed `eps` with probability
/// `1 - t`. `None` when no `eps` qualifies.
pub fn between_cluster_bound(p: &LdlnParams) -> Result<Option<f64>> {
    p.validate()?;
    if !(p.delta > 0.0) || p.n_noise == 0 {
        return Err(invalid("need delta > 0 and at least one noise point"));
    }
    let ball = unit_ball_volume(p.big_d);
    let holds = |eps: f64| {
        let steps = (p.delta / eps).floor();
        if steps < 1.0 {
            return false;
        }
        let rhs = p.t.powf(1.0 / steps) * p.hd_noise / (eps.powi(p.big_d as i32) * ball);
        p.n_noise as f64 <= rhs
    };
    let mut lo = p.delta;
    while !holds(lo) {
        lo /= 2.0;
        if lo < 1e-300 {
            return Ok(None);
        }
    }
    if holds(p.delta) {
        return Ok(Some(p.delta));
    }
    Ok(Some(bisect(lo, p.delta, holds)))
}

/// Lower bound on the smallest noise kNN-LLPD holding with probability `1 - t`:
/// `(2 H(noise) (2t)^(1/k) / (H(B_1) ((k+1) n_noise)^((k+1)/k)))^(1/D)`.
pub fn noise_knn_bound(p: &LdlnParams) -> Result<f64> {
    p.validate()?;
    if p.k_noise == 0 || p.n_noise == 0 {
        return Err(invalid("need kNoise >= 1 and at least one noise point"));
    }
    let k = p.k_noise as f64;
    let inner = 2.0 * p.hd_noise * (2.0 * p.t).powf(1.0 / k)
        / (unit_ball_volume(p.big_d) * ((k + 1.0) * p.n_noise as f64).powf((k + 1.0) / k));
    Ok(inner.powf(1.0 / p.big_d as f64))
}

/// Positive root of `k - ln(k + 1) = ln(n_noise) - ln(2t)`, the kNoise that
/// maximises [`noise_knn_bound`], with its nearest integer (at least 1).
pub fn optimal_k_noise(n_noise: usize, t: f64) -> Result<(f64, usize)> {
    if n_noise < 2 || !(t > 0.0 && t < 1.0) {
        return Err(invalid("need at least 2 noise points and t in (0, 1)"));
    }
    let rhs = (n_noise as f64).ln() - (2.0 * t).ln();
    if rhs <= 0.0 {
        return Ok((0.0, 1));
    }
    let f = |k: f64| k - (k + 1.0).ln() - rhs;
    let mut hi = rhs + 1.0;
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    let root = bisect(0.0, hi, |k| f(k) < 0.0);
    Ok((root, (root.round() as usize).max(1)))
}

/// Empirical counterparts of the bounds.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    /// Largest LLPD between two points of the same cluster.
    pub eps_in: f64,
    /// Smallest LLPD between points of different clusters (absent for K < 2).
    pub eps_btw: Option<f64>,
    /// Smallest kNN-LLPD among noise points, paths through noise only.
    pub eps_nse: Option<f64>,
    /// Smallest Euclidean distance between points of different clusters.
    pub delta_emp: Option<f64>,
    /// Largest ratio of survivors to a cluster's neighborhood after denoising.
    pub zeta_n: Option<f64>,
}

/// Minimum spanning tree of the complete Euclidean graph (dense Prim),
/// returned as `(i, j, w)` edges.
pub fn euclidean_mst(points: &PointCloud) -> Vec<(usize, usize, f64)> {
    let n = points.len();
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut from = vec![0usize; n];
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..n {
        let mut next = usize::MAX;
        let mut next_d = f64::INFINITY;
        for j in 0..n {
            if in_tree[j] {
                continue;
            }
            let d = points.sq_dist(current, j);
            if d < best[j] {
                best[j] = d;
                from[j] = current;
            }
            if best[j] < next_d {
                next_d = best[j];
                next = j;
            }
        }
        in_tree[next] = true;
        edges.push((from[next], next, points.dist(from[next], next)));
        current = next;
    }
    edges
}

/// Replays merges `(height, i, j)` in nondecreasing height, tracking how many
/// points of each label every component holds.
struct LabelMerger<'a> {
    labels: &'a [Label],
    k: usize,
    uf: UnionFind,
    counts: Vec<Vec<usize>>,
}

impl<'a> LabelMerger<'a> {
    fn new(labels: &'a [Label], k: usize) -> Self {
        let counts = labels
            .iter()
            .map(|&l| {
                let mut c = vec![0; k + 1];
                c[l as usize] = 1;
                c
            })
            .collect();
        Self {
            labels,
            k,
            uf: UnionFind::new(labels.len()),
            counts,
        }
    }

    /// Merges the components of `i` and `j`; returns the label counts of
    /// both sides before the merge, or `None` if already joined.
    fn merge(&mut self, i: usize, j: usize) -> Option<(Vec<usize>, Vec<usize>)> {
        let (ri, rj) = (self.uf.find(i), self.uf.find(j));
        if ri == rj {
            return None;
        }
        let a = std::mem::take(&mut self.counts[ri]);
        let b = std::mem::take(&mut self.counts[rj]);
        self.uf.union(ri, rj);
        let root = self.uf.find(ri);
        self.counts[root] = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        Some((a, b))
    }
}

/// `eps_in` and `eps_btw` from merges sorted by height.
fn within_between(labels: &[Label], k: usize, merges: &[(f64, usize, usize)]) -> (f64, Option<f64>) {
    let mut totals = vec![0usize; k + 1];
    for &l in labels {
        totals[l as usize] += 1;
    }
    let mut merger = LabelMerger::new(labels, k);
    let mut eps_in = vec![0.0f64; k + 1];
    let mut eps_btw = None;
    for &(w, i, j) in merges {
        let Some((a, b)) = merger.merge(i, j) else { continue };
        for l in 1..=k {
            if a[l] > 0 && b[l] > 0 {
                eps_in[l] = eps_in[l].max(w);
            }
        }
        if eps_btw.is_none() {
            let crosses = (1..=k).any(|l| a[l] > 0 && (1..=k).any(|m| m != l && b[m] > 0));
            if crosses {
                eps_btw = Some(w);
            }
        }
    }
    let _ = merger.labels;
    let _ = merger.k;
    (eps_in.into_iter().fold(0.0, f64::max), eps_btw)
}

/// Smallest height at which some component reaches `k + 1` points, i.e. the
/// minimum over points of the LLPD to their k-th LLPD-nearest neighbor.
fn min_knn_height(n: usize, k: usize, merges: &[(f64, usize, usize)]) -> Option<f64> {
    let mut uf = UnionFind::new(n);
    let mut size = vec![1usize; n];
    if k == 0 {
        return Some(0.0);
    }
    for &(w, i, j) in merges {
        let (ri, rj) = (uf.find(i), uf.find(j));
        if ri == rj {
            continue;
        }
        let s = size[ri] + size[rj];
        uf.union(ri, rj);
        size[uf.find(ri)] = s;
        if s > k {
            return Some(w);
        }
    }
    None
}

/// Where the LLPDs come from.
#[derive(Clone, Copy, Debug)]
pub enum LlpdSource<'a> {
    /// Exact LLPD of the complete Euclidean graph.
    Exact,
    /// Multiscale approximation: every LLPD rounded up to the ladder.
    Approx(&'a ScaleLadder),
}

fn merges_for(points: &PointCloud, source: LlpdSource) -> Vec<(f64, usize, usize)> {
    let mut merges: Vec<(f64, usize, usize)> = euclidean_mst(points)
        .into_iter()
        .map(|(i, j, w)| {
            let h = match source {
                LlpdSource::Exact => w,
                LlpdSource::Approx(ladder) => ladder.t(ladder.scale_of(w).unwrap_or(ladder.len() - 1)),
            };
            (h, i, j)
        })
        .collect();
    merges.sort_by(|a, b| a.0.total_cmp(&b.0));
    merges
}

/// Smallest Euclidean distance between points with different cluster labels.
pub fn min_between_distance(data: &LabeledPointCloud, exec: Execution) -> Option<f64> {
    let clustered: Vec<usize> = (0..data.len()).filter(|&i| data.labels[i] != NOISE).collect();
    let best = map_indices(exec, clustered.len(), |a| {
        let i = clustered[a];
        let mut best = f64::INFINITY;
        for &j in &clustered[a + 1..] {
            if data.labels[j] != data.labels[i] {
                best = best.min(data.points.sq_dist(i, j));
            }
        }
        best
    });
    let m = best.into_iter().fold(f64::INFINITY, f64::min);
    m.is_finite().then(|| m.sqrt())
}

/// `eps_in`, `eps_btw`, `eps_nse` (noise-only paths) and `delta_emp` from the
/// ground truth. Uses dense O(n^2) spanning trees.
pub fn empirical_diagnostics(data: &LabeledPointCloud, source: LlpdSource, k_noise: usize, exec: Execution) -> Result<DiagnosticsReport> {
    if !data.has_ground_truth() {
        return Err(invalid("diagnostics need ground-truth labels"));
    }
    let merges = merges_for(&data.points, source);
    let (eps_in, eps_btw) = within_between(&data.labels, data.k, &merges);
    let noise: Vec<usize> = (0..data.len()).filter(|&i| data.labels[i] == NOISE).collect();
    let eps_nse = if noise.len() > k_noise {
        let sub = data.points.subset(&noise);
        min_knn_height(sub.len(), k_noise, &merges_for(&sub, source))
    } else {
        None
    };
    Ok(DiagnosticsReport {
        eps_in,
        eps_btw: if data.k >= 2 { eps_btw } else { None },
        eps_nse,
        delta_emp: if data.k >= 2 { min_between_distance(data, exec) } else { None },
        zeta_n: None,
    })
}

/// `eps_in` and `eps_btw` read off a multiscale dendrogram (approximate LLPD).
pub fn dendrogram_diagnostics(labels: &[Label], k: usize, dendro: &MultiscaleDendrogram, ladder: &ScaleLadder) -> (f64, Option<f64>) {
    let mut merges = Vec::new();
    for s in 1..dendro.scales() {
        // each finer component is joined to its parent at t_s
        let mut rep_of_parent = vec![usize::MAX; dendro.component_count(s)];
        let mut seen = vec![false; dendro.component_count(s - 1)];
        for (i, &c) in dendro.labels(s - 1).iter().enumerate() {
            if seen[c as usize] {
                continue;
            }
            seen[c as usize] = true;
            let p = dendro.parents(s - 1)[c as usize] as usize;
            if rep_of_parent[p] == usize::MAX {
                rep_of_parent[p] = i;
            } else {
                merges.push((ladder.t(s), rep_of_parent[p], i));
            }
        }
    }
    // within the finest blocks everything is at t_1
    let mut first = vec![usize::MAX; dendro.component_count(0)];
    let mut base = Vec::new();
    for (i, &c) in dendro.labels(0).iter().enumerate() {
        if first[c as usize] == usize::MAX {
            first[c as usize] = i;
        } else {
            base.push((ladder.t(0), first[c as usize], i));
        }
    }
    base.extend(merges);
    within_between(labels, k, &base)
}

/// `max_l N / |A_l|`, where `A_l` holds the survivors sharing a component
/// with a label-`l` survivor at the largest ladder scale not above `theta`.
pub fn zeta_n(labels: &[Label], k: usize, dendro: &MultiscaleDendrogram, ladder: &ScaleLadder, theta: f64) -> Option<f64> {
    let s = ladder.thresholds().partition_point(|&t| t <= theta).saturating_sub(1);
    let comp = dendro.labels(s);
    let mut has = vec![vec![false; k + 1]; dendro.component_count(s)];
    for (i, &l) in labels.iter().enumerate() {
        has[comp[i] as usize][l as usize] = true;
    }
    let sizes = dendro.sizes(s);
    let n = labels.len() as f64;
    (1..=k)
        .map(|l| {
            let a: usize = (0..sizes.len()).filter(|&c| has[c][l]).map(|c| sizes[c]).sum();
            (a > 0).then(|| n / a as f64)
        })
        .collect::<Option<Vec<f64>>>()
        .map(|v| v.into_iter().fold(0.0, f64::max))
}

/// Counts of pairwise LLPD values by height and by kind of pair
/// (`within`, `between` or `noise`), in increasing height.
pub fn pair_llpd_counts(data: &LabeledPointCloud, source: LlpdSource) -> Vec<(f64, &'static str, u64)> {
    let merges = merges_for(&data.points, source);
    let mut merger = LabelMerger::new(&data.labels, data.k);
    let mut acc: BTreeMap<(u64, u8), u64> = BTreeMap::new();
    for (w, i, j) in merges {
        let Some((a, b)) = merger.merge(i, j) else { continue };
        let size_a: usize = a.iter().sum();
        let size_b: usize = b.iter().sum();
        let clus_a: usize = a[1..].iter().sum();
        let clus_b: usize = b[1..].iter().sum();
        let within: usize = (1..a.len()).map(|l| a[l] * b[l]).sum();
        let between = clus_a * clus_b - within;
        let noise = size_a * size_b - clus_a * clus_b;
        for (tag, count) in [(0u8, within), (1, between), (2, noise)] {
            if count > 0 {
                *acc.entry((w.to_bits(), tag)).or_default() += count as u64;
            }
        }
    }
    let mut rows: Vec<(f64, &'static str, u64)> = acc
        .into_iter()
        .map(|((bits, tag), c)| (f64::from_bits(bits), ["within", "between", "noise"][tag as usize], c))
        .collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    rows
}

/// Phase-transition data: `llpd,tag,count` rows plus the two bound values
/// as rows tagged `within_bound` and `between_bound`.
pub fn save_phase_transition(rows: &[(f64, &str, u64)], within: Option<f64>, between: Option<f64>, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::from("llpd,tag,count\n");
    for (w, tag, c) in rows {
        out.push_str(&format!("{w:?},{tag},{c}\n"));
    }
    if let Some(w) = within {
        out.push_str(&format!("{w:?},within_bound,0\n"));
    }
    if let Some(b) = between {
        out.push_str(&format!("{b:?},between_bound,0\n"));
    }
    write_atomic(path, out.as_bytes())
}
