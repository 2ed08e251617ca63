use std::fmt;
use std::str::FromStr;

use log::warn;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{sq_dist, Label, PointCloud};
use crate::error::{invalid, Error, Result};

/// Rows of the leading eigenvectors, one per point.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralEmbedding {
    pub rows: PointCloud,
    /// Points whose row was zero before normalisation; they are placed at `e_1`.
    pub zero_rows: Vec<usize>,
}

/// Stacks the first `k` columns of `vectors` and, when `normalize` is set,
/// scales every row to unit length.
pub fn embed(vectors: &DMatrix<f64>, k: usize, normalize: bool) -> Result<SpectralEmbedding> {
    if k == 0 || k > vectors.ncols() {
        return Err(invalid(format!("cannot embed with {k} of {} eigenvectors", vectors.ncols())));
    }
    let n = vectors.nrows();
    let mut coords = Vec::with_capacity(n * k);
    let mut zero_rows = Vec::new();
    for i in 0..n {
        let row: Vec<f64> = (0..k).map(|c| vectors[(i, c)]).collect();
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !normalize {
            coords.extend(row);
        } else if norm > 0.0 {
            coords.extend(row.iter().map(|v| v / norm));
        } else {
            zero_rows.push(i);
            coords.push(1.0);
            coords.extend(std::iter::repeat_n(0.0, k - 1));
        }
    }
    if !zero_rows.is_empty() {
        warn!("{} embedding rows were zero", zero_rows.len());
    }
    Ok(SpectralEmbedding {
        rows: PointCloud::new(coords, k)?,
        zero_rows,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssignMethod {
    #[default]
    Kmeans,
    /// Furthest-point K-centering followed by nearest-centre assignment.
    Distances,
}

impl fmt::Display for AssignMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AssignMethod::Kmeans => "kmeans",
            AssignMethod::Distances => "distances",
        })
    }
}

impl FromStr for AssignMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kmeans" => Ok(AssignMethod::Kmeans),
            "distances" => Ok(AssignMethod::Distances),
            other => Err(invalid(format!("unknown assignment method `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KMeansResult {
    /// Labels `1..=k`.
    pub labels: Vec<Label>,
    pub centers: Vec<Vec<f64>>,
    /// Within-cluster sum of squares.
    pub wcss: f64,
    pub iterations: usize,
    /// Objective after each centre update.
    pub history: Vec<f64>,
}

pub const KMEANS_RESTARTS: usize = 10;
const KMEANS_MAX_ITER: usize = 300;

/// Furthest-point traversal from `first`: each new centre is the point
/// farthest from all centres so far (ties to the lower index).
pub fn furthest_point_centers(points: &PointCloud, k: usize, first: usize) -> Vec<usize> {
    let n = points.len();
    let mut centers = vec![first];
    let mut nearest: Vec<f64> = (0..n).map(|i| points.sq_dist(i, first)).collect();
    while centers.len() < k.min(n) {
        let next = (0..n)
            .max_by(|&a, &b| nearest[a].total_cmp(&nearest[b]).then(b.cmp(&a)))
            .expect("n >= 1");
        centers.push(next);
        for i in 0..n {
            nearest[i] = nearest[i].min(points.sq_dist(i, next));
        }
    }
    centers
}

fn nearest_center(p: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d = sq_dist(p, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Lloyd iterations from the given initial centres.
pub fn lloyd(points: &PointCloud, mut centers: Vec<Vec<f64>>) -> KMeansResult {
    let n = points.len();
    let k = centers.len();
    let dim = points.dim();
    let mut assign = vec![usize::MAX; n];
    let mut dist = vec![0.0; n];
    let mut iterations = 0;
    let mut history = Vec::new();
    loop {
        let mut changed = false;
        for i in 0..n {
            let (c, d) = nearest_center(points.point(i), &centers);
            dist[i] = d;
            if assign[i] != c {
                assign[i] = c;
                changed = true;
            }
        }
        let mut counts = vec![0usize; k];
        for &a in &assign {
            counts[a] += 1;
        }
        // an empty cluster takes over the point worst served by its centre
        if let Some(empty) = counts.iter().position(|&c| c == 0) {
            let far = (0..n)
                .filter(|&i| counts[assign[i]] > 1)
                .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)));
            if let Some(far) = far {
                counts[assign[far]] -= 1;
                assign[far] = empty;
                counts[empty] = 1;
                changed = true;
            }
        }
        let mut sums = vec![vec![0.0; dim]; k];
        for i in 0..n {
            for (s, x) in sums[assign[i]].iter_mut().zip(points.point(i)) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        history.push((0..n).map(|i| sq_dist(points.point(i), &centers[assign[i]])).sum());
        iterations += 1;
        if !changed || iterations >= KMEANS_MAX_ITER {
            break;
        }
    }
    KMeansResult {
        labels: assign.iter().map(|&a| a as Label + 1).collect(),
        centers,
        wcss: *history.last().expect("one iteration"),
        iterations,
        history,
    }
}

/// K-means with furthest-point seeding from a random first point; the best
/// of `restarts` runs by within-cluster sum of squares.
pub fn kmeans(points: &PointCloud, k: usize, restarts: usize, seed: u64) -> Result<KMeansResult> {
    if k == 0 {
        return Err(invalid("k-means needs k >= 1"));
    }
    if k > points.len() {
        return Err(invalid(format!("k = {k} exceeds the {} points", points.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KMeansResult> = None;
    for _ in 0..restarts.max(1) {
        let first = rng.random_range(0..points.len());
        let centers = furthest_point_centers(points, k, first)
            .into_iter()
            .map(|c| points.point(c).to_vec())
            .collect();
        let run = lloyd(points, centers);
        if best.as_ref().is_none_or(|b| run.wcss < b.wcss) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Furthest-point K-centering from point 0, then nearest-centre labels.
pub fn cluster_by_distances(points: &PointCloud, k: usize) -> Result<Vec<Label>> {
    if k == 0 || k > points.len() {
        return Err(invalid(format!("cannot form {k} clusters from {} points", points.len())));
    }
    let centers: Vec<Vec<f64>> = furthest_point_centers(points, k, 0)
        .into_iter()
        .map(|c| points.point(c).to_vec())
        .collect();
    Ok(points
        .rows()
        .map(|p| nearest_center(p, &centers).0 as Label + 1)
        .collect())
}

pub fn cluster_embedding(embedding: &SpectralEmbedding, k: usize, method: AssignMethod, seed: u64) -> Result<Vec<Label>> {
    match method {
        AssignMethod::Kmeans => Ok(kmeans(&embedding.rows, k, KMEANS_RESTARTS, seed)?.labels),
        AssignMethod::Distances => cluster_by_distances(&embedding.rows, k),
    }
}
