//! Point clouds, ground-truth labels and the synthetic benchmark generators.
//!
//! Every generator draws clusters and noise from independent ChaCha8 streams
//! derived from one seed: stream `l` (1-based) feeds cluster `l` and stream 0
//! feeds the noise. Changing one cluster's size therefore never perturbs the
//! samples of another.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::io::write_atomic;

/// Ground-truth label. Cluster labels run from 1 to K; [`NOISE`] marks outliers.
pub type Label = u32;

pub const NOISE: Label = 0;

/// `n` points in `R^D`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    coords: Vec<f64>,
    dim: usize,
}

impl PointCloud {
    pub fn new(coords: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("ambient dimension must be at least 1"));
        }
        if coords.is_empty() || !coords.len().is_multiple_of(dim) {
            return Err(invalid(format!(
                "{} coordinates do not form rows of dimension {dim}",
                coords.len()
            )));
        }
        if let Some(pos) = coords.iter().position(|c| !c.is_finite()) {
            return Err(invalid(format!(
                "non-finite coordinate in row {}, column {}",
                pos / dim,
                pos % dim
            )));
        }
        Ok(Self { coords, dim })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(invalid("rows have different lengths"));
        }
        Self::new(rows.concat(), dim)
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    /// Squared Euclidean distance. Every distance in the crate goes through
    /// this function so that ties compare identically everywhere.
    #[inline]
    pub fn sq_dist(&self, i: usize, j: usize) -> f64 {
        sq_dist(self.point(i), self.point(j))
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.sq_dist(i, j).sqrt()
    }

    pub fn subset(&self, indices: &[usize]) -> PointCloud {
        let mut coords = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            coords.extend_from_slice(self.point(i));
        }
        PointCloud {
            coords,
            dim: self.dim,
        }
    }
}

#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    // four independent accumulators so long vectors vectorise
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| (x - y) * (x - y)).sum();
    let mut acc = [0.0; 4];
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            let d = x[l] - y[l];
            acc[l] += d * d;
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Points plus ground truth. `k` is the number of cluster labels.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledPointCloud {
    pub points: PointCloud,
    pub labels: Vec<Label>,
    pub k: usize,
}

impl LabeledPointCloud {
    /// Validates that every label is noise or in `1..=k` and that each cluster
    /// label occurs at least once.
    pub fn new(points: PointCloud, labels: Vec<Label>, k: usize) -> Result<Self> {
        if labels.len() != points.len() {
            return Err(invalid(format!(
                "{} labels for {} points",
                labels.len(),
                points.len()
            )));
        }
        let mut seen = vec![false; k + 1];
        for &l in &labels {
            if l as usize > k {
                return Err(invalid(format!("label {l} outside 0..={k}")));
            }
            seen[l as usize] = true;
        }
        if let Some(missing) = (1..=k).find(|&l| !seen[l]) {
            return Err(invalid(format!("cluster label {missing} never occurs")));
        }
        Ok(Self { points, labels, k })
    }

    /// A cloud without ground truth: every point is labelled noise.
    pub fn unlabeled(points: PointCloud) -> Self {
        let labels = vec![NOISE; points.len()];
        Self {
            points,
            labels,
            k: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn has_ground_truth(&self) -> bool {
        self.k > 0
    }

    /// Restriction to `indices`. Clusters that lose all their points keep
    /// their label slot, so `k` is unchanged.
    pub fn subset(&self, indices: &[usize]) -> LabeledPointCloud {
        LabeledPointCloud {
            points: self.points.subset(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            k: self.k,
        }
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k + 1];
        for &l in &self.labels {
            sizes[l as usize] += 1;
        }
        sizes
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetKind {
    FourLines,
    NineGaussians,
    ConcentricSpheres,
    ParallelPlanes,
    /// Four edges of a rectangular prism with uniform interior noise.
    Prism,
}

impl DatasetKind {
    pub const ALL: [DatasetKind; 5] = [
        DatasetKind::FourLines,
        DatasetKind::NineGaussians,
        DatasetKind::ConcentricSpheres,
        DatasetKind::ParallelPlanes,
        DatasetKind::Prism,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DatasetKind::FourLines => "four-lines",
            DatasetKind::NineGaussians => "nine-gaussians",
            DatasetKind::ConcentricSpheres => "concentric-spheres",
            DatasetKind::ParallelPlanes => "parallel-planes",
            DatasetKind::Prism => "prism",
        }
    }

    fn cluster_count(self) -> usize {
        match self {
            DatasetKind::FourLines | DatasetKind::Prism => 4,
            DatasetKind::NineGaussians => 9,
            DatasetKind::ConcentricSpheres => 3,
            DatasetKind::ParallelPlanes => 5,
        }
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DatasetKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownKind(s.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: DatasetKind,
    /// Per-cluster sizes before scaling.
    pub sizes: Vec<usize>,
    /// Noise count before scaling.
    pub noise: usize,
    /// Ambient dimension. Only concentric spheres accept a value other than
    /// the kind's native dimension.
    pub dim: usize,
    pub seed: u64,
    /// Multiplies every size and the noise count (rounded, at least 1 per cluster).
    pub scale: f64,
}

impl GeneratorSpec {
    /// Full-size defaults for `kind`.
    pub fn new(kind: DatasetKind) -> Self {
        let (sizes, noise, dim) = match kind {
            DatasetKind::FourLines => (vec![40_000, 40_000, 8_000, 8_000], 20_000, 2),
            DatasetKind::NineGaussians => (vec![50; 9], 50, 2),
            DatasetKind::ConcentricSpheres => (vec![250, 563, 1000], 2000, 1000),
            DatasetKind::ParallelPlanes => (vec![1000; 5], 200_000, 25),
            DatasetKind::Prism => (vec![3000; 4], 3000, 3),
        };
        Self {
            kind,
            sizes,
            noise,
            dim,
            seed: 0,
            scale: 1.0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn scaled_sizes(&self) -> Vec<usize> {
        self.sizes
            .iter()
            .map(|&s| ((s as f64 * self.scale).round() as usize).max(1))
            .collect()
    }

    pub fn scaled_noise(&self) -> usize {
        (self.noise as f64 * self.scale).round() as usize
    }

    fn validate(&self) -> Result<()> {
        if self.sizes.len() != self.kind.cluster_count() {
            return Err(invalid(format!(
                "{} expects {} cluster sizes, got {}",
                self.kind,
                self.kind.cluster_count(),
                self.sizes.len()
            )));
        }
        if self.sizes.contains(&0) {
            return Err(invalid("cluster sizes must be positive"));
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(invalid("scale multiplier must be positive"));
        }
        let native = GeneratorSpec::new(self.kind).dim;
        match self.kind {
            DatasetKind::ConcentricSpheres if self.dim < 3 => {
                Err(invalid("concentric spheres need at least 3 dimensions"))
            }
            DatasetKind::ConcentricSpheres => Ok(()),
            _ if self.dim != native => Err(invalid(format!(
                "{} is generated in dimension {native}",
                self.kind
            ))),
            _ => Ok(()),
        }
    }
}

/// Four Lines layout: `(start, end)` of each segment. The long pair and the
/// short pair are stacked with vertical gaps of 0.9001, the minimal
/// cluster separation.
pub const FOUR_LINES_SEGMENTS: [([f64; 2], [f64; 2]); 4] = [
    ([0.0, 0.5], [4.0, 0.5]),
    ([0.0, 1.4001], [4.0, 1.4001]),
    ([0.5, 2.3002], [1.3, 2.3002]),
    ([2.7, 2.3002], [3.5, 2.3002]),
];
pub const FOUR_LINES_NOISE_BOX: ([f64; 2], [f64; 2]) = ([-0.25, 0.0], [4.25, 2.8]);

/// Nine Gaussians: centres on a perturbed 3x3 grid with their variances.
pub const NINE_GAUSSIANS: [([f64; 2], f64); 9] = [
    ([0.00, 0.00], 0.01),
    ([1.05, -0.04], 0.04),
    ([2.02, 0.03], 0.01),
    ([-0.03, 0.98], 0.04),
    ([1.00, 1.02], 0.01),
    ([1.97, 0.96], 0.04),
    ([0.04, 2.01], 0.01),
    ([0.98, 1.97], 0.04),
    ([2.03, 2.04], 0.01),
];
pub const NINE_GAUSSIANS_NOISE_BOX: ([f64; 2], [f64; 2]) = ([-0.75, -0.75], [2.75, 2.75]);

pub const SPHERE_RADII: [f64; 3] = [1.0, 1.5, 2.0];

/// Parallel planes: intrinsic dimension and the per-plane step applied to the
/// two separating coordinates (consecutive planes are 0.25 * sqrt(2) apart).
pub const PLANES_INTRINSIC_DIM: usize = 5;
pub const PLANES_STEP: f64 = 0.25;

/// Prism box and the (y, z) positions of its four clustered edges.
pub const PRISM_BOX: [f64; 3] = [1.0, 0.5, 0.5];
pub const PRISM_EDGES: [[f64; 2]; 4] = [[0.0, 0.0], [0.5, 0.0], [0.0, 0.5], [0.5, 0.5]];

pub fn generate(spec: &GeneratorSpec) -> Result<LabeledPointCloud> {
    spec.validate()?;
    let sizes = spec.scaled_sizes();
    let noise = spec.scaled_noise();
    let dim = spec.dim;
    let total = sizes.iter().sum::<usize>() + noise;
    let mut coords = Vec::with_capacity(total * dim);
    let mut labels = Vec::with_capacity(total);

    for (l, &n_l) in sizes.iter().enumerate() {
        let mut rng = stream(spec.seed, l as u64 + 1);
        for _ in 0..n_l {
            sample_cluster(spec.kind, l, dim, &mut rng, &mut coords);
            labels.push(l as Label + 1);
        }
    }
    let mut rng = stream(spec.seed, 0);
    for _ in 0..noise {
        sample_noise(spec.kind, dim, &mut rng, &mut coords);
        labels.push(NOISE);
    }
    LabeledPointCloud::new(PointCloud::new(coords, dim)?, labels, sizes.len())
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn uniform_box(lo: &[f64], hi: &[f64], rng: &mut ChaCha8Rng, out: &mut Vec<f64>) {
    for (a, b) in lo.iter().zip(hi) {
        out.push(rng.random_range(*a..*b));
    }
}

fn sample_cluster(kind: DatasetKind, l: usize, dim: usize, rng: &mut ChaCha8Rng, out: &mut Vec<f64>) {
    match kind {
        DatasetKind::FourLines => {
            let (a, b) = FOUR_LINES_SEGMENTS[l];
            let u: f64 = rng.random();
            out.push(a[0] + u * (b[0] - a[0]));
            out.push(a[1] + u * (b[1] - a[1]));
        }
        DatasetKind::NineGaussians => {
            let (centre, var) = NINE_GAUSSIANS[l];
            let normal = Normal::new(0.0, var.sqrt()).expect("positive variance");
            out.push(centre[0] + normal.sample(rng));
            out.push(centre[1] + normal.sample(rng));
        }
        DatasetKind::ConcentricSpheres => {
            let g: [f64; 3] = [
                StandardNormal.sample(rng),
                StandardNormal.sample(rng),
                StandardNormal.sample(rng),
            ];
            let norm = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
            let r = SPHERE_RADII[l];
            out.extend(g.iter().map(|x| r * x / norm));
            out.extend(std::iter::repeat_n(0.0, dim - 3));
        }
        DatasetKind::ParallelPlanes => {
            for _ in 0..PLANES_INTRINSIC_DIM {
                out.push(rng.random::<f64>());
            }
            let offset = PLANES_STEP * l as f64;
            out.push(offset);
            out.push(offset);
            out.extend(std::iter::repeat_n(0.5, dim - PLANES_INTRINSIC_DIM - 2));
        }
        DatasetKind::Prism => {
            let [y, z] = PRISM_EDGES[l];
            out.push(rng.random::<f64>() * PRISM_BOX[0]);
            out.push(y);
            out.push(z);
        }
    }
}

fn sample_noise(kind: DatasetKind, dim: usize, rng: &mut ChaCha8Rng, out: &mut Vec<f64>) {
    match kind {
        DatasetKind::FourLines => {
            let (lo, hi) = FOUR_LINES_NOISE_BOX;
            uniform_box(&lo, &hi, rng, out);
        }
        DatasetKind::NineGaussians => {
            let (lo, hi) = NINE_GAUSSIANS_NOISE_BOX;
            uniform_box(&lo, &hi, rng, out);
        }
        DatasetKind::ConcentricSpheres => {
            for _ in 0..dim {
                out.push(rng.random_range(-2.0..2.0));
            }
        }
        DatasetKind::ParallelPlanes => {
            for _ in 0..dim {
                out.push(rng.random::<f64>());
            }
        }
        DatasetKind::Prism => uniform_box(&[0.0; 3], &PRISM_BOX, rng, out),
    }
}

/// Reads comma-separated points, one per row, with an optional header.
///
/// `label_column` selects a column by header name or zero-based index; its
/// values are integers with 0 meaning noise, and positive values are
/// re-numbered densely to `1..=K` in ascending order. Without a label column
/// every point is noise.
pub fn load_csv(path: impl AsRef<Path>, label_column: Option<&str>) -> Result<LabeledPointCloud> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path.as_ref())
        .map_err(csv_error)?;
    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(csv_error)?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        records.push(rec);
    }
    if records.is_empty() {
        return Err(invalid("empty input file"));
    }
    let header_present = records[0].iter().any(|f| f.parse::<f64>().is_err());
    let header = header_present.then(|| records.remove(0));
    if records.is_empty() {
        return Err(invalid("input file has a header but no data rows"));
    }
    let width = records[0].len();
    let label_idx = match label_column {
        None => None,
        Some(name) => Some(
            header
                .as_ref()
                .and_then(|h| h.iter().position(|f| f == name))
                .or_else(|| name.parse::<usize>().ok())
                .filter(|&i| i < width)
                .ok_or_else(|| invalid(format!("no label column `{name}`")))?,
        ),
    };
    let first_data_row = if header.is_some() { 2 } else { 1 };
    let dim = width - usize::from(label_idx.is_some());
    if dim == 0 {
        return Err(invalid("no coordinate columns"));
    }
    let mut coords = Vec::with_capacity(records.len() * dim);
    let mut raw_labels = Vec::with_capacity(records.len());
    for (r, rec) in records.iter().enumerate() {
        let row = r + first_data_row;
        if rec.len() != width {
            return Err(Error::Parse {
                row,
                column: rec.len().min(width) + 1,
                message: format!("expected {width} fields, found {}", rec.len()),
            });
        }
        for (c, field) in rec.iter().enumerate() {
            if Some(c) == label_idx {
                let label = field.parse::<i64>().map_err(|_| Error::Parse {
                    row,
                    column: c + 1,
                    message: format!("label `{field}` is not an integer"),
                })?;
                if label < 0 {
                    return Err(Error::Parse {
                        row,
                        column: c + 1,
                        message: "labels must be non-negative".into(),
                    });
                }
                raw_labels.push(label as u64);
            } else {
                let v = field.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                    Error::Parse {
                        row,
                        column: c + 1,
                        message: format!("`{field}` is not a finite number"),
                    }
                })?;
                coords.push(v);
            }
        }
    }
    let points = PointCloud::new(coords, dim)?;
    if label_idx.is_none() {
        return Ok(LabeledPointCloud::unlabeled(points));
    }
    let mut distinct: Vec<u64> = raw_labels.iter().copied().filter(|&l| l != 0).collect();
    distinct.sort_unstable();
    distinct.dedup();
    let labels = raw_labels
        .iter()
        .map(|&l| match l {
            0 => NOISE,
            l => distinct.binary_search(&l).expect("present") as Label + 1,
        })
        .collect();
    LabeledPointCloud::new(points, labels, distinct.len())
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => invalid(format!("{other:?}")),
    }
}

/// Writes points as headerless CSV with full round-trip precision.
pub fn save_points(points: &PointCloud, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::new();
    for row in points.rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// One integer label per line, noise written as 0.
pub fn save_labels(labels: &[Label], path: impl AsRef<Path>) -> Result<()> {
    if labels.is_empty() {
        return Err(invalid("no labels to write"));
    }
    let mut out = String::with_capacity(labels.len() * 3);
    for l in labels {
        out.push_str(&l.to_string());
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<Vec<Label>> {
    let text = std::fs::read_to_string(path)?;
    let mut labels = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        labels.push(line.parse::<Label>().map_err(|_| Error::Parse {
            row: i + 1,
            column: 1,
            message: format!("`{line}` is not a non-negative integer label"),
        })?);
    }
    if labels.is_empty() {
        return Err(invalid("labels file is empty"));
    }
    Ok(labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn nine_gaussians_counts() {
        let data = generate(&GeneratorSpec::new(DatasetKind::NineGaussians).with_seed(7)).unwrap();
        assert_eq!(data.len(), 500);
        assert_eq!(data.points.dim(), 2);
        let sizes = data.cluster_sizes();
        assert_eq!(sizes[0], 50);
        assert!(sizes[1..].iter().all(|&s| s == 50));
        assert_eq!(data.k, 9);
    }

    #[test]
    fn concentric_spheres_defaults() {
        let spec = GeneratorSpec::new(DatasetKind::ConcentricSpheres);
        assert_eq!(spec.scaled_sizes(), vec![250, 563, 1000]);
        assert_eq!(spec.scaled_noise(), 2000);
        assert_eq!(spec.dim, 1000);
        // a smaller ambient dimension keeps the test quick
        let spec = GeneratorSpec { dim: 20, ..spec };
        let data = generate(&spec).unwrap();
        for (i, &l) in data.labels.iter().enumerate() {
            if l != NOISE {
                let r = data.points.point(i).iter().map(|x| x * x).sum::<f64>().sqrt();
                assert!((r - SPHERE_RADII[l as usize - 1]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn four_lines_scaled_counts_and_geometry() {
        let spec = GeneratorSpec::new(DatasetKind::FourLines).with_scale(1.0 / 20.0).with_seed(3);
        let data = generate(&spec).unwrap();
        assert_eq!(data.cluster_sizes(), vec![1000, 2000, 2000, 400, 400]);
        for (l, (a, b)) in FOUR_LINES_SEGMENTS.iter().enumerate() {
            let (mut lo, mut hi) = ([f64::MAX; 2], [f64::MIN; 2]);
            for (i, &lab) in data.labels.iter().enumerate() {
                if lab as usize == l + 1 {
                    let p = data.points.point(i);
                    for d in 0..2 {
                        lo[d] = lo[d].min(p[d]);
                        hi[d] = hi[d].max(p[d]);
                    }
                }
            }
            for d in 0..2 {
                assert!(lo[d] >= a[d].min(b[d]) - 1e-12 && hi[d] <= a[d].max(b[d]) + 1e-12);
            }
            // nearly the whole segment is covered
            assert!(hi[0] - lo[0] > 0.95 * (b[0] - a[0]));
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = GeneratorSpec::new(DatasetKind::ParallelPlanes).with_scale(0.01).with_seed(11);
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        let other = generate(&spec.clone().with_seed(12)).unwrap();
        assert_ne!(generate(&spec).unwrap().points, other.points);
    }

    #[test]
    fn rejects_bad_specs() {
        let mut spec = GeneratorSpec::new(DatasetKind::FourLines);
        spec.sizes[2] = 0;
        assert!(generate(&spec).is_err());
        assert!(matches!("five-lines".parse::<DatasetKind>(), Err(Error::UnknownKind(_))));
        let spec = GeneratorSpec {
            sizes: vec![10; 3],
            ..GeneratorSpec::new(DatasetKind::NineGaussians)
        };
        assert!(generate(&spec).is_err());
    }

    #[test]
    fn csv_basic_parse() {
        let f = write_tmp("1,2\n3,4\n5,6\n");
        let data = load_csv(f.path(), None).unwrap();
        assert_eq!(data.len(), 3);
        assert_eq!(data.points.dim(), 2);
        assert!(!data.has_ground_truth());
    }

    #[test]
    fn csv_label_column() {
        let f = write_tmp("x,y,label\n0,0,1\n1,0,1\n5,5,2\n");
        let data = load_csv(f.path(), Some("label")).unwrap();
        assert_eq!(data.k, 2);
        assert_eq!(data.labels, vec![1, 1, 2]);
        assert_eq!(data.points.dim(), 2);
    }

    #[test]
    fn csv_errors_name_the_cell() {
        let f = write_tmp("1,2\n3,abc\n");
        match load_csv(f.path(), None) {
            Err(Error::Parse { row, column, .. }) => assert_eq!((row, column), (2, 2)),
            other => panic!("unexpected {other:?}"),
        }
        let f = write_tmp("1,2\n3\n");
        assert!(matches!(load_csv(f.path(), None), Err(Error::Parse { row: 2, .. })));
        let f = write_tmp("");
        assert!(load_csv(f.path(), None).is_err());
    }

    #[test]
    fn labels_file_format() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.csv");
        save_labels(&[1, 2, NOISE], &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "1\n2\n0\n");
        assert_eq!(load_labels(&path).unwrap(), vec![1, 2, 0]);
        assert!(save_labels(&[], &path).is_err());
    }
}
