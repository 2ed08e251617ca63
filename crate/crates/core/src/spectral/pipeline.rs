//! End-to-end clustering: LLPD spectral clustering and the two baselines
//! (Euclidean spectral clustering and K-means), all on LLPD-denoised data.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use log::{info, warn};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::eigen::{dense_smallest, dense_smallest_values, EigenConfig};
use super::embed::{cluster_embedding, embed, kmeans, AssignMethod, KMEANS_RESTARTS};
use super::operator::{dense_laplacian, KernelConfig, LlpdLaplacianOperator};
use super::sweep::{estimate_k_sigma, sigma_for_k, sigma_sweep, SigmaGridSpec, SigmaSweep};
use crate::bounds::{dendrogram_diagnostics, zeta_n};
use crate::dataset::{Label, LabeledPointCloud, NOISE};
use crate::denoise::{denoise, DenoiseConfig, DenoiseReport, Denoised};
use crate::error::{invalid, Error, Result};
use crate::exec::{map_slice, Execution};
use crate::io::write_atomic;
use crate::llpd::{LadderMode, LlpdIndex};
use crate::metrics::accuracy_report;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Largest denoised sample the dense Euclidean baseline accepts.
pub const EUCLIDEAN_DENSE_CUTOFF: usize = 2500;

/// `lambda_2` above this at the selected scale raises `single_cluster`.
pub const SINGLE_CLUSTER_LAMBDA_2: f64 = 0.1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Llpd,
    Euclidean,
    Kmeans,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Llpd => "llpd",
            Method::Euclidean => "euclidean",
            Method::Kmeans => "kmeans",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "llpd" => Ok(Method::Llpd),
            "euclidean" => Ok(Method::Euclidean),
            "kmeans" => Ok(Method::Kmeans),
            other => Err(invalid(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ClusterConfig {
    pub k_euc: usize,
    #[serde(rename = "kNoise")]
    pub k_noise: usize,
    pub m: usize,
    pub ladder: LadderMode,
    pub sigma: SigmaGridSpec,
    /// Eigenvalues per scale in the sweep.
    pub kmax: usize,
    pub theta: Option<f64>,
    /// Fixed cluster count; skips estimation.
    pub k: Option<usize>,
    pub assign: AssignMethod,
    pub normalize_rows: bool,
    pub seed: u64,
    pub exec: Execution,
    #[serde(skip)]
    pub sweep_eigen: EigenConfig,
    #[serde(skip)]
    pub final_eigen: EigenConfig,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            k_euc: 20,
            k_noise: 20,
            m: 20,
            ladder: LadderMode::Exp,
            sigma: SigmaGridSpec::default(),
            kmax: 12,
            theta: None,
            k: None,
            assign: AssignMethod::Kmeans,
            normalize_rows: true,
            seed: 0,
            exec: Execution::Parallel,
            sweep_eigen: EigenConfig::sweep(),
            final_eigen: EigenConfig {
                tol: 1e-8,
                max_iter: 2000,
                strict: false,
                ..EigenConfig::default()
            },
        }
    }
}

impl ClusterConfig {
    fn denoise_config(&self) -> DenoiseConfig {
        DenoiseConfig {
            k_noise: self.k_noise,
            theta: self.theta,
            k_euc: self.k_euc,
            ladder: self.ladder,
            m: self.m,
            exec: self.exec,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PipelineDiagnostics {
    /// Largest within-cluster approximate LLPD before denoising.
    pub eps_in: Option<f64>,
    /// Smallest between-cluster approximate LLPD before denoising.
    pub eps_btw: Option<f64>,
    pub zeta_n: Option<f64>,
    /// `lambda_2` at the selected scale.
    pub lambda_2: Option<f64>,
    /// `lambda_{K+1} - lambda_K` at the selected scale.
    pub eigengap: Option<f64>,
    /// `lambda_2` at the selected scale is far from 0, so the data may not
    /// split into well separated clusters at all.
    pub single_cluster: bool,
    /// `None` when no eigensolver ran.
    pub eigensolver_converged: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClusterReport {
    pub schema_version: u32,
    pub method: Method,
    pub params: ClusterConfig,
    #[serde(rename = "K_hat")]
    pub k_hat: Option<usize>,
    /// Cluster count of the emitted labels.
    #[serde(rename = "K")]
    pub k_used: usize,
    pub sigma_hat: Option<f64>,
    pub theta: f64,
    pub n: usize,
    #[serde(rename = "N")]
    pub n_kept: usize,
    /// Accuracy on the labeled survivors with the true cluster count.
    pub oa: Option<f64>,
    pub aa: Option<f64>,
    pub kappa: Option<f64>,
    /// Accuracy of the emitted labels, when their count differs from the truth.
    pub oa_emitted: Option<f64>,
    pub diagnostics: PipelineDiagnostics,
    pub timings_ms: BTreeMap<String, f64>,
}

impl ClusterReport {
    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path, &serde_json::to_vec_pretty(self)?)
    }
}

#[derive(Clone, Debug)]
pub struct ClusterOutcome {
    /// One label per input point; removed points are [`NOISE`].
    pub labels: Vec<Label>,
    pub report: ClusterReport,
    pub sweep: Option<SigmaSweep>,
    pub denoise: DenoiseReport,
}

struct Timer(BTreeMap<String, f64>, Instant);

impl Timer {
    fn new() -> Self {
        Self(BTreeMap::new(), Instant::now())
    }

    fn lap(&mut self, name: &str) {
        let now = Instant::now();
        self.0.insert(name.to_string(), (now - self.1).as_secs_f64() * 1e3);
        self.1 = now;
    }

    fn finish(mut self) -> BTreeMap<String, f64> {
        let total = self.0.values().sum();
        self.0.insert("total".into(), total);
        self.0
    }
}

/// Builds the LLPD structure on all points and denoises.
fn prepare(data: &LabeledPointCloud, config: &ClusterConfig, timer: &mut Timer) -> Result<(LlpdIndex, Denoised)> {
    let index = LlpdIndex::build(&data.points, config.k_euc, config.ladder, config.m, config.exec)?;
    timer.lap("graph");
    let den = denoise(data, &index, &config.denoise_config())?;
    info!("kept {} of {} points (theta = {})", den.report.n_kept, den.report.n, den.report.theta);
    timer.lap("denoise");
    Ok((index, den))
}

/// Chooses `(K, sigma)` from the sweep, honoring a fixed `K`.
fn select(sweep: &SigmaSweep, fixed: Option<usize>) -> Result<(Option<usize>, usize, f64)> {
    match fixed {
        Some(k) => Ok((None, k, sigma_for_k(sweep, k)?)),
        None => {
            let (k, s) = estimate_k_sigma(sweep)?;
            Ok((Some(k), k, s))
        }
    }
}

fn sweep_kmax(config: &ClusterConfig, data: &LabeledPointCloud) -> usize {
    let mut kmax = config.kmax.max(2);
    if let Some(k) = config.k {
        kmax = kmax.max(k + 1);
    }
    if data.has_ground_truth() {
        kmax = kmax.max(data.k + 1);
    }
    kmax
}

/// Labels from the leading eigenvectors, at the emitted count and, when it
/// differs, at the true count for scoring.
fn label_and_score(
    vectors: &DMatrix<f64>,
    k_used: usize,
    survivors: &LabeledPointCloud,
    config: &ClusterConfig,
) -> Result<(Vec<Label>, Scores)> {
    let assign = |k: usize| -> Result<Vec<Label>> {
        let emb = embed(vectors, k, config.normalize_rows)?;
        cluster_embedding(&emb, k, config.assign, config.seed)
    };
    let labels = assign(k_used)?;
    let scores = if survivors.has_ground_truth() {
        if survivors.k == k_used {
            Scores::from_labels(&survivors.labels, &labels, None)?
        } else {
            let given_k = assign(survivors.k.min(vectors.ncols()))?;
            Scores::from_labels(&survivors.labels, &given_k, Some(&labels))?
        }
    } else {
        Scores::default()
    };
    Ok((labels, scores))
}

#[derive(Default)]
struct Scores {
    oa: Option<f64>,
    aa: Option<f64>,
    kappa: Option<f64>,
    oa_emitted: Option<f64>,
}

impl Scores {
    fn from_labels(truth: &[Label], given_k: &[Label], emitted: Option<&[Label]>) -> Result<Self> {
        let r = accuracy_report(truth, given_k)?;
        let oa_emitted = emitted.map(|e| accuracy_report(truth, e).map(|r| r.oa)).transpose()?;
        Ok(Self {
            oa: Some(r.oa),
            aa: Some(r.aa),
            kappa: Some(r.kappa),
            oa_emitted,
        })
    }
}

fn expand_labels(n: usize, kept: &[usize], labels: &[Label]) -> Vec<Label> {
    let mut full = vec![NOISE; n];
    for (&i, &l) in kept.iter().zip(labels) {
        full[i] = l;
    }
    full
}

fn spectral_diagnostics(values: &[f64], k_used: usize, diag: &mut PipelineDiagnostics) {
    diag.lambda_2 = values.get(1).copied();
    if let (Some(a), Some(b)) = (values.get(k_used - 1), values.get(k_used)) {
        diag.eigengap = Some(b - a);
    }
    diag.single_cluster = diag.lambda_2.is_some_and(|l| l > SINGLE_CLUSTER_LAMBDA_2);
    if diag.single_cluster {
        warn!("lambda_2 = {:.3} at the selected scale; the data may be a single cluster", diag.lambda_2.unwrap_or(0.0));
    }
}

fn ground_truth_diagnostics(data: &LabeledPointCloud, index: &LlpdIndex, den: &Denoised) -> PipelineDiagnostics {
    let mut diag = PipelineDiagnostics::default();
    if data.has_ground_truth() {
        let (eps_in, eps_btw) = dendrogram_diagnostics(&data.labels, data.k, &index.dendrogram, &index.ladder);
        diag.eps_in = Some(eps_in);
        diag.eps_btw = eps_btw;
        diag.zeta_n = zeta_n(&den.data.labels, den.data.k, &den.index.dendrogram, &den.index.ladder, den.report.theta);
    }
    diag
}

/// LLPD spectral clustering: kNN graph, multiscale LLPD, denoising, a sweep
/// over kernel scales, eigengap selection of `(K, sigma)`, embedding and
/// K-means on the embedding.
pub fn llpd_spectral_clustering(data: &LabeledPointCloud, config: &ClusterConfig) -> Result<ClusterOutcome> {
    let mut timer = Timer::new();
    let (index, den) = prepare(data, config, &mut timer)?;
    let sigmas = config.sigma.resolve(&den.index.ladder, &den.index.dendrogram)?;
    let kmax = sweep_kmax(config, data);
    let sweep = sigma_sweep(&den.index.dendrogram, &den.index.ladder, &sigmas, kmax, &config.sweep_eigen, config.exec)?;
    let (k_hat, k_used, sigma_hat) = select(&sweep, config.k)?;
    timer.lap("sweep");

    let op = LlpdLaplacianOperator::new(&den.index.dendrogram, &den.index.ladder, KernelConfig::new(sigma_hat)?)?;
    let need = k_used.max(if data.has_ground_truth() { data.k } else { 1 }) + 1;
    let spectrum = op.eigs(need, &config.final_eigen)?;
    if !spectrum.converged {
        warn!("eigensolver stopped at residual {:.2e} after {} iterations", spectrum.residual, spectrum.iterations);
    }
    timer.lap("eigs");
    let (labels, scores) = label_and_score(&spectrum.vectors, k_used, &den.data, config)?;
    timer.lap("assign");

    let mut diagnostics = ground_truth_diagnostics(data, &index, &den);
    diagnostics.eigensolver_converged = Some(spectrum.converged);
    spectral_diagnostics(&spectrum.values, k_used, &mut diagnostics);
    let report = ClusterReport {
        schema_version: REPORT_SCHEMA_VERSION,
        method: Method::Llpd,
        params: config.clone(),
        k_hat,
        k_used,
        sigma_hat: Some(sigma_hat),
        theta: den.report.theta,
        n: data.len(),
        n_kept: den.report.n_kept,
        oa: scores.oa,
        aa: scores.aa,
        kappa: scores.kappa,
        oa_emitted: scores.oa_emitted,
        diagnostics,
        timings_ms: timer.finish(),
    };
    Ok(ClusterOutcome {
        labels: expand_labels(data.len(), &den.report.kept, &labels),
        report,
        sweep: Some(sweep),
        denoise: den.report,
    })
}

/// Dense Gaussian kernel on Euclidean distances (diagonal 1).
fn euclidean_kernel(sq: &DMatrix<f64>, sigma: f64) -> DMatrix<f64> {
    sq.map(|d2| (-d2 / (sigma * sigma)).exp())
}

/// Spectral clustering with Euclidean distances in the kernel, on the
/// LLPD-denoised points, with the same selection of `(K, sigma)`. Dense;
/// refuses more than [`EUCLIDEAN_DENSE_CUTOFF`] survivors.
pub fn euclidean_spectral_clustering(data: &LabeledPointCloud, config: &ClusterConfig) -> Result<ClusterOutcome> {
    let mut timer = Timer::new();
    let (index, den) = prepare(data, config, &mut timer)?;
    let n = den.data.len();
    if n > EUCLIDEAN_DENSE_CUTOFF {
        return Err(Error::TooLarge {
            n,
            cutoff: EUCLIDEAN_DENSE_CUTOFF,
        });
    }
    let pts = &den.data.points;
    let sq = DMatrix::from_fn(n, n, |i, j| pts.sq_dist(i, j));
    let mut sigmas = config.sigma.resolve(&den.index.ladder, &den.index.dendrogram)?;
    sigmas.sort_by(f64::total_cmp);
    let kmax = sweep_kmax(config, data).min(n);
    let eigenvalues = map_slice(config.exec, &sigmas, |&s| dense_smallest_values(&dense_laplacian(&euclidean_kernel(&sq, s)), kmax));
    let sweep = SigmaSweep { sigmas, eigenvalues };
    let (k_hat, k_used, sigma_hat) = select(&sweep, config.k)?;
    timer.lap("sweep");

    let need = k_used.max(if data.has_ground_truth() { data.k } else { 1 }) + 1;
    let pairs = dense_smallest(&dense_laplacian(&euclidean_kernel(&sq, sigma_hat)), need.min(n));
    timer.lap("eigs");
    let (labels, scores) = label_and_score(&pairs.vectors, k_used, &den.data, config)?;
    timer.lap("assign");

    let mut diagnostics = ground_truth_diagnostics(data, &index, &den);
    diagnostics.eigensolver_converged = Some(true);
    spectral_diagnostics(&pairs.values, k_used, &mut diagnostics);
    let report = ClusterReport {
        schema_version: REPORT_SCHEMA_VERSION,
        method: Method::Euclidean,
        params: config.clone(),
        k_hat,
        k_used,
        sigma_hat: Some(sigma_hat),
        theta: den.report.theta,
        n: data.len(),
        n_kept: n,
        oa: scores.oa,
        aa: scores.aa,
        kappa: scores.kappa,
        oa_emitted: scores.oa_emitted,
        diagnostics,
        timings_ms: timer.finish(),
    };
    Ok(ClusterOutcome {
        labels: expand_labels(data.len(), &den.report.kept, &labels),
        report,
        sweep: Some(sweep),
        denoise: den.report,
    })
}

/// K-means on the coordinates of the LLPD-denoised points. The cluster count
/// is the fixed `K` or, failing that, the true count.
pub fn kmeans_baseline(data: &LabeledPointCloud, config: &ClusterConfig) -> Result<ClusterOutcome> {
    let k = match config.k {
        Some(k) => k,
        None if data.has_ground_truth() => data.k,
        None => return Err(invalid("k-means needs a cluster count")),
    };
    let mut timer = Timer::new();
    let (index, den) = prepare(data, config, &mut timer)?;
    let result = kmeans(&den.data.points, k, KMEANS_RESTARTS, config.seed)?;
    timer.lap("assign");
    let scores = if den.data.has_ground_truth() {
        Scores::from_labels(&den.data.labels, &result.labels, None)?
    } else {
        Scores::default()
    };
    let report = ClusterReport {
        schema_version: REPORT_SCHEMA_VERSION,
        method: Method::Kmeans,
        params: config.clone(),
        k_hat: None,
        k_used: k,
        sigma_hat: None,
        theta: den.report.theta,
        n: data.len(),
        n_kept: den.report.n_kept,
        oa: scores.oa,
        aa: scores.aa,
        kappa: scores.kappa,
        oa_emitted: None,
        diagnostics: ground_truth_diagnostics(data, &index, &den),
        timings_ms: timer.finish(),
    };
    Ok(ClusterOutcome {
        labels: expand_labels(data.len(), &den.report.kept, &result.labels),
        report,
        sweep: None,
        denoise: den.report,
    })
}

pub fn run(method: Method, data: &LabeledPointCloud, config: &ClusterConfig) -> Result<ClusterOutcome> {
    match method {
        Method::Llpd => llpd_spectral_clustering(data, config),
        Method::Euclidean => euclidean_spectral_clustering(data, config),
        Method::Kmeans => kmeans_baseline(data, config),
    }
}
