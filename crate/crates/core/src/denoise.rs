//! Removal of low-density points: a point is kept when the LLPD to its
//! `kNoise`-th LLPD-nearest neighbor is at most a threshold `theta`.

use std::path::Path;

use log::warn;
use serde::Serialize;

use crate::dataset::LabeledPointCloud;
use crate::error::{invalid, Error, Result};
use crate::exec::Execution;
use crate::io::write_atomic;
use crate::llpd::{knn_llpd_radius, LadderMode, LlpdIndex};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DenoiseReport {
    #[serde(skip)]
    pub beta: Vec<f64>,
    pub theta: f64,
    #[serde(skip)]
    pub kept: Vec<usize>,
    pub removed_indices: Vec<usize>,
    #[serde(rename = "kNoise")]
    pub k_noise: usize,
    pub n: usize,
    #[serde(rename = "N")]
    pub n_kept: usize,
}

impl DenoiseReport {
    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path, &serde_json::to_vec_pretty(self)?)
    }

    /// Sorted beta values, one `rank,beta` row each.
    pub fn save_sorted_beta(&self, path: impl AsRef<Path>) -> Result<()> {
        save_sorted_beta(&self.beta, path)
    }
}

pub fn save_sorted_beta(beta: &[f64], path: impl AsRef<Path>) -> Result<()> {
    let mut sorted = beta.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut out = String::from("rank,beta\n");
    for (r, b) in sorted.iter().enumerate() {
        out.push_str(&format!("{r},{b:?}\n"));
    }
    write_atomic(path, out.as_bytes())
}

/// Fraction of the variance of `log beta` a two-class split must explain
/// for the split to be used as the threshold.
pub const BIMODAL_SPLIT: f64 = 0.8;

/// Elbow of the sorted beta curve.
///
/// When cluster points and noise form two populations in `log beta`, the
/// threshold is the top of the lower one: the Otsu split over the distinct
/// beta values, used when it explains at least [`BIMODAL_SPLIT`] of the
/// variance. Otherwise it is the knee of the sorted curve, the point furthest
/// below the chord from the smallest to the largest value with both axes
/// scaled to `[0, 1]`.
pub fn select_theta(beta: &[f64]) -> Result<f64> {
    let n = beta.len();
    if n < 3 {
        return Err(invalid("selecting a threshold needs at least 3 values"));
    }
    if beta.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
        return Err(invalid("beta values must be positive and finite"));
    }
    let mut sorted = beta.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (min, max) = (sorted[0], sorted[n - 1]);
    if min == max {
        warn!("constant beta curve; nothing is removed");
        return Ok(max);
    }
    if let Some((theta, explained)) = otsu_log_split(&sorted) {
        if explained >= BIMODAL_SPLIT {
            return Ok(theta);
        }
    }
    let scale = (n - 1) as f64;
    let below = |i: usize| i as f64 / scale - (sorted[i] - min) / (max - min);
    let knee = (0..n).max_by(|&a, &b| below(a).total_cmp(&below(b)).then(b.cmp(&a))).expect("n >= 3");
    if below(knee) <= 0.0 {
        warn!("no elbow in the beta curve; nothing is removed");
        return Ok(max);
    }
    Ok(sorted[knee])
}

/// Two-class split of `log beta` maximising the between-class variance, over
/// cuts between distinct values. Returns the largest value of the lower class
/// and the fraction of the total variance the split explains.
fn otsu_log_split(sorted: &[f64]) -> Option<(f64, f64)> {
    let mut levels: Vec<(f64, f64)> = Vec::new();
    for &b in sorted {
        match levels.last_mut() {
            Some((v, c)) if *v == b => *c += 1.0,
            _ => levels.push((b, 1.0)),
        }
    }
    let n = sorted.len() as f64;
    let logs: Vec<f64> = sorted.iter().map(|b| b.ln()).collect();
    let mean = logs.iter().sum::<f64>() / n;
    let total_var = logs.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / n;
    if total_var <= 0.0 {
        return None;
    }
    let total: f64 = logs.iter().sum();
    let (mut w, mut s) = (0.0, 0.0);
    let mut best: Option<(f64, f64)> = None;
    for &(v, c) in &levels[..levels.len() - 1] {
        w += c;
        s += v.ln() * c;
        let diff = s / w - (total - s) / (n - w);
        let between = w * (n - w) / (n * n) * diff * diff;
        if best.is_none_or(|(_, b)| between > b) {
            best = Some((v, between));
        }
    }
    best.map(|(v, between)| (v, between / total_var))
}

/// Indices with `beta <= theta`, in increasing order.
pub fn kept_indices(beta: &[f64], theta: f64) -> Vec<usize> {
    (0..beta.len()).filter(|&i| beta[i] <= theta).collect()
}

#[derive(Clone, Debug)]
pub struct DenoiseConfig {
    pub k_noise: usize,
    /// Fixed threshold; chosen by [`select_theta`] when absent.
    pub theta: Option<f64>,
    pub k_euc: usize,
    pub ladder: LadderMode,
    pub m: usize,
    pub exec: Execution,
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        Self {
            k_noise: 20,
            theta: None,
            k_euc: 20,
            ladder: LadderMode::Exp,
            m: 20,
            exec: Execution::Parallel,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Denoised {
    /// The surviving points with their ground truth.
    pub data: LabeledPointCloud,
    pub report: DenoiseReport,
    /// Graph and multiscale structure rebuilt on the survivors.
    pub index: LlpdIndex,
}

/// Drops every point whose kNN-LLPD radius exceeds theta and rebuilds the
/// kNN graph and multiscale structure on the remaining points.
pub fn denoise(data: &LabeledPointCloud, index: &LlpdIndex, config: &DenoiseConfig) -> Result<Denoised> {
    let beta = knn_llpd_radius(&index.sorted, &index.ladder, config.k_noise, config.exec)?;
    let theta = match config.theta {
        Some(t) => t,
        None => select_theta(&beta)?,
    };
    let kept = kept_indices(&beta, theta);
    if kept.len() < 2 {
        return Err(Error::EverythingRemoved { theta });
    }
    let removed_indices = (0..beta.len()).filter(|&i| beta[i] > theta).collect();
    let survivors = data.subset(&kept);
    let rebuilt = LlpdIndex::build(&survivors.points, config.k_euc, config.ladder, config.m, config.exec)?;
    let report = DenoiseReport {
        theta,
        n: beta.len(),
        n_kept: kept.len(),
        removed_indices,
        k_noise: config.k_noise,
        beta,
        kept,
    };
    Ok(Denoised {
        data: survivors,
        report,
        index: rebuilt,
    })
}
