use std::path::Path;

use serde::{Deserialize, Serialize};

use super::eigen::EigenConfig;
use super::operator::{KernelConfig, LlpdLaplacianOperator};
use crate::error::{invalid, Result};
use crate::exec::{map_slice, Execution};
use crate::io::write_atomic;
use crate::llpd::{MultiscaleDendrogram, ScaleLadder};

/// Equally spaced kernel scales. A missing lower end defaults to `t_1`; a
/// missing upper end to the LLPD diameter, the first ladder threshold at
/// which the dendrogram is a single component. Beyond the diameter the kernel
/// flattens towards a constant and `lambda_2 - lambda_1` approaches 1 for
/// every data set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaGridSpec {
    pub count: usize,
    pub min: Option<f64>,
    pub max: Option<f64>,
}

impl Default for SigmaGridSpec {
    fn default() -> Self {
        Self {
            count: 20,
            min: None,
            max: None,
        }
    }
}

impl SigmaGridSpec {
    pub fn resolve(&self, ladder: &ScaleLadder, dendro: &MultiscaleDendrogram) -> Result<Vec<f64>> {
        let lo = self.min.unwrap_or(ladder.first());
        let hi = self.max.unwrap_or_else(|| ladder.t(llpd_diameter_scale(dendro)));
        linear_grid(lo, hi.max(lo), self.count)
    }
}

/// First scale with a single component (the top scale if none).
pub fn llpd_diameter_scale(dendro: &MultiscaleDendrogram) -> usize {
    (0..dendro.scales())
        .find(|&s| dendro.component_count(s) == 1)
        .unwrap_or(dendro.scales() - 1)
}

pub fn linear_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(invalid("the sigma grid needs at least one value"));
    }
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return Err(invalid(format!("bad sigma range [{lo}, {hi}]")));
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    let step = (hi - lo) / (count - 1) as f64;
    let mut grid: Vec<f64> = (0..count).map(|i| lo + step * i as f64).collect();
    grid[count - 1] = hi;
    grid.dedup();
    Ok(grid)
}

/// The smallest `kmax` Laplacian eigenvalues at each kernel scale.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SigmaSweep {
    /// Ascending.
    pub sigmas: Vec<f64>,
    /// `eigenvalues[g][i]`: `lambda_{i+1}` at `sigmas[g]`.
    pub eigenvalues: Vec<Vec<f64>>,
}

impl SigmaSweep {
    pub fn kmax(&self) -> usize {
        self.eigenvalues.first().map_or(0, Vec::len)
    }

    /// Rows `sigma, lambda_1, ..., lambda_kmax` with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sigma");
        for i in 1..=self.kmax() {
            out.push_str(&format!(",lambda_{i}"));
        }
        out.push('\n');
        for (s, vals) in self.sigmas.iter().zip(&self.eigenvalues) {
            out.push_str(&format!("{s:?}"));
            for v in vals {
                out.push_str(&format!(",{v:?}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path, self.to_csv().as_bytes())
    }
}

/// Eigenvalue curves over `sigmas`, each scale solved independently.
pub fn sigma_sweep(
    dendro: &MultiscaleDendrogram,
    ladder: &ScaleLadder,
    sigmas: &[f64],
    kmax: usize,
    config: &EigenConfig,
    exec: Execution,
) -> Result<SigmaSweep> {
    if sigmas.is_empty() {
        return Err(invalid("empty sigma grid"));
    }
    let mut sigmas = sigmas.to_vec();
    sigmas.sort_by(f64::total_cmp);
    let kernels = sigmas.iter().map(|&s| KernelConfig::new(s)).collect::<Result<Vec<_>>>()?;
    let results = map_slice(exec, &kernels, |&k| {
        let op = LlpdLaplacianOperator::new(dendro, ladder, k)?;
        op.eigs(kmax, config).map(|s| s.values)
    });
    let eigenvalues = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(SigmaSweep { sigmas, eigenvalues })
}

/// `K_hat` maximises the largest gap `lambda_{i+1} - lambda_i` over the grid;
/// `sigma_hat` is the scale where that gap is largest. Ties go to the smaller
/// `i`, then the smaller scale.
///
/// `i = 1` is only considered when the sweep holds just two eigenvalues: as
/// the kernel flattens at large scales `lambda_2 - lambda_1` tends to 1 on
/// every data set, so that gap carries no information about the clusters.
/// A weak multi-cluster structure shows instead as `lambda_2` far from 0 at
/// `sigma_hat`.
pub fn estimate_k_sigma(sweep: &SigmaSweep) -> Result<(usize, f64)> {
    if sweep.kmax() < 2 {
        return Err(invalid("estimating K needs at least 2 eigenvalues per scale"));
    }
    let mut order: Vec<usize> = (0..sweep.sigmas.len()).collect();
    order.sort_by(|&a, &b| sweep.sigmas[a].total_cmp(&sweep.sigmas[b]));
    let gap = |g: usize, i: usize| sweep.eigenvalues[g][i + 1] - sweep.eigenvalues[g][i];
    let first = if sweep.kmax() > 2 { 1 } else { 0 };
    let mut best = (f64::NEG_INFINITY, first, order[0]);
    for i in first..sweep.kmax() - 1 {
        for &g in &order {
            let v = gap(g, i);
            if v > best.0 {
                best = (v, i, g);
            }
        }
    }
    Ok((best.1 + 1, sweep.sigmas[best.2]))
}

/// The scale maximising `lambda_{k+1} - lambda_k` for a given cluster count,
/// ties to the smaller scale.
pub fn sigma_for_k(sweep: &SigmaSweep, k: usize) -> Result<f64> {
    if k == 0 || k >= sweep.kmax() {
        return Err(invalid(format!("k = {k} needs more than {} eigenvalues per scale", sweep.kmax())));
    }
    let mut best = (f64::NEG_INFINITY, f64::INFINITY);
    for (s, vals) in sweep.sigmas.iter().zip(&sweep.eigenvalues) {
        let gap = vals[k] - vals[k - 1];
        if gap > best.0 || (gap == best.0 && *s < best.1) {
            best = (gap, *s);
        }
    }
    Ok(best.1)
}
