//! Runtime of the LLPD nearest-neighbor search on uniform samples of the
//! unit square, over a ladder of sample sizes.

use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dataset::PointCloud;
use crate::error::{invalid, Result};
use crate::exec::Execution;
use crate::io::write_atomic;
use crate::llpd::{llpd_knn, LadderMode, LlpdIndex};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub k_euc: usize,
    pub k_llpd: usize,
    pub scales: Vec<usize>,
    pub repeats: usize,
    pub seed: u64,
    pub exec: Execution,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            sizes: vec![10_000, 30_000, 100_000],
            k_euc: 20,
            k_llpd: 10,
            scales: vec![10, 100],
            repeats: 1,
            seed: 0,
            exec: Execution::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub m: usize,
    pub repeat: usize,
    pub seconds: f64,
}

pub fn uniform_square(n: usize, seed: u64) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = (0..2 * n).map(|_| rng.random::<f64>()).collect();
    PointCloud::new(coords, 2).expect("two coordinates per point")
}

/// Wall time of graph construction, the multiscale structure and the
/// `k_llpd` nearest-neighbor sweep for every point.
pub fn time_llpd_knn(points: &PointCloud, k_euc: usize, k_llpd: usize, m: usize, exec: Execution) -> Result<f64> {
    let start = Instant::now();
    let index = LlpdIndex::build(points, k_euc, LadderMode::Exp, m, exec)?;
    let table = llpd_knn(&index.sorted, &index.ladder, k_llpd, exec)?;
    let seconds = start.elapsed().as_secs_f64();
    std::hint::black_box(table);
    Ok(seconds)
}

pub fn run_bench(config: &BenchConfig) -> Result<Vec<BenchRow>> {
    if config.sizes.is_empty() || config.scales.is_empty() {
        return Err(invalid("the benchmark needs at least one size and one m"));
    }
    let mut rows = Vec::new();
    for &n in &config.sizes {
        let points = uniform_square(n, config.seed);
        for &m in &config.scales {
            for repeat in 0..config.repeats.max(1) {
                let seconds = time_llpd_knn(&points, config.k_euc, config.k_llpd, m, config.exec)?;
                rows.push(BenchRow { n, m, repeat, seconds });
            }
        }
    }
    Ok(rows)
}

/// Least-squares slope of `log(seconds)` against `log(n)`.
pub fn loglog_slope(samples: &[(usize, f64)]) -> Result<f64> {
    if samples.iter().any(|&(n, s)| n == 0 || !(s > 0.0)) {
        return Err(invalid("sizes and times must be positive"));
    }
    let pts: Vec<(f64, f64)> = samples.iter().map(|&(n, s)| ((n as f64).ln(), s.ln())).collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(invalid("a slope needs at least two distinct sizes"));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Ok(sxy / sxx)
}

/// Sample mean and standard deviation of the repeats for each `(n, m)`.
pub fn summarize(rows: &[BenchRow]) -> Vec<(usize, usize, f64, f64)> {
    let mut keys: Vec<(usize, usize)> = rows.iter().map(|r| (r.n, r.m)).collect();
    keys.dedup();
    keys.into_iter()
        .map(|(n, m)| {
            let times: Vec<f64> = rows.iter().filter(|r| r.n == n && r.m == m).map(|r| r.seconds).collect();
            let mean = times.iter().sum::<f64>() / times.len() as f64;
            let var = if times.len() > 1 {
                times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (times.len() - 1) as f64
            } else {
                0.0
            };
            (n, m, mean, var.sqrt())
        })
        .collect()
}

/// Rows `n,m,repeat,seconds` with a header.
pub fn save_csv(rows: &[BenchRow], path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::from("n,m,repeat,seconds\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{:?}\n", r.n, r.m, r.repeat, r.seconds));
    }
    write_atomic(path, out.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_a_power_law() {
        let samples: Vec<(usize, f64)> = [100, 1000, 10_000].iter().map(|&n| (n, 3e-6 * (n as f64).powf(1.5))).collect();
        assert!((loglog_slope(&samples).unwrap() - 1.5).abs() < 1e-12);
        assert!(loglog_slope(&[(10, 1.0), (10, 2.0)]).is_err());
    }

    #[test]
    fn single_size_single_row() {
        let config = BenchConfig {
            sizes: vec![300],
            scales: vec![10],
            ..BenchConfig::default()
        };
        let rows = run_bench(&config).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!((rows[0].n, rows[0].m), (300, 10));
    }

    #[test]
    fn repeats_are_summarized() {
        let rows = [
            BenchRow { n: 10, m: 2, repeat: 0, seconds: 1.0 },
            BenchRow { n: 10, m: 2, repeat: 1, seconds: 3.0 },
        ];
        let s = summarize(&rows);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].2, 2.0);
        assert!((s[0].3 - 2f64.sqrt()).abs() < 1e-15);
    }
}
