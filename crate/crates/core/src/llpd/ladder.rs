use std::fmt;
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::NeighborGraph;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LadderMode {
    /// `t_s = t_min * r^(s-1)` from the smallest to the largest edge weight.
    #[default]
    Exp,
    /// `t_s` is the `s/m` nearest-rank quantile of the edge weights.
    Pct,
}

impl fmt::Display for LadderMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LadderMode::Exp => "exp",
            LadderMode::Pct => "pct",
        })
    }
}

impl FromStr for LadderMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exp" | "exponential" => Ok(LadderMode::Exp),
            "pct" | "percentile" => Ok(LadderMode::Pct),
            other => Err(invalid(format!("unknown ladder mode `{other}`"))),
        }
    }
}

/// Increasing distance thresholds at which graph components are merged.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleLadder {
    thresholds: Vec<f64>,
    mode: LadderMode,
}

impl ScaleLadder {
    pub fn new(thresholds: Vec<f64>, mode: LadderMode) -> Result<Self> {
        if thresholds.is_empty() {
            return Err(invalid("a ladder needs at least one threshold"));
        }
        if thresholds.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(invalid("thresholds must be positive and finite"));
        }
        if thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("thresholds must be strictly increasing"));
        }
        Ok(Self { thresholds, mode })
    }

    /// Exponential ladder from `t_min` to `t_max` whose consecutive ratio is
    /// at most `ratio`.
    pub fn with_ratio(t_min: f64, t_max: f64, ratio: f64) -> Result<Self> {
        if !(ratio > 1.0) || !(t_min > 0.0) || !(t_max >= t_min) {
            return Err(invalid("need ratio > 1 and 0 < t_min <= t_max"));
        }
        if t_max == t_min {
            return Self::new(vec![t_min], LadderMode::Exp);
        }
        let steps = ((t_max / t_min).ln() / ratio.ln()).ceil() as usize;
        Self::new(exponential(t_min, t_max, steps + 1), LadderMode::Exp)
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn mode(&self) -> LadderMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.thresholds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thresholds.is_empty()
    }

    /// `t_s` for zero-based scale `s`.
    pub fn t(&self, s: usize) -> f64 {
        self.thresholds[s]
    }

    pub fn first(&self) -> f64 {
        self.thresholds[0]
    }

    pub fn last(&self) -> f64 {
        *self.thresholds.last().expect("non-empty")
    }

    /// Largest ratio between consecutive thresholds (1 for a single scale).
    pub fn max_ratio(&self) -> f64 {
        self.thresholds
            .windows(2)
            .map(|w| w[1] / w[0])
            .fold(1.0, f64::max)
    }

    /// Zero-based index of the first threshold `>= w`, if any.
    pub fn scale_of(&self, w: f64) -> Option<usize> {
        let s = self.thresholds.partition_point(|&t| t < w);
        (s < self.len()).then_some(s)
    }
}

fn exponential(t_min: f64, t_max: f64, m: usize) -> Vec<f64> {
    let r = (t_max / t_min).powf(1.0 / (m - 1) as f64);
    let mut t: Vec<f64> = (0..m).map(|s| t_min * r.powi(s as i32)).collect();
    t[0] = t_min;
    t[m - 1] = t_max;
    t.dedup();
    t
}

/// Picks `m` thresholds from the graph's edge weights.
///
/// Zero-length edges (duplicate points) are ignored when choosing the range;
/// they merge at the first scale regardless.
pub fn choose_scales(graph: &NeighborGraph, mode: LadderMode, m: usize) -> Result<ScaleLadder> {
    if m < 2 {
        return Err(invalid("a ladder needs m >= 2 scales"));
    }
    let mut weights: Vec<f64> = graph.edges().iter().map(|e| e.w).filter(|&w| w > 0.0).collect();
    if weights.is_empty() {
        return Err(invalid("graph has no edge of positive length"));
    }
    weights.sort_by(f64::total_cmp);
    let (t_min, t_max) = (weights[0], *weights.last().expect("non-empty"));
    if t_min == t_max {
        warn!("all edges have length {t_min}; using a single-scale ladder");
        return ScaleLadder::new(vec![t_min], mode);
    }
    let thresholds = match mode {
        LadderMode::Exp => exponential(t_min, t_max, m),
        LadderMode::Pct => {
            let n = weights.len();
            let mut t: Vec<f64> = (1..=m)
                .map(|s| weights[(s * n).div_ceil(m).clamp(1, n) - 1])
                .collect();
            t.dedup();
            t
        }
    };
    ScaleLadder::new(thresholds, mode)
}
