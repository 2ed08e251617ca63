//! Label agreement under the best matching of predicted to true labels:
//! overall accuracy (OA), average per-cluster accuracy (AA) and Cohen's kappa.
//!
//! Points whose true label is [`NOISE`] are not scored. A predicted
//! [`NOISE`] on a scored point always counts as an error.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::dataset::{Label, NOISE};
use crate::error::{invalid, Result};

/// Matching from predicted labels to true labels. Predicted labels left
/// unmatched (more predicted than true clusters) map to nothing.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Alignment {
    map: BTreeMap<Label, Label>,
}

impl Alignment {
    pub fn get(&self, predicted: Label) -> Option<Label> {
        self.map.get(&predicted).copied()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (Label, Label)> + '_ {
        self.map.iter().map(|(&p, &t)| (p, t))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AccuracyReport {
    pub oa: f64,
    pub aa: f64,
    pub kappa: f64,
    pub alignment: Alignment,
}

/// Costs the assignment solver can work with: an ordered additive group.
trait Cost: Copy + PartialOrd + std::ops::Add<Output = Self> + std::ops::Sub<Output = Self> + std::ops::AddAssign + std::ops::SubAssign {
    const ZERO: Self;
    const MAX: Self;
}

impl Cost for i64 {
    const ZERO: Self = 0;
    const MAX: Self = i64::MAX;
}

/// Lexicographic cost: an exact integer part, then two real tie-breakers.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
struct Tiered(i64, f64, f64);

impl std::ops::Add for Tiered {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Tiered(self.0 + o.0, self.1 + o.1, self.2 + o.2)
    }
}

impl std::ops::Sub for Tiered {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Tiered(self.0 - o.0, self.1 - o.1, self.2 - o.2)
    }
}

impl std::ops::AddAssign for Tiered {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl std::ops::SubAssign for Tiered {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl Cost for Tiered {
    const ZERO: Self = Tiered(0, 0.0, 0.0);
    const MAX: Self = Tiered(i64::MAX, 0.0, 0.0);
}

/// Minimum-cost perfect matching on a square matrix (shortest augmenting
/// paths with potentials, O(n^3)). Returns `assignment[row] = column`.
pub fn hungarian(cost: &[Vec<i64>]) -> Vec<usize> {
    solve_assignment(cost)
}

fn solve_assignment<C: Cost>(cost: &[Vec<C>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    // 1-based arrays; column 0 is the virtual source
    let mut u = vec![C::ZERO; n + 1];
    let mut v = vec![C::ZERO; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![C::MAX; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = C::MAX;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        assignment[p[j] - 1] = j - 1;
    }
    assignment
}

fn check_lengths(y: &[Label], y_hat: &[Label]) -> Result<()> {
    if y.len() != y_hat.len() {
        return Err(invalid(format!("{} true labels but {} predictions", y.len(), y_hat.len())));
    }
    if y.iter().all(|&l| l == NOISE) {
        return Err(invalid("no labeled points to score"));
    }
    Ok(())
}

/// Overall accuracy maximised over matchings of predicted to true labels,
/// solved exactly as an assignment problem on the zero-padded contingency table.
///
/// Among matchings with the same accuracy the one with the largest average
/// per-cluster accuracy wins, then the one with the least chance agreement,
/// so that AA and kappa do not depend on how the predicted labels are named.
pub fn agreement(y: &[Label], y_hat: &[Label]) -> Result<(f64, Alignment)> {
    check_lengths(y, y_hat)?;
    let mut truth: Vec<Label> = y.iter().copied().filter(|&l| l != NOISE).collect();
    truth.sort_unstable();
    truth.dedup();
    let mut pred: Vec<Label> = y
        .iter()
        .zip(y_hat)
        .filter(|&(&t, &p)| t != NOISE && p != NOISE)
        .map(|(_, &p)| p)
        .collect();
    pred.sort_unstable();
    pred.dedup();
    let size = truth.len().max(pred.len());
    let mut counts = vec![vec![0i64; size]; size];
    let mut scored = 0usize;
    for (&t, &p) in y.iter().zip(y_hat) {
        if t == NOISE {
            continue;
        }
        scored += 1;
        if p == NOISE {
            continue;
        }
        let r = pred.binary_search(&p).expect("collected above");
        let c = truth.binary_search(&t).expect("collected above");
        counts[r][c] += 1;
    }
    let truth_sizes: Vec<i64> = (0..size).map(|c| counts.iter().map(|row| row[c]).sum()).collect();
    let pred_sizes: Vec<i64> = counts.iter().map(|row| row.iter().sum()).collect();
    let cost: Vec<Vec<Tiered>> = (0..size)
        .map(|r| {
            (0..size)
                .map(|c| {
                    let recall = if truth_sizes[c] > 0 { counts[r][c] as f64 / truth_sizes[c] as f64 } else { 0.0 };
                    let chance = (pred_sizes[r] * truth_sizes[c]) as f64 / (scored as f64).powi(2);
                    Tiered(-counts[r][c], -recall, chance)
                })
                .collect()
        })
        .collect();
    let assignment = solve_assignment(&cost);
    let mut map = BTreeMap::new();
    let mut matched = 0i64;
    for (r, &c) in assignment.iter().enumerate() {
        if r < pred.len() && c < truth.len() {
            map.insert(pred[r], truth[c]);
            matched += counts[r][c];
        }
    }
    Ok((matched as f64 / scored as f64, Alignment { map }))
}

/// Mean over true clusters of the fraction of their points labelled correctly.
pub fn average_accuracy(y: &[Label], y_hat: &[Label], alignment: &Alignment) -> Result<f64> {
    check_lengths(y, y_hat)?;
    let mut per: BTreeMap<Label, (usize, usize)> = BTreeMap::new();
    for (&t, &p) in y.iter().zip(y_hat) {
        if t == NOISE {
            continue;
        }
        let e = per.entry(t).or_default();
        e.1 += 1;
        if p != NOISE && alignment.get(p) == Some(t) {
            e.0 += 1;
        }
    }
    Ok(per.values().map(|&(hit, tot)| hit as f64 / tot as f64).sum::<f64>() / per.len() as f64)
}

/// Cohen's kappa of the aligned predictions. When chance agreement is 1
/// (both sides constant), kappa is 1 for perfect agreement and 0 otherwise.
pub fn cohens_kappa(y: &[Label], y_hat: &[Label], alignment: &Alignment) -> Result<f64> {
    check_lengths(y, y_hat)?;
    let mut true_freq: BTreeMap<Label, f64> = BTreeMap::new();
    let mut pred_freq: BTreeMap<Label, f64> = BTreeMap::new();
    let (mut total, mut hits) = (0.0, 0.0);
    for (&t, &p) in y.iter().zip(y_hat) {
        if t == NOISE {
            continue;
        }
        total += 1.0;
        *true_freq.entry(t).or_default() += 1.0;
        if let Some(a) = (p != NOISE).then(|| alignment.get(p)).flatten() {
            *pred_freq.entry(a).or_default() += 1.0;
            if a == t {
                hits += 1.0;
            }
        }
    }
    let p_o = hits / total;
    let p_e: f64 = true_freq
        .iter()
        .map(|(l, &f)| f / total * pred_freq.get(l).copied().unwrap_or(0.0) / total)
        .sum();
    if (1.0 - p_e).abs() < 1e-15 {
        return Ok(if p_o == 1.0 { 1.0 } else { 0.0 });
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

pub fn accuracy_report(y: &[Label], y_hat: &[Label]) -> Result<AccuracyReport> {
    let (oa, alignment) = agreement(y, y_hat)?;
    Ok(AccuracyReport {
        oa,
        aa: average_accuracy(y, y_hat, &alignment)?,
        kappa: cohens_kappa(y, y_hat, &alignment)?,
        alignment,
    })
}
