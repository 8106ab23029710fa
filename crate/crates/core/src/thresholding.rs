//! Threshold labeling and the optimal-threshold dynamic program.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::TaskLoss;

/// `1 + Σ_k 𝟙(u ≥ t_k)`.
#[inline]
pub fn h_thr(u: f64, t: &[f64]) -> usize {
    1 + t.iter().filter(|&&tk| u >= tk).count()
}

/// `min({k : u < b_k} ∪ {K})`; agrees with [`h_thr`] when `b` is sorted.
pub fn h_min_rule(u: f64, b: &[f64]) -> usize {
    b.iter().position(|&bk| u < bk).map_or(b.len() + 1, |k| k + 1)
}

/// Expected task loss of predicting `k` under `probs`.
#[inline]
pub fn conditional_task_risk(probs: &[f64], ell: TaskLoss, k: usize) -> f64 {
    probs.iter().enumerate().map(|(y, p)| p * ell.value(k, y + 1)).sum()
}

/// Bayes label `argmin_k Σ_y p_y ℓ(k, y)`, lowest on ties.
pub fn bayes_prediction(probs: &[f64], ell: TaskLoss) -> usize {
    let mut best = (1, f64::INFINITY);
    for k in 1..=probs.len() {
        let r = conditional_task_risk(probs, ell, k);
        if r < best.1 {
            best = (k, r);
        }
    }
    best.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalThresholds {
    pub t: Vec<f64>,
    pub risk: f64,
    /// Sorted distinct 1DT values.
    pub positions: Vec<f64>,
    /// Label assigned to each position (non-decreasing).
    pub labels: Vec<usize>,
}

/// Thresholds minimizing `Σ_i w_i Σ_y p_{i,y} ℓ(h_thr(a_i; t), y)`.
///
/// Any threshold vector induces a non-decreasing labeling of the sorted
/// distinct values of `a`; the DP finds the best such labeling exactly
/// (lexicographically smallest among ties) for any task loss. Thresholds
/// sit at midpoints between consecutive values, or one unit outside the
/// data range.
pub fn optimal_thresholds<R: AsRef<[f64]>>(
    a: &[f64],
    cpds: &[R],
    weights: &[f64],
    ell: TaskLoss,
) -> Result<OptimalThresholds> {
    if a.is_empty() {
        return Err(Error::InvalidArgument("no 1DT values".into()));
    }
    if cpds.len() != a.len() || weights.len() != a.len() {
        return Err(Error::DimensionMismatch(format!(
            "a {}, cpds {}, weights {}",
            a.len(),
            cpds.len(),
            weights.len()
        )));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite 1DT value".into()));
    }
    let k = cpds[0].as_ref().len();
    let mut order: Vec<usize> = (0..a.len()).collect();
    order.sort_by(|&i, &j| a[i].total_cmp(&a[j]));

    let mut positions: Vec<f64> = Vec::new();
    let mut cost: Vec<Vec<f64>> = Vec::new();
    for &i in &order {
        if positions.last() != Some(&a[i]) {
            positions.push(a[i]);
            cost.push(vec![0.0; k]);
        }
        let row = cost.last_mut().unwrap();
        let p = cpds[i].as_ref();
        for (lbl, c) in row.iter_mut().enumerate() {
            *c += weights[i] * conditional_task_risk(p, ell, lbl + 1);
        }
    }

    // g[j][l]: best cost of positions j.. with label at j equal to l;
    // s[j][l] = min_{l' ≥ l} g[j][l'].
    let m = positions.len();
    let mut g = vec![vec![0.0; k]; m];
    let mut s = vec![vec![0.0; k]; m];
    for j in (0..m).rev() {
        for l in 0..k {
            g[j][l] = cost[j][l] + if j + 1 < m { s[j + 1][l] } else { 0.0 };
        }
        let mut run = f64::INFINITY;
        for l in (0..k).rev() {
            run = run.min(g[j][l]);
            s[j][l] = run;
        }
    }

    let mut labels = Vec::with_capacity(m);
    let mut lo = 0;
    for j in 0..m {
        let target = s[j][lo];
        let l = (lo..k).find(|&l| g[j][l] == target).unwrap();
        labels.push(l + 1);
        lo = l;
    }
    let risk = s[0][0];

    let t = (1..k)
        .map(|kk| match labels.iter().position(|&l| l > kk) {
            None => positions[m - 1] + 1.0,
            Some(0) => positions[0] - 1.0,
            Some(j) => 0.5 * (positions[j - 1] + positions[j]),
        })
        .collect();
    Ok(OptimalThresholds {
        t,
        risk,
        positions,
        labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn h_thr_examples() {
        assert_eq!(h_thr(-5.0, &[0.0, 1.0]), 1);
        assert_eq!(h_thr(0.5, &[0.0, 1.0]), 2);
        assert_eq!(h_thr(1.0, &[0.0, 1.0]), 3);
    }

    #[test]
    fn h_min_rule_examples() {
        assert_eq!(h_min_rule(-0.5, &[0.0, -1.0]), 1);
        assert_eq!(h_thr(-0.5, &[0.0, -1.0]), 2);
        assert_eq!(h_min_rule(5.0, &[0.0, 1.0]), 3);
        for u in [-1.0, 0.0, 0.3, 1.0, 2.0] {
            assert_eq!(h_min_rule(u, &[0.0, 0.5, 1.0]), h_thr(u, &[0.0, 0.5, 1.0]));
        }
    }

    #[test]
    fn bayes_examples() {
        assert_eq!(bayes_prediction(&[0.2, 0.3, 0.5], TaskLoss::Squared), 2);
        assert_eq!(bayes_prediction(&[0.4, 0.4, 0.2], TaskLoss::ZeroOne), 1);
        assert_eq!(bayes_prediction(&[0.3, 0.1, 0.6], TaskLoss::Absolute), 3);
    }

    #[test]
    fn two_point_example() {
        let cpds = [vec![0.6, 0.4, 0.0], vec![0.0, 0.4, 0.6]];
        let r = optimal_thresholds(&[0.0, 1.0], &cpds, &[0.5, 0.5], TaskLoss::ZeroOne).unwrap();
        assert_eq!(r.labels, vec![1, 3]);
        assert!((r.risk - 0.4).abs() < 1e-15);
        assert_eq!(r.t, vec![0.5, 0.5]);
    }

    #[test]
    fn separable_gives_zero() {
        let cpds = [vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        let a = [3.0, -1.0, 7.0];
        let cpds = [cpds[1].clone(), cpds[0].clone(), cpds[2].clone()];
        let r = optimal_thresholds(&a, &cpds, &[1.0 / 3.0; 3], TaskLoss::Absolute).unwrap();
        assert_eq!(r.risk, 0.0);
        assert_eq!(r.t, vec![1.0, 5.0]);
    }

    #[test]
    fn out_of_range_thresholds() {
        let cpds = [vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 1.0]];
        let r = optimal_thresholds(&[0.0, 2.0], &cpds, &[0.5, 0.5], TaskLoss::ZeroOne).unwrap();
        assert_eq!(r.t, vec![-1.0, -1.0]);
        let cpds = [vec![1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]];
        let r = optimal_thresholds(&[0.0, 2.0], &cpds, &[0.5, 0.5], TaskLoss::ZeroOne).unwrap();
        assert_eq!(r.t, vec![3.0, 3.0]);
    }

    #[test]
    fn tied_values_share_a_label() {
        let cpds = [vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]];
        let r = optimal_thresholds(&[1.0, 1.0], &cpds, &[0.5, 0.5], TaskLoss::Absolute).unwrap();
        assert_eq!(r.positions.len(), 1);
        assert!((r.risk - 1.0).abs() < 1e-15);
        // Labels 1, 2, 3 all cost 1: the lowest is chosen.
        assert_eq!(r.labels, vec![1]);
    }
}
