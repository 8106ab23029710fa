use proptest::prelude::*;

use ordinal_threshold::thresholding::{bayes_prediction, conditional_task_risk, h_min_rule, h_thr, optimal_thresholds};
use ordinal_threshold::TaskLoss;

fn task() -> impl Strategy<Value = TaskLoss> {
    prop::sample::select(vec![
        TaskLoss::ZeroOne,
        TaskLoss::Absolute,
        TaskLoss::Squared,
        TaskLoss::ZeroOneEps(1.0),
    ])
}

fn normalize(w: &[f64]) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    w.iter().map(|v| v / s).collect()
}

/// Minimum over all non-decreasing labelings of the sorted distinct values.
fn brute_force(a: &[f64], cpds: &[Vec<f64>], w: &[f64], ell: TaskLoss) -> f64 {
    let mut pos: Vec<f64> = a.to_vec();
    pos.sort_by(f64::total_cmp);
    pos.dedup();
    let k = cpds[0].len();
    let cost = |labels: &[usize]| -> f64 {
        a.iter()
            .zip(cpds)
            .zip(w)
            .map(|((ai, p), wi)| {
                let j = pos.iter().position(|v| v == ai).unwrap();
                wi * conditional_task_risk(p, ell, labels[j])
            })
            .sum()
    };
    fn walk(j: usize, lo: usize, k: usize, labels: &mut Vec<usize>, best: &mut f64, cost: &dyn Fn(&[usize]) -> f64) {
        if j == labels.len() {
            *best = best.min(cost(labels));
            return;
        }
        for l in lo..=k {
            labels[j] = l;
            walk(j + 1, l, k, labels, best, cost);
        }
    }
    let mut best = f64::INFINITY;
    walk(0, 1, k, &mut vec![1; pos.len()], &mut best, &cost);
    best
}

proptest! {
    #[test]
    fn dp_matches_exhaustive_search(
        k in 3usize..5, m in 1usize..9, ell in task(),
        raw_a in prop::collection::vec(0usize..6, 8),
        raw_p in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 4), 8),
        raw_w in prop::collection::vec(0.05f64..1.0, 8),
    ) {
        // Coarse lattice so repeated 1DT values occur.
        let a: Vec<f64> = raw_a[..m].iter().map(|&v| v as f64 * 0.5).collect();
        let cpds: Vec<Vec<f64>> = raw_p[..m].iter().map(|p| normalize(&p[..k].iter().map(|v| v + 1e-3).collect::<Vec<_>>())).collect();
        let w = normalize(&raw_w[..m]);
        let dp = optimal_thresholds(&a, &cpds, &w, ell).unwrap();
        let bf = brute_force(&a, &cpds, &w, ell);
        prop_assert!((dp.risk - bf).abs() < 1e-12, "dp {} bf {}", dp.risk, bf);
        // The thresholds realize the DP labels.
        prop_assert!(dp.t.windows(2).all(|x| x[0] <= x[1]));
        for (p, l) in dp.positions.iter().zip(&dp.labels) {
            prop_assert_eq!(h_thr(*p, &dp.t), *l);
        }
    }

    #[test]
    fn h_thr_is_monotone(t in prop::collection::vec(-5.0f64..5.0, 2..9), u in -6.0f64..6.0, du in 0.0f64..3.0) {
        prop_assert!(h_thr(u, &t) <= h_thr(u + du, &t));
    }

    #[test]
    fn every_label_is_reachable(gaps in prop::collection::vec(1e-3f64..2.0, 2..9), start in -3.0f64..3.0) {
        let mut t = vec![start];
        for g in gaps {
            t.push(t.last().unwrap() + g);
        }
        let k = t.len() + 1;
        let mut probes = vec![t[0] - 1.0];
        probes.extend(t.windows(2).map(|w| 0.5 * (w[0] + w[1])));
        probes.push(t[k - 2] + 1.0);
        let labels: Vec<usize> = probes.iter().map(|&u| h_thr(u, &t)).collect();
        prop_assert_eq!(labels, (1..=k).collect::<Vec<_>>());
        for u in probes {
            prop_assert_eq!(h_thr(u, &t), h_min_rule(u, &t));
        }
    }

    #[test]
    fn bayes_prediction_is_a_minimizer(ell in task(), raw in prop::collection::vec(0.0f64..1.0, 3..8)) {
        let p = normalize(&raw.iter().map(|v| v + 1e-6).collect::<Vec<_>>());
        let k = bayes_prediction(&p, ell);
        let r = conditional_task_risk(&p, ell, k);
        for j in 1..=p.len() {
            prop_assert!(r <= conditional_task_risk(&p, ell, j));
        }
    }
}

#[test]
fn bayes_prediction_examples() {
    assert_eq!(bayes_prediction(&[0.2, 0.3, 0.5], TaskLoss::Squared), 2);
    assert_eq!(bayes_prediction(&[0.4, 0.2, 0.4], TaskLoss::ZeroOne), 1);
    assert_eq!(bayes_prediction(&[0.3, 0.1, 0.2, 0.4], TaskLoss::Absolute), 3);
}
