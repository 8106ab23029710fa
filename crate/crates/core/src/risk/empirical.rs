//! Empirical surrogate-risk minimization with a tabular 1DT: one free value
//! per distinct input.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    bias_from_free, chain_bias_grad, gradient_into, initial_a, initial_free_bias, Adam, BatchMode, Coefficients,
    FitConfig, FitResult,
};
use crate::distributions::Sample;
use crate::error::{Error, Result};
use crate::losses::{Composition, SurrogateSpec};

/// A 1DT given by a lookup table over the training inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularModel {
    /// Sorted distinct inputs.
    pub support: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl TabularModel {
    /// Table index of `x`; unseen inputs map to the nearest training input
    /// (the lower one on ties).
    pub fn index_of(&self, x: f64) -> usize {
        let pos = self.support.partition_point(|&s| s < x);
        if pos == self.support.len() {
            return pos - 1;
        }
        if self.support[pos] == x || pos == 0 {
            return pos;
        }
        if x - self.support[pos - 1] <= self.support[pos] - x {
            pos - 1
        } else {
            pos
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.a[self.index_of(x)]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalFit {
    pub model: TabularModel,
    /// `fit.a` is indexed like `model.support`; `fit.risk` is the training risk.
    pub fit: FitResult,
}

/// Mean surrogate loss of `model` on `data`.
pub fn empirical_surrogate_risk(model: &TabularModel, spec: &SurrogateSpec, data: &[Sample]) -> f64 {
    let total: f64 = data.iter().map(|s| spec.loss(model.value(s.x), &model.b, s.y)).sum();
    total / data.len() as f64
}

pub fn fit_empirical(
    data: &[Sample],
    num_classes: usize,
    spec: &SurrogateSpec,
    cfg: &FitConfig,
) -> Result<EmpiricalFit> {
    fit_empirical_with_monitor(data, num_classes, spec, cfg, |_, _| {})
}

/// As [`fit_empirical`], calling `monitor(epoch, model)` after every epoch
/// (epochs counted from 1).
pub fn fit_empirical_with_monitor(
    data: &[Sample],
    num_classes: usize,
    spec: &SurrogateSpec,
    cfg: &FitConfig,
    mut monitor: impl FnMut(usize, &TabularModel),
) -> Result<EmpiricalFit> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    if num_classes < 3 {
        return Err(Error::InvalidArgument(format!("K must be >= 3, got {num_classes}")));
    }
    if let Some(s) = data
        .iter()
        .find(|s| !(1..=num_classes).contains(&s.y) || !s.x.is_finite())
    {
        return Err(Error::InvalidArgument(format!("bad sample ({}, {})", s.x, s.y)));
    }

    let mut support: Vec<f64> = data.iter().map(|s| s.x).collect();
    support.sort_by(f64::total_cmp);
    support.dedup();
    let idx: Vec<usize> = data.iter().map(|s| support.partition_point(|&v| v < s.x)).collect();

    let n = support.len();
    let k1 = num_classes - 1;
    let class = spec.bias_class;
    let mut theta = initial_a(cfg.init, n);
    theta.extend(initial_free_bias(class, k1));
    let mut grad = vec![0.0; theta.len()];
    let mut b = vec![0.0; k1];
    let mut gb = vec![0.0; k1];
    let mut opt = Adam::new(theta.len(), cfg.adam);
    let mut model = TabularModel {
        support: support.clone(),
        a: vec![0.0; n],
        b: vec![0.0; k1],
    };

    let full = match cfg.mode {
        BatchMode::FullBatch => Some(aggregate(data, &idx, n, num_classes, spec.composition)),
        BatchMode::MiniBatch { .. } => None,
    };
    let mut order: Vec<usize> = (0..data.len()).collect();
    let (batch_size, mut rng) = match cfg.mode {
        BatchMode::MiniBatch { batch_size, seed } => (batch_size, ChaCha8Rng::seed_from_u64(seed)),
        BatchMode::FullBatch => (data.len(), ChaCha8Rng::seed_from_u64(0)),
    };

    for epoch in 0..cfg.epochs {
        let lr = cfg.lr.rate(epoch, cfg.epochs);
        if let Some(coef) = &full {
            let (a, free) = theta.split_at(n);
            bias_from_free(class, free, &mut b);
            gb.fill(0.0);
            let (ga, gfree) = grad.split_at_mut(n);
            gradient_into(spec.phi, a, &b, coef, ga, &mut gb);
            chain_bias_grad(class, free, &gb, gfree);
            opt.step(&mut theta, &grad, lr);
        } else {
            order.shuffle(&mut rng);
            for chunk in order.chunks(batch_size) {
                let (a, free) = theta.split_at(n);
                bias_from_free(class, free, &mut b);
                grad.fill(0.0);
                gb.fill(0.0);
                let scale = 1.0 / chunk.len() as f64;
                for &s in chunk {
                    let i = idx[s];
                    let y = data[s].y;
                    let mut acc = 0.0;
                    for (k, bk) in b.iter().enumerate() {
                        let (al, be) = sample_weights(spec.composition, y, k + 1);
                        if al == 0.0 && be == 0.0 {
                            continue;
                        }
                        let (d1, d2) = spec.phi.derivative_pair(a[i] - bk);
                        let t = scale * (al * d1 - be * d2);
                        acc += t;
                        gb[k] -= t;
                    }
                    grad[i] += acc;
                }
                chain_bias_grad(class, free, &gb, &mut grad[n..]);
                opt.step(&mut theta, &grad, lr);
            }
        }

        if (epoch + 1) % cfg.check_every == 0 && theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged {
                epoch: epoch + 1,
                risk: f64::NAN,
            });
        }
        let (a, free) = theta.split_at(n);
        bias_from_free(class, free, &mut model.b);
        model.a.copy_from_slice(a);
        monitor(epoch + 1, &model);
    }

    let risk = empirical_surrogate_risk(&model, spec, data);
    if !risk.is_finite() {
        return Err(Error::Diverged {
            epoch: cfg.epochs,
            risk,
        });
    }
    let fit = FitResult::new(*spec, model.a.clone(), model.b.clone(), risk, cfg.epochs)?;
    Ok(EmpiricalFit { model, fit })
}

/// `(α_k, β_k)` of a single label `y` at threshold `k` (1-based).
#[inline]
fn sample_weights(comp: Composition, y: usize, k: usize) -> (f64, f64) {
    match comp {
        Composition::AllThreshold => ((y > k) as u8 as f64, (y <= k) as u8 as f64),
        Composition::ImmediateThreshold => ((y == k + 1) as u8 as f64, (y == k) as u8 as f64),
    }
}

fn aggregate(data: &[Sample], idx: &[usize], n: usize, num_classes: usize, comp: Composition) -> Coefficients {
    let k1 = num_classes - 1;
    let w = 1.0 / data.len() as f64;
    let mut alpha = vec![0.0; n * k1];
    let mut beta = vec![0.0; n * k1];
    for (s, &i) in data.iter().zip(idx) {
        for k in 0..k1 {
            let (al, be) = sample_weights(comp, s.y, k + 1);
            alpha[i * k1 + k] += w * al;
            beta[i * k1 + k] += w * be;
        }
    }
    Coefficients { k1, alpha, beta }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::risk::{Init, LrSchedule};

    fn samples(pairs: &[(f64, usize)]) -> Vec<Sample> {
        pairs.iter().map(|&(x, y)| Sample { x, y }).collect()
    }

    #[test]
    fn nearest_lookup() {
        let m = TabularModel {
            support: vec![0.0, 1.0, 3.0],
            a: vec![10.0, 11.0, 13.0],
            b: vec![0.0, 1.0],
        };
        assert_eq!(m.value(1.0), 11.0);
        assert_eq!(m.value(-5.0), 10.0);
        assert_eq!(m.value(0.5), 10.0);
        assert_eq!(m.value(2.5), 13.0);
        assert_eq!(m.value(9.0), 13.0);
    }

    #[test]
    fn full_batch_single_class_descends() {
        let data = samples(&[(0.0, 1), (1.0, 1), (1.0, 1)]);
        let spec: SurrogateSpec = "logi-at-o".parse().unwrap();
        let mut risks = Vec::new();
        let cfg = FitConfig {
            epochs: 200,
            lr: LrSchedule::EMPIRICAL,
            adam: Default::default(),
            init: Init::Zeros,
            mode: BatchMode::FullBatch,
            check_every: 1,
            tail_average: 0.0,
        };
        let fit = fit_empirical_with_monitor(&data, 3, &spec, &cfg, |_, m| {
            risks.push(empirical_surrogate_risk(m, &spec, &data));
        })
        .unwrap();
        assert!(risks.windows(2).all(|w| w[1] < w[0]));
        // a moves below the first threshold.
        assert!(fit.model.a.iter().all(|&a| a < 0.0));
    }

    #[test]
    fn row_order_does_not_matter_full_batch() {
        let data = samples(&[(0.0, 1), (0.5, 2), (1.0, 3), (0.5, 3), (0.0, 2)]);
        let mut rev = data.clone();
        rev.reverse();
        let spec: SurrogateSpec = "hing-it-n".parse().unwrap();
        let cfg = FitConfig {
            mode: BatchMode::FullBatch,
            ..FitConfig::empirical(0)
        }
        .with_epochs(300);
        let f1 = fit_empirical(&data, 3, &spec, &cfg).unwrap();
        let f2 = fit_empirical(&rev, 3, &spec, &cfg).unwrap();
        assert_eq!(f1.model, f2.model);
    }

    #[test]
    fn mini_batch_is_seeded() {
        let data = samples(&[(0.0, 1), (0.5, 2), (1.0, 3), (0.5, 3), (0.0, 2), (1.0, 2)]);
        let spec: SurrogateSpec = "logi-at-o".parse().unwrap();
        let cfg = FitConfig::empirical(5).with_epochs(50);
        let f1 = fit_empirical(&data, 3, &spec, &cfg).unwrap();
        let f2 = fit_empirical(&data, 3, &spec, &cfg).unwrap();
        assert_eq!(f1, f2);
        let f3 = fit_empirical(&data, 3, &spec, &FitConfig::empirical(6).with_epochs(50)).unwrap();
        assert_ne!(f1.model, f3.model);
    }

    #[test]
    fn bad_inputs() {
        let spec: SurrogateSpec = "logi-at-o".parse().unwrap();
        let cfg = FitConfig::empirical(0);
        assert!(fit_empirical(&[], 3, &spec, &cfg).is_err());
        assert!(fit_empirical(&samples(&[(0.0, 4)]), 3, &spec, &cfg).is_err());
    }
}
