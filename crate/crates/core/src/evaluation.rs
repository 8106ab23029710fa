//! Approximation errors, Bayes errors and error tables.

use std::io;

use serde::{Deserialize, Serialize};

use crate::distributions::{DiscreteOrdinalDistribution, Sample};
use crate::error::Result;
use crate::losses::TaskLoss;
use crate::thresholding::{bayes_prediction, conditional_task_risk, h_thr, optimal_thresholds};

/// Mean task loss of `h_thr(a_i; t)` over the population. For the squared
/// loss this is the MSE; see [`TaskLoss::report`].
pub fn approximation_error(dist: &DiscreteOrdinalDistribution, a: &[f64], t: &[f64], ell: TaskLoss) -> f64 {
    dist.weights()
        .iter()
        .zip(a)
        .enumerate()
        .map(|(i, (w, ai))| w * conditional_task_risk(dist.row(i), ell, h_thr(*ai, t)))
        .sum()
}

/// Mean task loss of the Bayes predictions.
pub fn bayes_error(dist: &DiscreteOrdinalDistribution, ell: TaskLoss) -> f64 {
    dist.weights()
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let p = dist.row(i);
            w * conditional_task_risk(p, ell, bayes_prediction(p, ell))
        })
        .sum()
}

/// Sample mean of `ℓ(f(x), y)`.
pub fn empirical_error(test: &[Sample], predictor: impl Fn(f64) -> usize, ell: TaskLoss) -> f64 {
    let total: f64 = test.iter().map(|s| ell.value(predictor(s.x), s.y)).sum();
    total / test.len() as f64
}

/// Reported errors (MZE, MAE, RMSE) of a method and of the Bayes rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub mze: f64,
    pub mae: f64,
    pub rmse: f64,
    pub bayes_mze: f64,
    pub bayes_mae: f64,
    pub bayes_rmse: f64,
    /// Method minus Bayes, per task.
    pub gaps: [f64; 3],
}

impl ErrorReport {
    /// Errors of 1DT values `a` with task-wise optimal thresholds.
    pub fn for_1dt(dist: &DiscreteOrdinalDistribution, a: &[f64]) -> Result<Self> {
        let mut err = [0.0; 3];
        let mut bayes = [0.0; 3];
        for (j, ell) in TaskLoss::TASKS.iter().enumerate() {
            let t = optimal_thresholds(a, dist.cpds(), dist.weights(), *ell)?.t;
            err[j] = ell.report(approximation_error(dist, a, &t, *ell));
            bayes[j] = ell.report(bayes_error(dist, *ell));
        }
        Ok(Self::from_parts(err, bayes))
    }

    pub fn bayes(dist: &DiscreteOrdinalDistribution) -> Self {
        let bayes = TaskLoss::TASKS.map(|ell| ell.report(bayes_error(dist, ell)));
        Self::from_parts(bayes, bayes)
    }

    pub fn from_parts(err: [f64; 3], bayes: [f64; 3]) -> Self {
        Self {
            mze: err[0],
            mae: err[1],
            rmse: err[2],
            bayes_mze: bayes[0],
            bayes_mae: bayes[1],
            bayes_rmse: bayes[2],
            gaps: [err[0] - bayes[0], err[1] - bayes[1], err[2] - bayes[2]],
        }
    }

    pub fn errors(&self) -> [f64; 3] {
        [self.mze, self.mae, self.rmse]
    }

    pub fn bayes_errors(&self) -> [f64; 3] {
        [self.bayes_mze, self.bayes_mae, self.bayes_rmse]
    }
}

/// Rounds half to even at 3 decimals; values within 1e-9 (in units of the
/// last digit) of a tie count as ties, so decimal ties like 0.1235 round as
/// written rather than by their binary approximation.
pub fn round3(x: f64) -> f64 {
    let scaled = x * 1000.0;
    let floor = scaled.floor();
    let frac = scaled - floor;
    let r = if (frac - 0.5).abs() < 1e-9 {
        if floor % 2.0 == 0.0 {
            floor
        } else {
            floor + 1.0
        }
    } else {
        scaled.round()
    };
    r / 1000.0
}

/// Formats with 3 decimals after half-even rounding.
pub fn fmt3(x: f64) -> String {
    format!("{:.3}", round3(x))
}

/// One line of an error table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub distribution: String,
    pub method: String,
    pub task: String,
    pub error: String,
    pub bayes: String,
    pub gap: String,
}

impl ErrorRow {
    pub fn rows(distribution: &str, method: &str, report: &ErrorReport) -> Vec<ErrorRow> {
        let err = report.errors();
        let bayes = report.bayes_errors();
        TaskLoss::TASKS
            .iter()
            .enumerate()
            .map(|(j, ell)| ErrorRow {
                distribution: distribution.to_string(),
                method: method.to_string(),
                task: ell.metric_name().to_string(),
                error: fmt3(err[j]),
                bayes: fmt3(bayes[j]),
                gap: fmt3(report.gaps[j]),
            })
            .collect()
    }
}

pub fn write_error_csv<W: io::Write>(w: W, rows: &[ErrorRow]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}
