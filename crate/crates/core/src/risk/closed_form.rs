//! Closed-form population minimizers of the Squared-AT and Squared-IT risks.

use serde::{Deserialize, Serialize};

use crate::distributions::DiscreteOrdinalDistribution;
use crate::error::{Error, Result};
use crate::probability::{BiasClass, BiasVector};

const PIVOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedForm {
    pub a: Vec<f64>,
    pub b: BiasVector,
}

/// Squared-AT minimizer with `b_1 = 0`:
///
/// `b_k = 2(F_k - F_1)`, `a(x) = c + 2E[Y|x]/(K-1)` where `F_k = Pr(Y ≤ k)`
/// and `c = 2ΣF_k/(K-1) - 2F_1 - (K+1)/(K-1)`.
///
/// The thresholds `c + 2(k + 0.5)/(K-1)` round `E[Y|x]`, which is the
/// Bayes rule for the squared task loss.
pub fn closed_form_squared_at(dist: &DiscreteOrdinalDistribution) -> Result<ClosedForm> {
    let k = dist.num_classes();
    let km1 = (k - 1) as f64;
    let cum = marginal_cdf(dist);
    let f1 = cum[0];
    let offset = squared_at_offset(&cum);
    let b = cum.iter().map(|f| 2.0 * (f - f1)).collect();
    let a = dist.cpds().iter().map(|p| offset + 2.0 * p.mean() / km1).collect();
    Ok(ClosedForm {
        a,
        b: BiasVector::new(b, BiasClass::Ordered)?,
    })
}

/// `Pr(Y ≤ k)` for `k = 1..K-1`.
fn marginal_cdf(dist: &DiscreteOrdinalDistribution) -> Vec<f64> {
    let marginal = dist.marginal();
    marginal[..marginal.len() - 1]
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect()
}

fn squared_at_offset(cum: &[f64]) -> f64 {
    let km1 = cum.len() as f64;
    2.0 * cum.iter().sum::<f64>() / km1 - 2.0 * cum[0] - (km1 + 2.0) / km1
}

/// Thresholds `c + 2(k + 0.5)/(K-1)` that make the Squared-AT minimizer
/// Bayes-optimal for the squared task loss.
pub fn squared_at_bayes_thresholds(dist: &DiscreteOrdinalDistribution) -> Vec<f64> {
    let k = dist.num_classes();
    let km1 = (k - 1) as f64;
    let cum = marginal_cdf(dist);
    let offset = squared_at_offset(&cum);
    (1..k).map(|j| offset + 2.0 * (j as f64 + 0.5) / km1).collect()
}

/// Squared-IT minimizer with `b_1 = 0`.
///
/// With `q_k = p_k + p_{k+1}` and `S = Σ_k q_k`, stationarity in `a` gives
/// `a(x) = Σ_j r_j b_j + s` where `r_j = q_j/S`, `s = (p_K - p_1)/S`, and
/// stationarity in `b` gives `(I - D)b = c` with
/// `D_{kj} = E[q_k r_j]/E[q_k]`, `c_k = (E[q_k s] + E[p_k - p_{k+1}])/E[q_k]`.
/// `D` is row-stochastic, so the first column is dropped to pin `b_1 = 0`.
pub fn closed_form_squared_it(dist: &DiscreteOrdinalDistribution) -> Result<ClosedForm> {
    let k1 = dist.num_classes() - 1;
    let mut eq = vec![0.0; k1];
    let mut d = vec![vec![0.0; k1]; k1];
    let mut c = vec![0.0; k1];
    let mut rs = Vec::with_capacity(dist.num_points());

    for (i, w) in dist.weights().iter().enumerate() {
        let p = dist.row(i);
        let q: Vec<f64> = (0..k1).map(|j| p[j] + p[j + 1]).collect();
        let total: f64 = q.iter().sum();
        let r: Vec<f64> = q.iter().map(|x| x / total).collect();
        let s = (p[k1] - p[0]) / total;
        for kk in 0..k1 {
            eq[kk] += w * q[kk];
            c[kk] += w * (q[kk] * s + p[kk] - p[kk + 1]);
            for j in 0..k1 {
                d[kk][j] += w * q[kk] * r[j];
            }
        }
        rs.push((r, s));
    }
    if let Some(kk) = eq.iter().position(|&m| m <= 0.0) {
        return Err(Error::Precondition(format!("Pr(Y in {{{}, {}}}) = 0", kk + 1, kk + 2)));
    }
    // (I - D) b = c with column 1 of D zeroed.
    let mut m = vec![vec![0.0; k1]; k1];
    for kk in 0..k1 {
        c[kk] /= eq[kk];
        for j in 0..k1 {
            let djk = if j == 0 { 0.0 } else { d[kk][j] / eq[kk] };
            m[kk][j] = if kk == j { 1.0 } else { 0.0 } - djk;
        }
    }
    let mut b = solve(m, c)?;
    b[0] = 0.0;
    let a = rs
        .iter()
        .map(|(r, s)| r.iter().zip(&b).map(|(rj, bj)| rj * bj).sum::<f64>() + s)
        .collect();
    let class = if crate::probability::is_sorted(&b) {
        BiasClass::Ordered
    } else {
        BiasClass::NonOrdered
    };
    Ok(ClosedForm {
        a,
        b: BiasVector::new(b, class)?,
    })
}

/// Gaussian elimination with partial pivoting.
pub(crate) fn solve(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Result<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        if m[piv][col].abs() < PIVOT_TOL {
            return Err(Error::SingularSystem { pivot: m[piv][col] });
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            if f == 0.0 {
                continue;
            }
            let (top, bottom) = m.split_at_mut(row);
            for (v, p) in bottom[0][col..].iter_mut().zip(&top[col][col..]) {
                *v -= f * p;
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|j| m[row][j] * x[j]).sum();
        x[row] = (rhs[row] - s) / m[row][row];
    }
    Ok(x)
}
