//! Ordinal probability mass functions and the two likelihood models
//! (cumulative logit and adjacent categories logit) used to generate
//! ordinal data.
//!
//! Labels are 1-based throughout the public API: a PMF over `K` classes is
//! indexed by `y ∈ 1..=K`, and a bias vector has `K - 1` entries with the
//! first one pinned to zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{log_sigmoid, log_sum_exp, sigmoid};

/// Absolute tolerance used when comparing probabilities for ties and
/// monotonicity. Model PMFs carry rounding noise of order 1e-16.
pub const PROB_TIE_TOL: f64 = 1e-12;

const SUM_TOL: f64 = 1e-12;

/// A probability vector over `K ≥ 3` ordinal labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Pmf {
    probs: Vec<f64>,
}

impl Pmf {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 3 {
            return Err(Error::InvalidPmf(format!(
                "need at least 3 labels, got {}",
                probs.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidPmf(format!("entry {p} outside [0, 1]")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidPmf(format!("entries sum to {total}")));
        }
        Ok(Self { probs })
    }

    /// Wraps model output, clipping rounding-level negatives to zero.
    pub(crate) fn from_model(mut probs: Vec<f64>) -> Self {
        for p in probs.iter_mut() {
            if *p < 0.0 {
                debug_assert!(*p >= -1e-12, "model produced probability {p}");
                *p = 0.0;
            }
        }
        Self { probs }
    }

    pub fn num_classes(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Probability of label `y` (1-based).
    pub fn prob(&self, y: usize) -> f64 {
        self.probs[y - 1]
    }

    /// All labels attaining the maximum probability, ascending.
    pub fn mode_set(&self) -> Vec<usize> {
        let max = self.probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p >= max - PROB_TIE_TOL)
            .map(|(i, _)| i + 1)
            .collect()
    }

    /// The lowest-index mode.
    pub fn mode(&self) -> usize {
        self.mode_set()[0]
    }

    /// Non-decreasing up to every mode and non-increasing after it.
    pub fn is_unimodal(&self) -> bool {
        let p = &self.probs;
        self.mode_set().into_iter().all(|m| {
            let m = m - 1;
            p[..=m].windows(2).all(|w| w[0] <= w[1] + PROB_TIE_TOL)
                && p[m..].windows(2).all(|w| w[0] + PROB_TIE_TOL >= w[1])
        })
    }

    /// `Pr(Y ≤ k)` for `k = 1..K-1`.
    pub fn cumulative(&self) -> Vec<f64> {
        let k = self.probs.len();
        let mut acc = 0.0;
        self.probs[..k - 1]
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect()
    }

    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(i, p)| (i + 1) as f64 * p).sum()
    }
}

impl AsRef<[f64]> for Pmf {
    fn as_ref(&self) -> &[f64] {
        &self.probs
    }
}

impl TryFrom<Vec<f64>> for Pmf {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Pmf::new(v)
    }
}

impl From<Pmf> for Vec<f64> {
    fn from(p: Pmf) -> Self {
        p.probs
    }
}

/// Whether a bias vector is constrained to be non-decreasing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BiasClass {
    NonOrdered,
    Ordered,
}

impl BiasClass {
    pub fn abbrev(self) -> &'static str {
        match self {
            BiasClass::NonOrdered => "n",
            BiasClass::Ordered => "o",
        }
    }
}

/// Bias parameter vector `b` of length `K - 1` with `b[1] = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasVector {
    values: Vec<f64>,
    class: BiasClass,
}

/// Offsets of the ordered unequal-interval bias vector (K = 10).
const UNEQUAL_OFFSETS: [f64; 9] = [0.0, 0.5, 0.9, 1.5, 4.0, 6.5, 7.1, 7.6, 8.0];
/// Offsets of the non-ordered bias vector with b₅ and b₆ swapped (K = 10).
const SWAPPED_OFFSETS: [f64; 9] = [0.0, 1.0, 2.0, 3.0, 5.0, 4.0, 6.0, 7.0, 8.0];

impl BiasVector {
    pub fn new(values: Vec<f64>, class: BiasClass) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidBias(format!(
                "need K-1 >= 2 entries, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidBias("non-finite entry".into()));
        }
        if values[0] != 0.0 {
            return Err(Error::InvalidBias(format!("first entry must be 0, got {}", values[0])));
        }
        if class == BiasClass::Ordered && !is_sorted(&values) {
            return Err(Error::InvalidBias(
                "ordered class requires non-decreasing entries".into(),
            ));
        }
        Ok(Self { values, class })
    }

    /// `Δ·(0, 1, …, K-2)`.
    pub fn equal_interval(delta: f64, num_classes: usize) -> Result<Self> {
        check_delta(delta)?;
        if num_classes < 3 {
            return Err(Error::InvalidBias(format!("K = {num_classes} < 3")));
        }
        let values = (0..num_classes - 1).map(|k| delta * k as f64).collect();
        Self::new(values, BiasClass::Ordered)
    }

    /// `Δ·(0, 0.5, 0.9, 1.5, 4, 6.5, 7.1, 7.6, 8)`; only defined for K = 10.
    pub fn unequal_interval(delta: f64, num_classes: usize) -> Result<Self> {
        check_delta(delta)?;
        check_ten(num_classes)?;
        Self::new(UNEQUAL_OFFSETS.iter().map(|o| delta * o).collect(), BiasClass::Ordered)
    }

    /// `Δ·(0, 1, 2, 3, 5, 4, 6, 7, 8)`; only defined for K = 10.
    pub fn swapped_interval(delta: f64, num_classes: usize) -> Result<Self> {
        check_delta(delta)?;
        check_ten(num_classes)?;
        Self::new(
            SWAPPED_OFFSETS.iter().map(|o| delta * o).collect(),
            BiasClass::NonOrdered,
        )
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn class(&self) -> BiasClass {
        self.class
    }

    pub fn num_classes(&self) -> usize {
        self.values.len() + 1
    }

    pub fn is_sorted(&self) -> bool {
        is_sorted(&self.values)
    }

    /// `b_{k+1} - b_k` for `k = 1..K-2`.
    pub fn gaps(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta.is_finite() && delta > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidBias(format!("scale Δ = {delta} must be > 0")))
    }
}

fn check_ten(num_classes: usize) -> Result<()> {
    if num_classes == 10 {
        Ok(())
    } else {
        Err(Error::InvalidBias(format!(
            "this bias vector is only defined for K = 10, got {num_classes}"
        )))
    }
}

pub(crate) fn is_sorted(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] <= w[1])
}

/// Likelihood model families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    CumulativeLogit,
    AdjacentCategoriesLogit,
}

/// Cumulative logit model: `Pr(Y ≤ k) = σ(b_k - u)`.
pub fn cl_pmf(u: f64, b: &BiasVector) -> Result<Pmf> {
    cl_probs(u, b.values()).map(Pmf::from_model)
}

pub(crate) fn cl_probs(u: f64, b: &[f64]) -> Result<Vec<f64>> {
    if !is_sorted(b) {
        return Err(Error::UnorderedBias);
    }
    let k = b.len() + 1;
    let mut probs = Vec::with_capacity(k);
    probs.push(sigmoid(b[0] - u));
    for y in 1..k - 1 {
        let (hi, lo) = (b[y] - u, b[y - 1] - u);
        // Difference of two sigmoids; switch to the upper tail when both are near 1.
        let p = if lo > 0.0 {
            sigmoid(-lo) - sigmoid(-hi)
        } else {
            sigmoid(hi) - sigmoid(lo)
        };
        probs.push(p);
    }
    probs.push(sigmoid(u - b[k - 2]));
    Ok(probs)
}

/// Adjacent categories logit model:
/// `Pr(Y = y) ∝ exp(-Σ_{k<y} (b_k - u))`.
pub fn acl_pmf(u: f64, b: &BiasVector) -> Pmf {
    Pmf::from_model(acl_probs(u, b.values()))
}

pub(crate) fn acl_probs(u: f64, b: &[f64]) -> Vec<f64> {
    let mut logits = Vec::with_capacity(b.len() + 1);
    let mut s = 0.0;
    logits.push(s);
    for bk in b {
        s -= bk - u;
        logits.push(s);
    }
    let lse = log_sum_exp(&logits);
    logits.into_iter().map(|l| (l - lse).exp()).collect()
}

/// Evaluates the model PMF at a 1DT value.
pub fn model_pmf(model: ModelKind, u: f64, b: &BiasVector) -> Result<Pmf> {
    match model {
        ModelKind::CumulativeLogit => cl_pmf(u, b),
        ModelKind::AdjacentCategoriesLogit => Ok(acl_pmf(u, b)),
    }
}

/// Unimodality of the model PMF at each grid point.
pub fn unimodal_region_scan(model: ModelKind, b: &BiasVector, u_grid: &[f64]) -> Result<Vec<bool>> {
    if u_grid.iter().any(|u| !u.is_finite()) {
        return Err(Error::InvalidArgument("grid contains non-finite values".into()));
    }
    u_grid
        .iter()
        .map(|&u| model_pmf(model, u, b).map(|p| p.is_unimodal()))
        .collect()
}

const DELTA_UPPER: f64 = 100.0;
const BISECT_TOL: f64 = 1e-10;

/// Scale thresholds `(Δ₁, Δ₂)` above which the equal-interval CL PMF is
/// monotone over the first (resp. last) label as well.
///
/// `Δ₁` has the closed form `-log((1 - e^{-u}) / 2)` for `u > 0`, is `0` for
/// `u < 0`, and diverges at `u = 0`. `Δ₂` has no closed form and is found by
/// bisection on `(0, 100]`.
pub fn cl_delta_thresholds(u: f64, num_classes: usize) -> Result<(f64, f64)> {
    if !u.is_finite() {
        return Err(Error::InvalidArgument(format!("u = {u}")));
    }
    if num_classes < 3 {
        return Err(Error::InvalidArgument(format!("K = {num_classes} < 3")));
    }
    Ok((delta_one(u), delta_two(u, num_classes)?))
}

pub(crate) fn delta_one(u: f64) -> f64 {
    if u < 0.0 {
        0.0
    } else if u == 0.0 {
        f64::INFINITY
    } else {
        -((-(-u).exp_m1()) / 2.0).ln()
    }
}

/// `log 2 + log σ(u - b_{K-1}) - log σ(u - b_{K-2})` with `b = b^[Δ]`;
/// positive below `Δ₂` and negative above.
pub(crate) fn delta_two_residual(u: f64, num_classes: usize, delta: f64) -> f64 {
    let kk = num_classes as f64;
    std::f64::consts::LN_2 + log_sigmoid(u - (kk - 2.0) * delta) - log_sigmoid(u - (kk - 3.0) * delta)
}

fn delta_two(u: f64, num_classes: usize) -> Result<f64> {
    bisect(
        |d| delta_two_residual(u, num_classes, d),
        f64::MIN_POSITIVE,
        DELTA_UPPER,
        BISECT_TOL,
    )
}

/// Root of a continuous function on `[lo, hi]` whose endpoint values have
/// opposite signs.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let (mut f_lo, f_hi) = (f(lo), f(hi));
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return Err(Error::NotBracketed { lo, hi });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
