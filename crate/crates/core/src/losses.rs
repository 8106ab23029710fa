//! Base binary surrogates φ, their all-threshold (AT) and
//! immediate-threshold (IT) compositions, and ordinal task losses.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{sigmoid, softplus};
use crate::probability::BiasClass;

/// A base surrogate `φ: ℝ → [0, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum BasePhi {
    /// `log(1 + e^{-u})`
    Logistic,
    /// `(1 - u)₊`
    Hinge,
    /// `min{(1 - u)₊, s}` with `s > 0`
    Ramp { s: f64 },
    /// `1 - 2u` for `u ≤ 0`, `((1 - u)₊)²` otherwise
    SmoothedHinge,
    /// `((1 - u)₊)²`
    SquaredHinge,
    /// `e^{-u}`
    Exponential,
    /// `|1 - u|`
    Absolute,
    /// `(1 - u)²`
    Squared,
}

impl BasePhi {
    pub const DEFAULT_RAMP_HEIGHT: f64 = 1.0;

    /// All eight kinds, with the unit ramp.
    pub const ALL: [BasePhi; 8] = [
        BasePhi::Logistic,
        BasePhi::Hinge,
        BasePhi::Ramp { s: 1.0 },
        BasePhi::SmoothedHinge,
        BasePhi::SquaredHinge,
        BasePhi::Exponential,
        BasePhi::Absolute,
        BasePhi::Squared,
    ];

    /// The seven convex kinds used by the simulation grid (Ramp excluded).
    pub const CONVEX: [BasePhi; 7] = [
        BasePhi::Logistic,
        BasePhi::Hinge,
        BasePhi::SmoothedHinge,
        BasePhi::SquaredHinge,
        BasePhi::Exponential,
        BasePhi::Absolute,
        BasePhi::Squared,
    ];

    pub fn ramp(s: f64) -> Result<Self> {
        if s.is_finite() && s > 0.0 {
            Ok(BasePhi::Ramp { s })
        } else {
            Err(Error::InvalidArgument(format!("ramp height s = {s} must be > 0")))
        }
    }

    pub fn abbrev(&self) -> &'static str {
        match self {
            BasePhi::Logistic => "logi",
            BasePhi::Hinge => "hing",
            BasePhi::Ramp { .. } => "ramp",
            BasePhi::SmoothedHinge => "smhi",
            BasePhi::SquaredHinge => "sqhi",
            BasePhi::Exponential => "expo",
            BasePhi::Absolute => "abso",
            BasePhi::Squared => "squa",
        }
    }

    #[inline]
    pub fn value(&self, u: f64) -> f64 {
        match *self {
            BasePhi::Logistic => softplus(-u),
            BasePhi::Hinge => (1.0 - u).max(0.0),
            BasePhi::Ramp { s } => (1.0 - u).max(0.0).min(s),
            BasePhi::SmoothedHinge => {
                if u <= 0.0 {
                    1.0 - 2.0 * u
                } else {
                    let h = (1.0 - u).max(0.0);
                    h * h
                }
            }
            BasePhi::SquaredHinge => {
                let h = (1.0 - u).max(0.0);
                h * h
            }
            BasePhi::Exponential => (-u).exp(),
            BasePhi::Absolute => (1.0 - u).abs(),
            BasePhi::Squared => (1.0 - u) * (1.0 - u),
        }
    }

    /// Derivative, or a fixed subgradient selection at kinks: the flat
    /// side (0) at the hinge and ramp corners, the average slope (0) at
    /// the absolute loss corner.
    #[inline]
    pub fn derivative(&self, u: f64) -> f64 {
        match *self {
            BasePhi::Logistic => -sigmoid(-u),
            BasePhi::Hinge => {
                if u < 1.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            BasePhi::Ramp { s } => {
                if u > 1.0 - s && u < 1.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            BasePhi::SmoothedHinge => {
                if u <= 0.0 {
                    -2.0
                } else {
                    -2.0 * (1.0 - u).max(0.0)
                }
            }
            BasePhi::SquaredHinge => -2.0 * (1.0 - u).max(0.0),
            BasePhi::Exponential => -(-u).exp(),
            BasePhi::Absolute => {
                if u < 1.0 {
                    -1.0
                } else if u > 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            BasePhi::Squared => -2.0 * (1.0 - u),
        }
    }

    /// `(φ'(z), φ'(-z))`, sharing the transcendental evaluation where the
    /// two are related.
    #[inline]
    pub fn derivative_pair(&self, z: f64) -> (f64, f64) {
        match *self {
            BasePhi::Logistic => {
                let s = sigmoid(-z);
                (-s, -(1.0 - s))
            }
            BasePhi::Exponential => {
                let e = (-z).exp();
                let inv = if e > 0.0 && e.is_finite() { 1.0 / e } else { z.exp() };
                (-e, -inv)
            }
            _ => (self.derivative(z), self.derivative(-z)),
        }
    }

    pub fn is_convex(&self) -> bool {
        !matches!(self, BasePhi::Ramp { .. })
    }

    /// Knots and affine pieces when φ is piecewise linear.
    pub fn pl_pieces(&self) -> Option<PlProfile> {
        match *self {
            BasePhi::Hinge => Some(PlProfile {
                knots: vec![1.0],
                segments: vec![Segment::new(1.0, -1.0), Segment::new(0.0, 0.0)],
            }),
            BasePhi::Absolute => Some(PlProfile {
                knots: vec![1.0],
                segments: vec![Segment::new(1.0, -1.0), Segment::new(-1.0, 1.0)],
            }),
            BasePhi::Ramp { s } => Some(PlProfile {
                knots: vec![1.0 - s, 1.0],
                segments: vec![Segment::new(s, 0.0), Segment::new(1.0, -1.0), Segment::new(0.0, 0.0)],
            }),
            _ => None,
        }
    }

    /// Edge `c` when φ is flat-bottom: non-increasing, positive below `c`
    /// and identically zero on `[c, ∞)`.
    pub fn fb_edge(&self) -> Option<f64> {
        match self {
            BasePhi::Hinge | BasePhi::Ramp { .. } | BasePhi::SmoothedHinge | BasePhi::SquaredHinge => Some(1.0),
            _ => None,
        }
    }

    /// `φ(u₁) - φ(-u₁) - φ(u₂) + φ(-u₂) > 0` for all `u₁ < u₂`; every
    /// AT minimizer then has sorted biases.
    pub fn strict_order_condition(&self) -> bool {
        matches!(
            self,
            BasePhi::Logistic
                | BasePhi::Exponential
                | BasePhi::Hinge
                | BasePhi::SmoothedHinge
                | BasePhi::SquaredHinge
                | BasePhi::Squared
        )
    }

    /// The non-strict version of [`Self::strict_order_condition`]; some AT
    /// minimizer has sorted biases.
    pub fn weak_order_condition(&self) -> bool {
        self.strict_order_condition() || matches!(self, BasePhi::Ramp { .. } | BasePhi::Absolute)
    }
}

impl fmt::Display for BasePhi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasePhi::Ramp { s } if *s != Self::DEFAULT_RAMP_HEIGHT => write!(f, "ramp:{s}"),
            other => f.write_str(other.abbrev()),
        }
    }
}

impl FromStr for BasePhi {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(h) = s.strip_prefix("ramp:") {
            let h: f64 = h.parse().map_err(|_| Error::Parse(format!("ramp height '{h}'")))?;
            return BasePhi::ramp(h);
        }
        Ok(match s {
            "logi" => BasePhi::Logistic,
            "hing" => BasePhi::Hinge,
            "ramp" => BasePhi::Ramp {
                s: Self::DEFAULT_RAMP_HEIGHT,
            },
            "smhi" => BasePhi::SmoothedHinge,
            "sqhi" => BasePhi::SquaredHinge,
            "expo" => BasePhi::Exponential,
            "abso" => BasePhi::Absolute,
            "squa" => BasePhi::Squared,
            other => return Err(Error::Parse(format!("surrogate '{other}'"))),
        })
    }
}

impl TryFrom<String> for BasePhi {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<BasePhi> for String {
    fn from(p: BasePhi) -> String {
        p.to_string()
    }
}

/// How φ is composed over the `K - 1` thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Composition {
    /// All thresholds, signs split at the true label.
    AllThreshold,
    /// Only the thresholds adjacent to the true label.
    ImmediateThreshold,
}

impl Composition {
    pub fn abbrev(self) -> &'static str {
        match self {
            Composition::AllThreshold => "at",
            Composition::ImmediateThreshold => "it",
        }
    }

    /// Per-threshold weights `(α_k, β_k)` such that the expected loss under
    /// `probs` is `Σ_k α_k φ(a - b_k) + β_k φ(b_k - a)`.
    ///
    /// AT: `α_k = Pr(Y > k)`, `β_k = Pr(Y ≤ k)`.
    /// IT: `α_k = Pr(Y = k + 1)`, `β_k = Pr(Y = k)`.
    pub fn threshold_weights(self, probs: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let k = probs.len();
        match self {
            Composition::AllThreshold => {
                let mut below = Vec::with_capacity(k - 1);
                let mut acc = 0.0;
                for p in &probs[..k - 1] {
                    acc += p;
                    below.push(acc);
                }
                let mut above = vec![0.0; k - 1];
                let mut acc = 0.0;
                for j in (0..k - 1).rev() {
                    acc += probs[j + 1];
                    above[j] = acc;
                }
                (above, below)
            }
            Composition::ImmediateThreshold => (probs[1..].to_vec(), probs[..k - 1].to_vec()),
        }
    }
}

/// A surrogate loss `φ(a, b, y)`: base φ, composition and bias class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SurrogateSpec {
    pub phi: BasePhi,
    pub composition: Composition,
    pub bias_class: BiasClass,
}

impl SurrogateSpec {
    pub fn new(phi: BasePhi, composition: Composition, bias_class: BiasClass) -> Self {
        Self {
            phi,
            composition,
            bias_class,
        }
    }

    /// The 21 simulated settings: AT-O, IT-N and IT-O over the seven convex φ.
    pub fn simulation_grid() -> Vec<SurrogateSpec> {
        let settings = [
            (Composition::AllThreshold, BiasClass::Ordered),
            (Composition::ImmediateThreshold, BiasClass::NonOrdered),
            (Composition::ImmediateThreshold, BiasClass::Ordered),
        ];
        settings
            .iter()
            .flat_map(|&(c, o)| BasePhi::CONVEX.iter().map(move |&p| SurrogateSpec::new(p, c, o)))
            .collect()
    }

    /// `φ(a, b, y)` for a label `y ∈ 1..=K`, `K = b.len() + 1`.
    pub fn loss(&self, a: f64, b: &[f64], y: usize) -> f64 {
        let k = b.len() + 1;
        debug_assert!((1..=k).contains(&y));
        let phi = &self.phi;
        match self.composition {
            Composition::AllThreshold => {
                let below: f64 = b[..y - 1].iter().map(|bk| phi.value(a - bk)).sum();
                let above: f64 = b[y - 1..].iter().map(|bk| phi.value(bk - a)).sum();
                below + above
            }
            Composition::ImmediateThreshold => {
                let mut total = 0.0;
                if y > 1 {
                    total += phi.value(a - b[y - 2]);
                }
                if y < k {
                    total += phi.value(b[y - 1] - a);
                }
                total
            }
        }
    }

    /// Expected loss under a label distribution.
    pub fn conditional_risk(&self, a: f64, b: &[f64], probs: &[f64]) -> f64 {
        probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != 0.0)
            .map(|(i, p)| p * self.loss(a, b, i + 1))
            .sum()
    }

    /// Piecewise-linear profile of `u ↦ φ(u, b, y)`; `None` when φ is not PL.
    pub fn pl_profile(&self, b: &[f64], y: usize) -> Option<PlProfile> {
        let mut weights = vec![0.0; b.len() + 1];
        weights[y - 1] = 1.0;
        self.pl_risk_profile(b, &weights)
    }

    /// Piecewise-linear profile of `u ↦ Σ_y p_y φ(u, b, y)`.
    pub fn pl_risk_profile(&self, b: &[f64], probs: &[f64]) -> Option<PlProfile> {
        let base = self.phi.pl_pieces()?;
        let (alpha, beta) = self.composition.threshold_weights(probs);
        // Terms (weight, sign, b_k) of φ(sign·(u - b_k)).
        let mut terms = Vec::new();
        for (k, bk) in b.iter().enumerate() {
            if alpha[k] != 0.0 {
                terms.push((alpha[k], 1.0, *bk));
            }
            if beta[k] != 0.0 {
                terms.push((beta[k], -1.0, *bk));
            }
        }
        let mut candidates: Vec<f64> = terms
            .iter()
            .flat_map(|&(_, sign, bk)| base.knots.iter().map(move |c| bk + sign * c))
            .collect();
        candidates.sort_by(f64::total_cmp);
        candidates.dedup_by(|x, y| (*x - *y).abs() <= KNOT_MERGE_TOL);

        let probe = |i: usize| -> f64 {
            match (i.checked_sub(1).map(|j| candidates[j]), candidates.get(i)) {
                (None, None) => 0.0,
                (None, Some(&hi)) => hi - 1.0,
                (Some(lo), None) => lo + 1.0,
                (Some(lo), Some(&hi)) => 0.5 * (lo + hi),
            }
        };
        let segments: Vec<Segment> = (0..=candidates.len())
            .map(|i| {
                let u = probe(i);
                terms.iter().fold(Segment::new(0.0, 0.0), |acc, &(w, sign, bk)| {
                    let piece = base.piece_at(sign * (u - bk));
                    // w·(α + β·sign·(u - b_k))
                    Segment::new(
                        acc.intercept + w * (piece.intercept - piece.slope * sign * bk),
                        acc.slope + w * piece.slope * sign,
                    )
                })
            })
            .collect();

        let mut knots = Vec::new();
        let mut merged = vec![segments[0]];
        for (i, seg) in segments.into_iter().enumerate().skip(1) {
            if !seg.approx_eq(merged.last().unwrap()) {
                knots.push(candidates[i - 1]);
                merged.push(seg);
            }
        }
        Some(PlProfile {
            knots,
            segments: merged,
        })
    }
}

const KNOT_MERGE_TOL: f64 = 1e-12;

impl fmt::Display for SurrogateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}-{}-{}",
            self.phi,
            self.composition.abbrev(),
            self.bias_class.abbrev()
        )
    }
}

impl FromStr for SurrogateSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split('-').collect();
        let [phi, comp, class] = parts.as_slice() else {
            return Err(Error::Parse(format!("surrogate spec '{s}'")));
        };
        let composition = match *comp {
            "at" => Composition::AllThreshold,
            "it" => Composition::ImmediateThreshold,
            other => return Err(Error::Parse(format!("composition '{other}'"))),
        };
        let bias_class = match *class {
            "o" => BiasClass::Ordered,
            "n" => BiasClass::NonOrdered,
            other => return Err(Error::Parse(format!("bias class '{other}'"))),
        };
        Ok(Self::new(phi.parse()?, composition, bias_class))
    }
}

impl TryFrom<String> for SurrogateSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SurrogateSpec> for String {
    fn from(s: SurrogateSpec) -> String {
        s.to_string()
    }
}

/// An affine piece `intercept + slope·u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub intercept: f64,
    pub slope: f64,
}

impl Segment {
    fn new(intercept: f64, slope: f64) -> Self {
        Self { intercept, slope }
    }

    fn approx_eq(&self, other: &Segment) -> bool {
        let tol = 1e-9;
        (self.intercept - other.intercept).abs() <= tol * (1.0 + self.intercept.abs())
            && (self.slope - other.slope).abs() <= tol * (1.0 + self.slope.abs())
    }
}

/// A piecewise-linear function with knots `c₁ < … < c_I` and `I + 1`
/// affine pieces on `(-∞, c₁], (c₁, c₂], …, (c_I, ∞)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlProfile {
    pub knots: Vec<f64>,
    pub segments: Vec<Segment>,
}

impl PlProfile {
    pub fn num_knots(&self) -> usize {
        self.knots.len()
    }

    fn piece_at(&self, u: f64) -> Segment {
        let i = self.knots.partition_point(|&c| c < u);
        self.segments[i]
    }

    pub fn eval(&self, u: f64) -> f64 {
        let s = self.piece_at(u);
        s.intercept + s.slope * u
    }
}

/// Ordinal task loss `ℓ(k, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum TaskLoss {
    ZeroOne,
    Absolute,
    Squared,
    /// `𝟙(|k - y| > ε)`
    ZeroOneEps(f64),
}

impl TaskLoss {
    /// The three evaluation tasks: zero-one, absolute, squared.
    pub const TASKS: [TaskLoss; 3] = [TaskLoss::ZeroOne, TaskLoss::Absolute, TaskLoss::Squared];

    #[inline]
    pub fn value(&self, k: usize, y: usize) -> f64 {
        let d = k.abs_diff(y) as f64;
        match *self {
            TaskLoss::ZeroOne => (d != 0.0) as u8 as f64,
            TaskLoss::Absolute => d,
            TaskLoss::Squared => d * d,
            TaskLoss::ZeroOneEps(eps) => (d > eps) as u8 as f64,
        }
    }

    /// Short metric name used in reports: MZE, MAE, RMSE.
    pub fn metric_name(&self) -> &'static str {
        match self {
            TaskLoss::ZeroOne => "MZE",
            TaskLoss::Absolute => "MAE",
            TaskLoss::Squared => "RMSE",
            TaskLoss::ZeroOneEps(_) => "MZE-eps",
        }
    }

    /// Reported value for a mean loss: the root for squared loss.
    pub fn report(&self, mean_loss: f64) -> f64 {
        match self {
            TaskLoss::Squared => mean_loss.max(0.0).sqrt(),
            _ => mean_loss,
        }
    }
}

impl fmt::Display for TaskLoss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TaskLoss::ZeroOne => f.write_str("zo"),
            TaskLoss::Absolute => f.write_str("ab"),
            TaskLoss::Squared => f.write_str("sq"),
            TaskLoss::ZeroOneEps(e) => write!(f, "zo:{e}"),
        }
    }
}

impl FromStr for TaskLoss {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if let Some(e) = s.strip_prefix("zo:") {
            let e: f64 = e.parse().map_err(|_| Error::Parse(format!("epsilon '{e}'")))?;
            if e.is_nan() || e <= 0.0 {
                return Err(Error::InvalidArgument(format!("epsilon {e} must be > 0")));
            }
            return Ok(TaskLoss::ZeroOneEps(e));
        }
        match s {
            "zo" => Ok(TaskLoss::ZeroOne),
            "ab" => Ok(TaskLoss::Absolute),
            "sq" => Ok(TaskLoss::Squared),
            other => Err(Error::Parse(format!("task loss '{other}'"))),
        }
    }
}

impl TryFrom<String> for TaskLoss {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<TaskLoss> for String {
    fn from(t: TaskLoss) -> String {
        t.to_string()
    }
}
