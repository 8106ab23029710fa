//! Checks of analytic results: the hinge-IT phase transition on four
//! points, and audits of fitted bias vectors.

use std::io;

use serde::{Deserialize, Serialize};

use crate::distributions::DiscreteOrdinalDistribution;
use crate::error::{Error, Result};
use crate::losses::SurrogateSpec;
use crate::probability::Pmf;
use crate::risk::{fit, FitConfig, FitResult};

/// Region of a 3-class CPD in the hinge-IT analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    /// `p₁ > p₂ + p₃`
    X1,
    /// `p₂ > p₁ - p₃ > 0`
    X2,
    /// `p₂ > p₃ - p₁ > 0`
    X3,
    /// `p₃ > p₁ + p₂`
    X4,
    Boundary,
}

pub fn region_of(p: &[f64]) -> Region {
    let [p1, p2, p3] = [p[0], p[1], p[2]];
    if p1 > p2 + p3 {
        Region::X1
    } else if p3 > p1 + p2 {
        Region::X4
    } else if p2 > p1 - p3 && p1 - p3 > 0.0 {
        Region::X2
    } else if p2 > p3 - p1 && p3 - p1 > 0.0 {
        Region::X3
    } else {
        Region::Boundary
    }
}

pub fn region_partition<R: AsRef<[f64]>>(cpds: &[R]) -> Result<Vec<Region>> {
    cpds.iter()
        .map(|p| {
            let p = p.as_ref();
            if p.len() != 3 {
                return Err(Error::InvalidArgument(format!("regions need K = 3, got {}", p.len())));
            }
            Ok(region_of(p))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    /// `b̄ = (0, 0)`
    Phase1,
    /// `b̄ = (0, 2)`
    Phase2,
    Boundary,
}

impl Phase {
    pub fn name(&self) -> &'static str {
        match self {
            Phase::Phase1 => "phase1",
            Phase::Phase2 => "phase2",
            Phase::Boundary => "boundary",
        }
    }
}

pub const PHASE_TOL: f64 = 1e-12;

/// Four points with masses `p` and CPDs `(q₁,q₂,q₃)`, `(q₁,q₃,q₂)`,
/// `(q₂,q₃,q₁)`, `(q₃,q₂,q₁)`, where `0 ≤ q₁ < q₂ < q₃`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseInstance {
    pub p: [f64; 4],
    pub q: [f64; 3],
}

impl PhaseInstance {
    pub fn new(p: [f64; 4], q: [f64; 3]) -> Result<Self> {
        if p.iter().any(|x| !(0.0..=1.0).contains(x)) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("p = {p:?} is not a distribution")));
        }
        if !(0.0 <= q[0] && q[0] < q[1] && q[1] < q[2]) || (q.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "q = {q:?} must satisfy 0 <= q1 < q2 < q3, sum 1"
            )));
        }
        Ok(Self { p, q })
    }

    pub fn cpds(&self) -> [[f64; 3]; 4] {
        let [q1, q2, q3] = self.q;
        [[q1, q2, q3], [q1, q3, q2], [q2, q3, q1], [q3, q2, q1]]
    }

    /// `LHS - RHS` of the transition condition evaluated from the regions:
    /// `Pr(X ∈ X₂∪X₄, Y=1) + Pr(X ∈ X₁∪X₃, Y=3) - Pr(X ∈ X₂∪X₃, Y=2)`.
    pub fn slack(&self) -> f64 {
        self.cpds()
            .iter()
            .zip(&self.p)
            .map(|(c, w)| {
                let r = region_of(c);
                let mut s = 0.0;
                if matches!(r, Region::X2 | Region::X4) {
                    s += c[0];
                }
                if matches!(r, Region::X1 | Region::X3) {
                    s += c[2];
                }
                if matches!(r, Region::X2 | Region::X3) {
                    s -= c[1];
                }
                w * s
            })
            .sum()
    }

    pub fn distribution(&self) -> Result<DiscreteOrdinalDistribution> {
        let cpds = self
            .cpds()
            .iter()
            .map(|c| Pmf::new(c.to_vec()))
            .collect::<Result<Vec<_>>>()?;
        DiscreteOrdinalDistribution::new(vec![1.0, 2.0, 3.0, 4.0], cpds, self.p.to_vec())
    }

    /// Per-point 1DT values of the minimizer in `phase`.
    pub fn expected_a(&self, phase: Phase) -> Option<[f64; 4]> {
        let b2 = match phase {
            Phase::Phase1 => 0.0,
            Phase::Phase2 => 2.0,
            Phase::Boundary => return None,
        };
        let mut out = [0.0; 4];
        for (o, c) in out.iter_mut().zip(self.cpds()) {
            *o = match (phase, region_of(&c)) {
                (_, Region::Boundary) => return None,
                (_, Region::X1) => -1.0,
                (Phase::Phase1, Region::X2) => -1.0,
                (_, Region::X2) => b2 - 1.0,
                (_, Region::X3) => 1.0,
                (Phase::Phase1, Region::X4) => 1.0,
                (_, Region::X4) => b2 + 1.0,
            };
        }
        Some(out)
    }
}

/// Phase from the reduced two-branch condition.
pub fn phase_of(inst: &PhaseInstance) -> Phase {
    let [p1, p2, p3, p4] = inst.p;
    let [q1, q2, q3] = inst.q;
    let diff = if q3 > q1 + q2 + PHASE_TOL {
        (p1 + p4) * q1 - (p2 + p3) * (q3 - q2)
    } else if q3 < q1 + q2 - PHASE_TOL {
        (p1 + p4) - (p2 + p3)
    } else {
        return Phase::Boundary;
    };
    if diff > PHASE_TOL {
        Phase::Phase1
    } else if diff < -PHASE_TOL {
        Phase::Phase2
    } else {
        Phase::Boundary
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseCell {
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub phase: Phase,
}

/// Phases on the lattice `q = (i, j, k)/n` with `i < j < k`, for
/// `p = (p₁, p₂, p₂, p₁)`.
pub fn phase_diagram(p1: f64, p2: f64, resolution: usize) -> Result<Vec<PhaseCell>> {
    if resolution < 3 {
        return Err(Error::InvalidArgument("resolution must be >= 3".into()));
    }
    let p = [p1, p2, p2, p1];
    let n = resolution as f64;
    let mut out = Vec::new();
    for i in 0..=resolution {
        for j in i + 1..=resolution {
            if i + j >= resolution {
                break;
            }
            let k = resolution - i - j;
            if k <= j {
                continue;
            }
            let q = [i as f64 / n, j as f64 / n, k as f64 / n];
            let inst = PhaseInstance::new(p, q)?;
            out.push(PhaseCell {
                q1: q[0],
                q2: q[1],
                q3: q[2],
                phase: phase_of(&inst),
            });
        }
    }
    Ok(out)
}

pub fn write_phase_csv<W: io::Write>(w: W, cells: &[PhaseCell]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["q1", "q2", "q3", "phase"])?;
    for c in cells {
        wr.write_record([
            format!("{:.6}", c.q1),
            format!("{:.6}", c.q2),
            format!("{:.6}", c.q3),
            c.phase.name().to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KnotStatus {
    /// Every 1DT value is within tolerance of its predicted knot.
    AtKnot,
    /// Some value sits elsewhere (the minimizer set is not a single point).
    OnPlateau,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseReport {
    pub instance: PhaseInstance,
    pub slack: f64,
    pub predicted: Phase,
    /// `None` when `b̄₂` is near neither 0 nor 2.
    pub observed: Option<Phase>,
    pub fitted_b2: f64,
    pub fitted_a: Vec<f64>,
    pub expected_a: Option<[f64; 4]>,
    pub knots: KnotStatus,
    pub agrees: bool,
}

pub const PHASE_EPOCHS: usize = 50_000;
pub const PHASE_CLUSTER_TOL: f64 = 0.05;

/// Fits hing-IT-O on the instance and compares the fitted phase with
/// [`phase_of`]. Boundary instances agree with either phase.
pub fn verify_phase_against_optimizer(inst: &PhaseInstance, cfg: &FitConfig) -> Result<PhaseReport> {
    let dist = inst.distribution()?;
    let spec: SurrogateSpec = "hing-it-o".parse()?;
    let f = fit(&dist, &spec, cfg)?;
    let b2 = f.b.values()[1];
    let observed = if b2.abs() <= PHASE_CLUSTER_TOL {
        Some(Phase::Phase1)
    } else if (b2 - 2.0).abs() <= PHASE_CLUSTER_TOL {
        Some(Phase::Phase2)
    } else {
        None
    };
    let predicted = phase_of(inst);
    let expected_a = inst.expected_a(predicted);
    let knots = match expected_a {
        None => KnotStatus::NotApplicable,
        Some(e) => {
            let ok = e
                .iter()
                .zip(&f.a)
                .zip(&inst.p)
                .all(|((e, a), w)| *w == 0.0 || (e - a).abs() <= PHASE_CLUSTER_TOL);
            if ok {
                KnotStatus::AtKnot
            } else {
                KnotStatus::OnPlateau
            }
        }
    };
    let agrees = match predicted {
        Phase::Boundary => true,
        p => observed == Some(p),
    };
    Ok(PhaseReport {
        instance: *inst,
        slack: inst.slack(),
        predicted,
        observed,
        fitted_b2: b2,
        fitted_a: f.a,
        expected_a,
        knots,
        agrees,
    })
}

/// Which order condition a fitted loss satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrderCondition {
    /// Every minimizer has sorted biases.
    Strict,
    /// Some minimizer has sorted biases.
    Weak,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasOrderRow {
    pub distribution: String,
    pub method: String,
    pub condition: OrderCondition,
    pub min_gap: f64,
    /// Gaps below `-tol`.
    pub violations: usize,
    /// Gaps within `±tol`.
    pub ties: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasOrderAudit {
    pub tol: f64,
    pub rows: Vec<BiasOrderRow>,
    /// Violations among fits whose loss satisfies the strict condition.
    pub strict_violations: usize,
}

pub const ORDER_TOL: f64 = 1e-6;

/// Sortedness of fitted biases, tabulated by loss and order condition.
pub fn audit_bias_order(fits: &[(String, FitResult)], tol: f64) -> BiasOrderAudit {
    let rows: Vec<BiasOrderRow> = fits
        .iter()
        .map(|(dist, f)| {
            let phi = f.spec.phi;
            let condition = if phi.strict_order_condition() {
                OrderCondition::Strict
            } else if phi.weak_order_condition() {
                OrderCondition::Weak
            } else {
                OrderCondition::None
            };
            BiasOrderRow {
                distribution: dist.clone(),
                method: f.spec.to_string(),
                condition,
                min_gap: f.bias_gaps.iter().copied().fold(f64::INFINITY, f64::min),
                violations: f.bias_gaps.iter().filter(|&&g| g < -tol).count(),
                ties: f.bias_gaps.iter().filter(|g| g.abs() <= tol).count(),
            }
        })
        .collect();
    let strict_violations = rows
        .iter()
        .filter(|r| r.condition == OrderCondition::Strict)
        .map(|r| r.violations)
        .sum();
    BiasOrderAudit {
        tol,
        rows,
        strict_violations,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub distribution: String,
    pub method: String,
    pub edge: f64,
    pub min_gap: f64,
    pub max_gap: f64,
    pub within: bool,
}

/// Bias gaps of flat-bottom fits against `[-lower_tol, 2c + upper_tol]`.
pub fn audit_fb_gaps(fits: &[(String, FitResult)], lower_tol: f64, upper_tol: f64) -> Vec<GapRow> {
    fits.iter()
        .filter_map(|(dist, f)| {
            let c = f.spec.phi.fb_edge()?;
            let min_gap = f.bias_gaps.iter().copied().fold(f64::INFINITY, f64::min);
            let max_gap = f.bias_gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            Some(GapRow {
                distribution: dist.clone(),
                method: f.spec.to_string(),
                edge: c,
                min_gap,
                max_gap,
                within: min_gap >= -lower_tol && max_gap <= 2.0 * c + upper_tol,
            })
        })
        .collect()
}
