//! Surrogate-risk minimization over discrete populations and samples.

mod adam;
pub mod closed_form;
pub mod empirical;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use adam::{Adam, AdamParams};
pub use closed_form::{closed_form_squared_at, closed_form_squared_it, ClosedForm};
pub use empirical::{empirical_surrogate_risk, fit_empirical, fit_empirical_with_monitor, EmpiricalFit, TabularModel};

use crate::distributions::DiscreteOrdinalDistribution;
use crate::error::{Error, Result};
use crate::losses::{BasePhi, Composition, SurrogateSpec};
use crate::probability::{BiasClass, BiasVector};

/// Learning rate `0.1^(start + span·t/T)` at epoch `t` of `T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrSchedule {
    pub start: f64,
    pub span: f64,
}

impl LrSchedule {
    /// `0.1^(1 + 3t/T)`, used for population fits.
    pub const POPULATION: LrSchedule = LrSchedule { start: 1.0, span: 3.0 };
    /// `0.1^(2.5 + t/T)`, used for sample fits.
    pub const EMPIRICAL: LrSchedule = LrSchedule { start: 2.5, span: 1.0 };

    pub fn rate(&self, t: usize, total: usize) -> f64 {
        0.1f64.powf(self.start + self.span * t as f64 / total as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Init {
    /// `a = 0`, `b_k = 0.1(k - 1)`.
    Zeros,
    /// As `Zeros` with `a_i ~ U(-0.01, 0.01)`.
    SmallRandom { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BatchMode {
    FullBatch,
    MiniBatch { batch_size: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub epochs: usize,
    pub lr: LrSchedule,
    pub adam: AdamParams,
    pub init: Init,
    pub mode: BatchMode,
    /// Epochs between divergence checks of full-batch fits.
    pub check_every: usize,
    /// Fraction of final epochs whose iterates are averaged into the
    /// returned parameters; 0 returns the last iterate.
    #[serde(default)]
    pub tail_average: f64,
}

impl FitConfig {
    pub const POPULATION_EPOCHS: usize = 100_000;
    pub const FAST_EPOCHS: usize = 20_000;
    pub const EMPIRICAL_EPOCHS: usize = 2_000;
    pub const EMPIRICAL_BATCH: usize = 4;

    /// Full-batch Adam, `T = 10⁵`.
    pub fn population() -> Self {
        Self {
            epochs: Self::POPULATION_EPOCHS,
            lr: LrSchedule::POPULATION,
            adam: AdamParams::default(),
            init: Init::Zeros,
            mode: BatchMode::FullBatch,
            check_every: 1000,
            tail_average: 0.0,
        }
    }

    /// Full-batch Adam, `T = 2·10⁴`.
    pub fn population_fast() -> Self {
        Self {
            epochs: Self::FAST_EPOCHS,
            ..Self::population()
        }
    }

    /// Fraction of epochs averaged by [`FitConfig::audit`].
    pub const AUDIT_TAIL: f64 = 0.01;

    /// [`FitConfig::population`] with the final 1% of iterates averaged,
    /// which removes optimizer jitter from bias-gap audits.
    pub fn audit() -> Self {
        Self {
            tail_average: Self::AUDIT_TAIL,
            ..Self::population()
        }
    }

    /// Mini-batch (4) Adam, `T = 2000` epochs.
    pub fn empirical(seed: u64) -> Self {
        Self {
            epochs: Self::EMPIRICAL_EPOCHS,
            lr: LrSchedule::EMPIRICAL,
            adam: AdamParams::default(),
            init: Init::Zeros,
            mode: BatchMode::MiniBatch {
                batch_size: Self::EMPIRICAL_BATCH,
                seed,
            },
            check_every: 1,
            tail_average: 0.0,
        }
    }

    pub fn with_epochs(self, epochs: usize) -> Self {
        Self { epochs, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be >= 1".into()));
        }
        if self.check_every == 0 {
            return Err(Error::InvalidArgument("check_every must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.tail_average) {
            return Err(Error::InvalidArgument("tail_average must lie in [0, 1)".into()));
        }
        if let BatchMode::MiniBatch { batch_size: 0, .. } = self.mode {
            return Err(Error::InvalidArgument("batch size must be >= 1".into()));
        }
        Ok(())
    }
}

/// Clusters of nearly equal 1DT values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub tol: f64,
    pub num_distinct: usize,
    /// Cluster sizes in ascending order of value.
    pub cluster_sizes: Vec<usize>,
    pub cluster_centers: Vec<f64>,
}

pub const CONCENTRATION_TOL: f64 = 1e-3;

/// Single-linkage clustering of sorted values with gap threshold `tol`.
pub fn concentration(values: &[f64], tol: f64) -> ConcentrationReport {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mut sizes = Vec::new();
    let mut centers = Vec::new();
    let mut start = 0;
    for i in 1..=v.len() {
        if i == v.len() || v[i] - v[i - 1] > tol {
            let cluster = &v[start..i];
            sizes.push(cluster.len());
            centers.push(cluster.iter().sum::<f64>() / cluster.len() as f64);
            start = i;
        }
    }
    ConcentrationReport {
        tol,
        num_distinct: sizes.len(),
        cluster_sizes: sizes,
        cluster_centers: centers,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub spec: SurrogateSpec,
    /// 1DT value per support point.
    pub a: Vec<f64>,
    pub b: BiasVector,
    pub risk: f64,
    pub epochs: usize,
    pub bias_gaps: Vec<f64>,
    pub concentration: ConcentrationReport,
}

impl FitResult {
    pub(crate) fn new(spec: SurrogateSpec, a: Vec<f64>, b: Vec<f64>, risk: f64, epochs: usize) -> Result<Self> {
        let b = BiasVector::new(b, spec.bias_class)?;
        let bias_gaps = b.gaps();
        let concentration = concentration(&a, CONCENTRATION_TOL);
        Ok(Self {
            spec,
            a,
            b,
            risk,
            epochs,
            bias_gaps,
            concentration,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Exact population risk `Σ_i w_i Σ_y p_{i,y} φ(a_i, b, y)`.
pub fn objective(dist: &DiscreteOrdinalDistribution, spec: &SurrogateSpec, a: &[f64], b: &[f64]) -> f64 {
    dist.weights()
        .iter()
        .zip(a)
        .enumerate()
        .map(|(i, (w, ai))| w * spec.conditional_risk(*ai, b, dist.row(i)))
        .sum()
}

/// Weighted per-threshold coefficients: row `i` holds `w_i α_{i,k}` and
/// `w_i β_{i,k}` for `k = 1..K-1`.
pub(crate) struct Coefficients {
    pub(crate) k1: usize,
    pub(crate) alpha: Vec<f64>,
    pub(crate) beta: Vec<f64>,
}

impl Coefficients {
    pub(crate) fn new(dist: &DiscreteOrdinalDistribution, comp: Composition) -> Self {
        let k1 = dist.num_classes() - 1;
        let n = dist.num_points();
        let mut alpha = Vec::with_capacity(n * k1);
        let mut beta = Vec::with_capacity(n * k1);
        for (i, w) in dist.weights().iter().enumerate() {
            let (al, be) = comp.threshold_weights(dist.row(i));
            alpha.extend(al.iter().map(|x| w * x));
            beta.extend(be.iter().map(|x| w * x));
        }
        Self { k1, alpha, beta }
    }
}

#[inline(always)]
fn kernel<F: Fn(f64) -> (f64, f64)>(
    dphi: F,
    a: &[f64],
    b: &[f64],
    coef: &Coefficients,
    ga: &mut [f64],
    gb: &mut [f64],
) {
    let k1 = coef.k1;
    for (i, (ai, gai)) in a.iter().zip(ga.iter_mut()).enumerate() {
        let al = &coef.alpha[i * k1..(i + 1) * k1];
        let be = &coef.beta[i * k1..(i + 1) * k1];
        let mut acc = 0.0;
        for k in 0..k1 {
            if al[k] == 0.0 && be[k] == 0.0 {
                continue;
            }
            let (d1, d2) = dphi(ai - b[k]);
            let t = al[k] * d1 - be[k] * d2;
            acc += t;
            gb[k] -= t;
        }
        *gai = acc;
    }
}

/// Overwrites `ga` and adds to `gb` (which the caller zeroes).
pub(crate) fn gradient_into(phi: BasePhi, a: &[f64], b: &[f64], coef: &Coefficients, ga: &mut [f64], gb: &mut [f64]) {
    match phi {
        BasePhi::Logistic => kernel(|z| BasePhi::Logistic.derivative_pair(z), a, b, coef, ga, gb),
        BasePhi::Hinge => kernel(|z| BasePhi::Hinge.derivative_pair(z), a, b, coef, ga, gb),
        BasePhi::Ramp { s } => kernel(|z| BasePhi::Ramp { s }.derivative_pair(z), a, b, coef, ga, gb),
        BasePhi::SmoothedHinge => kernel(|z| BasePhi::SmoothedHinge.derivative_pair(z), a, b, coef, ga, gb),
        BasePhi::SquaredHinge => kernel(|z| BasePhi::SquaredHinge.derivative_pair(z), a, b, coef, ga, gb),
        BasePhi::Exponential => kernel(|z| BasePhi::Exponential.derivative_pair(z), a, b, coef, ga, gb),
        BasePhi::Absolute => kernel(|z| BasePhi::Absolute.derivative_pair(z), a, b, coef, ga, gb),
        BasePhi::Squared => kernel(|z| BasePhi::Squared.derivative_pair(z), a, b, coef, ga, gb),
    }
}

/// Gradient of [`objective`] with respect to `a` and every `b_k`
/// (including the pinned `b_1`).
pub fn objective_gradient(
    dist: &DiscreteOrdinalDistribution,
    spec: &SurrogateSpec,
    a: &[f64],
    b: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let coef = Coefficients::new(dist, spec.composition);
    let mut ga = vec![0.0; a.len()];
    let mut gb = vec![0.0; b.len()];
    gradient_into(spec.phi, a, b, &coef, &mut ga, &mut gb);
    (ga, gb)
}

/// Free bias parameters: `b_2..b_{K-1}` for the non-ordered class,
/// `c_1..c_{K-2}` with `b_{k+1} = b_k + c_k²` for the ordered class.
pub(crate) fn initial_free_bias(class: BiasClass, k1: usize) -> Vec<f64> {
    match class {
        BiasClass::NonOrdered => (1..k1).map(|k| 0.1 * k as f64).collect(),
        BiasClass::Ordered => vec![0.1f64.sqrt(); k1 - 1],
    }
}

pub(crate) fn bias_from_free(class: BiasClass, free: &[f64], b: &mut [f64]) {
    b[0] = 0.0;
    match class {
        BiasClass::NonOrdered => b[1..].copy_from_slice(free),
        BiasClass::Ordered => {
            for (k, c) in free.iter().enumerate() {
                b[k + 1] = b[k] + c * c;
            }
        }
    }
}

pub(crate) fn chain_bias_grad(class: BiasClass, free: &[f64], gb: &[f64], out: &mut [f64]) {
    match class {
        BiasClass::NonOrdered => out.copy_from_slice(&gb[1..]),
        BiasClass::Ordered => {
            let mut tail = 0.0;
            for k in (0..free.len()).rev() {
                tail += gb[k + 1];
                out[k] = 2.0 * free[k] * tail;
            }
        }
    }
}

pub(crate) fn initial_a(init: Init, n: usize) -> Vec<f64> {
    match init {
        Init::Zeros => vec![0.0; n],
        Init::SmallRandom { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n).map(|_| rng.gen_range(-0.01..0.01)).collect()
        }
    }
}

/// Minimizes the population surrogate risk with full-batch Adam.
pub fn fit(dist: &DiscreteOrdinalDistribution, spec: &SurrogateSpec, cfg: &FitConfig) -> Result<FitResult> {
    cfg.validate()?;
    if cfg.mode != BatchMode::FullBatch {
        return Err(Error::InvalidArgument("population fits are full-batch".into()));
    }
    let n = dist.num_points();
    let k1 = dist.num_classes() - 1;
    let coef = Coefficients::new(dist, spec.composition);
    let class = spec.bias_class;

    let mut theta = initial_a(cfg.init, n);
    theta.extend(initial_free_bias(class, k1));
    let mut grad = vec![0.0; theta.len()];
    let mut b = vec![0.0; k1];
    let mut gb = vec![0.0; k1];
    let mut opt = Adam::new(theta.len(), cfg.adam);
    let tail_start = cfg.epochs - (cfg.tail_average * cfg.epochs as f64) as usize;
    let mut mean = vec![0.0; theta.len()];

    for t in 0..cfg.epochs {
        let (a, free) = theta.split_at(n);
        bias_from_free(class, free, &mut b);
        gb.fill(0.0);
        let (ga, gfree) = grad.split_at_mut(n);
        gradient_into(spec.phi, a, &b, &coef, ga, &mut gb);
        chain_bias_grad(class, free, &gb, gfree);
        opt.step(&mut theta, &grad, cfg.lr.rate(t, cfg.epochs));
        if t >= tail_start {
            let m = (t - tail_start + 1) as f64;
            for (mu, th) in mean.iter_mut().zip(&theta) {
                *mu += (th - *mu) / m;
            }
        }

        if (t + 1) % cfg.check_every == 0 {
            let (a, free) = theta.split_at(n);
            bias_from_free(class, free, &mut b);
            let risk = objective(dist, spec, a, &b);
            if !risk.is_finite() {
                return Err(Error::Diverged { epoch: t + 1, risk });
            }
        }
    }

    if tail_start < cfg.epochs {
        theta = mean;
    }
    let (a, free) = theta.split_at(n);
    bias_from_free(class, free, &mut b);
    let risk = objective(dist, spec, a, &b);
    if !risk.is_finite() {
        return Err(Error::Diverged {
            epoch: cfg.epochs,
            risk,
        });
    }
    FitResult::new(*spec, a.to_vec(), b, risk, cfg.epochs)
}
