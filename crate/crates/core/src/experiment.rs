//! Experiment plans and runners behind the `ordthr` binary: population
//! simulations, sampled-data trials and theory audits.

use std::fs;
use std::path::{Path, PathBuf};

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{
    build_distribution, sample_dataset_with, trial_rng, DiscreteOrdinalDistribution, DistributionFamily, FamilyKind,
    Sample,
};
use crate::error::{Error, Result};
use crate::evaluation::{approximation_error, bayes_error, empirical_error, fmt3, write_error_csv, ErrorRow};
use crate::losses::{BasePhi, Composition, SurrogateSpec, TaskLoss};
use crate::probability::{unimodal_region_scan, BiasClass, BiasVector, ModelKind};
use crate::risk::{
    closed_form_squared_at, closed_form_squared_it, concentration, empirical_surrogate_risk, fit,
    fit_empirical_with_monitor, BatchMode, ConcentrationReport, FitConfig, FitResult, TabularModel, CONCENTRATION_TOL,
};
use crate::theory::{
    audit_bias_order, audit_fb_gaps, phase_diagram, verify_phase_against_optimizer, write_phase_csv, Phase,
    PhaseInstance, PhaseReport, ORDER_TOL, PHASE_EPOCHS,
};
use crate::thresholding::{h_thr, optimal_thresholds};

/// Sample sizes and optimizer of the sampled-data experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampledSettings {
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    /// The mini-batch seed is replaced per trial.
    pub fit: FitConfig,
    /// Shift the second half of O families so the halves do not overlap.
    pub offset_variant: bool,
}

impl Default for SampledSettings {
    fn default() -> Self {
        Self {
            n_train: 900,
            n_val: 100,
            n_test: 10_000,
            fit: FitConfig::empirical(0),
            offset_variant: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    #[serde(deserialize_with = "de_families")]
    pub distributions: Vec<DistributionFamily>,
    pub methods: Vec<SurrogateSpec>,
    pub tasks: Vec<TaskLoss>,
    pub fit: FitConfig,
    pub trials: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub sampled: SampledSettings,
}

/// Distributions may be given as names (`"H-1/3"`, with `K = 10`,
/// `N = 100`) or as full tables.
fn de_families<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Vec<DistributionFamily>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Entry {
        Name(String),
        Full(DistributionFamily),
    }
    Vec::<Entry>::deserialize(d)?
        .into_iter()
        .map(|e| match e {
            Entry::Name(s) => s
                .parse::<FamilyKind>()
                .map(DistributionFamily::standard)
                .map_err(serde::de::Error::custom),
            Entry::Full(f) => Ok(f),
        })
        .collect()
}

impl ExperimentPlan {
    /// 15 distributions, 21 methods, 3 tasks, `T = 10⁵`, 20 trials.
    pub fn full_grid(output_dir: impl Into<PathBuf>) -> Self {
        Self {
            distributions: FamilyKind::simulation_grid()
                .into_iter()
                .map(DistributionFamily::standard)
                .collect(),
            methods: SurrogateSpec::simulation_grid(),
            tasks: TaskLoss::TASKS.to_vec(),
            fit: FitConfig::population(),
            trials: 20,
            seed: 0,
            output_dir: output_dir.into(),
            sampled: SampledSettings::default(),
        }
    }

    /// Reads a TOML plan, or JSON when the extension is `.json`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let plan = if path.extension().is_some_and(|e| e == "json") {
            Self::from_json(&text)?
        } else {
            Self::from_toml(&text)?
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.distributions.is_empty() || self.methods.is_empty() || self.tasks.is_empty() {
            return Err(Error::InvalidArgument("plan lists must be non-empty".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be >= 1".into()));
        }
        let s = &self.sampled;
        if s.n_train == 0 || s.n_val == 0 || s.n_test == 0 {
            return Err(Error::InvalidArgument("sample splits must be non-empty".into()));
        }
        self.fit.validate()?;
        s.fit.validate()
    }
}

/// A failed grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub distribution: String,
    pub method: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trial: Option<usize>,
    pub error: String,
}

/// Written as `manifest.json` next to every run's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub cells: usize,
    pub failures: Vec<CellFailure>,
    /// Paths relative to the output directory.
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn succeeded(&self) -> bool {
        self.failures.is_empty()
    }
}

/// File-name form of a distribution name (`O-1/3-3` becomes `O-1_3-3`).
pub fn file_stem(name: &str) -> String {
    name.replace('/', "_")
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(e.to_string()))
}

struct Writer {
    root: PathBuf,
    outputs: Vec<String>,
}

impl Writer {
    fn new(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            outputs: Vec::new(),
        })
    }

    fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, bytes)?;
        self.outputs.push(rel.to_string());
        Ok(())
    }

    fn json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.write(rel, s.as_bytes())
    }

    fn finish(self, command: &str, cells: usize, failures: Vec<CellFailure>) -> Result<RunManifest> {
        let manifest = RunManifest {
            command: command.to_string(),
            cells,
            failures,
            outputs: self.outputs,
        };
        let mut s = serde_json::to_string_pretty(&manifest)?;
        s.push('\n');
        fs::write(self.root.join("manifest.json"), s)?;
        Ok(manifest)
    }
}

/// Error of a 1DT under one task with DP-optimal thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskResult {
    pub task: TaskLoss,
    /// Reported scale (RMSE for the squared loss).
    pub error: f64,
    pub bayes: f64,
    pub thresholds: Vec<f64>,
}

pub fn evaluate_1dt(dist: &DiscreteOrdinalDistribution, a: &[f64], tasks: &[TaskLoss]) -> Result<Vec<TaskResult>> {
    tasks
        .iter()
        .map(|&ell| {
            let t = optimal_thresholds(a, dist.cpds(), dist.weights(), ell)?.t;
            Ok(TaskResult {
                task: ell,
                error: ell.report(approximation_error(dist, a, &t, ell)),
                bayes: ell.report(bayes_error(dist, ell)),
                thresholds: t,
            })
        })
        .collect()
}

fn task_rows(distribution: &str, method: &str, results: &[TaskResult]) -> Vec<ErrorRow> {
    results
        .iter()
        .map(|r| ErrorRow {
            distribution: distribution.to_string(),
            method: method.to_string(),
            task: r.task.metric_name().to_string(),
            error: fmt3(r.error),
            bayes: fmt3(r.bayes),
            gap: fmt3(r.error - r.bayes),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationCell {
    pub method: SurrogateSpec,
    pub fit: FitResult,
    pub results: Vec<TaskResult>,
}

pub fn simulate_cell(
    dist: &DiscreteOrdinalDistribution,
    spec: &SurrogateSpec,
    cfg: &FitConfig,
    tasks: &[TaskLoss],
) -> Result<SimulationCell> {
    let f = fit(dist, spec, cfg)?;
    let results = evaluate_1dt(dist, &f.a, tasks)?;
    Ok(SimulationCell {
        method: *spec,
        fit: f,
        results,
    })
}

#[derive(Serialize)]
struct DistributionArtifact<'a> {
    distribution: String,
    family: &'a DistributionFamily,
    bayes: Vec<TaskResult>,
    cells: Vec<&'a SimulationCell>,
}

/// Population simulation: one CSV and one JSON per distribution, plus
/// `simulation/all.csv`.
pub fn run_simulation(plan: &ExperimentPlan, jobs: usize) -> Result<RunManifest> {
    plan.validate()?;
    let dists = plan
        .distributions
        .iter()
        .map(build_distribution)
        .collect::<Result<Vec<_>>>()?;
    let grid: Vec<(usize, usize)> = (0..dists.len())
        .flat_map(|d| (0..plan.methods.len()).map(move |m| (d, m)))
        .collect();
    let results: Vec<Result<SimulationCell>> = pool(jobs)?.install(|| {
        grid.par_iter()
            .map(|&(d, m)| simulate_cell(&dists[d], &plan.methods[m], &plan.fit, &plan.tasks))
            .collect()
    });

    let mut out = Writer::new(&plan.output_dir)?;
    let mut failures = Vec::new();
    let mut all_rows = Vec::new();
    let mut results = results.into_iter();
    for (fam, dist) in plan.distributions.iter().zip(&dists) {
        let name = fam.to_string();
        let bayes: Vec<TaskResult> = plan
            .tasks
            .iter()
            .map(|&ell| {
                let e = ell.report(bayes_error(dist, ell));
                TaskResult {
                    task: ell,
                    error: e,
                    bayes: e,
                    thresholds: Vec::new(),
                }
            })
            .collect();
        let mut rows = task_rows(&name, "optimal", &bayes);
        let mut cells = Vec::new();
        for spec in &plan.methods {
            match results.next().expect("one result per cell") {
                Ok(c) => cells.push(c),
                Err(e) => failures.push(CellFailure {
                    distribution: name.clone(),
                    method: spec.to_string(),
                    trial: None,
                    error: e.to_string(),
                }),
            }
        }
        for c in &cells {
            rows.extend(task_rows(&name, &c.method.to_string(), &c.results));
        }
        let stem = file_stem(&name);
        let mut buf = Vec::new();
        write_error_csv(&mut buf, &rows)?;
        out.write(&format!("simulation/{stem}.csv"), &buf)?;
        out.json(
            &format!("simulation/{stem}.json"),
            &DistributionArtifact {
                distribution: name,
                family: fam,
                bayes,
                cells: cells.iter().collect(),
            },
        )?;
        all_rows.extend(rows);
    }
    let mut buf = Vec::new();
    write_error_csv(&mut buf, &all_rows)?;
    out.write("simulation/all.csv", &buf)?;
    out.finish("simulate", grid.len(), failures)
}

/// One sampled-data trial of one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub distribution: String,
    pub method: SurrogateSpec,
    pub trial: usize,
    /// Epoch (from 1) with the lowest validation surrogate risk.
    pub best_epoch: usize,
    pub val_risk: f64,
    /// Test errors in `tasks` order, on the reported scale.
    pub test_errors: Vec<f64>,
    pub concentration: ConcentrationReport,
    pub model: TabularModel,
}

/// Seed of the sampled data for distribution index `d`: trials use
/// streams of this seed, so every method sees the same data.
pub fn data_seed(seed: u64, d: usize) -> u64 {
    seed.wrapping_add((d as u64) << 32)
}

/// Train / validation / test split of one trial, and the mini-batch seed.
/// Train, validation and test splits plus the mini-batch seed.
pub type TrialData = (Vec<Sample>, Vec<Sample>, Vec<Sample>, u64);

pub fn trial_data(fam: &DistributionFamily, settings: &SampledSettings, seed: u64, trial: usize) -> Result<TrialData> {
    let mut rng = trial_rng(seed, trial as u64);
    let n = settings.n_train + settings.n_val + settings.n_test;
    let mut data = sample_dataset_with(fam, n, &mut rng, settings.offset_variant)?;
    let batch_seed = rng.next_u64();
    let test = data.split_off(settings.n_train + settings.n_val);
    let val = data.split_off(settings.n_train);
    Ok((data, val, test, batch_seed))
}

/// Thresholds minimizing the training task risk of a tabular model.
pub fn train_thresholds(model: &TabularModel, train: &[Sample], num_classes: usize, ell: TaskLoss) -> Result<Vec<f64>> {
    let n = model.support.len();
    let mut counts = vec![vec![0.0; num_classes]; n];
    for s in train {
        counts[model.index_of(s.x)][s.y - 1] += 1.0;
    }
    let mut a = Vec::with_capacity(n);
    let mut cpds = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for (i, c) in counts.into_iter().enumerate() {
        let total: f64 = c.iter().sum();
        if total == 0.0 {
            continue;
        }
        a.push(model.a[i]);
        weights.push(total / train.len() as f64);
        cpds.push(c.into_iter().map(|v| v / total).collect::<Vec<_>>());
    }
    Ok(optimal_thresholds(&a, &cpds, &weights, ell)?.t)
}

/// Fits on the training split, keeps the epoch with the lowest validation
/// surrogate risk, tunes thresholds on the training split per task and
/// reports test errors.
pub fn run_trial(
    fam: &DistributionFamily,
    spec: &SurrogateSpec,
    settings: &SampledSettings,
    tasks: &[TaskLoss],
    seed: u64,
    trial: usize,
) -> Result<TrialResult> {
    let (train, val, test, batch_seed) = trial_data(fam, settings, seed, trial)?;
    let mut cfg = settings.fit;
    if let BatchMode::MiniBatch { batch_size, .. } = cfg.mode {
        cfg.mode = BatchMode::MiniBatch {
            batch_size,
            seed: batch_seed,
        };
    }
    let mut best: Option<(usize, f64, TabularModel)> = None;
    fit_empirical_with_monitor(&train, fam.num_classes, spec, &cfg, |epoch, m| {
        let r = empirical_surrogate_risk(m, spec, &val);
        if best.as_ref().is_none_or(|(_, b, _)| r < *b) {
            best = Some((epoch, r, m.clone()));
        }
    })?;
    let (best_epoch, val_risk, model) = best.expect("at least one epoch");
    if !val_risk.is_finite() {
        return Err(Error::Diverged {
            epoch: best_epoch,
            risk: val_risk,
        });
    }
    let test_errors = tasks
        .iter()
        .map(|&ell| {
            let t = train_thresholds(&model, &train, fam.num_classes, ell)?;
            let err = empirical_error(&test, |x| h_thr(model.value(x), &t), ell);
            Ok(ell.report(err))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrialResult {
        distribution: fam.to_string(),
        method: *spec,
        trial,
        best_epoch,
        val_risk,
        test_errors,
        concentration: concentration(&model.a, CONCENTRATION_TOL),
        model,
    })
}

/// Mean and sample standard deviation.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub distribution: String,
    pub method: String,
    pub task: String,
    pub mean: String,
    pub sd: String,
    pub trials: usize,
}

/// Sampled-data experiment: `sampled/trials.csv`, `sampled/summary.csv`
/// and the fitted models in `sampled/trials.json`.
pub fn run_sampled(plan: &ExperimentPlan, jobs: usize) -> Result<RunManifest> {
    plan.validate()?;
    let grid: Vec<(usize, usize, usize)> = (0..plan.distributions.len())
        .flat_map(|d| (0..plan.methods.len()).flat_map(move |m| (0..plan.trials).map(move |t| (d, m, t))))
        .collect();
    let results: Vec<Result<TrialResult>> = pool(jobs)?.install(|| {
        grid.par_iter()
            .map(|&(d, m, t)| {
                let seed = data_seed(plan.seed, d);
                run_trial(
                    &plan.distributions[d],
                    &plan.methods[m],
                    &plan.sampled,
                    &plan.tasks,
                    seed,
                    t,
                )
            })
            .collect()
    });

    let mut failures = Vec::new();
    let mut ok = Vec::new();
    for (&(d, m, t), r) in grid.iter().zip(results) {
        match r {
            Ok(r) => ok.push(r),
            Err(e) => failures.push(CellFailure {
                distribution: plan.distributions[d].to_string(),
                method: plan.methods[m].to_string(),
                trial: Some(t),
                error: e.to_string(),
            }),
        }
    }

    let mut out = Writer::new(&plan.output_dir)?;
    let mut wr = csv::Writer::from_writer(Vec::new());
    let mut header = vec![
        "distribution",
        "method",
        "trial",
        "best_epoch",
        "val_risk",
        "num_distinct",
    ];
    header.extend(plan.tasks.iter().map(|t| t.metric_name()));
    wr.write_record(&header)?;
    for r in &ok {
        let mut rec = vec![
            r.distribution.clone(),
            r.method.to_string(),
            r.trial.to_string(),
            r.best_epoch.to_string(),
            format!("{:.6}", r.val_risk),
            r.concentration.num_distinct.to_string(),
        ];
        rec.extend(r.test_errors.iter().map(|e| format!("{e:.6}")));
        wr.write_record(&rec)?;
    }
    out.write(
        "sampled/trials.csv",
        &wr.into_inner().map_err(|e| Error::Io(e.to_string()))?,
    )?;

    let mut summary = Vec::new();
    for fam in &plan.distributions {
        let name = fam.to_string();
        for spec in &plan.methods {
            let trials: Vec<&TrialResult> = ok
                .iter()
                .filter(|r| r.distribution == name && r.method == *spec)
                .collect();
            if trials.is_empty() {
                continue;
            }
            for (j, ell) in plan.tasks.iter().enumerate() {
                let v: Vec<f64> = trials.iter().map(|r| r.test_errors[j]).collect();
                let (mean, sd) = mean_sd(&v);
                summary.push(SummaryRow {
                    distribution: name.clone(),
                    method: spec.to_string(),
                    task: ell.metric_name().to_string(),
                    mean: fmt3(mean),
                    sd: fmt3(sd),
                    trials: v.len(),
                });
            }
        }
    }
    let mut wr = csv::Writer::from_writer(Vec::new());
    for r in &summary {
        wr.serialize(r)?;
    }
    out.write(
        "sampled/summary.csv",
        &wr.into_inner().map_err(|e| Error::Io(e.to_string()))?,
    )?;
    out.json("sampled/trials.json", &ok)?;
    out.finish("sample", grid.len(), failures)
}

/// Closed form versus numerical fit of a squared loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormRow {
    pub distribution: String,
    pub method: String,
    pub max_abs_diff_a: f64,
    pub max_abs_diff_b: f64,
    pub rmse: f64,
    pub bayes_rmse: f64,
}

pub fn closed_form_row(
    fam: &DistributionFamily,
    dist: &DiscreteOrdinalDistribution,
    spec: &SurrogateSpec,
    cfg: &FitConfig,
) -> Result<ClosedFormRow> {
    let cf = match spec.composition {
        Composition::AllThreshold => closed_form_squared_at(dist)?,
        Composition::ImmediateThreshold => closed_form_squared_it(dist)?,
    };
    let f = fit(dist, spec, cfg)?;
    let max_diff = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    let rmse = evaluate_1dt(dist, &f.a, &[TaskLoss::Squared])?.remove(0);
    Ok(ClosedFormRow {
        distribution: fam.to_string(),
        method: spec.to_string(),
        max_abs_diff_a: max_diff(&f.a, &cf.a),
        max_abs_diff_b: max_diff(f.b.values(), cf.b.values()),
        rmse: rmse.error,
        bayes_rmse: rmse.bayes,
    })
}

/// `(p₁, p₂)` of the phase-diagram panels; `(p₄, p₃) = (p₁, p₂)`.
pub const PHASE_PANELS: [(f64, f64); 6] = [(0.0, 0.5), (0.1, 0.4), (0.2, 0.3), (0.3, 0.2), (0.4, 0.1), (0.5, 0.0)];
pub const PHASE_RESOLUTION: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelSummary {
    pub p1: f64,
    pub p2: f64,
    pub cells: usize,
    pub phase1_fraction: f64,
}

pub fn panel_summary(p1: f64, p2: f64, resolution: usize) -> Result<PanelSummary> {
    let cells = phase_diagram(p1, p2, resolution)?;
    let phase1 = cells.iter().filter(|c| c.phase == Phase::Phase1).count();
    Ok(PanelSummary {
        p1,
        p2,
        cells: cells.len(),
        phase1_fraction: phase1 as f64 / cells.len() as f64,
    })
}

/// Random instances with `|slack| > min_slack`, drawn with `q` sorted and
/// `p`, `q` uniform on their simplices.
pub fn random_phase_instances(seed: u64, count: usize, min_slack: f64) -> Vec<PhaseInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut simplex = |n: usize| -> Vec<f64> {
        let e: Vec<f64> = (0..n).map(|_| -(1.0 - rand::Rng::gen::<f64>(&mut rng)).ln()).collect();
        let s: f64 = e.iter().sum();
        e.into_iter().map(|v| v / s).collect()
    };
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let p = simplex(4);
        let mut q = simplex(3);
        q.sort_by(f64::total_cmp);
        let p = [p[0], p[1], p[2], 1.0 - p[0] - p[1] - p[2]];
        let q = [q[0], q[1], 1.0 - q[0] - q[1]];
        if let Ok(inst) = PhaseInstance::new(p, q) {
            if inst.slack().abs() > min_slack {
                out.push(inst);
            }
        }
    }
    out
}

pub const PHASE_INSTANCES: usize = 50;
pub const PHASE_MIN_SLACK: f64 = 0.02;

/// Bias-order and flat-bottom audits, closed-form comparisons,
/// unimodal-region scans, phase diagrams and phase verification.
pub fn run_audits(plan: &ExperimentPlan, jobs: usize) -> Result<RunManifest> {
    plan.validate()?;
    let dists = plan
        .distributions
        .iter()
        .map(build_distribution)
        .collect::<Result<Vec<_>>>()?;
    let cfg = FitConfig {
        epochs: plan.fit.epochs,
        ..FitConfig::audit()
    };
    let order_specs: Vec<SurrogateSpec> = BasePhi::ALL
        .iter()
        .map(|&phi| SurrogateSpec {
            phi,
            composition: Composition::AllThreshold,
            bias_class: BiasClass::NonOrdered,
        })
        .collect();
    let fb_specs: Vec<SurrogateSpec> = ["hing", "smhi", "sqhi"]
        .iter()
        .flat_map(|p| ["at", "it"].map(|c| format!("{p}-{c}-o").parse().expect("valid spec")))
        .collect();
    let cf_specs: Vec<SurrogateSpec> = ["squa-at-o", "squa-it-n"]
        .map(|s| s.parse().expect("valid spec"))
        .to_vec();

    let fit_grid = |specs: &[SurrogateSpec]| -> Vec<(usize, SurrogateSpec)> {
        (0..dists.len())
            .flat_map(|d| specs.iter().map(move |s| (d, *s)))
            .collect()
    };
    let order_grid = fit_grid(&order_specs);
    let fb_grid = fit_grid(&fb_specs);
    let cf_grid = fit_grid(&cf_specs);
    let instances = random_phase_instances(plan.seed, PHASE_INSTANCES, PHASE_MIN_SLACK);
    let phase_cfg = FitConfig {
        epochs: PHASE_EPOCHS.min(plan.fit.epochs),
        ..FitConfig::audit()
    };

    let pool = pool(jobs)?;
    let (order_fits, fb_fits, cf_rows, phase_reports) = pool.install(|| {
        let run = |grid: &[(usize, SurrogateSpec)]| -> Vec<Result<FitResult>> {
            grid.par_iter().map(|(d, s)| fit(&dists[*d], s, &cfg)).collect()
        };
        let cf: Vec<Result<ClosedFormRow>> = cf_grid
            .par_iter()
            .map(|(d, s)| closed_form_row(&plan.distributions[*d], &dists[*d], s, &cfg))
            .collect();
        let phases: Vec<Result<PhaseReport>> = instances
            .par_iter()
            .map(|i| verify_phase_against_optimizer(i, &phase_cfg))
            .collect();
        (run(&order_grid), run(&fb_grid), cf, phases)
    });

    let mut failures = Vec::new();
    let mut collect = |grid: &[(usize, SurrogateSpec)], res: Vec<Result<FitResult>>| -> Vec<(String, FitResult)> {
        grid.iter()
            .zip(res)
            .filter_map(|((d, s), r)| {
                let name = plan.distributions[*d].to_string();
                match r {
                    Ok(f) => Some((name, f)),
                    Err(e) => {
                        failures.push(CellFailure {
                            distribution: name,
                            method: s.to_string(),
                            trial: None,
                            error: e.to_string(),
                        });
                        None
                    }
                }
            })
            .collect()
    };
    let order_fits = collect(&order_grid, order_fits);
    let fb_fits = collect(&fb_grid, fb_fits);
    let mut cf_ok = Vec::new();
    for ((d, s), r) in cf_grid.iter().zip(cf_rows) {
        match r {
            Ok(row) => cf_ok.push(row),
            Err(e) => failures.push(CellFailure {
                distribution: plan.distributions[*d].to_string(),
                method: s.to_string(),
                trial: None,
                error: e.to_string(),
            }),
        }
    }
    let mut reports = Vec::new();
    for (i, r) in phase_reports.into_iter().enumerate() {
        match r {
            Ok(r) => reports.push(r),
            Err(e) => failures.push(CellFailure {
                distribution: format!("phase-instance-{i}"),
                method: "hing-it-o".into(),
                trial: None,
                error: e.to_string(),
            }),
        }
    }

    let mut out = Writer::new(&plan.output_dir)?;
    out.json("audit/bias_order.json", &audit_bias_order(&order_fits, ORDER_TOL))?;
    out.json("audit/fb_gaps.json", &audit_fb_gaps(&fb_fits, 1e-6, 1e-3))?;
    out.json("audit/closed_form.json", &cf_ok)?;

    #[derive(Serialize)]
    struct ConcentrationRow<'a> {
        distribution: &'a str,
        method: String,
        report: &'a ConcentrationReport,
    }
    let conc: Vec<ConcentrationRow> = order_fits
        .iter()
        .chain(&fb_fits)
        .filter(|(_, f)| matches!(f.spec.phi, BasePhi::Hinge | BasePhi::Absolute))
        .map(|(d, f)| ConcentrationRow {
            distribution: d,
            method: f.spec.to_string(),
            report: &f.concentration,
        })
        .collect();
    out.json("audit/concentration.json", &conc)?;

    for delta in [1.0 / 3.0, 1.0, 3.0] {
        let k = DistributionFamily::STANDARD_CLASSES;
        let biases = [
            ("equal", BiasVector::equal_interval(delta, k)?),
            ("unequal", BiasVector::unequal_interval(delta, k)?),
            ("swapped", BiasVector::swapped_interval(delta, k)?),
        ];
        for (label, b) in &biases {
            let lo = b.values().iter().copied().fold(f64::INFINITY, f64::min) - 2.0 * delta;
            let hi = b.values().iter().copied().fold(f64::NEG_INFINITY, f64::max) + 2.0 * delta;
            let grid: Vec<f64> = (0..UNIMODAL_GRID)
                .map(|i| lo + (hi - lo) * i as f64 / (UNIMODAL_GRID - 1) as f64)
                .collect();
            for model in [ModelKind::CumulativeLogit, ModelKind::AdjacentCategoriesLogit] {
                if model == ModelKind::CumulativeLogit && !b.is_sorted() {
                    continue;
                }
                let scan = unimodal_region_scan(model, b, &grid)?;
                let mut wr = csv::Writer::from_writer(Vec::new());
                wr.write_record(["u", "unimodal"])?;
                for (u, s) in grid.iter().zip(scan) {
                    wr.write_record([format!("{u:.6}"), (s as u8).to_string()])?;
                }
                let name = format!(
                    "audit/unimodal/{}-{label}-{}.csv",
                    model_name(model),
                    file_stem(&fmt_delta(delta))
                );
                out.write(&name, &wr.into_inner().map_err(|e| Error::Io(e.to_string()))?)?;
            }
        }
    }

    let mut panels = Vec::new();
    for (p1, p2) in PHASE_PANELS {
        let cells = phase_diagram(p1, p2, PHASE_RESOLUTION)?;
        let mut buf = Vec::new();
        write_phase_csv(&mut buf, &cells)?;
        out.write(&format!("audit/phase/p1_{p1:.1}_p2_{p2:.1}.csv"), &buf)?;
        panels.push(panel_summary(p1, p2, PHASE_RESOLUTION)?);
    }
    out.json("audit/phase/panels.json", &panels)?;
    out.json("audit/phase/verification.json", &reports)?;

    let cells = order_grid.len() + fb_grid.len() + cf_grid.len() + instances.len();
    out.finish("audit", cells, failures)
}

pub const UNIMODAL_GRID: usize = 1000;

fn model_name(m: ModelKind) -> &'static str {
    match m {
        ModelKind::CumulativeLogit => "cl",
        ModelKind::AdjacentCategoriesLogit => "acl",
    }
}

fn fmt_delta(delta: f64) -> String {
    FamilyKind::H { delta }.to_string().trim_start_matches("H-").to_string()
}

/// Phase-diagram CSVs for the given panels.
pub fn run_phase_diagrams(output_dir: &Path, panels: &[(f64, f64)], resolution: usize) -> Result<RunManifest> {
    let mut out = Writer::new(output_dir)?;
    let mut summaries = Vec::new();
    for &(p1, p2) in panels {
        let cells = phase_diagram(p1, p2, resolution)?;
        let mut buf = Vec::new();
        write_phase_csv(&mut buf, &cells)?;
        out.write(&format!("phase/p1_{p1:.1}_p2_{p2:.1}.csv"), &buf)?;
        summaries.push(panel_summary(p1, p2, resolution)?);
    }
    out.json("phase/panels.json", &summaries)?;
    out.finish("phase-diagram", panels.len(), Vec::new())
}
