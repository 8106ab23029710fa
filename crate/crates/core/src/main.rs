use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ordinal_threshold::distributions::{DistributionFamily, FamilyKind};
use ordinal_threshold::experiment::{
    run_audits, run_phase_diagrams, run_sampled, run_simulation, ExperimentPlan, RunManifest, PHASE_PANELS,
    PHASE_RESOLUTION,
};
use ordinal_threshold::risk::FitConfig;
use ordinal_threshold::SurrogateSpec;

#[derive(Parser)]
#[command(name = "ordthr", version, about = "Threshold methods for ordinal regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Population simulation: error tables per distribution.
    Simulate(RunArgs),
    /// Sampled-data trials with validation model selection.
    Sample(RunArgs),
    /// Bias-order, flat-bottom and closed-form audits, unimodal scans and
    /// phase checks.
    Audit(RunArgs),
    /// Phase-transition diagrams of the four-point hinge-IT example.
    PhaseDiagram(PhaseArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML or JSON plan; defaults to the full 15 x 21 grid.
    #[arg(long)]
    plan: Option<PathBuf>,
    /// Population fits with T = 20000 instead of 100000.
    #[arg(long)]
    fast: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Parallel fits.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    trials: Option<usize>,
    /// Comma-separated distribution names, e.g. `H-1/3,O-1-3`.
    #[arg(long, value_delimiter = ',')]
    distributions: Option<Vec<String>>,
    /// Comma-separated methods, e.g. `logi-at-o,hing-it-n`.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
}

#[derive(Args)]
struct PhaseArgs {
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Mass of points 1 and 4; with `--p2`, draws a single panel.
    #[arg(long, requires = "p2")]
    p1: Option<f64>,
    /// Mass of points 2 and 3.
    #[arg(long, requires = "p1")]
    p2: Option<f64>,
    #[arg(long, default_value_t = PHASE_RESOLUTION)]
    resolution: usize,
}

fn build_plan(args: &RunArgs) -> Result<ExperimentPlan, String> {
    let mut plan = match &args.plan {
        Some(p) => ExperimentPlan::load(p).map_err(|e| format!("{}: {e}", p.display()))?,
        None => ExperimentPlan::full_grid("out"),
    };
    if let Some(out) = &args.out {
        plan.output_dir = out.clone();
    }
    if let Some(seed) = args.seed {
        plan.seed = seed;
    }
    if let Some(t) = args.trials {
        plan.trials = t;
    }
    if args.fast {
        plan.fit.epochs = FitConfig::FAST_EPOCHS;
    }
    if let Some(names) = &args.distributions {
        plan.distributions = names
            .iter()
            .map(|n| n.parse::<FamilyKind>().map(DistributionFamily::standard))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
    }
    if let Some(names) = &args.methods {
        plan.methods = names
            .iter()
            .map(|n| n.parse::<SurrogateSpec>())
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
    }
    plan.validate().map_err(|e| e.to_string())?;
    Ok(plan)
}

fn report(manifest: &RunManifest, out: &std::path::Path) -> ExitCode {
    println!(
        "{}: {} cells, {} failed, {} files in {}",
        manifest.command,
        manifest.cells,
        manifest.failures.len(),
        manifest.outputs.len(),
        out.display()
    );
    for f in &manifest.failures {
        eprintln!("failed: {} {} {}", f.distribution, f.method, f.error);
    }
    if manifest.succeeded() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) | Command::Sample(a) | Command::Audit(a) => build_plan(a).and_then(|plan| {
            let run = match &cli.command {
                Command::Simulate(_) => run_simulation,
                Command::Sample(_) => run_sampled,
                _ => run_audits,
            };
            run(&plan, a.jobs)
                .map(|m| (m, plan.output_dir.clone()))
                .map_err(|e| e.to_string())
        }),
        Command::PhaseDiagram(a) => {
            let panels = match (a.p1, a.p2) {
                (Some(p1), Some(p2)) => vec![(p1, p2)],
                _ => PHASE_PANELS.to_vec(),
            };
            run_phase_diagrams(&a.out, &panels, a.resolution)
                .map(|m| (m, a.out.clone()))
                .map_err(|e| e.to_string())
        }
    };
    match result {
        Ok((manifest, out)) => report(&manifest, &out),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
