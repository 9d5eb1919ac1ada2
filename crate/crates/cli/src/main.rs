//! Command-line experiment runner.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use implicit_core::envs::{FunctionKind, ParticleConfig};
use implicit_core::harness::commands::{self, ComparisonSpec, SparsitySpec};
use implicit_core::harness::{ExperimentSpec, ResultRecord, Task};
use implicit_core::{Error, Result};

#[derive(Parser)]
#[command(name = "implicit", about = "Implicit (energy-based) behavioral cloning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Seed; for training commands it replaces the experiment's seed list.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SpecArgs {
    /// Experiment spec JSON (or a previous result.json to re-run).
    #[arg(long)]
    spec: Option<PathBuf>,
    /// dfo, autoregressive_dfo, langevin, mse, mdn, nearest_neighbor.
    #[arg(long)]
    method: Option<String>,
    /// Particle dimension N.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    n_demos: Option<usize>,
    /// Function kind for fit-function.
    #[arg(long)]
    kind: Option<FunctionKind>,
    #[arg(long)]
    n_points: Option<usize>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    eval_seed: Option<u64>,
    #[arg(long)]
    test_points: Option<usize>,
    #[arg(long)]
    train_iterations: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Roll out the scripted oracle and store successful demonstrations.
    GenDemos {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 2000)]
        n_demos: usize,
    },
    /// Train one model per seed on a particle or function task.
    Train {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        spec: SpecArgs,
        /// Demonstrations from gen-demos instead of regenerating them.
        #[arg(long)]
        demos: Option<PathBuf>,
    },
    /// Closed-loop particle evaluation; trains first unless --models is given.
    EvalPolicy {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        spec: SpecArgs,
        /// Directory written by `train`.
        #[arg(long)]
        models: Option<PathBuf>,
        #[arg(long)]
        demos: Option<PathBuf>,
    },
    /// Train and score a regressor on a 1-D function dataset.
    FitFunction {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        spec: SpecArgs,
    },
    /// Success-rate grid over methods and particle dimensions.
    CompareVariants {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
        ns: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "dfo,autoregressive_dfo,langevin")]
        methods: Vec<String>,
        #[arg(long, default_value_t = 2000)]
        n_demos: usize,
        #[arg(long, default_value_t = 100)]
        episodes: usize,
        /// Training seeds; --seed alone means a single seed.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
    },
    /// Mean distance of evaluation starts to the demonstration set, per N.
    Sparsity {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16")]
        ns: Vec<usize>,
        #[arg(long, default_value_t = 2000)]
        n_demos: usize,
        #[arg(long, default_value_t = 100)]
        episodes: usize,
    },
}

fn resolve(args: &SpecArgs, seed: Option<u64>, function_task: bool) -> Result<ExperimentSpec> {
    let mut spec = match (&args.spec, function_task) {
        (Some(path), _) => commands::load_spec(path)?,
        (None, true) => ExperimentSpec::function_fit(
            args.method.as_deref().unwrap_or("ebm"),
            args.kind.unwrap_or(FunctionKind::StepFn),
            args.n_points.unwrap_or(200),
        )?,
        (None, false) => ExperimentSpec::particle(
            args.method.as_deref().unwrap_or("langevin"),
            args.n.unwrap_or(2),
            args.n_demos.unwrap_or(2000),
        )?,
    };
    if let Some(s) = seed {
        spec.seeds = vec![s];
    }
    if let Some(e) = args.episodes {
        spec.eval.n_episodes = e;
    }
    if let Some(e) = args.eval_seed {
        spec.eval.eval_seed = e;
    }
    if let Some(t) = args.test_points {
        spec.eval.test_points = t;
    }
    if let Some(t) = args.train_iterations {
        spec.train.train_iterations = t;
    }
    if args.spec.is_some() {
        match &mut spec.task {
            Task::ParticleBc { env, n_demos, .. } => {
                if let Some(n) = args.n {
                    *env = ParticleConfig { n, ..env.clone() };
                }
                if let Some(d) = args.n_demos {
                    *n_demos = d;
                }
            }
            Task::FunctionFit { kind, n_points, .. } => {
                if let Some(k) = args.kind {
                    *kind = k;
                }
                if let Some(p) = args.n_points {
                    *n_points = p;
                }
            }
        }
    }
    spec.validate()?;
    Ok(spec)
}

fn run(cli: Cli) -> Result<(ResultRecord, PathBuf)> {
    let done = |r: ResultRecord, out: &Path| (r, out.to_path_buf());
    Ok(match cli.command {
        Command::GenDemos { common, n, n_demos } => {
            let env = ParticleConfig::with_dim(n);
            done(commands::gen_demos(&env, n_demos, common.seed.unwrap_or(0), &common.out)?, &common.out)
        }
        Command::Train { common, spec, demos } => {
            let s = resolve(&spec, common.seed, spec.kind.is_some() || spec.n_points.is_some())?;
            done(commands::train(&s, demos.as_deref(), &common.out)?, &common.out)
        }
        Command::EvalPolicy { common, spec, models, demos } => {
            let s = resolve(&spec, common.seed, false)?;
            done(commands::eval_policy(&s, models.as_deref(), demos.as_deref(), &common.out)?, &common.out)
        }
        Command::FitFunction { common, spec } => {
            let s = resolve(&spec, common.seed, true)?;
            done(commands::fit_function(&s, &common.out)?, &common.out)
        }
        Command::CompareVariants { common, ns, mut methods, n_demos, episodes, seeds } => {
            methods.retain(|m| !m.trim().is_empty());
            let seeds = seeds.unwrap_or_else(|| vec![common.seed.unwrap_or(0)]);
            let cmp = ComparisonSpec::new(&ns, &methods, n_demos, episodes, &seeds)?;
            done(commands::compare_variants(&cmp, &common.out)?, &common.out)
        }
        Command::Sparsity { common, ns, n_demos, episodes } => {
            if ns.is_empty() {
                return Err(Error::Empty("dimension list"));
            }
            let spec = SparsitySpec { ns, n_demos, n_eval: episodes, seed: common.seed.unwrap_or(0), eval_seed: 0 };
            done(commands::sparsity(&spec, &common.out)?, &common.out)
        }
    })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok((record, out)) => {
            println!("{} -> {} ({:.1}s)", record.command, out.join("result.json").display(), record.wall_clock_seconds);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
