use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gssl_cli::bench::{tr_bench, write_bench, DEFAULT_LAMBDAS};
use gssl_cli::config::{AttackKind, ConfigDocument, DatasetSource, ExperimentConfig, FileFormat, Knowledge};
use gssl_cli::experiment::{run_experiment, write_report, HarnessError};
use gssl_core::attack::classification::{attack_cls_exhaustive, attack_cls_greedy};
use gssl_core::data::{flip_toy, Task};
use gssl_core::graph::build_kernel_graph;
use gssl_core::propagation::{predict, propagation_operator, Squash};
use gssl_core::trust_region::TrustRegionConfig;

#[derive(Parser)]
#[command(
    name = "gssl-poison",
    version,
    about = "Poisoning attacks on graph-based semi-supervised learning"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Continuous label attack on label propagation (regression).
    AttackReg {
        #[command(flatten)]
        common: Common,
        /// Support size; switches to the sparse attack.
        #[arg(long)]
        sparsity: Option<usize>,
    },
    /// Label-flip attack on label propagation (classification).
    AttackCls {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "greedy")]
        solver: FlipSolver,
    },
    /// Group-sparse feature attack; budgets cap the Frobenius norm of the change.
    AttackFeat {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "regression")]
        task: TaskArg,
        #[arg(long)]
        lambda_group: Option<f64>,
    },
    /// Label attack on the linear manifold-regularized regressor.
    AttackManifold {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        lambda_ridge: Option<f64>,
        #[arg(long)]
        beta_manifold: Option<f64>,
    },
    /// Random, degree or PageRank reference attack.
    Baseline {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        kind: BaselineArg,
        #[arg(long, value_enum, default_value = "regression")]
        task: TaskArg,
    },
    /// Runs an experiment or sweep from a JSON config (or a previous summary).
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the output directory of every experiment.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Trust-region benchmark on H = BBᵀ − λI instances.
    TrBench {
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_LAMBDAS)]
        lambdas: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        #[arg(long, default_value = "out")]
        output: PathBuf,
    },
    /// The eight-node flip instance: greedy and exhaustive single flips.
    Toy,
}

#[derive(Args)]
struct Common {
    /// Stem of the output files.
    #[arg(long)]
    name: Option<String>,
    /// Dataset file; without it a two-cluster synthetic set is generated per seed.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "libsvm")]
    format: FormatArg,
    #[arg(long)]
    max_n: Option<usize>,
    #[arg(long)]
    no_normalize: bool,
    #[arg(long, default_value_t = 300)]
    synthetic_n: usize,
    #[arg(long, default_value_t = 2)]
    synthetic_d: usize,
    #[arg(long, default_value_t = 6.0)]
    gap: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma_victim: f64,
    #[arg(long)]
    gamma_attacker: Option<f64>,
    #[arg(long, default_value_t = 30)]
    n_l: usize,
    #[arg(long, default_value_t = 0)]
    n_inductive: usize,
    #[arg(long, value_enum, default_value = "true")]
    knowledge: KnowledgeArg,
    #[arg(long, value_delimiter = ',', required = true)]
    budgets: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0u64])]
    seeds: Vec<u64>,
    #[arg(long, default_value = "out")]
    output: PathBuf,
    /// Print the resolved config and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum FlipSolver {
    Greedy,
    Prob,
    Exhaustive,
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskArg {
    Regression,
    Classification,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineArg {
    Random,
    Degree,
    Pagerank,
}

#[derive(Clone, Copy, ValueEnum)]
enum KnowledgeArg {
    True,
    Estimated,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Libsvm,
    Native,
}

impl Common {
    fn config(&self, attack: AttackKind, task: Task) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::synthetic(self.name.as_deref().unwrap_or(attack.as_str()), attack, task);
        cfg.dataset = match &self.data {
            Some(path) => DatasetSource::File {
                path: path.clone(),
                format: match self.format {
                    FormatArg::Libsvm => FileFormat::Libsvm,
                    FormatArg::Native => FileFormat::Native,
                },
                max_n: self.max_n,
                normalize: !self.no_normalize,
            },
            None => DatasetSource::Synthetic {
                n: self.synthetic_n,
                d: self.synthetic_d,
                gap: self.gap,
            },
        };
        cfg.gamma_victim = self.gamma_victim;
        cfg.gamma_attacker = self.gamma_attacker;
        cfg.n_l = self.n_l;
        cfg.n_inductive = self.n_inductive;
        cfg.knowledge = match self.knowledge {
            KnowledgeArg::True => Knowledge::TrueLabels,
            KnowledgeArg::Estimated => Knowledge::EstimatedLabels,
        };
        cfg.budgets = self.budgets.clone();
        cfg.seeds = self.seeds.clone();
        cfg.output = self.output.clone();
        cfg
    }
}

fn task_of(t: TaskArg) -> Task {
    match t {
        TaskArg::Regression => Task::Regression,
        TaskArg::Classification => Task::Classification,
    }
}

fn run_one(cfg: &ExperimentConfig, print_config: bool) -> Result<(), HarnessError> {
    cfg.validate()?;
    if print_config {
        println!("{}", cfg.to_json());
        return Ok(());
    }
    let report = run_experiment(cfg)?;
    let files = write_report(&report)?;
    println!("{}: {} rows in {:.2}s", cfg.name, report.rows.len(), report.wall_time_s);
    println!("  budget  mean attacked metric");
    for (budget, mean) in report.mean_attacked() {
        println!("  {budget:>6}  {mean:.6}");
    }
    println!(
        "  wrote {}, {}, {}",
        files.csv.display(),
        files.summary.display(),
        files.config.display()
    );
    Ok(())
}

fn toy() -> Result<(), HarnessError> {
    let toy = flip_toy();
    let ds = &toy.dataset;
    let core = |e| HarnessError::Core {
        context: "toy".into(),
        source: e,
    };
    let op = propagation_operator(
        &build_kernel_graph(&ds.features, toy.gamma).map_err(core)?,
        ds.n_labeled,
    )
    .map_err(core)?;
    let y_l = ds.y_labeled();
    let y_u = ds.y_unlabeled();
    let greedy = attack_cls_greedy(&op, &y_l, &y_u, 1).map_err(core)?;
    let exhaustive = attack_cls_exhaustive(&op, &y_l, &y_u, 1).map_err(core)?;
    let before = predict(&op, &y_l, Squash::Sign).map_err(core)?;
    let after = predict(&op, &greedy.apply(&y_l), Squash::Sign).map_err(core)?;
    println!("designated node: {}", toy.pivot);
    println!("greedy flips:     {:?}", greedy.indices());
    println!("exhaustive flips: {:?}", exhaustive.indices());
    println!(
        "cluster {:?} before: {:?}",
        toy.cluster,
        toy.cluster.iter().map(|&i| before[i]).collect::<Vec<_>>()
    );
    println!(
        "cluster {:?} after:  {:?}",
        toy.cluster,
        toy.cluster.iter().map(|&i| after[i]).collect::<Vec<_>>()
    );
    Ok(())
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::AttackReg { common, sparsity } => {
            let attack = if sparsity.is_some() {
                AttackKind::RegSparse
            } else {
                AttackKind::Reg
            };
            let mut cfg = common.config(attack, Task::Regression);
            cfg.sparsity = sparsity;
            run_one(&cfg, common.print_config)
        }
        Command::AttackCls { common, solver } => {
            let attack = match solver {
                FlipSolver::Greedy => AttackKind::ClsGreedy,
                FlipSolver::Prob => AttackKind::ClsProb,
                FlipSolver::Exhaustive => AttackKind::ClsExhaustive,
            };
            run_one(&common.config(attack, Task::Classification), common.print_config)
        }
        Command::AttackFeat {
            common,
            task,
            lambda_group,
        } => {
            let mut cfg = common.config(AttackKind::Feature, task_of(task));
            if let Some(l) = lambda_group {
                cfg.solvers.feature.lambda_group = l;
            }
            run_one(&cfg, common.print_config)
        }
        Command::AttackManifold {
            common,
            lambda_ridge,
            beta_manifold,
        } => {
            let mut cfg = common.config(AttackKind::Manifold, Task::Regression);
            if let Some(l) = lambda_ridge {
                cfg.solvers.manifold.lambda_ridge = l;
            }
            if let Some(b) = beta_manifold {
                cfg.solvers.manifold.beta_manifold = b;
            }
            run_one(&cfg, common.print_config)
        }
        Command::Baseline { common, kind, task } => {
            let attack = match kind {
                BaselineArg::Random => AttackKind::Random,
                BaselineArg::Degree => AttackKind::Degree,
                BaselineArg::Pagerank => AttackKind::Pagerank,
            };
            run_one(&common.config(attack, task_of(task)), common.print_config)
        }
        Command::Sweep { config, output } => {
            let text = std::fs::read_to_string(&config).map_err(|source| HarnessError::Io {
                path: config.clone(),
                source,
            })?;
            for mut cfg in ConfigDocument::from_json(&text)?.experiments()? {
                if let Some(dir) = &output {
                    cfg.output = dir.clone();
                }
                run_one(&cfg, false)?;
            }
            Ok(())
        }
        Command::TrBench {
            n,
            lambdas,
            seed,
            repeats,
            output,
        } => {
            let report = tr_bench(n, &lambdas, seed, repeats, &TrustRegionConfig::default())?;
            write_bench(&report, &output)?;
            println!("  lambda  mean T1  mean bound");
            for (k, lambda) in report.lambdas.iter().enumerate() {
                println!(
                    "  {lambda:>6}  {:>7.2}  {:>10.2}",
                    report.mean_phase1[k], report.mean_bound[k]
                );
            }
            let (m, b) = (report.fit_measured, report.fit_bound);
            println!(
                "measured fit: c1 = {:.4e}, c2 = {:.4e}, R² = {:.4}",
                m.c1, m.c2, m.r_squared
            );
            println!(
                "bound fit:    c1 = {:.4e}, c2 = {:.4e}, R² = {:.4}",
                b.c1, b.c2, b.r_squared
            );
            println!("bound holds on every run: {}", report.bound_holds);
            println!("wrote {}", output.display());
            Ok(())
        }
        Command::Toy => toy(),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
