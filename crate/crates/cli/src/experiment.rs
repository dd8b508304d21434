//! Experiment runner: victim pipeline, attacker view, one report row per
//! (budget, seed) cell, CSV and JSON output.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use gssl_core::attack::classification::{
    attack_cls_exhaustive, attack_cls_greedy, attack_cls_prob, estimate_target, FlipVector,
};
use gssl_core::attack::feature::{attack_features, FeatureAttackConfig, FeaturePerturbation};
use gssl_core::attack::regression::{attack_reg_estimated, attack_reg_sparse, attack_reg_true, LabelPerturbation};
use gssl_core::baselines::{
    baseline_random_cls, baseline_random_reg, baseline_weighted_cls, baseline_weighted_reg, labeled_scores,
    BaselineKind,
};
use gssl_core::data::{
    flip_toy, load_libsvm, normalize, read_dataset, split, subsample, synth_two_clusters, Dataset, Task,
};
use gssl_core::graph::{build_kernel_graph, KernelGraph};
use gssl_core::manifold::{attack_manifold, fit_manifold, ManifoldModel};
use gssl_core::propagation::{error_rate, predict, propagation_operator, rmse, PropagationOperator, Squash};
use gssl_core::Error as CoreError;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{AttackKind, ConfigError, DatasetSource, ExperimentConfig, FileFormat, Knowledge, SolverConfig};
use crate::reference::{ReferenceFigure, REFERENCE_FIGURES};

pub const SUMMARY_VERSION: u32 = 1;

pub const CSV_HEADER: [&str; 12] = [
    "attack",
    "knowledge",
    "budget",
    "seed",
    "clean_metric",
    "attacked_metric",
    "clean_inductive",
    "attacked_inductive",
    "perturbation_norm",
    "support_size",
    "flips",
    "certified_global",
];

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: CoreError,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl HarnessError {
    fn core(context: impl Into<String>) -> impl FnOnce(CoreError) -> HarnessError {
        let context = context.into();
        move |source| HarnessError::Core { context, source }
    }

    fn io(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
        move |source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 2 for bad input, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Core { source, .. } => match source {
                CoreError::Numeric(_) | CoreError::HardCase(_) | CoreError::Domain(_) => 3,
                CoreError::Parse { .. } | CoreError::Usage(_) | CoreError::Io(_) => 2,
            },
            HarnessError::Config(_) | HarnessError::Io { .. } => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;

/// Training rows (labeled first) plus the held-out inductive rows of one seed.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub train: Dataset,
    pub inductive: Option<(DMatrix<f64>, DVector<f64>)>,
}

/// Loads the dataset file of `cfg` once; synthetic and toy sources return `None`.
pub fn load_source(cfg: &ExperimentConfig) -> Result<Option<Dataset>> {
    let DatasetSource::File {
        path,
        format,
        normalize: norm,
        ..
    } = &cfg.dataset
    else {
        return Ok(None);
    };
    let ctx = format!("loading {}", path.display());
    let ds = match format {
        FileFormat::Libsvm => load_libsvm(path, cfg.task),
        FileFormat::Native => read_dataset(path),
    }
    .map_err(HarnessError::core(ctx.clone()))?;
    if ds.task != cfg.task {
        return Err(ConfigError::new(
            "task",
            format!("{} holds a {} dataset", path.display(), ds.task.as_str()),
        )
        .into());
    }
    let ds = if *norm {
        normalize(&ds).map_err(HarnessError::core(ctx))?
    } else {
        ds
    };
    Ok(Some(ds))
}

/// Draws the split of one seed. `source` is the output of [`load_source`].
pub fn prepare(cfg: &ExperimentConfig, source: Option<&Dataset>, seed: u64) -> Result<Prepared> {
    let ctx = format!("preparing data (seed {seed})");
    let n_ind = cfg.n_inductive;
    let full = match (&cfg.dataset, source) {
        (DatasetSource::Synthetic { n, d, gap }, _) => {
            synth_two_clusters(*n, *d, cfg.n_l, *gap, cfg.task, seed).map_err(HarnessError::core(ctx.clone()))?
        }
        (DatasetSource::File { max_n, .. }, Some(ds)) => {
            let sub = match max_n {
                Some(m) if *m < ds.n() => subsample(ds, *m, seed).map_err(HarnessError::core(ctx.clone()))?,
                _ => ds.clone(),
            };
            if cfg.n_l + n_ind >= sub.n() {
                return Err(ConfigError::new("n_l", format!("n_l + n_inductive >= n = {}", sub.n())).into());
            }
            split(&sub, cfg.n_l, seed).map_err(HarnessError::core(ctx.clone()))?
        }
        (DatasetSource::File { .. }, None) => {
            return Err(ConfigError::new("dataset", "file dataset was not loaded").into())
        }
        (DatasetSource::Toy, _) => flip_toy().dataset,
    };
    if n_ind == 0 {
        return Ok(Prepared {
            train: full,
            inductive: None,
        });
    }
    // Unlabeled rows come in random order, so the tail is a uniform holdout.
    let n_train = full.n() - n_ind;
    let order: Vec<usize> = (0..n_train).collect();
    let train = full.permute_rows(&order, cfg.n_l).map_err(HarnessError::core(ctx))?;
    let x_ind = full.features.rows(n_train, n_ind).into_owned();
    let y_ind = full.labels.rows(n_train, n_ind).into_owned();
    Ok(Prepared {
        train,
        inductive: Some((x_ind, y_ind)),
    })
}

/// Everything the attacker may look at. Ground truth of the unlabeled rows
/// is only present under [`Knowledge::TrueLabels`], and the victim's kernel
/// width is never part of it.
#[derive(Debug, Clone)]
pub struct AttackerView {
    x: DMatrix<f64>,
    y_l: DVector<f64>,
    y_u: Option<DVector<f64>>,
    gamma: f64,
    task: Task,
}

impl AttackerView {
    pub fn new(train: &Dataset, gamma_attacker: f64, knowledge: Knowledge) -> Self {
        AttackerView {
            x: train.features.clone(),
            y_l: train.y_labeled(),
            y_u: match knowledge {
                Knowledge::TrueLabels => Some(train.y_unlabeled()),
                Knowledge::EstimatedLabels => None,
            },
            gamma: gamma_attacker,
            task: train.task,
        }
    }

    pub fn n_l(&self) -> usize {
        self.y_l.len()
    }

    /// Propagation operator under the attacker's kernel width.
    fn operator(&self) -> gssl_core::Result<(KernelGraph, PropagationOperator)> {
        let g = build_kernel_graph(&self.x, self.gamma)?;
        let op = propagation_operator(&g, self.n_l())?;
        Ok((g, op))
    }

    /// `y_u` if known, otherwise the attacker's own propagated estimate.
    fn target(&self, op: &PropagationOperator) -> DVector<f64> {
        match &self.y_u {
            Some(y_u) => y_u.clone(),
            None => estimate_target(op, &self.y_l, self.task),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Perturbation {
    Labels(LabelPerturbation),
    Flips(FlipVector),
    Features(FeaturePerturbation),
}

impl Perturbation {
    /// ℓ₂ (Frobenius for features) size of the change to the training data.
    pub fn norm(&self) -> f64 {
        match self {
            Perturbation::Labels(p) => p.norm(),
            Perturbation::Flips(f) => 2.0 * (f.flips as f64).sqrt(),
            Perturbation::Features(p) => p.delta_x.norm(),
        }
    }

    pub fn support_size(&self) -> usize {
        match self {
            Perturbation::Labels(p) => p.support_size,
            Perturbation::Flips(f) => f.flips,
            Perturbation::Features(p) => p.active_rows.len(),
        }
    }

    pub fn flip_indices(&self) -> Vec<usize> {
        match self {
            Perturbation::Flips(f) => f.indices(),
            _ => Vec::new(),
        }
    }

    /// Trust-region certificate, for the attacks that run the solver.
    pub fn certified_global(&self, attack: AttackKind, knowledge: Knowledge) -> Option<bool> {
        let solved =
            attack == AttackKind::Manifold || (attack == AttackKind::Reg && knowledge == Knowledge::TrueLabels);
        match self {
            Perturbation::Labels(p) if solved => Some(p.certified_global),
            _ => None,
        }
    }

    /// Poisoned labels of the labeled block.
    pub fn labels(&self, y_l: &DVector<f64>) -> DVector<f64> {
        match self {
            Perturbation::Labels(p) => y_l + &p.delta_y,
            Perturbation::Flips(f) => f.apply(y_l),
            Perturbation::Features(_) => y_l.clone(),
        }
    }

    /// Poisoned training features.
    pub fn features(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            Perturbation::Features(p) => {
                let mut out = x.clone();
                let mut block = out.rows_mut(0, p.delta_x.nrows());
                block += &p.delta_x;
                out
            }
            _ => x.clone(),
        }
    }
}

/// Runs one attack from the attacker's view. Stochastic solvers are reseeded
/// with `seed`.
pub fn compute_attack(
    view: &AttackerView,
    attack: AttackKind,
    budget: f64,
    seed: u64,
    sparsity: Option<usize>,
    solvers: &SolverConfig,
) -> gssl_core::Result<Perturbation> {
    let flips = budget as usize;
    let (g, op) = view.operator()?;
    let y_l = &view.y_l;
    let out = match attack {
        AttackKind::Reg => match &view.y_u {
            Some(y_u) => {
                let mut tr = solvers.trust_region.clone();
                tr.jitter_seed = seed;
                Perturbation::Labels(attack_reg_true(&op, y_l, y_u, budget, &tr)?)
            }
            None => Perturbation::Labels(attack_reg_estimated(&op, budget)?),
        },
        AttackKind::RegSparse => {
            let mut cfg = solvers.sparse_pca.clone();
            cfg.seed = seed;
            let c = sparsity.ok_or_else(|| CoreError::Usage("reg_sparse needs a sparsity".into()))?;
            Perturbation::Labels(attack_reg_sparse(&op, budget, c, &cfg)?)
        }
        AttackKind::ClsGreedy => Perturbation::Flips(attack_cls_greedy(&op, y_l, &view.target(&op), flips)?),
        AttackKind::ClsExhaustive => Perturbation::Flips(attack_cls_exhaustive(&op, y_l, &view.target(&op), flips)?),
        AttackKind::ClsProb => {
            let mut cfg = solvers.flip_distribution.clone();
            cfg.seed = seed;
            Perturbation::Flips(attack_cls_prob(&op, y_l, &view.target(&op), flips, &cfg)?.0)
        }
        AttackKind::Feature => {
            let target = view.target(&op);
            // Unlabeled rows carry the attacker's belief, never hidden labels.
            let mut labels = DVector::zeros(view.x.nrows());
            labels.rows_mut(0, view.n_l()).copy_from(y_l);
            labels.rows_mut(view.n_l(), target.len()).copy_from(&target);
            let ds = Dataset::new(view.x.clone(), labels, view.n_l(), view.task)?;
            let cfg = FeatureAttackConfig {
                gamma: view.gamma,
                radius: Some(budget),
                ..solvers.feature.clone()
            };
            Perturbation::Features(attack_features(&ds, &target, &cfg)?)
        }
        AttackKind::Manifold => {
            let model = fit_view_manifold(view, &g, solvers)?;
            let x_u = view.x.rows(view.n_l(), view.x.nrows() - view.n_l()).into_owned();
            let target = match &view.y_u {
                Some(y_u) => y_u.clone(),
                None => model.predict(&x_u),
            };
            let mut tr = solvers.trust_region.clone();
            tr.jitter_seed = seed;
            Perturbation::Labels(attack_manifold(&model, &x_u, y_l, &target, budget, &tr)?)
        }
        AttackKind::Random => match view.task {
            Task::Regression => Perturbation::Labels(baseline_random_reg(view.n_l(), budget, seed)?),
            Task::Classification => Perturbation::Flips(baseline_random_cls(view.n_l(), flips, seed)?),
        },
        AttackKind::Degree | AttackKind::Pagerank => {
            let kind = if attack == AttackKind::Degree {
                BaselineKind::Degree
            } else {
                BaselineKind::Pagerank
            };
            let scores = labeled_scores(kind, &g, view.n_l(), &solvers.pagerank)?;
            match view.task {
                Task::Regression => {
                    Perturbation::Labels(baseline_weighted_reg(&scores, &op, y_l, &view.target(&op), budget)?)
                }
                Task::Classification => Perturbation::Flips(baseline_weighted_cls(&scores, flips)?),
            }
        }
    };
    Ok(out)
}

fn fit_view_manifold(view: &AttackerView, g: &KernelGraph, solvers: &SolverConfig) -> gssl_core::Result<ManifoldModel> {
    // Unlabeled targets never enter the fit; fill them with zeros.
    let mut labels = DVector::zeros(view.x.nrows());
    labels.rows_mut(0, view.n_l()).copy_from(&view.y_l);
    let ds = Dataset::new(view.x.clone(), labels, view.n_l(), view.task)?;
    fit_manifold(&ds, g, &solvers.manifold)
}

/// Transductive and inductive metric of the victim trained on (possibly
/// poisoned) data. Always uses `gamma_victim` and the true labels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub transductive: f64,
    pub inductive: Option<f64>,
}

fn metric(task: Task, pred: &DVector<f64>, truth: &DVector<f64>) -> gssl_core::Result<f64> {
    match task {
        Task::Regression => rmse(pred, truth),
        Task::Classification => error_rate(&pred.map(gssl_core::linalg::sign), truth),
    }
}

/// Kernel-weighted average of the training scores `f` at new points, i.e.
/// the harmonic extension of the propagated solution.
pub fn harmonic_extension(x_train: &DMatrix<f64>, f: &DVector<f64>, x_new: &DMatrix<f64>, gamma: f64) -> DVector<f64> {
    DVector::from_fn(x_new.nrows(), |i, _| {
        let row = x_new.row(i);
        let d2: Vec<f64> = x_train.row_iter().map(|r| (r - row).norm_squared()).collect();
        let m = d2.iter().copied().fold(f64::INFINITY, f64::min);
        let (mut num, mut den) = (0.0, 0.0);
        for (j, &d) in d2.iter().enumerate() {
            let w = (-gamma * (d - m)).exp();
            num += w * f[j];
            den += w;
        }
        num / den
    })
}

/// Victim pipeline on one prepared split, optionally poisoned.
pub fn evaluate(
    cfg: &ExperimentConfig,
    prepared: &Prepared,
    pert: Option<&Perturbation>,
) -> gssl_core::Result<Evaluation> {
    let train = &prepared.train;
    let n_l = train.n_labeled;
    let y_l = match pert {
        Some(p) => p.labels(&train.y_labeled()),
        None => train.y_labeled(),
    };
    let x = match pert {
        Some(p) => p.features(&train.features),
        None => train.features.clone(),
    };
    let y_u = train.y_unlabeled();
    if cfg.attack == AttackKind::Manifold {
        // The victim's model is fit on clean training data; a label attack
        // moves its weights linearly through P.
        let model = fit_manifold(
            train,
            &build_kernel_graph(&train.features, cfg.gamma_victim)?,
            &cfg.solvers.manifold,
        )?;
        let x_u = train.x_unlabeled();
        let transductive = metric(cfg.task, &model.predict_with(&x_u, &y_l), &y_u)?;
        let inductive = match &prepared.inductive {
            Some((x_ind, y_ind)) => Some(metric(cfg.task, &model.predict_with(x_ind, &y_l), y_ind)?),
            None => None,
        };
        return Ok(Evaluation {
            transductive,
            inductive,
        });
    }
    let op = propagation_operator(&build_kernel_graph(&x, cfg.gamma_victim)?, n_l)?;
    let raw = predict(&op, &y_l, Squash::Identity)?;
    let transductive = metric(cfg.task, &raw, &y_u)?;
    let inductive = match &prepared.inductive {
        Some((x_ind, y_ind)) => {
            let mut f = DVector::zeros(train.n());
            f.rows_mut(0, n_l).copy_from(&y_l);
            f.rows_mut(n_l, raw.len()).copy_from(&raw);
            Some(metric(
                cfg.task,
                &harmonic_extension(&x, &f, x_ind, cfg.gamma_victim),
                y_ind,
            )?)
        }
        None => None,
    };
    Ok(Evaluation {
        transductive,
        inductive,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub attack: String,
    pub knowledge: String,
    pub budget: f64,
    pub seed: u64,
    pub clean_metric: f64,
    pub attacked_metric: f64,
    pub clean_inductive: Option<f64>,
    pub attacked_inductive: Option<f64>,
    pub perturbation_norm: f64,
    pub support_size: usize,
    pub flips: Vec<usize>,
    pub certified_global: Option<bool>,
    #[serde(skip)]
    pub wall_ms: f64,
}

#[derive(Debug, Clone)]
pub struct AttackReport {
    pub config: ExperimentConfig,
    /// Sorted by (budget, seed).
    pub rows: Vec<ReportRow>,
    pub wall_time_s: f64,
}

fn fmt_opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

impl AttackReport {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER).expect("in-memory write");
        for r in &self.rows {
            let flips = r.flips.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(";");
            w.write_record([
                r.attack.clone(),
                r.knowledge.clone(),
                r.budget.to_string(),
                r.seed.to_string(),
                r.clean_metric.to_string(),
                r.attacked_metric.to_string(),
                fmt_opt(r.clean_inductive),
                fmt_opt(r.attacked_inductive),
                r.perturbation_norm.to_string(),
                r.support_size.to_string(),
                flips,
                fmt_opt(r.certified_global),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }

    /// Mean attacked metric per budget, in budget order.
    pub fn mean_attacked(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64, usize)> = Vec::new();
        for r in &self.rows {
            match out.last_mut() {
                Some(last) if last.0 == r.budget => {
                    last.1 += r.attacked_metric;
                    last.2 += 1;
                }
                _ => out.push((r.budget, r.attacked_metric, 1)),
            }
        }
        out.into_iter().map(|(b, s, k)| (b, s / k as f64)).collect()
    }

    /// Rows of a proposed (non-baseline) attack whose attacked metric fell
    /// below the clean one.
    pub fn regressions(&self) -> Vec<&ReportRow> {
        if self.config.attack.is_baseline() {
            return Vec::new();
        }
        self.rows
            .iter()
            .filter(|r| r.attacked_metric < r.clean_metric - 1e-10)
            .collect()
    }
}

/// Runs every (budget, seed) cell. Cells run in parallel; rows are sorted.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<AttackReport> {
    cfg.validate()?;
    let start = Instant::now();
    let source = load_source(cfg)?;
    let seeds: Vec<(Prepared, Evaluation, u64)> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let prepared = prepare(cfg, source.as_ref(), seed)?;
            let clean =
                evaluate(cfg, &prepared, None).map_err(HarnessError::core(format!("clean victim (seed {seed})")))?;
            Ok((prepared, clean, seed))
        })
        .collect::<Result<_>>()?;
    let cells: Vec<(usize, f64)> = (0..seeds.len())
        .flat_map(|s| cfg.budgets.iter().map(move |&b| (s, b)))
        .collect();
    let mut rows = cells
        .par_iter()
        .map(|&(s, budget)| {
            let (prepared, clean, seed) = &seeds[s];
            let t0 = Instant::now();
            let ctx = format!("budget {budget}, seed {seed}");
            let view = AttackerView::new(&prepared.train, cfg.gamma_attacker(), cfg.knowledge);
            let pert = compute_attack(&view, cfg.attack, budget, *seed, cfg.sparsity, &cfg.solvers)
                .map_err(HarnessError::core(format!("attack ({ctx})")))?;
            let attacked =
                evaluate(cfg, prepared, Some(&pert)).map_err(HarnessError::core(format!("victim ({ctx})")))?;
            Ok(ReportRow {
                attack: cfg.attack.as_str().to_string(),
                knowledge: cfg.knowledge.as_str().to_string(),
                budget,
                seed: *seed,
                clean_metric: clean.transductive,
                attacked_metric: attacked.transductive,
                clean_inductive: clean.inductive,
                attacked_inductive: attacked.inductive,
                perturbation_norm: pert.norm(),
                support_size: pert.support_size(),
                flips: pert.flip_indices(),
                certified_global: pert.certified_global(cfg.attack, cfg.knowledge),
                wall_ms: t0.elapsed().as_secs_f64() * 1e3,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.budget.total_cmp(&b.budget).then(a.seed.cmp(&b.seed)));
    let report = AttackReport {
        config: cfg.clone(),
        rows,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    for r in report.regressions() {
        log::warn!(
            "{} at budget {} seed {}: attacked metric {} below clean {}",
            r.attack,
            r.budget,
            r.seed,
            r.attacked_metric,
            r.clean_metric
        );
    }
    Ok(report)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// SHA-256 of the git blob encoding (`blob <len>\0<content>`).
pub fn blob_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Serialize)]
struct CellTiming {
    budget: f64,
    seed: u64,
    wall_ms: f64,
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    format_version: u32,
    config: &'a ExperimentConfig,
    config_sha256: String,
    csv: String,
    csv_blob_sha256: String,
    rows: usize,
    wall_time_s: f64,
    cells: Vec<CellTiming>,
    /// Cells where the attacked metric is below the clean one.
    regressions: usize,
    /// How the centrality baseline scores nodes, when one ran.
    #[serde(skip_serializing_if = "Option::is_none")]
    centrality: Option<&'static str>,
    reference_figures: &'static [ReferenceFigure],
}

/// Paths written by [`write_report`].
#[derive(Debug, Clone)]
pub struct OutputFiles {
    pub csv: PathBuf,
    pub summary: PathBuf,
    pub config: PathBuf,
}

/// Writes `<name>.csv`, `<name>.json` (summary) and `<name>.config.json`
/// (the resolved config, ready to rerun) under the configured output dir.
pub fn write_report(report: &AttackReport) -> Result<OutputFiles> {
    let cfg = &report.config;
    let dir = &cfg.output;
    fs::create_dir_all(dir).map_err(HarnessError::io(dir))?;
    let files = OutputFiles {
        csv: dir.join(format!("{}.csv", cfg.name)),
        summary: dir.join(format!("{}.json", cfg.name)),
        config: dir.join(format!("{}.config.json", cfg.name)),
    };
    let csv = report.to_csv();
    let config_json = cfg.to_json();
    let summary = Summary {
        format_version: SUMMARY_VERSION,
        config: cfg,
        config_sha256: sha256_hex(config_json.as_bytes()),
        csv: format!("{}.csv", cfg.name),
        csv_blob_sha256: blob_hash(csv.as_bytes()),
        rows: report.rows.len(),
        wall_time_s: report.wall_time_s,
        cells: report
            .rows
            .iter()
            .map(|r| CellTiming {
                budget: r.budget,
                seed: r.seed,
                wall_ms: r.wall_ms,
            })
            .collect(),
        regressions: report.regressions().len(),
        centrality: match cfg.attack {
            AttackKind::Pagerank => {
                Some("pagerank on the weighted, row-normalized similarity matrix (self-loops kept)")
            }
            AttackKind::Degree => Some("weighted degree: row sums of the similarity matrix"),
            _ => None,
        },
        reference_figures: &REFERENCE_FIGURES,
    };
    fs::write(&files.csv, &csv).map_err(HarnessError::io(&files.csv))?;
    fs::write(&files.config, config_json + "\n").map_err(HarnessError::io(&files.config))?;
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n";
    fs::write(&files.summary, text).map_err(HarnessError::io(&files.summary))?;
    Ok(files)
}

/// Clean metric of the victim for each kernel width, on the first seed's
/// split. The harness does not pick γ* for the user; this lists candidates.
pub fn gamma_grid_search(cfg: &ExperimentConfig, gammas: &[f64]) -> Result<Vec<(f64, f64)>> {
    let source = load_source(cfg)?;
    let seed = *cfg
        .seeds
        .first()
        .ok_or_else(|| ConfigError::new("seeds", "grid must not be empty"))?;
    let prepared = prepare(cfg, source.as_ref(), seed)?;
    gammas
        .iter()
        .map(|&gamma| {
            let mut c = cfg.clone();
            c.gamma_victim = gamma;
            let e = evaluate(&c, &prepared, None).map_err(HarnessError::core(format!("gamma {gamma}")))?;
            Ok((gamma, e.transductive))
        })
        .collect()
}
