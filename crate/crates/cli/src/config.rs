//! Experiment configuration: one JSON document per experiment, every solver
//! setting overridable, validated with field paths.

use std::fmt;
use std::path::PathBuf;

use gssl_core::attack::classification::FlipDistributionConfig;
use gssl_core::attack::feature::FeatureAttackConfig;
use gssl_core::attack::regression::SparsePcaConfig;
use gssl_core::data::Task;
use gssl_core::graph::PageRankConfig;
use gssl_core::manifold::ManifoldConfig;
use gssl_core::trust_region::TrustRegionConfig;
use serde::{Deserialize, Serialize};

pub const CONFIG_VERSION: u32 = 1;

/// Rejected configuration, with the path of the offending field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub field: String,
    pub msg: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, msg: impl Into<String>) -> Self {
        ConfigError {
            field: field.into(),
            msg: msg.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.msg)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FileFormat {
    Libsvm,
    /// The versioned text format of `gssl_core::data::write_dataset`.
    Native,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum DatasetSource {
    /// Two Gaussian clusters, regenerated for every seed.
    Synthetic { n: usize, d: usize, gap: f64 },
    /// A dataset file, loaded once and resampled per seed.
    File {
        path: PathBuf,
        format: FileFormat,
        /// Seeded uniform subsample size; `None` keeps every row.
        #[serde(default)]
        max_n: Option<usize>,
        #[serde(default = "yes")]
        normalize: bool,
    },
    /// The eight-node flip instance (fixed; seeds only reseed solvers).
    Toy,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Knowledge {
    TrueLabels,
    EstimatedLabels,
}

impl Knowledge {
    pub fn as_str(self) -> &'static str {
        match self {
            Knowledge::TrueLabels => "true_labels",
            Knowledge::EstimatedLabels => "estimated_labels",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    /// Dense label perturbation: trust region on true labels, top singular
    /// direction on estimated ones.
    Reg,
    /// `‖δ‖₀ <= sparsity` label perturbation (estimated labels).
    RegSparse,
    ClsGreedy,
    ClsProb,
    ClsExhaustive,
    /// Group-sparse perturbation of the labeled features; the budget caps
    /// the Frobenius norm of the change.
    Feature,
    /// Label attack on the linear manifold-regularized regressor.
    Manifold,
    Random,
    Degree,
    Pagerank,
}

impl AttackKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AttackKind::Reg => "reg",
            AttackKind::RegSparse => "reg_sparse",
            AttackKind::ClsGreedy => "cls_greedy",
            AttackKind::ClsProb => "cls_prob",
            AttackKind::ClsExhaustive => "cls_exhaustive",
            AttackKind::Feature => "feature",
            AttackKind::Manifold => "manifold",
            AttackKind::Random => "random",
            AttackKind::Degree => "degree",
            AttackKind::Pagerank => "pagerank",
        }
    }

    pub fn is_baseline(self) -> bool {
        matches!(self, AttackKind::Random | AttackKind::Degree | AttackKind::Pagerank)
    }

    /// Task the attack is restricted to, if any.
    pub fn task(self) -> Option<Task> {
        match self {
            AttackKind::Reg | AttackKind::RegSparse | AttackKind::Manifold => Some(Task::Regression),
            AttackKind::ClsGreedy | AttackKind::ClsProb | AttackKind::ClsExhaustive => Some(Task::Classification),
            AttackKind::Feature | AttackKind::Random | AttackKind::Degree | AttackKind::Pagerank => None,
        }
    }

    /// Budgets count flips rather than an ℓ₂ radius.
    pub fn counts_flips(self, task: Task) -> bool {
        self != AttackKind::Feature && task == Task::Classification
    }
}

/// Solver settings; anything omitted takes the library default.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub trust_region: TrustRegionConfig,
    pub sparse_pca: SparsePcaConfig,
    pub flip_distribution: FlipDistributionConfig,
    pub feature: FeatureAttackConfig,
    pub manifold: ManifoldConfig,
    pub pagerank: PageRankConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "config_version")]
    pub version: u32,
    /// Stem of the emitted files.
    pub name: String,
    pub dataset: DatasetSource,
    pub task: Task,
    /// Kernel width of the victim's graph.
    pub gamma_victim: f64,
    /// Kernel width the attacker assumes; `None` means it equals `gamma_victim`.
    #[serde(default)]
    pub gamma_attacker: Option<f64>,
    pub n_l: usize,
    /// Rows held out from training and used only for inductive evaluation.
    #[serde(default)]
    pub n_inductive: usize,
    pub attack: AttackKind,
    pub knowledge: Knowledge,
    /// `d_max` values (labels or features) or flip counts, depending on the attack.
    pub budgets: Vec<f64>,
    /// Support size for `reg_sparse`.
    #[serde(default)]
    pub sparsity: Option<usize>,
    pub seeds: Vec<u64>,
    pub output: PathBuf,
    #[serde(default)]
    pub solvers: SolverConfig,
}

fn config_version() -> u32 {
    CONFIG_VERSION
}

impl ExperimentConfig {
    /// Defaults for a synthetic two-cluster run of `attack`.
    pub fn synthetic(name: &str, attack: AttackKind, task: Task) -> Self {
        ExperimentConfig {
            version: CONFIG_VERSION,
            name: name.to_string(),
            dataset: DatasetSource::Synthetic { n: 300, d: 2, gap: 6.0 },
            task,
            gamma_victim: 1.0,
            gamma_attacker: None,
            n_l: 30,
            n_inductive: 0,
            attack,
            knowledge: Knowledge::TrueLabels,
            budgets: vec![1.0],
            sparsity: None,
            seeds: vec![0],
            output: PathBuf::from("out"),
            solvers: SolverConfig::default(),
        }
    }

    pub fn gamma_attacker(&self) -> f64 {
        self.gamma_attacker.unwrap_or(self.gamma_victim)
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| ConfigError::new(json_path(&e), e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |field: &str, msg: String| Err(ConfigError::new(field, msg));
        if self.version != CONFIG_VERSION {
            return err("version", format!("unsupported config version {}", self.version));
        }
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return err("name", "must be a non-empty file stem".into());
        }
        if !(self.gamma_victim > 0.0 && self.gamma_victim.is_finite()) {
            return err("gamma_victim", format!("must be > 0, got {}", self.gamma_victim));
        }
        if let Some(g) = self.gamma_attacker {
            if !(g > 0.0 && g.is_finite()) {
                return err("gamma_attacker", format!("must be > 0, got {g}"));
            }
        }
        if self.budgets.is_empty() {
            return err("budgets", "grid must not be empty".into());
        }
        if self.seeds.is_empty() {
            return err("seeds", "grid must not be empty".into());
        }
        for (i, &b) in self.budgets.iter().enumerate() {
            if !(b >= 0.0 && b.is_finite()) {
                return err(&format!("budgets[{i}]"), format!("must be finite and >= 0, got {b}"));
            }
            if self.attack.counts_flips(self.task) && b.fract() != 0.0 {
                return err(
                    &format!("budgets[{i}]"),
                    format!("flip budgets must be integers, got {b}"),
                );
            }
        }
        if let Some(task) = self.attack.task() {
            if task != self.task {
                return err(
                    "attack",
                    format!("{} needs task {}", self.attack.as_str(), task.as_str()),
                );
            }
        }
        match self.attack {
            AttackKind::RegSparse => {
                if self.knowledge != Knowledge::EstimatedLabels {
                    return err(
                        "knowledge",
                        "reg_sparse maximizes the estimated-label objective only".into(),
                    );
                }
                if self.sparsity.is_none_or(|c| c == 0) {
                    return err("sparsity", "reg_sparse needs a support size >= 1".into());
                }
            }
            AttackKind::Feature if self.task == Task::Regression && self.knowledge == Knowledge::EstimatedLabels => {
                // ŷ_u as the target makes Δ = 0 a stationary point.
                return err("knowledge", "the regression feature attack needs true labels".into());
            }
            _ => {}
        }
        if self.n_l == 0 {
            return err("n_l", "need at least one labeled node".into());
        }
        match &self.dataset {
            DatasetSource::Synthetic { n, d, gap } => {
                if *d == 0 {
                    return err("dataset.d", "must be >= 1".into());
                }
                if !(gap.is_finite() && *gap > 0.0) {
                    return err("dataset.gap", format!("must be finite and > 0, got {gap}"));
                }
                if self.n_l + self.n_inductive >= *n {
                    return err(
                        "n_l",
                        format!("n_l + n_inductive must leave unlabeled nodes out of n = {n}"),
                    );
                }
            }
            DatasetSource::File { path, max_n, .. } => {
                if !path.is_file() {
                    return err("dataset.path", format!("{} does not exist", path.display()));
                }
                if let Some(m) = max_n {
                    if self.n_l + self.n_inductive >= *m {
                        return err("dataset.max_n", format!("{m} leaves no unlabeled nodes"));
                    }
                }
            }
            DatasetSource::Toy => {
                if self.task != Task::Classification {
                    return err("task", "the toy instance is a classification problem".into());
                }
                if self.n_l != 4 || self.n_inductive != 0 {
                    return err(
                        "n_l",
                        "the toy instance has exactly 4 labeled nodes and no held-out rows".into(),
                    );
                }
            }
        }
        Ok(())
    }
}

/// A grid of experiments sharing one base configuration. Every listed axis
/// multiplies the grid; the expanded names get a `__<k>` suffix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub base: ExperimentConfig,
    #[serde(default)]
    pub attacks: Vec<AttackKind>,
    #[serde(default)]
    pub knowledge: Vec<Knowledge>,
    #[serde(default)]
    pub gamma_attacker: Vec<f64>,
    #[serde(default)]
    pub n_l: Vec<usize>,
}

impl SweepConfig {
    pub fn expand(&self) -> Result<Vec<ExperimentConfig>, ConfigError> {
        let mut out = vec![self.base.clone()];
        fn axis<T: Copy>(
            out: Vec<ExperimentConfig>,
            values: &[T],
            set: impl Fn(&mut ExperimentConfig, T),
        ) -> Vec<ExperimentConfig> {
            if values.is_empty() {
                return out;
            }
            out.iter()
                .flat_map(|c| {
                    values.iter().map(|&v| {
                        let mut c = c.clone();
                        set(&mut c, v);
                        c
                    })
                })
                .collect()
        }
        out = axis(out, &self.attacks, |c, v| c.attack = v);
        out = axis(out, &self.knowledge, |c, v| c.knowledge = v);
        out = axis(out, &self.gamma_attacker, |c, v| c.gamma_attacker = Some(v));
        out = axis(out, &self.n_l, |c, v| c.n_l = v);
        if out.len() > 1 {
            for (k, c) in out.iter_mut().enumerate() {
                c.name = format!("{}__{k}", self.base.name);
            }
        }
        for (k, c) in out.iter().enumerate() {
            c.validate()
                .map_err(|e| ConfigError::new(format!("experiments[{k}].{}", e.field), e.msg))?;
        }
        Ok(out)
    }
}

/// Either a single experiment or a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConfigDocument {
    Sweep(SweepConfig),
    Single(ExperimentConfig),
}

impl ConfigDocument {
    /// Parses a config file. Summary files emitted by a previous run are
    /// accepted too: their `config` member is used.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| ConfigError::new("$", e.to_string()))?;
        let value = match value.get("config") {
            Some(inner) if value.get("format_version").is_some() => inner.clone(),
            _ => value,
        };
        let doc = if value.get("base").is_some() {
            ConfigDocument::Sweep(serde_json::from_value(value).map_err(|e| ConfigError::new("base", e.to_string()))?)
        } else {
            let text = value.to_string();
            ConfigDocument::Single(
                serde_json::from_str(&text).map_err(|e| ConfigError::new(json_path(&e), e.to_string()))?,
            )
        };
        Ok(doc)
    }

    pub fn experiments(&self) -> Result<Vec<ExperimentConfig>, ConfigError> {
        match self {
            ConfigDocument::Sweep(s) => s.expand(),
            ConfigDocument::Single(c) => {
                c.validate()?;
                Ok(vec![c.clone()])
            }
        }
    }
}

fn json_path(e: &serde_json::Error) -> String {
    // serde_json reports missing and unknown fields in the message; lift the
    // field name out so errors point at it.
    let msg = e.to_string();
    for marker in ["missing field `", "unknown field `", "unknown variant `"] {
        if let Some(rest) = msg.split(marker).nth(1) {
            if let Some(name) = rest.split('`').next() {
                return name.to_string();
            }
        }
    }
    format!("$ (line {}, column {})", e.line(), e.column())
}
