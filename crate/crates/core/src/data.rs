//! Datasets: libsvm ingestion, normalization, synthetic generators and the
//! labeled/unlabeled split.
//!
//! A [`Dataset`] keeps its labeled rows as a prefix: rows `0..n_labeled` are
//! labeled, the rest are unlabeled. Freshly loaded data has `n_labeled == 0`
//! until [`split`] (or a generator) assigns the labeled block.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Regression,
    Classification,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Regression => "regression",
            Task::Classification => "classification",
        }
    }
}

impl std::str::FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "regression" => Ok(Task::Regression),
            "classification" => Ok(Task::Classification),
            other => Err(Error::usage(format!("unknown task `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// n x d feature matrix, labeled rows first.
    pub features: DMatrix<f64>,
    pub labels: DVector<f64>,
    pub n_labeled: usize,
    pub task: Task,
}

impl Dataset {
    /// Builds a dataset and checks the shape and label invariants.
    pub fn new(features: DMatrix<f64>, labels: DVector<f64>, n_labeled: usize, task: Task) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::usage(format!(
                "{} feature rows but {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        if features.ncols() == 0 {
            return Err(Error::domain("dataset needs at least one feature"));
        }
        if n_labeled > features.nrows() {
            return Err(Error::usage("n_labeled exceeds the number of rows"));
        }
        if task == Task::Classification && labels.iter().any(|&y| y != 1.0 && y != -1.0) {
            return Err(Error::domain("classification labels must be -1 or +1"));
        }
        Ok(Dataset {
            features,
            labels,
            n_labeled,
            task,
        })
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn d(&self) -> usize {
        self.features.ncols()
    }

    pub fn n_unlabeled(&self) -> usize {
        self.n() - self.n_labeled
    }

    /// Fails unless `1 <= n_labeled < n`.
    pub fn check_split(&self) -> Result<()> {
        if self.n_labeled == 0 || self.n_labeled >= self.n() {
            return Err(Error::usage(format!(
                "dataset split needs 1 <= n_l < n, got n_l={} n={}",
                self.n_labeled,
                self.n()
            )));
        }
        Ok(())
    }

    pub fn y_labeled(&self) -> DVector<f64> {
        self.labels.rows(0, self.n_labeled).into_owned()
    }

    pub fn y_unlabeled(&self) -> DVector<f64> {
        self.labels.rows(self.n_labeled, self.n_unlabeled()).into_owned()
    }

    pub fn x_labeled(&self) -> DMatrix<f64> {
        self.features.rows(0, self.n_labeled).into_owned()
    }

    pub fn x_unlabeled(&self) -> DMatrix<f64> {
        self.features.rows(self.n_labeled, self.n_unlabeled()).into_owned()
    }

    /// Returns the dataset with rows reordered so that `order[k]` becomes row `k`.
    pub fn permute_rows(&self, order: &[usize], n_labeled: usize) -> Result<Dataset> {
        let features = DMatrix::from_fn(order.len(), self.d(), |i, j| self.features[(order[i], j)]);
        let labels = DVector::from_iterator(order.len(), order.iter().map(|&i| self.labels[i]));
        Dataset::new(features, labels, n_labeled, self.task)
    }
}

/// Parses libsvm text (`label idx:val ...`, 1-based strictly increasing indices).
pub fn parse_libsvm(text: &str, task: Task) -> Result<Dataset> {
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut raw_labels = Vec::new();
    let mut d = 0usize;

    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let label_tok = tokens.next().unwrap_or_default();
        let label: f64 = label_tok.parse().map_err(|_| Error::Parse {
            line: line_no,
            msg: format!("bad label `{label_tok}`"),
        })?;
        let mut row = Vec::new();
        let mut last = 0usize;
        for tok in tokens {
            let (idx, val) = tok.split_once(':').ok_or_else(|| Error::Parse {
                line: line_no,
                msg: format!("expected idx:val, got `{tok}`"),
            })?;
            let idx: usize = idx.parse().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("bad index `{idx}`"),
            })?;
            let val: f64 = val.parse().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("bad value `{val}`"),
            })?;
            if idx == 0 || idx <= last {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("indices must be 1-based and strictly increasing (saw {idx} after {last})"),
                });
            }
            last = idx;
            d = d.max(idx);
            row.push((idx - 1, val));
        }
        raw_labels.push(label);
        rows.push(row);
    }

    if rows.is_empty() {
        return Err(Error::Parse {
            line: 0,
            msg: "no data lines".into(),
        });
    }

    let mut features = DMatrix::zeros(rows.len(), d.max(1));
    for (i, row) in rows.iter().enumerate() {
        for &(j, v) in row {
            features[(i, j)] = v;
        }
    }
    let labels = match task {
        Task::Regression => DVector::from_vec(raw_labels),
        Task::Classification => DVector::from_vec(map_binary_labels(&raw_labels)?),
    };
    Dataset::new(features, labels, 0, task)
}

/// Maps two distinct raw labels to {-1, +1} in ascending order.
fn map_binary_labels(raw: &[f64]) -> Result<Vec<f64>> {
    let mut distinct: Vec<f64> = raw.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    match distinct.as_slice() {
        [lo, hi] => Ok(raw
            .iter()
            .map(|&y| {
                if y == *lo {
                    -1.0
                } else {
                    debug_assert_eq!(y, *hi);
                    1.0
                }
            })
            .collect()),
        [only] if *only == 1.0 || *only == -1.0 => Ok(raw.to_vec()),
        [only] => Err(Error::domain(format!(
            "a single class label {only} cannot be mapped to -1/+1"
        ))),
        many => Err(Error::domain(format!(
            "binary classification needs 2 distinct labels, found {}",
            many.len()
        ))),
    }
}

pub fn load_libsvm(path: impl AsRef<Path>, task: Task) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)?;
    parse_libsvm(&text, task)
}

/// Standardizes every feature column (population variance) and rescales
/// regression labels to [0, 1].
pub fn normalize(ds: &Dataset) -> Result<Dataset> {
    let n = ds.n();
    if n < 2 {
        return Err(Error::domain("normalization needs at least two rows"));
    }
    let mut features = ds.features.clone();
    for mut col in features.column_iter_mut() {
        let mean = col.mean();
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        let sd = var.sqrt();
        let divisor = if sd < 1e-12 { 1.0 } else { sd };
        col.apply(|v| *v = (*v - mean) / divisor);
    }

    let labels = match ds.task {
        Task::Classification => ds.labels.clone(),
        Task::Regression => {
            let lo = ds.labels.min();
            let hi = ds.labels.max();
            if hi == lo {
                return Err(Error::domain("regression labels are constant; cannot rescale"));
            }
            ds.labels.map(|y| (y - lo) / (hi - lo))
        }
    };
    Dataset::new(features, labels, ds.n_labeled, ds.task)
}

/// Randomly chooses `n_labeled` rows as the labeled prefix; the order of both
/// blocks is a seeded permutation.
pub fn split(ds: &Dataset, n_labeled: usize, seed: u64) -> Result<Dataset> {
    if n_labeled == 0 || n_labeled >= ds.n() {
        return Err(Error::usage(format!(
            "need 1 <= n_l < n, got n_l={n_labeled} n={}",
            ds.n()
        )));
    }
    let mut order: Vec<usize> = (0..ds.n()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    ds.permute_rows(&order, n_labeled)
}

/// Keeps `max_n` uniformly chosen rows (original order) when the dataset is larger.
pub fn subsample(ds: &Dataset, max_n: usize, seed: u64) -> Result<Dataset> {
    if ds.n() <= max_n {
        return Ok(ds.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = rand::seq::index::sample(&mut rng, ds.n(), max_n).into_vec();
    keep.sort_unstable();
    ds.permute_rows(&keep, 0)
}

/// Two Gaussian clusters, cluster A (label -1 / target 0) first, then cluster B.
///
/// Centers sit at `-gap/2` and `+gap/2` on the first axis with unit isotropic
/// noise. Regression targets are the cluster value plus `0.1 * offset` along
/// the first axis, so they vary smoothly within each cluster.
pub fn two_cluster_points(n: usize, d: usize, gap: f64, task: Task, seed: u64) -> Result<Dataset> {
    if n < 2 || d == 0 {
        return Err(Error::usage("need n >= 2 and d >= 1"));
    }
    if !(gap > 0.0) {
        return Err(Error::domain("cluster gap must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_a = n / 2;
    let mut features = DMatrix::zeros(n, d);
    let mut labels = DVector::zeros(n);
    for i in 0..n {
        let in_b = i >= n_a;
        let center = if in_b { gap / 2.0 } else { -gap / 2.0 };
        for j in 0..d {
            let noise: f64 = StandardNormal.sample(&mut rng);
            features[(i, j)] = noise + if j == 0 { center } else { 0.0 };
        }
        labels[i] = match task {
            Task::Classification => {
                if in_b {
                    1.0
                } else {
                    -1.0
                }
            }
            Task::Regression => {
                let base = if in_b { 1.0 } else { 0.0 };
                base + 0.1 * (features[(i, 0)] - center)
            }
        };
    }
    Dataset::new(features, labels, 0, task)
}

/// Two-cluster synthetic data with a labeled prefix drawn evenly from both
/// clusters (cluster A gets `n_labeled / 2`, cluster B the rest).
pub fn synth_two_clusters(n: usize, d: usize, n_labeled: usize, gap: f64, task: Task, seed: u64) -> Result<Dataset> {
    if n_labeled == 0 || n_labeled >= n {
        return Err(Error::usage(format!("need 1 <= n_l < n, got n_l={n_labeled} n={n}")));
    }
    let points = two_cluster_points(n, d, gap, task, seed)?;
    let n_a = n / 2;
    let la = n_labeled / 2;
    let lb = n_labeled - la;
    if la > n_a || lb > n - n_a {
        return Err(Error::usage("n_l too large for an even split across clusters"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ SPLIT_STREAM);
    let mut a: Vec<usize> = (0..n_a).collect();
    let mut b: Vec<usize> = (n_a..n).collect();
    a.shuffle(&mut rng);
    b.shuffle(&mut rng);
    let mut labeled: Vec<usize> = a[..la].iter().chain(&b[..lb]).copied().collect();
    let mut unlabeled: Vec<usize> = a[la..].iter().chain(&b[lb..]).copied().collect();
    labeled.shuffle(&mut rng);
    unlabeled.shuffle(&mut rng);
    labeled.extend(unlabeled);
    points.permute_rows(&labeled, n_labeled)
}

// Keeps the split stream independent of the point stream for the same seed.
const SPLIT_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;

/// Small hand-built instance where one labeled node controls a 3-node
/// unlabeled cluster and every other labeled node is far away.
#[derive(Debug, Clone)]
pub struct FlipToy {
    pub dataset: Dataset,
    pub gamma: f64,
    /// Index (within the labeled block) of the controlling node.
    pub pivot: usize,
    /// Indices (within the unlabeled block) of the controlled cluster.
    pub cluster: Vec<usize>,
}

/// Eight nodes in the plane: four labeled, four unlabeled. Labeled node 0
/// (label +1) sits next to unlabeled nodes 0..3; flipping it should turn all
/// three predictions negative.
pub fn flip_toy() -> FlipToy {
    #[rustfmt::skip]
    let coords: [(f64, f64); 8] = [
        // labeled
        (0.0, 0.0),
        (8.0, 0.0),
        (0.0, 8.0),
        (8.0, 8.0),
        // unlabeled: the controlled cluster, then one node next to labeled 1
        (0.6, 0.3),
        (0.3, 0.7),
        (0.8, 0.8),
        (8.5, 0.4),
    ];
    let labels = [1.0, 1.0, -1.0, 1.0, 1.0, 1.0, 1.0, 1.0];
    let features = DMatrix::from_fn(8, 2, |i, j| if j == 0 { coords[i].0 } else { coords[i].1 });
    let dataset = Dataset::new(features, DVector::from_row_slice(&labels), 4, Task::Classification)
        .expect("toy instance is well formed");
    FlipToy {
        dataset,
        gamma: 0.5,
        pivot: 0,
        cluster: vec![0, 1, 2],
    }
}

const FORMAT_MAGIC: &str = "gssl-dataset";
const FORMAT_VERSION: u32 = 1;

/// Serializes a dataset to the versioned text format read by [`read_dataset`].
/// Values use the shortest round-trip decimal representation.
pub fn dataset_to_string(ds: &Dataset) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{FORMAT_MAGIC} {FORMAT_VERSION}");
    let _ = writeln!(
        out,
        "n={} d={} n_l={} task={}",
        ds.n(),
        ds.d(),
        ds.n_labeled,
        ds.task.as_str()
    );
    for i in 0..ds.n() {
        let _ = write!(out, "{:?}", ds.labels[i]);
        for j in 0..ds.d() {
            let _ = write!(out, " {:?}", ds.features[(i, j)]);
        }
        out.push('\n');
    }
    out
}

pub fn dataset_from_str(text: &str) -> Result<Dataset> {
    let mut lines = text.lines().enumerate();
    let bad = |line: usize, msg: &str| Error::Parse {
        line,
        msg: msg.to_string(),
    };

    let (_, magic) = lines.next().ok_or_else(|| bad(1, "empty file"))?;
    let mut head = magic.split_whitespace();
    if head.next() != Some(FORMAT_MAGIC) {
        return Err(bad(1, "not a gssl-dataset file"));
    }
    let version: u32 = head
        .next()
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| bad(1, "missing version"))?;
    if version != FORMAT_VERSION {
        return Err(bad(1, &format!("unsupported version {version}")));
    }

    let (_, header) = lines.next().ok_or_else(|| bad(2, "missing header"))?;
    let (mut n, mut d, mut n_l, mut task) = (None, None, None, None);
    for field in header.split_whitespace() {
        let (k, v) = field
            .split_once('=')
            .ok_or_else(|| bad(2, "header fields are key=value"))?;
        match k {
            "n" => n = v.parse::<usize>().ok(),
            "d" => d = v.parse::<usize>().ok(),
            "n_l" => n_l = v.parse::<usize>().ok(),
            "task" => task = v.parse::<Task>().ok(),
            _ => return Err(bad(2, &format!("unknown header field `{k}`"))),
        }
    }
    let (n, d, n_l, task) = match (n, d, n_l, task) {
        (Some(n), Some(d), Some(l), Some(t)) => (n, d, l, t),
        _ => return Err(bad(2, "header needs n, d, n_l and task")),
    };

    let mut features = DMatrix::zeros(n, d);
    let mut labels = DVector::zeros(n);
    let mut row = 0;
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        if row >= n {
            return Err(bad(idx + 1, "more rows than the header declares"));
        }
        let values: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad(idx + 1, "bad number"))?;
        if values.len() != d + 1 {
            return Err(bad(
                idx + 1,
                &format!("expected {} values, got {}", d + 1, values.len()),
            ));
        }
        labels[row] = values[0];
        for j in 0..d {
            features[(row, j)] = values[j + 1];
        }
        row += 1;
    }
    if row != n {
        return Err(bad(0, &format!("expected {n} rows, got {row}")));
    }
    Dataset::new(features, labels, n_l, task)
}

pub fn write_dataset(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, dataset_to_string(ds))?;
    Ok(())
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    dataset_from_str(&std::fs::read_to_string(path)?)
}
