//! Reference attacks: random noise and centrality-weighted perturbations.
//!
//! The weighted regression baselines put `|δ_i| ∝ score_i` on each labeled
//! node and take signs from the gradient of the victim loss
//! `½‖K(y_l + δ) − t‖²` at `δ = 0`, i.e. `sign(Kᵀ(K y_l − t))`. The weighted
//! classification baselines flip the `c_max` highest-scoring labeled nodes.

use nalgebra::DVector;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::attack::classification::FlipVector;
use crate::attack::regression::{regression_objective, LabelPerturbation};
use crate::error::{Error, Result};
use crate::graph::{degree_scores, pagerank_scores, KernelGraph, PageRankConfig};
use crate::linalg::sign;
use crate::propagation::PropagationOperator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    Random,
    Degree,
    Pagerank,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 3] = [BaselineKind::Random, BaselineKind::Degree, BaselineKind::Pagerank];

    pub fn as_str(self) -> &'static str {
        match self {
            BaselineKind::Random => "random",
            BaselineKind::Degree => "degree",
            BaselineKind::Pagerank => "pagerank",
        }
    }
}

fn check_budget(d_max: f64) -> Result<()> {
    if !(d_max >= 0.0) || !d_max.is_finite() {
        return Err(Error::domain(format!(
            "d_max must be a finite non-negative number, got {d_max}"
        )));
    }
    Ok(())
}

/// `δ = d_max ε/‖ε‖` with `ε ~ N(0, I)`. The objective is left as NaN since
/// no operator is involved.
pub fn baseline_random_reg(n_l: usize, d_max: f64, seed: u64) -> Result<LabelPerturbation> {
    check_budget(d_max)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eps: DVector<f64> = DVector::from_fn(n_l, |_, _| StandardNormal.sample(&mut rng));
    let delta = if d_max == 0.0 {
        DVector::zeros(n_l)
    } else {
        &eps * (d_max / eps.norm())
    };
    Ok(LabelPerturbation::new(delta, d_max, f64::NAN))
}

/// `c_max` distinct indices drawn uniformly.
pub fn baseline_random_cls(n_l: usize, c_max: usize, seed: u64) -> Result<FlipVector> {
    if c_max > n_l {
        return Err(Error::usage(format!("c_max = {c_max} exceeds n_l = {n_l}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = sample(&mut rng, n_l, c_max).into_vec();
    idx.sort_unstable();
    Ok(FlipVector::from_indices(n_l, &idx))
}

/// `|δ_i| = d_max score_i / ‖score‖`, signs from the victim-loss gradient.
pub fn baseline_weighted_reg(
    scores: &DVector<f64>,
    op: &PropagationOperator,
    y_l: &DVector<f64>,
    target: &DVector<f64>,
    d_max: f64,
) -> Result<LabelPerturbation> {
    check_budget(d_max)?;
    if scores.len() != op.n_labeled || y_l.len() != op.n_labeled || target.len() != op.n_unlabeled() {
        return Err(Error::usage("baseline inputs do not match the propagation operator"));
    }
    let norm = scores.norm();
    if !(norm > 0.0) {
        return Err(Error::domain("centrality scores of the labeled nodes are all zero"));
    }
    let direction = op.k.tr_mul(&(op.apply(y_l) - target)).map(sign);
    let delta = scores.component_mul(&direction) * (d_max / norm);
    let objective = regression_objective(op, y_l, target, &delta);
    Ok(LabelPerturbation::new(delta, d_max, objective))
}

/// Flips the `c_max` highest-scoring labeled nodes (lowest index on ties).
pub fn baseline_weighted_cls(scores: &DVector<f64>, c_max: usize) -> Result<FlipVector> {
    let n_l = scores.len();
    if c_max > n_l {
        return Err(Error::usage(format!("c_max = {c_max} exceeds n_l = {n_l}")));
    }
    let mut order: Vec<usize> = (0..n_l).collect();
    order.sort_by(|&i, &j| scores[j].total_cmp(&scores[i]).then(i.cmp(&j)));
    Ok(FlipVector::from_indices(n_l, &order[..c_max]))
}

/// Centrality of the labeled nodes (the first `n_l` graph nodes).
pub fn labeled_scores(
    kind: BaselineKind,
    g: &KernelGraph,
    n_l: usize,
    pagerank: &PageRankConfig,
) -> Result<DVector<f64>> {
    let all = match kind {
        BaselineKind::Degree => degree_scores(g),
        BaselineKind::Pagerank => pagerank_scores(g, pagerank)?,
        BaselineKind::Random => return Err(Error::usage("the random baseline has no scores")),
    };
    Ok(all.rows(0, n_l).into_owned())
}

pub fn baseline_degree_reg(
    g: &KernelGraph,
    op: &PropagationOperator,
    y_l: &DVector<f64>,
    target: &DVector<f64>,
    d_max: f64,
) -> Result<LabelPerturbation> {
    let scores = labeled_scores(BaselineKind::Degree, g, op.n_labeled, &PageRankConfig::default())?;
    baseline_weighted_reg(&scores, op, y_l, target, d_max)
}

pub fn baseline_pagerank_reg(
    g: &KernelGraph,
    op: &PropagationOperator,
    y_l: &DVector<f64>,
    target: &DVector<f64>,
    d_max: f64,
    cfg: &PageRankConfig,
) -> Result<LabelPerturbation> {
    let scores = labeled_scores(BaselineKind::Pagerank, g, op.n_labeled, cfg)?;
    baseline_weighted_reg(&scores, op, y_l, target, d_max)
}

pub fn baseline_degree_cls(g: &KernelGraph, n_l: usize, c_max: usize) -> Result<FlipVector> {
    baseline_weighted_cls(
        &labeled_scores(BaselineKind::Degree, g, n_l, &PageRankConfig::default())?,
        c_max,
    )
}

pub fn baseline_pagerank_cls(g: &KernelGraph, n_l: usize, c_max: usize, cfg: &PageRankConfig) -> Result<FlipVector> {
    baseline_weighted_cls(&labeled_scores(BaselineKind::Pagerank, g, n_l, cfg)?, c_max)
}
