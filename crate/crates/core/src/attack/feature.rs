//! Feature poisoning: perturb the labeled rows `X_l ← X_l + Δ` so that label
//! propagation on the rebuilt kernel graph misses a target, with a row-wise
//! group-lasso penalty that keeps few rows active.
//!
//! The smooth part `f(Δ) = −½‖ŷ(Δ) − t‖²`, `ŷ = M⁻¹ S'_ul y_l` with
//! `M = D'_uu − S'_uu`, is differentiated by the adjoint method: one extra
//! solve `M a = −(ŷ − t)` gives `∂f/∂S'_ij = a_i (y_j − ŷ_i)` for every
//! unlabeled `i` and labeled `j`, and the chain rule through
//! `S'_ij = exp(−γ‖x'_j − x_i‖²)` finishes the job.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::spd_factor;
use crate::propagation::MAX_CONDITION;

/// Rows with an l2 norm above this are reported as active.
pub const ACTIVE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureAttackConfig {
    pub gamma: f64,
    pub lambda_group: f64,
    pub steps: usize,
    /// Initial proximal step; halved until the sufficient-decrease test holds.
    pub step_size: f64,
    pub max_backtracks: usize,
    /// Optional cap on `‖Δ‖_F`. The prox of the group penalty plus the ball
    /// indicator is the group soft threshold followed by a radial projection.
    pub radius: Option<f64>,
}

impl Default for FeatureAttackConfig {
    fn default() -> Self {
        FeatureAttackConfig {
            gamma: 1.0,
            lambda_group: 0.1,
            steps: 100,
            step_size: 1.0,
            max_backtracks: 40,
            radius: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeaturePerturbation {
    /// n_l x d.
    pub delta_x: DMatrix<f64>,
    pub active_rows: Vec<usize>,
    pub lambda_group: f64,
    /// Full objective (smooth part plus penalty) before each step and at the end.
    pub loss_trace: Vec<f64>,
    /// Row norms of `delta_x` at the end.
    pub row_norms: Vec<f64>,
}

fn row_norms(m: &DMatrix<f64>) -> Vec<f64> {
    m.row_iter().map(|r| r.norm()).collect()
}

/// `Σ_i ‖row_i‖`.
pub fn group_norm(m: &DMatrix<f64>) -> f64 {
    row_norms(m).iter().sum()
}

/// Row-wise soft threshold: `max(0, 1 − t/‖row‖)·row`.
pub fn group_soft_threshold(m: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    let mut out = m.clone();
    for mut row in out.row_iter_mut() {
        let norm = row.norm();
        let scale = if norm > t { 1.0 - t / norm } else { 0.0 };
        row *= scale;
    }
    out
}

/// Smooth loss `−½‖ŷ(Δ) − t‖²` and its gradient with respect to `Δ`.
///
/// `x` holds the clean features (labeled rows first), `delta` the n_l x d
/// perturbation of the labeled rows.
pub fn feature_loss_and_grad(
    x: &DMatrix<f64>,
    y_l: &DVector<f64>,
    target: &DVector<f64>,
    gamma: f64,
    delta: &DMatrix<f64>,
) -> Result<(f64, DMatrix<f64>)> {
    let n = x.nrows();
    let n_l = y_l.len();
    let d = x.ncols();
    if n_l == 0 || n_l >= n || delta.shape() != (n_l, d) || target.len() != n - n_l {
        return Err(Error::usage("inconsistent shapes for the feature attack"));
    }
    if !(gamma > 0.0) {
        return Err(Error::domain(format!("kernel width must be positive, got {gamma}")));
    }
    let n_u = n - n_l;
    let mut xp = x.clone();
    let mut block = xp.rows_mut(0, n_l);
    block += delta;

    // Unlabeled rows of S': the labeled columns depend on Δ, the rest do not.
    let mut s_ul = DMatrix::zeros(n_u, n_l);
    let mut s_uu = DMatrix::from_element(n_u, n_u, 1.0);
    for i in 0..n_u {
        let xi = xp.row(n_l + i);
        for j in 0..n_l {
            s_ul[(i, j)] = (-gamma * (xi - xp.row(j)).norm_squared()).exp();
        }
        for k in (i + 1)..n_u {
            let v = (-gamma * (xi - xp.row(n_l + k)).norm_squared()).exp();
            s_uu[(i, k)] = v;
            s_uu[(k, i)] = v;
        }
    }
    let mut m = -s_uu.clone();
    for i in 0..n_u {
        let degree: f64 = s_ul.row(i).sum() + s_uu.row(i).sum();
        m[(i, i)] += degree;
    }
    let chol = spd_factor(m, MAX_CONDITION)
        .map_err(|e| Error::numeric(format!("unlabeled subgraph disconnected from labels ({e})")))?;
    let y_hat = chol.solve(&(&s_ul * y_l));
    let r = &y_hat - target;
    let loss = -0.5 * r.norm_squared();
    let a = chol.solve(&(-&r));

    let mut grad = DMatrix::zeros(n_l, d);
    for j in 0..n_l {
        let xj = xp.row(j);
        let mut gj = grad.row_mut(j);
        for i in 0..n_u {
            let coeff = a[i] * (y_l[j] - y_hat[i]) * (-2.0 * gamma * s_ul[(i, j)]);
            gj += (xj - xp.row(n_l + i)) * coeff;
        }
    }
    Ok((loss, grad))
}

/// Proximal gradient descent on `f(Δ) + λ Σ‖Δ_i‖` with backtracking.
pub fn attack_features(ds: &Dataset, target: &DVector<f64>, cfg: &FeatureAttackConfig) -> Result<FeaturePerturbation> {
    ds.check_split()?;
    if cfg.steps == 0 {
        return Err(Error::usage("the feature attack needs at least one step"));
    }
    if !(cfg.lambda_group >= 0.0) || !(cfg.step_size > 0.0) {
        return Err(Error::domain("need lambda_group >= 0 and step_size > 0"));
    }
    if cfg.radius.is_some_and(|r| !(r >= 0.0 && r.is_finite())) {
        return Err(Error::domain("the feature radius must be finite and >= 0"));
    }
    let x = &ds.features;
    let y_l = ds.y_labeled();
    let mut delta = DMatrix::zeros(ds.n_labeled, ds.d());
    let at = |delta: &DMatrix<f64>, step: usize| {
        feature_loss_and_grad(x, &y_l, target, cfg.gamma, delta)
            .map_err(|e| Error::numeric(format!("step {step}: {e}")))
    };
    let (mut f, mut grad) = at(&delta, 0)?;
    let mut trace = vec![f + cfg.lambda_group * group_norm(&delta)];
    let mut step_size = cfg.step_size;
    for step in 0..cfg.steps {
        let mut accepted = None;
        for _ in 0..=cfg.max_backtracks {
            let mut cand = group_soft_threshold(&(&delta - &grad * step_size), step_size * cfg.lambda_group);
            if let Some(r) = cfg.radius {
                let norm = cand.norm();
                if norm > r {
                    cand *= r / norm;
                }
            }
            let diff = &cand - &delta;
            let (f_cand, grad_cand) = at(&cand, step + 1)?;
            let model = f + grad.dot(&diff) + diff.norm_squared() / (2.0 * step_size);
            if f_cand <= model + 1e-12 * f.abs().max(1.0) {
                accepted = Some((cand, f_cand, grad_cand));
                break;
            }
            step_size *= 0.5;
        }
        let Some((cand, f_cand, grad_cand)) = accepted else {
            log::debug!("feature attack backtracking exhausted at step {step}");
            break;
        };
        let moved = (&cand - &delta).amax();
        delta = cand;
        f = f_cand;
        grad = grad_cand;
        trace.push(f + cfg.lambda_group * group_norm(&delta));
        if moved == 0.0 {
            break;
        }
    }
    let norms = row_norms(&delta);
    let active_rows = (0..norms.len()).filter(|&i| norms[i] > ACTIVE_TOL).collect();
    Ok(FeaturePerturbation {
        delta_x: delta,
        active_rows,
        lambda_group: cfg.lambda_group,
        loss_trace: trace,
        row_norms: norms,
    })
}
