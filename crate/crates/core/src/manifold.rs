//! Linear manifold regularization and the label attack against it.
//!
//! The model minimizes
//! `½‖X_l w − y_l‖² + (λ/2)‖w‖² + (β/2) Σ_{i<j} S_ij (x_iᵀw − x_jᵀw)²`
//! over labeled and unlabeled rows, whose minimizer is
//! `w = (X_lᵀX_l + λI + βXᵀLX)⁻¹ X_lᵀ y_l = P y_l`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::attack::regression::{tr_problem_for, LabelPerturbation};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::graph::KernelGraph;
use crate::linalg::spd_factor;
use crate::trust_region::{solve_tr, TrustRegionConfig};

/// Condition threshold for the normal equations.
pub const MAX_CONDITION: f64 = 1e14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ManifoldConfig {
    pub lambda_ridge: f64,
    pub beta_manifold: f64,
}

impl Default for ManifoldConfig {
    fn default() -> Self {
        ManifoldConfig {
            lambda_ridge: 0.1,
            beta_manifold: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ManifoldModel {
    pub w: DVector<f64>,
    pub lambda_ridge: f64,
    pub beta_manifold: f64,
    /// d x n_l map from labeled targets to weights.
    pub p: DMatrix<f64>,
}

impl ManifoldModel {
    /// `X P y_l` for an arbitrary label vector.
    pub fn predict_with(&self, x: &DMatrix<f64>, y_l: &DVector<f64>) -> DVector<f64> {
        x * (&self.p * y_l)
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> DVector<f64> {
        x * &self.w
    }
}

/// Fits the model on `ds` (labeled rows supervise, every row enters the
/// graph penalty). `g` must be built over the rows of `ds`.
pub fn fit_manifold(ds: &Dataset, g: &KernelGraph, cfg: &ManifoldConfig) -> Result<ManifoldModel> {
    ds.check_split()?;
    if g.n() != ds.n() {
        return Err(Error::usage(format!(
            "graph has {} nodes but the dataset {} rows",
            g.n(),
            ds.n()
        )));
    }
    if !(cfg.lambda_ridge > 0.0) || !(cfg.beta_manifold >= 0.0) {
        return Err(Error::domain("manifold model needs lambda > 0 and beta >= 0"));
    }
    let x = &ds.features;
    let x_l = ds.x_labeled();
    let mut a = x_l.tr_mul(&x_l) + x.tr_mul(&(g.laplacian() * x)) * cfg.beta_manifold;
    a = (&a + a.transpose()) * 0.5;
    for i in 0..a.nrows() {
        a[(i, i)] += cfg.lambda_ridge;
    }
    let chol = spd_factor(a, MAX_CONDITION).map_err(|e| Error::numeric(format!("manifold normal equations: {e}")))?;
    let p = chol.solve(&x_l.transpose());
    let w = &p * ds.y_labeled();
    Ok(ManifoldModel {
        w,
        lambda_ridge: cfg.lambda_ridge,
        beta_manifold: cfg.beta_manifold,
        p,
    })
}

/// Maximizes `½‖X_u P(y_l + δ) − y_u‖²` over `‖δ‖ <= d_max`, i.e. the
/// trust-region problem with `M = X_u P`, `H = −MᵀM`, `g = Mᵀ(y_u − M y_l)`.
pub fn attack_manifold(
    model: &ManifoldModel,
    x_u: &DMatrix<f64>,
    y_l: &DVector<f64>,
    y_u: &DVector<f64>,
    d_max: f64,
    cfg: &TrustRegionConfig,
) -> Result<LabelPerturbation> {
    if !(d_max >= 0.0) || !d_max.is_finite() {
        return Err(Error::domain(format!(
            "d_max must be a finite non-negative number, got {d_max}"
        )));
    }
    if x_u.ncols() != model.p.nrows() {
        return Err(Error::usage("feature dimension does not match the model"));
    }
    let m = x_u * &model.p;
    let objective = |delta: &DVector<f64>| -0.5 * (&m * (y_l + delta) - y_u).norm_squared();
    if d_max == 0.0 {
        let zero = DVector::zeros(y_l.len());
        let value = objective(&zero);
        let mut out = LabelPerturbation::new(zero, 0.0, value);
        out.certified_global = true;
        return Ok(out);
    }
    let problem = tr_problem_for(&m, y_l, y_u, d_max)?;
    let sol = solve_tr(&problem, cfg)?;
    let value = objective(&sol.z_star);
    let mut out = LabelPerturbation::new(sol.z_star, d_max, value);
    out.certified_global = sol.certified_global;
    Ok(out)
}
