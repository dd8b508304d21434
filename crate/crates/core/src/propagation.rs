//! Label propagation: the operator `K = (D_uu - S_uu)^{-1} S_ul` mapping
//! labeled values to unlabeled predictions, plus evaluation metrics.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::KernelGraph;
use crate::linalg::{sign, spd_factor};

/// Condition threshold for the unlabeled block system.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct PropagationOperator {
    /// n_u x n_l, row-stochastic.
    pub k: DMatrix<f64>,
    pub gamma: f64,
    pub n_labeled: usize,
}

impl PropagationOperator {
    pub fn n_unlabeled(&self) -> usize {
        self.k.nrows()
    }

    /// `K y_l` without squashing.
    pub fn apply(&self, y_l: &DVector<f64>) -> DVector<f64> {
        &self.k * y_l
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Squash {
    Identity,
    Sign,
}

/// Solves `(D_uu - S_uu) K = S_ul` by Cholesky; the first `n_labeled` nodes of
/// the graph are the labeled ones.
pub fn propagation_operator(g: &KernelGraph, n_labeled: usize) -> Result<PropagationOperator> {
    let n = g.n();
    if n_labeled == 0 || n_labeled >= n {
        return Err(Error::usage(format!("need 1 <= n_l < n, got n_l={n_labeled} n={n}")));
    }
    let n_u = n - n_labeled;
    let s = &g.similarity;
    let s_uu = s.view((n_labeled, n_labeled), (n_u, n_u));
    let s_ul = s.view((n_labeled, 0), (n_u, n_labeled)).into_owned();

    let mut system = -s_uu.into_owned();
    for i in 0..n_u {
        system[(i, i)] += g.degree[n_labeled + i];
    }
    let chol = spd_factor(system, MAX_CONDITION)
        .map_err(|e| Error::domain(format!("unlabeled subgraph disconnected from labels ({e})")))?;
    let k = chol.solve(&s_ul);
    Ok(PropagationOperator {
        k,
        gamma: g.gamma,
        n_labeled,
    })
}

pub fn predict(op: &PropagationOperator, y_l: &DVector<f64>, squash: Squash) -> Result<DVector<f64>> {
    if y_l.len() != op.n_labeled {
        return Err(Error::usage(format!(
            "expected {} labeled values, got {}",
            op.n_labeled,
            y_l.len()
        )));
    }
    let raw = op.apply(y_l);
    Ok(match squash {
        Squash::Identity => raw,
        Squash::Sign => raw.map(sign),
    })
}

fn check_lengths(a: &DVector<f64>, b: &DVector<f64>) -> Result<()> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::usage(format!(
            "metric inputs need equal nonzero lengths ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

pub fn rmse(pred: &DVector<f64>, truth: &DVector<f64>) -> Result<f64> {
    check_lengths(pred, truth)?;
    Ok(((pred - truth).norm_squared() / pred.len() as f64).sqrt())
}

/// Fraction of entries whose signs disagree (sign(0) = +1).
pub fn error_rate(pred: &DVector<f64>, truth: &DVector<f64>) -> Result<f64> {
    check_lengths(pred, truth)?;
    let wrong = pred
        .iter()
        .zip(truth.iter())
        .filter(|(p, t)| sign(**p) != sign(**t))
        .count();
    Ok(wrong as f64 / pred.len() as f64)
}
