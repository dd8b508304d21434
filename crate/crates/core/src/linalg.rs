//! Small dense linear-algebra helpers shared by the solvers.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Symmetric eigendecomposition with eigenvalues sorted ascending; column `i`
/// of the returned matrix is the eigenvector of eigenvalue `i`.
pub fn sym_eigen_sorted(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(order.len(), order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(m.nrows(), order.len());
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// Estimates the operator norm of a symmetric matrix by power iteration on
/// `‖M x‖`. The start vector is a fixed pseudo-random draw so the estimate is
/// deterministic.
pub fn operator_norm_estimate(m: &DMatrix<f64>, iters: usize) -> f64 {
    let n = m.ncols();
    if n == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x0b5e_55ed);
    let mut x = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
    x /= x.norm();
    let mut estimate = 0.0;
    for _ in 0..iters {
        let y = m * &x;
        let norm = y.norm();
        if norm == 0.0 {
            return estimate;
        }
        estimate = norm;
        x = y / norm;
    }
    estimate
}

/// Cholesky factorization of a symmetric positive-definite matrix with a
/// cheap condition estimate `(max L_ii / min L_ii)^2`, which bounds the true
/// 2-norm condition number from below.
pub fn spd_factor(m: DMatrix<f64>, max_condition: f64) -> Result<Cholesky<f64, Dyn>> {
    let chol = Cholesky::new(m).ok_or_else(|| Error::numeric("matrix is not positive definite"))?;
    let diag = chol.l_dirty().diagonal();
    let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| {
        (lo.min(v.abs()), hi.max(v.abs()))
    });
    let cond = (hi / lo).powi(2);
    if !cond.is_finite() || cond > max_condition {
        return Err(Error::numeric(format!(
            "condition estimate {cond:.3e} exceeds {max_condition:.1e}"
        )));
    }
    Ok(chol)
}

pub fn sign(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Flips `v` so that its first entry with magnitude above `tol` is positive.
pub fn canonical_sign(mut v: DVector<f64>, tol: f64) -> DVector<f64> {
    if let Some(first) = v.iter().copied().find(|x| x.abs() > tol) {
        if first < 0.0 {
            v.neg_mut();
        }
    }
    v
}
