//! Continuous label attacks on label propagation for regression.
//!
//! All three attacks maximize the victim loss `½‖K(y_l + δ) − t‖²` over
//! `‖δ‖ ≤ d_max`, where `t` is either the true `y_u` or the attacker's own
//! estimate `K y_l`. With the estimate, the loss is `½‖Kδ‖²` and the answer is
//! the top right singular vector of `K`; with the truth it becomes a
//! non-convex trust-region problem.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{canonical_sign, sym_eigen_sorted};
use crate::propagation::PropagationOperator;
use crate::trust_region::{solve_tr, TrustRegionConfig, TrustRegionProblem};

/// Entries with magnitude at or below this count as zero.
pub const SUPPORT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LabelPerturbation {
    pub delta_y: DVector<f64>,
    pub budget_l2: f64,
    pub support_size: usize,
    /// The attack objective `−½‖K(y_l + δ) − t‖²` (lower is more damaging).
    pub objective: f64,
    /// The solver proved global optimality for its own objective.
    pub certified_global: bool,
    /// Top singular values were tied, so the direction is not unique.
    pub degenerate: bool,
}

impl LabelPerturbation {
    pub(crate) fn new(delta_y: DVector<f64>, budget_l2: f64, objective: f64) -> Self {
        let support_size = delta_y.iter().filter(|v| v.abs() > SUPPORT_TOL).count();
        LabelPerturbation {
            delta_y,
            budget_l2,
            support_size,
            objective,
            certified_global: false,
            degenerate: false,
        }
    }

    pub fn norm(&self) -> f64 {
        self.delta_y.norm()
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

fn check_len(what: &str, v: &DVector<f64>, n: usize) -> Result<()> {
    if v.len() != n {
        return Err(Error::usage(format!("{what} has length {}, expected {n}", v.len())));
    }
    Ok(())
}

/// `−½‖K(y_l + δ) − t‖²`.
pub fn regression_objective(
    op: &PropagationOperator,
    y_l: &DVector<f64>,
    target: &DVector<f64>,
    delta: &DVector<f64>,
) -> f64 {
    -0.5 * (op.apply(&(y_l + delta)) - target).norm_squared()
}

/// The trust-region instance `H = −KᵀK`, `g = Kᵀ(t − K y_l)`, radius `d_max`.
pub fn regression_tr_problem(
    op: &PropagationOperator,
    y_l: &DVector<f64>,
    target: &DVector<f64>,
    d_max: f64,
) -> Result<TrustRegionProblem> {
    tr_problem_for(&op.k, y_l, target, d_max)
}

pub(crate) fn tr_problem_for(
    m: &DMatrix<f64>,
    y_l: &DVector<f64>,
    target: &DVector<f64>,
    d_max: f64,
) -> Result<TrustRegionProblem> {
    check_len("y_l", y_l, m.ncols())?;
    check_len("target", target, m.nrows())?;
    let mtm = m.tr_mul(m);
    let h = -(&mtm + mtm.transpose()) * 0.5;
    let g = m.tr_mul(&(target - m * y_l));
    TrustRegionProblem::new(h, g, d_max)
}

/// Tie threshold for the top two eigenvalues.
const TIE_TOL: f64 = 1e-10;

fn top_eigvec(a: &DMatrix<f64>) -> (f64, DVector<f64>, bool) {
    let (vals, vecs) = sym_eigen_sorted(a);
    let n = vals.len();
    let top = vals[n - 1];
    let tied = n > 1 && (top - vals[n - 2]) <= TIE_TOL * top.abs().max(1.0);
    (top, canonical_sign(vecs.column(n - 1).into_owned(), SUPPORT_TOL), tied)
}

/// Attack with estimated labels: `δ = d_max v₁`, `v₁` the top right singular
/// vector of `K`, signed so that its first nonzero entry is positive.
pub fn attack_reg_estimated(op: &PropagationOperator, d_max: f64) -> Result<LabelPerturbation> {
    check_budget(d_max)?;
    let (top, v, tied) = top_eigvec(&op.k.tr_mul(&op.k));
    if tied {
        log::warn!("top singular values of K are tied; the attack direction is not unique");
    }
    let mut out = LabelPerturbation::new(v * d_max, d_max, -0.5 * top * d_max * d_max);
    out.certified_global = true;
    out.degenerate = tied;
    Ok(out)
}

/// Attack with the true unlabeled labels, solved as a trust-region problem.
pub fn attack_reg_true(
    op: &PropagationOperator,
    y_l: &DVector<f64>,
    y_u: &DVector<f64>,
    d_max: f64,
    cfg: &TrustRegionConfig,
) -> Result<LabelPerturbation> {
    check_budget(d_max)?;
    check_len("y_l", y_l, op.n_labeled)?;
    check_len("y_u", y_u, op.n_unlabeled())?;
    if d_max == 0.0 {
        let zero = DVector::zeros(op.n_labeled);
        let objective = regression_objective(op, y_l, y_u, &zero);
        let mut out = LabelPerturbation::new(zero, 0.0, objective);
        out.certified_global = true;
        return Ok(out);
    }
    let problem = regression_tr_problem(op, y_l, y_u, d_max)?;
    let sol = solve_tr(&problem, cfg)?;
    let objective = regression_objective(op, y_l, y_u, &sol.z_star);
    let mut out = LabelPerturbation::new(sol.z_star, d_max, objective);
    out.certified_global = sol.certified_global;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SparsePcaConfig {
    pub restarts: usize,
    pub max_iter: usize,
    pub seed: u64,
    /// Polish the best support with single-index swaps.
    pub swap_search: bool,
    pub max_swap_passes: usize,
}

impl Default for SparsePcaConfig {
    fn default() -> Self {
        SparsePcaConfig {
            restarts: 20,
            max_iter: 1000,
            seed: 0,
            swap_search: true,
            max_swap_passes: 50,
        }
    }
}

/// `c`-sparse attack with estimated labels: maximize `‖Kδ‖` over
/// `‖δ‖ = d_max, ‖δ‖₀ ≤ c`.
///
/// Truncated power iteration on `KᵀK` from the truncated dense direction and
/// `restarts` random starts; each support found is re-solved exactly and the
/// best one is polished by swap moves. `c = 1` and `c = n_l` are solved exactly.
pub fn attack_reg_sparse(
    op: &PropagationOperator,
    d_max: f64,
    c_max: usize,
    cfg: &SparsePcaConfig,
) -> Result<LabelPerturbation> {
    check_budget(d_max)?;
    let n_l = op.n_labeled;
    if c_max == 0 || c_max > n_l {
        return Err(Error::usage(format!("c_max must lie in 1..={n_l}, got {c_max}")));
    }
    let a = op.k.tr_mul(&op.k);
    let a = (&a + a.transpose()) * 0.5;
    if c_max == n_l {
        let mut out = attack_reg_estimated(op, d_max)?;
        out.support_size = out.delta_y.iter().filter(|v| v.abs() > SUPPORT_TOL).count();
        return Ok(out);
    }
    if c_max == 1 {
        let mut best = 0;
        for i in 1..n_l {
            if a[(i, i)] > a[(best, best)] {
                best = i;
            }
        }
        let mut delta = DVector::zeros(n_l);
        delta[best] = d_max;
        let mut out = LabelPerturbation::new(delta, d_max, -0.5 * a[(best, best)] * d_max * d_max);
        out.certified_global = true;
        return Ok(out);
    }

    let mut best: Option<(f64, Vec<usize>)> = None;
    let consider = |support: Vec<usize>, best: &mut Option<(f64, Vec<usize>)>| {
        let value = support_value(&a, &support).0;
        if best.as_ref().is_none_or(|(v, _)| value > *v) {
            *best = Some((value, support));
        }
    };
    let (_, dense, _) = top_eigvec(&a);
    consider(truncated_power(&a, dense, c_max, cfg.max_iter), &mut best);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..cfg.restarts {
        let start = DVector::from_fn(n_l, |_, _| StandardNormal.sample(&mut rng));
        consider(truncated_power(&a, start, c_max, cfg.max_iter), &mut best);
    }
    let (mut value, mut support) = best.expect("at least one start");
    if cfg.swap_search {
        (value, support) = swap_search(&a, value, support, cfg.max_swap_passes);
    }
    let (_, local) = support_value(&a, &support);
    let mut delta = DVector::zeros(n_l);
    for (k, &i) in support.iter().enumerate() {
        delta[i] = local[k] * d_max;
    }
    let delta = canonical_sign(delta, SUPPORT_TOL);
    Ok(LabelPerturbation::new(delta, d_max, -0.5 * value * d_max * d_max))
}

/// Largest eigenvalue of `A[S, S]` and its (canonically signed) eigenvector.
fn support_value(a: &DMatrix<f64>, support: &[usize]) -> (f64, DVector<f64>) {
    let sub = DMatrix::from_fn(support.len(), support.len(), |i, j| a[(support[i], support[j])]);
    let (top, v, _) = top_eigvec(&sub);
    (top, v)
}

fn top_indices(x: &DVector<f64>, c: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&i, &j| x[j].abs().total_cmp(&x[i].abs()).then(i.cmp(&j)));
    idx.truncate(c);
    idx.sort_unstable();
    idx
}

fn truncated_power(a: &DMatrix<f64>, start: DVector<f64>, c: usize, max_iter: usize) -> Vec<usize> {
    let mut support = top_indices(&start, c);
    let mut x = DVector::zeros(start.len());
    for &i in &support {
        x[i] = start[i];
    }
    let norm = x.norm();
    if norm == 0.0 {
        return support;
    }
    x /= norm;
    for _ in 0..max_iter {
        let y = a * &x;
        let next_support = top_indices(&y, c);
        let mut next = DVector::zeros(x.len());
        for &i in &next_support {
            next[i] = y[i];
        }
        let norm = next.norm();
        if norm == 0.0 {
            break;
        }
        next /= norm;
        let settled = next_support == support && (&next - &x).amax() <= 1e-13;
        x = next;
        support = next_support;
        if settled {
            break;
        }
    }
    support
}

fn swap_search(a: &DMatrix<f64>, mut value: f64, mut support: Vec<usize>, max_passes: usize) -> (f64, Vec<usize>) {
    let n = a.nrows();
    for _ in 0..max_passes {
        let mut improved = false;
        for slot in 0..support.len() {
            for j in 0..n {
                if support.contains(&j) {
                    continue;
                }
                let mut trial = support.clone();
                trial[slot] = j;
                trial.sort_unstable();
                let v = support_value(a, &trial).0;
                if v > value * (1.0 + 1e-14) + 1e-300 {
                    value = v;
                    support = trial;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            break;
        }
    }
    (value, support)
}
