//! Label-flip attacks on label propagation for binary classification.
//!
//! A flip vector `z ∈ {−1,+1}^{n_l}` poisons the labels to `y_l ⊙ z`; the
//! attacker wants to maximize the error rate of `sign(K(y_l ⊙ z))` against a
//! target (true `y_u`, or the estimate `sign(K y_l)`) using at most `c_max`
//! flips.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gumbel};
use serde::{Deserialize, Serialize};

use crate::data::Task;
use crate::error::{Error, Result};
use crate::linalg::sign;
use crate::propagation::PropagationOperator;

/// Largest number of subsets [`attack_cls_exhaustive`] will enumerate.
pub const EXHAUSTIVE_LIMIT: u128 = 2_000_000;
/// Flip probabilities are kept inside `[ALPHA_EPS, 1 − ALPHA_EPS]`.
pub const ALPHA_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlipVector {
    /// `−1` marks a flipped label.
    pub z: Vec<i8>,
    pub flips: usize,
}

impl FlipVector {
    pub fn none(n_l: usize) -> Self {
        FlipVector {
            z: vec![1; n_l],
            flips: 0,
        }
    }

    pub fn from_indices(n_l: usize, indices: &[usize]) -> Self {
        let mut out = Self::none(n_l);
        for &i in indices {
            if out.z[i] == 1 {
                out.z[i] = -1;
                out.flips += 1;
            }
        }
        out
    }

    pub fn indices(&self) -> Vec<usize> {
        (0..self.z.len()).filter(|&i| self.z[i] == -1).collect()
    }

    pub fn as_vector(&self) -> DVector<f64> {
        DVector::from_iterator(self.z.len(), self.z.iter().map(|&v| v as f64))
    }

    /// `y_l ⊙ z`.
    pub fn apply(&self, y_l: &DVector<f64>) -> DVector<f64> {
        y_l.component_mul(&self.as_vector())
    }
}

fn check_inputs(op: &PropagationOperator, y_l: &DVector<f64>, target: &DVector<f64>, c_max: usize) -> Result<()> {
    if y_l.len() != op.n_labeled || target.len() != op.n_unlabeled() {
        return Err(Error::usage(format!(
            "expected {} labeled and {} target values, got {} and {}",
            op.n_labeled,
            op.n_unlabeled(),
            y_l.len(),
            target.len()
        )));
    }
    if y_l.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(Error::domain("labeled values must be -1 or +1"));
    }
    if c_max > op.n_labeled {
        return Err(Error::usage(format!(
            "c_max = {c_max} exceeds the number of labeled nodes {}",
            op.n_labeled
        )));
    }
    Ok(())
}

fn mismatches(u: &DVector<f64>, target: &DVector<f64>) -> usize {
    u.iter()
        .zip(target.iter())
        .filter(|(a, b)| sign(**a) != sign(**b))
        .count()
}

/// Error rate of `sign(K(y_l ⊙ z))` against `target`.
pub fn flip_error_rate(op: &PropagationOperator, y_l: &DVector<f64>, flips: &FlipVector, target: &DVector<f64>) -> f64 {
    mismatches(&op.apply(&flips.apply(y_l)), target) as f64 / target.len() as f64
}

/// The attacker's stand-in for the unknown labels: `sign(K y_l)` for
/// classification and `K y_l` for regression.
pub fn estimate_target(op: &PropagationOperator, y_l: &DVector<f64>, task: Task) -> DVector<f64> {
    let raw = op.apply(y_l);
    match task {
        Task::Classification => raw.map(sign),
        Task::Regression => raw,
    }
}

/// Greedy: `c_max` rounds, each flipping the unflipped index that maximizes the
/// resulting error (lowest index on ties). Flips are never undone.
pub fn attack_cls_greedy(
    op: &PropagationOperator,
    y_l: &DVector<f64>,
    target: &DVector<f64>,
    c_max: usize,
) -> Result<FlipVector> {
    check_inputs(op, y_l, target, c_max)?;
    let n_l = op.n_labeled;
    let mut out = FlipVector::none(n_l);
    let mut u = op.apply(y_l);
    for _ in 0..c_max {
        let mut best: Option<(usize, usize)> = None;
        for i in 0..n_l {
            if out.z[i] == -1 {
                continue;
            }
            let trial = &u - op.k.column(i) * (2.0 * y_l[i]);
            let m = mismatches(&trial, target);
            if best.is_none_or(|(_, b)| m > b) {
                best = Some((i, m));
            }
        }
        let Some((i, _)) = best else { break };
        u -= op.k.column(i) * (2.0 * y_l[i]);
        out.z[i] = -1;
        out.flips += 1;
    }
    Ok(out)
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Exact maximizer by enumeration of every flip set of size `0..=c_max`.
/// Sets are visited by size, then lexicographically; the first maximizer wins.
pub fn attack_cls_exhaustive(
    op: &PropagationOperator,
    y_l: &DVector<f64>,
    target: &DVector<f64>,
    c_max: usize,
) -> Result<FlipVector> {
    check_inputs(op, y_l, target, c_max)?;
    let n_l = op.n_labeled;
    let total: u128 = (0..=c_max).map(|k| binomial(n_l, k)).sum();
    if total > EXHAUSTIVE_LIMIT {
        return Err(Error::usage(format!(
            "exhaustive search over {total} flip sets exceeds the limit of {EXHAUSTIVE_LIMIT}"
        )));
    }
    let base = op.apply(y_l);
    // Column contributions of a flip at i.
    let shifts: Vec<DVector<f64>> = (0..n_l).map(|i| op.k.column(i) * (-2.0 * y_l[i])).collect();
    let mut best_set: Vec<usize> = Vec::new();
    let mut best = mismatches(&base, target);
    for k in 1..=c_max {
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            let mut u = base.clone();
            for &i in &idx {
                u += &shifts[i];
            }
            let m = mismatches(&u, target);
            if m > best {
                best = m;
                best_set = idx.clone();
            }
            // Next combination in lexicographic order.
            let mut pos = k;
            while pos > 0 && idx[pos - 1] == n_l - k + pos - 1 {
                pos -= 1;
            }
            if pos == 0 {
                break;
            }
            idx[pos - 1] += 1;
            for j in pos..k {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    Ok(FlipVector::from_indices(n_l, &best_set))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlipDistributionConfig {
    pub tau: f64,
    pub lambda_reg: f64,
    pub samples_per_step: usize,
    pub steps: usize,
    pub step_size: f64,
    pub seed: u64,
    /// Initial flip probability; `None` means `c_max / n_l`.
    pub alpha_init: Option<f64>,
    /// After every step, project `α` onto `Σα <= c_max` (a uniform shift, i.e.
    /// the penalty weight that meets the budget in expectation).
    pub budget_projection: bool,
}

impl Default for FlipDistributionConfig {
    fn default() -> Self {
        FlipDistributionConfig {
            tau: 0.5,
            lambda_reg: 0.01,
            samples_per_step: 8,
            steps: 500,
            step_size: 0.05,
            seed: 0,
            alpha_init: None,
            budget_projection: true,
        }
    }
}

/// Learned flip probabilities `α` and the settings that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct FlipDistribution {
    pub alpha: DVector<f64>,
    pub cfg: FlipDistributionConfig,
    /// `α` ended (numerically) uniform, so the top-`c_max` pick is arbitrary.
    pub degenerate: bool,
    /// Mean sampled loss per step.
    pub loss_trace: Vec<f64>,
}

/// Relaxed flip `z(α, Δ) = 2/(1 + exp((logit α + Δ)/τ)) − 1`, written as
/// `−tanh((logit α + Δ)/(2τ))`. `z → −1` means flip.
pub fn relaxed_flip(alpha: f64, delta: f64, tau: f64) -> f64 {
    let logit = (alpha / (1.0 - alpha)).ln();
    -((logit + delta) / (2.0 * tau)).tanh()
}

/// Loss `−½‖tanh(K(y_l ⊙ z(α, Δ))) − t‖² + (λ/2)‖α‖²` for one noise draw and
/// its gradient with respect to `α`.
pub fn relaxed_loss_and_grad(
    op: &PropagationOperator,
    y_l: &DVector<f64>,
    target: &DVector<f64>,
    alpha: &DVector<f64>,
    noise: &DVector<f64>,
    tau: f64,
    lambda_reg: f64,
) -> (f64, DVector<f64>) {
    let n_l = alpha.len();
    let z = DVector::from_fn(n_l, |i, _| relaxed_flip(alpha[i], noise[i], tau));
    let p = op.apply(&y_l.component_mul(&z)).map(f64::tanh);
    let r = &p - target;
    let loss = -0.5 * r.norm_squared() + 0.5 * lambda_reg * alpha.norm_squared();
    let d_u = -r.component_mul(&p.map(|v| 1.0 - v * v));
    let d_z = y_l.component_mul(&op.k.tr_mul(&d_u));
    let grad = DVector::from_fn(n_l, |i, _| {
        let a = alpha[i];
        let dz_da = -(1.0 - z[i] * z[i]) / (2.0 * tau * a * (1.0 - a));
        d_z[i] * dz_da + lambda_reg * a
    });
    (loss, grad)
}

/// `Δ = g₁ − g₂` for two independent standard Gumbel draws, per coordinate.
pub fn sample_gumbel_difference(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let gumbel = Gumbel::new(0.0, 1.0).expect("standard Gumbel");
    DVector::from_fn(n, |_, _| gumbel.sample(rng) - gumbel.sample(rng))
}

/// Probabilistic attack: learn Bernoulli flip probabilities `α` by Adam on the
/// Gumbel-reparameterized, tanh-relaxed loss, then flip the `c_max` labels
/// with the largest `α` (lowest index on ties).
pub fn attack_cls_prob(
    op: &PropagationOperator,
    y_l: &DVector<f64>,
    target: &DVector<f64>,
    c_max: usize,
    cfg: &FlipDistributionConfig,
) -> Result<(FlipVector, FlipDistribution)> {
    check_inputs(op, y_l, target, c_max)?;
    if !(cfg.tau > 0.0) || !(cfg.lambda_reg >= 0.0) || !(cfg.step_size > 0.0) {
        return Err(Error::domain("need tau > 0, lambda_reg >= 0 and step_size > 0"));
    }
    if cfg.samples_per_step == 0 {
        return Err(Error::domain("samples_per_step must be at least 1"));
    }
    let n_l = op.n_labeled;
    let init = cfg.alpha_init.unwrap_or(c_max as f64 / n_l as f64);
    let mut alpha = DVector::from_element(n_l, init.clamp(ALPHA_EPS, 1.0 - ALPHA_EPS));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (beta1, beta2, eps) = (0.9, 0.999, 1e-8);
    let mut m = DVector::zeros(n_l);
    let mut v = DVector::zeros(n_l);
    let mut loss_trace = Vec::with_capacity(cfg.steps);
    for step in 0..cfg.steps {
        let mut grad = DVector::zeros(n_l);
        let mut loss = 0.0;
        for _ in 0..cfg.samples_per_step {
            let noise = sample_gumbel_difference(n_l, &mut rng);
            let (l, g) = relaxed_loss_and_grad(op, y_l, target, &alpha, &noise, cfg.tau, cfg.lambda_reg);
            loss += l;
            grad += g;
        }
        let k = cfg.samples_per_step as f64;
        loss /= k;
        grad /= k;
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::numeric(format!("non-finite loss at step {step}")));
        }
        loss_trace.push(loss);
        let t = (step + 1) as i32;
        m = &m * beta1 + &grad * (1.0 - beta1);
        v = &v * beta2 + grad.map(|g| g * g) * (1.0 - beta2);
        let bc1 = 1.0 - beta1.powi(t);
        let bc2 = 1.0 - beta2.powi(t);
        for i in 0..n_l {
            let update = cfg.step_size * (m[i] / bc1) / ((v[i] / bc2).sqrt() + eps);
            alpha[i] = (alpha[i] - update).clamp(ALPHA_EPS, 1.0 - ALPHA_EPS);
        }
        if cfg.budget_projection {
            project_budget(&mut alpha, c_max as f64);
        }
    }

    let mut order: Vec<usize> = (0..n_l).collect();
    order.sort_by(|&i, &j| alpha[j].total_cmp(&alpha[i]).then(i.cmp(&j)));
    let flips = FlipVector::from_indices(n_l, &order[..c_max]);
    let degenerate = alpha.max() - alpha.min() < 1e-3;
    if degenerate {
        log::warn!("flip probabilities ended nearly uniform; the selected flips are arbitrary");
    }
    Ok((
        flips,
        FlipDistribution {
            alpha,
            cfg: cfg.clone(),
            degenerate,
            loss_trace,
        },
    ))
}

/// Shifts `α` down uniformly (then clamps) so that `Σα <= budget`.
fn project_budget(alpha: &mut DVector<f64>, budget: f64) {
    let clamped_sum = |theta: f64| -> f64 {
        alpha
            .iter()
            .map(|a| (a - theta).clamp(ALPHA_EPS, 1.0 - ALPHA_EPS))
            .sum()
    };
    if clamped_sum(0.0) <= budget {
        return;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if clamped_sum(mid) > budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    alpha.apply(|a| *a = (*a - hi).clamp(ALPHA_EPS, 1.0 - ALPHA_EPS));
}
