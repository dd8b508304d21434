//! Non-convex trust-region subproblem `min_{‖z‖ <= r} ½ zᵀHz + gᵀz`.
//!
//! [`solve_tr`] is a first-order method in two phases. Phase I runs plain
//! gradient descent from `z₀ = -α₀ g/‖g‖` until the iterate leaves the ball;
//! phase II runs Armijo-backtracked projected gradient descent on the sphere.
//! With `η < 1/‖H‖` and a small enough `α₀`, every iterate keeps
//! `z⁽ⁱ⁾ g⁽ⁱ⁾ <= 0` in the eigenbasis of `H`, which forces the limit to be
//! the global minimizer (easy case). Phase-II steps are capped at
//! `1/(|μ| + ‖H‖)` (μ the current multiplier estimate) so the same sign
//! property survives the line search.
//!
//! [`oracle_tr`] solves the same problem through a full eigendecomposition and
//! the secular equation `Σ (gᵢ/(λᵢ+λ))² = 1`; tests use it as ground truth.
//!
//! Both solvers work on the unit ball; a radius `r` is absorbed by
//! `H <- r²H`, `g <- r g` and the solution is scaled back.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{operator_norm_estimate, sym_eigen_sorted};

/// Relative size of `|gᵀv₁| / ‖g‖` under which an instance counts as hard.
pub const HARD_CASE_THRESHOLD: f64 = 1e-10;
/// Relative jitter added to `g` in the hard case.
pub const JITTER_SCALE: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct TrustRegionProblem {
    pub h: DMatrix<f64>,
    pub g: DVector<f64>,
    pub radius: f64,
}

impl TrustRegionProblem {
    pub fn new(h: DMatrix<f64>, g: DVector<f64>, radius: f64) -> Result<Self> {
        if !h.is_square() || h.nrows() != g.len() || g.is_empty() {
            return Err(Error::usage(format!(
                "H is {}x{} but g has length {}",
                h.nrows(),
                h.ncols(),
                g.len()
            )));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::domain(format!("radius must be positive, got {radius}")));
        }
        let asym = (&h - h.transpose()).amax();
        if asym > 1e-10 {
            return Err(Error::domain(format!("H is not symmetric (max asymmetry {asym:.3e})")));
        }
        if h.iter().chain(g.iter()).any(|v| !v.is_finite()) {
            return Err(Error::numeric("non-finite entries in H or g"));
        }
        Ok(TrustRegionProblem { h, g, radius })
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }

    pub fn value(&self, z: &DVector<f64>) -> f64 {
        0.5 * z.dot(&(&self.h * z)) + self.g.dot(z)
    }

    /// The equivalent unit-ball instance.
    fn unit_scaled(&self) -> (DMatrix<f64>, DVector<f64>) {
        let r = self.radius;
        (&self.h * (r * r), &self.g * r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrustRegionConfig {
    /// Phase-I step size on the unit-ball instance; `None` means `0.9/‖H‖`.
    pub eta: Option<f64>,
    /// Initialization scale; `None` means `min(0.5, 0.5·min(1, ‖g‖³/|gᵀHg|))`.
    /// An explicit value is clamped below that cap.
    pub alpha0: Option<f64>,
    pub max_iter: usize,
    /// Stationarity tolerance on the (Riemannian) gradient norm.
    pub tol: f64,
    pub ls_alpha_bar: f64,
    pub ls_sigma: f64,
    pub ls_beta: f64,
    /// Power iterations used to estimate `‖H‖`.
    pub power_iters: usize,
    /// Seed for the hard-case jitter.
    pub jitter_seed: u64,
    pub record_trace: bool,
}

impl Default for TrustRegionConfig {
    fn default() -> Self {
        TrustRegionConfig {
            eta: None,
            alpha0: None,
            max_iter: 50_000,
            tol: 1e-10,
            ls_alpha_bar: 1.0,
            ls_sigma: 1e-4,
            ls_beta: 0.5,
            power_iters: 100,
            jitter_seed: 0,
            record_trace: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Interior,
    Sphere,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iter: usize,
    pub phase: Phase,
    /// Objective of the unit-ball instance (equal to the original objective).
    pub value: f64,
    /// Norm of the unit-ball iterate.
    pub norm: f64,
    /// `max_i z⁽ⁱ⁾g⁽ⁱ⁾` in the eigenbasis of `H`; stays <= 0 along the run.
    pub sign_product: f64,
}

#[derive(Debug, Clone)]
pub struct TrustRegionSolution {
    pub z_star: DVector<f64>,
    pub value: f64,
    /// Gradient steps taken inside the ball (index of the first iterate with norm >= 1).
    pub phase1_iters: usize,
    pub total_iters: usize,
    /// KKT multiplier of the original (unscaled) problem.
    pub multiplier: f64,
    /// `‖(H + λI)z* + g‖` for the original problem.
    pub kkt_residual: f64,
    pub certified_global: bool,
    /// `g` was perturbed because the instance was (numerically) in the hard case.
    pub jittered: bool,
    pub trace: Vec<TracePoint>,
}

/// Step size and initialization scale resolved for a unit-ball instance.
#[derive(Debug, Clone, Copy)]
struct Params {
    eta: f64,
    alpha0: f64,
    op_norm: f64,
}

fn resolve_params(h: &DMatrix<f64>, g: &DVector<f64>, cfg: &TrustRegionConfig) -> Result<Params> {
    let op_norm = operator_norm_estimate(h, cfg.power_iters);
    let eta = match cfg.eta {
        None if op_norm > 0.0 => 0.9 / op_norm,
        None => 1.0,
        Some(eta) => {
            if !(eta > 0.0) || (op_norm > 0.0 && eta >= 1.0 / op_norm) {
                return Err(Error::domain(format!(
                    "step size {eta} violates 0 < eta < 1/‖H‖ = {:.6e}",
                    1.0 / op_norm
                )));
            }
            eta
        }
    };
    let gnorm = g.norm();
    let ghg = g.dot(&(h * g)).abs();
    let cap = if ghg > 0.0 { (gnorm.powi(3) / ghg).min(1.0) } else { 1.0 };
    let default_alpha = (0.5 * cap).min(0.5);
    let alpha0 = match cfg.alpha0 {
        None => default_alpha,
        Some(a) if a > 0.0 => a.min(default_alpha),
        Some(a) => return Err(Error::domain(format!("alpha0 must be positive, got {a}"))),
    };
    Ok(Params { eta, alpha0, op_norm })
}

fn check_config(cfg: &TrustRegionConfig) -> Result<()> {
    if !(cfg.ls_sigma > 0.0 && cfg.ls_sigma < 1.0) {
        return Err(Error::domain("line-search sigma must lie in (0,1)"));
    }
    if !(cfg.ls_beta > 0.0 && cfg.ls_beta < 1.0) {
        return Err(Error::domain("line-search beta must lie in (0,1)"));
    }
    if !(cfg.ls_alpha_bar > 0.0) || !(cfg.tol > 0.0) {
        return Err(Error::domain("line-search alpha_bar and tol must be positive"));
    }
    Ok(())
}

/// `|gᵀv|` where `v` ranges over the eigenspace of the smallest eigenvalue.
fn bottom_projection(values: &DVector<f64>, vectors: &DMatrix<f64>, g: &DVector<f64>) -> f64 {
    let lam1 = values[0];
    let scale = values.amax().max(1.0);
    let mut acc = 0.0;
    for (i, &v) in values.iter().enumerate() {
        if v - lam1 > 1e-12 * scale {
            break;
        }
        acc += vectors.column(i).dot(g).powi(2);
    }
    acc.sqrt()
}

fn f_unit(h: &DMatrix<f64>, g: &DVector<f64>, z: &DVector<f64>) -> f64 {
    0.5 * z.dot(&(h * z)) + g.dot(z)
}

fn trace_point(
    iter: usize,
    phase: Phase,
    h: &DMatrix<f64>,
    g: &DVector<f64>,
    z: &DVector<f64>,
    eigvecs: &DMatrix<f64>,
) -> TracePoint {
    let zc = eigvecs.tr_mul(z);
    let gc = eigvecs.tr_mul(g);
    let sign_product = zc
        .iter()
        .zip(gc.iter())
        .map(|(a, b)| a * b)
        .fold(f64::NEG_INFINITY, f64::max);
    TracePoint {
        iter,
        phase,
        value: f_unit(h, g, z),
        norm: z.norm(),
        sign_product,
    }
}

/// Two-phase first-order solver; see the module docs.
pub fn solve_tr(p: &TrustRegionProblem, cfg: &TrustRegionConfig) -> Result<TrustRegionSolution> {
    check_config(cfg)?;
    let n = p.dim();
    let (h, mut g) = p.unit_scaled();
    let (eigvals, eigvecs) = sym_eigen_sorted(&h);
    let lam_min = eigvals[0];

    let gnorm0 = g.norm();
    if gnorm0 == 0.0 && lam_min >= 0.0 {
        // Convex with zero linear term: the origin is optimal.
        return Ok(finish(
            p,
            &h,
            &g,
            DVector::zeros(n),
            0.0,
            0,
            0,
            cfg,
            false,
            Vec::new(),
            &eigvals,
        ));
    }

    let mut jittered = false;
    let projection = bottom_projection(&eigvals, &eigvecs, &g);
    if lam_min < 0.0 && (gnorm0 == 0.0 || projection / gnorm0 < HARD_CASE_THRESHOLD) {
        let op_norm = eigvals.amax();
        let scale = JITTER_SCALE
            * if gnorm0 > 0.0 {
                gnorm0
            } else {
                op_norm.max(f64::MIN_POSITIVE)
            };
        let normal = Normal::new(0.0, scale).map_err(|e| Error::numeric(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.jitter_seed);
        for gi in g.iter_mut() {
            *gi += normal.sample(&mut rng);
        }
        jittered = true;
        log::warn!(
            "trust-region instance is in the hard case (|gᵀv₁|/‖g‖ = {:.3e}); jittered g with scale {scale:.3e}",
            if gnorm0 > 0.0 { projection / gnorm0 } else { 0.0 }
        );
    }

    let params = resolve_params(&h, &g, cfg)?;
    let gnorm = g.norm();
    let mut trace = Vec::new();
    let mut z = &g * (-params.alpha0 / gnorm);
    let mut iter = 0usize;
    if cfg.record_trace {
        trace.push(trace_point(iter, Phase::Interior, &h, &g, &z, &eigvecs));
    }

    // Phase I: plain gradient steps while strictly inside the ball.
    while z.norm() < 1.0 {
        let grad = &h * &z + &g;
        if grad.norm() <= cfg.tol {
            // Interior stationary point; only reachable when H is PSD.
            return Ok(finish(p, &h, &g, z, 0.0, iter, iter, cfg, jittered, trace, &eigvals));
        }
        if iter >= cfg.max_iter {
            return Ok(finish(p, &h, &g, z, 0.0, iter, iter, cfg, jittered, trace, &eigvals));
        }
        z -= grad * params.eta;
        iter += 1;
        if cfg.record_trace {
            trace.push(trace_point(iter, Phase::Interior, &h, &g, &z, &eigvecs));
        }
    }
    let phase1_iters = iter;

    // Phase II: projected gradient descent on the sphere.
    z /= z.norm();
    let mut hz = &h * &z;
    while iter < cfg.max_iter {
        let grad = &hz + &g;
        let multiplier = -z.dot(&grad);
        let mut rgrad = &grad + &z * multiplier;
        // Re-orthogonalize so the closed-form decrease below is exact.
        let drift = z.dot(&rgrad);
        rgrad.axpy(-drift, &z, 1.0);
        let rnorm2 = rgrad.norm_squared();
        if rnorm2.sqrt() <= cfg.tol {
            break;
        }
        let hr = &h * &rgrad;
        let a = z.dot(&hz);
        let b = hz.dot(&rgrad);
        let c = rgrad.dot(&hr);
        let gz = g.dot(&z);
        // cand(t) = s (z - t rgrad), s = (1 + t²‖rgrad‖²)^(-1/2). The change in f
        // is expanded in scalars so it stays accurate when far below |f|.
        let decrease_at = |t: f64| -> f64 {
            let q = t * t * rnorm2;
            let s = 1.0 / (1.0 + q).sqrt();
            let s2m1 = -q / (1.0 + q);
            let sm1 = s2m1 / (1.0 + s);
            0.5 * s2m1 * a + sm1 * gz - t * s * rnorm2 + t * s * (1.0 - s) * b + 0.5 * s * s * t * t * c
        };
        let sign_safe = 1.0 / (multiplier.abs() + params.op_norm);
        let mut step = cfg.ls_alpha_bar.min(0.99 * sign_safe);
        let mut accepted = None;
        for _ in 0..64 {
            if decrease_at(step) <= -cfg.ls_sigma * step * rnorm2 {
                accepted = Some(step);
                break;
            }
            step *= cfg.ls_beta;
        }
        let Some(step) = accepted else {
            log::debug!("phase II line search stalled at iteration {iter}");
            break;
        };
        z.axpy(-step, &rgrad, 1.0);
        z /= z.norm();
        hz = &h * &z;
        iter += 1;
        if cfg.record_trace {
            trace.push(trace_point(iter, Phase::Sphere, &h, &g, &z, &eigvecs));
        }
    }
    let multiplier = -z.dot(&(&hz + &g));
    Ok(finish(
        p,
        &h,
        &g,
        z,
        multiplier,
        phase1_iters,
        iter,
        cfg,
        jittered,
        trace,
        &eigvals,
    ))
}

/// Assembles the solution of the original problem from a unit-ball iterate.
#[allow(clippy::too_many_arguments)]
fn finish(
    p: &TrustRegionProblem,
    h: &DMatrix<f64>,
    g: &DVector<f64>,
    z_unit: DVector<f64>,
    multiplier_unit: f64,
    phase1_iters: usize,
    total_iters: usize,
    cfg: &TrustRegionConfig,
    jittered: bool,
    trace: Vec<TracePoint>,
    eigvals: &DVector<f64>,
) -> TrustRegionSolution {
    let r = p.radius;
    let residual_unit = (h * &z_unit + &z_unit * multiplier_unit + g).norm();
    let certified_global = residual_unit <= cfg.tol * (1.0 + g.norm())
        && multiplier_unit + eigvals[0] >= -cfg.tol
        && multiplier_unit >= -cfg.tol;
    let z_star = z_unit * r;
    let value = p.value(&z_star);
    TrustRegionSolution {
        value,
        z_star,
        phase1_iters,
        total_iters,
        multiplier: multiplier_unit / (r * r),
        kkt_residual: residual_unit / r,
        certified_global,
        jittered,
        trace,
    }
}

/// Exact solver through the eigendecomposition of `H` and the secular equation.
pub fn oracle_tr(p: &TrustRegionProblem) -> Result<TrustRegionSolution> {
    let n = p.dim();
    let (h, g) = p.unit_scaled();
    let (vals, vecs) = sym_eigen_sorted(&h);
    let coeffs = vecs.transpose() * &g;
    let lam1 = vals[0];
    let gnorm = g.norm();
    let scale = vals.amax().max(1.0);

    let assemble = |lambda: f64| -> DVector<f64> {
        let mut w = DVector::zeros(n);
        for i in 0..n {
            w[i] = -coeffs[i] / (vals[i] + lambda);
        }
        &vecs * w
    };

    // Interior solution of a positive-definite instance.
    if lam1 > 1e-14 * scale {
        let z = assemble(0.0);
        if z.norm() <= 1.0 {
            return Ok(oracle_solution(p, &h, &g, z, 0.0));
        }
    } else if gnorm == 0.0 && lam1 >= 0.0 {
        return Ok(oracle_solution(p, &h, &g, DVector::zeros(n), 0.0));
    }

    let projection = bottom_projection(&vals, &vecs, &g);
    if projection <= 1e-12 {
        return Err(Error::HardCase(format!("|gᵀv₁| = {projection:.3e}")));
    }

    // ‖z(λ)‖ decreases from +inf to 0 on (-λ₁, inf); find ‖z(λ)‖ = 1.
    let norm_at = |lambda: f64| -> (f64, f64) {
        // Returns (‖z‖², d‖z‖²/dλ).
        let mut s = 0.0;
        let mut ds = 0.0;
        for i in 0..n {
            let denom = vals[i] + lambda;
            let t = coeffs[i] * coeffs[i] / (denom * denom);
            s += t;
            ds += -2.0 * t / denom;
        }
        (s, ds)
    };
    let mut lo = (-lam1).max(0.0);
    let mut hi = lo + gnorm + 1.0;
    while norm_at(hi).0 > 1.0 {
        hi = lo + 2.0 * (hi - lo);
    }
    // Newton on ψ(λ) = 1/‖z(λ)‖ - 1 (nearly linear), safeguarded by bisection.
    let mut lambda = hi;
    for _ in 0..500 {
        let (s, ds) = norm_at(lambda);
        let norm = s.sqrt();
        if norm > 1.0 {
            lo = lambda;
        } else {
            hi = lambda;
        }
        let psi = 1.0 / norm - 1.0;
        let dpsi = -0.5 * ds / (s * norm);
        let mut next = lambda - psi / dpsi;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        let done = (next - lambda).abs() <= 1e-15 * lambda.abs().max(1.0) || hi - lo <= 1e-14 * hi.abs().max(1.0);
        lambda = next;
        if done {
            break;
        }
    }
    let z = assemble(lambda);
    Ok(oracle_solution(p, &h, &g, z, lambda))
}

fn oracle_solution(
    p: &TrustRegionProblem,
    h: &DMatrix<f64>,
    g: &DVector<f64>,
    z_unit: DVector<f64>,
    lambda_unit: f64,
) -> TrustRegionSolution {
    let r = p.radius;
    let residual = (h * &z_unit + &z_unit * lambda_unit + g).norm();
    let z_star = z_unit * r;
    TrustRegionSolution {
        value: p.value(&z_star),
        z_star,
        phase1_iters: 0,
        total_iters: 0,
        multiplier: lambda_unit / (r * r),
        kkt_residual: residual / r,
        certified_global: true,
        jittered: false,
        trace: Vec::new(),
    }
}

/// Upper bound on the number of phase-I steps for the step size and
/// initialization [`solve_tr`] would use:
///
/// `log(1-ηλ₁)⁻¹ · [log(1/(η|g₁|) - 1/(ηλ₁)) - log(-z₀₁/(η g₁) - 1/(ηλ₁))]`
///
/// with `λ₁ = λ_min(H) < 0`, `g₁ = gᵀv₁`, `z₀₁ = z₀ᵀv₁`.
pub fn phase1_bound(p: &TrustRegionProblem, cfg: &TrustRegionConfig) -> Result<f64> {
    let (h, g) = p.unit_scaled();
    let (vals, vecs) = sym_eigen_sorted(&h);
    let lam1 = vals[0];
    if lam1 >= 0.0 {
        return Err(Error::domain("phase-I bound needs an indefinite H (λ_min < 0)"));
    }
    let g1 = vecs.column(0).dot(&g);
    let gnorm = g.norm();
    if gnorm == 0.0 || bottom_projection(&vals, &vecs, &g) / gnorm < HARD_CASE_THRESHOLD {
        return Err(Error::HardCase(format!("|gᵀv₁| = {:.3e}", g1.abs())));
    }
    let params = resolve_params(&h, &g, cfg)?;
    let eta = params.eta;
    let z01 = -params.alpha0 * g1 / gnorm;
    let inv = 1.0 / (eta * lam1);
    let outer = 1.0 / (eta * g1.abs()) - inv;
    let start = -z01 / (eta * g1) - inv;
    Ok((outer.ln() - start.ln()) / (1.0 - eta * lam1).ln())
}
