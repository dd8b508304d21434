//! Trust-region benchmark on `H = BBᵀ − λI` instances: per-iteration traces,
//! measured phase-I length against its bound, and a fit of
//! `T(λ) = log(1 + c₁λ)/log(1 + c₂λ)`.

use std::fs;
use std::path::Path;

use gssl_core::trust_region::{phase1_bound, solve_tr, Phase, TrustRegionConfig, TrustRegionProblem};
use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::config::ConfigError;
use crate::experiment::{HarnessError, Result};

pub const DEFAULT_LAMBDAS: [f64; 6] = [10.0, 30.0, 50.0, 70.0, 90.0, 110.0];

/// `H = BBᵀ − λI` with `B ∈ R^{n×(n−1)}` and `g` standard normal.
pub fn bench_instance(n: usize, lambda: f64, seed: u64) -> TrustRegionProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b: DMatrix<f64> = DMatrix::from_fn(n, n - 1, |_, _| StandardNormal.sample(&mut rng));
    let h = &b * b.transpose() - DMatrix::<f64>::identity(n, n) * lambda;
    let h = (&h + h.transpose()) * 0.5;
    let g: DVector<f64> = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
    TrustRegionProblem::new(h, g, 1.0).expect("benchmark instance is well formed")
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRun {
    pub lambda: f64,
    pub seed: u64,
    pub phase1_iters: usize,
    pub phase1_bound: f64,
    pub total_iters: usize,
    pub value: f64,
    pub certified_global: bool,
}

/// Least-squares fit of `T(λ) = log(1 + c₁λ)/log(1 + c₂λ)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CurveFit {
    pub c1: f64,
    pub c2: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub n: usize,
    pub lambdas: Vec<f64>,
    pub runs: Vec<BenchRun>,
    /// Mean measured phase-I length per λ.
    pub mean_phase1: Vec<f64>,
    /// Mean phase-I bound per λ.
    pub mean_bound: Vec<f64>,
    pub fit_measured: CurveFit,
    pub fit_bound: CurveFit,
    /// Every run satisfied `phase1_iters <= ceil(bound)`.
    pub bound_holds: bool,
    #[serde(skip)]
    pub trace_csv: String,
}

fn model(c1: f64, c2: f64, lambda: f64) -> f64 {
    (c1 * lambda).ln_1p() / (c2 * lambda).ln_1p()
}

fn sse(theta: Vector2<f64>, xs: &[f64], ys: &[f64]) -> f64 {
    let (c1, c2) = (theta[0].exp(), theta[1].exp());
    xs.iter().zip(ys).map(|(&x, &y)| (model(c1, c2, x) - y).powi(2)).sum()
}

/// Levenberg-Marquardt on `(log c₁, log c₂)` from the best point of a coarse
/// log grid. The Jacobian is analytic.
pub fn fit_log_ratio(xs: &[f64], ys: &[f64]) -> CurveFit {
    assert_eq!(xs.len(), ys.len());
    let grid: Vec<f64> = (-40..=40).map(|k| k as f64 * 0.25).collect();
    let mut theta = Vector2::new(0.0, 0.0);
    let mut best = f64::INFINITY;
    for &a in &grid {
        for &b in &grid {
            let v = sse(Vector2::new(a, b), xs, ys);
            if v < best {
                best = v;
                theta = Vector2::new(a, b);
            }
        }
    }
    let mut mu = 1e-3;
    for _ in 0..500 {
        let (c1, c2) = (theta[0].exp(), theta[1].exp());
        let mut jtj = Matrix2::zeros();
        let mut jtr = Vector2::zeros();
        for (&x, &y) in xs.iter().zip(ys) {
            let num = (c1 * x).ln_1p();
            let den = (c2 * x).ln_1p();
            let r = num / den - y;
            // d/dlog c = c d/dc.
            let j = Vector2::new(
                c1 * x / (1.0 + c1 * x) / den,
                -num * c2 * x / (1.0 + c2 * x) / (den * den),
            );
            jtj += j * j.transpose();
            jtr += j * r;
        }
        let mut improved = false;
        while mu < 1e12 {
            let a = jtj + Matrix2::from_diagonal(&jtj.diagonal()) * mu + Matrix2::identity() * 1e-15;
            let Some(step) = a.lu().solve(&(-jtr)) else { break };
            let cand = theta + step;
            let v = sse(cand, xs, ys);
            if v.is_finite() && v < best {
                improved = (best - v) > 1e-15 * best.max(1e-300);
                theta = cand;
                best = v;
                mu = (mu * 0.3).max(1e-12);
                break;
            }
            mu *= 10.0;
        }
        if !improved {
            break;
        }
    }
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let sst: f64 = ys.iter().map(|y| (y - mean).powi(2)).sum();
    let r_squared = if sst > 0.0 {
        1.0 - best / sst
    } else if best == 0.0 {
        1.0
    } else {
        0.0
    };
    CurveFit {
        c1: theta[0].exp(),
        c2: theta[1].exp(),
        r_squared,
    }
}

/// Runs `repeats` instances per λ (seeds `seed..seed + repeats`, shared
/// across λ so only the shift changes).
pub fn tr_bench(n: usize, lambdas: &[f64], seed: u64, repeats: usize, cfg: &TrustRegionConfig) -> Result<BenchReport> {
    if n < 2 {
        return Err(ConfigError::new("n", "need n >= 2").into());
    }
    if lambdas.is_empty() || repeats == 0 {
        return Err(ConfigError::new("lambdas", "need at least one λ and one repeat").into());
    }
    let cfg = TrustRegionConfig {
        record_trace: true,
        ..cfg.clone()
    };
    let mut runs = Vec::new();
    let mut trace = String::from("lambda,seed,iter,phase,f,norm\n");
    let (mut mean_phase1, mut mean_bound) = (Vec::new(), Vec::new());
    for &lambda in lambdas {
        let (mut t_sum, mut b_sum) = (0.0, 0.0);
        for s in seed..seed + repeats as u64 {
            let p = bench_instance(n, lambda, s);
            let ctx = format!("λ = {lambda}, seed {s}");
            let sol = solve_tr(&p, &cfg).map_err(|e| HarnessError::Core {
                context: ctx.clone(),
                source: e,
            })?;
            let bound = phase1_bound(&p, &cfg).map_err(|e| HarnessError::Core {
                context: ctx,
                source: e,
            })?;
            for t in &sol.trace {
                let phase = match t.phase {
                    Phase::Interior => 1,
                    Phase::Sphere => 2,
                };
                trace.push_str(&format!("{lambda},{s},{},{phase},{},{}\n", t.iter, t.value, t.norm));
            }
            t_sum += sol.phase1_iters as f64;
            b_sum += bound;
            runs.push(BenchRun {
                lambda,
                seed: s,
                phase1_iters: sol.phase1_iters,
                phase1_bound: bound,
                total_iters: sol.total_iters,
                value: sol.value,
                certified_global: sol.certified_global,
            });
        }
        mean_phase1.push(t_sum / repeats as f64);
        mean_bound.push(b_sum / repeats as f64);
    }
    let bound_holds = runs.iter().all(|r| r.phase1_iters as f64 <= r.phase1_bound.ceil());
    Ok(BenchReport {
        n,
        lambdas: lambdas.to_vec(),
        fit_measured: fit_log_ratio(lambdas, &mean_phase1),
        fit_bound: fit_log_ratio(lambdas, &mean_bound),
        runs,
        mean_phase1,
        mean_bound,
        bound_holds,
        trace_csv: trace,
    })
}

/// Writes `tr_bench_traces.csv` and `tr_bench.json` into `dir`.
pub fn write_bench(report: &BenchReport, dir: &Path) -> Result<()> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| HarnessError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let traces = dir.join("tr_bench_traces.csv");
    fs::write(&traces, &report.trace_csv).map_err(io(&traces))?;
    let summary = dir.join("tr_bench.json");
    let text = serde_json::to_string_pretty(report).expect("bench report serializes") + "\n";
    fs::write(&summary, text).map_err(io(&summary))?;
    Ok(())
}
