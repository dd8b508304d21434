//! Trajectory properties of the two-phase solver on `H = BBᵀ − λI` instances.

use gssl_core::trust_region::{oracle_tr, phase1_bound, solve_tr, Phase, TrustRegionConfig, TrustRegionProblem};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const LAMBDAS: [f64; 6] = [10.0, 30.0, 50.0, 70.0, 90.0, 110.0];

fn instance(n: usize, lambda: f64, seed: u64) -> TrustRegionProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b: DMatrix<f64> = DMatrix::from_fn(n, n - 1, |_, _| StandardNormal.sample(&mut rng));
    let h = &b * b.transpose() - DMatrix::<f64>::identity(n, n) * lambda;
    let h = (&h + h.transpose()) * 0.5;
    let g: DVector<f64> = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
    TrustRegionProblem::new(h, g, 1.0).unwrap()
}

fn traced() -> TrustRegionConfig {
    TrustRegionConfig {
        record_trace: true,
        ..TrustRegionConfig::default()
    }
}

#[test]
fn trajectory_invariants() {
    let cfg = traced();
    for (k, &lambda) in LAMBDAS.iter().enumerate() {
        for seed in 0..5u64 {
            let p = instance(50, lambda, 100 * k as u64 + seed);
            let sol = solve_tr(&p, &cfg).unwrap();
            assert!(sol.certified_global, "λ={lambda} seed={seed}");
            let tr = &sol.trace;
            assert_eq!(tr.len(), sol.total_iters + 1);
            for w in tr.windows(2) {
                if w[1].phase == Phase::Interior {
                    assert!(w[1].norm >= w[0].norm, "phase-I norm shrank at {}", w[1].iter);
                }
                if w[0].phase == Phase::Sphere {
                    assert!(w[1].value <= w[0].value + 1e-12, "phase-II ascent at {}", w[1].iter);
                }
            }
            for t in tr {
                assert!(
                    t.sign_product <= 1e-12,
                    "sign flip at iter {}: {:e}",
                    t.iter,
                    t.sign_product
                );
            }
        }
    }
}

#[test]
fn phase_one_respects_bound_and_bound_shrinks_with_curvature() {
    let cfg = TrustRegionConfig::default();
    for (k, &lambda) in LAMBDAS.iter().enumerate() {
        for seed in 0..5u64 {
            let p = instance(50, lambda, 100 * k as u64 + seed);
            let sol = solve_tr(&p, &cfg).unwrap();
            let bound = phase1_bound(&p, &cfg).unwrap();
            assert!(
                sol.phase1_iters as f64 <= bound.ceil(),
                "λ={lambda}: {} > {bound}",
                sol.phase1_iters
            );
        }
    }
    // Scaling the negative shift by 10 with B and g fixed.
    for seed in 0..10u64 {
        let a = instance(30, 5.0, seed);
        let b = instance(30, 50.0, seed);
        assert_eq!(a.g, b.g);
        let ba = phase1_bound(&a, &cfg).unwrap();
        let bb = phase1_bound(&b, &cfg).unwrap();
        assert!(bb < ba, "seed {seed}: {bb} !< {ba}");
    }
}

#[test]
fn tail_converges_linearly() {
    let cfg = traced();
    for seed in 0..10u64 {
        let p = instance(50, 30.0, 7000 + seed);
        let sol = solve_tr(&p, &cfg).unwrap();
        let fstar = oracle_tr(&p).unwrap().value;
        // Gaps at the rounding floor carry no rate information.
        let gaps: Vec<f64> = sol
            .trace
            .iter()
            .filter(|t| t.phase == Phase::Sphere)
            .map(|t| t.value - fstar)
            .filter(|&gap| gap > 1e-12 * (1.0 + fstar.abs()))
            .collect();
        assert!(
            gaps.len() > 21,
            "seed {seed}: only {} resolvable sphere iterates",
            gaps.len()
        );
        let tail = &gaps[gaps.len() - 21..];
        for w in tail.windows(2) {
            assert!(w[1] / w[0] < 1.0, "seed {seed}: ratio {}", w[1] / w[0]);
        }
    }
}
