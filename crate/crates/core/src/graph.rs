//! Gaussian-kernel similarity graphs and node centralities.
//!
//! The kernel keeps its self-loops (`S_ii = 1`). They cancel in the Laplacian
//! `L = diag(D) - S` and therefore in the propagation operator, which the
//! tests check explicitly.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct KernelGraph {
    pub similarity: DMatrix<f64>,
    pub degree: DVector<f64>,
    pub gamma: f64,
}

impl KernelGraph {
    pub fn n(&self) -> usize {
        self.similarity.nrows()
    }

    pub fn laplacian(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.degree) - &self.similarity
    }

    /// Builds a graph from an explicit similarity matrix (degrees recomputed).
    pub fn from_similarity(similarity: DMatrix<f64>, gamma: f64) -> Self {
        let degree = row_sums(&similarity);
        KernelGraph {
            similarity,
            degree,
            gamma,
        }
    }

    /// Dumps `i,j,S_ij` rows (upper triangle including the diagonal).
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "i,j,s")?;
        for i in 0..self.n() {
            for j in i..self.n() {
                writeln!(out, "{i},{j},{:?}", self.similarity[(i, j)])?;
            }
        }
        Ok(())
    }
}

fn row_sums(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(m.nrows(), m.row_iter().map(|r| r.sum()))
}

/// `S_ij = exp(-gamma * ||x_i - x_j||^2)` over the rows of `x`.
pub fn build_kernel_graph(x: &DMatrix<f64>, gamma: f64) -> Result<KernelGraph> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::domain(format!("kernel width must be positive, got {gamma}")));
    }
    let n = x.nrows();
    if n < 2 {
        return Err(Error::domain("a kernel graph needs at least two points"));
    }
    // Row-major copy: the pair loop then reads contiguous memory.
    let d = x.ncols();
    let rows: Vec<f64> = x.transpose().as_slice().to_vec();
    let mut s = DMatrix::from_element(n, n, 1.0);
    for i in 0..n {
        let xi = &rows[i * d..(i + 1) * d];
        for j in (i + 1)..n {
            let xj = &rows[j * d..(j + 1) * d];
            let dist2: f64 = xi.iter().zip(xj).map(|(a, b)| (a - b) * (a - b)).sum();
            let v = (-gamma * dist2).exp();
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    Ok(KernelGraph::from_similarity(s, gamma))
}

pub fn degree_scores(g: &KernelGraph) -> DVector<f64> {
    g.degree.clone()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PageRankConfig {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PageRankConfig {
    fn default() -> Self {
        PageRankConfig {
            damping: 0.85,
            tol: 1e-10,
            max_iter: 10_000,
        }
    }
}

/// Weighted PageRank on the row-normalized similarity matrix:
/// `p <- (1 - damping)/n + damping * P^T p`.
pub fn pagerank_scores(g: &KernelGraph, cfg: &PageRankConfig) -> Result<DVector<f64>> {
    if !(cfg.damping > 0.0 && cfg.damping < 1.0) {
        return Err(Error::domain(format!("damping must lie in (0,1), got {}", cfg.damping)));
    }
    let n = g.n();
    let teleport = (1.0 - cfg.damping) / n as f64;
    // Row-normalize; every row has the self-loop so the degree is >= 1.
    let mut transition = g.similarity.clone();
    for (i, mut row) in transition.row_iter_mut().enumerate() {
        row /= g.degree[i];
    }
    let transition_t = transition.transpose();

    let mut p = DVector::from_element(n, 1.0 / n as f64);
    let mut residual = f64::INFINITY;
    for _ in 0..cfg.max_iter {
        let mut next = &transition_t * &p * cfg.damping;
        next.add_scalar_mut(teleport);
        // Guard against drift in the total mass.
        next /= next.sum();
        residual = (&next - &p).lp_norm(1);
        p = next;
        if residual <= cfg.tol {
            return Ok(p);
        }
    }
    Err(Error::numeric(format!(
        "pagerank did not converge in {} iterations (residual {residual:.3e})",
        cfg.max_iter
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_points(n: usize, d: usize, seed: u64) -> DMatrix<f64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, d, |_, _| rng.random_range(-1.5..1.5))
    }

    #[test]
    fn identical_rows_give_all_ones() {
        let x = DMatrix::from_row_slice(2, 2, &[0.3, -1.0, 0.3, -1.0]);
        let g = build_kernel_graph(&x, 7.0).unwrap();
        assert_eq!(g.similarity, DMatrix::from_element(2, 2, 1.0));
        assert_eq!(degree_scores(&g).as_slice(), &[2.0, 2.0]);
    }

    #[test]
    fn unit_distance_gives_inverse_e() {
        let x = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let g = build_kernel_graph(&x, 1.0).unwrap();
        assert!((g.similarity[(0, 1)] - 0.367_879_4).abs() < 1e-7);
    }

    #[test]
    fn doubling_gamma_squares_entries() {
        let x = random_points(6, 3, 11);
        let g1 = build_kernel_graph(&x, 0.7).unwrap();
        let g2 = build_kernel_graph(&x, 1.4).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                if i != j {
                    let a = g1.similarity[(i, j)];
                    assert!((g2.similarity[(i, j)] - a * a).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn rejects_nonpositive_gamma() {
        let x = random_points(3, 2, 1);
        assert!(matches!(build_kernel_graph(&x, 0.0), Err(Error::Domain(_))));
        assert!(matches!(build_kernel_graph(&x, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn complete_uniform_degree() {
        let n = 5;
        let s = 0.25;
        let mut m = DMatrix::from_element(n, n, s);
        m.fill_diagonal(1.0);
        let g = KernelGraph::from_similarity(m, 1.0);
        for v in degree_scores(&g).iter() {
            assert!((v - (1.0 + (n as f64 - 1.0) * s)).abs() < 1e-15);
        }
    }

    #[test]
    fn degree_matches_independent_row_sums() {
        let g = build_kernel_graph(&random_points(6, 2, 3), 1.0).unwrap();
        for i in 0..6 {
            let mut sum = 0.0;
            for j in 0..6 {
                sum += g.similarity[(i, j)];
            }
            assert!((g.degree[i] - sum).abs() < 1e-14);
        }
    }

    #[test]
    fn pagerank_uniform_on_symmetric_uniform_graph() {
        let mut m = DMatrix::from_element(4, 4, 0.5);
        m.fill_diagonal(1.0);
        let g = KernelGraph::from_similarity(m, 1.0);
        let p = pagerank_scores(&g, &PageRankConfig::default()).unwrap();
        for v in p.iter() {
            assert!((v - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn pagerank_star_center_dominates() {
        let n = 6;
        let mut m = DMatrix::from_element(n, n, 0.01);
        m.fill_diagonal(1.0);
        for k in 1..n {
            m[(0, k)] = 0.9;
            m[(k, 0)] = 0.9;
        }
        let g = KernelGraph::from_similarity(m, 1.0);
        let p = pagerank_scores(&g, &PageRankConfig::default()).unwrap();
        for k in 1..n {
            assert!(p[0] > p[k]);
        }
    }

    #[test]
    fn pagerank_matches_dense_eigenvector() {
        // Oracle: the null vector of (G - I) for the Google matrix
        // G = (1-d)/n 11^T + d P^T, read off the SVD.
        let g = build_kernel_graph(&random_points(8, 2, 5), 0.8).unwrap();
        let cfg = PageRankConfig::default();
        let p = pagerank_scores(&g, &cfg).unwrap();

        let n = 8;
        let mut pt = g.similarity.clone();
        for i in 0..n {
            let deg: f64 = (0..n).map(|j| g.similarity[(i, j)]).sum();
            for j in 0..n {
                pt[(i, j)] = g.similarity[(i, j)] / deg;
            }
        }
        let pt = pt.transpose();
        let google = DMatrix::from_element(n, n, (1.0 - cfg.damping) / n as f64) + pt * cfg.damping;
        let shifted = google - DMatrix::identity(n, n);
        let svd = shifted.svd(false, true);
        let v_t = svd.v_t.unwrap();
        let (imin, _) = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        let mut oracle: DVector<f64> = v_t.row(imin).transpose();
        oracle /= oracle.sum();
        assert!((&p - &oracle).amax() < 1e-8, "{p} vs {oracle}");
    }

    #[test]
    fn pagerank_rejects_bad_damping() {
        let g = build_kernel_graph(&random_points(3, 2, 1), 1.0).unwrap();
        let cfg = PageRankConfig {
            damping: 1.0,
            ..Default::default()
        };
        assert!(pagerank_scores(&g, &cfg).is_err());
    }

    #[test]
    fn pagerank_reports_non_convergence() {
        let g = build_kernel_graph(&random_points(5, 2, 2), 1.0).unwrap();
        let cfg = PageRankConfig {
            max_iter: 1,
            tol: 0.0,
            ..Default::default()
        };
        assert!(matches!(pagerank_scores(&g, &cfg), Err(Error::Numeric(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn kernel_graph_invariants(seed in 0u64..10_000, n in 2usize..25, gamma in 0.05f64..4.0) {
            use rand::{Rng, SeedableRng};
            let g = build_kernel_graph(&random_points(n, 3, seed), gamma).unwrap();
            let s = &g.similarity;
            for i in 0..n {
                prop_assert_eq!(s[(i, i)], 1.0);
                for j in 0..n {
                    prop_assert_eq!(s[(i, j)], s[(j, i)]);
                    prop_assert!(s[(i, j)] > 0.0 && s[(i, j)] <= 1.0);
                }
            }
            let l = g.laplacian();
            let ones = DVector::from_element(n, 1.0);
            prop_assert!((&l * ones).amax() <= 1e-10);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed + 1);
            for _ in 0..100 {
                let x = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
                prop_assert!(x.dot(&(&l * &x)) >= -1e-10);
            }
            let p = pagerank_scores(&g, &PageRankConfig::default()).unwrap();
            prop_assert!(p.iter().all(|&v| v >= 0.0));
            prop_assert!((p.sum() - 1.0).abs() <= 1e-10);
        }
    }
}
