//! Data poisoning attacks against graph-based semi-supervised learning.
//!
//! The victim is label propagation over a Gaussian-kernel graph (and, in
//! [`manifold`], a linear manifold-regularized regressor). The attacker
//! perturbs the labeled part of the training data:
//!
//! * continuous label perturbations for regression, solved by SVD
//!   ([`attack::regression::attack_reg_estimated`]) or by the two-phase
//!   trust-region solver in [`trust_region`] when ground truth is known;
//! * sparse label perturbations via truncated power iteration;
//! * discrete label flips for binary classification (greedy, Gumbel
//!   reparameterized probabilistic solver, exhaustive oracle);
//! * group-sparse feature perturbations via proximal gradient descent;
//! * centrality baselines (random, degree, PageRank).

pub mod attack;
pub mod baselines;
pub mod data;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod manifold;
pub mod propagation;
pub mod trust_region;

pub use error::{Error, Result};
