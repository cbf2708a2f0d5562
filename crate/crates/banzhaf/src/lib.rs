//! Banzhaf values for variables of positive DNF Boolean functions, built for
//! fact attribution over database query lineage.
//!
//! The crate provides three computation modes plus the scaffolding around them:
//!
//! - [`exact`]: exact values via compilation into decomposition trees (d-trees);
//! - [`adaban`]: anytime deterministic approximation with certified relative
//!   error, refining lower/upper bounds until an ε stopping rule holds;
//! - [`ranking`]: top-k selection and full ranking driven by the same bounds,
//!   pruning variables whose intervals cannot affect the answer;
//! - [`bounds`]: independent-DNF lower/upper bound functions and bottom-up
//!   bound propagation over partial d-trees;
//! - [`baselines`]: brute-force oracles (Banzhaf, Shapley, critical-set
//!   vectors) and a seeded Monte Carlo estimator;
//! - [`queryengine`]: a small select-project-join-union evaluator over CSV
//!   databases that produces lineage for output tuples;
//! - [`lineage`]: the positive DNF representation and its text format.

pub mod adaban;
pub mod baselines;
pub mod bounds;
pub mod dtree;
pub mod exact;
pub mod lineage;
pub mod queryengine;
pub mod ranking;
