//! Exact Banzhaf values and model counts over complete d-trees.
//!
//! A single bottom-up pass computes, per node, the pair (Banzhaf(ξ, x), #ξ)
//! for the node's function ξ. Leaf cases: x → (1,1); ¬x → (−1,1); any other
//! literal or constant 1 → (0, count); constant 0 → (0,0). Inner nodes combine
//! children pairwise; the k-ary forms fold the binary rules left to right,
//! which is sound because the rules are associative and each variable occurs
//! in at most one ⊙/⊗ child.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::dtree::{DTree, DecompOp, NodeId, NodeKind};
use crate::lineage::VarId;

/// Exact Banzhaf value of one variable together with the function's model count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BanzhafResult {
    pub banzhaf: BigInt,
    pub model_count: BigUint,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExactError {
    #[error("d-tree is not complete: node {0:?} is an unexpanded function leaf")]
    IncompleteTree(NodeId),
    #[error("variable {0} is not in the tree's universe")]
    NotInUniverse(VarId),
}

fn pow2(n: usize) -> BigUint {
    BigUint::one() << n
}

/// Per-node state of the bottom-up pass: model count plus one Banzhaf
/// accumulator per requested variable.
struct NodeValue {
    count: BigUint,
    banzhaf: Vec<BigInt>,
}

/// Exact Banzhaf values for each requested variable over a complete d-tree.
/// Model counts are computed once and shared across variables.
pub fn exaban_all(
    t: &DTree,
    xs: &[VarId],
) -> Result<BTreeMap<VarId, BanzhafResult>, ExactError> {
    let root_universe = t.node(t.root()).universe();
    for &x in xs {
        if !root_universe.contains(x) {
            return Err(ExactError::NotInUniverse(x));
        }
    }
    let mut values: Vec<Option<NodeValue>> = (0..t.len()).map(|_| None).collect();
    for id in t.post_order() {
        let node = t.node(id);
        let value = match node.kind() {
            NodeKind::Function(_) => return Err(ExactError::IncompleteTree(id)),
            NodeKind::Literal { var, positive } => NodeValue {
                count: BigUint::one(),
                banzhaf: xs
                    .iter()
                    .map(|&x| {
                        if x == *var {
                            if *positive {
                                BigInt::one()
                            } else {
                                -BigInt::one()
                            }
                        } else {
                            BigInt::zero()
                        }
                    })
                    .collect(),
            },
            NodeKind::Constant(b) => NodeValue {
                count: if *b {
                    pow2(node.universe().len())
                } else {
                    BigUint::zero()
                },
                banzhaf: vec![BigInt::zero(); xs.len()],
            },
            NodeKind::Inner { op, children } => {
                let mut iter = children.iter();
                let first = iter.next().expect("inner nodes have children");
                let mut acc_count = values[first.index()]
                    .as_ref()
                    .expect("post-order")
                    .count
                    .clone();
                let mut acc_banzhaf = values[first.index()]
                    .as_ref()
                    .expect("post-order")
                    .banzhaf
                    .clone();
                let mut acc_n = t.node(*first).universe().len();
                for child in iter {
                    let rhs = values[child.index()].as_ref().expect("post-order");
                    let n_rhs = t.node(*child).universe().len();
                    match op {
                        DecompOp::IndepAnd => {
                            for (b_acc, b_rhs) in acc_banzhaf.iter_mut().zip(&rhs.banzhaf) {
                                // Banzhaf(ξ₁∧ξ₂, x) = B₁·#₂ when x is on side 1;
                                // the symmetric term covers side 2, and both
                                // vanish when x is in neither child.
                                *b_acc = &*b_acc * BigInt::from(rhs.count.clone())
                                    + b_rhs * BigInt::from(acc_count.clone());
                            }
                            acc_count = &acc_count * &rhs.count;
                        }
                        DecompOp::IndepOr => {
                            let absent_rhs =
                                BigInt::from(pow2(n_rhs)) - BigInt::from(rhs.count.clone());
                            let absent_acc =
                                BigInt::from(pow2(acc_n)) - BigInt::from(acc_count.clone());
                            for (b_acc, b_rhs) in acc_banzhaf.iter_mut().zip(&rhs.banzhaf) {
                                // Banzhaf(ξ₁∨ξ₂, x) = B₁·(2^{n₂} − #₂), x on side 1.
                                *b_acc = &*b_acc * &absent_rhs + b_rhs * &absent_acc;
                            }
                            // #(ξ₁∨ξ₂) = #₁·2^{n₂} + 2^{n₁}·#₂ − #₁·#₂
                            acc_count = &acc_count * pow2(n_rhs) + pow2(acc_n) * &rhs.count
                                - &acc_count * &rhs.count;
                        }
                        DecompOp::MutexOr => {
                            for (b_acc, b_rhs) in acc_banzhaf.iter_mut().zip(&rhs.banzhaf) {
                                *b_acc += b_rhs;
                            }
                            acc_count += &rhs.count;
                        }
                    }
                    if *op != DecompOp::MutexOr {
                        acc_n += n_rhs;
                    }
                }
                NodeValue {
                    count: acc_count,
                    banzhaf: acc_banzhaf,
                }
            }
        };
        values[id.index()] = Some(value);
    }
    let root = values[t.root().index()].take().expect("root visited");
    Ok(xs
        .iter()
        .zip(root.banzhaf)
        .map(|(&x, banzhaf)| {
            (
                x,
                BanzhafResult {
                    banzhaf,
                    model_count: root.count.clone(),
                },
            )
        })
        .collect())
}

/// Exact Banzhaf value of a single variable over a complete d-tree.
pub fn exaban(t: &DTree, x: VarId) -> Result<BanzhafResult, ExactError> {
    let mut all = exaban_all(t, &[x])?;
    Ok(all.remove(&x).expect("requested variable present"))
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("index normalization undefined: Banzhaf values sum to zero")]
pub struct ZeroTotalError;

/// Penrose–Banzhaf power: banzhaf / 2^{n−1} for a universe of n variables.
pub fn normalize_power(b: &BanzhafResult, universe_size: usize) -> BigRational {
    assert!(universe_size >= 1, "power normalization needs n ≥ 1");
    BigRational::new(b.banzhaf.clone(), BigInt::from(pow2(universe_size - 1)))
}

/// Banzhaf index: banzhaf / Σ_y banzhaf(y) over all universe variables.
pub fn normalize_index(
    b: &BanzhafResult,
    all: &BTreeMap<VarId, BanzhafResult>,
) -> Result<BigRational, ZeroTotalError> {
    let total: BigInt = all.values().map(|r| r.banzhaf.clone()).sum();
    if total.is_zero() {
        return Err(ZeroTotalError);
    }
    Ok(BigRational::new(b.banzhaf.clone(), total))
}
