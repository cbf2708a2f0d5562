//! Lower and upper bounds on Banzhaf values and model counts over partial
//! d-trees.
//!
//! Function leaves are bracketed by two independent-DNF relaxations: a lower
//! function that keeps a variable-disjoint subset of the clauses and an upper
//! function that keeps one occurrence of each variable. Both admit linear-time
//! model counting. Inner nodes combine child brackets with interval
//! arithmetic; all interval endpoints are exact integers, so the brackets are
//! sound, and on complete trees they collapse to the exact values.

use std::collections::HashMap;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::dtree::{DTree, DecompOp, NodeId, NodeKind};
use crate::lineage::{Clause, DnfFunction, VarId, VarSet};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BoundsError {
    #[error("model counting shortcut requires an independent DNF (pairwise variable-disjoint clauses)")]
    NotIdnf,
}

fn pow2(n: usize) -> BigUint {
    BigUint::one() << n
}

/// Bracket on a node's Banzhaf value for one variable and on its model count.
///
/// Invariants: `banzhaf_lower ≤ banzhaf_upper` and
/// `count_lower ≤ count_upper ≤ 2^n` for the node's universe size n.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundsQuad {
    pub banzhaf_lower: BigInt,
    pub banzhaf_upper: BigInt,
    pub count_lower: BigUint,
    pub count_upper: BigUint,
}

impl BoundsQuad {
    /// True when the bracket pins both quantities to single points.
    pub fn is_exact(&self) -> bool {
        self.banzhaf_lower == self.banzhaf_upper && self.count_lower == self.count_upper
    }

    fn debug_check(&self, universe_size: usize) {
        debug_assert!(self.banzhaf_lower <= self.banzhaf_upper);
        debug_assert!(self.count_lower <= self.count_upper);
        debug_assert!(self.count_upper <= pow2(universe_size));
    }
}

/// Exact model count of an independent DNF over its universe.
///
/// Clauses with pairwise disjoint variables fail independently, so
/// #¬f = 2^{n−Σ|cᵢ|}·Π(2^{|cᵢ|}−1) and #f = 2^n − #¬f. Universe variables
/// outside every clause are free and are covered by the leading 2-power.
pub fn idnf_count(f: &DnfFunction) -> Result<BigUint, BoundsError> {
    if !f.is_idnf() {
        return Err(BoundsError::NotIdnf);
    }
    let n = f.universe().len();
    if let Some(b) = f.as_constant() {
        return Ok(if b { pow2(n) } else { BigUint::zero() });
    }
    let literals: usize = f.size();
    let mut unsat = pow2(n - literals);
    for clause in f.clauses() {
        unsat *= pow2(clause.len()) - BigUint::one();
    }
    Ok(pow2(n) - unsat)
}

/// One pass over the clauses; the counter tracks literal visits so tests can
/// pin the linear-time claim.
fn lower_fn_counted(f: &DnfFunction, ops: &mut usize) -> DnfFunction {
    if f.is_constant() {
        return f.clone();
    }
    let mut kept_vars = VarSet::new();
    let mut dropped_vars = VarSet::new();
    let mut kept: Vec<Clause> = Vec::new();
    for clause in f.clauses() {
        *ops += clause.len();
        if clause.vars().is_disjoint_from(&kept_vars) {
            kept_vars = kept_vars.union(clause.vars());
            kept.push(clause.clone());
        } else {
            dropped_vars = dropped_vars.union(clause.vars());
        }
    }
    let universe: VarSet = f
        .universe()
        .iter()
        .filter(|v| kept_vars.contains(*v) || !dropped_vars.contains(*v))
        .collect();
    DnfFunction::from_clauses(universe, kept).expect("kept clauses cover their own universe")
}

/// Independent-DNF lower bound: first-fit scan keeps a clause iff it shares no
/// variable with previously kept clauses. Variables occurring only in dropped
/// clauses leave the universe; isolated universe variables stay, so an input
/// that is already an iDNF comes back unchanged.
pub fn lower_fn(f: &DnfFunction) -> DnfFunction {
    let mut ops = 0;
    lower_fn_counted(f, &mut ops)
}

fn upper_fn_counted(f: &DnfFunction, ops: &mut usize) -> DnfFunction {
    if f.is_constant() {
        return f.clone();
    }
    let mut seen = VarSet::new();
    let mut kept: Vec<Clause> = Vec::new();
    for clause in f.clauses() {
        *ops += clause.len();
        let fresh: VarSet = clause.iter().filter(|v| !seen.contains(*v)).collect();
        if fresh.is_empty() {
            // Deleting every literal of a clause would weaken it to constant
            // 1; anything tighter is unsound, so give up on this leaf.
            return DnfFunction::constant(true, f.universe().clone());
        }
        seen = seen.union(&fresh);
        kept.push(Clause::from_vec(fresh.iter().collect()));
    }
    DnfFunction::from_clauses(f.universe().clone(), kept)
        .expect("kept variables come from the original universe")
}

/// Independent-DNF upper bound: keeps the first occurrence of each variable
/// and drops repeats, which weakens every clause. The universe is unchanged.
pub fn upper_fn(f: &DnfFunction) -> DnfFunction {
    let mut ops = 0;
    upper_fn_counted(f, &mut ops)
}

/// (lower, upper) model-count bracket of an arbitrary positive DNF.
fn count_bracket(f: &DnfFunction) -> (BigUint, BigUint) {
    if let Some(b) = f.as_constant() {
        let c = if b {
            pow2(f.universe().len())
        } else {
            BigUint::zero()
        };
        return (c.clone(), c);
    }
    let lower = idnf_count(&lower_fn(f)).expect("lower_fn yields an iDNF");
    let upper = idnf_count(&upper_fn(f)).expect("upper_fn yields an iDNF");
    (lower, upper)
}

/// Banzhaf and model-count bracket for a non-trivial DNF leaf, from the two
/// cofactor brackets: Banzhaf(ψ,x) = #ψ[x:=1] − #ψ[x:=0] termwise.
pub fn leaf_bounds(psi: &DnfFunction, x: VarId) -> BoundsQuad {
    let (count_lower, count_upper) = count_bracket(psi);
    let quad = if psi.clause_vars().contains(x) {
        let (one_lower, one_upper) =
            count_bracket(&psi.restrict(x, true).expect("x is in the universe"));
        let (zero_lower, zero_upper) =
            count_bracket(&psi.restrict(x, false).expect("x is in the universe"));
        BoundsQuad {
            banzhaf_lower: BigInt::from(one_lower) - BigInt::from(zero_upper),
            banzhaf_upper: BigInt::from(one_upper) - BigInt::from(zero_lower),
            count_lower,
            count_upper,
        }
    } else {
        BoundsQuad {
            banzhaf_lower: BigInt::zero(),
            banzhaf_upper: BigInt::zero(),
            count_lower,
            count_upper,
        }
    };
    quad.debug_check(psi.universe().len());
    quad
}

/// Endpoints of [lo, hi]·[c_lo, c_hi] with 0 ≤ c_lo ≤ c_hi: a negative left
/// endpoint pairs with the large count, a negative right endpoint with the
/// small one.
fn mul_lo(lo: &BigInt, c_lo: &BigUint, c_hi: &BigUint) -> BigInt {
    if lo.is_negative() {
        lo * BigInt::from(c_hi.clone())
    } else {
        lo * BigInt::from(c_lo.clone())
    }
}

fn mul_hi(hi: &BigInt, c_lo: &BigUint, c_hi: &BigUint) -> BigInt {
    if hi.is_negative() {
        hi * BigInt::from(c_lo.clone())
    } else {
        hi * BigInt::from(c_hi.clone())
    }
}

/// Count bracket of an independent disjunction from the child brackets:
/// #(ξ₁∨ξ₂) = 2^{n₁+n₂} − (2^{n₁}−#₁)(2^{n₂}−#₂), increasing in both counts.
/// Inputs are capped at the universe capacity so that a bracket wider than
/// the trivial one cannot push a complement below zero.
fn or_counts(
    a: (&BigUint, &BigUint),
    n_a: usize,
    b: (&BigUint, &BigUint),
    n_b: usize,
) -> (BigUint, BigUint) {
    let cap_a = pow2(n_a);
    let cap_b = pow2(n_b);
    let total = pow2(n_a + n_b);
    let lower = &total - (&cap_a - a.0.min(&cap_a)) * (&cap_b - b.0.min(&cap_b));
    let upper = &total - (&cap_a - a.1.min(&cap_a)) * (&cap_b - b.1.min(&cap_b));
    (lower, upper)
}

/// Bracket combination for an independent conjunction.
pub fn and_quad(a: &BoundsQuad, b: &BoundsQuad) -> BoundsQuad {
    // Banzhaf(ξ₁∧ξ₂, x) = B₁·#₂ + B₂·#₁ (one term is zero: the universes are
    // disjoint, so x lives in at most one side).
    BoundsQuad {
        banzhaf_lower: mul_lo(&a.banzhaf_lower, &b.count_lower, &b.count_upper)
            + mul_lo(&b.banzhaf_lower, &a.count_lower, &a.count_upper),
        banzhaf_upper: mul_hi(&a.banzhaf_upper, &b.count_lower, &b.count_upper)
            + mul_hi(&b.banzhaf_upper, &a.count_lower, &a.count_upper),
        count_lower: &a.count_lower * &b.count_lower,
        count_upper: &a.count_upper * &b.count_upper,
    }
}

/// Bracket combination for an independent disjunction, with the left operand
/// over n_a variables and the right over n_b.
pub fn or_quad(a: &BoundsQuad, n_a: usize, b: &BoundsQuad, n_b: usize) -> BoundsQuad {
    // Banzhaf(ξ₁∨ξ₂, x) = B₁·(2^{n₂}−#₂) + B₂·(2^{n₁}−#₁); the complement
    // factors are non-negative interval endpoints in swapped order, with the
    // same capping as in or_counts.
    let cap_a = pow2(n_a);
    let cap_b = pow2(n_b);
    let a_absent_lo = &cap_a - (&a.count_upper).min(&cap_a);
    let a_absent_hi = &cap_a - (&a.count_lower).min(&cap_a);
    let b_absent_lo = &cap_b - (&b.count_upper).min(&cap_b);
    let b_absent_hi = &cap_b - (&b.count_lower).min(&cap_b);
    let (count_lower, count_upper) = or_counts(
        (&a.count_lower, &a.count_upper),
        n_a,
        (&b.count_lower, &b.count_upper),
        n_b,
    );
    BoundsQuad {
        banzhaf_lower: mul_lo(&a.banzhaf_lower, &b_absent_lo, &b_absent_hi)
            + mul_lo(&b.banzhaf_lower, &a_absent_lo, &a_absent_hi),
        banzhaf_upper: mul_hi(&a.banzhaf_upper, &b_absent_lo, &b_absent_hi)
            + mul_hi(&b.banzhaf_upper, &a_absent_lo, &a_absent_hi),
        count_lower,
        count_upper,
    }
}

/// Bracket combination for a mutually exclusive disjunction over a shared
/// universe: both quantities add.
pub fn sum_quad(a: &BoundsQuad, b: &BoundsQuad) -> BoundsQuad {
    BoundsQuad {
        banzhaf_lower: &a.banzhaf_lower + &b.banzhaf_lower,
        banzhaf_upper: &a.banzhaf_upper + &b.banzhaf_upper,
        count_lower: &a.count_lower + &b.count_lower,
        count_upper: &a.count_upper + &b.count_upper,
    }
}

/// Root bracket for one variable, plus the bracket on #φ[x:=0] used to tighten
/// the Banzhaf bracket via Banzhaf(φ,x) = #φ − 2·#φ[x:=0].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarBounds {
    pub quad: BoundsQuad,
    /// Bracket on the model count of φ[x:=0] over the universe without x.
    pub zero_lower: BigUint,
    pub zero_upper: BigUint,
}

/// Per-node state: count bracket shared by all variables plus per-variable
/// Banzhaf and zero-cofactor brackets.
#[derive(Debug, Clone)]
struct PerVar {
    banzhaf_lower: BigInt,
    banzhaf_upper: BigInt,
    zero_lower: BigUint,
    zero_upper: BigUint,
}

/// Incremental bound computation over a d-tree that is being expanded.
///
/// Counts are cached per node and Banzhaf data per (node, variable); after
/// expanding a leaf, call [`BoundsEngine::invalidate_path`] with that leaf's
/// id so only the root path is recomputed on the next query.
#[derive(Debug, Default)]
pub struct BoundsEngine {
    counts: HashMap<NodeId, (BigUint, BigUint)>,
    per_var: HashMap<(NodeId, VarId), PerVar>,
}

impl BoundsEngine {
    pub fn new() -> Self {
        Self::default()
    }

    /// Drops cached results for `from` and all of its ancestors, for every
    /// variable. Call after expanding the leaf `from`.
    pub fn invalidate_path(&mut self, t: &DTree, from: NodeId) {
        let path = t.path_to_root(from);
        for id in &path {
            self.counts.remove(id);
        }
        self.per_var.retain(|(id, _), _| !path.contains(id));
    }

    /// Bracket at `id` for variable `x`, if that node has been computed.
    pub fn node_quad(&self, id: NodeId, x: VarId) -> Option<BoundsQuad> {
        let (count_lower, count_upper) = self.counts.get(&id)?;
        let pv = self.per_var.get(&(id, x))?;
        Some(BoundsQuad {
            banzhaf_lower: pv.banzhaf_lower.clone(),
            banzhaf_upper: pv.banzhaf_upper.clone(),
            count_lower: count_lower.clone(),
            count_upper: count_upper.clone(),
        })
    }

    /// Root bracket for `x` over the tree's current shape, reusing every
    /// cached subtree.
    pub fn var_bounds(&mut self, t: &DTree, x: VarId) -> VarBounds {
        for id in t.post_order() {
            if self.counts.contains_key(&id) && self.per_var.contains_key(&(id, x)) {
                continue;
            }
            let node = t.node(id);
            let n = node.universe().len();
            let in_universe = node.universe().contains(x);
            let (counts, pv) = match node.kind() {
                NodeKind::Literal { var, positive } => {
                    let counts = (BigUint::one(), BigUint::one());
                    let pv = if *var == x {
                        let b = if *positive { BigInt::one() } else { -BigInt::one() };
                        // x:=0 turns x into constant 0 and ¬x into constant 1,
                        // both over an empty universe.
                        let zero = if *positive { BigUint::zero() } else { BigUint::one() };
                        PerVar {
                            banzhaf_lower: b.clone(),
                            banzhaf_upper: b,
                            zero_lower: zero.clone(),
                            zero_upper: zero,
                        }
                    } else {
                        PerVar {
                            banzhaf_lower: BigInt::zero(),
                            banzhaf_upper: BigInt::zero(),
                            zero_lower: BigUint::one(),
                            zero_upper: BigUint::one(),
                        }
                    };
                    (counts, pv)
                }
                NodeKind::Constant(b) => {
                    let count = if *b { pow2(n) } else { BigUint::zero() };
                    let zero = if *b {
                        pow2(n - usize::from(in_universe))
                    } else {
                        BigUint::zero()
                    };
                    (
                        (count.clone(), count),
                        PerVar {
                            banzhaf_lower: BigInt::zero(),
                            banzhaf_upper: BigInt::zero(),
                            zero_lower: zero.clone(),
                            zero_upper: zero,
                        },
                    )
                }
                NodeKind::Function(psi) => {
                    let quad = leaf_bounds(psi, x);
                    let (zero_lower, zero_upper) = if in_universe {
                        count_bracket(&psi.restrict(x, false).expect("x is in the universe"))
                    } else {
                        (quad.count_lower.clone(), quad.count_upper.clone())
                    };
                    (
                        (quad.count_lower, quad.count_upper),
                        PerVar {
                            banzhaf_lower: quad.banzhaf_lower,
                            banzhaf_upper: quad.banzhaf_upper,
                            zero_lower,
                            zero_upper,
                        },
                    )
                }
                NodeKind::Inner { op, children } => {
                    let mut iter = children.iter();
                    let first = *iter.next().expect("inner nodes have children");
                    let mut acc = self.node_state(first, x);
                    let mut acc_n = t.node(first).universe().len();
                    // Universe size with x removed, for the zero-cofactor
                    // disjunction rule.
                    let mut acc_n0 = acc_n - usize::from(t.node(first).universe().contains(x));
                    for &child in iter {
                        let rhs = self.node_state(child, x);
                        let rhs_n = t.node(child).universe().len();
                        let rhs_n0 =
                            rhs_n - usize::from(t.node(child).universe().contains(x));
                        acc = match op {
                            DecompOp::IndepAnd => {
                                let quad = and_quad(&acc.0, &rhs.0);
                                let zero = (
                                    &acc.1 .0 * &rhs.1 .0,
                                    &acc.1 .1 * &rhs.1 .1,
                                );
                                (quad, zero)
                            }
                            DecompOp::IndepOr => {
                                let quad = or_quad(&acc.0, acc_n, &rhs.0, rhs_n);
                                let zero = or_counts(
                                    (&acc.1 .0, &acc.1 .1),
                                    acc_n0,
                                    (&rhs.1 .0, &rhs.1 .1),
                                    rhs_n0,
                                );
                                (quad, zero)
                            }
                            DecompOp::MutexOr => {
                                let quad = sum_quad(&acc.0, &rhs.0);
                                let zero = (&acc.1 .0 + &rhs.1 .0, &acc.1 .1 + &rhs.1 .1);
                                (quad, zero)
                            }
                        };
                        if *op != DecompOp::MutexOr {
                            acc_n += rhs_n;
                            acc_n0 += rhs_n0;
                        }
                    }
                    let (quad, (zero_lower, zero_upper)) = acc;
                    (
                        (quad.count_lower, quad.count_upper),
                        PerVar {
                            banzhaf_lower: quad.banzhaf_lower,
                            banzhaf_upper: quad.banzhaf_upper,
                            zero_lower,
                            zero_upper,
                        },
                    )
                }
            };
            if cfg!(debug_assertions) {
                let quad = BoundsQuad {
                    banzhaf_lower: pv.banzhaf_lower.clone(),
                    banzhaf_upper: pv.banzhaf_upper.clone(),
                    count_lower: counts.0.clone(),
                    count_upper: counts.1.clone(),
                };
                quad.debug_check(n);
                debug_assert!(pv.zero_lower <= pv.zero_upper);
            }
            self.counts.insert(id, counts);
            self.per_var.insert((id, x), pv);
        }
        let root = t.root();
        VarBounds {
            quad: self.node_quad(root, x).expect("root was just computed"),
            zero_lower: self.per_var[&(root, x)].zero_lower.clone(),
            zero_upper: self.per_var[&(root, x)].zero_upper.clone(),
        }
    }

    fn node_state(&self, id: NodeId, x: VarId) -> (BoundsQuad, (BigUint, BigUint)) {
        let quad = self.node_quad(id, x).expect("children precede parents");
        let pv = &self.per_var[&(id, x)];
        (quad, (pv.zero_lower.clone(), pv.zero_upper.clone()))
    }
}

/// Root bracket for `x` over a possibly partial d-tree, without caching.
/// On complete trees the bracket collapses to the exact values.
pub fn propagate_bounds(t: &DTree, x: VarId) -> BoundsQuad {
    BoundsEngine::new().var_bounds(t, x).quad
}
