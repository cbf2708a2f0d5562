//! Anytime deterministic approximation of Banzhaf values.
//!
//! The approximator interleaves incremental d-tree expansion with bound
//! refinement. After every refinement step the tracked interval [L, U] is
//! tightened monotonically (L only grows, U only shrinks); once
//! (1−ε)·U ≤ (1+ε)·L holds, every value in [(1−ε)·U, (1+ε)·L] is within
//! relative error ε of the exact Banzhaf value and that interval is returned
//! as certified. Stopping earlier (by budget) still yields the sound tracked
//! interval, just without the certificate. All comparisons use exact rational
//! arithmetic, so certification can never be an artifact of rounding.

use std::collections::BTreeMap;
use std::str::FromStr;
use std::time::{Duration, Instant};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::bounds::BoundsEngine;
use crate::dtree::{DTree, ExpandKind, NodeId, NodeKind};
use crate::lineage::{DnfFunction, VarId};

fn pow2(n: usize) -> BigUint {
    BigUint::one() << n
}

/// Relative error bound, exact and within [0, 1].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Epsilon(BigRational);

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EpsilonError {
    #[error("epsilon must be a plain decimal such as 0.05")]
    Invalid,
    #[error("epsilon must lie in [0, 1], got {0}")]
    OutOfRange(BigRational),
}

impl Epsilon {
    pub fn new(value: BigRational) -> Result<Self, EpsilonError> {
        if value < BigRational::zero() || value > BigRational::one() {
            return Err(EpsilonError::OutOfRange(value));
        }
        Ok(Epsilon(value))
    }

    pub fn zero() -> Self {
        Epsilon(BigRational::zero())
    }

    pub fn value(&self) -> &BigRational {
        &self.0
    }
}

impl FromStr for Epsilon {
    type Err = EpsilonError;

    /// Parses decimal notation exactly: "0.1" becomes the rational 1/10.
    fn from_str(s: &str) -> Result<Self, EpsilonError> {
        let (int_part, frac_part) = match s.split_once('.') {
            Some((i, f)) => (i, f),
            None => (s, ""),
        };
        let digits_only = |p: &str| p.chars().all(|c| c.is_ascii_digit());
        if int_part.is_empty() && frac_part.is_empty()
            || !digits_only(int_part)
            || !digits_only(frac_part)
        {
            return Err(EpsilonError::Invalid);
        }
        let scale = BigInt::from(10u32).pow(frac_part.len() as u32);
        let int_value: BigInt = if int_part.is_empty() {
            BigInt::zero()
        } else {
            int_part.parse().map_err(|_| EpsilonError::Invalid)?
        };
        let frac_value: BigInt = if frac_part.is_empty() {
            BigInt::zero()
        } else {
            frac_part.parse().map_err(|_| EpsilonError::Invalid)?
        };
        Epsilon::new(BigRational::new(int_value * &scale + frac_value, scale))
    }
}

/// Optional stopping limits; an exhausted budget yields the current tracked
/// interval without a certificate rather than an error.
#[derive(Debug, Clone, Default)]
pub struct Budget {
    pub max_expansions: Option<u64>,
    pub wall: Option<Duration>,
}

/// Which function leaf a refinement step expands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LeafPolicy {
    /// Leaf with the most clauses, ties broken by tree position.
    #[default]
    Largest,
    /// First function leaf in depth-first order.
    Leftmost,
    /// Cycle through leaves by position.
    RoundRobin,
}

/// Result of one approximation run for one variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApproxInterval {
    /// Best certain lower bound on the Banzhaf value so far.
    pub tracked_lower: BigInt,
    /// Best certain upper bound so far.
    pub tracked_upper: BigInt,
    /// The ε-interval [(1−ε)·U, (1+ε)·L], present iff certification succeeded.
    pub certified: Option<(BigRational, BigRational)>,
    /// Leaf expansions performed during this run (all kinds).
    pub expansions: u64,
    /// Variable-branching expansions among them.
    pub shannon_expansions: u64,
    pub elapsed: Duration,
}

impl ApproxInterval {
    pub fn is_certified(&self) -> bool {
        self.certified.is_some()
    }

    /// A certified exact zero, for variables the function cannot depend on.
    pub fn exact_zero() -> Self {
        ApproxInterval {
            tracked_lower: BigInt::zero(),
            tracked_upper: BigInt::zero(),
            certified: Some((BigRational::zero(), BigRational::zero())),
            expansions: 0,
            shannon_expansions: 0,
            elapsed: Duration::ZERO,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ApproxError {
    #[error("variable {0} is not in the function's universe")]
    VariableAbsent(VarId),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RefineError {
    #[error("d-tree is already complete")]
    TreeComplete,
}

/// What one refinement step did: some number of free decomposition steps
/// (conversions, factorings, partitionings) and at most one variable branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepOutcome {
    pub free_steps: u64,
    pub shannon: bool,
}

/// Snapshot emitted to the progress callback after each bound refinement.
#[derive(Debug)]
pub struct Progress<'a> {
    pub variable: VarId,
    pub lower: &'a BigInt,
    pub upper: &'a BigInt,
    /// Expansions performed so far in the current run.
    pub expansions: u64,
    pub elapsed: Duration,
}

/// The certified interval [(1−ε)·U, (1+ε)·L], when (1−ε)·U ≤ (1+ε)·L.
///
/// Any value in the returned interval is within a (1±ε) factor of every
/// point of [L, U], so in particular of the exact value bracketed by it.
pub fn certify(
    lower: &BigInt,
    upper: &BigInt,
    eps: &Epsilon,
) -> Option<(BigRational, BigRational)> {
    let one = BigRational::one();
    let lo = (&one - eps.value()) * BigRational::from_integer(upper.clone());
    let hi = (&one + eps.value()) * BigRational::from_integer(lower.clone());
    (lo <= hi).then_some((lo, hi))
}

/// Incremental approximation state: a d-tree under refinement plus the bound
/// cache. One variable is approximated at a time; later variables resume from
/// the tree built so far.
#[derive(Debug)]
pub struct Approximator {
    tree: DTree,
    engine: BoundsEngine,
    policy: LeafPolicy,
    cursor: usize,
    expansions: u64,
    shannon_expansions: u64,
}

impl Approximator {
    pub fn new(f: DnfFunction, policy: LeafPolicy) -> Self {
        Approximator {
            tree: DTree::from_function(f),
            engine: BoundsEngine::new(),
            policy,
            cursor: 0,
            expansions: 0,
            shannon_expansions: 0,
        }
    }

    pub fn tree(&self) -> &DTree {
        &self.tree
    }

    /// Total leaf expansions across all runs.
    pub fn expansions(&self) -> u64 {
        self.expansions
    }

    /// How many of those expansions were variable branches.
    pub fn shannon_expansions(&self) -> u64 {
        self.shannon_expansions
    }

    fn pick_leaf(&mut self) -> Option<NodeId> {
        let leaves = self.tree.function_leaf_ids();
        if leaves.is_empty() {
            return None;
        }
        match self.policy {
            LeafPolicy::Leftmost => Some(leaves[0]),
            LeafPolicy::RoundRobin => {
                let id = leaves[self.cursor % leaves.len()];
                self.cursor += 1;
                Some(id)
            }
            LeafPolicy::Largest => {
                let mut best = leaves[0];
                let mut best_clauses = 0usize;
                for id in leaves {
                    let clauses = match self.tree.node(id).kind() {
                        NodeKind::Function(psi) => psi.clauses().len(),
                        _ => unreachable!("function_leaf_ids returns function leaves"),
                    };
                    if clauses > best_clauses {
                        best = id;
                        best_clauses = clauses;
                    }
                }
                Some(best)
            }
        }
    }

    /// Expands leaves until one variable branch happens or the tree becomes
    /// complete. Decomposition steps that cannot loosen bounds (conversion,
    /// factoring, partitioning) are free: no bound recomputation in between,
    /// and the affected root path is invalidated just once per expanded leaf.
    pub fn refine_step(&mut self) -> Result<StepOutcome, RefineError> {
        if self.tree.is_complete() {
            return Err(RefineError::TreeComplete);
        }
        let mut free_steps = 0u64;
        loop {
            let Some(leaf) = self.pick_leaf() else {
                return Ok(StepOutcome {
                    free_steps,
                    shannon: false,
                });
            };
            let kind = self
                .tree
                .expand_leaf(leaf)
                .expect("picked leaf is expandable");
            self.engine.invalidate_path(&self.tree, leaf);
            self.expansions += 1;
            if kind == ExpandKind::Shannon {
                self.shannon_expansions += 1;
                return Ok(StepOutcome {
                    free_steps,
                    shannon: true,
                });
            }
            free_steps += 1;
        }
    }

    /// The instantaneous root bracket for `x`: the d-tree propagation pair
    /// intersected with the count-difference pair from
    /// Banzhaf(φ,x) = #φ − 2·#φ[x:=0], clamped to the trivial [0, 2^{n−1}].
    pub fn current_bounds(&mut self, x: VarId) -> (BigInt, BigInt) {
        let n = self.tree.node(self.tree.root()).universe().len();
        let vb = self.engine.var_bounds(&self.tree, x);
        let two = BigInt::from(2u32);
        let from_counts_lower =
            BigInt::from(vb.quad.count_lower) - &two * BigInt::from(vb.zero_upper);
        let from_counts_upper =
            BigInt::from(vb.quad.count_upper) - &two * BigInt::from(vb.zero_lower);
        let lower = vb
            .quad
            .banzhaf_lower
            .max(from_counts_lower)
            .max(BigInt::zero());
        let upper = vb
            .quad
            .banzhaf_upper
            .min(from_counts_upper)
            .min(BigInt::from(pow2(n - 1)));
        (lower, upper)
    }

    /// Approximates Banzhaf(f, x) to relative error ε, refining the shared
    /// tree as needed and reporting progress after every refinement.
    pub fn approximate_traced<F: FnMut(Progress)>(
        &mut self,
        x: VarId,
        eps: &Epsilon,
        budget: &Budget,
        mut on_step: F,
    ) -> Result<ApproxInterval, ApproxError> {
        let root_universe = self.tree.node(self.tree.root()).universe();
        if !root_universe.contains(x) {
            return Err(ApproxError::VariableAbsent(x));
        }
        let n = root_universe.len();
        let started = Instant::now();
        let run_start = self.expansions;
        let shannon_start = self.shannon_expansions;
        let mut tracked_lower = BigInt::zero();
        let mut tracked_upper = BigInt::from(pow2(n - 1));
        loop {
            let (lower, upper) = self.current_bounds(x);
            if lower > tracked_lower {
                tracked_lower = lower;
            }
            if upper < tracked_upper {
                tracked_upper = upper;
            }
            let run_expansions = self.expansions - run_start;
            on_step(Progress {
                variable: x,
                lower: &tracked_lower,
                upper: &tracked_upper,
                expansions: run_expansions,
                elapsed: started.elapsed(),
            });
            let certified = certify(&tracked_lower, &tracked_upper, eps);
            let out_of_budget = budget
                .max_expansions
                .map(|cap| run_expansions >= cap)
                .unwrap_or(false)
                || budget
                    .wall
                    .map(|cap| started.elapsed() >= cap)
                    .unwrap_or(false);
            if certified.is_some() || out_of_budget || self.tree.is_complete() {
                return Ok(ApproxInterval {
                    tracked_lower,
                    tracked_upper,
                    certified,
                    expansions: self.expansions - run_start,
                    shannon_expansions: self.shannon_expansions - shannon_start,
                    elapsed: started.elapsed(),
                });
            }
            self.refine_step().expect("incomplete tree refines");
        }
    }

    pub fn approximate(
        &mut self,
        x: VarId,
        eps: &Epsilon,
        budget: &Budget,
    ) -> Result<ApproxInterval, ApproxError> {
        self.approximate_traced(x, eps, budget, |_| {})
    }
}

/// One-shot approximation of a single variable's Banzhaf value.
pub fn adaban(
    f: DnfFunction,
    x: VarId,
    eps: &Epsilon,
    budget: &Budget,
) -> Result<ApproxInterval, ApproxError> {
    Approximator::new(f, LeafPolicy::default()).approximate(x, eps, budget)
}

/// Sequential approximation of several variables over one shared d-tree;
/// each variable resumes from the tree refined so far, so later variables
/// typically certify with few or no additional expansions. The budget applies
/// per variable.
pub fn adaban_all(
    f: DnfFunction,
    xs: &[VarId],
    eps: &Epsilon,
    budget: &Budget,
) -> Result<BTreeMap<VarId, ApproxInterval>, ApproxError> {
    for &x in xs {
        if !f.universe().contains(x) {
            return Err(ApproxError::VariableAbsent(x));
        }
    }
    let mut state = Approximator::new(f, LeafPolicy::default());
    let mut out = BTreeMap::new();
    for &x in xs {
        out.insert(x, state.approximate(x, eps, budget)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::{brute_banzhaf, BoolExpr};
    use crate::dtree::compile_full;
    use crate::exact::exaban;
    use crate::lineage::{parse_dnf, Clause, VarSet};
    use proptest::prelude::*;

    fn v(i: u32) -> VarId {
        VarId(i)
    }

    fn f(text: &str) -> DnfFunction {
        parse_dnf(text).unwrap().function
    }

    fn eps(text: &str) -> Epsilon {
        text.parse().unwrap()
    }

    fn ratio(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn epsilon_parses_decimals_exactly() {
        assert_eq!(eps("0.1").value(), &ratio(1, 10));
        assert_eq!(eps("0.25").value(), &ratio(1, 4));
        assert_eq!(eps("0").value(), &BigRational::zero());
        assert_eq!(eps("1").value(), &BigRational::one());
        assert_eq!(eps("1.000").value(), &BigRational::one());
        assert_eq!(eps(".5").value(), &ratio(1, 2));
        assert!(matches!(
            "1.1".parse::<Epsilon>(),
            Err(EpsilonError::OutOfRange(_))
        ));
        assert_eq!("-0.1".parse::<Epsilon>(), Err(EpsilonError::Invalid));
        assert_eq!("abc".parse::<Epsilon>(), Err(EpsilonError::Invalid));
        assert_eq!("".parse::<Epsilon>(), Err(EpsilonError::Invalid));
        assert_eq!("0.1.2".parse::<Epsilon>(), Err(EpsilonError::Invalid));
    }

    #[test]
    fn tight_leaf_certifies_without_expansion() {
        let got = adaban(f("(x & y) | (x & z) | u"), v(0), &eps("0.1"), &Budget::default())
            .unwrap();
        assert_eq!(got.certified, Some((ratio(27, 10), ratio(33, 10))));
        assert_eq!(got.tracked_lower, BigInt::from(3));
        assert_eq!(got.tracked_upper, BigInt::from(3));
        assert_eq!(got.expansions, 0);
        assert_eq!(got.shannon_expansions, 0);
    }

    #[test]
    fn certification_rule_golden() {
        let l = BigInt::from(43);
        let u = BigInt::from(136);
        assert_eq!(
            certify(&l, &u, &eps("0.6")),
            Some((ratio(272, 5), ratio(344, 5)))
        );
        // At ε = 0.5 the check value 68 exceeds 64.5, so no certificate yet.
        assert_eq!(certify(&l, &u, &eps("0.5")), None);
        let one = BigRational::one();
        let half = eps("0.5");
        assert_eq!(
            (&one - half.value()) * BigRational::from_integer(u.clone()),
            ratio(68, 1)
        );
        assert_eq!(
            (&one + half.value()) * BigRational::from_integer(l.clone()),
            ratio(129, 2)
        );
    }

    #[test]
    fn eps_zero_matches_exact_evaluation() {
        for text in [
            "(x & y) | (y & z) | (z & x)",
            "(x & y) | (x & z) | u",
            "x1 | (x2 & x3)",
            "(a & b) | (b & c) | (c & d)",
        ] {
            let fun = f(text);
            let t = compile_full(fun.clone());
            for x in fun.universe().iter() {
                let exact = exaban(&t, x).unwrap();
                let got =
                    adaban(fun.clone(), x, &Epsilon::zero(), &Budget::default()).unwrap();
                let (lo, hi) = got.certified.expect("eps 0 always certifies");
                assert_eq!(lo, BigRational::from_integer(exact.banzhaf.clone()));
                assert_eq!(hi, lo);
                assert_eq!(got.tracked_lower, exact.banzhaf);
                assert_eq!(got.tracked_upper, exact.banzhaf);
            }
        }
    }

    #[test]
    fn all_variables_share_one_tree() {
        // y goes first because x certifies straight from leaf bounds; the
        // y run completes the tree and the other two runs ride on it.
        let fun = f("(x & y) | (x & z)");
        let xs = [v(1), v(0), v(2)];
        let got = adaban_all(fun, &xs, &Epsilon::zero(), &Budget::default()).unwrap();
        for (x, value) in [(v(0), 3), (v(1), 1), (v(2), 1)] {
            assert_eq!(got[&x].tracked_lower, BigInt::from(value));
            assert_eq!(got[&x].tracked_upper, BigInt::from(value));
            assert!(got[&x].is_certified());
        }
        assert!(got[&v(1)].expansions > 0);
        assert_eq!(got[&v(1)].shannon_expansions, 0);
        assert_eq!(got[&v(0)].expansions, 0);
        assert_eq!(got[&v(2)].expansions, 0);
    }

    #[test]
    fn variable_order_does_not_break_containment() {
        let fun = f("(a & b) | (b & c) | (c & d) | (a & d)");
        let expr = BoolExpr::from_dnf(&fun);
        let mut xs: Vec<VarId> = fun.universe().iter().collect();
        for _ in 0..2 {
            let got =
                adaban_all(fun.clone(), &xs, &eps("0.1"), &Budget::default()).unwrap();
            for &x in &xs {
                let oracle = brute_banzhaf(&expr, fun.universe(), x).unwrap();
                let interval = &got[&x];
                assert!(interval.tracked_lower <= oracle);
                assert!(oracle <= interval.tracked_upper);
            }
            xs.reverse();
        }
    }

    #[test]
    fn zero_value_variable_certifies_to_zero_interval() {
        let fun = f("vars{x,y} x");
        let got = adaban(fun, v(1), &eps("0.5"), &Budget::default()).unwrap();
        assert_eq!(
            got.certified,
            Some((BigRational::zero(), BigRational::zero()))
        );
        assert_eq!(got.tracked_upper, BigInt::zero());
    }

    #[test]
    fn exhausted_budget_returns_uncertified_bracket() {
        let fun = f("(x & y) | (y & z) | (z & x)");
        let expr = BoolExpr::from_dnf(&fun);
        let oracle = brute_banzhaf(&expr, fun.universe(), v(0)).unwrap();
        let budget = Budget {
            max_expansions: Some(0),
            wall: None,
        };
        let got = adaban(fun, v(0), &Epsilon::zero(), &budget).unwrap();
        assert!(!got.is_certified());
        assert_eq!(got.expansions, 0);
        assert!(got.tracked_lower <= oracle && oracle <= got.tracked_upper);
        assert!(got.tracked_lower < got.tracked_upper);
    }

    #[test]
    fn tracked_intervals_are_nested() {
        let fun = f("(a & b) | (b & c) | (c & d) | (d & e)");
        let mut history: Vec<(BigInt, BigInt)> = Vec::new();
        Approximator::new(fun, LeafPolicy::default())
            .approximate_traced(v(1), &Epsilon::zero(), &Budget::default(), |p| {
                history.push((p.lower.clone(), p.upper.clone()));
            })
            .unwrap();
        assert!(history.len() > 1);
        for pair in history.windows(2) {
            assert!(pair[0].0 <= pair[1].0);
            assert!(pair[0].1 >= pair[1].1);
        }
    }

    #[test]
    fn factoring_and_partitioning_are_free_steps() {
        let mut state = Approximator::new(f("(x & y) | (x & z)"), LeafPolicy::default());
        let outcome = state.refine_step().unwrap();
        assert_eq!(
            outcome,
            StepOutcome {
                free_steps: 2,
                shannon: false
            }
        );
        assert!(state.tree().is_complete());
        assert_eq!(state.refine_step(), Err(RefineError::TreeComplete));
        let got = state
            .approximate(v(0), &Epsilon::zero(), &Budget::default())
            .unwrap();
        assert_eq!(got.tracked_lower, BigInt::from(3));
        assert_eq!(got.expansions, 0);
    }

    #[test]
    fn triangle_needs_exactly_one_shannon_per_step() {
        let mut state = Approximator::new(
            f("(x & y) | (y & z) | (z & x)"),
            LeafPolicy::default(),
        );
        let outcome = state.refine_step().unwrap();
        assert_eq!(
            outcome,
            StepOutcome {
                free_steps: 0,
                shannon: true
            }
        );
        assert_eq!(state.expansions(), 1);
    }

    #[test]
    fn leaf_policies_agree_on_the_exact_point() {
        let fun = f("(a & b) | (b & c) | (c & d) | (d & e) | (e & a)");
        let t = compile_full(fun.clone());
        let exact = exaban(&t, v(0)).unwrap();
        for policy in [LeafPolicy::Largest, LeafPolicy::Leftmost, LeafPolicy::RoundRobin] {
            let mut state = Approximator::new(fun.clone(), policy);
            let got = state
                .approximate(v(0), &Epsilon::zero(), &Budget::default())
                .unwrap();
            assert_eq!(got.tracked_lower, exact.banzhaf);
            assert_eq!(got.tracked_upper, exact.banzhaf);
        }
    }

    fn arb_dnf(max_vars: u32, max_clauses: usize) -> impl Strategy<Value = DnfFunction> {
        (2..=max_vars)
            .prop_flat_map(move |n| {
                (
                    proptest::collection::vec(
                        proptest::collection::btree_set(0..n, 1..=(n as usize).min(3)),
                        1..=max_clauses,
                    ),
                    Just(n),
                )
            })
            .prop_map(|(clauses, n)| {
                let universe: VarSet = (0..n).map(VarId).collect();
                let clauses = clauses
                    .into_iter()
                    .map(|c| Clause::from_vec(c.into_iter().map(VarId).collect()))
                    .collect();
                DnfFunction::from_clauses(universe, clauses).unwrap()
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn certified_intervals_are_relative_error_sound(
            fun in arb_dnf(10, 6),
            eps_choice in prop_oneof![Just("0"), Just("0.01"), Just("0.1"), Just("0.5")],
        ) {
            let e = eps(eps_choice);
            let expr = BoolExpr::from_dnf(&fun);
            for x in fun.universe().iter() {
                let oracle = brute_banzhaf(&expr, fun.universe(), x).unwrap();
                let oracle_rat = BigRational::from_integer(oracle.clone());
                let got = adaban(fun.clone(), x, &e, &Budget::default()).unwrap();
                let (lo, hi) = got.certified.expect("unlimited budget certifies");
                let one = BigRational::one();
                prop_assert!(lo >= (&one - e.value()) * &oracle_rat);
                prop_assert!(hi <= (&one + e.value()) * &oracle_rat);
                if oracle == BigInt::zero() {
                    prop_assert_eq!(&lo, &BigRational::zero());
                    prop_assert_eq!(&hi, &BigRational::zero());
                }
                // A budget-cut run must still bracket the oracle.
                let cut = Budget { max_expansions: Some(1), wall: None };
                let partial = adaban(fun.clone(), x, &e, &cut).unwrap();
                prop_assert!(partial.tracked_lower <= oracle);
                prop_assert!(oracle <= partial.tracked_upper);
            }
        }
    }
}
