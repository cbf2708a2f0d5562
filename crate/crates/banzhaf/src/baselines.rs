//! Ground-truth and competitor implementations: brute-force Banzhaf over general
//! Boolean expressions, critical-set-count vectors, brute-force Shapley, and the
//! seeded Monte Carlo estimator.
//!
//! Everything here is a verification oracle or a comparison baseline; none of it
//! is on the fast path. All operations are pure given (inputs, seed).

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::lineage::{DnfFunction, VarId, VarSet};

/// Largest universe the exhaustive oracles will enumerate.
pub const BRUTE_FORCE_VAR_CAP: usize = 25;

/// Name of the pseudo-random generator, recorded in CLI output for reproducibility.
pub const MC_RNG_ALGORITHM: &str = "chacha8";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BruteForceError {
    #[error("universe of {vars} variables exceeds the brute-force cap of {cap}")]
    UniverseTooLarge { vars: usize, cap: usize },
    #[error("variable {0} is not in the universe")]
    NotInUniverse(VarId),
}

/// General Boolean expression; unlike [`DnfFunction`] this admits negation, so the
/// oracle can check functions outside the positive DNF fragment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoolExpr {
    Const(bool),
    Var(VarId),
    Not(Box<BoolExpr>),
    And(Vec<BoolExpr>),
    Or(Vec<BoolExpr>),
}

impl BoolExpr {
    pub fn var(v: VarId) -> Self {
        BoolExpr::Var(v)
    }

    pub fn and(es: Vec<BoolExpr>) -> Self {
        BoolExpr::And(es)
    }

    pub fn or(es: Vec<BoolExpr>) -> Self {
        BoolExpr::Or(es)
    }

    pub fn from_dnf(f: &DnfFunction) -> Self {
        match f.as_constant() {
            Some(value) => BoolExpr::Const(value),
            None => BoolExpr::Or(
                f.clauses()
                    .iter()
                    .map(|c| BoolExpr::And(c.iter().map(BoolExpr::Var).collect()))
                    .collect(),
            ),
        }
    }

    pub fn eval<F: Fn(VarId) -> bool>(&self, truth: &F) -> bool {
        match self {
            BoolExpr::Const(b) => *b,
            BoolExpr::Var(v) => truth(*v),
            BoolExpr::Not(e) => !e.eval(truth),
            BoolExpr::And(es) => es.iter().all(|e| e.eval(truth)),
            BoolExpr::Or(es) => es.iter().any(|e| e.eval(truth)),
        }
    }
}

impl std::ops::Not for BoolExpr {
    type Output = BoolExpr;

    fn not(self) -> BoolExpr {
        BoolExpr::Not(Box::new(self))
    }
}

fn check_cap(universe: &VarSet) -> Result<(), BruteForceError> {
    if universe.len() > BRUTE_FORCE_VAR_CAP {
        return Err(BruteForceError::UniverseTooLarge {
            vars: universe.len(),
            cap: BRUTE_FORCE_VAR_CAP,
        });
    }
    Ok(())
}

fn eval_mask(expr: &BoolExpr, universe: &VarSet, mask: u32) -> bool {
    expr.eval(&|v| {
        universe
            .position(v)
            .map(|p| mask & (1u32 << p) != 0)
            .unwrap_or(false)
    })
}

/// Banzhaf value by direct enumeration: Σ over Y ⊆ X∖{x} of f[Y∪{x}] − f[Y].
pub fn brute_banzhaf(
    expr: &BoolExpr,
    universe: &VarSet,
    x: VarId,
) -> Result<BigInt, BruteForceError> {
    check_cap(universe)?;
    let xpos = universe
        .position(x)
        .ok_or(BruteForceError::NotInUniverse(x))?;
    let n = universe.len();
    let xbit = 1u32 << xpos;
    let low = xbit - 1;
    let mut sum: i64 = 0;
    for y in 0u32..(1u32 << (n - 1)) {
        // Spread the n−1 free bits around position xpos.
        let mask = ((y & !low) << 1) | (y & low);
        let with = i64::from(eval_mask(expr, universe, mask | xbit));
        let without = i64::from(eval_mask(expr, universe, mask));
        sum += with - without;
    }
    Ok(BigInt::from(sum))
}

/// Model count of `expr` over the universe by direct enumeration.
pub fn brute_model_count(expr: &BoolExpr, universe: &VarSet) -> Result<BigUint, BruteForceError> {
    check_cap(universe)?;
    let n = universe.len();
    let mut count: u64 = 0;
    for mask in 0u64..(1u64 << n) {
        if eval_mask(expr, universe, mask as u32) {
            count += 1;
        }
    }
    Ok(BigUint::from(count))
}

/// Clause bitmasks over universe positions, for fast enumeration of a DNF.
struct MaskedDnf {
    constant: Option<bool>,
    clause_masks: Vec<u32>,
}

impl MaskedDnf {
    fn compile(f: &DnfFunction) -> Self {
        let universe = f.universe();
        let clause_masks = f
            .clauses()
            .iter()
            .map(|c| {
                c.iter().fold(0u32, |m, v| {
                    m | (1u32 << universe.position(v).expect("clause var in universe"))
                })
            })
            .collect();
        MaskedDnf {
            constant: f.as_constant(),
            clause_masks,
        }
    }

    #[inline]
    fn eval(&self, mask: u32) -> bool {
        match self.constant {
            Some(b) => b,
            None => self.clause_masks.iter().any(|&c| c & !mask == 0),
        }
    }
}

/// Banzhaf values for every universe variable plus the model count, in one pass
/// over all 2^n assignments. Uses #f[x:=1] − #f[x:=0] = 2·#{models with x} − #f.
pub fn brute_banzhaf_all(
    f: &DnfFunction,
) -> Result<(BTreeMap<VarId, BigInt>, BigUint), BruteForceError> {
    check_cap(f.universe())?;
    let n = f.universe().len();
    let masked = MaskedDnf::compile(f);
    let mut total: i64 = 0;
    let mut with_var = vec![0i64; n];
    for mask in 0u64..(1u64 << n) {
        let mask = mask as u32;
        if masked.eval(mask) {
            total += 1;
            let mut bits = mask;
            while bits != 0 {
                let p = bits.trailing_zeros() as usize;
                with_var[p] += 1;
                bits &= bits - 1;
            }
        }
    }
    let values = f
        .universe()
        .iter()
        .enumerate()
        .map(|(p, v)| (v, BigInt::from(2 * with_var[p] - total)))
        .collect();
    Ok((values, BigUint::from(total as u64)))
}

/// Critical-set counts by size: counts[k] = #{Y ⊆ X∖{x} : |Y| = k, f[Y] = 0, f[Y∪{x}] = 1}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CriticalVector {
    pub counts: Vec<BigUint>,
}

impl CriticalVector {
    pub fn total(&self) -> BigUint {
        self.counts.iter().sum()
    }
}

pub fn critical_vector(f: &DnfFunction, x: VarId) -> Result<CriticalVector, BruteForceError> {
    check_cap(f.universe())?;
    let xpos = f
        .universe()
        .position(x)
        .ok_or(BruteForceError::NotInUniverse(x))?;
    let n = f.universe().len();
    let masked = MaskedDnf::compile(f);
    let xbit = 1u32 << xpos;
    let low = xbit - 1;
    let mut counts = vec![0u64; n];
    for y in 0u64..(1u64 << (n - 1)) {
        let y = y as u32;
        let mask = ((y & !low) << 1) | (y & low);
        if !masked.eval(mask) && masked.eval(mask | xbit) {
            counts[y.count_ones() as usize] += 1;
        }
    }
    Ok(CriticalVector {
        counts: counts.into_iter().map(BigUint::from).collect(),
    })
}

/// Shapley value as Σ_k c_k · counts[k] with c_k = k!(n−1−k)!/n!, exact rationals.
pub fn brute_shapley(f: &DnfFunction, x: VarId) -> Result<BigRational, BruteForceError> {
    let critical = critical_vector(f, x)?;
    let n = f.universe().len();
    let mut factorial = vec![BigUint::one(); n + 1];
    for i in 1..=n {
        factorial[i] = &factorial[i - 1] * BigUint::from(i as u64);
    }
    let mut numerator = BigUint::zero();
    for (k, count) in critical.counts.iter().enumerate() {
        numerator += count * &factorial[k] * &factorial[n - 1 - k];
    }
    Ok(BigRational::new(
        BigInt::from(numerator),
        BigInt::from(factorial[n].clone()),
    ))
}

/// Monte Carlo Banzhaf estimate with its provenance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct McEstimate {
    pub estimate: BigRational,
    pub samples: u64,
    pub seed: u64,
}

/// Clause masks in 64-bit words, handling universes of any size.
struct WideMaskedDnf {
    constant: Option<bool>,
    words: usize,
    clauses: Vec<Vec<u64>>,
}

impl WideMaskedDnf {
    fn compile(f: &DnfFunction) -> Self {
        let universe = f.universe();
        let words = universe.len().div_ceil(64);
        let clauses = f
            .clauses()
            .iter()
            .map(|c| {
                let mut m = vec![0u64; words];
                for v in c.iter() {
                    let p = universe.position(v).expect("clause var in universe");
                    m[p / 64] |= 1u64 << (p % 64);
                }
                m
            })
            .collect();
        WideMaskedDnf {
            constant: f.as_constant(),
            words,
            clauses,
        }
    }

    #[inline]
    fn eval(&self, mask: &[u64]) -> bool {
        match self.constant {
            Some(b) => b,
            None => self
                .clauses
                .iter()
                .any(|c| c.iter().zip(mask).all(|(&cw, &mw)| mw & cw == cw)),
        }
    }
}

// Stream 0 is reserved for the shared-assignment mode; per-variable streams are
// offset by 1 so they never collide with it.
fn var_stream_rng(seed: u64, x: VarId) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1 + u64::from(x.0));
    rng
}

fn shared_stream_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    rng
}

fn sample_mask(rng: &mut ChaCha8Rng, words: usize) -> Vec<u64> {
    (0..words).map(|_| rng.next_u64()).collect()
}

fn scaled_estimate(sum: u64, samples: u64, n: usize) -> BigRational {
    let scale = BigInt::from(BigUint::one() << (n - 1));
    BigRational::new(scale * BigInt::from(sum), BigInt::from(samples))
}

/// Monte Carlo estimate of the Banzhaf value: m uniform subsets Y ⊆ X∖{x},
/// averaged flips scaled by 2^{n−1}. Deterministic given (seed, m); each
/// variable draws from its own generator stream derived from the base seed.
pub fn mc_banzhaf(
    f: &DnfFunction,
    x: VarId,
    samples_per_var: u64,
    seed: u64,
) -> Result<McEstimate, BruteForceError> {
    let universe = f.universe();
    let xpos = universe
        .position(x)
        .ok_or(BruteForceError::NotInUniverse(x))?;
    assert!(samples_per_var >= 1, "samples_per_var must be at least 1");
    let masked = WideMaskedDnf::compile(f);
    let mut rng = var_stream_rng(seed, x);
    let sum = (0..samples_per_var)
        .map(|_| {
            let mut mask = sample_mask(&mut rng, masked.words);
            mask[xpos / 64] &= !(1u64 << (xpos % 64));
            let without = masked.eval(&mask);
            mask[xpos / 64] |= 1u64 << (xpos % 64);
            let with = masked.eval(&mask);
            // f is positive, so the flip difference is 0 or 1.
            u64::from(with && !without)
        })
        .sum();
    Ok(McEstimate {
        estimate: scaled_estimate(sum, samples_per_var, universe.len()),
        samples: samples_per_var,
        seed,
    })
}

/// Estimates for many variables. `shared_samples` reuses one assignment stream
/// across all variables (total-budget reading); the default draws an independent
/// stream per variable.
pub fn mc_banzhaf_all(
    f: &DnfFunction,
    xs: &[VarId],
    samples_per_var: u64,
    seed: u64,
    shared_samples: bool,
) -> Result<BTreeMap<VarId, McEstimate>, BruteForceError> {
    if !shared_samples {
        return xs
            .iter()
            .map(|&x| mc_banzhaf(f, x, samples_per_var, seed).map(|e| (x, e)))
            .collect();
    }
    let universe = f.universe();
    let mut positions = Vec::with_capacity(xs.len());
    for &x in xs {
        positions.push(
            universe
                .position(x)
                .ok_or(BruteForceError::NotInUniverse(x))?,
        );
    }
    let masked = WideMaskedDnf::compile(f);
    let mut rng = shared_stream_rng(seed);
    let mut sums = vec![0u64; xs.len()];
    for _ in 0..samples_per_var {
        let base = sample_mask(&mut rng, masked.words);
        for (i, &p) in positions.iter().enumerate() {
            let mut mask = base.clone();
            mask[p / 64] &= !(1u64 << (p % 64));
            let without = masked.eval(&mask);
            mask[p / 64] |= 1u64 << (p % 64);
            let with = masked.eval(&mask);
            sums[i] += u64::from(with && !without);
        }
    }
    Ok(xs
        .iter()
        .zip(sums)
        .map(|(&x, sum)| {
            (
                x,
                McEstimate {
                    estimate: scaled_estimate(sum, samples_per_var, universe.len()),
                    samples: samples_per_var,
                    seed,
                },
            )
        })
        .collect())
}

/// Naive ranking baseline: variables ordered by clause-occurrence count
/// (descending, then by id). A labeled strawman for benchmark comparisons only;
/// it does not approximate any attribution semantics.
pub fn clause_frequency_ranking(f: &DnfFunction) -> Vec<(VarId, usize)> {
    let mut counts: BTreeMap<VarId, usize> = f.universe().iter().map(|v| (v, 0)).collect();
    for clause in f.clauses() {
        for v in clause.iter() {
            *counts.get_mut(&v).expect("clause var in universe") += 1;
        }
    }
    let mut out: Vec<(VarId, usize)> = counts.into_iter().collect();
    out.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    out
}
