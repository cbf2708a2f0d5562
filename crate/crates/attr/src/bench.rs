//! Algorithm comparison over a directory of lineage instances.
//!
//! Emits one CSV row per algorithm with success rate, runtime percentiles,
//! and (where the brute-force oracle is feasible) the mean power-normalized
//! ℓ₁ distance to the exact Banzhaf vector. Accuracy columns are
//! deterministic under fixed seeds; timing columns are not.

use std::collections::BTreeMap;
use std::io;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use banzhaf::adaban::{Approximator, Budget, Epsilon, LeafPolicy};
use banzhaf::baselines::{brute_banzhaf_all, mc_banzhaf_all};
use banzhaf::dtree::{compile_full_with_limits, CompileLimits};
use banzhaf::exact::exaban_all;
use banzhaf::lineage::VarId;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::instances::{self, Instance};
use crate::output::percentiles;
use crate::CliError;

#[derive(Debug, clap::Args)]
pub struct BenchArgs {
    /// Directory (or single file) of lineage instances.
    #[arg(long, value_name = "PATH")]
    pub lineage: PathBuf,
    /// Comma-separated list drawn from: exact, adaban, mc.
    #[arg(long, default_value = "exact,adaban")]
    pub algos: String,
    /// Relative error bound for adaban runs.
    #[arg(long, default_value = "0.1")]
    pub epsilon: String,
    #[arg(long, default_value_t = 10_000)]
    pub samples_per_var: u64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Reuse one sample stream per instance for all variables.
    #[arg(long)]
    pub shared_samples: bool,
    /// Per-instance wall clock limit in seconds.
    #[arg(long, default_value_t = 60.0)]
    pub timeout_secs: f64,
    #[arg(long)]
    pub max_expansions: Option<u64>,
    /// Compute the error column only for universes up to this size.
    #[arg(long, default_value_t = 20)]
    pub oracle_cap: usize,
    /// Worker threads (default: available cores).
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, value_enum, default_value_t = crate::LeafArg::Largest)]
    pub leaf_policy: crate::LeafArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BenchAlgo {
    Exact,
    Adaban,
    Mc,
}

impl BenchAlgo {
    fn name(self) -> &'static str {
        match self {
            BenchAlgo::Exact => "exact",
            BenchAlgo::Adaban => "adaban",
            BenchAlgo::Mc => "mc",
        }
    }
}

fn parse_algos(text: &str) -> Result<Vec<BenchAlgo>, CliError> {
    let mut out = Vec::new();
    for part in text.split(',') {
        let algo = match part.trim() {
            "exact" => BenchAlgo::Exact,
            "adaban" => BenchAlgo::Adaban,
            "mc" => BenchAlgo::Mc,
            other => {
                return Err(CliError::Config(format!(
                    "unknown algorithm {other:?}; choose from exact, adaban, mc"
                )))
            }
        };
        if !out.contains(&algo) {
            out.push(algo);
        }
    }
    if out.is_empty() {
        return Err(CliError::Config("--algos names no algorithm".to_string()));
    }
    Ok(out)
}

/// One algorithm run on one instance: done-in-contract flag, wall time, and
/// the value vector for error measurement.
struct Sample {
    ok: bool,
    wall_ms: f64,
    values: Option<BTreeMap<VarId, BigRational>>,
}

fn rational(b: &BigInt) -> BigRational {
    BigRational::from(b.clone())
}

fn run_one(inst: &Instance, algo: BenchAlgo, cfg: &Config) -> Sample {
    let started = Instant::now();
    let vars: Vec<VarId> = inst.function.universe().iter().collect();
    match algo {
        BenchAlgo::Exact => {
            let limits = CompileLimits {
                deadline: Some(started + cfg.timeout),
                max_steps: cfg.max_expansions,
            };
            match compile_full_with_limits(inst.function.clone(), limits) {
                Err(_) => Sample {
                    ok: false,
                    wall_ms: started.elapsed().as_secs_f64() * 1e3,
                    values: None,
                },
                Ok((tree, _)) => {
                    let results = exaban_all(&tree, &vars).expect("complete tree");
                    let values = results
                        .into_iter()
                        .map(|(x, r)| (x, rational(&r.banzhaf)))
                        .collect();
                    Sample {
                        ok: true,
                        wall_ms: started.elapsed().as_secs_f64() * 1e3,
                        values: Some(values),
                    }
                }
            }
        }
        BenchAlgo::Adaban => {
            let mut approx = Approximator::new(inst.function.clone(), cfg.policy);
            let mut values = BTreeMap::new();
            let mut all_certified = true;
            for &x in &vars {
                let budget = Budget {
                    max_expansions: cfg.max_expansions,
                    wall: Some(cfg.timeout.saturating_sub(started.elapsed())),
                };
                let interval = approx
                    .approximate(x, &cfg.epsilon, &budget)
                    .expect("universe variable");
                let value = match &interval.certified {
                    Some((lo, hi)) => (lo + hi) / BigRational::from(BigInt::from(2)),
                    None => {
                        all_certified = false;
                        (rational(&interval.tracked_lower) + rational(&interval.tracked_upper))
                            / BigRational::from(BigInt::from(2))
                    }
                };
                values.insert(x, value);
            }
            Sample {
                ok: all_certified,
                wall_ms: started.elapsed().as_secs_f64() * 1e3,
                values: Some(values),
            }
        }
        BenchAlgo::Mc => {
            match mc_banzhaf_all(
                &inst.function,
                &vars,
                cfg.samples_per_var,
                cfg.seed,
                cfg.shared_samples,
            ) {
                Err(_) => Sample {
                    ok: false,
                    wall_ms: started.elapsed().as_secs_f64() * 1e3,
                    values: None,
                },
                Ok(map) => Sample {
                    ok: true,
                    wall_ms: started.elapsed().as_secs_f64() * 1e3,
                    values: Some(map.into_iter().map(|(x, e)| (x, e.estimate)).collect()),
                },
            }
        }
    }
}

/// Power-normalized ℓ₁ distance: Σ_x |v_x − B_x| / 2^{n−1}.
fn l1_error(values: &BTreeMap<VarId, BigRational>, oracle: &BTreeMap<VarId, BigInt>) -> f64 {
    let mut sum = BigRational::zero();
    for (x, truth) in oracle {
        let v = values.get(x).cloned().unwrap_or_else(BigRational::zero);
        sum += (v - rational(truth)).abs();
    }
    let n = oracle.len();
    let scale = BigRational::from(BigInt::one() << n.saturating_sub(1));
    (sum / scale).to_f64().unwrap_or(f64::NAN)
}

struct Config {
    epsilon: Epsilon,
    samples_per_var: u64,
    seed: u64,
    shared_samples: bool,
    timeout: Duration,
    max_expansions: Option<u64>,
    policy: LeafPolicy,
}

pub fn run(args: BenchArgs) -> Result<ExitCode, CliError> {
    let instances = instances::load_lineage_path(&args.lineage)?;
    let algos = parse_algos(&args.algos)?;
    let cfg = Config {
        epsilon: crate::parse_epsilon_text(&args.epsilon)?,
        samples_per_var: args.samples_per_var,
        seed: args.seed,
        shared_samples: args.shared_samples,
        timeout: crate::parse_timeout(args.timeout_secs)?,
        max_expansions: args.max_expansions,
        policy: args.leaf_policy.into(),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.workers.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;

    // Oracle vectors for every instance within the cap, shared by all rows.
    let oracles: Vec<Option<BTreeMap<VarId, BigInt>>> = pool.install(|| {
        instances
            .par_iter()
            .map(|inst| {
                if inst.function.universe().len() > args.oracle_cap {
                    return None;
                }
                brute_banzhaf_all(&inst.function).ok().map(|(values, _)| values)
            })
            .collect()
    });

    let mut wtr = csv::Writer::from_writer(io::stdout());
    wtr.write_record([
        "algorithm",
        "instances",
        "succeeded",
        "success_rate",
        "mean_ms",
        "p50_ms",
        "p75_ms",
        "p90_ms",
        "p95_ms",
        "p99_ms",
        "max_ms",
        "oracle_instances",
        "mean_l1_error",
    ])
    .map_err(|e| CliError::Config(e.to_string()))?;

    for algo in algos {
        let samples: Vec<Sample> = pool.install(|| {
            instances
                .par_iter()
                .map(|inst| run_one(inst, algo, &cfg))
                .collect()
        });
        let succeeded = samples.iter().filter(|s| s.ok).count();
        let walls: Vec<f64> = samples.iter().map(|s| s.wall_ms).collect();
        let p = percentiles(&walls);
        let errors: Vec<f64> = samples
            .iter()
            .zip(&oracles)
            .filter_map(|(s, oracle)| match (&s.values, oracle) {
                (Some(values), Some(truth)) if s.ok => Some(l1_error(values, truth)),
                _ => None,
            })
            .collect();
        let mean_error = if errors.is_empty() {
            String::new()
        } else {
            format!("{}", errors.iter().sum::<f64>() / errors.len() as f64)
        };
        wtr.write_record([
            algo.name().to_string(),
            samples.len().to_string(),
            succeeded.to_string(),
            format!("{:.4}", succeeded as f64 / samples.len().max(1) as f64),
            format!("{:.3}", p.mean),
            format!("{:.3}", p.p50),
            format!("{:.3}", p.p75),
            format!("{:.3}", p.p90),
            format!("{:.3}", p.p95),
            format!("{:.3}", p.p99),
            format!("{:.3}", p.max),
            errors.len().to_string(),
            mean_error,
        ])
        .map_err(|e| CliError::Config(e.to_string()))?;
    }
    wtr.flush().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(ExitCode::SUCCESS)
}
