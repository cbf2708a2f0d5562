//! Per-instance execution of each algorithm and the batch driver.

use std::time::{Duration, Instant};

use banzhaf::adaban::{Approximator, ApproxInterval, Budget, Epsilon, LeafPolicy};
use banzhaf::baselines::{brute_banzhaf_all, mc_banzhaf_all, McEstimate};
use banzhaf::bounds::BoundsEngine;
use banzhaf::dtree::{compile_full_with_limits, CompileLimits, DTree};
use banzhaf::exact::exaban_all;
use banzhaf::lineage::VarId;
use banzhaf::ranking::{rank_eps, topk_certain, topk_eps, RankOptions, RankOutcome};
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::instances::Instance;
use crate::output::{
    rational_to_f64, CertifiedOut, InstanceOut, Record, Status, TraceRow,
};

#[derive(Debug, Clone)]
pub enum Algo {
    Exact,
    Adaban { eps: Epsilon },
    TopK { k: usize, eps: Option<Epsilon> },
    Rank { eps: Epsilon },
    Mc { samples_per_var: u64, seed: u64, shared: bool },
    Oracle,
}

impl Algo {
    pub fn label(&self) -> &'static str {
        match self {
            Algo::Exact => "exact",
            Algo::Adaban { .. } => "adaban",
            Algo::TopK { .. } => "ichiban-topk",
            Algo::Rank { .. } => "ichiban-rank",
            Algo::Mc { .. } => "mc",
            Algo::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOpts {
    pub algo: Algo,
    pub timeout: Duration,
    pub max_expansions: Option<u64>,
    pub policy: LeafPolicy,
    pub var: Option<String>,
    pub oracle_cap: usize,
    pub want_trace: bool,
    pub want_dump: bool,
}

/// Result of one instance: the serializable part plus side artifacts.
pub struct InstanceRun {
    pub out: InstanceOut,
    pub trace: Vec<TraceRow>,
    pub dump: Option<String>,
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

/// The variables to report on: the whole universe in id order, or the one
/// named by `--var`.
fn targets(inst: &Instance, var: &Option<String>) -> Result<Vec<VarId>, String> {
    match var {
        None => Ok(inst.function.universe().iter().collect()),
        Some(name) => match inst.vars.id(name) {
            Some(id) => Ok(vec![id]),
            None => Err(format!("variable {name:?} is not known to this instance")),
        },
    }
}

/// Renders the tree with per-node bound quads (L_b, L_#, U_b, U_#) for `x`.
fn render_tree(tree: &DTree, inst: &Instance, x: Option<VarId>) -> String {
    let header = format!("== instance {} ==\n", inst.label);
    let body = match x {
        None => tree.render(&inst.vars, |_| None),
        Some(x) => {
            let mut engine = BoundsEngine::new();
            engine.var_bounds(tree, x);
            tree.render(&inst.vars, |id| {
                engine.node_quad(id, x).map(|q| {
                    format!(
                        "({}, {}, {}, {})",
                        q.banzhaf_lower, q.count_lower, q.banzhaf_upper, q.count_upper
                    )
                })
            })
        }
    };
    header + &body
}

fn error_out(inst: &Instance, status: Status, message: String, wall: Duration) -> InstanceRun {
    InstanceRun {
        out: InstanceOut {
            instance: inst.label.clone(),
            status,
            error: Some(message),
            certain: None,
            wall_ms: ms(wall),
            records: Vec::new(),
        },
        trace: Vec::new(),
        dump: None,
    }
}

fn ok_out(
    inst: &Instance,
    records: Vec<Record>,
    certain: Option<bool>,
    wall: Duration,
    trace: Vec<TraceRow>,
    dump: Option<String>,
) -> InstanceRun {
    InstanceRun {
        out: InstanceOut {
            instance: inst.label.clone(),
            status: Status::Ok,
            error: None,
            certain,
            wall_ms: ms(wall),
            records,
        },
        trace,
        dump,
    }
}

pub fn run_instance(inst: &Instance, opts: &RunOpts) -> InstanceRun {
    let started = Instant::now();
    let targets = match targets(inst, &opts.var) {
        Ok(t) => t,
        Err(e) => return error_out(inst, Status::Error, e, started.elapsed()),
    };
    match &opts.algo {
        Algo::Exact => run_exact(inst, opts, &targets, started),
        Algo::Adaban { eps } => run_adaban(inst, opts, &targets, eps, started),
        Algo::TopK { .. } | Algo::Rank { .. } => run_ranking(inst, opts, &targets, started),
        Algo::Mc {
            samples_per_var,
            seed,
            shared,
        } => run_mc(inst, &targets, *samples_per_var, *seed, *shared, started),
        Algo::Oracle => run_oracle(inst, opts, &targets, started),
    }
}

fn run_exact(
    inst: &Instance,
    opts: &RunOpts,
    targets: &[VarId],
    started: Instant,
) -> InstanceRun {
    let limits = CompileLimits {
        deadline: Some(started + opts.timeout),
        max_steps: opts.max_expansions,
    };
    let (tree, stats) = match compile_full_with_limits(inst.function.clone(), limits) {
        Ok(done) => done,
        Err(stop) => return error_out(inst, Status::Timeout, stop.to_string(), started.elapsed()),
    };
    let in_universe: Vec<VarId> = targets
        .iter()
        .copied()
        .filter(|&x| inst.function.universe().contains(x))
        .collect();
    // The model count is needed even when every target is outside the
    // universe, so probe one universe variable in that case.
    let mut probe = in_universe.clone();
    if probe.is_empty() {
        if let Some(x) = inst.function.universe().iter().next() {
            probe.push(x);
        }
    }
    let results = exaban_all(&tree, &probe).expect("complete tree over universe variables");
    let model_count = results
        .values()
        .next()
        .map(|r| r.model_count.clone())
        .unwrap_or_else(|| {
            // Empty universe: the function is a constant.
            if inst.function.as_constant() == Some(true) {
                BigUint::one()
            } else {
                BigUint::zero()
            }
        });
    let wall = started.elapsed();
    let records = targets
        .iter()
        .map(|&x| {
            let banzhaf = results
                .get(&x)
                .map(|r| r.banzhaf.to_string())
                .unwrap_or_else(|| "0".to_string());
            Record {
                algorithm: "exact",
                variable: inst.vars.name(x).to_string(),
                banzhaf: Some(banzhaf),
                model_count: Some(model_count.to_string()),
                certified: true,
                expansions: stats.steps,
                shannon_expansions: stats.shannon_steps,
                wall_ms: ms(wall),
                ..Record::default()
            }
        })
        .collect();
    let dump = opts
        .want_dump
        .then(|| render_tree(&tree, inst, probe.first().copied()));
    ok_out(inst, records, None, wall, Vec::new(), dump)
}

fn interval_record(
    algorithm: &'static str,
    variable: String,
    interval: &ApproxInterval,
    eps: &Epsilon,
) -> Record {
    Record {
        algorithm,
        variable,
        lower: Some(interval.tracked_lower.to_string()),
        upper: Some(interval.tracked_upper.to_string()),
        certified_interval: interval
            .certified
            .as_ref()
            .map(|(lo, hi)| CertifiedOut::new(lo, hi)),
        certified: interval.certified.is_some(),
        expansions: interval.expansions,
        shannon_expansions: interval.shannon_expansions,
        wall_ms: ms(interval.elapsed),
        epsilon: Some(eps.value().to_string()),
        ..Record::default()
    }
}

fn run_adaban(
    inst: &Instance,
    opts: &RunOpts,
    targets: &[VarId],
    eps: &Epsilon,
    started: Instant,
) -> InstanceRun {
    let mut approx = Approximator::new(inst.function.clone(), opts.policy);
    let mut records = Vec::with_capacity(targets.len());
    let mut trace = Vec::new();
    for &x in targets {
        let name = inst.vars.name(x).to_string();
        if !inst.function.universe().contains(x) {
            records.push(interval_record(
                "adaban",
                name,
                &ApproxInterval::exact_zero(),
                eps,
            ));
            continue;
        }
        let budget = Budget {
            max_expansions: opts.max_expansions,
            wall: Some(opts.timeout.saturating_sub(started.elapsed())),
        };
        let want_trace = opts.want_trace;
        let label = &inst.label;
        let interval = approx
            .approximate_traced(x, eps, &budget, |p| {
                if want_trace {
                    trace.push(TraceRow {
                        instance: label.clone(),
                        variable: name.clone(),
                        step: p.expansions,
                        lower: p.lower.to_string(),
                        upper: p.upper.to_string(),
                        elapsed_ms: ms(p.elapsed),
                    });
                }
            })
            .expect("target is in the universe");
        records.push(interval_record("adaban", name, &interval, eps));
    }
    let wall = started.elapsed();
    let dump = opts
        .want_dump
        .then(|| render_tree(approx.tree(), inst, targets.first().copied()));
    ok_out(inst, records, None, wall, trace, dump)
}

fn run_ranking(
    inst: &Instance,
    opts: &RunOpts,
    targets: &[VarId],
    started: Instant,
) -> InstanceRun {
    let algorithm = opts.algo.label();
    let rank_opts = RankOptions {
        budget: Budget {
            max_expansions: opts.max_expansions,
            wall: Some(opts.timeout),
        },
        policy: opts.policy,
        candidates: opts.var.is_some().then(|| targets.to_vec()),
        ..RankOptions::default()
    };
    let outcome: Result<RankOutcome, _> = match &opts.algo {
        Algo::TopK { k, eps: None } => topk_certain(inst.function.clone(), *k, &rank_opts),
        Algo::TopK { k, eps: Some(eps) } => topk_eps(inst.function.clone(), *k, eps, &rank_opts),
        Algo::Rank { eps } => rank_eps(inst.function.clone(), eps, &rank_opts),
        _ => unreachable!("ranking entry point"),
    };
    let out = match outcome {
        Ok(out) => out,
        Err(e) => return error_out(inst, Status::Error, e.to_string(), started.elapsed()),
    };
    let wall = started.elapsed();
    let (k, eps) = match &opts.algo {
        Algo::TopK { k, eps } => (Some(*k), eps.as_ref()),
        Algo::Rank { eps } => (None, Some(eps)),
        _ => unreachable!("ranking entry point"),
    };
    let records: Vec<Record> = out
        .entries
        .iter()
        .map(|e| Record {
            algorithm,
            variable: inst.vars.name(e.variable).to_string(),
            lower: Some(e.lower.to_string()),
            upper: Some(e.upper.to_string()),
            certified: e.certified,
            expansions: out.expansions,
            shannon_expansions: out.shannon_expansions,
            wall_ms: ms(wall),
            epsilon: eps.map(|e| e.value().to_string()),
            k,
            rank: Some(e.rank),
            selected: Some(e.selected),
            tied: Some(e.tied),
            pruned_at: e.pruned_at,
            ..Record::default()
        })
        .collect();
    let trace = if opts.want_trace {
        out.entries
            .iter()
            .map(|e| TraceRow {
                instance: inst.label.clone(),
                variable: inst.vars.name(e.variable).to_string(),
                step: out.expansions,
                lower: e.lower.to_string(),
                upper: e.upper.to_string(),
                elapsed_ms: ms(wall),
            })
            .collect()
    } else {
        Vec::new()
    };
    ok_out(inst, records, Some(out.certain), wall, trace, None)
}

fn estimate_record(variable: String, est: &McEstimate) -> Record {
    Record {
        algorithm: "mc",
        variable,
        estimate_rational: Some(est.estimate.to_string()),
        estimate: Some(rational_to_f64(&est.estimate)),
        samples_per_var: Some(est.samples),
        seed: Some(est.seed),
        rng: Some("chacha8"),
        ..Record::default()
    }
}

fn run_mc(
    inst: &Instance,
    targets: &[VarId],
    samples_per_var: u64,
    seed: u64,
    shared: bool,
    started: Instant,
) -> InstanceRun {
    let in_universe: Vec<VarId> = targets
        .iter()
        .copied()
        .filter(|&x| inst.function.universe().contains(x))
        .collect();
    let estimates =
        match mc_banzhaf_all(&inst.function, &in_universe, samples_per_var, seed, shared) {
            Ok(map) => map,
            Err(e) => return error_out(inst, Status::Error, e.to_string(), started.elapsed()),
        };
    let wall = started.elapsed();
    let records = targets
        .iter()
        .map(|&x| {
            let name = inst.vars.name(x).to_string();
            let mut record = match estimates.get(&x) {
                Some(est) => estimate_record(name, est),
                None => estimate_record(
                    name,
                    &McEstimate {
                        estimate: BigRational::zero(),
                        samples: samples_per_var,
                        seed,
                    },
                ),
            };
            record.wall_ms = ms(wall);
            record
        })
        .collect();
    ok_out(inst, records, None, wall, Vec::new(), None)
}

fn run_oracle(
    inst: &Instance,
    opts: &RunOpts,
    targets: &[VarId],
    started: Instant,
) -> InstanceRun {
    let n = inst.function.universe().len();
    if n > opts.oracle_cap {
        return error_out(
            inst,
            Status::Error,
            format!("universe has {n} variables; the oracle cap is {}", opts.oracle_cap),
            started.elapsed(),
        );
    }
    let (values, model_count) = match brute_banzhaf_all(&inst.function) {
        Ok(done) => done,
        Err(e) => return error_out(inst, Status::Error, e.to_string(), started.elapsed()),
    };
    let wall = started.elapsed();
    let records = targets
        .iter()
        .map(|&x| Record {
            algorithm: "oracle",
            variable: inst.vars.name(x).to_string(),
            banzhaf: Some(
                values
                    .get(&x)
                    .map(|b| b.to_string())
                    .unwrap_or_else(|| "0".to_string()),
            ),
            model_count: Some(model_count.to_string()),
            certified: true,
            wall_ms: ms(wall),
            ..Record::default()
        })
        .collect();
    ok_out(inst, records, None, wall, Vec::new(), None)
}

/// Runs all instances on a bounded worker pool, preserving input order.
pub fn run_batch(
    instances: &[Instance],
    opts: &RunOpts,
    workers: Option<usize>,
) -> Result<Vec<InstanceRun>, String> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| e.to_string())?;
    Ok(pool.install(|| {
        instances
            .par_iter()
            .map(|inst| run_instance(inst, opts))
            .collect()
    }))
}
