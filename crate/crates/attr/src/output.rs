//! Output records, summary statistics, and the JSON/CSV writers.
//!
//! Exact integers travel as decimal strings so arbitrary precision survives
//! serialization; certified endpoints carry both the exact rational string
//! and a double for plotting.

use std::io::{self, Write};
use std::path::Path;

use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Timeout,
    Error,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Timeout => "timeout",
            Status::Error => "error",
        }
    }
}

/// A certified interval: both endpoints as exact rationals and as doubles.
#[derive(Debug, Clone, Serialize)]
pub struct CertifiedOut {
    pub lower_rational: String,
    pub lower: f64,
    pub upper_rational: String,
    pub upper: f64,
}

impl CertifiedOut {
    pub fn new(lo: &BigRational, hi: &BigRational) -> Self {
        CertifiedOut {
            lower_rational: lo.to_string(),
            lower: rational_to_f64(lo),
            upper_rational: hi.to_string(),
            upper: rational_to_f64(hi),
        }
    }
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// One (variable, algorithm) result. Integer-valued fields are decimal
/// strings; fields that do not apply to the algorithm are omitted.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Record {
    pub algorithm: &'static str,
    pub variable: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub banzhaf: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model_count: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certified_interval: Option<CertifiedOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate_rational: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate: Option<f64>,
    pub certified: bool,
    pub expansions: u64,
    pub shannon_expansions: u64,
    pub wall_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples_per_var: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rng: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selected: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tied: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pruned_at: Option<u64>,
}

/// All results for one instance (one lineage function).
#[derive(Debug, Clone, Serialize)]
pub struct InstanceOut {
    pub instance: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Ranking runs: whether the reported order/selection is proven.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certain: Option<bool>,
    pub wall_ms: f64,
    pub records: Vec<Record>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Percentiles {
    pub mean: f64,
    pub p50: f64,
    pub p75: f64,
    pub p90: f64,
    pub p95: f64,
    pub p99: f64,
    pub max: f64,
}

/// Nearest-rank percentiles; zeros for an empty sample set.
pub fn percentiles(samples: &[f64]) -> Percentiles {
    if samples.is_empty() {
        return Percentiles {
            mean: 0.0,
            p50: 0.0,
            p75: 0.0,
            p90: 0.0,
            p95: 0.0,
            p99: 0.0,
            max: 0.0,
        };
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let rank = |q: f64| sorted[((q * n as f64).ceil() as usize).clamp(1, n) - 1];
    Percentiles {
        mean: sorted.iter().sum::<f64>() / n as f64,
        p50: rank(0.50),
        p75: rank(0.75),
        p90: rank(0.90),
        p95: rank(0.95),
        p99: rank(0.99),
        max: sorted[n - 1],
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub instances: usize,
    pub succeeded: usize,
    pub success_rate: f64,
    pub wall_ms: Percentiles,
}

pub fn summarize(instances: &[InstanceOut]) -> Summary {
    let succeeded = instances
        .iter()
        .filter(|i| i.status == Status::Ok)
        .count();
    let walls: Vec<f64> = instances.iter().map(|i| i.wall_ms).collect();
    Summary {
        instances: instances.len(),
        succeeded,
        success_rate: if instances.is_empty() {
            1.0
        } else {
            succeeded as f64 / instances.len() as f64
        },
        wall_ms: percentiles(&walls),
    }
}

#[derive(Debug, Serialize)]
pub struct Output {
    pub instances: Vec<InstanceOut>,
    pub summary: Summary,
}

pub fn write_json<W: Write>(mut w: W, out: &Output) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut w, out)?;
    writeln!(w)
}

const CSV_HEADER: &[&str] = &[
    "instance",
    "status",
    "algorithm",
    "variable",
    "banzhaf",
    "model_count",
    "lower",
    "upper",
    "certified_lower_rational",
    "certified_lower",
    "certified_upper_rational",
    "certified_upper",
    "estimate_rational",
    "estimate",
    "certified",
    "expansions",
    "shannon_expansions",
    "wall_ms",
    "epsilon",
    "k",
    "samples_per_var",
    "seed",
    "rng",
    "rank",
    "selected",
    "tied",
    "error",
];

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(T::to_string).unwrap_or_default()
}

pub fn write_csv<W: Write>(w: W, out: &Output) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(CSV_HEADER)?;
    for inst in &out.instances {
        if inst.records.is_empty() {
            let mut row = vec![inst.instance.clone(), inst.status.as_str().to_string()];
            row.resize(CSV_HEADER.len() - 1, String::new());
            row.push(opt(&inst.error));
            wtr.write_record(&row)?;
            continue;
        }
        for r in &inst.records {
            let cert = r.certified_interval.as_ref();
            wtr.write_record([
                inst.instance.clone(),
                inst.status.as_str().to_string(),
                r.algorithm.to_string(),
                r.variable.clone(),
                opt(&r.banzhaf),
                opt(&r.model_count),
                opt(&r.lower),
                opt(&r.upper),
                cert.map(|c| c.lower_rational.clone()).unwrap_or_default(),
                cert.map(|c| c.lower.to_string()).unwrap_or_default(),
                cert.map(|c| c.upper_rational.clone()).unwrap_or_default(),
                cert.map(|c| c.upper.to_string()).unwrap_or_default(),
                opt(&r.estimate_rational),
                opt(&r.estimate),
                r.certified.to_string(),
                r.expansions.to_string(),
                r.shannon_expansions.to_string(),
                r.wall_ms.to_string(),
                opt(&r.epsilon),
                opt(&r.k),
                opt(&r.samples_per_var),
                opt(&r.seed),
                opt(&r.rng),
                opt(&r.rank),
                opt(&r.selected),
                opt(&r.tied),
                opt(&inst.error),
            ])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// One refinement step of one variable, for anytime plots.
#[derive(Debug, Clone)]
pub struct TraceRow {
    pub instance: String,
    pub variable: String,
    pub step: u64,
    pub lower: String,
    pub upper: String,
    pub elapsed_ms: f64,
}

pub fn write_trace(path: &Path, rows: &[TraceRow]) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_path(path)?;
    wtr.write_record(["instance", "variable", "step", "L", "U", "elapsed_ms"])?;
    for r in rows {
        wtr.write_record([
            r.instance.as_str(),
            r.variable.as_str(),
            &r.step.to_string(),
            &r.lower,
            &r.upper,
            &r.elapsed_ms.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn print_summary(summary: &Summary) {
    let p = &summary.wall_ms;
    eprintln!(
        "instances={} succeeded={} success_rate={:.2} wall_ms: mean={:.3} p50={:.3} p75={:.3} p90={:.3} p95={:.3} p99={:.3} max={:.3}",
        summary.instances,
        summary.succeeded,
        summary.success_rate,
        p.mean,
        p.p50,
        p.p75,
        p.p90,
        p.p95,
        p.p99,
        p.max
    );
}
