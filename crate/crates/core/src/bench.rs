//! Comparative benchmark of the two engines on generated instances.
//!
//! Every instance is solved by both engines with identical data and
//! tolerances. Per-instance records are the primary output; summaries and
//! histograms are pure functions of those records.

use std::fs::File;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::probgen::{generate, GenSpec, Kind};
use crate::problem::Status;
use crate::settings::Settings;
use crate::trace::{read_versioned_csv, write_trace_csv, write_versioned_csv, Engine};

/// Number of histogram bins and their log₂ range.
pub const HISTOGRAM_BINS: usize = 24;
pub const HISTOGRAM_LOG2_MIN: f64 = -2.0;
pub const HISTOGRAM_LOG2_MAX: f64 = 10.0;

/// Written into every summary row.
pub const RATIO_POLICY: &str =
    "geometric mean over instances where both engines return the expected verdict";

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub kinds: Vec<Kind>,
    pub n: usize,
    pub m: usize,
    pub count: usize,
    /// Instance `i` uses seed `seed + i`.
    pub seed: u64,
    pub density: f64,
    pub settings: Settings,
    /// Write one trace CSV per instance and engine into this directory.
    pub trace_dir: Option<PathBuf>,
}

impl BenchConfig {
    /// Tolerances of the standard comparison: `eps_abs = eps_infeas = 1e-6`,
    /// `eps_rel = 0`, checked every iteration.
    pub fn new(kinds: Vec<Kind>, n: usize, m: usize, count: usize, seed: u64) -> Self {
        Self {
            kinds,
            n,
            m,
            count,
            seed,
            density: GenSpec::DEFAULT_DENSITY,
            settings: Settings {
                check_interval: 1,
                ..Settings::absolute(1e-6)
            },
            trace_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub instance: String,
    pub kind: Kind,
    pub seed: u64,
    pub engine: Engine,
    /// Equal to `max_iters` for runs that did not reach a verdict.
    pub iterations: usize,
    /// A [`Status`] string, or `error` when the engine returned an error.
    pub status: String,
    pub solve_time_s: f64,
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

impl BenchRecord {
    /// The engine returned the verdict the generator planted.
    pub fn is_success(&self) -> bool {
        self.status == expected_status(self.kind).as_str()
    }
}

pub fn expected_status(kind: Kind) -> Status {
    match kind {
        Kind::Feasible => Status::Solved,
        Kind::Infeasible => Status::PrimalInfeasible,
        Kind::Unbounded => Status::DualInfeasible,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSummary {
    pub kind: Kind,
    pub instances: usize,
    /// Instances where both engines succeeded.
    pub pairs: usize,
    /// Geometric mean of `direct / homogeneous` iterations over `pairs`; NaN when empty.
    pub geomean_ratio: f64,
    /// Homogeneous succeeded and the direct engine failed or needed more iterations.
    pub homogeneous_faster: usize,
    pub homogeneous_faster_fraction: f64,
    pub failures_homogeneous: usize,
    pub failures_direct: usize,
    pub policy: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub kind: Kind,
    pub bin: usize,
    pub ratio_lo: f64,
    pub ratio_hi: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOutput {
    pub records: Vec<BenchRecord>,
    pub summaries: Vec<RatioSummary>,
    pub histogram: Vec<HistogramBin>,
}

fn record(
    spec: &GenSpec,
    engine: Engine,
    settings: &Settings,
    outcome: &Result<crate::problem::SolveResult>,
) -> BenchRecord {
    let base = BenchRecord {
        instance: spec.file_name().trim_end_matches(".json").to_string(),
        kind: spec.kind,
        seed: spec.seed,
        engine,
        iterations: settings.max_iters,
        status: "error".into(),
        solve_time_s: 0.0,
        primal: f64::INFINITY,
        dual: f64::INFINITY,
        gap: f64::INFINITY,
    };
    match outcome {
        Ok(r) => BenchRecord {
            iterations: if r.status.is_success() { r.iterations } else { settings.max_iters },
            status: r.status.as_str().into(),
            solve_time_s: r.solve_time_s,
            primal: r.residuals.primal,
            dual: r.residuals.dual,
            gap: r.residuals.gap,
            ..base
        },
        Err(e) => {
            log::warn!("{} {engine}: {e}", base.instance);
            base
        }
    }
}

fn run_instance(config: &BenchConfig, spec: &GenSpec) -> Result<Vec<BenchRecord>> {
    let problem = generate(spec)?.problem;
    let mut settings = config.settings.clone();
    settings.trace |= config.trace_dir.is_some();
    let mut out = Vec::with_capacity(2);
    for engine in [Engine::Homogeneous, Engine::Direct] {
        let outcome = crate::solve_with(engine, &problem, &settings);
        if let (Some(dir), Ok(result)) = (&config.trace_dir, &outcome) {
            let stem = spec.file_name();
            let path = dir.join(format!("{}_{engine}.csv", stem.trim_end_matches(".json")));
            write_trace_csv(path, &result.trace)?;
        }
        out.push(record(spec, engine, &settings, &outcome));
    }
    Ok(out)
}

/// Runs every instance on both engines, in parallel across instances.
pub fn run_bench(config: &BenchConfig) -> Result<BenchOutput> {
    config.settings.validate()?;
    let specs: Vec<GenSpec> = config
        .kinds
        .iter()
        .flat_map(|&kind| {
            (0..config.count).map(move |i| GenSpec {
                n: config.n,
                m: config.m,
                seed: config.seed + i as u64,
                kind,
                density: config.density,
            })
        })
        .collect();
    for spec in &specs {
        spec.validate()?;
    }
    if let Some(dir) = &config.trace_dir {
        std::fs::create_dir_all(dir)?;
    }
    let per_instance: Vec<Vec<BenchRecord>> = specs
        .par_iter()
        .map(|spec| run_instance(config, spec))
        .collect::<Result<_>>()?;
    let records: Vec<BenchRecord> = per_instance.into_iter().flatten().collect();
    let (summaries, histogram) = summarize(&records)?;
    Ok(BenchOutput {
        records,
        summaries,
        histogram,
    })
}

/// Pairs records by instance, in first-seen order.
fn pairs(records: &[BenchRecord]) -> Result<Vec<(&BenchRecord, &BenchRecord)>> {
    let mut homogeneous: Vec<&BenchRecord> = Vec::new();
    let mut direct = std::collections::HashMap::new();
    for r in records {
        match r.engine {
            Engine::Homogeneous => homogeneous.push(r),
            Engine::Direct => {
                if direct.insert(r.instance.as_str(), r).is_some() {
                    return Err(Error::Format(format!("duplicate direct record for {}", r.instance)));
                }
            }
        }
    }
    if homogeneous.len() != direct.len() {
        return Err(Error::Format("records do not pair up by instance".into()));
    }
    homogeneous
        .into_iter()
        .map(|h| {
            direct
                .get(h.instance.as_str())
                .map(|d| (h, *d))
                .ok_or_else(|| Error::Format(format!("no direct record for {}", h.instance)))
        })
        .collect()
}

fn histogram_bin(ratio: f64) -> usize {
    let width = (HISTOGRAM_LOG2_MAX - HISTOGRAM_LOG2_MIN) / HISTOGRAM_BINS as f64;
    let pos = ((ratio.log2() - HISTOGRAM_LOG2_MIN) / width).floor();
    pos.clamp(0.0, (HISTOGRAM_BINS - 1) as f64) as usize
}

/// Recomputes summaries and histograms from per-instance records alone.
pub fn summarize(records: &[BenchRecord]) -> Result<(Vec<RatioSummary>, Vec<HistogramBin>)> {
    let pairs = pairs(records)?;
    let mut kinds: Vec<Kind> = Vec::new();
    for (h, _) in &pairs {
        if !kinds.contains(&h.kind) {
            kinds.push(h.kind);
        }
    }
    let width = (HISTOGRAM_LOG2_MAX - HISTOGRAM_LOG2_MIN) / HISTOGRAM_BINS as f64;
    let mut summaries = Vec::new();
    let mut histogram = Vec::new();
    for kind in kinds {
        let of_kind: Vec<_> = pairs.iter().filter(|(h, _)| h.kind == kind).collect();
        let mut log_sum = 0.0;
        let mut n_pairs = 0;
        let mut faster = 0;
        let mut counts = [0usize; HISTOGRAM_BINS];
        for (h, d) in &of_kind {
            if h.is_success() && (!d.is_success() || h.iterations < d.iterations) {
                faster += 1;
            }
            if h.is_success() && d.is_success() {
                let ratio = d.iterations.max(1) as f64 / h.iterations.max(1) as f64;
                log_sum += ratio.ln();
                n_pairs += 1;
                counts[histogram_bin(ratio)] += 1;
            }
        }
        let instances = of_kind.len();
        summaries.push(RatioSummary {
            kind,
            instances,
            pairs: n_pairs,
            geomean_ratio: if n_pairs > 0 { (log_sum / n_pairs as f64).exp() } else { f64::NAN },
            homogeneous_faster: faster,
            homogeneous_faster_fraction: faster as f64 / instances.max(1) as f64,
            failures_homogeneous: of_kind.iter().filter(|(h, _)| !h.is_success()).count(),
            failures_direct: of_kind.iter().filter(|(_, d)| !d.is_success()).count(),
            policy: RATIO_POLICY.into(),
        });
        for (bin, &count) in counts.iter().enumerate() {
            let lo = HISTOGRAM_LOG2_MIN + bin as f64 * width;
            histogram.push(HistogramBin {
                kind,
                bin,
                ratio_lo: lo.exp2(),
                ratio_hi: (lo + width).exp2(),
                count,
            });
        }
    }
    Ok((summaries, histogram))
}

pub fn write_records_csv(path: impl AsRef<Path>, records: &[BenchRecord]) -> Result<()> {
    write_versioned_csv(File::create(path)?, records)
}

pub fn read_records_csv(path: impl AsRef<Path>) -> Result<Vec<BenchRecord>> {
    read_versioned_csv(File::open(path)?)
}

pub fn write_summary_csv(path: impl AsRef<Path>, summaries: &[RatioSummary]) -> Result<()> {
    write_versioned_csv(File::create(path)?, summaries)
}

pub fn read_summary_csv(path: impl AsRef<Path>) -> Result<Vec<RatioSummary>> {
    read_versioned_csv(File::open(path)?)
}

/// The first and last bins also collect ratios outside `[2⁻², 2¹⁰]`.
pub fn write_histogram_csv(path: impl AsRef<Path>, bins: &[HistogramBin]) -> Result<()> {
    write_versioned_csv(File::create(path)?, bins)
}

pub fn read_histogram_csv(path: impl AsRef<Path>) -> Result<Vec<HistogramBin>> {
    read_versioned_csv(File::open(path)?)
}

/// Writes `records.csv`, `summary.csv` and `histogram.csv` into `dir`.
pub fn write_outputs(dir: impl AsRef<Path>, output: &BenchOutput) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    write_records_csv(dir.join("records.csv"), &output.records)?;
    write_summary_csv(dir.join("summary.csv"), &output.summaries)?;
    write_histogram_csv(dir.join("histogram.csv"), &output.histogram)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(instance: &str, kind: Kind, engine: Engine, iterations: usize, status: Status) -> BenchRecord {
        BenchRecord {
            instance: instance.into(),
            kind,
            seed: 0,
            engine,
            iterations,
            status: status.as_str().into(),
            solve_time_s: 0.0,
            primal: 0.0,
            dual: 0.0,
            gap: 0.0,
        }
    }

    #[test]
    fn summary_by_hand() {
        let records = vec![
            rec("a", Kind::Infeasible, Engine::Homogeneous, 10, Status::PrimalInfeasible),
            rec("a", Kind::Infeasible, Engine::Direct, 40, Status::PrimalInfeasible),
            rec("b", Kind::Infeasible, Engine::Homogeneous, 10, Status::PrimalInfeasible),
            rec("b", Kind::Infeasible, Engine::Direct, 10, Status::PrimalInfeasible),
            rec("c", Kind::Infeasible, Engine::Homogeneous, 10, Status::PrimalInfeasible),
            rec("c", Kind::Infeasible, Engine::Direct, 100, Status::MaxIterations),
        ];
        let (s, h) = summarize(&records).unwrap();
        assert_eq!(s.len(), 1);
        let s = &s[0];
        assert_eq!((s.instances, s.pairs), (3, 2));
        assert!((s.geomean_ratio - 2.0).abs() < 1e-15);
        assert_eq!(s.homogeneous_faster, 2);
        assert_eq!((s.failures_homogeneous, s.failures_direct), (0, 1));
        assert_eq!(h.len(), HISTOGRAM_BINS);
        assert_eq!(h.iter().map(|b| b.count).sum::<usize>(), 2);
        assert_eq!(h[0].ratio_lo, 0.25);
        assert_eq!(h[HISTOGRAM_BINS - 1].ratio_hi, 1024.0);
    }

    #[test]
    fn histogram_edges() {
        assert_eq!(histogram_bin(1.0), 4);
        assert_eq!(histogram_bin(0.01), 0);
        assert_eq!(histogram_bin(1e9), HISTOGRAM_BINS - 1);
        assert_eq!(histogram_bin(2f64.sqrt() * 1.0001), 5);
    }

    #[test]
    fn wrong_verdicts_are_failures() {
        let records = vec![
            rec("a", Kind::Feasible, Engine::Homogeneous, 10, Status::PrimalInfeasible),
            rec("a", Kind::Feasible, Engine::Direct, 12, Status::Solved),
        ];
        let (s, _) = summarize(&records).unwrap();
        assert_eq!((s[0].failures_homogeneous, s[0].pairs, s[0].homogeneous_faster), (1, 0, 0));
        assert!(s[0].geomean_ratio.is_nan());
    }

    #[test]
    fn unpaired_records_are_rejected() {
        let records = vec![rec("a", Kind::Feasible, Engine::Homogeneous, 10, Status::Solved)];
        assert!(summarize(&records).is_err());
    }

    #[test]
    fn small_bench_round_trips_through_csv() {
        let config = BenchConfig::new(vec![Kind::Feasible, Kind::Infeasible], 5, 8, 2, 11);
        let out = run_bench(&config).unwrap();
        assert_eq!(out.records.len(), 8);
        let dir = tempfile::tempdir().unwrap();
        write_outputs(dir.path(), &out).unwrap();
        let records = read_records_csv(dir.path().join("records.csv")).unwrap();
        assert_eq!(records, out.records);
        let (summaries, histogram) = summarize(&records).unwrap();
        let read_back = read_summary_csv(dir.path().join("summary.csv")).unwrap();
        assert_eq!(summaries.len(), read_back.len());
        for (a, b) in summaries.iter().zip(&read_back) {
            assert_eq!((a.kind, a.pairs, a.homogeneous_faster), (b.kind, b.pairs, b.homogeneous_faster));
            assert!(a.geomean_ratio == b.geomean_ratio || (a.geomean_ratio.is_nan() && b.geomean_ratio.is_nan()));
        }
        assert_eq!(histogram, read_histogram_csv(dir.path().join("histogram.csv")).unwrap());
    }
}
