use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use lbhga_core::sim::{simulate, Algorithm, MetricsRecord, SimulationOutput};
use rayon::prelude::*;
use serde::Serialize;
use statrs::statistics::Statistics;

use crate::config::Config;
use crate::instance::Instance;
use crate::{write_atomic, CliError};

pub const METRICS_HEADER: &str = "bucket_end,algorithm,seed,link_load_variance,revenue,cost,revenue_cost_ratio,\
acceptance_ratio,avg_quotation,accepted,refused,total_runtime_ms,avg_runtime_ms";

#[derive(Serialize)]
struct MetricsRow<'a> {
    bucket_end: f64,
    algorithm: &'a str,
    seed: u64,
    link_load_variance: f64,
    revenue: u64,
    cost: u64,
    revenue_cost_ratio: Option<f64>,
    acceptance_ratio: Option<f64>,
    avg_quotation: Option<f64>,
    accepted: u64,
    refused: u64,
    total_runtime_ms: f64,
    avg_runtime_ms: Option<f64>,
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    bucket_end: f64,
    algorithm: &'a str,
    metric: &'a str,
    mean: f64,
    std_dev: Option<f64>,
    samples: usize,
}

type Getter = fn(&MetricsRecord) -> Option<f64>;

/// Metrics aggregated across seeds, in summary order.
const SUMMARY_METRICS: &[(&str, Getter)] = &[
    ("link_load_variance", |r| Some(r.link_load_variance)),
    ("revenue", |r| Some(r.revenue as f64)),
    ("cost", |r| Some(r.cost as f64)),
    ("revenue_cost_ratio", |r| r.revenue_cost_ratio),
    ("acceptance_ratio", |r| r.acceptance_ratio),
    ("accepted_per_refused", |r| r.accepted_per_refused),
    ("avg_quotation", |r| r.avg_quotation),
    ("accepted", |r| Some(r.accepted as f64)),
    ("refused", |r| Some(r.refused as f64)),
    ("total_runtime_ms", |r| Some(r.total_runtime_ms)),
    ("avg_runtime_ms", |r| r.avg_runtime_ms),
];

pub struct RunResult {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub output: SimulationOutput,
}

#[derive(Debug)]
pub struct ExperimentReport {
    /// Every file written, metrics files first and the summary last.
    pub files: Vec<PathBuf>,
    pub table: String,
}

pub fn metrics_file_name(algorithm: Algorithm, seed: u64) -> String {
    format!("metrics_{algorithm}_seed{seed}.csv")
}

/// Runs every (algorithm, seed) pair, in parallel. With `instance` given,
/// every run replays it and the seed only drives the algorithms.
pub fn simulate_all(cfg: &Config, instance: Option<&Instance>) -> Result<Vec<RunResult>, CliError> {
    let jobs: Vec<(Algorithm, u64)> = cfg
        .experiment
        .algorithms
        .iter()
        .flat_map(|&a| cfg.experiment.seeds.iter().map(move |&s| (a, s)))
        .collect();
    jobs.into_par_iter()
        .map(|(algorithm, seed)| {
            let inst = match instance {
                Some(i) => i.clone(),
                None => Instance::generate(cfg, seed)?,
            };
            let output = simulate(inst.substrate, &inst.stream, inst.horizon, algorithm, &cfg.params, seed, |_, _| {});
            Ok(RunResult { algorithm, seed, output })
        })
        .collect()
}

/// The header is written explicitly so that empty outputs still carry it.
fn headerless() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new())
}

pub fn metrics_csv(run: &RunResult) -> Result<Vec<u8>, CliError> {
    let mut w = headerless();
    w.write_record(METRICS_HEADER.split(','))?;
    for r in &run.output.records {
        w.serialize(MetricsRow {
            bucket_end: r.bucket_end,
            algorithm: run.algorithm.name(),
            seed: run.seed,
            link_load_variance: r.link_load_variance,
            revenue: r.revenue,
            cost: r.cost,
            revenue_cost_ratio: r.revenue_cost_ratio,
            acceptance_ratio: r.acceptance_ratio,
            avg_quotation: r.avg_quotation,
            accepted: r.accepted,
            refused: r.refused,
            total_runtime_ms: r.total_runtime_ms,
            avg_runtime_ms: r.avg_runtime_ms,
        })?;
    }
    w.into_inner().map_err(|e| CliError::Csv(e.into_error().into()))
}

/// Long-format aggregate: one row per bucket, algorithm and metric, with
/// the mean and sample standard deviation over the seeds that define it.
pub fn summary_csv(runs: &[RunResult]) -> Result<Vec<u8>, CliError> {
    let mut groups: BTreeMap<(Algorithm, usize), Vec<&MetricsRecord>> = BTreeMap::new();
    for run in runs {
        for (k, r) in run.output.records.iter().enumerate() {
            groups.entry((run.algorithm, k)).or_default().push(r);
        }
    }
    let mut w = headerless();
    w.write_record(["bucket_end", "algorithm", "metric", "mean", "std_dev", "samples"])?;
    for ((algorithm, _), records) in &groups {
        for (metric, get) in SUMMARY_METRICS {
            let values: Vec<f64> = records.iter().filter_map(|r| get(r)).collect();
            if values.is_empty() {
                continue;
            }
            let std_dev = (values.len() > 1).then(|| values.iter().std_dev());
            w.serialize(SummaryRow {
                bucket_end: records[0].bucket_end,
                algorithm: algorithm.name(),
                metric,
                mean: values.iter().mean(),
                std_dev,
                samples: values.len(),
            })?;
        }
    }
    w.into_inner().map_err(|e| CliError::Csv(e.into_error().into()))
}

/// Headline numbers per algorithm, averaged over seeds: time-averaged link
/// load variance and the final cumulative ratios.
pub fn comparison_table(runs: &[RunResult]) -> String {
    let mut by_alg: BTreeMap<Algorithm, Vec<&SimulationOutput>> = BTreeMap::new();
    for run in runs {
        by_alg.entry(run.algorithm).or_default().push(&run.output);
    }
    let mean = |xs: Vec<f64>| if xs.is_empty() { f64::NAN } else { xs.iter().mean() };
    let mut out = String::new();
    writeln!(
        out,
        "{:<10} {:>6} {:>14} {:>11} {:>9} {:>13} {:>13}",
        "algorithm", "seeds", "load variance", "acceptance", "R/C", "avg quotation", "avg time ms"
    )
    .unwrap();
    for (alg, outs) in by_alg {
        let finals: Vec<&MetricsRecord> = outs.iter().filter_map(|o| o.records.last()).collect();
        let variance = mean(
            outs.iter()
                .filter(|o| !o.records.is_empty())
                .map(|o| o.records.iter().map(|r| r.link_load_variance).sum::<f64>() / o.records.len() as f64)
                .collect(),
        );
        let pick = |f: fn(&MetricsRecord) -> Option<f64>| mean(finals.iter().filter_map(|r| f(r)).collect());
        writeln!(
            out,
            "{:<10} {:>6} {:>14.1} {:>11.4} {:>9.4} {:>13.1} {:>13.3}",
            alg.name(),
            outs.len(),
            variance,
            pick(|r| r.acceptance_ratio),
            pick(|r| r.revenue_cost_ratio),
            pick(|r| r.avg_quotation),
            pick(|r| r.avg_runtime_ms),
        )
        .unwrap();
    }
    out
}

/// Runs the configured experiment and writes one metrics file per run plus
/// `summary.csv` into the output directory. If any write fails, files
/// already written by this call are removed.
pub fn run_experiment(cfg: &Config, instance: Option<&Instance>) -> Result<ExperimentReport, CliError> {
    let runs = simulate_all(cfg, instance)?;
    let dir = &cfg.experiment.out_dir;
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.clone(), source })?;

    let mut written = Vec::new();
    let result = write_outputs(dir, &runs, &mut written);
    if let Err(e) = result {
        for f in &written {
            let _ = std::fs::remove_file(f);
        }
        return Err(e);
    }
    Ok(ExperimentReport { files: written, table: comparison_table(&runs) })
}

fn write_outputs(dir: &Path, runs: &[RunResult], written: &mut Vec<PathBuf>) -> Result<(), CliError> {
    let mut ordered: Vec<&RunResult> = runs.iter().collect();
    ordered.sort_by_key(|r| (r.algorithm, r.seed));
    for run in ordered {
        let path = dir.join(metrics_file_name(run.algorithm, run.seed));
        write_atomic(&path, &metrics_csv(run)?)?;
        written.push(path);
    }
    let path = dir.join("summary.csv");
    write_atomic(&path, &summary_csv(runs)?)?;
    written.push(path);
    Ok(())
}
