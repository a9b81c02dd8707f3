//! Load sweeps over schemes and seeds, with CSV and manifest output.

mod config;

pub use config::{ConfigError, ExperimentConfig, WorkloadTemplate};

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::{merge_metrics, MergedMetrics, RunRecord, SimConfig, SimError, Simulation};
use crate::topology::{RouteTable, Topology, TopologyError};
use crate::traffic::{generate_workload, TrafficError, WorkloadConfig};

/// Column order of the results CSV.
pub const CSV_COLUMNS: [&str; 11] = [
    "scheme",
    "load_erlangs",
    "seeds",
    "offered",
    "admitted",
    "blocking_mean",
    "blocking_std",
    "blocked_latency_share",
    "avg_latency_ms_mean",
    "avg_latency_ms_std",
    "max_latency_ms",
];

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("topology {path}: {source}")]
    Topology { path: String, source: TopologyError },
    #[error("reading {path}: {source}")]
    Read { path: PathBuf, source: io::Error },
    #[error("writing {path}: {source}")]
    Write { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Traffic(#[from] TrafficError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl ExperimentError {
    /// 1 for configuration and validation problems, 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_)
            | ExperimentError::Topology { .. }
            | ExperimentError::Read { .. }
            | ExperimentError::Traffic(_) => 1,
            _ => 2,
        }
    }
}

/// One (scheme, load) line of the results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scheme: String,
    pub load_erlangs: f64,
    pub seeds: usize,
    pub offered: u64,
    pub admitted: u64,
    pub blocking_mean: f64,
    pub blocking_std: f64,
    pub blocked_latency_share: f64,
    pub avg_latency_ms_mean: f64,
    pub avg_latency_ms_std: f64,
    pub max_latency_ms: f64,
}

impl From<&MergedMetrics> for ResultRow {
    fn from(m: &MergedMetrics) -> Self {
        ResultRow {
            scheme: m.scheme.to_string(),
            load_erlangs: m.load_erlangs,
            seeds: m.runs,
            offered: m.pooled.offered,
            admitted: m.pooled.admitted,
            blocking_mean: m.blocking_mean,
            blocking_std: m.blocking_std,
            blocked_latency_share: m.pooled.blocked_latency_share(),
            avg_latency_ms_mean: m.avg_latency_mean_s * 1e3,
            avg_latency_ms_std: m.avg_latency_std_s * 1e3,
            max_latency_ms: m.pooled.latency_max_s * 1e3,
        }
    }
}

impl ResultRow {
    fn csv_fields(&self) -> [String; 11] {
        [
            self.scheme.clone(),
            format_sig(self.load_erlangs),
            self.seeds.to_string(),
            self.offered.to_string(),
            self.admitted.to_string(),
            format_sig(self.blocking_mean),
            format_sig(self.blocking_std),
            format_sig(self.blocked_latency_share),
            format_sig(self.avg_latency_ms_mean),
            format_sig(self.avg_latency_ms_std),
            format_sig(self.max_latency_ms),
        ]
    }
}

/// Fixed-point rendering with nine significant digits.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x.is_finite() {
            "0".into()
        } else {
            x.to_string()
        };
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (8 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Everything a sweep produced.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub rows: Vec<ResultRow>,
    pub merged: Vec<MergedMetrics>,
    pub runs: Vec<RunRecord>,
}

/// Loads the topology a config refers to; relative paths resolve against
/// `base_dir`. Without a path the built-in IEEE 14-bus graph is used.
pub fn load_topology(
    config: &ExperimentConfig,
    base_dir: &Path,
) -> Result<Topology, ExperimentError> {
    match &config.topology_path {
        None => Ok(Topology::ieee14()),
        Some(p) => {
            let path = if p.is_absolute() {
                p.clone()
            } else {
                base_dir.join(p)
            };
            let text = fs::read_to_string(&path).map_err(|source| ExperimentError::Read {
                path: path.clone(),
                source,
            })?;
            Topology::parse(&text).map_err(|source| ExperimentError::Topology {
                path: path.display().to_string(),
                source,
            })
        }
    }
}

fn workload_config(config: &ExperimentConfig, load: f64, seed: u64) -> WorkloadConfig {
    let w = &config.workload;
    WorkloadConfig {
        load_erlangs: load,
        mean_holding_s: w.mean_holding_s,
        request_count: w.request_count,
        warmup_count: w.warmup_count,
        class: w.class.clone(),
        paradigm: w.paradigm,
        seed,
    }
}

/// Checks the config against a concrete topology without running anything.
pub fn validate_experiment(
    config: &ExperimentConfig,
    topology: &Topology,
) -> Result<(), ExperimentError> {
    config.validate()?;
    workload_config(config, config.loads_erlangs[0], config.seeds[0]).validate(topology)?;
    Ok(())
}

/// Runs every (scheme, load, seed) combination and merges seeds per
/// (scheme, load). All schemes see the same workload for a given
/// (load, seed). Output order follows the config regardless of how runs
/// are scheduled.
pub fn run_experiment(
    config: &ExperimentConfig,
    topology: &Topology,
) -> Result<ExperimentOutput, ExperimentError> {
    validate_experiment(config, topology)?;
    let routes = RouteTable::new(topology, config.route_depth());
    let sim_config = SimConfig {
        otss: config.otss.clone(),
        grid: config.grid.clone(),
        flexgrid_k: config.flexgrid_k,
        warmup_count: config.workload.warmup_count,
    };

    let jobs: Vec<(f64, u64)> = config
        .loads_erlangs
        .iter()
        .flat_map(|&l| config.seeds.iter().map(move |&s| (l, s)))
        .collect();
    let run_job = |&(load, seed): &(f64, u64)| -> Result<Vec<RunRecord>, ExperimentError> {
        let workload = generate_workload(topology, &workload_config(config, load, seed))?;
        config
            .schemes
            .iter()
            .map(|&scheme| {
                let metrics =
                    Simulation::new(topology, &routes, scheme, &sim_config)?.run(&workload)?;
                Ok(RunRecord {
                    scheme,
                    load_erlangs: load,
                    seed,
                    metrics,
                })
            })
            .collect()
    };
    let per_job: Vec<Vec<RunRecord>> = if config.workers == 1 {
        jobs.iter().map(run_job).collect::<Result<_, _>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .expect("thread pool");
        pool.install(|| jobs.par_iter().map(run_job).collect::<Result<_, _>>())?
    };

    let seeds = config.seeds.len();
    let mut merged = Vec::new();
    let mut runs = Vec::new();
    for (si, scheme) in config.schemes.iter().enumerate() {
        for (li, _) in config.loads_erlangs.iter().enumerate() {
            let group: Vec<RunRecord> = (0..seeds)
                .map(|k| per_job[li * seeds + k][si].clone())
                .collect();
            debug_assert!(group.iter().all(|r| r.scheme == *scheme));
            merged.push(merge_metrics(&group)?);
            runs.extend(group);
        }
    }
    let rows = merged.iter().map(ResultRow::from).collect();
    Ok(ExperimentOutput { rows, merged, runs })
}

/// Renders rows as CSV: fixed header, LF endings, nine significant digits.
pub fn rows_to_csv(rows: &[ResultRow]) -> Result<String, ExperimentError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(CSV_COLUMNS)?;
    for r in rows {
        w.write_record(r.csv_fields())?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn rows_from_csv(text: &str) -> Result<Vec<ResultRow>, ExperimentError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != CSV_COLUMNS {
        return Err(ExperimentError::Csv(csv::Error::from(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("unexpected header {header:?}"),
        ))));
    }
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    version: &'static str,
    topology: String,
    config: &'a ExperimentConfig,
    runs: &'a [RunRecord],
}

/// Path of the manifest written next to a CSV.
pub fn manifest_path(csv_path: &Path) -> PathBuf {
    let mut name = csv_path.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    csv_path.with_file_name(name)
}

/// Writes the CSV and its manifest (config echo, crate version and every
/// per-seed run).
pub fn write_outputs(
    path: &Path,
    config: &ExperimentConfig,
    output: &ExperimentOutput,
) -> Result<(), ExperimentError> {
    let write = |p: &Path, body: &str| {
        if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|source| ExperimentError::Write {
                path: dir.to_path_buf(),
                source,
            })?;
        }
        fs::write(p, body).map_err(|source| ExperimentError::Write {
            path: p.to_path_buf(),
            source,
        })
    };
    write(path, &rows_to_csv(&output.rows)?)?;
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        topology: config
            .topology_path
            .as_ref()
            .map_or_else(|| "builtin:ieee14".to_string(), |p| p.display().to_string()),
        config,
        runs: &output.runs,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write(&manifest_path(path), &(json + "\n"))
}

/// Plain-text table grouped by scheme, loads ascending. Rows whose maximum
/// latency exceeds `latency_bound_s` are flagged with `!`.
pub fn summarize(rows: &[ResultRow], latency_bound_s: f64) -> String {
    let mut schemes: Vec<&str> = Vec::new();
    for r in rows {
        if !schemes.contains(&r.scheme.as_str()) {
            schemes.push(&r.scheme);
        }
    }
    let width = schemes.iter().map(|s| s.len()).max().unwrap_or(6).max(6);
    let mut out = format!(
        "{:<width$} {:>8} {:>10} {:>10} {:>9} {:>12} {:>12}\n",
        "scheme", "load(E)", "blocking", "+/-", "lat.share", "avg lat(ms)", "max lat(ms)"
    );
    let bound_ms = latency_bound_s * 1e3;
    for scheme in schemes {
        let mut group: Vec<&ResultRow> = rows.iter().filter(|r| r.scheme == scheme).collect();
        group.sort_by(|a, b| a.load_erlangs.total_cmp(&b.load_erlangs));
        for r in group {
            let flag = if r.max_latency_ms > bound_ms * (1.0 + 1e-9) {
                " !"
            } else {
                ""
            };
            out.push_str(&format!(
                "{:<width$} {:>8} {:>10.5} {:>10.5} {:>9.3} {:>12.4} {:>12.4}{flag}\n",
                r.scheme,
                r.load_erlangs,
                r.blocking_mean,
                r.blocking_std,
                r.blocked_latency_share,
                r.avg_latency_ms_mean,
                r.max_latency_ms,
            ));
        }
    }
    out
}
