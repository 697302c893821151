//! Replay harness: timing, CSV output, differential comparison and trend
//! tables. The `bench` binary is a thin argument layer over this module.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::time::Instant;

use thiserror::Error;

use crate::engine::{build_engine, render_log, EngineError, EngineKind, EngineStats, Notification};
use crate::graph::{parse_stream, GraphStream, StreamParseError};
use crate::plan::MatchMode;
use crate::query::{parse_query_file, QueryError, QueryGraphPattern};
use crate::workload::{Workload, WorkloadError, WorkloadParams};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{path}: {source}")]
    Query { path: String, source: QueryError },
    #[error("{path}: {source}")]
    Stream { path: String, source: StreamParseError },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error("repetitions must be at least 1")]
    NoRepetitions,
}

fn read(path: &Path) -> Result<String, BenchError> {
    fs::read_to_string(path).map_err(|source| BenchError::Io { path: path.display().to_string(), source })
}

pub fn load_queries(path: &Path) -> Result<Vec<QueryGraphPattern>, BenchError> {
    parse_query_file(&read(path)?).map_err(|source| BenchError::Query { path: path.display().to_string(), source })
}

pub fn load_stream(path: &Path) -> Result<GraphStream, BenchError> {
    parse_stream(&read(path)?).map_err(|source| BenchError::Stream { path: path.display().to_string(), source })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunConfig {
    pub engine: EngineKind,
    pub mode: MatchMode,
    /// Untimed full replays before measuring.
    pub warmup: usize,
    pub repetitions: usize,
}

impl RunConfig {
    pub fn new(engine: EngineKind) -> Self {
        RunConfig { engine, mode: MatchMode::Homomorphism, warmup: 0, repetitions: 1 }
    }
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub engine: EngineKind,
    pub timestamps: Vec<u64>,
    /// Per update, mean answering time over the repetitions.
    pub latencies_us: Vec<f64>,
    pub notifications: Vec<usize>,
    /// Mean over the repetitions.
    pub indexing_us: f64,
    pub memory_bytes: usize,
    pub stats: EngineStats,
    /// Per update, tuples examined while materializing paths.
    pub examined: Vec<u64>,
    pub log: Vec<Notification>,
}

impl RunResult {
    pub fn mean_us(&self) -> f64 {
        if self.latencies_us.is_empty() {
            0.0
        } else {
            self.latencies_us.iter().sum::<f64>() / self.latencies_us.len() as f64
        }
    }

    pub fn total_notifications(&self) -> usize {
        self.notifications.iter().sum()
    }

    pub fn percentile_us(&self, p: f64) -> f64 {
        percentile(&self.latencies_us, p)
    }

    /// `update_t,latency_us,notifications` rows and a closing summary row.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "update_t,latency_us,notifications")?;
        for ((t, l), n) in self.timestamps.iter().zip(&self.latencies_us).zip(&self.notifications) {
            writeln!(out, "{t},{l:.3},{n}")?;
        }
        writeln!(out, "summary,{:.3},{}", self.mean_us(), self.total_notifications())
    }

    pub fn report(&self) -> BenchReport {
        BenchReport {
            engine: self.engine,
            updates: self.latencies_us.len(),
            mean_us: self.mean_us(),
            p50_us: self.percentile_us(50.0),
            p99_us: self.percentile_us(99.0),
            indexing_us: self.indexing_us,
            notifications: self.total_notifications(),
            examined: self.stats.examined(),
            final_join_examined: self.stats.final_joins.examined,
            memory_bytes: self.memory_bytes,
        }
    }
}

/// Nearest-rank percentile.
pub fn percentile(values: &[f64], p: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    pub engine: EngineKind,
    pub updates: usize,
    pub mean_us: f64,
    pub p50_us: f64,
    pub p99_us: f64,
    pub indexing_us: f64,
    pub notifications: usize,
    pub examined: u64,
    pub final_join_examined: u64,
    pub memory_bytes: usize,
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "engine              {}", self.engine)?;
        writeln!(f, "updates             {}", self.updates)?;
        writeln!(f, "mean_us             {:.3}", self.mean_us)?;
        writeln!(f, "p50_us              {:.3}", self.p50_us)?;
        writeln!(f, "p99_us              {:.3}", self.p99_us)?;
        writeln!(f, "indexing_us         {:.1}", self.indexing_us)?;
        writeln!(f, "notifications       {}", self.notifications)?;
        writeln!(f, "examined            {}", self.examined)?;
        writeln!(f, "final_join_examined {}", self.final_join_examined)?;
        write!(f, "memory_bytes        {}", self.memory_bytes)
    }
}

/// Indexes `queries` into a fresh engine and replays `stream`, repeating as
/// configured. Notifications, counters and memory come from the last run.
pub fn run_engine(config: RunConfig, queries: &[QueryGraphPattern], stream: &GraphStream) -> Result<RunResult, BenchError> {
    if config.repetitions == 0 {
        return Err(BenchError::NoRepetitions);
    }
    let n = stream.len();
    let mut latencies = vec![0.0; n];
    let mut indexing = 0.0;
    let mut last = None;
    for rep in 0..config.warmup + config.repetitions {
        let timed = rep >= config.warmup;
        let mut engine = build_engine(config.engine, config.mode);
        let start = Instant::now();
        engine.index_all(queries)?;
        let index_us = start.elapsed().as_secs_f64() * 1e6;
        let mut notifications = Vec::with_capacity(n);
        let mut examined = Vec::with_capacity(n);
        let mut log = Vec::new();
        for (i, u) in stream.iter().enumerate() {
            let before = engine.stats().examined();
            let start = Instant::now();
            let ns = engine.answer_update(u)?;
            let us = start.elapsed().as_secs_f64() * 1e6;
            if timed {
                latencies[i] += us;
            }
            examined.push(engine.stats().examined() - before);
            notifications.push(ns.iter().map(|x| x.embeddings.len()).sum());
            log.extend(ns);
        }
        if timed {
            indexing += index_us;
        }
        last = Some((engine.stats(), engine.memory_bytes(), notifications, examined, log));
    }
    let reps = config.repetitions as f64;
    latencies.iter_mut().for_each(|l| *l /= reps);
    let (stats, memory_bytes, notifications, examined, log) = last.expect("at least one run");
    Ok(RunResult {
        engine: config.engine,
        timestamps: stream.iter().map(|u| u.t).collect(),
        latencies_us: latencies,
        notifications,
        indexing_us: indexing / reps,
        memory_bytes,
        stats,
        examined,
        log,
    })
}

/// Outcome of comparing several engines' notification logs.
#[derive(Clone, Debug)]
pub struct DiffOutcome {
    pub logs: Vec<(EngineKind, Vec<String>)>,
}

impl DiffOutcome {
    pub fn identical(&self) -> bool {
        self.logs.windows(2).all(|w| w[0].1 == w[1].1)
    }

    /// First differing line between the reference (first) engine and `other`.
    pub fn first_difference(&self) -> Option<(EngineKind, EngineKind, usize)> {
        let (ref_kind, ref_log) = self.logs.first()?;
        for (kind, log) in &self.logs[1..] {
            if log != ref_log {
                let at = ref_log.iter().zip(log).position(|(a, b)| a != b).unwrap_or(ref_log.len().min(log.len()));
                return Some((*ref_kind, *kind, at));
            }
        }
        None
    }
}

/// Runs every engine once and collects sorted TSV logs.
pub fn diff_engines(
    engines: &[EngineKind],
    mode: MatchMode,
    queries: &[QueryGraphPattern],
    stream: &GraphStream,
) -> Result<DiffOutcome, BenchError> {
    let mut logs = Vec::with_capacity(engines.len());
    for &k in engines {
        let mut e = build_engine(k, mode);
        e.index_all(queries)?;
        let mut all = Vec::new();
        for u in stream.iter() {
            all.extend(e.answer_update(u)?);
        }
        logs.push((k, render_log(&all)));
    }
    Ok(DiffOutcome { logs })
}

/// Workload knob varied by a trend table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrendAxis {
    Queries,
    Selectivity,
    Overlap,
    AvgSize,
    Edges,
}

impl TrendAxis {
    pub fn parse(s: &str) -> Option<TrendAxis> {
        match s {
            "queries" => Some(TrendAxis::Queries),
            "selectivity" => Some(TrendAxis::Selectivity),
            "overlap" => Some(TrendAxis::Overlap),
            "avg-size" => Some(TrendAxis::AvgSize),
            "edges" => Some(TrendAxis::Edges),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TrendAxis::Queries => "queries",
            TrendAxis::Selectivity => "selectivity",
            TrendAxis::Overlap => "overlap",
            TrendAxis::AvgSize => "avg-size",
            TrendAxis::Edges => "edges",
        }
    }

    pub fn apply(self, base: &WorkloadParams, value: f64) -> WorkloadParams {
        let mut p = base.clone();
        match self {
            TrendAxis::Queries => p.num_queries = value as usize,
            TrendAxis::Selectivity => p.selectivity = value,
            TrendAxis::Overlap => p.overlap = value,
            TrendAxis::AvgSize => p.avg_size = value as usize,
            TrendAxis::Edges => p.num_edges = value as usize,
        }
        p
    }
}

/// One row per (axis value, engine): `value,engine,mean_us,p99_us,indexing_us,memory_bytes`.
pub fn trend_table<W: Write>(
    axis: TrendAxis,
    values: &[f64],
    base: &WorkloadParams,
    engines: &[EngineKind],
    mode: MatchMode,
    mut out: W,
) -> Result<(), BenchError> {
    let io_err = |source| BenchError::Io { path: "<trend output>".into(), source };
    writeln!(out, "{},engine,mean_us,p99_us,indexing_us,memory_bytes", axis.name()).map_err(io_err)?;
    for &v in values {
        let w = Workload::generate(&axis.apply(base, v))?;
        for &k in engines {
            let r = run_engine(RunConfig { mode, ..RunConfig::new(k) }, &w.queries, &w.stream)?;
            writeln!(out, "{v},{k},{:.3},{:.3},{:.1},{}", r.mean_us(), r.percentile_us(99.0), r.indexing_us, r.memory_bytes)
                .map_err(io_err)?;
        }
    }
    Ok(())
}
