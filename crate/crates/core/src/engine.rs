//! The engine interface shared by TriC, the inverted-index baselines and the
//! oracle, plus notifications and their text rendering.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use thiserror::Error;

use crate::graph::Update;
use crate::inverted::{InvertedConfig, InvertedEngine};
use crate::matview::JoinStats;
use crate::oracle::OracleEngine;
use crate::plan::{Embedding, MatchMode};
use crate::query::{QueryError, QueryGraphPattern, QueryId};
use crate::state::OrderError;
use crate::tric::{TricConfig, TricEngine};

/// Newly satisfied embeddings of one query, caused by the update at `t`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Notification {
    pub t: u64,
    pub query_id: QueryId,
    /// Sorted, duplicate-free, in canonical vertex order.
    pub embeddings: Vec<Embedding>,
}

impl Notification {
    /// One line per embedding: `t<TAB>query_id<TAB>v1<TAB>v2...`.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> io::Result<()> {
        for e in &self.embeddings {
            write!(out, "{}\t{}", self.t, self.query_id)?;
            for v in e {
                write!(out, "\t{v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn tsv_lines(&self) -> Vec<String> {
        let mut buf = Vec::new();
        self.write_tsv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("labels are UTF-8").lines().map(str::to_owned).collect()
    }
}

/// Renders notifications as sorted TSV lines, the form compared across engines.
pub fn render_log(notifications: &[Notification]) -> Vec<String> {
    let mut lines: Vec<String> = notifications.iter().flat_map(Notification::tsv_lines).collect();
    lines.sort();
    lines
}

/// Receives notifications as they are produced.
pub trait NotificationSink {
    fn notify(&mut self, n: &Notification);
}

impl<F: FnMut(&Notification)> NotificationSink for F {
    fn notify(&mut self, n: &Notification) {
        self(n)
    }
}

/// Writes each notification as TSV lines.
pub struct TsvSink<W: Write> {
    out: W,
    pub error: Option<io::Error>,
}

impl<W: Write> TsvSink<W> {
    pub fn new(out: W) -> Self {
        TsvSink { out, error: None }
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

impl<W: Write> NotificationSink for TsvSink<W> {
    fn notify(&mut self, n: &Notification) {
        if self.error.is_none() {
            if let Err(e) = n.write_tsv(&mut self.out) {
                self.error = Some(e);
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("query {0} is already indexed")]
    DuplicateQuery(QueryId),
    #[error(transparent)]
    Order(#[from] OrderError),
    #[error(transparent)]
    Query(#[from] QueryError),
}

/// Work counters accumulated over an engine's lifetime.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EngineStats {
    pub updates: u64,
    pub notifications: u64,
    pub embeddings: u64,
    /// Joins while locating and materializing path tuples.
    pub path_joins: JoinStats,
    /// Joins that re-compose queries from path views.
    pub final_joins: JoinStats,
    /// Trie nodes skipped because their incoming delta was empty.
    pub pruned: u64,
}

impl EngineStats {
    /// Tuples examined while materializing paths (final joins excluded).
    pub fn examined(&self) -> u64 {
        self.path_joins.examined
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum EngineKind {
    Tric,
    TricPlus,
    Inv,
    InvPlus,
    Inc,
    IncPlus,
    Oracle,
}

impl EngineKind {
    pub const ALL: [EngineKind; 7] = [
        EngineKind::Tric,
        EngineKind::TricPlus,
        EngineKind::Inv,
        EngineKind::InvPlus,
        EngineKind::Inc,
        EngineKind::IncPlus,
        EngineKind::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EngineKind::Tric => "tric",
            EngineKind::TricPlus => "tric+",
            EngineKind::Inv => "inv",
            EngineKind::InvPlus => "inv+",
            EngineKind::Inc => "inc",
            EngineKind::IncPlus => "inc+",
            EngineKind::Oracle => "oracle",
        }
    }

    pub fn is_cached(self) -> bool {
        matches!(self, EngineKind::TricPlus | EngineKind::InvPlus | EngineKind::IncPlus)
    }
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown engine `{0}` (expected tric, tric+, inv, inv+, inc, inc+ or oracle)")]
pub struct UnknownEngine(pub String);

impl FromStr for EngineKind {
    type Err = UnknownEngine;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EngineKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownEngine(s.to_owned()))
    }
}

/// A continuous multi-query matcher over an edge-addition stream.
pub trait Engine {
    fn kind(&self) -> EngineKind;

    fn index_query(&mut self, q: &QueryGraphPattern) -> Result<(), EngineError>;

    /// Processes one update and returns one notification per query that
    /// gained embeddings, ordered by query id string.
    fn answer_update(&mut self, u: &Update) -> Result<Vec<Notification>, EngineError>;

    fn stats(&self) -> EngineStats;

    /// Approximate heap footprint of the engine's structures.
    fn memory_bytes(&self) -> usize;

    fn index_all(&mut self, queries: &[QueryGraphPattern]) -> Result<(), EngineError> {
        queries.iter().try_for_each(|q| self.index_query(q))
    }

    /// Feeds every update, passing notifications to `sink`.
    fn run<'a, I, S>(&mut self, updates: I, sink: &mut S) -> Result<(), EngineError>
    where
        I: IntoIterator<Item = &'a Update>,
        S: NotificationSink + ?Sized,
        Self: Sized,
    {
        for u in updates {
            for n in self.answer_update(u)? {
                sink.notify(&n);
            }
        }
        Ok(())
    }
}

pub fn build_engine(kind: EngineKind, mode: MatchMode) -> Box<dyn Engine> {
    match kind {
        EngineKind::Tric => Box::new(TricEngine::new(TricConfig { cached: false, prune: true, mode })),
        EngineKind::TricPlus => Box::new(TricEngine::new(TricConfig { cached: true, prune: true, mode })),
        EngineKind::Inv => Box::new(InvertedEngine::new(InvertedConfig::inv(false, mode))),
        EngineKind::InvPlus => Box::new(InvertedEngine::new(InvertedConfig::inv(true, mode))),
        EngineKind::Inc => Box::new(InvertedEngine::new(InvertedConfig::inc(false, mode))),
        EngineKind::IncPlus => Box::new(InvertedEngine::new(InvertedConfig::inc(true, mode))),
        EngineKind::Oracle => Box::new(OracleEngine::new(mode)),
    }
}

/// Orders notifications by query id string and drops empty ones.
pub(crate) fn finish_notifications(mut ns: Vec<Notification>) -> Vec<Notification> {
    ns.retain(|n| !n.embeddings.is_empty());
    ns.sort_by(|a, b| a.query_id.0.cmp_str(b.query_id.0));
    ns
}

/// Runs a whole stream and returns every notification.
pub fn replay(
    engine: &mut dyn Engine,
    queries: &[QueryGraphPattern],
    updates: &[Update],
) -> Result<Vec<Notification>, EngineError> {
    for q in queries {
        engine.index_query(q)?;
    }
    let mut out = Vec::new();
    for u in updates {
        out.extend(engine.answer_update(u)?);
    }
    Ok(out)
}
