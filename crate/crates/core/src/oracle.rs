//! Brute-force reference matcher.
//!
//! Embeddings are found by backtracking over query edges against an
//! adjacency index of the whole graph. Nothing here shares code with the
//! view-based engines, which makes it usable as ground truth.

use indexmap::IndexMap;
use rustc_hash::{FxHashMap, FxHashSet};

use crate::engine::{finish_notifications, Engine, EngineError, EngineKind, EngineStats, Notification};
use crate::graph::{EdgeTriple, Update, VertexPattern};
use crate::label::Label;
use crate::plan::{sort_embeddings, Embedding, MatchMode};
use crate::query::{QueryGraphPattern, QueryId};
use crate::state::OrderError;

/// The full edge set with label and adjacency indexes.
#[derive(Clone, Debug, Default)]
pub struct GraphIndex {
    edges: FxHashSet<EdgeTriple>,
    by_label: FxHashMap<Label, Vec<(Label, Label)>>,
    out: FxHashMap<(Label, Label), Vec<Label>>,
    inn: FxHashMap<(Label, Label), Vec<Label>>,
}

impl GraphIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_triples(triples: impl IntoIterator<Item = EdgeTriple>) -> Self {
        let mut g = GraphIndex::new();
        for t in triples {
            g.insert(t);
        }
        g
    }

    /// Returns false for a triple already present.
    pub fn insert(&mut self, t: EdgeTriple) -> bool {
        if !self.edges.insert(t) {
            return false;
        }
        self.by_label.entry(t.edge_label).or_default().push((t.source, t.target));
        self.out.entry((t.edge_label, t.source)).or_default().push(t.target);
        self.inn.entry((t.edge_label, t.target)).or_default().push(t.source);
        true
    }

    /// Removes a triple; cheapest when it was the most recent insertion.
    pub fn remove(&mut self, t: &EdgeTriple) -> bool {
        if !self.edges.remove(t) {
            return false;
        }
        fn drop_last<T: PartialEq>(v: &mut Vec<T>, x: &T) {
            if let Some(i) = v.iter().rposition(|y| y == x) {
                v.remove(i);
            }
        }
        drop_last(self.by_label.get_mut(&t.edge_label).expect("indexed"), &(t.source, t.target));
        drop_last(self.out.get_mut(&(t.edge_label, t.source)).expect("indexed"), &t.target);
        drop_last(self.inn.get_mut(&(t.edge_label, t.target)).expect("indexed"), &t.source);
        true
    }

    pub fn contains(&self, t: &EdgeTriple) -> bool {
        self.edges.contains(t)
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    fn label_edges(&self, l: Label) -> &[(Label, Label)] {
        self.by_label.get(&l).map(Vec::as_slice).unwrap_or(&[])
    }

    fn targets(&self, l: Label, s: Label) -> &[Label] {
        self.out.get(&(l, s)).map(Vec::as_slice).unwrap_or(&[])
    }

    fn sources(&self, l: Label, t: Label) -> &[Label] {
        self.inn.get(&(l, t)).map(Vec::as_slice).unwrap_or(&[])
    }

    fn approx_bytes(&self) -> usize {
        use std::mem::size_of;
        let n = self.edges.len();
        n * (size_of::<EdgeTriple>() + 8) + n * 2 * size_of::<Label>() * 3
    }
}

struct Search<'a> {
    graph: &'a GraphIndex,
    q: &'a QueryGraphPattern,
    mode: MatchMode,
    assignment: Vec<Option<Label>>,
    done: Vec<bool>,
    stop_at_first: bool,
    found: Vec<Embedding>,
}

impl Search<'_> {
    fn bind(&mut self, v: usize, value: Label) -> Option<bool> {
        match self.assignment[v] {
            Some(x) => (x == value).then_some(false),
            None => {
                if self.mode == MatchMode::Isomorphism && self.assignment.contains(&Some(value)) {
                    return None;
                }
                self.assignment[v] = Some(value);
                Some(true)
            }
        }
    }

    /// Estimated number of candidates for an unmatched edge.
    fn cost(&self, e: usize) -> usize {
        let (s, t) = self.q.endpoints()[e];
        let l = self.q.edges()[e].edge_label;
        match (self.assignment[s], self.assignment[t]) {
            (Some(_), Some(_)) => 0,
            (Some(a), None) => self.graph.targets(l, a).len(),
            (None, Some(b)) => self.graph.sources(l, b).len(),
            (None, None) => self.graph.label_edges(l).len(),
        }
    }

    /// Returns true once the search should stop.
    fn run(&mut self) -> bool {
        let next = (0..self.done.len()).filter(|&e| !self.done[e]).min_by_key(|&e| self.cost(e));
        let Some(e) = next else {
            self.found.push(self.assignment.iter().map(|a| a.expect("all vertices bound")).collect());
            return self.stop_at_first;
        };
        self.done[e] = true;
        let (s, t) = self.q.endpoints()[e];
        let l = self.q.edges()[e].edge_label;
        let pairs: Vec<(Label, Label)> = match (self.assignment[s], self.assignment[t]) {
            (Some(a), Some(b)) => {
                if self.graph.contains(&EdgeTriple { edge_label: l, source: a, target: b }) {
                    vec![(a, b)]
                } else {
                    vec![]
                }
            }
            (Some(a), None) => self.graph.targets(l, a).iter().map(|&b| (a, b)).collect(),
            (None, Some(b)) => self.graph.sources(l, b).iter().map(|&a| (a, b)).collect(),
            (None, None) => self.graph.label_edges(l).to_vec(),
        };
        let mut stop = false;
        for (a, b) in pairs {
            let Some(new_s) = self.bind(s, a) else { continue };
            if let Some(new_t) = self.bind(t, b) {
                stop = self.run();
                if new_t {
                    self.assignment[t] = None;
                }
            }
            if new_s {
                self.assignment[s] = None;
            }
            if stop {
                break;
            }
        }
        self.done[e] = false;
        stop
    }
}

fn search(
    graph: &GraphIndex,
    q: &QueryGraphPattern,
    must_include: Option<&EdgeTriple>,
    mode: MatchMode,
    stop_at_first: bool,
) -> Vec<Embedding> {
    let base: Vec<Option<Label>> = q
        .vertices()
        .iter()
        .map(|v| match v {
            VertexPattern::Literal(l) => Some(*l),
            VertexPattern::Variable(_) => None,
        })
        .collect();
    let mut s = Search {
        graph,
        q,
        mode,
        assignment: base.clone(),
        done: vec![false; q.edges().len()],
        stop_at_first,
        found: Vec::new(),
    };
    match must_include {
        None => {
            s.run();
        }
        Some(u) => {
            if !graph.contains(u) {
                return Vec::new();
            }
            for e in 0..q.edges().len() {
                if !q.edges()[e].matches(u) {
                    continue;
                }
                let (vs, vt) = q.endpoints()[e];
                s.assignment.clone_from(&base);
                let ok = s.bind(vs, u.source).is_some() && s.bind(vt, u.target).is_some();
                if !ok {
                    continue;
                }
                s.done[e] = true;
                let stop = s.run();
                s.done[e] = false;
                if stop {
                    break;
                }
            }
        }
    }
    let mut found = s.found;
    sort_embeddings(&mut found);
    found
}

/// All embeddings of `q` in `graph`, in canonical vertex order. With
/// `must_include`, only those mapping some query edge onto that triple.
pub fn enumerate_embeddings(
    graph: &GraphIndex,
    q: &QueryGraphPattern,
    must_include: Option<&EdgeTriple>,
    mode: MatchMode,
) -> Vec<Embedding> {
    search(graph, q, must_include, mode, false)
}

pub fn exists_embedding(
    graph: &GraphIndex,
    q: &QueryGraphPattern,
    must_include: Option<&EdgeTriple>,
    mode: MatchMode,
) -> bool {
    !search(graph, q, must_include, mode, true).is_empty()
}

/// Engine wrapper: re-runs the search for every query touched by an update.
#[derive(Clone, Debug, Default)]
pub struct OracleEngine {
    mode: MatchMode,
    graph: GraphIndex,
    queries: IndexMap<QueryId, QueryGraphPattern>,
    by_label: FxHashMap<Label, Vec<QueryId>>,
    last_t: Option<u64>,
    stats: EngineStats,
}

impl OracleEngine {
    pub fn new(mode: MatchMode) -> Self {
        OracleEngine { mode, ..Default::default() }
    }

    pub fn graph(&self) -> &GraphIndex {
        &self.graph
    }
}

impl Engine for OracleEngine {
    fn kind(&self) -> EngineKind {
        EngineKind::Oracle
    }

    fn index_query(&mut self, q: &QueryGraphPattern) -> Result<(), EngineError> {
        if self.queries.contains_key(&q.id()) {
            return Err(EngineError::DuplicateQuery(q.id()));
        }
        let mut labels: Vec<Label> = q.edges().iter().map(|e| e.edge_label).collect();
        labels.sort();
        labels.dedup();
        for l in labels {
            self.by_label.entry(l).or_default().push(q.id());
        }
        self.queries.insert(q.id(), q.clone());
        Ok(())
    }

    fn answer_update(&mut self, u: &Update) -> Result<Vec<Notification>, EngineError> {
        if let Some(last) = self.last_t {
            if u.t <= last {
                return Err(OrderError { last, got: u.t }.into());
            }
        }
        self.last_t = Some(u.t);
        self.stats.updates += 1;
        if !self.graph.insert(u.triple) {
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        for qid in self.by_label.get(&u.triple.edge_label).into_iter().flatten() {
            let q = &self.queries[qid];
            if !q.edges().iter().any(|e| e.matches(&u.triple)) {
                continue;
            }
            let embeddings = enumerate_embeddings(&self.graph, q, Some(&u.triple), self.mode);
            if !embeddings.is_empty() {
                out.push(Notification { t: u.t, query_id: *qid, embeddings });
            }
        }
        let out = finish_notifications(out);
        self.stats.notifications += out.len() as u64;
        self.stats.embeddings += out.iter().map(|n| n.embeddings.len() as u64).sum::<u64>();
        Ok(out)
    }

    fn stats(&self) -> EngineStats {
        self.stats
    }

    fn memory_bytes(&self) -> usize {
        self.graph.approx_bytes()
            + self.queries.values().map(|q| std::mem::size_of_val(q.edges())).sum::<usize>()
    }
}
