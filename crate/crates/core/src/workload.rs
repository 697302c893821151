//! Seeded synthetic workloads: query sets of chains, stars and cycles, and
//! edge streams that satisfy a chosen fraction of them.

use std::fmt::Write as _;
use std::io::{self, Write};

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::{FxHashMap, FxHashSet};
use thiserror::Error;

use crate::graph::{EdgePattern, EdgeTriple, GraphStream, VertexPattern};
use crate::label::Label;
use crate::oracle::{exists_embedding, GraphIndex};
use crate::plan::MatchMode;
use crate::query::{covering_paths, QueryGraphPattern, QueryId};

/// Probability that a query vertex is a literal.
pub const LITERAL_PROBABILITY: f64 = 0.3;

/// Random fill triples tried before accepting one that completes a query.
pub const MAX_FILL_ATTEMPTS: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct WorkloadParams {
    pub num_queries: usize,
    /// Mean number of edges per query.
    pub avg_size: usize,
    /// Fraction of queries the stream satisfies.
    pub selectivity: f64,
    /// Fraction of queries containing a shared seed path.
    pub overlap: f64,
    pub num_edges: usize,
    pub label_alphabet_size: usize,
    pub seed: u64,
    /// Vertices available to random fill edges.
    pub num_vertices: usize,
    /// Distinct literal vertices queries may mention.
    pub literal_pool: usize,
    /// Distinct shared seed paths.
    pub seed_pool: usize,
    /// Chance that a fill-edge endpoint is drawn from the literal pool.
    pub hub_probability: f64,
}

impl Default for WorkloadParams {
    fn default() -> Self {
        WorkloadParams {
            num_queries: 1000,
            avg_size: 5,
            selectivity: 0.25,
            overlap: 0.35,
            num_edges: 100_000,
            label_alphabet_size: 40,
            seed: 7,
            num_vertices: 100_000,
            literal_pool: 20,
            seed_pool: 4,
            hub_probability: 0.05,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum WorkloadError {
    #[error("invalid parameter {name}: {reason}")]
    InvalidParam { name: &'static str, reason: String },
    #[error("{planted} planted edges do not fit in a stream of {num_edges}")]
    TooManyPlanted { planted: usize, num_edges: usize },
}

fn invalid(name: &'static str, reason: impl Into<String>) -> WorkloadError {
    WorkloadError::InvalidParam { name, reason: reason.into() }
}

impl WorkloadParams {
    pub fn validate(&self) -> Result<(), WorkloadError> {
        if !(0.0..=1.0).contains(&self.selectivity) {
            return Err(invalid("selectivity", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.overlap) {
            return Err(invalid("overlap", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.hub_probability) {
            return Err(invalid("hub_probability", "must lie in [0, 1]"));
        }
        for (name, v) in [
            ("num_queries", self.num_queries),
            ("avg_size", self.avg_size),
            ("num_edges", self.num_edges),
            ("label_alphabet_size", self.label_alphabet_size),
            ("num_vertices", self.num_vertices),
            ("literal_pool", self.literal_pool),
            ("seed_pool", self.seed_pool),
        ] {
            if v == 0 {
                return Err(invalid(name, "must be positive"));
            }
        }
        Ok(())
    }

    /// `key=value` lines, one per parameter.
    pub fn manifest(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "num_queries={}", self.num_queries);
        let _ = writeln!(s, "avg_size={}", self.avg_size);
        let _ = writeln!(s, "selectivity={}", self.selectivity);
        let _ = writeln!(s, "overlap={}", self.overlap);
        let _ = writeln!(s, "num_edges={}", self.num_edges);
        let _ = writeln!(s, "label_alphabet_size={}", self.label_alphabet_size);
        let _ = writeln!(s, "seed={}", self.seed);
        let _ = writeln!(s, "num_vertices={}", self.num_vertices);
        let _ = writeln!(s, "literal_pool={}", self.literal_pool);
        let _ = writeln!(s, "seed_pool={}", self.seed_pool);
        let _ = writeln!(s, "hub_probability={}", self.hub_probability);
        s
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum QueryClass {
    Chain,
    Star,
    Cycle,
}

fn edge_label(i: usize) -> Label {
    Label::new(&format!("e{i}"))
}

fn literal(i: usize) -> Label {
    Label::new(&format!("n{i}"))
}

/// A shared sub-path: edge labels plus, per vertex, an optional literal.
#[derive(Clone, Debug)]
struct SeedPath {
    labels: Vec<Label>,
    literals: Vec<Option<usize>>,
}

struct QueryBuilder<'a> {
    rng: &'a mut ChaCha8Rng,
    params: &'a WorkloadParams,
    vertices: Vec<VertexPattern>,
    used_literals: FxHashSet<usize>,
}

impl QueryBuilder<'_> {
    fn vertex(&mut self, fixed: Option<Option<usize>>) -> usize {
        let choice = match fixed {
            Some(c) => c,
            None if self.rng.gen_bool(LITERAL_PROBABILITY) => Some(self.rng.gen_range(0..self.params.literal_pool)),
            None => None,
        };
        let v = match choice {
            Some(l) if self.used_literals.insert(l) => VertexPattern::Literal(literal(l)),
            _ => {
                let n = self.vertices.iter().filter(|v| v.is_variable()).count();
                VertexPattern::Variable(Label::new(&format!("v{n:02}")))
            }
        };
        self.vertices.push(v);
        self.vertices.len() - 1
    }

    fn label(&mut self) -> Label {
        edge_label(self.rng.gen_range(0..self.params.label_alphabet_size))
    }
}

fn query_size(rng: &mut ChaCha8Rng, avg: usize) -> usize {
    let w = 2.min(avg - 1);
    rng.gen_range(avg - w..=avg + w)
}

fn build_query(
    rng: &mut ChaCha8Rng,
    params: &WorkloadParams,
    id: usize,
    class: QueryClass,
    seed: Option<&SeedPath>,
) -> QueryGraphPattern {
    let size = query_size(rng, params.avg_size);
    let mut b = QueryBuilder { rng, params, vertices: Vec::new(), used_literals: FxHashSet::default() };
    let mut edges: Vec<(Label, usize, usize)> = Vec::new();
    let cap = match class {
        QueryClass::Chain => size,
        QueryClass::Star | QueryClass::Cycle => size - 1,
    };
    // seed prefix v0 -> ... -> vk
    let k = seed.map_or(0, |s| s.labels.len().min(cap));
    let mut prev = b.vertex(seed.map(|s| s.literals[0]));
    let first = prev;
    for i in 0..k {
        let s = seed.expect("k > 0 implies a seed");
        let next = b.vertex(Some(s.literals[i + 1]));
        edges.push((s.labels[i], prev, next));
        prev = next;
    }
    match class {
        QueryClass::Chain => {
            for _ in k..size {
                let next = b.vertex(None);
                let l = b.label();
                edges.push((l, prev, next));
                prev = next;
            }
        }
        QueryClass::Star => {
            let center = prev;
            for _ in k..size {
                let ray = b.vertex(None);
                let l = b.label();
                edges.push((l, center, ray));
            }
        }
        QueryClass::Cycle => {
            for _ in k..size - 1 {
                let next = b.vertex(None);
                let l = b.label();
                edges.push((l, prev, next));
                prev = next;
            }
            let l = b.label();
            edges.push((l, prev, first));
        }
    }
    let vertices = b.vertices;
    let edges = edges.into_iter().map(|(l, s, t)| EdgePattern::new(l, vertices[s], vertices[t])).collect();
    QueryGraphPattern::new(QueryId::new(&format!("q{id:04}")), edges).expect("generated queries are connected")
}

/// Generates `num_queries` queries; deterministic in `params`.
pub fn gen_queries(params: &WorkloadParams) -> Result<Vec<QueryGraphPattern>, WorkloadError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let seed_len = params.avg_size.div_ceil(2);
    let pool: Vec<SeedPath> = (0..params.seed_pool)
        .map(|_| SeedPath {
            labels: (0..seed_len).map(|_| edge_label(rng.gen_range(0..params.label_alphabet_size))).collect(),
            literals: (0..=seed_len)
                .map(|_| rng.gen_bool(LITERAL_PROBABILITY).then(|| rng.gen_range(0..params.literal_pool)))
                .collect(),
        })
        .collect();
    let n = params.num_queries;
    let overlapping = (params.overlap * n as f64).round() as usize;
    let mut with_seed = vec![false; n];
    for i in index::sample(&mut rng, n, overlapping.min(n)) {
        with_seed[i] = true;
    }
    let mut out = Vec::with_capacity(n);
    for (i, &shared) in with_seed.iter().enumerate() {
        let class = [QueryClass::Chain, QueryClass::Star, QueryClass::Cycle][rng.gen_range(0..3)];
        let seed = shared.then(|| &pool[rng.gen_range(0..pool.len())]);
        out.push(build_query(&mut rng, params, i, class, seed));
    }
    Ok(out)
}

/// Summary of a generated stream.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StreamReport {
    pub planted_queries: usize,
    pub planted_edges: usize,
    /// Fill triples accepted although they completed a non-planted query.
    pub forced_fill: usize,
}

/// Query edges in covering-path order, each once.
fn path_ordered_edges(q: &QueryGraphPattern) -> Vec<usize> {
    let d = covering_paths(q);
    let mut seen = vec![false; q.edges().len()];
    let mut out = Vec::with_capacity(q.edges().len());
    for e in d.edge_ids.iter().flatten() {
        if !std::mem::replace(&mut seen[*e], true) {
            out.push(*e);
        }
    }
    out
}

/// Generates `num_edges` updates that satisfy a `selectivity` fraction of
/// `queries`.
pub fn gen_stream(
    params: &WorkloadParams,
    queries: &[QueryGraphPattern],
) -> Result<(GraphStream, StreamReport), WorkloadError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ 0x5eed_57ea_u64);
    let n = queries.len();
    let planted_count = (params.selectivity * n as f64).round() as usize;
    let mut planted_ids: Vec<usize> = index::sample(&mut rng, n, planted_count.min(n)).into_vec();
    planted_ids.sort_unstable();
    let mut is_planted = vec![false; n];
    let mut per_query: Vec<Vec<EdgeTriple>> = Vec::with_capacity(planted_ids.len());
    for &qi in &planted_ids {
        is_planted[qi] = true;
        let q = &queries[qi];
        let values: Vec<Label> = q
            .vertices()
            .iter()
            .enumerate()
            .map(|(vi, v)| match v {
                VertexPattern::Literal(l) => *l,
                VertexPattern::Variable(_) => Label::new(&format!("w{qi}_{vi}")),
            })
            .collect();
        let edges = path_ordered_edges(q)
            .into_iter()
            .map(|e| {
                let (s, t) = q.endpoints()[e];
                EdgeTriple { edge_label: q.edges()[e].edge_label, source: values[s], target: values[t] }
            })
            .collect();
        per_query.push(edges);
    }
    let planted_edges: usize = per_query.iter().map(Vec::len).sum();
    if planted_edges > params.num_edges {
        return Err(WorkloadError::TooManyPlanted { planted: planted_edges, num_edges: params.num_edges });
    }

    // interleave queries while keeping each query's own order
    let mut tokens: Vec<usize> = per_query.iter().enumerate().flat_map(|(i, es)| std::iter::repeat_n(i, es.len())).collect();
    tokens.shuffle(&mut rng);
    let mut cursor = vec![0usize; per_query.len()];
    let mut positions = index::sample(&mut rng, params.num_edges, planted_edges).into_vec();
    positions.sort_unstable();
    let mut slots: Vec<Option<EdgeTriple>> = vec![None; params.num_edges];
    let mut all: FxHashSet<EdgeTriple> = FxHashSet::default();
    for (pos, qi) in positions.into_iter().zip(tokens) {
        let e = per_query[qi][cursor[qi]];
        cursor[qi] += 1;
        slots[pos] = Some(e);
        all.insert(e);
    }

    let mut watch: FxHashMap<Label, Vec<usize>> = FxHashMap::default();
    for (qi, q) in queries.iter().enumerate() {
        if is_planted[qi] {
            continue;
        }
        let mut labels: Vec<Label> = q.edges().iter().map(|e| e.edge_label).collect();
        labels.sort();
        labels.dedup();
        for l in labels {
            watch.entry(l).or_default().push(qi);
        }
    }

    let mut graph = GraphIndex::new();
    let mut report = StreamReport { planted_queries: planted_ids.len(), planted_edges, forced_fill: 0 };
    let mut triples = Vec::with_capacity(params.num_edges);
    for slot in slots {
        let e = match slot {
            Some(e) => e,
            None => {
                let mut chosen = None;
                for _ in 0..MAX_FILL_ATTEMPTS {
                    let e = random_triple(&mut rng, params);
                    if all.contains(&e) {
                        continue;
                    }
                    chosen = Some(e);
                    graph.insert(e);
                    let completes = watch.get(&e.edge_label).into_iter().flatten().any(|&qi| {
                        queries[qi].edges().iter().any(|p| p.matches(&e))
                            && exists_embedding(&graph, &queries[qi], Some(&e), MatchMode::Homomorphism)
                    });
                    graph.remove(&e);
                    if !completes {
                        break;
                    }
                    chosen = None;
                }
                let e = chosen.unwrap_or_else(|| {
                    report.forced_fill += 1;
                    loop {
                        let e = random_triple(&mut rng, params);
                        if !all.contains(&e) {
                            break e;
                        }
                    }
                });
                all.insert(e);
                e
            }
        };
        graph.insert(e);
        triples.push(e);
    }
    Ok((GraphStream::from_triples(triples), report))
}

fn random_triple(rng: &mut ChaCha8Rng, p: &WorkloadParams) -> EdgeTriple {
    let vertex = |rng: &mut ChaCha8Rng| {
        if rng.gen_bool(p.hub_probability) {
            literal(rng.gen_range(0..p.literal_pool))
        } else {
            Label::new(&format!("n{}", p.literal_pool + rng.gen_range(0..p.num_vertices)))
        }
    };
    let l = edge_label(rng.gen_range(0..p.label_alphabet_size));
    let s = vertex(rng);
    let t = vertex(rng);
    EdgeTriple { edge_label: l, source: s, target: t }
}

/// Fraction of queries with at least one embedding in the final graph.
pub fn achieved_selectivity(queries: &[QueryGraphPattern], stream: &GraphStream, mode: MatchMode) -> f64 {
    if queries.is_empty() {
        return 0.0;
    }
    let graph = GraphIndex::from_triples(stream.iter().map(|u| u.triple));
    let satisfied = queries.iter().filter(|q| exists_embedding(&graph, q, None, mode)).count();
    satisfied as f64 / queries.len() as f64
}

/// A generated workload and its manifest.
#[derive(Clone, Debug)]
pub struct Workload {
    pub params: WorkloadParams,
    pub queries: Vec<QueryGraphPattern>,
    pub stream: GraphStream,
    pub report: StreamReport,
}

impl Workload {
    pub fn generate(params: &WorkloadParams) -> Result<Workload, WorkloadError> {
        let queries = gen_queries(params)?;
        let (stream, report) = gen_stream(params, &queries)?;
        Ok(Workload { params: params.clone(), queries, stream, report })
    }

    pub fn mean_query_size(&self) -> f64 {
        self.queries.iter().map(|q| q.edges().len()).sum::<usize>() as f64 / self.queries.len().max(1) as f64
    }

    /// Parameters plus generation outcome as `key=value` lines.
    pub fn manifest(&self, achieved: Option<f64>) -> String {
        let mut s = self.params.manifest();
        let _ = writeln!(s, "planted_queries={}", self.report.planted_queries);
        let _ = writeln!(s, "planted_edges={}", self.report.planted_edges);
        let _ = writeln!(s, "forced_fill={}", self.report.forced_fill);
        let _ = writeln!(s, "mean_query_size={:.3}", self.mean_query_size());
        if let Some(a) = achieved {
            let _ = writeln!(s, "achieved_selectivity={a:.4}");
        }
        s
    }

    pub fn write_manifest<W: Write>(&self, achieved: Option<f64>, mut out: W) -> io::Result<()> {
        out.write_all(self.manifest(achieved).as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::write_query_file;

    fn small(seed: u64) -> WorkloadParams {
        WorkloadParams {
            num_queries: 30,
            avg_size: 4,
            num_edges: 600,
            label_alphabet_size: 6,
            num_vertices: 200,
            literal_pool: 8,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let render = |p: &WorkloadParams| {
            let w = Workload::generate(p).unwrap();
            let mut q = Vec::new();
            write_query_file(&w.queries, &mut q).unwrap();
            let mut s = Vec::new();
            crate::graph::write_stream(&w.stream, &mut s).unwrap();
            (q, s)
        };
        assert_eq!(render(&small(3)), render(&small(3)));
        assert_ne!(render(&small(3)).0, render(&small(4)).0);
    }

    #[test]
    fn invalid_params_are_rejected() {
        let p = WorkloadParams { selectivity: 1.5, ..small(1) };
        assert!(matches!(gen_queries(&p), Err(WorkloadError::InvalidParam { name: "selectivity", .. })));
        let p = WorkloadParams { avg_size: 0, ..small(1) };
        assert!(gen_queries(&p).is_err());
        let p = WorkloadParams { num_edges: 3, selectivity: 1.0, ..small(1) };
        let qs = gen_queries(&p).unwrap();
        assert!(matches!(gen_stream(&p, &qs), Err(WorkloadError::TooManyPlanted { .. })));
    }

    #[test]
    fn mean_size_tracks_average() {
        for avg in [1, 2, 5] {
            let p = WorkloadParams { num_queries: 400, avg_size: avg, ..small(9) };
            let qs = gen_queries(&p).unwrap();
            let mean = qs.iter().map(|q| q.edges().len()).sum::<usize>() as f64 / qs.len() as f64;
            assert!((mean - avg as f64).abs() <= 0.5, "avg {avg}: mean {mean}");
        }
    }

    #[test]
    fn full_overlap_chains_contain_a_seed_path() {
        let p = WorkloadParams { overlap: 1.0, seed_pool: 1, num_queries: 60, avg_size: 4, ..small(5) };
        let qs = gen_queries(&p).unwrap();
        // every chain starts with the same two edge labels
        let mut prefixes = FxHashSet::default();
        for q in &qs {
            let is_chain = q.edges().len() >= 3
                && q.endpoints().windows(2).all(|w| w[0].1 == w[1].0)
                && q.edges().len() == q.vertices().len() - 1;
            if is_chain {
                prefixes.insert((q.edges()[0].edge_label, q.edges()[1].edge_label));
            }
        }
        assert_eq!(prefixes.len(), 1);
    }

    #[test]
    fn planted_edges_keep_path_order() {
        let p = WorkloadParams { selectivity: 1.0, num_queries: 5, ..small(2) };
        let w = Workload::generate(&p).unwrap();
        let mut pos: FxHashMap<EdgeTriple, u64> = FxHashMap::default();
        for u in w.stream.iter() {
            pos.entry(u.triple).or_insert(u.t);
        }
        for (qi, q) in w.queries.iter().enumerate() {
            let order = path_ordered_edges(q);
            let ts: Vec<u64> = order
                .iter()
                .map(|&e| {
                    let (s, t) = q.endpoints()[e];
                    let val = |v: usize| match q.vertices()[v] {
                        VertexPattern::Literal(l) => l,
                        VertexPattern::Variable(_) => Label::new(&format!("w{qi}_{v}")),
                    };
                    pos[&EdgeTriple { edge_label: q.edges()[e].edge_label, source: val(s), target: val(t) }]
                })
                .collect();
            assert!(ts.windows(2).all(|w| w[0] <= w[1]), "query {qi}: {ts:?}");
        }
        assert_eq!(achieved_selectivity(&w.queries, &w.stream, MatchMode::Homomorphism), 1.0);
    }

    #[test]
    fn zero_selectivity_stays_near_zero() {
        let w = Workload::generate(&WorkloadParams { selectivity: 0.0, ..small(11) }).unwrap();
        assert!(achieved_selectivity(&w.queries, &w.stream, MatchMode::Homomorphism) <= 0.05);
        assert_eq!(w.stream.len(), 600);
    }
}
