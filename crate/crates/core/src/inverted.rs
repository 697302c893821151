//! Edge-level inverted-index engines without structural sharing.
//!
//! Each indexed edge pattern maps to the queries using it. On an update the
//! candidate queries are those using a grown pattern whose edges all have
//! data; their covering paths are then explored outward from every position
//! the update matches. `Inv` explores with the full raw view of the matched
//! pattern and re-materializes whole paths; `Inc` explores with the update
//! alone and joins the resulting path deltas against full path views.

use std::borrow::Cow;

use indexmap::{IndexMap, IndexSet};
use rustc_hash::{FxBuildHasher, FxHashMap, FxHashSet};
use smallvec::smallvec;

use crate::engine::{finish_notifications, Engine, EngineError, EngineKind, EngineStats, Notification};
use crate::graph::{Endpoint, GenericPattern, Update};
use crate::matview::{join, BindingTuple, JoinKey, JoinStats, MaterializedView};
use crate::plan::{sort_embeddings, MatchMode, QueryPlans};
use crate::query::{covering_paths, QueryGraphPattern, QueryId};
use crate::state::RawViews;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InvertedConfig {
    /// Seed exploration with the update only.
    pub incremental: bool,
    pub cached: bool,
    pub mode: MatchMode,
}

impl InvertedConfig {
    pub fn inv(cached: bool, mode: MatchMode) -> Self {
        InvertedConfig { incremental: false, cached, mode }
    }

    pub fn inc(cached: bool, mode: MatchMode) -> Self {
        InvertedConfig { incremental: true, cached, mode }
    }
}

#[derive(Clone, Debug)]
struct QueryEntry {
    query: QueryGraphPattern,
    plans: QueryPlans,
    /// Distinct edge patterns of the query.
    patterns: Vec<GenericPattern>,
}

/// One covering path being joined outward from the position `seed` where
/// the update matched. The current view spans steps `lo..=hi`.
#[derive(Clone, Copy, Debug)]
struct Witness {
    query: usize,
    path: usize,
    seed: usize,
    lo: usize,
    hi: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
enum Direction {
    Forward,
    Backward,
}

/// Exploration state: a pattern reached in one direction at a distance from
/// the matched pattern.
type State = (GenericPattern, Direction, usize);

#[derive(Clone, Debug)]
pub struct InvertedEngine {
    config: InvertedConfig,
    edge_ind: FxHashMap<GenericPattern, Vec<QueryId>>,
    source_ind: FxHashMap<Endpoint, IndexSet<GenericPattern, FxBuildHasher>>,
    target_ind: FxHashMap<Endpoint, IndexSet<GenericPattern, FxBuildHasher>>,
    query_ind: IndexMap<QueryId, QueryEntry>,
    raw: RawViews,
    stats: EngineStats,
}


impl InvertedEngine {
    pub fn new(config: InvertedConfig) -> Self {
        let mut raw = RawViews::new();
        if config.cached {
            raw.enable_cache(&[0, 1]);
        }
        InvertedEngine {
            config,
            edge_ind: FxHashMap::default(),
            source_ind: FxHashMap::default(),
            target_ind: FxHashMap::default(),
            query_ind: IndexMap::new(),
            raw,
            stats: EngineStats::default(),
        }
    }

    pub fn config(&self) -> InvertedConfig {
        self.config
    }

    /// Queries using `pattern`.
    pub fn queries_with(&self, pattern: &GenericPattern) -> &[QueryId] {
        self.edge_ind.get(pattern).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Patterns whose source endpoint is `key`.
    pub fn patterns_from(&self, key: &Endpoint) -> Vec<GenericPattern> {
        self.source_ind.get(key).map(|s| s.iter().copied().collect()).unwrap_or_default()
    }

    /// Patterns whose target endpoint is `key`.
    pub fn patterns_into(&self, key: &Endpoint) -> Vec<GenericPattern> {
        self.target_ind.get(key).map(|s| s.iter().copied().collect()).unwrap_or_default()
    }

    pub fn raw_views(&self) -> &RawViews {
        &self.raw
    }

    /// Walks the pattern graph outward from every grown pattern, forward
    /// through sourceInd and backward through targetInd, restricted to
    /// patterns of candidate queries and bounded by `max_depth`. Adjacent
    /// steps of a path share a query vertex, so a frontier endpoint continues
    /// only into patterns keyed by the same endpoint. The walk is layered by
    /// depth and expands each distinct frontier endpoint once per layer.
    fn reachable(&self, grown: &[GenericPattern], within: &FxHashSet<GenericPattern>, max_depth: usize) -> FxHashSet<State> {
        let mut seen: FxHashSet<State> = FxHashSet::default();
        for (dir, ind) in [(Direction::Forward, &self.source_ind), (Direction::Backward, &self.target_ind)] {
            let frontier_of = |p: &GenericPattern| match dir {
                Direction::Forward => p.target,
                Direction::Backward => p.source,
            };
            let mut layer: Vec<GenericPattern> = grown.iter().copied().filter(|g| within.contains(g)).collect();
            for depth in 0..=max_depth {
                let mut ends: Vec<Endpoint> = Vec::new();
                for p in &layer {
                    seen.insert((*p, dir, depth));
                    let e = frontier_of(p);
                    if !ends.contains(&e) {
                        ends.push(e);
                    }
                }
                if depth == max_depth {
                    break;
                }
                layer = ends
                    .iter()
                    .filter_map(|e| ind.get(e))
                    .flat_map(|s| s.iter().copied())
                    .filter(|p| within.contains(p))
                    .collect();
                if layer.is_empty() {
                    break;
                }
            }
        }
        seen
    }

    /// Extends `view` along one covering path, first forward to its end and
    /// then backward to its start. Returns the complete path view, or None
    /// when a step is unreachable or a join comes out empty.
    fn explore<'a>(
        &self,
        seed: &'a MaterializedView,
        mut w: Witness,
        reach: &FxHashSet<State>,
        stats: &mut JoinStats,
    ) -> Option<Cow<'a, MaterializedView>> {
        let steps = &self.query_ind[w.query].plans.decomposition.paths[w.path].steps;
        let mut view = Cow::Borrowed(seed);
        while w.hi + 1 < steps.len() {
            let p = steps[w.hi + 1];
            if !reach.contains(&(p, Direction::Forward, w.hi + 1 - w.seed)) {
                return None;
            }
            view = Cow::Owned(join(&view, self.raw.view(&p), JoinKey::new(view.columns() - 1, 0), stats));
            if view.is_empty() {
                return None;
            }
            w.hi += 1;
        }
        while w.lo > 0 {
            let p = steps[w.lo - 1];
            if !reach.contains(&(p, Direction::Backward, w.seed - (w.lo - 1))) {
                return None;
            }
            view = Cow::Owned(join(self.raw.view(&p), &view, JoinKey::new(1, 0), stats));
            if view.is_empty() {
                return None;
            }
            w.lo -= 1;
        }
        Some(view)
    }

    /// Left-deep join of the raw views along `steps`.
    fn materialize_path(&self, steps: &[GenericPattern], stats: &mut JoinStats) -> MaterializedView {
        let mut acc = join(self.raw.view(&steps[0]), self.raw.view(&steps[1]), JoinKey::new(1, 0), stats);
        for (k, p) in steps.iter().enumerate().skip(2) {
            if acc.is_empty() {
                return MaterializedView::new(steps.len() + 1);
            }
            acc = join(&acc, self.raw.view(p), JoinKey::new(k, 0), stats);
        }
        acc
    }

    fn process(&mut self, u: &Update) -> Result<Vec<Notification>, EngineError> {
        let grown = self.raw.append(u)?;
        self.stats.updates += 1;
        if grown.is_empty() {
            return Ok(Vec::new());
        }

        let mut candidates: IndexSet<usize, FxBuildHasher> = IndexSet::default();
        for p in &grown {
            for q in self.edge_ind.get(p).into_iter().flatten() {
                candidates.insert(self.query_ind.get_index_of(q).expect("indexed query"));
            }
        }
        candidates.retain(|&q| self.query_ind[q].patterns.iter().all(|p| self.raw.is_nonempty(p)));
        if candidates.is_empty() {
            return Ok(Vec::new());
        }

        let mut within: FxHashSet<GenericPattern> = FxHashSet::default();
        let mut max_len = 0;
        for &q in &candidates {
            let entry = &self.query_ind[q];
            within.extend(entry.patterns.iter().copied());
            max_len = max_len.max(entry.plans.decomposition.max_path_len());
        }
        let reach = self.reachable(&grown, &within, max_len.saturating_sub(1));

        let single = MaterializedView::singleton(smallvec![u.triple.source, u.triple.target] as BindingTuple);
        let mut path_stats = JoinStats::default();
        let mut final_stats = JoinStats::default();
        let mut out = Vec::new();
        for &q in &candidates {
            let entry = &self.query_ind[q];
            let paths = &entry.plans.decomposition.paths;
            // path index -> union of the explored views through the update
            let mut done: Vec<Option<Cow<MaterializedView>>> = vec![None; paths.len()];
            for (path, cp) in paths.iter().enumerate() {
                for (pos, step) in cp.steps.iter().enumerate() {
                    if !grown.contains(step) {
                        continue;
                    }
                    let seed = if self.config.incremental { &single } else { self.raw.view(step) };
                    let w = Witness { query: q, path, seed: pos, lo: pos, hi: pos };
                    if let Some(v) = self.explore(seed, w, &reach, &mut path_stats) {
                        match &mut done[path] {
                            Some(acc) => {
                                if let Cow::Borrowed(b) = acc {
                                    *acc = Cow::Owned(b.clone_rows());
                                }
                                acc.to_mut().absorb(v.into_owned());
                            }
                            slot => *slot = Some(v),
                        }
                    }
                }
            }
            let touched: Vec<usize> = (0..paths.len()).filter(|&i| done[i].is_some()).collect();
            if touched.is_empty() {
                continue;
            }
            // full views of the paths the final join reads
            let mut full_views: Vec<Option<MaterializedView>> = vec![None; paths.len()];
            for (i, cp) in paths.iter().enumerate() {
                let needed = !self.config.incremental || touched.len() > 1 || touched[0] != i;
                let explored = !self.config.incremental && done[i].is_some();
                if needed && !explored && cp.len() > 1 {
                    full_views[i] = Some(self.materialize_path(&cp.steps, &mut final_stats));
                }
            }
            let (full_views, done) = (&full_views, &done);
            let full = |i: usize| -> &MaterializedView {
                match (&full_views[i], &done[i]) {
                    (Some(v), _) => v,
                    (None, Some(v)) if !self.config.incremental => v,
                    _ => self.raw.view(&paths[i].steps[0]),
                }
            };
            let embeddings = if self.config.incremental {
                let ds: Vec<(usize, &MaterializedView)> =
                    touched.iter().map(|&i| (i, &**done[i].as_ref().expect("touched"))).collect();
                entry.plans.evaluate_deltas(&ds, full, self.config.mode, &mut final_stats)
            } else {
                let mut es = entry.plans.plans[0].execute(full(0), full, self.config.mode, &mut final_stats);
                es.retain(|e| entry.query.assignment_uses(e, &u.triple));
                sort_embeddings(&mut es);
                es
            };
            if !embeddings.is_empty() {
                out.push(Notification { t: u.t, query_id: *self.query_ind.get_index(q).expect("index").0, embeddings });
            }
        }
        self.stats.path_joins.merge(&path_stats);
        self.stats.final_joins.merge(&final_stats);
        let out = finish_notifications(out);
        self.stats.notifications += out.len() as u64;
        self.stats.embeddings += out.iter().map(|n| n.embeddings.len() as u64).sum::<u64>();
        Ok(out)
    }
}

impl Engine for InvertedEngine {
    fn kind(&self) -> EngineKind {
        match (self.config.incremental, self.config.cached) {
            (false, false) => EngineKind::Inv,
            (false, true) => EngineKind::InvPlus,
            (true, false) => EngineKind::Inc,
            (true, true) => EngineKind::IncPlus,
        }
    }

    fn index_query(&mut self, q: &QueryGraphPattern) -> Result<(), EngineError> {
        if self.query_ind.contains_key(&q.id()) {
            return Err(EngineError::DuplicateQuery(q.id()));
        }
        let decomp = covering_paths(q);
        let mut patterns: Vec<GenericPattern> = Vec::new();
        for p in q.edges().iter().map(|e| e.genericize()) {
            if !patterns.contains(&p) {
                patterns.push(p);
            }
        }
        for p in &patterns {
            self.raw.register(*p);
            self.edge_ind.entry(*p).or_default().push(q.id());
            self.source_ind.entry(p.source).or_default().insert(*p);
            self.target_ind.entry(p.target).or_default().insert(*p);
        }
        let plans = QueryPlans::new(decomp, q.vertices().len());
        self.query_ind.insert(q.id(), QueryEntry { query: q.clone(), plans, patterns });
        Ok(())
    }

    fn answer_update(&mut self, u: &Update) -> Result<Vec<Notification>, EngineError> {
        self.process(u)
    }

    fn stats(&self) -> EngineStats {
        self.stats
    }

    fn memory_bytes(&self) -> usize {
        use std::mem::size_of;
        let gp = size_of::<GenericPattern>();
        let edge: usize = self.edge_ind.values().map(|v| gp + v.capacity() * size_of::<QueryId>()).sum();
        let ends: usize = self
            .source_ind
            .values()
            .chain(self.target_ind.values())
            .map(|s| size_of::<Endpoint>() + s.len() * (gp + 8))
            .sum();
        let queries: usize = self
            .query_ind
            .values()
            .map(|e| {
                size_of::<QueryEntry>()
                    + e.patterns.capacity() * gp
                    + std::mem::size_of_val(e.query.edges())
                    + e.plans.decomposition.bindings.iter().map(|b| b.len() * size_of::<usize>()).sum::<usize>()
            })
            .sum();
        edge + ends + queries + self.raw.approx_bytes()
    }
}
