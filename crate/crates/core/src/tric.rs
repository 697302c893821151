//! Trie-forest engine: covering paths of all queries share tries keyed by
//! their genericized edge patterns, and every trie node keeps the join of the
//! raw views along its root path. An update only touches the nodes whose
//! pattern it matches and the subtrees below them that still produce tuples.

use indexmap::IndexMap;
use rustc_hash::{FxHashMap, FxHashSet};
use smallvec::smallvec;

use crate::engine::{finish_notifications, Engine, EngineError, EngineKind, EngineStats, Notification};
use crate::graph::{GenericPattern, Update};
use crate::matview::{join, BindingTuple, JoinKey, JoinStats, MaterializedView};
use crate::plan::{MatchMode, QueryPlans};
use crate::query::{covering_paths, QueryGraphPattern, QueryId};
use crate::state::RawViews;

pub type NodeId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TricConfig {
    /// Keep persistent join indexes (the "+" variant).
    pub cached: bool,
    /// Stop propagating below nodes whose delta is empty. When false, every
    /// node of an affected trie is recomputed from scratch instead.
    pub prune: bool,
    pub mode: MatchMode,
}

impl Default for TricConfig {
    fn default() -> Self {
        TricConfig { cached: false, prune: true, mode: MatchMode::Homomorphism }
    }
}

#[derive(Clone, Debug)]
pub struct TrieNode {
    pub pattern: GenericPattern,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    /// 0 for roots.
    pub depth: usize,
    pub root: NodeId,
    /// Prefix join; unused for roots, whose view is the raw view.
    view: MaterializedView,
    /// Queries, and their path index, whose covering path ends here.
    pub terminals: Vec<(QueryId, usize)>,
}

#[derive(Clone, Debug)]
struct QueryEntry {
    plans: QueryPlans,
    terminals: Vec<NodeId>,
}

/// What the last update touched.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct UpdateTrace {
    /// Roots of the tries reached through the edge index.
    pub affected_tries: Vec<NodeId>,
    /// Nodes with a nonempty delta and the fresh tuples they received.
    pub node_deltas: Vec<(NodeId, MaterializedView)>,
    /// Nodes reached with an empty delta.
    pub pruned: Vec<NodeId>,
    pub affected_queries: Vec<QueryId>,
}

#[derive(Clone, Debug, Default)]
pub struct TricEngine {
    config: TricConfig,
    nodes: Vec<TrieNode>,
    root_ind: FxHashMap<GenericPattern, NodeId>,
    /// Pattern to the roots of every trie containing it.
    edge_ind: FxHashMap<GenericPattern, Vec<NodeId>>,
    /// Per trie root, pattern to the nodes carrying it.
    locators: FxHashMap<NodeId, FxHashMap<GenericPattern, Vec<NodeId>>>,
    query_ind: IndexMap<QueryId, QueryEntry>,
    raw: RawViews,
    stats: EngineStats,
    index_joins: JoinStats,
    trace: UpdateTrace,
}

impl TricEngine {
    pub fn new(config: TricConfig) -> Self {
        let mut raw = RawViews::new();
        if config.cached {
            raw.enable_cache(&[0, 1]);
        }
        TricEngine { config, raw, ..Default::default() }
    }

    pub fn config(&self) -> TricConfig {
        self.config
    }

    pub fn node(&self, id: NodeId) -> &TrieNode {
        &self.nodes[id]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn roots(&self) -> impl Iterator<Item = (&GenericPattern, NodeId)> {
        self.root_ind.iter().map(|(p, &n)| (p, n))
    }

    pub fn root_of(&self, pattern: &GenericPattern) -> Option<NodeId> {
        self.root_ind.get(pattern).copied()
    }

    /// Roots of the tries that contain `pattern`.
    pub fn tries_containing(&self, pattern: &GenericPattern) -> &[NodeId] {
        self.edge_ind.get(pattern).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Terminal node of each covering path of `q`.
    pub fn query_terminals(&self, q: QueryId) -> Option<&[NodeId]> {
        self.query_ind.get(&q).map(|e| e.terminals.as_slice())
    }

    pub fn raw_views(&self) -> &RawViews {
        &self.raw
    }

    pub fn last_trace(&self) -> &UpdateTrace {
        &self.trace
    }

    /// Patterns from the trie root down to `id`.
    pub fn pattern_path(&self, id: NodeId) -> Vec<GenericPattern> {
        let mut out = Vec::with_capacity(self.nodes[id].depth + 1);
        let mut cur = Some(id);
        while let Some(n) = cur {
            out.push(self.nodes[n].pattern);
            cur = self.nodes[n].parent;
        }
        out.reverse();
        out
    }

    /// The prefix view of a node (the raw view for roots).
    pub fn node_view(&self, id: NodeId) -> &MaterializedView {
        let n = &self.nodes[id];
        if n.depth == 0 {
            self.raw.view(&n.pattern)
        } else {
            &n.view
        }
    }

    /// Left-deep join of the raw views along the node's root path, computed
    /// without using any stored prefix view.
    pub fn prefix_view_from_scratch(&self, id: NodeId) -> MaterializedView {
        let path = self.pattern_path(id);
        let mut stats = JoinStats::default();
        let mut acc = self.raw.view(&path[0]).clone();
        for (k, p) in path.iter().enumerate().skip(1) {
            acc = join(&acc, self.raw.view(p), JoinKey::new(k, 0), &mut stats);
        }
        acc
    }

    fn node_view_mut(&mut self, id: NodeId) -> &mut MaterializedView {
        let n = &mut self.nodes[id];
        if n.depth == 0 {
            self.raw.get_mut(&n.pattern).expect("root pattern registered")
        } else {
            &mut n.view
        }
    }

    fn new_node(&mut self, pattern: GenericPattern, parent: Option<NodeId>) -> NodeId {
        let id = self.nodes.len();
        let (depth, root, view) = match parent {
            None => (0, id, MaterializedView::new(0)),
            Some(p) => {
                let depth = self.nodes[p].depth + 1;
                let mut js = JoinStats::default();
                let mut view = join(self.node_view(p), self.raw.view(&pattern), JoinKey::new(depth, 0), &mut js);
                self.index_joins.merge(&js);
                if self.config.cached {
                    view.cached_index(depth + 1);
                }
                (depth, self.nodes[p].root, view)
            }
        };
        self.nodes.push(TrieNode { pattern, parent, children: Vec::new(), depth, root, view, terminals: Vec::new() });
        if let Some(p) = parent {
            self.nodes[p].children.push(id);
        }
        let roots = self.edge_ind.entry(pattern).or_default();
        if !roots.contains(&root) {
            roots.push(root);
        }
        self.locators.entry(root).or_default().entry(pattern).or_default().push(id);
        id
    }

    fn process(&mut self, u: &Update) -> Result<Vec<Notification>, EngineError> {
        let grown = self.raw.append(u)?;
        self.stats.updates += 1;
        self.trace = UpdateTrace::default();
        if grown.is_empty() {
            return Ok(Vec::new());
        }

        let mut tries: Vec<NodeId> = Vec::new();
        for p in &grown {
            for &r in self.edge_ind.get(p).map(Vec::as_slice).unwrap_or(&[]) {
                if !tries.contains(&r) {
                    tries.push(r);
                }
            }
        }
        self.trace.affected_tries = tries.clone();

        let mut deltas: IndexMap<NodeId, MaterializedView> = IndexMap::new();
        let tuple: BindingTuple = smallvec![u.triple.source, u.triple.target];
        if self.config.prune {
            let mut sites: Vec<NodeId> = Vec::new();
            for &r in &tries {
                let loc = &self.locators[&r];
                for p in &grown {
                    sites.extend(loc.get(p).into_iter().flatten().copied());
                }
            }
            sites.sort_by_key(|&n| (self.nodes[n].depth, n));
            for site in sites {
                let fresh = if self.nodes[site].depth == 0 {
                    MaterializedView::singleton(tuple.clone())
                } else {
                    let parent = self.nodes[site].parent.expect("non-root has parent");
                    let single = MaterializedView::singleton(tuple.clone());
                    let key = JoinKey::new(self.nodes[site].depth, 0);
                    let mut js = JoinStats::default();
                    let d = join(self.node_view(parent), &single, key, &mut js);
                    self.stats.path_joins.merge(&js);
                    self.nodes[site].view.absorb(d)
                };
                if fresh.is_empty() {
                    continue;
                }
                self.propagate(site, fresh, &mut deltas);
            }
        } else {
            for &r in &tries {
                self.recompute_subtree(r, &grown, &tuple, &mut deltas);
            }
        }

        let mut touched: IndexMap<QueryId, Vec<(usize, NodeId)>> = IndexMap::new();
        for (&node, _) in &deltas {
            for &(q, path) in &self.nodes[node].terminals {
                touched.entry(q).or_default().push((path, node));
            }
        }
        let mut out = Vec::with_capacity(touched.len());
        let mut final_stats = JoinStats::default();
        for (q, paths) in &touched {
            let entry = &self.query_ind[q];
            if entry.terminals.iter().any(|&n| self.node_view(n).is_empty()) {
                continue;
            }
            let ds: Vec<(usize, &MaterializedView)> = paths.iter().map(|&(p, n)| (p, &deltas[&n])).collect();
            let embeddings =
                entry.plans.evaluate_deltas(&ds, |i| self.node_view(entry.terminals[i]), self.config.mode, &mut final_stats);
            if !embeddings.is_empty() {
                self.trace.affected_queries.push(*q);
                out.push(Notification { t: u.t, query_id: *q, embeddings });
            }
        }
        self.stats.final_joins.merge(&final_stats);
        self.trace.node_deltas = deltas.into_iter().collect();
        let out = finish_notifications(out);
        self.stats.notifications += out.len() as u64;
        self.stats.embeddings += out.iter().map(|n| n.embeddings.len() as u64).sum::<u64>();
        Ok(out)
    }

    /// Records `fresh` at `node` and pushes it down every child edge.
    fn propagate(&mut self, node: NodeId, fresh: MaterializedView, deltas: &mut IndexMap<NodeId, MaterializedView>) {
        let last = self.nodes[node].depth + 1;
        let children = self.nodes[node].children.clone();
        for c in children {
            let d = join(&fresh, self.raw.view(&self.nodes[c].pattern), JoinKey::new(last, 0), &mut self.stats.path_joins);
            let child_fresh = if d.is_empty() { d } else { self.nodes[c].view.absorb(d) };
            if child_fresh.is_empty() {
                self.stats.pruned += 1;
                self.trace.pruned.push(c);
                continue;
            }
            self.propagate(c, child_fresh, deltas);
        }
        match deltas.get_mut(&node) {
            Some(acc) => {
                acc.absorb(fresh);
            }
            None => {
                deltas.insert(node, fresh);
            }
        }
    }

    /// Pruning-free maintenance: rebuilds each non-root view from its parent
    /// and records the difference as the node's delta.
    fn recompute_subtree(
        &mut self,
        node: NodeId,
        grown: &[GenericPattern],
        tuple: &BindingTuple,
        deltas: &mut IndexMap<NodeId, MaterializedView>,
    ) {
        let n = &self.nodes[node];
        let fresh = match n.parent {
            None if grown.contains(&n.pattern) => MaterializedView::singleton(tuple.clone()),
            None => MaterializedView::new(2),
            Some(parent) => {
                let mut js = JoinStats::default();
                let rebuilt = join(self.node_view(parent), self.raw.view(&n.pattern), JoinKey::new(n.depth, 0), &mut js);
                self.stats.path_joins.merge(&js);
                self.nodes[node].view.absorb(rebuilt)
            }
        };
        if !fresh.is_empty() {
            deltas.insert(node, fresh);
        }
        for c in self.nodes[node].children.clone() {
            self.recompute_subtree(c, grown, tuple, deltas);
        }
    }
}

impl TricEngine {
    fn insert_query(&mut self, q: &QueryGraphPattern) -> Result<(), EngineError> {
        if self.query_ind.contains_key(&q.id()) {
            return Err(EngineError::DuplicateQuery(q.id()));
        }
        let decomp = covering_paths(q);
        for path in &decomp.paths {
            for p in &path.steps {
                self.raw.register(*p);
            }
        }
        let mut terminals = Vec::with_capacity(decomp.paths.len());
        for (i, path) in decomp.paths.iter().enumerate() {
            let first = path.steps[0];
            let mut cur = match self.root_ind.get(&first) {
                Some(&r) => r,
                None => {
                    let r = self.new_node(first, None);
                    self.root_ind.insert(first, r);
                    r
                }
            };
            for step in &path.steps[1..] {
                let existing = self.nodes[cur].children.iter().copied().find(|&c| self.nodes[c].pattern == *step);
                cur = match existing {
                    Some(c) => c,
                    None => self.new_node(*step, Some(cur)),
                };
            }
            self.nodes[cur].terminals.push((q.id(), i));
            terminals.push(cur);
        }
        let plans = QueryPlans::new(decomp, q.vertices().len());
        if self.config.cached {
            let keys: FxHashSet<(NodeId, usize)> =
                plans.plans.iter().flat_map(|p| p.key_columns()).map(|(path, col)| (terminals[path], col)).collect();
            for (node, col) in keys {
                self.node_view_mut(node).cached_index(col);
            }
        }
        self.query_ind.insert(q.id(), QueryEntry { plans, terminals });
        Ok(())
    }
}

impl Engine for TricEngine {
    fn kind(&self) -> EngineKind {
        if self.config.cached {
            EngineKind::TricPlus
        } else {
            EngineKind::Tric
        }
    }

    fn index_query(&mut self, q: &QueryGraphPattern) -> Result<(), EngineError> {
        self.insert_query(q)
    }

    fn answer_update(&mut self, u: &Update) -> Result<Vec<Notification>, EngineError> {
        self.process(u)
    }

    fn stats(&self) -> EngineStats {
        self.stats
    }

    fn memory_bytes(&self) -> usize {
        use std::mem::size_of;
        let nodes: usize = self
            .nodes
            .iter()
            .map(|n| {
                size_of::<TrieNode>()
                    + n.view.approx_bytes()
                    + n.children.capacity() * size_of::<NodeId>()
                    + n.terminals.capacity() * size_of::<(QueryId, usize)>()
            })
            .sum();
        let indexes = self.root_ind.len() * (size_of::<GenericPattern>() + size_of::<NodeId>())
            + self.edge_ind.values().map(|v| size_of::<GenericPattern>() + v.capacity() * size_of::<NodeId>()).sum::<usize>()
            + self
                .locators
                .values()
                .flat_map(|m| m.values())
                .map(|v| size_of::<GenericPattern>() + v.capacity() * size_of::<NodeId>())
                .sum::<usize>();
        let queries: usize = self
            .query_ind
            .values()
            .map(|e| {
                size_of::<QueryEntry>()
                    + e.terminals.capacity() * size_of::<NodeId>()
                    + e.plans.decomposition.bindings.iter().map(|b| b.len() * size_of::<usize>()).sum::<usize>()
            })
            .sum();
        nodes + indexes + queries + self.raw.approx_bytes()
    }
}
