//! Final joins that re-compose a query from its covering-path views.
//!
//! A [`JoinPlan`] fixes the order in which path views are joined starting
//! from one path. Each later path is attached on the first position it shares
//! with the accumulated schema; every other shared position, and every vertex
//! repeated inside a single path, becomes an equality filter.

use crate::matview::{join, BindingTuple, JoinKey, JoinStats, MaterializedView};
use crate::label::Label;
use crate::query::{PathDecomposition, VertexId};

/// Graph-matching semantics of the final join.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Default)]
pub enum MatchMode {
    /// Distinct query vertices may map to the same graph vertex.
    #[default]
    Homomorphism,
    /// Query vertices map injectively.
    Isomorphism,
}

impl MatchMode {
    pub fn parse(s: &str) -> Option<MatchMode> {
        match s {
            "hom" | "homomorphism" => Some(MatchMode::Homomorphism),
            "iso" | "isomorphism" => Some(MatchMode::Isomorphism),
            _ => None,
        }
    }
}

/// A query answer: one graph vertex per query vertex, in canonical order.
pub type Embedding = Vec<Label>;

#[derive(Clone, Debug, PartialEq, Eq)]
struct PlanStep {
    path: usize,
    key: JoinKey,
    /// Column pairs of the joined relation that must hold equal values.
    filters: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JoinPlan {
    start: usize,
    start_filters: Vec<(usize, usize)>,
    steps: Vec<PlanStep>,
    /// Column of the final relation holding each query vertex.
    output: Vec<usize>,
}

/// Columns `j > i` of `binding` repeating the vertex at an earlier column,
/// shifted by `offset`.
fn repeat_filters(binding: &[VertexId], offset: usize, skip: Option<usize>) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for j in 0..binding.len() {
        if Some(j) == skip {
            continue;
        }
        if let Some(i) = (0..j).find(|&i| Some(i) != skip && binding[i] == binding[j]) {
            out.push((offset + i, offset + j));
        }
    }
    out
}

impl JoinPlan {
    pub fn new(decomp: &PathDecomposition, num_vertices: usize, start: usize) -> JoinPlan {
        let n = decomp.paths.len();
        // vertex -> column of the accumulated relation
        let mut col_of: Vec<Option<usize>> = vec![None; num_vertices];
        let first = &decomp.bindings[start];
        for (pos, &v) in first.iter().enumerate() {
            col_of[v].get_or_insert(pos);
        }
        let start_filters = repeat_filters(first, 0, None);
        let mut width = first.len();
        let mut joined = vec![false; n];
        joined[start] = true;
        let mut steps = Vec::with_capacity(n.saturating_sub(1));
        for _ in 1..n {
            let next = (0..n)
                .find(|&p| !joined[p] && decomp.bindings[p].iter().any(|&v| col_of[v].is_some()))
                .expect("covering paths of a connected query are connected");
            joined[next] = true;
            let b = &decomp.bindings[next];
            let key_pos = b.iter().position(|&v| col_of[v].is_some()).expect("shared vertex");
            let key = JoinKey::new(col_of[b[key_pos]].expect("bound"), key_pos);
            // right column j (j != key_pos) lands at width + j - (j > key_pos)
            let out_col = |j: usize| width + j - usize::from(j > key_pos);
            let mut filters = Vec::new();
            let mut fresh: Vec<(VertexId, usize)> = Vec::new();
            for (j, &v) in b.iter().enumerate() {
                if j == key_pos {
                    continue;
                }
                if let Some(c) = col_of[v] {
                    filters.push((c, out_col(j)));
                } else if let Some(&(_, c)) = fresh.iter().find(|(w, _)| *w == v) {
                    filters.push((c, out_col(j)));
                } else {
                    fresh.push((v, out_col(j)));
                }
            }
            for (v, c) in fresh {
                col_of[v] = Some(c);
            }
            width += b.len() - 1;
            steps.push(PlanStep { path: next, key, filters });
        }
        let output = col_of.iter().map(|c| c.expect("every vertex lies on a path")).collect();
        JoinPlan { start, start_filters, steps, output }
    }

    pub fn start(&self) -> usize {
        self.start
    }

    /// Paths in join order after the start path.
    pub fn order(&self) -> impl Iterator<Item = usize> + '_ {
        self.steps.iter().map(|s| s.path)
    }

    /// `(path, position)` pairs probed as join keys on the right-hand side.
    pub fn key_columns(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.steps.iter().map(|s| (s.path, s.key.right_col))
    }

    /// Joins `start_view` (tuples of the start path) with the full views of
    /// the other paths. Returns embeddings in canonical vertex order.
    pub fn execute<'a, F>(
        &self,
        start_view: &MaterializedView,
        view_of: F,
        mode: MatchMode,
        stats: &mut JoinStats,
    ) -> Vec<Embedding>
    where
        F: Fn(usize) -> &'a MaterializedView,
    {
        let mut owned;
        let mut acc = start_view;
        if !self.start_filters.is_empty() {
            owned = filter(start_view, &self.start_filters);
            acc = &owned;
        }
        for step in &self.steps {
            if acc.is_empty() {
                return Vec::new();
            }
            owned = join(acc, view_of(step.path), step.key, stats);
            if !step.filters.is_empty() {
                owned = filter(&owned, &step.filters);
            }
            acc = &owned;
        }
        let mut out = Vec::with_capacity(acc.len());
        for t in acc.iter() {
            let e: Embedding = self.output.iter().map(|&c| t[c]).collect();
            if mode == MatchMode::Isomorphism && !all_distinct(&e) {
                continue;
            }
            out.push(e);
        }
        out
    }
}

fn filter(view: &MaterializedView, pairs: &[(usize, usize)]) -> MaterializedView {
    let keep = view.iter().filter(|t| pairs.iter().all(|&(a, b)| t[a] == t[b])).cloned();
    MaterializedView::from_tuples(view.columns(), keep.collect::<Vec<BindingTuple>>())
        .expect("filter preserves arity")
}

pub fn all_distinct(e: &[Label]) -> bool {
    e.iter().enumerate().all(|(i, a)| e[i + 1..].iter().all(|b| a != b))
}

/// String-lexicographic order over embeddings, for deterministic output.
pub fn sort_embeddings(embeddings: &mut Vec<Embedding>) {
    embeddings.sort_by(|a, b| {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.cmp_str(*y))
            .find(|o| o.is_ne())
            .unwrap_or_else(|| a.len().cmp(&b.len()))
    });
    embeddings.dedup();
}

/// One plan per possible start path.
#[derive(Clone, Debug)]
pub struct QueryPlans {
    pub decomposition: PathDecomposition,
    pub plans: Vec<JoinPlan>,
}

impl QueryPlans {
    pub fn new(decomposition: PathDecomposition, num_vertices: usize) -> Self {
        let plans = (0..decomposition.paths.len()).map(|s| JoinPlan::new(&decomposition, num_vertices, s)).collect();
        QueryPlans { decomposition, plans }
    }

    /// Embeddings that use at least one tuple of `deltas` (path index to
    /// delta view), joined against `full` views of every path.
    pub fn evaluate_deltas<'a, F>(
        &self,
        deltas: &[(usize, &MaterializedView)],
        full: F,
        mode: MatchMode,
        stats: &mut JoinStats,
    ) -> Vec<Embedding>
    where
        F: Fn(usize) -> &'a MaterializedView + Copy,
    {
        let mut out = Vec::new();
        for &(path, delta) in deltas {
            out.extend(self.plans[path].execute(delta, full, mode, stats));
        }
        sort_embeddings(&mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::{covering_paths, parse_query};

    fn t(items: &[&str]) -> BindingTuple {
        items.iter().map(|s| Label::new(s)).collect()
    }

    fn strings(es: &[Embedding]) -> Vec<Vec<&'static str>> {
        es.iter().map(|e| e.iter().map(|l| l.as_str()).collect()).collect()
    }

    #[test]
    fn cycle_self_intersection_filters_open_walks() {
        let q = parse_query("Q c\nab\t?a\t?b\nbc\t?b\t?c\nca\t?c\t?a\n").unwrap();
        let d = covering_paths(&q);
        let plan = JoinPlan::new(&d, q.vertices().len(), 0);
        let view = MaterializedView::from_tuples(4, [t(&["x", "y", "z", "x"]), t(&["x", "y", "z", "w"])]).unwrap();
        let mut stats = JoinStats::default();
        let out = plan.execute(&view, |_| &view, MatchMode::Homomorphism, &mut stats);
        assert_eq!(strings(&out), vec![vec!["x", "y", "z"]]);
    }

    #[test]
    fn empty_conjunct_annihilates() {
        let q = parse_query("Q 1\nhasMod\t?f\t?p\nposted\t?p\tpst1\nposted\t?p\tpst2\nreply\t?c\tpst2\n").unwrap();
        let d = covering_paths(&q);
        let qp = QueryPlans::new(d.clone(), q.vertices().len());
        let full: Vec<MaterializedView> = d
            .paths
            .iter()
            .map(|p| match p.len() {
                1 => MaterializedView::new(2),
                _ => MaterializedView::from_tuples(3, [t(&["f2", "p2", "pst1"]), t(&["f2", "p2", "pst2"])]).unwrap(),
            })
            .collect();
        let mut stats = JoinStats::default();
        let out = qp.evaluate_deltas(&[(0, &full[0]), (1, &full[1])], |i| &full[i], MatchMode::Homomorphism, &mut stats);
        assert!(out.is_empty());
    }

    #[test]
    fn moderator_query_joins_three_paths() {
        let q = parse_query("Q 1\nhasMod\t?f\t?p\nposted\t?p\tpst1\nposted\t?p\tpst2\nreply\t?c\tpst2\n").unwrap();
        let d = covering_paths(&q);
        let qp = QueryPlans::new(d.clone(), q.vertices().len());
        let full: Vec<MaterializedView> = d
            .paths
            .iter()
            .map(|p| {
                let rows = match p.to_string().as_str() {
                    "?var -reply-> pst2" => vec![t(&["c1", "pst2"])],
                    "?var -hasMod-> ?var -posted-> pst1" => vec![t(&["f2", "p2", "pst1"])],
                    _ => vec![t(&["f2", "p2", "pst2"]), t(&["f1", "p1", "pst2"])],
                };
                MaterializedView::from_tuples(p.len() + 1, rows).unwrap()
            })
            .collect();
        let mut stats = JoinStats::default();
        let all: Vec<(usize, &MaterializedView)> = full.iter().enumerate().collect();
        let out = qp.evaluate_deltas(&all, |i| &full[i], MatchMode::Homomorphism, &mut stats);
        // canonical order: pst1, pst2, ?c, ?f, ?p
        assert_eq!(strings(&out), vec![vec!["pst1", "pst2", "c1", "f2", "p2"]]);
    }

    #[test]
    fn isomorphism_drops_collapsed_vertices() {
        let q = parse_query("Q s\na\t?x\t?y\nb\t?x\t?z\n").unwrap();
        let d = covering_paths(&q);
        let qp = QueryPlans::new(d.clone(), q.vertices().len());
        let va = MaterializedView::from_tuples(2, [t(&["u", "v"])]).unwrap();
        let vb = MaterializedView::from_tuples(2, [t(&["u", "v"]), t(&["u", "w"])]).unwrap();
        let views = |i: usize| if d.paths[i].steps[0].edge_label == Label::new("a") { &va } else { &vb };
        let mut stats = JoinStats::default();
        let hom = qp.evaluate_deltas(&[(0, views(0))], views, MatchMode::Homomorphism, &mut stats);
        let iso = qp.evaluate_deltas(&[(0, views(0))], views, MatchMode::Isomorphism, &mut stats);
        assert_eq!(hom.len(), 2);
        assert_eq!(strings(&iso), vec![vec!["u", "v", "w"]]);
    }
}
