//! Query graph patterns and their covering-path decomposition.
//!
//! A query is decomposed into directed paths that together cover every
//! vertex and edge. Paths are stored genericized (variables become `?var`)
//! so that structurally identical paths of different queries share index
//! entries; the original vertex identity at every path position is kept in
//! `bindings` and drives the joins that re-compose the query.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{self, Write};

use thiserror::Error;

use crate::graph::{EdgePattern, EdgeTriple, GenericPattern, VertexPattern};
use crate::label::Label;

/// Query identifier (interned).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct QueryId(pub Label);

impl QueryId {
    pub fn new(id: &str) -> Self {
        QueryId(Label::new(id))
    }

    pub fn as_str(&self) -> &'static str {
        self.0.as_str()
    }
}

impl fmt::Display for QueryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QueryError {
    #[error("line {line}: expected header `Q <id>`")]
    MissingHeader { line: usize },
    #[error("line {line}: expected 3 tab-separated fields, found {found}")]
    FieldCount { line: usize, found: usize },
    #[error("line {line}: empty field or bare `?`")]
    EmptyField { line: usize },
    #[error("query {0} has no edges")]
    Empty(String),
    #[error("query {0} is not connected")]
    Disconnected(String),
    #[error("duplicate query id {0}")]
    DuplicateId(String),
}

/// A vertex index into [`QueryGraphPattern::vertices`].
pub type VertexId = usize;

/// A validated query: nonempty, weakly connected, duplicate-free edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryGraphPattern {
    id: QueryId,
    edges: Vec<EdgePattern>,
    /// Distinct vertices in canonical order (literals, then variables).
    vertices: Vec<VertexPattern>,
    /// Per edge, (source vertex, target vertex).
    endpoints: Vec<(VertexId, VertexId)>,
}

impl QueryGraphPattern {
    pub fn new(id: QueryId, edges: Vec<EdgePattern>) -> Result<Self, QueryError> {
        let mut seen = HashSet::new();
        let edges: Vec<EdgePattern> = edges.into_iter().filter(|e| seen.insert(*e)).collect();
        if edges.is_empty() {
            return Err(QueryError::Empty(id.to_string()));
        }
        let mut vertices: Vec<VertexPattern> = Vec::new();
        for e in &edges {
            for v in [e.source, e.target] {
                if !vertices.contains(&v) {
                    vertices.push(v);
                }
            }
        }
        vertices.sort_by(|a, b| a.canonical_cmp(b));
        let position = |v: &VertexPattern| vertices.iter().position(|x| x == v).expect("vertex collected");
        let endpoints: Vec<(VertexId, VertexId)> =
            edges.iter().map(|e| (position(&e.source), position(&e.target))).collect();

        // weak connectivity via union-find
        let mut parent: Vec<usize> = (0..vertices.len()).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for &(s, t) in &endpoints {
            let (a, b) = (find(&mut parent, s), find(&mut parent, t));
            parent[a] = b;
        }
        let root = find(&mut parent, 0);
        if (0..vertices.len()).any(|v| find(&mut parent, v) != root) {
            return Err(QueryError::Disconnected(id.to_string()));
        }
        Ok(QueryGraphPattern { id, edges, vertices, endpoints })
    }

    pub fn id(&self) -> QueryId {
        self.id
    }

    pub fn edges(&self) -> &[EdgePattern] {
        &self.edges
    }

    pub fn vertices(&self) -> &[VertexPattern] {
        &self.vertices
    }

    pub fn endpoints(&self) -> &[(VertexId, VertexId)] {
        &self.endpoints
    }

    pub fn var_names(&self) -> Vec<Label> {
        self.vertices
            .iter()
            .filter_map(|v| match v {
                VertexPattern::Variable(n) => Some(*n),
                VertexPattern::Literal(_) => None,
            })
            .collect()
    }

    pub fn vertex_id(&self, v: &VertexPattern) -> Option<VertexId> {
        self.vertices.iter().position(|x| x == v)
    }

    /// Does the assignment (canonical vertex order) map some query edge onto
    /// `triple`?
    pub fn assignment_uses(&self, assignment: &[Label], triple: &EdgeTriple) -> bool {
        self.edges.iter().zip(&self.endpoints).any(|(e, &(s, t))| {
            e.edge_label == triple.edge_label && assignment[s] == triple.source && assignment[t] == triple.target
        })
    }

    /// Writes the query in the text format accepted by [`parse_query`].
    pub fn write_to<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "Q {}", self.id)?;
        for e in &self.edges {
            writeln!(out, "{}\t{}\t{}", e.edge_label, e.source, e.target)?;
        }
        Ok(())
    }
}

fn parse_vertex(token: &str, line: usize) -> Result<VertexPattern, QueryError> {
    let token = token.trim();
    match token.strip_prefix('?') {
        Some("") => Err(QueryError::EmptyField { line }),
        Some(name) => Ok(VertexPattern::Variable(Label::new(name))),
        None if token.is_empty() => Err(QueryError::EmptyField { line }),
        None => Ok(VertexPattern::Literal(Label::new(token))),
    }
}

fn parse_block(lines: &[(usize, &str)]) -> Result<QueryGraphPattern, QueryError> {
    let (header_line, header) = lines[0];
    let id = header
        .trim()
        .strip_prefix("Q ")
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .ok_or(QueryError::MissingHeader { line: header_line })?;
    let mut edges = Vec::new();
    for &(line, text) in &lines[1..] {
        let fields: Vec<&str> = text.split('\t').collect();
        if fields.len() != 3 {
            return Err(QueryError::FieldCount { line, found: fields.len() });
        }
        let label = fields[0].trim();
        if label.is_empty() {
            return Err(QueryError::EmptyField { line });
        }
        edges.push(EdgePattern::new(
            Label::new(label),
            parse_vertex(fields[1], line)?,
            parse_vertex(fields[2], line)?,
        ));
    }
    QueryGraphPattern::new(QueryId::new(id), edges)
}

fn blocks(text: &str) -> Vec<Vec<(usize, &str)>> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().starts_with('#') {
            continue;
        }
        if line.trim().is_empty() {
            if !current.is_empty() {
                out.push(std::mem::take(&mut current));
            }
            continue;
        }
        current.push((i + 1, line));
    }
    if !current.is_empty() {
        out.push(current);
    }
    out
}

/// Parses a single query: header `Q <id>` then one edge per line, where a
/// token starting with `?` is a variable.
pub fn parse_query(text: &str) -> Result<QueryGraphPattern, QueryError> {
    let mut bs = blocks(text);
    match bs.len() {
        0 => Err(QueryError::MissingHeader { line: 1 }),
        1 => parse_block(&bs.pop().expect("one block")),
        // a blank line inside one query splits it; treat the rest as edges
        _ => parse_block(&bs.concat()),
    }
}

/// Parses a query file: queries separated by blank lines, ids unique.
pub fn parse_query_file(text: &str) -> Result<Vec<QueryGraphPattern>, QueryError> {
    let mut ids = HashSet::new();
    let mut out = Vec::new();
    for block in blocks(text) {
        let q = parse_block(&block)?;
        if !ids.insert(q.id()) {
            return Err(QueryError::DuplicateId(q.id().to_string()));
        }
        out.push(q);
    }
    Ok(out)
}

pub fn write_query_file<W: Write>(queries: &[QueryGraphPattern], mut out: W) -> io::Result<()> {
    for (i, q) in queries.iter().enumerate() {
        if i > 0 {
            writeln!(out)?;
        }
        q.write_to(&mut out)?;
    }
    Ok(())
}

/// A genericized directed path through a query.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CoveringPath {
    pub steps: Vec<GenericPattern>,
}

impl CoveringPath {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

impl fmt::Display for CoveringPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.steps.iter().enumerate() {
            if i == 0 {
                write!(f, "{}", s.source)?;
            }
            write!(f, " -{}-> {}", s.edge_label, s.target)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathDecomposition {
    pub query_id: QueryId,
    pub paths: Vec<CoveringPath>,
    /// Per path, the query vertex at each of its `len + 1` positions.
    pub bindings: Vec<Vec<VertexId>>,
    /// Per path, the query edge index of each step.
    pub edge_ids: Vec<Vec<usize>>,
    /// Variables occurring in two or more (path, position) slots.
    pub intersections: BTreeMap<Label, Vec<(usize, usize)>>,
}

impl PathDecomposition {
    /// Position pairs at which two paths carry the same vertex.
    pub fn intersections_of(&self, path_a: usize, path_b: usize) -> Vec<(usize, usize)> {
        let (a, b) = (&self.bindings[path_a], &self.bindings[path_b]);
        let mut out = Vec::new();
        for (i, va) in a.iter().enumerate() {
            for (j, vb) in b.iter().enumerate() {
                if va == vb && (path_a != path_b || i < j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn max_path_len(&self) -> usize {
        self.paths.iter().map(|p| p.len()).max().unwrap_or(0)
    }
}

/// Free-function form of [`PathDecomposition::intersections_of`].
pub fn intersections_of(decomp: &PathDecomposition, path_a: usize, path_b: usize) -> Vec<(usize, usize)> {
    decomp.intersections_of(path_a, path_b)
}

fn is_contiguous_subsequence(needle: &[usize], hay: &[usize]) -> bool {
    needle.len() <= hay.len() && hay.windows(needle.len()).any(|w| w == needle)
}

/// Greedy covering-path extraction.
///
/// Vertices are visited in canonical order. From each vertex, depth-first
/// walks are repeated while they cover a not-yet-covered edge. A walk
/// prefers uncovered edges, then edges leading to a vertex not yet on the
/// walk, then `(edge label, target)` order; it never reuses an edge, stops at
/// a vertex without usable out-edges, and may close a cycle only as its final
/// step. Paths that are contiguous sub-paths of another are dropped.
pub fn covering_paths(q: &QueryGraphPattern) -> PathDecomposition {
    let n_edges = q.edges.len();
    let mut out_edges: Vec<Vec<usize>> = vec![Vec::new(); q.vertices.len()];
    for (e, &(s, _)) in q.endpoints.iter().enumerate() {
        out_edges[s].push(e);
    }
    let mut covered = vec![false; n_edges];
    let mut covered_count = 0;
    let mut walks: Vec<Vec<usize>> = Vec::new();

    for start in 0..q.vertices.len() {
        if covered_count == n_edges {
            break;
        }
        loop {
            let walk = walk_from(q, &out_edges, &covered, start);
            if !walk.iter().any(|&e| !covered[e]) {
                break;
            }
            for &e in &walk {
                if !covered[e] {
                    covered[e] = true;
                    covered_count += 1;
                }
            }
            walks.push(walk);
        }
    }

    let keep: Vec<bool> = (0..walks.len())
        .map(|i| {
            !(0..walks.len()).any(|j| {
                j != i
                    && is_contiguous_subsequence(&walks[i], &walks[j])
                    && (walks[i].len() < walks[j].len() || j < i)
            })
        })
        .collect();
    let walks: Vec<Vec<usize>> = walks.into_iter().zip(keep).filter(|(_, k)| *k).map(|(w, _)| w).collect();

    let mut paths = Vec::with_capacity(walks.len());
    let mut bindings = Vec::with_capacity(walks.len());
    for w in &walks {
        paths.push(CoveringPath { steps: w.iter().map(|&e| q.edges[e].genericize()).collect() });
        let mut b = vec![q.endpoints[w[0]].0];
        b.extend(w.iter().map(|&e| q.endpoints[e].1));
        bindings.push(b);
    }

    let mut slots: BTreeMap<Label, Vec<(usize, usize)>> = BTreeMap::new();
    for (p, b) in bindings.iter().enumerate() {
        for (pos, &v) in b.iter().enumerate() {
            if let VertexPattern::Variable(name) = q.vertices[v] {
                slots.entry(name).or_default().push((p, pos));
            }
        }
    }
    slots.retain(|_, s| s.len() >= 2);

    PathDecomposition { query_id: q.id, paths, bindings, edge_ids: walks, intersections: slots }
}

fn walk_from(q: &QueryGraphPattern, out_edges: &[Vec<usize>], covered: &[bool], start: VertexId) -> Vec<usize> {
    let mut walk = Vec::new();
    let mut used = vec![false; q.edges.len()];
    let mut on_walk = vec![false; q.vertices.len()];
    on_walk[start] = true;
    let mut cur = start;
    loop {
        let next = out_edges[cur].iter().copied().filter(|&e| !used[e]).min_by(|&a, &b| {
            let (ta, tb) = (q.endpoints[a].1, q.endpoints[b].1);
            covered[a]
                .cmp(&covered[b])
                .then(on_walk[ta].cmp(&on_walk[tb]))
                .then(q.edges[a].edge_label.cmp_str(q.edges[b].edge_label))
                .then(ta.cmp(&tb))
        });
        let Some(e) = next else { break };
        used[e] = true;
        walk.push(e);
        let t = q.endpoints[e].1;
        if on_walk[t] {
            break;
        }
        on_walk[t] = true;
        cur = t;
    }
    walk
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(text: &str) -> QueryGraphPattern {
        parse_query(text).unwrap()
    }

    fn render(d: &PathDecomposition) -> Vec<String> {
        d.paths.iter().map(|p| p.to_string()).collect()
    }

    #[test]
    fn parses_single_edge_query() {
        let q2 = q("Q 2\nhasMod\t?a\t?b\n");
        assert_eq!(q2.id(), QueryId::new("2"));
        assert_eq!(q2.edges().len(), 1);
        assert!(q2.edges()[0].source.is_variable());
        assert_eq!(q2.var_names().len(), 2);
    }

    #[test]
    fn parses_chain_through_literal() {
        let q7 = q("Q 7\nposted\t?x\tpst1\ncontainedIn\tpst1\t?y\n");
        assert_eq!(q7.edges().len(), 2);
        assert_eq!(q7.vertices().len(), 3);
        assert_eq!(q7.vertices()[0], VertexPattern::Literal(Label::new("pst1")));
    }

    #[test]
    fn rejects_disconnected_and_empty_queries() {
        assert_eq!(
            parse_query("Q 9\na\t?x\t?y\nb\t?z\t?w\n").unwrap_err(),
            QueryError::Disconnected("9".into())
        );
        assert_eq!(parse_query("Q 9\n").unwrap_err(), QueryError::Empty("9".into()));
        assert!(matches!(parse_query("a\t?x\t?y\n"), Err(QueryError::MissingHeader { .. })));
        assert!(matches!(parse_query("Q 1\na\t?\t?y\n"), Err(QueryError::EmptyField { line: 2 })));
    }

    #[test]
    fn rejects_duplicate_ids_in_file() {
        let err = parse_query_file("Q 1\na\t?x\t?y\n\nQ 1\nb\t?x\t?y\n").unwrap_err();
        assert_eq!(err, QueryError::DuplicateId("1".into()));
    }

    #[test]
    fn query_file_round_trips() {
        let text = "Q 1\na\t?x\tlit\n\nQ 2\nb\t?x\t?y\nc\t?y\t?x\n";
        let qs = parse_query_file(text).unwrap();
        let mut buf = Vec::new();
        write_query_file(&qs, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), text);
    }

    #[test]
    fn moderator_chain_is_one_path() {
        let q4 = q("Q 4\nhasMod\t?a\t?b\nposted\t?b\tpst1\ncontainedIn\tpst1\t?c\n");
        let d = covering_paths(&q4);
        assert_eq!(render(&d), vec!["?var -hasMod-> ?var -posted-> pst1 -containedIn-> ?var"]);
    }

    #[test]
    fn single_edge_is_one_path() {
        let d = covering_paths(&q("Q 2\nhasMod\t?a\t?b\n"));
        assert_eq!(d.paths.len(), 1);
        assert_eq!(d.paths[0].steps, vec![q("Q 2\nhasMod\t?a\t?b\n").edges()[0].genericize()]);
    }

    #[test]
    fn star_decomposes_into_rays_sharing_center() {
        let star = q("Q s\na\t?c\t?x\nb\t?c\t?y\nc\t?c\t?z\n");
        let d = covering_paths(&star);
        assert_eq!(d.paths.len(), 3);
        assert!(d.paths.iter().all(|p| p.len() == 1));
        let center = star.vertex_id(&VertexPattern::Variable(Label::new("c"))).unwrap();
        assert!(d.bindings.iter().all(|b| b[0] == center));
        assert_eq!(d.intersections[&Label::new("c")], vec![(0, 0), (1, 0), (2, 0)]);
    }

    #[test]
    fn cycle_is_one_path_with_self_intersection() {
        let cyc = q("Q c\nab\t?a\t?b\nbc\t?b\t?c\nca\t?c\t?a\n");
        let d = covering_paths(&cyc);
        assert_eq!(d.paths.len(), 1);
        assert_eq!(d.paths[0].len(), 3);
        assert_eq!(d.intersections_of(0, 0), vec![(0, 3)]);
        assert_eq!(d.intersections[&Label::new("a")], vec![(0, 0), (0, 3)]);
    }

    #[test]
    fn shared_moderator_paths_intersect_on_prefix() {
        let q1 = q("Q 1\nhasMod\t?f\t?p\nposted\t?p\tpst1\nposted\t?p\tpst2\nreply\t?c\tpst2\n");
        let d = covering_paths(&q1);
        let find = |s: &str| render(&d).iter().position(|r| r == s).unwrap();
        let p1 = find("?var -hasMod-> ?var -posted-> pst1");
        let p2 = find("?var -hasMod-> ?var -posted-> pst2");
        let p3 = find("?var -reply-> pst2");
        assert_eq!(d.intersections_of(p1, p2), vec![(0, 0), (1, 1)]);
        assert_eq!(d.intersections_of(p2, p3), vec![(2, 1)]);
        assert!(d.intersections_of(p1, p3).is_empty());
    }

    #[test]
    fn disjoint_paths_have_no_intersections() {
        let chain = q("Q x\na\t?x\t?y\nb\t?y\tm\nc\tm\t?z\n");
        let d = covering_paths(&chain);
        assert_eq!(d.paths.len(), 1);
        let d2 = PathDecomposition {
            query_id: d.query_id,
            paths: vec![d.paths[0].clone(), d.paths[0].clone()],
            bindings: vec![vec![0, 1], vec![2, 3]],
            edge_ids: vec![vec![0], vec![1]],
            intersections: BTreeMap::new(),
        };
        assert!(d2.intersections_of(0, 1).is_empty());
    }

    #[test]
    fn self_loop_records_intersection() {
        let d = covering_paths(&q("Q l\nloop\t?a\t?a\n"));
        assert_eq!(d.paths.len(), 1);
        assert_eq!(d.intersections_of(0, 0), vec![(0, 1)]);
    }
}
