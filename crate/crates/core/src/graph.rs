//! Graph stream model: concrete edges, updates, and edge patterns.

use std::fmt;
use std::io::{self, Write};

use thiserror::Error;

use crate::label::Label;

/// A concrete labeled directed edge `edge_label = (source, target)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct EdgeTriple {
    pub edge_label: Label,
    pub source: Label,
    pub target: Label,
}

impl EdgeTriple {
    pub fn new(edge_label: impl Into<Label>, source: impl Into<Label>, target: impl Into<Label>) -> Self {
        EdgeTriple { edge_label: edge_label.into(), source: source.into(), target: target.into() }
    }
}

impl fmt::Display for EdgeTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}=({}, {})", self.edge_label, self.source, self.target)
    }
}

/// Addition of one edge at sequence number `t`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Update {
    pub triple: EdgeTriple,
    pub t: u64,
}

impl Update {
    pub fn new(triple: EdgeTriple, t: u64) -> Self {
        Update { triple, t }
    }
}

/// An ordered sequence of updates with strictly increasing timestamps.
#[derive(Clone, Default, PartialEq, Eq, Debug)]
pub struct GraphStream {
    pub updates: Vec<Update>,
}

impl GraphStream {
    /// Builds a stream from triples, numbering them `1..=n`.
    pub fn from_triples(triples: impl IntoIterator<Item = EdgeTriple>) -> Self {
        let updates = triples
            .into_iter()
            .enumerate()
            .map(|(i, triple)| Update { triple, t: i as u64 + 1 })
            .collect();
        GraphStream { updates }
    }

    pub fn len(&self) -> usize {
        self.updates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.updates.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Update> {
        self.updates.iter()
    }
}

/// A vertex of a query pattern: a fixed label or a named variable.
///
/// Variable names are stored without the leading `?`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum VertexPattern {
    Literal(Label),
    Variable(Label),
}

impl VertexPattern {
    pub fn is_variable(&self) -> bool {
        matches!(self, VertexPattern::Variable(_))
    }

    pub fn accepts(&self, vertex: Label) -> bool {
        match self {
            VertexPattern::Literal(l) => *l == vertex,
            VertexPattern::Variable(_) => true,
        }
    }

    pub fn genericize(&self) -> Endpoint {
        match self {
            VertexPattern::Literal(l) => Endpoint::Literal(*l),
            VertexPattern::Variable(_) => Endpoint::Any,
        }
    }

    /// Canonical order: literals before variables, each group lexicographic.
    pub fn canonical_cmp(&self, other: &VertexPattern) -> std::cmp::Ordering {
        use VertexPattern::*;
        match (self, other) {
            (Literal(a), Literal(b)) | (Variable(a), Variable(b)) => a.cmp_str(*b),
            (Literal(_), Variable(_)) => std::cmp::Ordering::Less,
            (Variable(_), Literal(_)) => std::cmp::Ordering::Greater,
        }
    }
}

impl fmt::Display for VertexPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VertexPattern::Literal(l) => write!(f, "{l}"),
            VertexPattern::Variable(v) => write!(f, "?{v}"),
        }
    }
}

/// An edge of a query pattern. Edge labels are always literals.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct EdgePattern {
    pub edge_label: Label,
    pub source: VertexPattern,
    pub target: VertexPattern,
}

impl EdgePattern {
    pub fn new(edge_label: Label, source: VertexPattern, target: VertexPattern) -> Self {
        EdgePattern { edge_label, source, target }
    }

    pub fn matches(&self, triple: &EdgeTriple) -> bool {
        self.edge_label == triple.edge_label
            && self.source.accepts(triple.source)
            && self.target.accepts(triple.target)
    }

    /// Replaces every variable endpoint with the anonymous variable.
    pub fn genericize(&self) -> GenericPattern {
        GenericPattern {
            edge_label: self.edge_label,
            source: self.source.genericize(),
            target: self.target.genericize(),
        }
    }
}

impl fmt::Display for EdgePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}=({}, {})", self.edge_label, self.source, self.target)
    }
}

/// Endpoint of a genericized pattern: a literal or the anonymous `?var`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Endpoint {
    Any,
    Literal(Label),
}

impl Endpoint {
    pub fn accepts(&self, vertex: Label) -> bool {
        match self {
            Endpoint::Any => true,
            Endpoint::Literal(l) => *l == vertex,
        }
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Any => f.write_str("?var"),
            Endpoint::Literal(l) => write!(f, "{l}"),
        }
    }
}

/// An edge pattern whose variables were all renamed to `?var`.
///
/// This is the key under which raw views, trie nodes and inverted indexes
/// are stored; structurally identical edges of different queries share it.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct GenericPattern {
    pub edge_label: Label,
    pub source: Endpoint,
    pub target: Endpoint,
}

impl GenericPattern {
    pub fn new(edge_label: impl Into<Label>, source: Endpoint, target: Endpoint) -> Self {
        GenericPattern { edge_label: edge_label.into(), source, target }
    }

    pub fn matches(&self, triple: &EdgeTriple) -> bool {
        self.edge_label == triple.edge_label
            && self.source.accepts(triple.source)
            && self.target.accepts(triple.target)
    }

    /// The four genericized patterns a concrete triple can match.
    pub fn candidates(triple: &EdgeTriple) -> [GenericPattern; 4] {
        let s = Endpoint::Literal(triple.source);
        let t = Endpoint::Literal(triple.target);
        let l = triple.edge_label;
        [
            GenericPattern::new(l, s, t),
            GenericPattern::new(l, Endpoint::Any, t),
            GenericPattern::new(l, s, Endpoint::Any),
            GenericPattern::new(l, Endpoint::Any, Endpoint::Any),
        ]
    }
}

impl fmt::Display for GenericPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}=({}, {})", self.edge_label, self.source, self.target)
    }
}

/// Free-function form of the pattern/edge matching predicate.
pub fn matches(pattern: &EdgePattern, triple: &EdgeTriple) -> bool {
    pattern.matches(triple)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StreamParseError {
    #[error("line {line}: expected 3 tab-separated fields, found {found}")]
    FieldCount { line: usize, found: usize },
    #[error("line {line}: field {field} is empty")]
    EmptyField { line: usize, field: usize },
}

/// Parses one `edge_label<TAB>source<TAB>target` line; `t` is the line number.
pub fn parse_update(line: &str, line_no: usize) -> Result<Update, StreamParseError> {
    let line = line.strip_suffix('\r').unwrap_or(line);
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 3 {
        return Err(StreamParseError::FieldCount { line: line_no, found: fields.len() });
    }
    for (i, f) in fields.iter().enumerate() {
        if f.trim().is_empty() {
            return Err(StreamParseError::EmptyField { line: line_no, field: i + 1 });
        }
    }
    let triple = EdgeTriple::new(fields[0].trim(), fields[1].trim(), fields[2].trim());
    Ok(Update { triple, t: line_no as u64 })
}

/// Parses a stream file. Blank lines and `#` comments are skipped but still
/// count towards line numbering, so timestamps equal physical line numbers.
pub fn parse_stream(text: &str) -> Result<GraphStream, StreamParseError> {
    let mut updates = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        updates.push(parse_update(line, i + 1)?);
    }
    Ok(GraphStream { updates })
}

pub fn write_stream<W: Write>(stream: &GraphStream, mut out: W) -> io::Result<()> {
    for u in &stream.updates {
        writeln!(out, "{}\t{}\t{}", u.triple.edge_label, u.triple.source, u.triple.target)?;
    }
    Ok(())
}
