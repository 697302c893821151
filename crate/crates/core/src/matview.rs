//! Materialized views and the hash-join kernel.
//!
//! A [`MaterializedView`] is a set of fixed-arity binding tuples kept in
//! insertion order. Views never shrink, so a tuple's position is a stable row
//! id. A view may carry persistent per-column indexes (its [`JoinCache`]);
//! once built, an index is maintained by every subsequent insert. Joins use a
//! cached index when the larger input has one on its key column and fall back
//! to a transient build/probe hash join otherwise, which makes "uncached" and
//! "cached" execution a property of which indexes exist rather than of the
//! join call sites.

use std::mem::size_of;

use indexmap::IndexSet;
use rustc_hash::{FxBuildHasher, FxHashMap};
use smallvec::SmallVec;
use thiserror::Error;

use crate::label::Label;

/// One binding per view column.
pub type BindingTuple = SmallVec<[Label; 4]>;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("tuple arity {found} does not match view arity {expected}")]
pub struct ArityError {
    pub expected: usize,
    pub found: usize,
}

/// Key label to the row ids holding it in one column.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ColumnIndex {
    rows: FxHashMap<Label, SmallVec<[u32; 2]>>,
}

impl ColumnIndex {
    fn build(view: &MaterializedView, col: usize) -> Self {
        let mut index = ColumnIndex::default();
        for (row, tuple) in view.tuples.iter().enumerate() {
            index.push(tuple[col], row as u32);
        }
        index
    }

    fn push(&mut self, key: Label, row: u32) {
        self.rows.entry(key).or_default().push(row);
    }

    pub fn get(&self, key: Label) -> &[u32] {
        self.rows.get(&key).map(|r| r.as_slice()).unwrap_or(&[])
    }

    pub fn keys(&self) -> usize {
        self.rows.len()
    }

    fn approx_bytes(&self) -> usize {
        self.rows
            .values()
            .map(|r| {
                size_of::<Label>()
                    + size_of::<SmallVec<[u32; 2]>>()
                    + if r.spilled() { r.capacity() * size_of::<u32>() } else { 0 }
            })
            .sum()
    }
}

/// Persistent build-side indexes of one view, keyed by column.
#[derive(Clone, Debug, Default)]
pub struct JoinCache {
    indexes: SmallVec<[(usize, ColumnIndex); 1]>,
    /// Indexes built from scratch.
    pub builds: u64,
    /// Rows appended to existing indexes by inserts.
    pub maintained: u64,
}

impl JoinCache {
    fn get(&self, col: usize) -> Option<&ColumnIndex> {
        self.indexes.iter().find(|(c, _)| *c == col).map(|(_, i)| i)
    }

    pub fn len(&self) -> usize {
        self.indexes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indexes.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct MaterializedView {
    columns: usize,
    tuples: IndexSet<BindingTuple, FxBuildHasher>,
    cache: JoinCache,
}

impl PartialEq for MaterializedView {
    /// Set equality; indexes and insertion order are not observable.
    fn eq(&self, other: &Self) -> bool {
        self.columns == other.columns
            && self.tuples.len() == other.tuples.len()
            && self.tuples.iter().all(|t| other.tuples.contains(t))
    }
}

impl Eq for MaterializedView {}

impl MaterializedView {
    pub fn new(columns: usize) -> Self {
        MaterializedView { columns, tuples: IndexSet::default(), cache: JoinCache::default() }
    }

    pub fn singleton(tuple: BindingTuple) -> Self {
        let mut v = MaterializedView::new(tuple.len());
        v.tuples.insert(tuple);
        v
    }

    pub fn from_tuples<I>(columns: usize, tuples: I) -> Result<Self, ArityError>
    where
        I: IntoIterator<Item = BindingTuple>,
    {
        let mut v = MaterializedView::new(columns);
        for t in tuples {
            v.insert(t)?;
        }
        Ok(v)
    }

    pub fn columns(&self) -> usize {
        self.columns
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn contains(&self, tuple: &[Label]) -> bool {
        self.tuples.contains(tuple)
    }

    pub fn iter(&self) -> indexmap::set::Iter<'_, BindingTuple> {
        self.tuples.iter()
    }

    pub fn row(&self, row: u32) -> &BindingTuple {
        &self.tuples[row as usize]
    }

    /// Inserts with set semantics, maintaining every cached index.
    /// Returns `Ok(false)` if the tuple was already present.
    pub fn insert(&mut self, tuple: BindingTuple) -> Result<bool, ArityError> {
        if tuple.len() != self.columns {
            return Err(ArityError { expected: self.columns, found: tuple.len() });
        }
        Ok(self.insert_checked(tuple))
    }

    fn insert_checked(&mut self, tuple: BindingTuple) -> bool {
        debug_assert_eq!(tuple.len(), self.columns);
        let (row, inserted) = self.tuples.insert_full(tuple);
        if inserted && !self.cache.indexes.is_empty() {
            let tuple = &self.tuples[row];
            for (col, index) in self.cache.indexes.iter_mut() {
                index.push(tuple[*col], row as u32);
                self.cache.maintained += 1;
            }
        }
        inserted
    }

    /// Copy of the tuples without any cached index.
    pub fn clone_rows(&self) -> Self {
        MaterializedView { columns: self.columns, tuples: self.tuples.clone(), cache: JoinCache::default() }
    }

    /// Moves every tuple of `delta` into `self`, returning those that were new.
    pub fn absorb(&mut self, delta: MaterializedView) -> MaterializedView {
        let mut fresh = MaterializedView::new(self.columns);
        for t in delta.tuples {
            if self.insert_checked(t.clone()) {
                fresh.tuples.insert(t);
            }
        }
        fresh
    }

    /// Returns the cached index on `col`, building it on first use.
    pub fn cached_index(&mut self, col: usize) -> &ColumnIndex {
        assert!(col < self.columns, "index column {col} out of range for arity {}", self.columns);
        if self.cache.get(col).is_none() {
            let index = ColumnIndex::build(self, col);
            self.cache.builds += 1;
            self.cache.indexes.push((col, index));
        }
        self.cache.get(col).expect("index just built")
    }

    /// The cached index on `col`, if one has been built.
    pub fn index(&self, col: usize) -> Option<&ColumnIndex> {
        self.cache.get(col)
    }

    pub fn join_cache(&self) -> &JoinCache {
        &self.cache
    }

    /// Tuples sorted by label strings, for display and golden comparisons.
    pub fn sorted_strings(&self) -> Vec<Vec<&'static str>> {
        let mut rows: Vec<Vec<&'static str>> =
            self.tuples.iter().map(|t| t.iter().map(|l| l.as_str()).collect()).collect();
        rows.sort();
        rows
    }

    /// Approximate heap footprint of tuples and indexes.
    pub fn approx_bytes(&self) -> usize {
        let per_tuple = size_of::<BindingTuple>()
            + size_of::<u64>()
            + if self.columns > 4 { self.columns * size_of::<Label>() } else { 0 };
        size_of::<Self>()
            + self.tuples.len() * per_tuple
            + self.cache.indexes.iter().map(|(_, i)| i.approx_bytes()).sum::<usize>()
    }
}

/// Equi-join columns: `left[left_col] == right[right_col]`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct JoinKey {
    pub left_col: usize,
    pub right_col: usize,
}

impl JoinKey {
    pub fn new(left_col: usize, right_col: usize) -> Self {
        JoinKey { left_col, right_col }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct JoinStats {
    pub joins: u64,
    /// Tuples read from either input while building and probing.
    pub examined: u64,
    pub produced: u64,
    pub cached_probes: u64,
}

impl JoinStats {
    pub fn merge(&mut self, other: &JoinStats) {
        self.joins += other.joins;
        self.examined += other.examined;
        self.produced += other.produced;
        self.cached_probes += other.cached_probes;
    }
}

fn concat(left: &[Label], right: &[Label], skip: usize) -> BindingTuple {
    let mut out = BindingTuple::with_capacity(left.len() + right.len() - 1);
    out.extend_from_slice(left);
    out.extend(right.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, l)| *l));
    out
}

fn check_key(left: &MaterializedView, right: &MaterializedView, key: JoinKey) {
    assert!(key.left_col < left.columns, "left key column out of range");
    assert!(key.right_col < right.columns, "right key column out of range");
}

/// Build/probe hash join with the smaller input (ties: left) as build side.
///
/// The output keeps the key column once, at its left position: arity is
/// `left.columns + right.columns - 1`. Cached indexes are ignored.
pub fn hash_join(
    left: &MaterializedView,
    right: &MaterializedView,
    key: JoinKey,
    stats: &mut JoinStats,
) -> MaterializedView {
    check_key(left, right, key);
    let mut out = MaterializedView::new(left.columns + right.columns - 1);
    stats.joins += 1;
    if left.is_empty() || right.is_empty() {
        return out;
    }
    stats.examined += (left.len() + right.len()) as u64;
    let build_left = left.len() <= right.len();
    let (build, probe, build_col, probe_col) = if build_left {
        (left, right, key.left_col, key.right_col)
    } else {
        (right, left, key.right_col, key.left_col)
    };
    let mut table: FxHashMap<Label, SmallVec<[u32; 2]>> = FxHashMap::default();
    for (row, t) in build.tuples.iter().enumerate() {
        table.entry(t[build_col]).or_default().push(row as u32);
    }
    for p in probe.tuples.iter() {
        if let Some(rows) = table.get(&p[probe_col]) {
            for &row in rows {
                let b = build.row(row);
                let tuple = if build_left {
                    concat(b, p, key.right_col)
                } else {
                    concat(p, b, key.right_col)
                };
                out.insert_checked(tuple);
            }
        }
    }
    stats.produced += out.len() as u64;
    out
}

/// Join of the tuples added by the current update against a stored view.
///
/// By linearity, `join(A ∪ dA, B) = join(A, B) ∪ join(dA, B)`; the caller
/// routes the two delta directions explicitly.
pub fn delta_join(
    parent_delta: &MaterializedView,
    child_raw: &MaterializedView,
    key: JoinKey,
    stats: &mut JoinStats,
) -> MaterializedView {
    join(parent_delta, child_raw, key, stats)
}

/// Joins using a cached index on the larger input when one exists, and a
/// transient [`hash_join`] otherwise. Output layout as in `hash_join`.
pub fn join(
    left: &MaterializedView,
    right: &MaterializedView,
    key: JoinKey,
    stats: &mut JoinStats,
) -> MaterializedView {
    check_key(left, right, key);
    let (l, r) = (left.len(), right.len());
    if l <= r {
        if let Some(index) = right.index(key.right_col) {
            return probe_index(left, right, index, key, true, stats);
        }
    } else if let Some(index) = left.index(key.left_col) {
        return probe_index(right, left, index, key, false, stats);
    }
    hash_join(left, right, key, stats)
}

/// Scans `probe` and looks each key up in `indexed`'s cached index.
fn probe_index(
    probe: &MaterializedView,
    indexed: &MaterializedView,
    index: &ColumnIndex,
    key: JoinKey,
    indexed_is_right: bool,
    stats: &mut JoinStats,
) -> MaterializedView {
    let (left_cols, right_cols) = if indexed_is_right {
        (probe.columns, indexed.columns)
    } else {
        (indexed.columns, probe.columns)
    };
    let mut out = MaterializedView::new(left_cols + right_cols - 1);
    stats.joins += 1;
    stats.cached_probes += 1;
    let probe_col = if indexed_is_right { key.left_col } else { key.right_col };
    stats.examined += probe.len() as u64;
    for p in probe.tuples.iter() {
        let rows = index.get(p[probe_col]);
        stats.examined += rows.len() as u64;
        for &row in rows {
            let i = indexed.row(row);
            let tuple = if indexed_is_right {
                concat(p, i, key.right_col)
            } else {
                concat(i, p, key.right_col)
            };
            out.insert_checked(tuple);
        }
    }
    stats.produced += out.len() as u64;
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use smallvec::smallvec;

    fn t(items: &[&str]) -> BindingTuple {
        items.iter().map(|s| Label::new(s)).collect()
    }

    fn view(cols: usize, rows: &[&[&str]]) -> MaterializedView {
        MaterializedView::from_tuples(cols, rows.iter().map(|r| t(r))).unwrap()
    }

    #[test]
    fn insert_has_set_semantics() {
        let mut v = MaterializedView::new(2);
        assert!(v.insert(t(&["p2", "pst1"])).unwrap());
        assert_eq!(v.len(), 1);
        assert!(!v.insert(t(&["p2", "pst1"])).unwrap());
        assert_eq!(v.len(), 1);
    }

    #[test]
    fn insert_rejects_wrong_arity() {
        let mut v = MaterializedView::new(2);
        assert_eq!(v.insert(t(&["a"])), Err(ArityError { expected: 2, found: 1 }));
    }

    #[test]
    fn forum_moderator_join_yields_one_path_tuple() {
        let has_mod = view(2, &[&["f2", "p2"]]);
        let posted = view(2, &[&["p2", "pst1"]]);
        let mut stats = JoinStats::default();
        let out = hash_join(&has_mod, &posted, JoinKey::new(1, 0), &mut stats);
        assert_eq!(out.columns(), 3);
        assert_eq!(out.sorted_strings(), vec![vec!["f2", "p2", "pst1"]]);
        let delta = delta_join(&has_mod, &posted, JoinKey::new(1, 0), &mut stats);
        assert_eq!(delta, out);
    }

    #[test]
    fn empty_input_annihilates() {
        let a = view(2, &[&["x", "y"], &["y", "z"]]);
        let empty = MaterializedView::new(2);
        let mut stats = JoinStats::default();
        assert!(hash_join(&a, &empty, JoinKey::new(1, 0), &mut stats).is_empty());
        assert!(hash_join(&empty, &a, JoinKey::new(1, 0), &mut stats).is_empty());
        assert!(delta_join(&empty, &a, JoinKey::new(1, 0), &mut stats).is_empty());
    }

    #[test]
    fn cached_index_is_idempotent_and_maintained() {
        let mut v = view(2, &[&["a", "b"], &["c", "b"]]);
        let first = v.cached_index(1).clone();
        let second = v.cached_index(1).clone();
        assert_eq!(first, second);
        assert_eq!(v.join_cache().builds, 1);
        v.insert(t(&["d", "b"])).unwrap();
        let rows = v.cached_index(1).get(Label::new("b")).to_vec();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().any(|&r| v.row(r)[0] == Label::new("d")));
        assert_eq!(v.join_cache().builds, 1);
        assert_eq!(v.join_cache().maintained, 1);
    }

    #[test]
    fn cached_join_matches_hash_join() {
        let left = view(2, &[&["a", "b"], &["c", "d"]]);
        let mut right = view(2, &[&["b", "x"], &["b", "y"], &["d", "z"], &["q", "r"]]);
        let mut stats = JoinStats::default();
        let plain = hash_join(&left, &right, JoinKey::new(1, 0), &mut stats);
        right.cached_index(0);
        let cached = join(&left, &right, JoinKey::new(1, 0), &mut stats);
        assert_eq!(plain, cached);
        assert_eq!(stats.cached_probes, 1);
    }

    #[test]
    fn absorb_returns_only_fresh_tuples() {
        let mut v = view(2, &[&["a", "b"]]);
        let d = MaterializedView::from_tuples(2, [smallvec![Label::new("a"), Label::new("b")], t(&["c", "d"])])
            .unwrap();
        let fresh = v.absorb(d);
        assert_eq!(fresh.sorted_strings(), vec![vec!["c", "d"]]);
        assert_eq!(v.len(), 2);
    }
}
