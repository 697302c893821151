//! The retained part of the evolving graph: one raw view per indexed
//! genericized edge pattern, plus stream-order bookkeeping.

use rustc_hash::FxHashMap;
use smallvec::{smallvec, SmallVec};
use thiserror::Error;

use crate::graph::{Endpoint, GenericPattern, Update};
use crate::matview::MaterializedView;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("update t={got} is not after the previous update t={last}")]
pub struct OrderError {
    pub last: u64,
    pub got: u64,
}

/// Raw per-pattern views. No global adjacency structure is kept: an edge
/// that matches no registered pattern is dropped.
#[derive(Clone, Debug, Default)]
pub struct RawViews {
    views: FxHashMap<GenericPattern, MaterializedView>,
    last_t: Option<u64>,
    cache_new_views: Option<SmallVec<[usize; 2]>>,
}

impl RawViews {
    pub fn new() -> Self {
        Self::default()
    }

    /// Makes every raw view (existing and future) keep cached indexes on
    /// `cols`.
    pub fn enable_cache(&mut self, cols: &[usize]) {
        self.cache_new_views = Some(cols.iter().copied().collect());
        for v in self.views.values_mut() {
            for &c in cols {
                v.cached_index(c);
            }
        }
    }

    /// Registers a pattern. A new view is back-filled from the most general
    /// existing view with the same edge label, which holds every edge of that
    /// label seen since it was registered. Returns true if the view is new.
    pub fn register(&mut self, pattern: GenericPattern) -> bool {
        if self.views.contains_key(&pattern) {
            return false;
        }
        let mut view = MaterializedView::new(2);
        let donors = [
            GenericPattern::new(pattern.edge_label, Endpoint::Any, Endpoint::Any),
            GenericPattern::new(pattern.edge_label, pattern.source, Endpoint::Any),
            GenericPattern::new(pattern.edge_label, Endpoint::Any, pattern.target),
        ];
        if let Some(donor) = donors.iter().find_map(|d| self.views.get(d)) {
            for t in donor.iter() {
                if pattern.source.accepts(t[0]) && pattern.target.accepts(t[1]) {
                    view.insert(t.clone()).expect("raw views have arity 2");
                }
            }
        }
        if let Some(cols) = &self.cache_new_views {
            for &c in cols {
                view.cached_index(c);
            }
        }
        self.views.insert(pattern, view);
        true
    }

    /// Records `u` in every registered view it matches. Returns the patterns
    /// whose view actually grew; a repeated triple is absorbed.
    pub fn append(&mut self, u: &Update) -> Result<SmallVec<[GenericPattern; 4]>, OrderError> {
        if let Some(last) = self.last_t {
            if u.t <= last {
                return Err(OrderError { last, got: u.t });
            }
        }
        self.last_t = Some(u.t);
        let mut grown = SmallVec::new();
        for p in GenericPattern::candidates(&u.triple) {
            if let Some(view) = self.views.get_mut(&p) {
                let tuple = smallvec![u.triple.source, u.triple.target];
                if view.insert(tuple).expect("raw views have arity 2") {
                    grown.push(p);
                }
            }
        }
        Ok(grown)
    }

    pub fn get(&self, pattern: &GenericPattern) -> Option<&MaterializedView> {
        self.views.get(pattern)
    }

    pub fn get_mut(&mut self, pattern: &GenericPattern) -> Option<&mut MaterializedView> {
        self.views.get_mut(pattern)
    }

    /// The view for a registered pattern.
    ///
    /// # Panics
    /// If the pattern was never registered.
    pub fn view(&self, pattern: &GenericPattern) -> &MaterializedView {
        self.views.get(pattern).unwrap_or_else(|| panic!("no raw view registered for {pattern}"))
    }

    pub fn is_nonempty(&self, pattern: &GenericPattern) -> bool {
        self.views.get(pattern).is_some_and(|v| !v.is_empty())
    }

    pub fn last_t(&self) -> Option<u64> {
        self.last_t
    }

    pub fn len(&self) -> usize {
        self.views.len()
    }

    pub fn is_empty(&self) -> bool {
        self.views.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&GenericPattern, &MaterializedView)> {
        self.views.iter()
    }

    pub fn approx_bytes(&self) -> usize {
        self.views
            .values()
            .map(|v| v.approx_bytes() + std::mem::size_of::<GenericPattern>())
            .sum()
    }
}
