//! Process-wide string interning for vertex and edge labels.
//!
//! Vertex labels, edge labels, variable names and query identifiers all share
//! one namespace. A [`Label`] is a `u32` handle; equality and hashing work on
//! the handle, so two labels are equal iff their source strings are equal.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::sync::{LazyLock, RwLock};

#[derive(Default)]
struct Interner {
    ids: HashMap<&'static str, u32>,
    strings: Vec<&'static str>,
}

static INTERNER: LazyLock<RwLock<Interner>> = LazyLock::new(Default::default);

/// An interned label.
///
/// The derived `Ord` orders by interning id, which is cheap but depends on
/// the order labels were first seen. Use [`Label::cmp_str`] where a
/// lexicographic order is required.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label(u32);

impl Label {
    pub fn new(s: &str) -> Label {
        if let Some(&id) = INTERNER.read().expect("interner poisoned").ids.get(s) {
            return Label(id);
        }
        let mut interner = INTERNER.write().expect("interner poisoned");
        if let Some(&id) = interner.ids.get(s) {
            return Label(id);
        }
        let id = u32::try_from(interner.strings.len()).expect("label space exhausted");
        let leaked: &'static str = Box::leak(s.to_owned().into_boxed_str());
        interner.strings.push(leaked);
        interner.ids.insert(leaked, id);
        Label(id)
    }

    pub fn as_str(self) -> &'static str {
        INTERNER.read().expect("interner poisoned").strings[self.0 as usize]
    }

    pub fn id(self) -> u32 {
        self.0
    }

    /// Lexicographic comparison of the underlying strings.
    pub fn cmp_str(self, other: Label) -> Ordering {
        if self == other {
            Ordering::Equal
        } else {
            self.as_str().cmp(other.as_str())
        }
    }
}

impl From<&str> for Label {
    fn from(s: &str) -> Self {
        Label::new(s)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Debug for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interning_is_injective() {
        let a = Label::new("posted");
        let b = Label::new("posted");
        let c = Label::new("reply");
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.as_str(), "posted");
        assert_eq!(format!("{c}"), "reply");
    }

    #[test]
    fn lexicographic_order_ignores_interning_order() {
        let z = Label::new("zz-first-interned");
        let a = Label::new("aa-second-interned");
        assert_eq!(z.cmp_str(a), Ordering::Greater);
        assert_eq!(a.cmp_str(a), Ordering::Equal);
    }
}
