//! C ABI over the `tric` engines.
//!
//! An engine is an opaque heap handle. Every call returns a [`TricStatus`];
//! on failure a message is available from [`tric_last_error`] until the next
//! call on the same thread. Strings returned to the caller must be released
//! with [`tric_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use tric::engine::{build_engine, Engine, EngineError, EngineKind, Notification};
use tric::graph::{EdgeTriple, Update};
use tric::plan::MatchMode;
use tric::query::parse_query_file;

/// Result code of every exported function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TricStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    UnknownEngine = 3,
    ParseError = 4,
    DuplicateQuery = 5,
    OutOfOrder = 6,
    Panic = 7,
}

/// Opaque engine handle.
pub struct TricEngine {
    engine: Box<dyn Engine>,
    pending: Vec<Notification>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: TricStatus, msg: &str) -> TricStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> TricStatus) -> TricStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(TricStatus::Panic, "internal panic"),
    }
}

/// # Safety
/// `p` must be null or point to a NUL-terminated string.
unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, TricStatus> {
    if p.is_null() {
        return Err(fail(TricStatus::NullArgument, &format!("{name} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(TricStatus::InvalidUtf8, &format!("{name} is not UTF-8")))
}

fn engine_error(e: EngineError) -> TricStatus {
    let status = match &e {
        EngineError::DuplicateQuery(_) => TricStatus::DuplicateQuery,
        EngineError::Order(_) => TricStatus::OutOfOrder,
        EngineError::Query(_) => TricStatus::ParseError,
    };
    fail(status, &e.to_string())
}

/// Creates an engine. `engine` is one of `tric`, `tric+`, `inv`, `inv+`,
/// `inc`, `inc+`, `oracle`; a nonzero `isomorphism` requires injective
/// embeddings.
///
/// # Safety
/// `engine` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tric_engine_new(engine: *const c_char, isomorphism: i32, out: *mut *mut TricEngine) -> TricStatus {
    guard(|| {
        if out.is_null() {
            return fail(TricStatus::NullArgument, "out is null");
        }
        let name = match str_arg(engine, "engine") {
            Ok(s) => s,
            Err(s) => return s,
        };
        let kind: EngineKind = match name.parse() {
            Ok(k) => k,
            Err(e) => return fail(TricStatus::UnknownEngine, &e.to_string()),
        };
        let mode = if isomorphism != 0 { MatchMode::Isomorphism } else { MatchMode::Homomorphism };
        let handle = Box::new(TricEngine { engine: build_engine(kind, mode), pending: Vec::new() });
        *out = Box::into_raw(handle);
        TricStatus::Ok
    })
}

/// Releases an engine. Null is ignored.
///
/// # Safety
/// `engine` must come from [`tric_engine_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tric_engine_free(engine: *mut TricEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Indexes every query in `text` (query file format). Nothing is indexed if
/// the text fails to parse.
///
/// # Safety
/// `engine` must be a live handle and `text` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn tric_engine_add_queries(engine: *mut TricEngine, text: *const c_char) -> TricStatus {
    guard(|| {
        let Some(h) = engine.as_mut() else {
            return fail(TricStatus::NullArgument, "engine is null");
        };
        let text = match str_arg(text, "text") {
            Ok(s) => s,
            Err(s) => return s,
        };
        let queries = match parse_query_file(text) {
            Ok(q) => q,
            Err(e) => return fail(TricStatus::ParseError, &e.to_string()),
        };
        for q in &queries {
            if let Err(e) = h.engine.index_query(q) {
                return engine_error(e);
            }
        }
        TricStatus::Ok
    })
}

/// Adds the edge `label = (source, target)` at time `t` and queues the
/// resulting notifications. `out_count`, if not null, receives the number of
/// new embeddings.
///
/// # Safety
/// `engine` must be a live handle; the strings must be NUL-terminated;
/// `out_count` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn tric_engine_push_update(
    engine: *mut TricEngine,
    label: *const c_char,
    source: *const c_char,
    target: *const c_char,
    t: u64,
    out_count: *mut usize,
) -> TricStatus {
    guard(|| {
        let Some(h) = engine.as_mut() else {
            return fail(TricStatus::NullArgument, "engine is null");
        };
        let parts = (str_arg(label, "label"), str_arg(source, "source"), str_arg(target, "target"));
        let (l, s, d) = match parts {
            (Ok(l), Ok(s), Ok(d)) => (l, s, d),
            (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => return e,
        };
        match h.engine.answer_update(&Update::new(EdgeTriple::new(l, s, d), t)) {
            Ok(ns) => {
                if let Some(c) = out_count.as_mut() {
                    *c = ns.iter().map(|n| n.embeddings.len()).sum();
                }
                h.pending.extend(ns);
                TricStatus::Ok
            }
            Err(e) => engine_error(e),
        }
    })
}

/// Moves all queued notifications into a newly allocated TSV string, one
/// line per embedding: `t<TAB>query_id<TAB>vertex...`. Release it with
/// [`tric_string_free`].
///
/// # Safety
/// `engine` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tric_engine_take_notifications(engine: *mut TricEngine, out: *mut *mut c_char) -> TricStatus {
    guard(|| {
        if out.is_null() {
            return fail(TricStatus::NullArgument, "out is null");
        }
        let Some(h) = engine.as_mut() else {
            return fail(TricStatus::NullArgument, "engine is null");
        };
        let mut buf = Vec::new();
        for n in h.pending.drain(..) {
            n.write_tsv(&mut buf).expect("writing to a Vec cannot fail");
        }
        buf.retain(|&b| b != 0);
        *out = CString::new(buf).expect("NULs removed").into_raw();
        TricStatus::Ok
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tric_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message describing the last failure on this thread, or an empty string.
/// Valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn tric_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Number of notifications currently queued.
///
/// # Safety
/// `engine` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tric_engine_pending(engine: *const TricEngine) -> usize {
    engine.as_ref().map_or(0, |h| h.pending.len())
}
