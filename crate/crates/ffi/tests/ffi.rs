use std::ffi::{CStr, CString};
use std::ptr;

use tric_ffi::*;

const FORUM: &str = "Q 1\nhasMod\t?f\t?p\nposted\t?p\tpst1\nposted\t?p\tpst2\nreply\t?c\tpst2\n";

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(tric_last_error()) }.to_str().unwrap().to_owned()
}

fn new_engine(name: &str) -> *mut TricEngine {
    let mut e = ptr::null_mut();
    assert_eq!(unsafe { tric_engine_new(c(name).as_ptr(), 0, &mut e) }, TricStatus::Ok);
    assert!(!e.is_null());
    e
}

fn push(e: *mut TricEngine, l: &str, s: &str, t: &str, ts: u64) -> (TricStatus, usize) {
    let mut n = usize::MAX;
    let status = unsafe { tric_engine_push_update(e, c(l).as_ptr(), c(s).as_ptr(), c(t).as_ptr(), ts, &mut n) };
    (status, n)
}

fn take(e: *mut TricEngine) -> String {
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { tric_engine_take_notifications(e, &mut out) }, TricStatus::Ok);
    let text = unsafe { CStr::from_ptr(out) }.to_str().unwrap().to_owned();
    unsafe { tric_string_free(out) };
    text
}

#[test]
fn forum_update_reaches_the_caller_as_tsv() {
    for name in ["tric", "TRIC+", "inv", "inc+", "oracle"] {
        let e = new_engine(name);
        assert_eq!(unsafe { tric_engine_add_queries(e, c(FORUM).as_ptr()) }, TricStatus::Ok);
        for (i, (l, s, t)) in [("hasMod", "f2", "p2"), ("posted", "p2", "pst2"), ("reply", "c1", "pst2")].iter().enumerate() {
            assert_eq!(push(e, l, s, t, i as u64 + 1), (TricStatus::Ok, 0));
        }
        assert_eq!(push(e, "posted", "p2", "pst1", 5), (TricStatus::Ok, 1));
        assert_eq!(unsafe { tric_engine_pending(e) }, 1);
        assert_eq!(take(e), "5\t1\tpst1\tpst2\tc1\tf2\tp2\n", "{name}");
        assert_eq!(unsafe { tric_engine_pending(e) }, 0);
        assert_eq!(take(e), "");
        unsafe { tric_engine_free(e) };
    }
}

#[test]
fn errors_map_to_status_codes_with_messages() {
    let mut e = ptr::null_mut();
    assert_eq!(unsafe { tric_engine_new(c("neo4j").as_ptr(), 0, &mut e) }, TricStatus::UnknownEngine);
    assert!(e.is_null());
    assert!(last_error().contains("neo4j"));

    let e = new_engine("inc");
    assert_eq!(unsafe { tric_engine_add_queries(e, c("hasMod\t?a\t?b\n").as_ptr()) }, TricStatus::ParseError);
    assert!(!last_error().is_empty());
    assert_eq!(unsafe { tric_engine_add_queries(e, c(FORUM).as_ptr()) }, TricStatus::Ok);
    assert_eq!(last_error(), "");
    assert_eq!(unsafe { tric_engine_add_queries(e, c(FORUM).as_ptr()) }, TricStatus::DuplicateQuery);

    assert_eq!(push(e, "hasMod", "f", "p", 3).0, TricStatus::Ok);
    assert_eq!(push(e, "hasMod", "f", "q", 3).0, TricStatus::OutOfOrder);

    let bad = [0xffu8, 0];
    let status = unsafe { tric_engine_push_update(e, bad.as_ptr().cast(), c("a").as_ptr(), c("b").as_ptr(), 9, ptr::null_mut()) };
    assert_eq!(status, TricStatus::InvalidUtf8);
    unsafe { tric_engine_free(e) };
}

#[test]
fn null_arguments_are_rejected() {
    assert_eq!(unsafe { tric_engine_new(ptr::null(), 0, &mut ptr::null_mut()) }, TricStatus::NullArgument);
    assert_eq!(unsafe { tric_engine_new(c("tric").as_ptr(), 0, ptr::null_mut()) }, TricStatus::NullArgument);
    assert_eq!(unsafe { tric_engine_add_queries(ptr::null_mut(), c(FORUM).as_ptr()) }, TricStatus::NullArgument);
    let e = new_engine("tric");
    assert_eq!(unsafe { tric_engine_add_queries(e, ptr::null()) }, TricStatus::NullArgument);
    assert_eq!(unsafe { tric_engine_take_notifications(e, ptr::null_mut()) }, TricStatus::NullArgument);
    assert_eq!(unsafe { tric_engine_pending(ptr::null()) }, 0);
    unsafe {
        tric_engine_free(e);
        tric_engine_free(ptr::null_mut());
        tric_string_free(ptr::null_mut());
    }
}

#[test]
fn isomorphism_flag_drops_collapsed_embeddings() {
    let queries = c("Q s\na\t?x\t?y\na\t?x\t?z\n");
    for (iso, expected) in [(0, 1), (1, 0)] {
        let mut e = ptr::null_mut();
        assert_eq!(unsafe { tric_engine_new(c("tric").as_ptr(), iso, &mut e) }, TricStatus::Ok);
        assert_eq!(unsafe { tric_engine_add_queries(e, queries.as_ptr()) }, TricStatus::Ok);
        assert_eq!(push(e, "a", "u", "v", 1), (TricStatus::Ok, expected));
        unsafe { tric_engine_free(e) };
    }
}

#[test]
fn generated_header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/tric.h")).unwrap();
    for name in ["tric_engine_new", "tric_engine_push_update", "tric_engine_take_notifications", "tric_last_error", "TRIC_STATUS_OUT_OF_ORDER"] {
        assert!(header.contains(name), "{name} missing from header");
    }
}
