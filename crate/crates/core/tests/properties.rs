use std::collections::BTreeSet;

use proptest::prelude::*;

use tric::engine::{build_engine, render_log, EngineKind, Notification};
use tric::graph::{EdgeTriple, Update};
use tric::matview::{hash_join, join, BindingTuple, JoinKey, JoinStats, MaterializedView};
use tric::oracle::{enumerate_embeddings, GraphIndex};
use tric::plan::MatchMode;
use tric::query::{covering_paths, parse_query_file, write_query_file, QueryGraphPattern};
use tric::Label;

const LABELS: [&str; 3] = ["p", "q", "r"];

/// Query text over up to five vertices: a random spanning tree plus extra
/// edges. Literals `c0`/`c1` may merge vertices, which keeps it connected.
fn query_text(id: usize) -> impl Strategy<Value = String> {
    (1usize..=5)
        .prop_flat_map(|n| {
            let names = prop::collection::vec(prop_oneof![3 => Just(None), 1 => (0usize..2).prop_map(Some)], n);
            let tree = prop::collection::vec((any::<prop::sample::Index>(), any::<bool>(), 0usize..3), n - 1);
            let extra = prop::collection::vec((0..n, 0..n, 0usize..3), 0..3);
            (names, tree, extra)
        })
        .prop_map(move |(names, tree, extra)| {
            let name = |i: usize| match names[i] {
                Some(c) => format!("c{c}"),
                None => format!("?v{i}"),
            };
            let mut text = format!("Q {id}\n");
            let mut edge = |a: usize, b: usize, l: usize| text.push_str(&format!("{}\t{}\t{}\n", LABELS[l], name(a), name(b)));
            for (i, (parent, forward, l)) in tree.into_iter().enumerate() {
                let (child, parent) = (i + 1, parent.index(i + 1));
                if forward {
                    edge(parent, child, l);
                } else {
                    edge(child, parent, l);
                }
            }
            for (a, b, l) in extra {
                edge(a, b, l);
            }
            if names.len() == 1 {
                edge(0, 0, 0);
            }
            text
        })
}

fn queries(max: usize) -> impl Strategy<Value = Vec<QueryGraphPattern>> {
    (1..=max).prop_flat_map(|k| (0..k).map(query_text).collect::<Vec<_>>()).prop_map(|texts| {
        parse_query_file(&texts.join("\n")).expect("generated queries are valid")
    })
}

fn triples(max: usize) -> impl Strategy<Value = Vec<EdgeTriple>> {
    let vertex = prop::sample::select(vec!["c0", "c1", "n0", "n1", "n2", "n3"]);
    prop::collection::vec((prop::sample::select(LABELS.to_vec()), vertex.clone(), vertex), 0..max)
        .prop_map(|ts| ts.into_iter().map(|(l, s, t)| EdgeTriple::new(l, s, t)).collect())
}

fn replay(kind: EngineKind, mode: MatchMode, qs: &[QueryGraphPattern], ts: &[EdgeTriple]) -> Vec<Notification> {
    let mut e = build_engine(kind, mode);
    e.index_all(qs).expect("unique ids");
    let mut out = Vec::new();
    for (i, t) in ts.iter().enumerate() {
        out.extend(e.answer_update(&Update::new(*t, i as u64 + 1)).expect("ordered"));
    }
    out
}

fn view(columns: usize, rows: &[Vec<u8>]) -> MaterializedView {
    let tuples = rows.iter().map(|r| r.iter().map(|x| Label::new(&format!("x{x}"))).collect::<BindingTuple>());
    MaterializedView::from_tuples(columns, tuples.collect::<Vec<_>>()).expect("arity")
}

fn rows(arity: usize, max: usize) -> impl Strategy<Value = Vec<Vec<u8>>> {
    prop::collection::vec(prop::collection::vec(0u8..5, arity), 0..max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn covering_paths_cover_every_edge_and_vertex(qs in queries(1)) {
        let q = &qs[0];
        let d = covering_paths(q);
        let covered: BTreeSet<usize> = d.edge_ids.iter().flatten().copied().collect();
        prop_assert_eq!(covered, (0..q.edges().len()).collect::<BTreeSet<_>>());
        let on_paths: BTreeSet<usize> = d.bindings.iter().flatten().copied().collect();
        prop_assert_eq!(on_paths, (0..q.vertices().len()).collect::<BTreeSet<_>>());
        for (p, path) in d.paths.iter().enumerate() {
            prop_assert_eq!(d.bindings[p].len(), path.len() + 1);
            for (k, step) in path.steps.iter().enumerate() {
                let e = d.edge_ids[p][k];
                prop_assert_eq!(*step, q.edges()[e].genericize());
                prop_assert_eq!(q.endpoints()[e], (d.bindings[p][k], d.bindings[p][k + 1]));
            }
        }
        for (a, pa) in d.edge_ids.iter().enumerate() {
            for (b, pb) in d.edge_ids.iter().enumerate() {
                if a != b && pa.len() <= pb.len() {
                    prop_assert!(!pb.windows(pa.len()).any(|w| w == pa.as_slice()), "path {} inside path {}", a, b);
                }
            }
        }
    }

    #[test]
    fn query_files_round_trip(qs in queries(4)) {
        let mut buf = Vec::new();
        write_query_file(&qs, &mut buf).unwrap();
        let again = parse_query_file(std::str::from_utf8(&buf).unwrap()).unwrap();
        prop_assert_eq!(again, qs);
    }

    #[test]
    fn engines_agree_with_oracle_on_streams_with_repeats(qs in queries(4), ts in triples(30), iso in any::<bool>()) {
        let mode = if iso { MatchMode::Isomorphism } else { MatchMode::Homomorphism };
        let expected = render_log(&replay(EngineKind::Oracle, mode, &qs, &ts));
        for kind in EngineKind::ALL {
            prop_assert_eq!(&render_log(&replay(kind, mode, &qs, &ts)), &expected, "{}", kind);
        }
    }

    #[test]
    fn notifications_union_to_final_embeddings(qs in queries(3), ts in triples(30)) {
        let ns = replay(EngineKind::Tric, MatchMode::Homomorphism, &qs, &ts);
        let graph = GraphIndex::from_triples(ts.iter().copied());
        for q in &qs {
            let mut seen: Vec<_> = ns.iter().filter(|n| n.query_id == q.id()).flat_map(|n| n.embeddings.clone()).collect();
            let before = seen.len();
            seen.sort();
            seen.dedup();
            prop_assert_eq!(seen.len(), before, "an embedding was reported twice");
            let mut all = enumerate_embeddings(&graph, q, None, MatchMode::Homomorphism);
            all.sort();
            prop_assert_eq!(seen, all);
        }
    }

    #[test]
    fn join_is_linear_in_its_left_input(a in rows(2, 12), b in rows(2, 12), r in rows(3, 12), lc in 0usize..2, rc in 0usize..3) {
        let key = JoinKey::new(lc, rc);
        let (a, b, r) = (view(2, &a), view(2, &b), view(3, &r));
        let mut s = JoinStats::default();
        let mut ab = a.clone_rows();
        ab.absorb(b.clone_rows());
        let mut parts = hash_join(&a, &r, key, &mut s);
        parts.absorb(hash_join(&b, &r, key, &mut s));
        prop_assert_eq!(hash_join(&ab, &r, key, &mut s), parts);
    }

    #[test]
    fn maintained_index_equals_rebuilt_index(first in rows(3, 10), later in rows(3, 10), col in 0usize..3, probe in rows(2, 8)) {
        let mut v = view(3, &first);
        v.cached_index(col);
        v.absorb(view(3, &later));
        let mut rebuilt = v.clone_rows();
        prop_assert_eq!(v.index(col), Some(rebuilt.cached_index(col)));
        let p = view(2, &probe);
        let mut s = JoinStats::default();
        prop_assert_eq!(join(&p, &v, JoinKey::new(1, col), &mut s), hash_join(&p, &v.clone_rows(), JoinKey::new(1, col), &mut s));
    }
}
