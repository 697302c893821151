//! Continuous multi-query subgraph matching over edge-addition streams.
//!
//! Queries are decomposed into covering paths ([`query`]), indexed either in
//! a shared trie forest ([`tric`]) or in edge-level inverted indexes
//! ([`inverted`]), and re-composed per update by hash joins over
//! materialized views ([`matview`], [`plan`]). [`oracle`] is a brute-force
//! reference and [`workload`] generates synthetic query sets and streams.

pub mod bench;
pub mod engine;
pub mod graph;
pub mod inverted;
pub mod label;
pub mod matview;
pub mod oracle;
pub mod plan;
pub mod query;
pub mod state;
pub mod tric;
pub mod workload;

pub use engine::{build_engine, render_log, Engine, EngineError, EngineKind, EngineStats, Notification};
pub use graph::{EdgePattern, EdgeTriple, Endpoint, GenericPattern, GraphStream, Update, VertexPattern};
pub use label::Label;
pub use matview::{BindingTuple, JoinKey, JoinStats, MaterializedView};
pub use plan::{Embedding, MatchMode};
pub use query::{covering_paths, parse_query, parse_query_file, PathDecomposition, QueryGraphPattern, QueryId};
