use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bench(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bench")).args(args).current_dir(dir).output().expect("bench runs")
}

fn gen_small(dir: &Path) {
    let out = bench(
        &[
            "gen", "--num-queries", "12", "--avg-size", "3", "--edges", "300", "--labels", "5", "--vertices", "80",
            "--literal-pool", "4", "--seed", "11", "--out", "w",
        ],
        dir,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn gen_writes_workload_files_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    gen_small(dir.path());
    let w = dir.path().join("w");
    let manifest = fs::read_to_string(w.join("manifest.txt")).unwrap();
    assert!(manifest.contains("seed=11"), "{manifest}");
    assert!(manifest.contains("achieved_selectivity="));
    assert_eq!(fs::read_to_string(w.join("stream.txt")).unwrap().lines().count(), 300);
    let queries = tric::parse_query_file(&fs::read_to_string(w.join("queries.txt")).unwrap()).unwrap();
    assert_eq!(queries.len(), 12);
}

#[test]
fn run_writes_one_row_per_update_plus_summary() {
    let dir = tempfile::tempdir().unwrap();
    gen_small(dir.path());
    let out = bench(
        &["run", "--engine", "tric+", "--queries", "w/queries.txt", "--stream", "w/stream.txt", "--out", "r.csv", "--log", "r.tsv"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("r.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "update_t,latency_us,notifications");
    assert_eq!(lines.len(), 1 + 300 + 1);
    assert!(lines.last().unwrap().starts_with("summary,"));
    let total: usize = lines[1..301].iter().map(|l| l.rsplit(',').next().unwrap().parse::<usize>().unwrap()).sum();
    assert_eq!(lines.last().unwrap().rsplit(',').next().unwrap().parse::<usize>().unwrap(), total);
    assert!(String::from_utf8_lossy(&out.stdout).contains("mean_us"));
}

#[test]
fn diff_reports_identical_logs() {
    let dir = tempfile::tempdir().unwrap();
    gen_small(dir.path());
    let out = bench(
        &["diff", "--engines", "tric,tric+,inv,inc,oracle", "--queries", "w/queries.txt", "--stream", "w/stream.txt", "--mode", "iso"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("identical"));
}

#[test]
fn usage_and_input_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = bench(&["run", "--engine", "neo4j", "--queries", "q", "--stream", "s", "--out", "o"], dir.path());
    assert_eq!(unknown.status.code(), Some(2));
    let missing = bench(&["run", "--engine", "tric", "--queries", "absent.txt", "--stream", "s", "--out", "o"], dir.path());
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("absent.txt"));
}

#[test]
fn trend_prints_a_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let out = bench(
        &[
            "trend", "--axis", "queries", "--values", "4,8", "--engines", "tric,inc", "--avg-size", "3", "--edges", "200",
            "--vertices", "60", "--labels", "4",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.lines().count(), 1 + 2 * 2, "{text}");
}
