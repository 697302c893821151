use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tric::bench::{diff_engines, load_queries, load_stream, run_engine, trend_table, BenchError, RunConfig, TrendAxis};
use tric::engine::EngineKind;
use tric::graph::write_stream;
use tric::plan::MatchMode;
use tric::query::write_query_file;
use tric::workload::{achieved_selectivity, Workload, WorkloadParams};

#[derive(Parser)]
#[command(name = "bench", about = "Generate workloads and benchmark continuous graph-pattern engines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write queries.txt, stream.txt and manifest.txt into a directory.
    Gen(GenArgs),
    /// Replay a stream through one engine and write per-update timings.
    Run(RunArgs),
    /// Compare the notification logs of several engines.
    Diff(DiffArgs),
    /// Print a CSV table of answering time against one workload knob.
    Trend(TrendArgs),
}

#[derive(Args, Clone)]
struct WorkloadArgs {
    #[arg(long, default_value_t = 1000)]
    num_queries: usize,
    #[arg(long, default_value_t = 5)]
    avg_size: usize,
    #[arg(long, default_value_t = 0.25)]
    selectivity: f64,
    #[arg(long, default_value_t = 0.35)]
    overlap: f64,
    #[arg(long, default_value_t = 100_000)]
    edges: usize,
    #[arg(long, default_value_t = 40)]
    labels: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 100_000)]
    vertices: usize,
    #[arg(long, default_value_t = 20)]
    literal_pool: usize,
    #[arg(long, default_value_t = 4)]
    seed_pool: usize,
    #[arg(long, default_value_t = 0.05)]
    hub_probability: f64,
}

impl WorkloadArgs {
    fn params(&self) -> WorkloadParams {
        WorkloadParams {
            num_queries: self.num_queries,
            avg_size: self.avg_size,
            selectivity: self.selectivity,
            overlap: self.overlap,
            num_edges: self.edges,
            label_alphabet_size: self.labels,
            seed: self.seed,
            num_vertices: self.vertices,
            literal_pool: self.literal_pool,
            seed_pool: self.seed_pool,
            hub_probability: self.hub_probability,
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    workload: WorkloadArgs,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Skip measuring achieved selectivity with the oracle.
    #[arg(long)]
    no_measure: bool,
}

fn parse_mode(s: &str) -> Result<MatchMode, String> {
    MatchMode::parse(s).ok_or_else(|| format!("unknown mode `{s}` (expected hom or iso)"))
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    engine: EngineKind,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long)]
    stream: PathBuf,
    /// CSV output path.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "hom", value_parser = parse_mode)]
    mode: MatchMode,
    #[arg(long, default_value_t = 0)]
    warmup: usize,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    repetitions: u64,
    /// Also write the notification log as TSV.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct DiffArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    engines: Vec<EngineKind>,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long)]
    stream: PathBuf,
    #[arg(long, default_value = "hom", value_parser = parse_mode)]
    mode: MatchMode,
}

#[derive(Args)]
struct TrendArgs {
    /// queries, selectivity, overlap, avg-size or edges.
    #[arg(long, value_parser = |s: &str| TrendAxis::parse(s).ok_or_else(|| format!("unknown axis `{s}`")))]
    axis: TrendAxis,
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "tric,tric+,inc,inc+")]
    engines: Vec<EngineKind>,
    #[arg(long, default_value = "hom", value_parser = parse_mode)]
    mode: MatchMode,
    #[command(flatten)]
    workload: WorkloadArgs,
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn io_err(path: &std::path::Path) -> impl Fn(io::Error) -> BenchError + '_ {
    move |source| BenchError::Io { path: path.display().to_string(), source }
}

fn gen(args: GenArgs) -> Result<ExitCode, BenchError> {
    let w = Workload::generate(&args.workload.params())?;
    fs::create_dir_all(&args.out).map_err(io_err(&args.out))?;
    let qpath = args.out.join("queries.txt");
    let spath = args.out.join("stream.txt");
    let mpath = args.out.join("manifest.txt");
    write_query_file(&w.queries, BufWriter::new(File::create(&qpath).map_err(io_err(&qpath))?)).map_err(io_err(&qpath))?;
    write_stream(&w.stream, BufWriter::new(File::create(&spath).map_err(io_err(&spath))?)).map_err(io_err(&spath))?;
    let achieved = (!args.no_measure).then(|| achieved_selectivity(&w.queries, &w.stream, MatchMode::Homomorphism));
    w.write_manifest(achieved, File::create(&mpath).map_err(io_err(&mpath))?).map_err(io_err(&mpath))?;
    print!("{}", w.manifest(achieved));
    Ok(ExitCode::SUCCESS)
}

fn run(args: RunArgs) -> Result<ExitCode, BenchError> {
    let queries = load_queries(&args.queries)?;
    let stream = load_stream(&args.stream)?;
    let config = RunConfig {
        engine: args.engine,
        mode: args.mode,
        warmup: args.warmup,
        repetitions: args.repetitions as usize,
    };
    let result = run_engine(config, &queries, &stream)?;
    let mut csv = BufWriter::new(File::create(&args.out).map_err(io_err(&args.out))?);
    result.write_csv(&mut csv).map_err(io_err(&args.out))?;
    csv.flush().map_err(io_err(&args.out))?;
    if let Some(path) = &args.log {
        let mut f = BufWriter::new(File::create(path).map_err(io_err(path))?);
        for n in &result.log {
            n.write_tsv(&mut f).map_err(io_err(path))?;
        }
        f.flush().map_err(io_err(path))?;
    }
    println!("{}", result.report());
    Ok(ExitCode::SUCCESS)
}

fn diff(args: DiffArgs) -> Result<ExitCode, BenchError> {
    let queries = load_queries(&args.queries)?;
    let stream = load_stream(&args.stream)?;
    let outcome = diff_engines(&args.engines, args.mode, &queries, &stream)?;
    for (k, log) in &outcome.logs {
        println!("{k}\t{} lines", log.len());
    }
    match outcome.first_difference() {
        None => {
            println!("identical");
            Ok(ExitCode::SUCCESS)
        }
        Some((a, b, line)) => {
            println!("mismatch: {a} and {b} differ at sorted line {line}");
            Ok(ExitCode::from(1))
        }
    }
}

fn trend(args: TrendArgs) -> Result<ExitCode, BenchError> {
    let base = args.workload.params();
    match &args.out {
        Some(path) => {
            let f = BufWriter::new(File::create(path).map_err(io_err(path))?);
            trend_table(args.axis, &args.values, &base, &args.engines, args.mode, f)?;
        }
        None => trend_table(args.axis, &args.values, &base, &args.engines, args.mode, io::stdout().lock())?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Run(a) => run(a),
        Command::Diff(a) => diff(a),
        Command::Trend(a) => trend(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
