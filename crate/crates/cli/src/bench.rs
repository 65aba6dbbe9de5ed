//! The `bench` subcommand: run a suite of WCSP instances through a set of
//! algorithms and backends, collecting one report row per
//! (instance, algorithm, z, backend) combination.
//!
//! The suite file lists one instance path per line (blank lines and `#`
//! comments ignored), resolved relative to the suite file. Rows are written
//! by a single writer in suite order regardless of worker count.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, ValueEnum};

use costnet::dcop::{run_adpop, run_dpop, DcopConfig};
use costnet::graph::{build_primal_graph, compute_ordering, OrderingHeuristic, PseudoForest};
use costnet::model::Problem;
use costnet::report::{BenchRow, CSV_HEADER};
use costnet::solver::{bucket_elimination, mini_bucket_elimination, SolveConfig, SolveError};
use costnet::table::ExecBackend;
use costnet::wcsp::parse_wcsp;

use crate::{budget_rows, fail, parse_backend, EXIT_OK, EXIT_PARSE};

#[derive(Args)]
pub struct BenchArgs {
    /// Suite file: one WCSP path per line.
    #[arg(long)]
    suite: PathBuf,
    /// Report destination (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Comma-separated algorithms: be, mbe:Z, dpop, adpop:Z.
    #[arg(long, default_value = "be")]
    algorithms: String,
    /// Comma-separated backends: seq, par, par:K.
    #[arg(long, default_value = "seq")]
    backends: String,
    /// Worker threads running whole instances concurrently.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Memory budget per solve, in GiB.
    #[arg(long, default_value_t = 32.0)]
    budget_gib: f64,
}

#[derive(Copy, Clone, ValueEnum)]
enum Format {
    Csv,
    Jsonl,
}

#[derive(Clone, Debug, PartialEq)]
enum Algo {
    Be,
    Mbe(usize),
    Dpop,
    Adpop(usize),
}

impl Algo {
    fn parse(spec: &str) -> Result<Self, String> {
        match spec {
            "be" => Ok(Algo::Be),
            "dpop" => Ok(Algo::Dpop),
            other => {
                if let Some(zs) = other.strip_prefix("mbe:") {
                    zs.parse().map(Algo::Mbe).map_err(|_| format!("bad z in {other:?}"))
                } else if let Some(zs) = other.strip_prefix("adpop:") {
                    zs.parse().map(Algo::Adpop).map_err(|_| format!("bad z in {other:?}"))
                } else {
                    Err(format!("unknown algorithm {other:?}"))
                }
            }
        }
    }

    fn label(&self) -> String {
        match self {
            Algo::Be => "be".into(),
            Algo::Mbe(_) => "mbe".into(),
            Algo::Dpop => "dpop".into(),
            Algo::Adpop(_) => "adpop".into(),
        }
    }

    fn z(&self) -> Option<usize> {
        match self {
            Algo::Mbe(z) | Algo::Adpop(z) => Some(*z),
            _ => None,
        }
    }
}

fn status_of(err: &SolveError) -> String {
    match err {
        SolveError::BudgetExceeded { .. } => "oom".into(),
        other => format!("error:{other}"),
    }
}

fn run_one(problem: &Problem, algo: &Algo, backend: ExecBackend, budget: u64) -> BenchRow {
    let start = Instant::now();
    let graph = build_primal_graph(problem);
    let ordering = compute_ordering(&graph, OrderingHeuristic::DegreeAscending);
    let instance = problem.name.clone().unwrap_or_else(|| "unnamed".into());
    let mut row = BenchRow {
        instance,
        algorithm: algo.label(),
        z: algo.z(),
        backend: backend.label(),
        value: None,
        assignment_cost: None,
        induced_width: None,
        wall_ms: 0.0,
        speedup: None,
        simulated_runtime: None,
        util_messages: None,
        value_messages: None,
        max_message_rows: None,
        status: "ok".into(),
    };
    let ring = problem.semiring;
    let finite = |c: f64| if ring.is_top(c) { None } else { Some(c) };

    match algo {
        Algo::Be => {
            let cfg = SolveConfig { backend, budget_rows: budget, keep_trace: false };
            match bucket_elimination(problem, &ordering, &cfg) {
                Ok(s) => {
                    row.value = finite(s.optimum);
                    row.induced_width = Some(s.stats.induced_width);
                }
                Err(e) => row.status = status_of(&e),
            }
        }
        Algo::Mbe(z) => {
            let cfg = SolveConfig { backend, budget_rows: budget, keep_trace: false };
            match mini_bucket_elimination(problem, &ordering, *z, &cfg) {
                Ok(b) => {
                    row.value = finite(b.bound);
                    row.assignment_cost = finite(b.assignment_cost);
                    row.induced_width = Some(b.stats.induced_width);
                }
                Err(e) => row.status = status_of(&e),
            }
        }
        Algo::Dpop | Algo::Adpop(_) => {
            let forest = PseudoForest::build(&graph, &ordering);
            let cfg = DcopConfig { backend, budget_rows: budget, ..DcopConfig::default() };
            let outcome = match algo {
                Algo::Dpop => run_dpop(problem, &forest, &cfg).map(|(s, m)| {
                    row.value = finite(s.optimum);
                    row.induced_width = Some(s.stats.induced_width);
                    m
                }),
                _ => run_adpop(problem, &forest, algo.z().unwrap(), &cfg).map(|(b, m)| {
                    row.value = finite(b.bound);
                    row.assignment_cost = finite(b.assignment_cost);
                    row.induced_width = Some(b.stats.induced_width);
                    m
                }),
            };
            match outcome {
                Ok(m) => {
                    row.simulated_runtime = Some(m.simulated_runtime);
                    row.util_messages = Some(m.util_messages);
                    row.value_messages = Some(m.value_messages);
                    row.max_message_rows = Some(m.max_message_rows);
                }
                Err(e) => row.status = status_of(&e),
            }
        }
    }
    row.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    row
}

fn bench_instance(
    path: &Path,
    algos: &[Algo],
    backends: &[ExecBackend],
    budget: u64,
) -> Vec<BenchRow> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            return vec![BenchRow {
                instance: path.display().to_string(),
                algorithm: String::new(),
                z: None,
                backend: String::new(),
                value: None,
                assignment_cost: None,
                induced_width: None,
                wall_ms: 0.0,
                speedup: None,
                simulated_runtime: None,
                util_messages: None,
                value_messages: None,
                max_message_rows: None,
                status: format!("error:io {e}"),
            }]
        }
    };
    let mut problem = match parse_wcsp(&text) {
        Ok(p) => p,
        Err(e) => {
            return vec![BenchRow {
                instance: path.display().to_string(),
                algorithm: String::new(),
                z: None,
                backend: String::new(),
                value: None,
                assignment_cost: None,
                induced_width: None,
                wall_ms: 0.0,
                speedup: None,
                simulated_runtime: None,
                util_messages: None,
                value_messages: None,
                max_message_rows: None,
                status: format!("error:parse {e}"),
            }]
        }
    };
    if problem.name.is_none() {
        problem.name = Some(path.display().to_string());
    }

    let mut rows = Vec::new();
    for algo in algos {
        // Sequential wall time per algorithm anchors the speedup column.
        let mut seq_ms: Option<f64> = None;
        for backend in backends {
            let mut row = run_one(&problem, algo, *backend, budget);
            if row.status == "ok" {
                match backend.kind {
                    costnet::table::BackendKind::Sequential => seq_ms = Some(row.wall_ms),
                    _ => {
                        row.speedup = seq_ms.map(|s| s / row.wall_ms);
                    }
                }
            }
            rows.push(row);
        }
    }
    rows
}

pub fn run(args: BenchArgs) -> u8 {
    let suite_text = match std::fs::read_to_string(&args.suite) {
        Ok(t) => t,
        Err(e) => return fail(EXIT_PARSE, format!("cannot read suite: {e}")),
    };
    let base = args.suite.parent().unwrap_or(Path::new("."));
    let paths: Vec<PathBuf> = suite_text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            let p = Path::new(l);
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        })
        .collect();

    let mut algos = Vec::new();
    for spec in args.algorithms.split(',').filter(|s| !s.is_empty()) {
        match Algo::parse(spec.trim()) {
            Ok(a) => algos.push(a),
            Err(e) => return fail(EXIT_PARSE, e),
        }
    }
    let mut backends = Vec::new();
    for spec in args.backends.split(',').filter(|s| !s.is_empty()) {
        match parse_backend(spec.trim()) {
            Ok(b) => backends.push(b),
            Err(e) => return fail(EXIT_PARSE, e),
        }
    }
    let budget = budget_rows(args.budget_gib);

    // Fan instances out over worker threads; results keep suite order.
    let jobs = args.jobs.max(1);
    let mut all_rows: Vec<Vec<BenchRow>> = Vec::with_capacity(paths.len());
    if jobs <= 1 {
        for path in &paths {
            all_rows.push(bench_instance(path, &algos, &backends, budget));
        }
    } else {
        let next = std::sync::atomic::AtomicUsize::new(0);
        let results: Vec<std::sync::Mutex<Vec<BenchRow>>> =
            (0..paths.len()).map(|_| std::sync::Mutex::new(Vec::new())).collect();
        std::thread::scope(|scope| {
            for _ in 0..jobs.min(paths.len().max(1)) {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                    if i >= paths.len() {
                        break;
                    }
                    let rows = bench_instance(&paths[i], &algos, &backends, budget);
                    *results[i].lock().unwrap() = rows;
                });
            }
        });
        for cell in results {
            all_rows.push(cell.into_inner().unwrap());
        }
    }

    let mut out: Box<dyn Write> = match &args.out {
        None => Box::new(std::io::stdout()),
        Some(path) => match std::fs::File::create(path) {
            Ok(f) => Box::new(f),
            Err(e) => return fail(EXIT_PARSE, format!("cannot write report: {e}")),
        },
    };
    let write_result = (|| -> std::io::Result<()> {
        if matches!(args.format, Format::Csv) {
            writeln!(out, "{CSV_HEADER}")?;
        }
        for rows in &all_rows {
            for row in rows {
                match args.format {
                    Format::Csv => writeln!(out, "{}", row.to_csv_line())?,
                    Format::Jsonl => writeln!(out, "{}", row.to_json_line())?,
                }
            }
        }
        Ok(())
    })();
    match write_result {
        Ok(()) => EXIT_OK,
        Err(e) => fail(EXIT_PARSE, format!("report write failed: {e}")),
    }
}
