//! Command-line front end for the cost-network solvers.
//!
//! Exit codes: 0 success, 2 malformed input or usage, 3 memory-budget or
//! bound refusal, 4 timeout.

mod bench;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use costnet::dcop::{DcopConfig, RunMetrics};
use costnet::generate::{generate, EdgeConvention, GeneratorConfig, Topology};
use costnet::graph::{
    build_primal_graph, compute_ordering, Ordering, OrderingHeuristic, PseudoForest,
};
use costnet::model::{condition_on_evidence, Problem};
use costnet::oracle::brute_force;
use costnet::solver::{
    bucket_elimination, mini_bucket_elimination, ResultRecord, SolveConfig, SolveError,
};
use costnet::table::ExecBackend;
use costnet::uai::{parse_evidence, parse_uai};
use costnet::wcsp::{parse_wcsp, write_wcsp};

const EXIT_OK: u8 = 0;
const EXIT_PARSE: u8 = 2;
const EXIT_REFUSED: u8 = 3;
const EXIT_TIMEOUT: u8 = 4;

#[derive(Parser)]
#[command(name = "costnet", version, about = "Exact and approximate inference on discrete cost networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a WCSP file with bucket elimination or its bounded variant.
    Solve(SolveArgs),
    /// Most probable explanation of a UAI Bayes network, given evidence.
    Mpe(MpeArgs),
    /// Simulate exact multi-agent message passing on a WCSP.
    Dpop(DcopArgs),
    /// Simulate bounded multi-agent message passing on a WCSP.
    Adpop(AdpopArgs),
    /// Generate a random instance and write it as a WCSP file.
    Gen(GenArgs),
    /// Solve a WCSP file by exhaustive enumeration (reference oracle).
    Oracle(OracleArgs),
    /// Run a suite of instances and emit a CSV or JSONL report.
    Bench(bench::BenchArgs),
}

#[derive(Args)]
struct CommonSolveArgs {
    /// Variable ordering: a heuristic name or a permutation file.
    #[arg(long, default_value = "degree")]
    ordering: String,
    /// Execution backend: seq, par, or par:K.
    #[arg(long, default_value = "seq")]
    backend: String,
    /// Memory budget for tables, in GiB.
    #[arg(long, default_value_t = 32.0)]
    budget_gib: f64,
    /// Abort with exit code 4 after this many seconds.
    #[arg(long)]
    timeout_sec: Option<u64>,
    /// Write the ordering actually used to this file.
    #[arg(long)]
    write_ordering: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    /// WCSP instance file.
    file: PathBuf,
    /// Algorithm to run.
    #[arg(long, value_enum, default_value_t = Algorithm::Be)]
    algorithm: Algorithm,
    /// Scope bound for the mbe algorithm.
    #[arg(long)]
    z: Option<usize>,
    #[command(flatten)]
    common: CommonSolveArgs,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Algorithm {
    Be,
    Mbe,
}

#[derive(Args)]
struct MpeArgs {
    /// UAI Bayes network file.
    file: PathBuf,
    /// UAI evidence file.
    #[arg(long)]
    evidence: Option<PathBuf>,
    /// Work on raw probabilities instead of logarithms.
    #[arg(long)]
    linear: bool,
    #[command(flatten)]
    common: CommonSolveArgs,
}

#[derive(Args)]
struct DcopArgs {
    /// WCSP instance file.
    file: PathBuf,
    /// Message latency in clock units.
    #[arg(long, default_value_t = 0)]
    latency: u64,
    /// Write the message log (JSON lines) to this file.
    #[arg(long)]
    message_log: Option<PathBuf>,
    #[command(flatten)]
    common: CommonSolveArgs,
}

#[derive(Args)]
struct AdpopArgs {
    /// Scope bound per mini-bucket.
    #[arg(long)]
    z: usize,
    #[command(flatten)]
    dcop: DcopArgs,
}

#[derive(Args)]
struct GenArgs {
    /// Graph topology.
    #[arg(long, value_enum)]
    topology: TopologyArg,
    /// Number of variables (a perfect square for grids).
    #[arg(long)]
    n: usize,
    /// Domain size.
    #[arg(long)]
    d: usize,
    /// Density parameter for the random topology.
    #[arg(long, default_value_t = 0.3)]
    p1: f64,
    /// Fraction of forbidden cells per function.
    #[arg(long, default_value_t = 0.5)]
    p2: f64,
    /// Largest finite cost.
    #[arg(long, default_value_t = 100)]
    cost_max: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Edge-count convention for the random topology: `total` takes
    /// floor(n*(n-1)*p1) edges, `pairs` treats p1 as a density over
    /// unordered pairs (half as many).
    #[arg(long, value_enum, default_value_t = ConventionArg::Total)]
    edge_convention: ConventionArg,
    /// Output WCSP path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Copy, Clone, ValueEnum)]
enum TopologyArg {
    Random,
    Scalefree,
    Grid,
}

#[derive(Copy, Clone, ValueEnum)]
enum ConventionArg {
    Total,
    Pairs,
}

#[derive(Args)]
struct OracleArgs {
    /// WCSP instance file.
    file: PathBuf,
    #[arg(long)]
    timeout_sec: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Mpe(args) => cmd_mpe(args),
        Command::Dpop(args) => cmd_dcop(args, None),
        Command::Adpop(args) => cmd_dcop(args.dcop, Some(args.z)),
        Command::Gen(args) => cmd_gen(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Bench(args) => bench::run(args),
    };
    ExitCode::from(code)
}

fn fail(code: u8, message: impl std::fmt::Display) -> u8 {
    eprintln!("error: {message}");
    code
}

fn parse_backend(spec: &str) -> Result<ExecBackend, String> {
    match spec {
        "seq" => Ok(ExecBackend::sequential()),
        "par" => {
            let workers = std::thread::available_parallelism().map(|c| c.get()).unwrap_or(2);
            Ok(ExecBackend::parallel(workers))
        }
        other => match other.strip_prefix("par:") {
            Some(k) => k
                .parse::<usize>()
                .map(ExecBackend::parallel)
                .map_err(|_| format!("invalid worker count in backend {other:?}")),
            None => Err(format!("unknown backend {other:?} (expected seq, par, or par:K)")),
        },
    }
}

fn budget_rows(gib: f64) -> u64 {
    ((gib * (1u64 << 30) as f64) / 8.0).max(1.0) as u64
}

fn resolve_ordering(spec: &str, problem: &Problem) -> Result<Ordering, String> {
    let graph = build_primal_graph(problem);
    match spec {
        "degree" => Ok(compute_ordering(&graph, OrderingHeuristic::DegreeAscending)),
        "dfs-degree" => Ok(compute_ordering(&graph, OrderingHeuristic::DfsDegree)),
        "min-degree" => Ok(compute_ordering(&graph, OrderingHeuristic::MinDegree)),
        path => {
            let ordering = Ordering::read_file(Path::new(path))
                .map_err(|e| format!("ordering file {path:?}: {e}"))?;
            if ordering.len() != problem.num_vars() {
                return Err(format!(
                    "ordering file {path:?} covers {} variables, instance has {}",
                    ordering.len(),
                    problem.num_vars()
                ));
            }
            Ok(ordering)
        }
    }
}

fn read_file(path: &Path) -> Result<String, u8> {
    std::fs::read_to_string(path)
        .map_err(|e| fail(EXIT_PARSE, format!("cannot read {}: {e}", path.display())))
}

/// Run `work` on a worker thread, giving up after the deadline.
fn with_timeout<T: Send + 'static>(
    timeout_sec: Option<u64>,
    work: impl FnOnce() -> T + Send + 'static,
) -> Option<T> {
    match timeout_sec {
        None => Some(work()),
        Some(secs) => {
            let (tx, rx) = std::sync::mpsc::channel();
            std::thread::spawn(move || {
                let _ = tx.send(work());
            });
            rx.recv_timeout(Duration::from_secs(secs)).ok()
        }
    }
}

fn solve_exit(err: &SolveError) -> u8 {
    match err {
        SolveError::BudgetExceeded { .. } | SolveError::ZTooSmall { .. } => EXIT_REFUSED,
        _ => EXIT_PARSE,
    }
}

fn cmd_solve(args: SolveArgs) -> u8 {
    let text = match read_file(&args.file) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let problem = match parse_wcsp(&text) {
        Ok(p) => p,
        Err(e) => return fail(EXIT_PARSE, e),
    };
    let ordering = match resolve_ordering(&args.common.ordering, &problem) {
        Ok(o) => o,
        Err(e) => return fail(EXIT_PARSE, e),
    };
    if let Some(path) = &args.common.write_ordering {
        if let Err(e) = ordering.write_file(path) {
            return fail(EXIT_PARSE, format!("cannot write ordering: {e}"));
        }
    }
    let backend = match parse_backend(&args.common.backend) {
        Ok(b) => b,
        Err(e) => return fail(EXIT_PARSE, e),
    };
    let cfg = SolveConfig {
        backend,
        budget_rows: budget_rows(args.common.budget_gib),
        keep_trace: false,
    };

    let z = args.z;
    if args.algorithm == Algorithm::Mbe && z.is_none() {
        return fail(EXIT_PARSE, "--algorithm mbe requires --z");
    }
    let algorithm = args.algorithm;
    let timeout = args.common.timeout_sec;
    let outcome = with_timeout(timeout, move || match algorithm {
        Algorithm::Be => bucket_elimination(&problem, &ordering, &cfg)
            .map(|s| ResultRecord::from_solution(&problem, "be", &s)),
        Algorithm::Mbe => mini_bucket_elimination(&problem, &ordering, z.unwrap(), &cfg)
            .map(|b| ResultRecord::from_bounds(&problem, "mbe", &b)),
    });
    match outcome {
        None => fail(EXIT_TIMEOUT, "timed out"),
        Some(Err(e)) => fail(solve_exit(&e), e),
        Some(Ok(record)) => {
            println!("{}", record.to_json_line());
            EXIT_OK
        }
    }
}

fn cmd_mpe(args: MpeArgs) -> u8 {
    let text = match read_file(&args.file) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let parsed = match parse_uai(&text) {
        Ok(p) => p,
        Err(e) => return fail(EXIT_PARSE, e),
    };
    for w in &parsed.warnings {
        eprintln!("warning: {w}");
    }
    let bn = parsed.network;
    let evidence = match &args.evidence {
        None => costnet::model::Assignment::empty(bn.num_vars()),
        Some(path) => {
            let etext = match read_file(path) {
                Ok(t) => t,
                Err(code) => return code,
            };
            match parse_evidence(&etext, bn.num_vars()) {
                Ok(ev) => ev,
                Err(e) => return fail(EXIT_PARSE, e),
            }
        }
    };
    let conditioned = match condition_on_evidence(&bn, &evidence, !args.linear) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_PARSE, e),
    };
    let ordering = match resolve_ordering(&args.common.ordering, &conditioned.problem) {
        Ok(o) => o,
        Err(e) => return fail(EXIT_PARSE, e),
    };
    let backend = match parse_backend(&args.common.backend) {
        Ok(b) => b,
        Err(e) => return fail(EXIT_PARSE, e),
    };
    let cfg = SolveConfig {
        backend,
        budget_rows: budget_rows(args.common.budget_gib),
        keep_trace: false,
    };

    let timeout = args.common.timeout_sec;
    let outcome = with_timeout(timeout, move || {
        bucket_elimination(&conditioned.problem, &ordering, &cfg).map(|s| {
            let mut record = ResultRecord::from_solution(&conditioned.problem, "be", &s);
            // Report the assignment over the original variables, with the
            // evidence filled back in.
            record.assignment = conditioned.expand_assignment(&s.assignment);
            record
        })
    });
    match outcome {
        None => fail(EXIT_TIMEOUT, "timed out"),
        Some(Err(e)) => fail(solve_exit(&e), e),
        Some(Ok(record)) => {
            println!("{}", record.to_json_line());
            EXIT_OK
        }
    }
}

#[derive(Serialize)]
struct DcopRecord {
    #[serde(flatten)]
    record: ResultRecord,
    metrics: RunMetrics,
}

fn cmd_dcop(args: DcopArgs, z: Option<usize>) -> u8 {
    let text = match read_file(&args.file) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let problem = match parse_wcsp(&text) {
        Ok(p) => p,
        Err(e) => return fail(EXIT_PARSE, e),
    };
    let ordering = match resolve_ordering(&args.common.ordering, &problem) {
        Ok(o) => o,
        Err(e) => return fail(EXIT_PARSE, e),
    };
    let backend = match parse_backend(&args.common.backend) {
        Ok(b) => b,
        Err(e) => return fail(EXIT_PARSE, e),
    };
    let graph = build_primal_graph(&problem);
    let forest = PseudoForest::build(&graph, &ordering);
    let cfg = DcopConfig {
        backend,
        budget_rows: budget_rows(args.common.budget_gib),
        latency: args.latency,
        keep_log: args.message_log.is_some(),
        ..DcopConfig::default()
    };

    let timeout = args.common.timeout_sec;
    let log_path = args.message_log.clone();
    let outcome = with_timeout(timeout, move || {
        let start = std::time::Instant::now();
        let out = costnet::dcop::simulate(&problem, &forest, z, &cfg)?;
        let log = costnet::dcop::log_to_jsonl(&out.log);
        let stats = costnet::dcop::run_stats(&problem, &forest, &out, &cfg.backend, start);
        let record = match z {
            None => {
                let solution = costnet::solver::Solution {
                    optimum: out.optimum,
                    assignment: out.assignment,
                    stats,
                };
                ResultRecord::from_solution(&problem, "dpop", &solution)
            }
            Some(z) => {
                let assignment_cost =
                    costnet::model::evaluate_complete(&problem, &out.assignment);
                let bounds = costnet::solver::Bounds {
                    bound: out.optimum,
                    assignment: out.assignment,
                    assignment_cost,
                    z,
                    stats,
                };
                ResultRecord::from_bounds(&problem, "adpop", &bounds)
            }
        };
        Ok::<_, SolveError>((log, DcopRecord { record, metrics: out.metrics }))
    });
    match outcome {
        None => fail(EXIT_TIMEOUT, "timed out"),
        Some(Err(e)) => fail(solve_exit(&e), e),
        Some(Ok((log, record))) => {
            if let Some(path) = log_path {
                if let Err(e) = std::fs::write(&path, log) {
                    return fail(EXIT_PARSE, format!("cannot write message log: {e}"));
                }
            }
            println!("{}", serde_json::to_string(&record).expect("record serializes"));
            EXIT_OK
        }
    }
}

fn cmd_gen(args: GenArgs) -> u8 {
    let convention = match args.edge_convention {
        ConventionArg::Total => EdgeConvention::TotalFormula,
        ConventionArg::Pairs => EdgeConvention::PairDensity,
    };
    let topology = match args.topology {
        TopologyArg::Random => Topology::Random { p1: args.p1, convention },
        TopologyArg::Scalefree => Topology::ScaleFree,
        TopologyArg::Grid => Topology::Grid,
    };
    let cfg = GeneratorConfig {
        topology,
        n: args.n,
        d: args.d,
        p2: args.p2,
        cost_max: args.cost_max,
        seed: args.seed,
    };
    let generated = match generate(&cfg) {
        Ok(g) => g,
        Err(e) => return fail(EXIT_PARSE, e),
    };
    for w in &generated.warnings {
        eprintln!("warning: {w}");
    }
    let text = match write_wcsp(&generated.problem) {
        Ok(t) => t,
        Err(e) => return fail(EXIT_PARSE, e),
    };
    if let Err(e) = std::fs::write(&args.out, text) {
        return fail(EXIT_PARSE, format!("cannot write {}: {e}", args.out.display()));
    }
    eprintln!(
        "wrote {} ({} variables, {} functions, {} edges)",
        args.out.display(),
        generated.problem.num_vars(),
        generated.problem.functions.len(),
        generated.edges.len()
    );
    EXIT_OK
}

fn cmd_oracle(args: OracleArgs) -> u8 {
    let text = match read_file(&args.file) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let problem = match parse_wcsp(&text) {
        Ok(p) => p,
        Err(e) => return fail(EXIT_PARSE, e),
    };
    let outcome = with_timeout(args.timeout_sec, move || {
        brute_force(&problem).map(|s| {
            let ring = problem.semiring;
            serde_json::json!({
                "task": "min_sum",
                "algorithm": "oracle",
                "optimum": if ring.is_top(s.optimum) { None } else { Some(s.optimum) },
                "feasible": s.feasible,
                "assignment": s.assignment,
                "instance": problem.name,
            })
        })
    });
    match outcome {
        None => fail(EXIT_TIMEOUT, "timed out"),
        Some(Err(e)) => fail(EXIT_REFUSED, e),
        Some(Ok(value)) => {
            println!("{value}");
            EXIT_OK
        }
    }
}
