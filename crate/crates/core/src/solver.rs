//! Bucket elimination and mini-bucket elimination over flat tables.
//!
//! Variables are processed from the tail of the ordering to the head. The
//! bucket of a variable holds every pending function whose highest-priority
//! scope variable it is. Exact elimination aggregates the whole bucket and
//! marginalizes the variable out; bounded elimination first partitions the
//! bucket into mini-buckets whose scope unions stay within `z` variables and
//! eliminates each independently, which yields a lower bound for min-sum
//! tasks (an upper bound for max-product). A forward pass over the retained
//! bucket tables then produces a concrete assignment, which evaluates to the
//! optimum in the exact case and to the opposite bound otherwise.
//!
//! Memory is budgeted up front: a scope-only dry run of the whole
//! elimination computes every table size before anything is allocated, and
//! the solve is refused if any table would exceed the budget.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::graph::{build_primal_graph, induced_width, Ordering};
use crate::model::{evaluate_complete, Cost, Problem, Semiring, Task, VarId};
use crate::table::{
    aggregate_many_into, eliminate_last, table_from_function, BucketTable, ExecBackend,
    TableError,
};

/// Default memory budget: the row count of 32 GiB worth of 8-byte costs.
pub const DEFAULT_BUDGET_ROWS: u64 = (32u64 << 30) / 8;

#[derive(Debug, Error, PartialEq)]
pub enum SolveError {
    #[error(
        "bucket of variable {variable} needs {estimated_rows} rows, over the budget of {budget_rows}"
    )]
    BudgetExceeded { variable: VarId, estimated_rows: u64, budget_rows: u64 },
    #[error("z = {z} is below the largest function arity {required} (variable {variable})")]
    ZTooSmall { variable: VarId, required: usize, z: usize },
    #[error("ordering covers {got} variables, problem has {want}")]
    OrderingMismatch { got: usize, want: usize },
    #[error("table kernel error: {0}")]
    Table(#[from] TableError),
}

/// Solver knobs shared by the exact and bounded paths.
#[derive(Debug, Clone)]
pub struct SolveConfig {
    pub backend: ExecBackend,
    /// Refuse any solve that would materialize a table above this row count.
    pub budget_rows: u64,
    /// Keep every eliminated bucket function for inspection (tests and the
    /// message-passing equivalence checks); the aggregated tables needed by
    /// the forward pass are always retained.
    pub keep_trace: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            backend: ExecBackend::sequential(),
            budget_rows: DEFAULT_BUDGET_ROWS,
            keep_trace: false,
        }
    }
}

/// Run statistics for one solve.
#[derive(Debug, Clone, Serialize)]
pub struct InferenceStats {
    pub induced_width: usize,
    /// Largest row count over every table the engine materialized.
    pub max_table_rows: u64,
    pub elimination_ms: f64,
    pub forward_ms: f64,
    pub total_ms: f64,
    pub backend: String,
    /// Mini-bucket count per variable, indexed by variable id.
    pub mini_buckets: Vec<usize>,
}

/// Result of an exact solve. The assignment always evaluates back to the
/// optimum.
#[derive(Debug, Clone)]
pub struct Solution {
    pub optimum: Cost,
    pub assignment: Vec<usize>,
    pub stats: InferenceStats,
}

/// Result of a bounded solve. `bound` is the eliminate-per-mini-bucket
/// value: a lower bound on the optimum for min-sum, an upper bound on the
/// maximum probability for max-product (the marginalization relaxation
/// flips direction with the task). `assignment_cost` is the evaluation of
/// the returned assignment and bounds the optimum from the other side.
#[derive(Debug, Clone)]
pub struct Bounds {
    pub bound: Cost,
    pub assignment: Vec<usize>,
    pub assignment_cost: Cost,
    pub z: usize,
    pub stats: InferenceStats,
}

/// Eliminated bucket functions kept for inspection, grouped per variable in
/// elimination order of their mini-buckets.
#[derive(Debug, Clone, Default)]
pub struct SolveTrace {
    pub eliminated: Vec<Vec<BucketTable>>,
}

/// One mini-bucket of a partition: member indices into the bucket's function
/// list plus the union scope (sorted, eliminated variable last).
#[derive(Debug, Clone, PartialEq)]
pub struct MiniBucket {
    pub members: Vec<usize>,
    pub scope: Vec<VarId>,
    pub rows: u128,
}

/// Greedy first-fit partition of a bucket. Members are placed in descending
/// scope size (ties by insertion order) into the first mini-bucket whose
/// scope union stays within `z` variables; `None` disables the bound and
/// yields a single mini-bucket. Scopes must all contain the bucket variable
/// as their highest-priority member.
pub fn partition_bucket(
    scopes: &[&[VarId]],
    z: Option<usize>,
    variable: VarId,
    ordering: &Ordering,
    domains: &[usize],
) -> Result<Vec<MiniBucket>, SolveError> {
    let mut order: Vec<usize> = (0..scopes.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(scopes[i].len()));

    let mut unions: Vec<BTreeSet<VarId>> = Vec::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    for &i in &order {
        let scope = scopes[i];
        if let Some(z) = z {
            if scope.len() > z {
                return Err(SolveError::ZTooSmall { variable, required: scope.len(), z });
            }
        }
        let slot = unions.iter().position(|u| {
            let merged = scope.iter().filter(|v| !u.contains(v)).count() + u.len();
            z.is_none_or(|z| merged <= z)
        });
        match slot {
            Some(k) => {
                unions[k].extend(scope.iter().copied());
                members[k].push(i);
            }
            None => {
                unions.push(scope.iter().copied().collect());
                members.push(vec![i]);
            }
        }
    }

    Ok(unions
        .into_iter()
        .zip(members)
        .map(|(u, members)| {
            let mut scope: Vec<VarId> = u.into_iter().collect();
            scope.sort_by_key(|&v| ordering.position(v));
            let rows = BucketTable::row_count(&scope.iter().map(|&v| domains[v]).collect::<Vec<_>>());
            MiniBucket { members, scope, rows }
        })
        .collect())
}

// A pending table during elimination: either an original problem function or
// a generated bucket function.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Member {
    Func(usize),
    Gen(usize),
}

// The scope-only dry run. Mirrors the real elimination exactly, so table
// sizes and the mini-bucket structure are known before allocation.
struct Plan {
    // Per ordering position, tail first: the mini-buckets of that variable
    // with resolved member lists.
    steps: Vec<PlanStep>,
    // Original functions with empty scope.
    constant_funcs: Vec<usize>,
    max_rows: u128,
    mini_buckets_per_var: Vec<usize>,
}

struct PlanStep {
    variable: VarId,
    minis: Vec<(Vec<Member>, MiniBucket)>,
}

fn build_plan(
    problem: &Problem,
    ordering: &Ordering,
    z: Option<usize>,
    budget_rows: u64,
) -> Result<Plan, SolveError> {
    let n = problem.num_vars();
    if ordering.len() != n {
        return Err(SolveError::OrderingMismatch { got: ordering.len(), want: n });
    }

    let mut buckets: Vec<Vec<(Member, Vec<VarId>)>> = vec![Vec::new(); n];
    let mut constant_funcs = Vec::new();
    for (i, f) in problem.functions.iter().enumerate() {
        match f.scope.iter().max_by_key(|&&v| ordering.position(v)) {
            Some(&top) => buckets[top].push((Member::Func(i), f.scope.clone())),
            None => constant_funcs.push(i),
        }
    }

    let mut steps = Vec::with_capacity(n);
    let mut max_rows: u128 = 0;
    let mut mini_buckets_per_var = vec![0usize; n];
    let mut gen_count = 0usize;

    for &variable in ordering.vars().iter().rev() {
        let entries = std::mem::take(&mut buckets[variable]);
        if entries.is_empty() {
            steps.push(PlanStep { variable, minis: Vec::new() });
            continue;
        }
        let scopes: Vec<&[VarId]> = entries.iter().map(|(_, s)| s.as_slice()).collect();
        let minis = partition_bucket(&scopes, z, variable, ordering, &problem.domains)?;
        mini_buckets_per_var[variable] = minis.len();

        let mut resolved = Vec::with_capacity(minis.len());
        for mini in minis {
            if mini.rows > budget_rows as u128 {
                return Err(SolveError::BudgetExceeded {
                    variable,
                    estimated_rows: mini.rows.min(u64::MAX as u128) as u64,
                    budget_rows,
                });
            }
            max_rows = max_rows.max(mini.rows);
            let members: Vec<Member> = mini.members.iter().map(|&i| entries[i].0).collect();
            // Route the eliminated function to its next bucket; its scope is
            // sorted by priority, so the new bucket variable is its last.
            let reduced: Vec<VarId> = mini.scope[..mini.scope.len() - 1].to_vec();
            if let Some(&top) = reduced.last() {
                buckets[top].push((Member::Gen(gen_count), reduced));
            }
            gen_count += 1;
            resolved.push((members, mini));
        }
        steps.push(PlanStep { variable, minis: resolved });
    }

    Ok(Plan { steps, constant_funcs, max_rows, mini_buckets_per_var })
}

// Everything the forward pass needs about one variable's bucket.
struct RetainedBucket {
    variable: VarId,
    tables: Vec<BucketTable>,
}

struct Elimination {
    retained: Vec<RetainedBucket>,
    bound: Cost,
    max_rows: u128,
    mini_buckets_per_var: Vec<usize>,
    trace: SolveTrace,
}

fn run_elimination(
    problem: &Problem,
    ordering: &Ordering,
    z: Option<usize>,
    cfg: &SolveConfig,
) -> Result<Elimination, SolveError> {
    let plan = build_plan(problem, ordering, z, cfg.budget_rows)?;
    let ring = problem.semiring;
    let n = problem.num_vars();

    let mut bound = ring.identity();
    for &i in &plan.constant_funcs {
        bound = ring.combine(bound, problem.functions[i].costs[0]);
    }

    let mut gen_tables: Vec<Option<BucketTable>> = Vec::new();
    let mut retained = Vec::with_capacity(n);
    let mut max_rows = plan.max_rows;
    let mut trace = SolveTrace::default();
    if cfg.keep_trace {
        trace.eliminated = vec![Vec::new(); n];
    }

    for step in &plan.steps {
        let mut kept = Vec::with_capacity(step.minis.len());
        for (members, mini) in &step.minis {
            let dims: Vec<usize> = mini.scope.iter().map(|&v| problem.domains[v]).collect();
            let mut out = BucketTable::filled(mini.scope.clone(), dims, ring.identity());

            let mut converted = Vec::new();
            for member in members {
                match member {
                    Member::Func(i) => {
                        let t = table_from_function(
                            &problem.functions[*i],
                            ordering,
                            &problem.domains,
                        );
                        max_rows = max_rows.max(t.rows() as u128);
                        converted.push(t);
                    }
                    Member::Gen(g) => {
                        converted.push(gen_tables[*g].take().expect("generated table used once"));
                    }
                }
            }
            let refs: Vec<&BucketTable> = converted.iter().collect();
            aggregate_many_into(&mut out, &refs, ring, &cfg.backend)?;

            let eliminated = eliminate_last(&out, ring, &cfg.backend)?;
            max_rows = max_rows.max(eliminated.rows() as u128);
            kept.push(out);

            if eliminated.scope.is_empty() {
                bound = ring.combine(bound, eliminated.chi[0]);
                if cfg.keep_trace {
                    trace.eliminated[step.variable].push(eliminated);
                }
                gen_tables.push(None);
            } else {
                if cfg.keep_trace {
                    trace.eliminated[step.variable].push(eliminated.clone());
                }
                gen_tables.push(Some(eliminated));
            }
        }
        retained.push(RetainedBucket { variable: step.variable, tables: kept });
    }

    Ok(Elimination {
        retained,
        bound,
        max_rows,
        mini_buckets_per_var: plan.mini_buckets_per_var,
        trace,
    })
}

/// Head-to-tail value assignment over retained bucket tables. Each variable
/// takes the value optimizing the combined entry of every table in its
/// bucket, with earlier variables fixed; ties go to the smallest value
/// index. Variables with empty buckets take value 0.
pub fn assign_forward(
    buckets: &[(VarId, &[BucketTable])],
    ordering: &Ordering,
    ring: Semiring,
    domains: &[usize],
) -> Vec<usize> {
    let n = ordering.len();
    let mut assignment = vec![0usize; n];
    let by_var: std::collections::HashMap<VarId, &[BucketTable]> =
        buckets.iter().map(|&(v, t)| (v, t)).collect();

    for &v in ordering.vars() {
        let tables = match by_var.get(&v) {
            Some(t) if !t.is_empty() => *t,
            _ => continue,
        };
        let mut best_value = 0usize;
        let mut best_cost = None::<Cost>;
        for value in 0..domains[v] {
            assignment[v] = value;
            let mut total = ring.identity();
            for table in tables.iter() {
                let mut r = 0usize;
                for (i, &u) in table.scope.iter().enumerate() {
                    r = r * table.dims[i] + assignment[u];
                }
                total = ring.combine(total, table.chi[r]);
            }
            if best_cost.is_none_or(|b| ring.better(total, b)) {
                best_cost = Some(total);
                best_value = value;
            }
        }
        assignment[v] = best_value;
    }
    assignment
}

fn make_stats(
    problem: &Problem,
    ordering: &Ordering,
    elim: &Elimination,
    backend: &ExecBackend,
    elimination: Duration,
    forward: Duration,
    start: Instant,
) -> InferenceStats {
    let graph = build_primal_graph(problem);
    InferenceStats {
        induced_width: induced_width(&graph, ordering),
        max_table_rows: elim.max_rows.min(u64::MAX as u128) as u64,
        elimination_ms: elimination.as_secs_f64() * 1e3,
        forward_ms: forward.as_secs_f64() * 1e3,
        total_ms: start.elapsed().as_secs_f64() * 1e3,
        backend: backend.label(),
        mini_buckets: elim.mini_buckets_per_var.clone(),
    }
}

/// Exact solve by full bucket elimination. Handles disconnected problems in
/// a single sweep: each component's residual constant is combined into the
/// optimum. The returned assignment evaluates exactly to the optimum.
pub fn bucket_elimination(
    problem: &Problem,
    ordering: &Ordering,
    cfg: &SolveConfig,
) -> Result<Solution, SolveError> {
    let (solution, _) = bucket_elimination_traced(problem, ordering, cfg)?;
    Ok(solution)
}

/// As [`bucket_elimination`], also returning the eliminated bucket functions
/// when `cfg.keep_trace` is set.
pub fn bucket_elimination_traced(
    problem: &Problem,
    ordering: &Ordering,
    cfg: &SolveConfig,
) -> Result<(Solution, SolveTrace), SolveError> {
    let start = Instant::now();
    let elim = run_elimination(problem, ordering, None, cfg)?;
    let elimination = start.elapsed();

    let fwd_start = Instant::now();
    let buckets: Vec<(VarId, &[BucketTable])> =
        elim.retained.iter().map(|b| (b.variable, b.tables.as_slice())).collect();
    let assignment = assign_forward(&buckets, ordering, problem.semiring, &problem.domains);
    let forward = fwd_start.elapsed();

    let stats = make_stats(problem, ordering, &elim, &cfg.backend, elimination, forward, start);
    let solution = Solution { optimum: elim.bound, assignment, stats };
    Ok((solution, elim.trace))
}

/// Bounded solve by mini-bucket elimination with scope-union bound `z`
/// (counting the eliminated variable, so generated functions have arity at
/// most `z - 1`). Returns the relaxation bound together with a concrete
/// assignment and its evaluation.
pub fn mini_bucket_elimination(
    problem: &Problem,
    ordering: &Ordering,
    z: usize,
    cfg: &SolveConfig,
) -> Result<Bounds, SolveError> {
    let (bounds, _) = mini_bucket_elimination_traced(problem, ordering, z, cfg)?;
    Ok(bounds)
}

pub fn mini_bucket_elimination_traced(
    problem: &Problem,
    ordering: &Ordering,
    z: usize,
    cfg: &SolveConfig,
) -> Result<(Bounds, SolveTrace), SolveError> {
    let start = Instant::now();
    let elim = run_elimination(problem, ordering, Some(z), cfg)?;
    let elimination = start.elapsed();

    let fwd_start = Instant::now();
    let buckets: Vec<(VarId, &[BucketTable])> =
        elim.retained.iter().map(|b| (b.variable, b.tables.as_slice())).collect();
    let assignment = assign_forward(&buckets, ordering, problem.semiring, &problem.domains);
    let forward = fwd_start.elapsed();

    let assignment_cost = evaluate_complete(problem, &assignment);
    let stats = make_stats(problem, ordering, &elim, &cfg.backend, elimination, forward, start);
    let bounds =
        Bounds { bound: elim.bound, assignment, assignment_cost, z, stats };
    Ok((bounds, elim.trace))
}

/// Machine-readable result record, one JSON object per solve.
#[derive(Debug, Clone, Serialize)]
pub struct ResultRecord {
    pub task: Task,
    pub algorithm: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<usize>,
    /// Optimum (exact algorithms) in the task's native domain; `None` when
    /// the problem is infeasible.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimum: Option<f64>,
    /// Relaxation bound (bounded algorithms).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub assignment_cost: Option<f64>,
    pub feasible: bool,
    pub assignment: Vec<usize>,
    pub stats: InferenceStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instance: Option<String>,
}

fn finite_or_none(ring: Semiring, c: Cost) -> Option<f64> {
    if ring.is_top(c) {
        None
    } else {
        Some(c)
    }
}

impl ResultRecord {
    pub fn from_solution(problem: &Problem, algorithm: &str, s: &Solution) -> Self {
        let ring = problem.semiring;
        ResultRecord {
            task: ring.task,
            algorithm: algorithm.to_string(),
            z: None,
            optimum: finite_or_none(ring, s.optimum),
            bound: None,
            assignment_cost: None,
            feasible: !ring.is_top(s.optimum),
            assignment: s.assignment.clone(),
            stats: s.stats.clone(),
            instance: problem.name.clone(),
        }
    }

    pub fn from_bounds(problem: &Problem, algorithm: &str, b: &Bounds) -> Self {
        let ring = problem.semiring;
        ResultRecord {
            task: ring.task,
            algorithm: algorithm.to_string(),
            z: Some(b.z),
            optimum: None,
            bound: finite_or_none(ring, b.bound),
            assignment_cost: finite_or_none(ring, b.assignment_cost),
            feasible: !ring.is_top(b.assignment_cost),
            assignment: b.assignment.clone(),
            stats: b.stats.clone(),
            instance: problem.name.clone(),
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }
}
