//! Deterministic single-process simulation of DPOP and its bounded variant
//! ADPOP: one agent per variable, cost tables flowing leaves-to-root, value
//! assignments flowing back down the pseudo-tree.
//!
//! Each agent owns the functions whose highest-priority scope variable is
//! its own. During the UTIL phase an agent waits for all of its children,
//! aggregates its functions with the received tables, eliminates its
//! variable, and ships the result to its parent; with a scope bound `z` it
//! partitions its bucket first and ships one table per mini-bucket. Tables
//! are computed by the same kernels as bucket elimination under the tree's
//! DFS ordering, so they match the centralized bucket functions entry for
//! entry. During the VALUE phase each agent fixes its variable given the
//! separator assignment received from its parent and forwards each child
//! exactly its separator's slice.
//!
//! Agents advance logical clocks: a UTIL activation starts once the last
//! child message has arrived (timestamp plus latency) and takes a
//! model-determined compute time; VALUE propagation adds latency only.
//! Simulated runtime is the maximum final clock. The scheduler is a fixed
//! two-sweep order over the tree, so runs are reproducible down to the
//! message log bytes.

use std::time::Instant;

use serde::Serialize;

use crate::graph::{PseudoForest, PseudoTree};
use crate::model::{evaluate_complete, Cost, Problem, Semiring, VarId};
use crate::solver::{partition_bucket, Bounds, InferenceStats, Solution, SolveError};
use crate::table::{
    aggregate_many_into, eliminate_last, table_from_function, BucketTable, ExecBackend,
};

/// How an agent's compute time is charged. The default counts table rows
/// processed during the UTIL activation, which keeps the metric reproducible
/// across machines; wall-clock measurement is opt-in.
#[derive(Debug, Clone)]
pub enum ComputeModel {
    /// `units_per_row` time units per table row read or written.
    RowsProcessed { units_per_row: u64 },
    /// A fixed cost per UTIL activation, regardless of table sizes.
    UniformActivation { units: u64 },
    /// Explicit per-agent UTIL activation costs, indexed by variable id.
    PerAgent(Vec<u64>),
    /// Measured wall time in nanoseconds (not reproducible).
    Measured,
}

impl Default for ComputeModel {
    fn default() -> Self {
        ComputeModel::RowsProcessed { units_per_row: 1 }
    }
}

#[derive(Debug, Clone)]
pub struct DcopConfig {
    pub backend: ExecBackend,
    pub budget_rows: u64,
    /// Message latency added to every hop, in clock units.
    pub latency: u64,
    pub compute_model: ComputeModel,
    /// Record a message log for export.
    pub keep_log: bool,
    /// Keep a copy of every shipped UTIL table in the output (tests).
    pub keep_tables: bool,
}

impl Default for DcopConfig {
    fn default() -> Self {
        DcopConfig {
            backend: ExecBackend::sequential(),
            budget_rows: crate::solver::DEFAULT_BUDGET_ROWS,
            latency: 0,
            compute_model: ComputeModel::default(),
            keep_log: false,
            keep_tables: false,
        }
    }
}

/// A bottom-up cost message: the sender's eliminated tables over subsets of
/// its separator, plus any scope-free residue accumulated in its subtree.
#[derive(Debug, Clone)]
pub struct UtilMessage {
    pub sender: VarId,
    pub receiver: VarId,
    pub tables: Vec<BucketTable>,
    pub constant: Cost,
    pub timestamp: u64,
}

/// A top-down assignment message covering exactly the receiver's separator.
#[derive(Debug, Clone)]
pub struct ValueMessage {
    pub sender: VarId,
    pub receiver: VarId,
    pub assignments: Vec<(VarId, usize)>,
    pub timestamp: u64,
}

/// One line of the exported message log.
#[derive(Debug, Clone, Serialize)]
pub struct MessageLogEntry {
    pub kind: &'static str,
    pub sender: VarId,
    pub receiver: VarId,
    /// Row count of each table carried (empty for value messages).
    pub table_rows: Vec<u64>,
    pub timestamp: u64,
}

/// Metrics of one simulated run.
#[derive(Debug, Clone, Serialize)]
pub struct RunMetrics {
    /// Maximum final logical clock over all agents.
    pub simulated_runtime: u64,
    /// Total number of messages exchanged (network load).
    pub network_load: usize,
    pub util_messages: usize,
    pub value_messages: usize,
    /// Rows of the largest UTIL table shipped.
    pub max_message_rows: u64,
    /// UTIL compute time charged per agent, indexed by variable id.
    pub per_agent_compute: Vec<u64>,
    /// Per-agent mini-bucket counts, indexed by variable id.
    pub mini_buckets: Vec<usize>,
}

/// Full output of a simulation.
#[derive(Debug)]
pub struct SimulationOutput {
    pub assignment: Vec<usize>,
    pub optimum: Cost,
    pub metrics: RunMetrics,
    /// Copies of each agent's shipped tables (only with `keep_tables`).
    pub util_tables: Vec<Vec<BucketTable>>,
    pub log: Vec<MessageLogEntry>,
}

/// Clock rule for receiving: the receiver resumes no earlier than the
/// message's timestamp plus the link latency.
#[inline]
pub fn advance_on_receive(clock: u64, timestamp: u64, latency: u64) -> u64 {
    clock.max(timestamp + latency)
}

/// Clock rule for local work.
#[inline]
pub fn advance_on_compute(clock: u64, units: u64) -> u64 {
    clock + units
}

/// Simulate exact message passing (DPOP) over a pseudo-forest. The returned
/// assignment and optimum match bucket elimination on the forest's DFS
/// ordering.
pub fn run_dpop(
    problem: &Problem,
    forest: &PseudoForest,
    cfg: &DcopConfig,
) -> Result<(Solution, RunMetrics), SolveError> {
    let start = Instant::now();
    let out = simulate(problem, forest, None, cfg)?;
    let stats = run_stats(problem, forest, &out, &cfg.backend, start);
    let solution = Solution { optimum: out.optimum, assignment: out.assignment, stats };
    Ok((solution, out.metrics))
}

/// Simulate bounded message passing (ADPOP) with scope bound `z`. Results
/// coincide with mini-bucket elimination at the same `z` on the forest's
/// DFS ordering.
pub fn run_adpop(
    problem: &Problem,
    forest: &PseudoForest,
    z: usize,
    cfg: &DcopConfig,
) -> Result<(Bounds, RunMetrics), SolveError> {
    let start = Instant::now();
    let out = simulate(problem, forest, Some(z), cfg)?;
    let stats = run_stats(problem, forest, &out, &cfg.backend, start);
    let assignment_cost = evaluate_complete(problem, &out.assignment);
    let bounds =
        Bounds { bound: out.optimum, assignment: out.assignment, assignment_cost, z, stats };
    Ok((bounds, out.metrics))
}

/// Statistics for a finished simulation, for result records.
pub fn run_stats(
    problem: &Problem,
    forest: &PseudoForest,
    out: &SimulationOutput,
    backend: &ExecBackend,
    start: Instant,
) -> InferenceStats {
    let graph = crate::graph::build_primal_graph(problem);
    let ordering = forest.dfs_ordering();
    InferenceStats {
        induced_width: crate::graph::induced_width(&graph, &ordering),
        max_table_rows: out.metrics.max_message_rows,
        elimination_ms: 0.0,
        forward_ms: 0.0,
        total_ms: start.elapsed().as_secs_f64() * 1e3,
        backend: backend.label(),
        mini_buckets: out.metrics.mini_buckets.clone(),
    }
}

struct AgentState {
    clock: u64,
    // Aggregated (pre-elimination) tables, used for value selection.
    retained: Vec<BucketTable>,
    constant: Cost,
    compute: u64,
    value: usize,
    mini_buckets: usize,
}

fn charge(model: &ComputeModel, agent: VarId, rows_processed: u64, wall_nanos: u64) -> u64 {
    match model {
        ComputeModel::RowsProcessed { units_per_row } => rows_processed * units_per_row,
        ComputeModel::UniformActivation { units } => *units,
        ComputeModel::PerAgent(units) => units.get(agent).copied().unwrap_or(0),
        ComputeModel::Measured => wall_nanos,
    }
}

/// Run the two-phase simulation. With `z = None` every agent ships a single
/// table (exact); otherwise buckets are partitioned first.
pub fn simulate(
    problem: &Problem,
    forest: &PseudoForest,
    z: Option<usize>,
    cfg: &DcopConfig,
) -> Result<SimulationOutput, SolveError> {
    let n = problem.num_vars();
    let ordering = forest.dfs_ordering();
    let ring = problem.semiring;

    // Function ownership: the highest-priority variable of each scope owns
    // the function. Scope-free functions contribute straight to the result.
    let mut owned: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut optimum = ring.identity();
    for (i, f) in problem.functions.iter().enumerate() {
        match f.scope.iter().max_by_key(|&&v| ordering.position(v)) {
            Some(&v) => owned[v].push(i),
            None => optimum = ring.combine(optimum, f.costs[0]),
        }
    }

    let mut agents: Vec<AgentState> = (0..n)
        .map(|_| AgentState {
            clock: 0,
            retained: Vec::new(),
            constant: ring.identity(),
            compute: 0,
            value: 0,
            mini_buckets: 0,
        })
        .collect();

    let mut inbox: Vec<Vec<UtilMessage>> = (0..n).map(|_| Vec::new()).collect();
    let mut shipped_copy: Vec<Vec<BucketTable>> = vec![Vec::new(); n];
    let mut log = Vec::new();
    let mut util_messages = 0usize;
    let mut value_messages = 0usize;
    let mut max_message_rows = 0u64;

    for tree in &forest.trees {
        // UTIL sweep. Reverse preorder activates every child before its
        // parent, and delivers sibling messages in descending preorder -
        // the same order in which centralized elimination generates them.
        for &agent in tree.preorder.iter().rev() {
            let mut start_clock = agents[agent].clock;
            // Tables whose highest-priority variable is this agent join its
            // bucket; tables destined for a higher bucket ride through
            // unchanged. Messages keep tables in descending origin order, so
            // bucket members arrive exactly as centralized elimination would
            // generate them.
            let mut member_tables: Vec<BucketTable> = Vec::new();
            let mut passengers: Vec<BucketTable> = Vec::new();
            for msg in std::mem::take(&mut inbox[agent]) {
                start_clock = advance_on_receive(start_clock, msg.timestamp, cfg.latency);
                agents[agent].constant = ring.combine(agents[agent].constant, msg.constant);
                for t in msg.tables {
                    if *t.scope.last().expect("messages carry non-empty scopes") == agent {
                        member_tables.push(t);
                    } else {
                        passengers.push(t);
                    }
                }
            }

            let wall = Instant::now();
            let mut rows_processed = 0u64;

            // Assemble the bucket: own functions first, then child tables.
            let own_count = owned[agent].len();
            let mut scopes: Vec<Vec<VarId>> =
                owned[agent].iter().map(|&i| problem.functions[i].scope.clone()).collect();
            scopes.extend(member_tables.iter().map(|t| t.scope.clone()));

            let mut outgoing: Vec<BucketTable> = Vec::new();
            if !scopes.is_empty() {
                let scope_refs: Vec<&[VarId]> = scopes.iter().map(|s| s.as_slice()).collect();
                let minis = partition_bucket(&scope_refs, z, agent, &ordering, &problem.domains)?;
                agents[agent].mini_buckets = minis.len();

                let mut table_by_slot: Vec<Option<BucketTable>> =
                    member_tables.into_iter().map(Some).collect();

                for mini in &minis {
                    if mini.rows > cfg.budget_rows as u128 {
                        return Err(SolveError::BudgetExceeded {
                            variable: agent,
                            estimated_rows: mini.rows.min(u64::MAX as u128) as u64,
                            budget_rows: cfg.budget_rows,
                        });
                    }
                    let dims: Vec<usize> =
                        mini.scope.iter().map(|&v| problem.domains[v]).collect();
                    let mut out = BucketTable::filled(mini.scope.clone(), dims, ring.identity());
                    let mut converted: Vec<BucketTable> = Vec::new();
                    for &slot in &mini.members {
                        if slot < own_count {
                            converted.push(table_from_function(
                                &problem.functions[owned[agent][slot]],
                                &ordering,
                                &problem.domains,
                            ));
                        } else {
                            converted
                                .push(table_by_slot[slot - own_count].take().expect("one use"));
                        }
                    }
                    let refs: Vec<&BucketTable> = converted.iter().collect();
                    rows_processed += out.rows() as u64 * (refs.len() as u64 + 1);
                    aggregate_many_into(&mut out, &refs, ring, &cfg.backend)?;

                    let eliminated = eliminate_last(&out, ring, &cfg.backend)?;
                    agents[agent].retained.push(out);

                    if eliminated.scope.is_empty() {
                        agents[agent].constant =
                            ring.combine(agents[agent].constant, eliminated.chi[0]);
                        if cfg.keep_tables {
                            shipped_copy[agent].push(eliminated);
                        }
                    } else {
                        if cfg.keep_tables {
                            shipped_copy[agent].push(eliminated.clone());
                        }
                        outgoing.push(eliminated);
                    }
                }
            }

            let compute = charge(
                &cfg.compute_model,
                agent,
                rows_processed,
                wall.elapsed().as_nanos().min(u64::MAX as u128) as u64,
            );
            agents[agent].compute = compute;
            agents[agent].clock = advance_on_compute(start_clock, compute);

            // Deeper origins first, own tables last, so the parent sees
            // tables in descending origin order as well.
            let mut shipped: Vec<BucketTable> = passengers;
            shipped.extend(outgoing);

            if let Some(parent) = tree.parent(agent) {
                for t in &shipped {
                    debug_assert!(t.scope.iter().all(|v| tree.separator(agent).contains(v)));
                    max_message_rows = max_message_rows.max(t.rows() as u64);
                }
                if cfg.keep_log {
                    log.push(MessageLogEntry {
                        kind: "util",
                        sender: agent,
                        receiver: parent,
                        table_rows: shipped.iter().map(|t| t.rows() as u64).collect(),
                        timestamp: agents[agent].clock,
                    });
                }
                util_messages += 1;
                inbox[parent].push(UtilMessage {
                    sender: agent,
                    receiver: parent,
                    tables: shipped,
                    constant: agents[agent].constant,
                    timestamp: agents[agent].clock,
                });
                agents[agent].constant = ring.identity();
            } else {
                // Root: its own elimination leaves scope-free residue only,
                // and nothing ever rides past the root.
                debug_assert!(shipped.is_empty());
            }
        }

        optimum = ring.combine(optimum, agents[tree.root].constant);

        // VALUE sweep, parents strictly before children.
        let mut received: Vec<Vec<(VarId, usize)>> = vec![Vec::new(); n];
        for &agent in tree.preorder.iter() {
            let context = std::mem::take(&mut received[agent]);
            agents[agent].value =
                select_value(agent, &agents[agent].retained, &context, ring, &problem.domains);

            for &child in tree.children(agent) {
                let assignments: Vec<(VarId, usize)> = tree
                    .separator(child)
                    .iter()
                    .map(|&v| {
                        if v == agent {
                            (v, agents[agent].value)
                        } else {
                            (v, *context.iter().find(|(u, _)| *u == v).map(|(_, x)| x).unwrap())
                        }
                    })
                    .collect();
                let msg = ValueMessage {
                    sender: agent,
                    receiver: child,
                    assignments,
                    timestamp: agents[agent].clock,
                };
                agents[child].clock =
                    advance_on_receive(agents[child].clock, msg.timestamp, cfg.latency);
                value_messages += 1;
                if cfg.keep_log {
                    log.push(MessageLogEntry {
                        kind: "value",
                        sender: agent,
                        receiver: child,
                        table_rows: Vec::new(),
                        timestamp: msg.timestamp,
                    });
                }
                received[child] = msg.assignments;
            }
        }
    }

    let assignment: Vec<usize> = (0..n).map(|v| agents[v].value).collect();
    let metrics = RunMetrics {
        simulated_runtime: agents.iter().map(|a| a.clock).max().unwrap_or(0),
        network_load: util_messages + value_messages,
        util_messages,
        value_messages,
        max_message_rows,
        per_agent_compute: agents.iter().map(|a| a.compute).collect(),
        mini_buckets: agents.iter().map(|a| a.mini_buckets).collect(),
    };

    Ok(SimulationOutput { assignment, optimum, metrics, util_tables: shipped_copy, log })
}

// Value selection: optimize the agent's variable over the combined retained
// tables with the separator fixed by the received context. Ties go to the
// smallest value index; agents with no tables take value 0.
fn select_value(
    agent: VarId,
    tables: &[BucketTable],
    context: &[(VarId, usize)],
    ring: Semiring,
    domains: &[usize],
) -> usize {
    if tables.is_empty() {
        return 0;
    }
    let lookup = |v: VarId, own: usize| -> usize {
        if v == agent {
            own
        } else {
            context
                .iter()
                .find(|(u, _)| *u == v)
                .map(|(_, x)| *x)
                .expect("separator assignment covers every table scope")
        }
    };
    let mut best_value = 0usize;
    let mut best_cost: Option<Cost> = None;
    for value in 0..domains[agent] {
        let mut total = ring.identity();
        for table in tables {
            let mut r = 0usize;
            for (i, &u) in table.scope.iter().enumerate() {
                r = r * table.dims[i] + lookup(u, value);
            }
            total = ring.combine(total, table.chi[r]);
        }
        if best_cost.is_none_or(|b| ring.better(total, b)) {
            best_cost = Some(total);
            best_value = value;
        }
    }
    best_value
}

/// Serialize a message log as JSON lines.
pub fn log_to_jsonl(log: &[MessageLogEntry]) -> String {
    let mut out = String::new();
    for entry in log {
        out.push_str(&serde_json::to_string(entry).expect("log entry serializes"));
        out.push('\n');
    }
    out
}

/// Validate a pseudo-tree against the separator containment property used by
/// the VALUE phase: every child separator is contained in its parent's
/// separator plus the parent itself.
pub fn check_separator_containment(tree: &PseudoTree) -> bool {
    tree.preorder.iter().all(|&v| match tree.parent(v) {
        None => tree.separator(v).is_empty(),
        Some(p) => tree
            .separator(v)
            .iter()
            .all(|&s| s == p || tree.separator(p).contains(&s)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_primal_graph, degree_ascending_ordering, Ordering, PseudoForest};
    use crate::model::{CostFunction, Problem, Semiring};
    use crate::solver::{bucket_elimination, SolveConfig};

    fn forest_for(problem: &Problem) -> PseudoForest {
        let g = build_primal_graph(problem);
        let o = degree_ascending_ordering(&g);
        PseudoForest::build(&g, &o)
    }

    fn keep_tables() -> DcopConfig {
        DcopConfig { keep_tables: true, ..DcopConfig::default() }
    }

    #[test]
    fn single_agent_sends_no_messages() {
        let f = CostFunction::new(vec![0], vec![7.0, 3.0]);
        let p = Problem::new(vec![2], vec![f], Semiring::min_sum()).unwrap();
        let forest = forest_for(&p);
        let (s, m) = run_dpop(&p, &forest, &DcopConfig::default()).unwrap();
        assert_eq!(s.optimum, 3.0);
        assert_eq!(s.assignment, vec![1]);
        assert_eq!(m.network_load, 0);
    }

    #[test]
    fn dpop_matches_bucket_elimination_on_diamond() {
        let p = crate::solver::tests::diamond_instance();
        let forest = forest_for(&p);
        let ordering = forest.dfs_ordering();
        let be = bucket_elimination(&p, &ordering, &SolveConfig::default()).unwrap();
        let (s, m) = run_dpop(&p, &forest, &DcopConfig::default()).unwrap();
        assert_eq!(s.optimum, be.optimum);
        assert_eq!(s.assignment, be.assignment);
        assert_eq!(m.util_messages, 3);
        assert_eq!(m.value_messages, 3);
    }

    #[test]
    fn util_tables_equal_centralized_bucket_functions() {
        let p = crate::solver::tests::diamond_instance();
        let forest = forest_for(&p);
        let ordering = forest.dfs_ordering();
        let cfg = SolveConfig { keep_trace: true, ..SolveConfig::default() };
        let (_, trace) = crate::solver::bucket_elimination_traced(&p, &ordering, &cfg).unwrap();
        let out = simulate(&p, &forest, None, &keep_tables()).unwrap();
        for tree in &forest.trees {
            for &v in &tree.preorder {
                assert_eq!(out.util_tables[v].len(), trace.eliminated[v].len());
                for (g, e) in out.util_tables[v].iter().zip(&trace.eliminated[v]) {
                    assert_eq!(g.scope, e.scope);
                    assert_eq!(g.chi, e.chi);
                }
            }
        }
    }

    #[test]
    fn chain_of_three_unit_compute_runs_in_three_units() {
        // Path 0 - 1 - 2 with unit compute per UTIL activation.
        let f01 = CostFunction::new(vec![0, 1], vec![1.0, 2.0, 3.0, 4.0]);
        let f12 = CostFunction::new(vec![1, 2], vec![1.0, 2.0, 3.0, 4.0]);
        let p = Problem::new(vec![2; 3], vec![f01, f12], Semiring::min_sum()).unwrap();
        let forest = forest_for(&p);
        let cfg = DcopConfig {
            compute_model: ComputeModel::UniformActivation { units: 1 },
            ..DcopConfig::default()
        };
        let (_, m) = run_dpop(&p, &forest, &cfg).unwrap();
        assert_eq!(m.simulated_runtime, 3);
    }

    #[test]
    fn parallel_branches_join_at_root_by_max() {
        // Star: root 0 with leaves 1 and 2; per-agent computes 1, 5, 7.
        let f01 = CostFunction::new(vec![0, 1], vec![1.0, 2.0, 3.0, 4.0]);
        let f02 = CostFunction::new(vec![0, 2], vec![1.0, 2.0, 3.0, 4.0]);
        let p = Problem::new(vec![2; 3], vec![f01, f02], Semiring::min_sum()).unwrap();
        let g = build_primal_graph(&p);
        let o = Ordering::new(vec![0, 1, 2]).unwrap();
        let forest = PseudoForest::build(&g, &o);
        assert_eq!(forest.trees[0].root, 0);
        assert_eq!(forest.trees[0].children(0).len(), 2);
        let cfg = DcopConfig {
            compute_model: ComputeModel::PerAgent(vec![1, 5, 7]),
            ..DcopConfig::default()
        };
        let (_, m) = run_dpop(&p, &forest, &cfg).unwrap();
        assert_eq!(m.simulated_runtime, 8);
    }

    #[test]
    fn runtime_bounded_by_total_compute_with_equality_only_on_paths() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(47);
        for _ in 0..100 {
            let n = rng.random_range(2..=8);
            // Random tree over n variables.
            let mut functions = Vec::new();
            for v in 1..n {
                let parent = rng.random_range(0..v);
                functions.push(CostFunction::new(
                    vec![parent, v],
                    (0..4).map(|_| rng.random_range(0..9) as f64).collect(),
                ));
            }
            let p = Problem::new(vec![2; n], functions, Semiring::min_sum()).unwrap();
            let g = build_primal_graph(&p);
            let forest = PseudoForest::build(&g, &degree_ascending_ordering(&g));
            let units: Vec<u64> = (0..n).map(|_| rng.random_range(1..20)).collect();
            let cfg = DcopConfig {
                compute_model: ComputeModel::PerAgent(units.clone()),
                ..DcopConfig::default()
            };
            let (_, m) = run_dpop(&p, &forest, &cfg).unwrap();
            let total: u64 = units.iter().sum();
            assert!(m.simulated_runtime <= total);
            if forest.trees.len() == 1 {
                if forest.trees[0].is_path() {
                    assert_eq!(m.simulated_runtime, total);
                } else {
                    assert!(m.simulated_runtime < total);
                }
            }
        }
    }

    #[test]
    fn latency_delays_the_clock() {
        let f01 = CostFunction::new(vec![0, 1], vec![1.0, 2.0, 3.0, 4.0]);
        let p = Problem::new(vec![2; 2], vec![f01], Semiring::min_sum()).unwrap();
        let forest = forest_for(&p);
        let cfg = DcopConfig {
            compute_model: ComputeModel::UniformActivation { units: 1 },
            latency: 10,
            ..DcopConfig::default()
        };
        let (_, m) = run_dpop(&p, &forest, &cfg).unwrap();
        // Leaf computes at 1, its table arrives at 11, the root computes at
        // 12, and the value message reaches the leaf at 22.
        assert_eq!(m.simulated_runtime, 22);
    }

    #[test]
    fn adpop_with_large_z_equals_dpop() {
        let p = crate::solver::tests::diamond_instance();
        let forest = forest_for(&p);
        let (s, _) = run_dpop(&p, &forest, &DcopConfig::default()).unwrap();
        let (b, _) = run_adpop(&p, &forest, 4, &DcopConfig::default()).unwrap();
        assert_eq!(b.bound, s.optimum);
        assert_eq!(b.assignment, s.assignment);
    }

    #[test]
    fn adpop_bounds_match_minibucket_elimination() {
        let p = crate::solver::tests::diamond_instance();
        let forest = forest_for(&p);
        let ordering = forest.dfs_ordering();
        let mbe =
            crate::solver::mini_bucket_elimination(&p, &ordering, 2, &SolveConfig::default())
                .unwrap();
        let (b, m) = run_adpop(&p, &forest, 2, &DcopConfig::default()).unwrap();
        assert_eq!(b.bound, mbe.bound);
        assert_eq!(b.assignment, mbe.assignment);
        assert_eq!(m.mini_buckets, mbe.stats.mini_buckets);
    }

    #[test]
    fn message_log_is_deterministic() {
        let p = crate::solver::tests::diamond_instance();
        let forest = forest_for(&p);
        let cfg = DcopConfig { keep_log: true, ..DcopConfig::default() };
        let a = simulate(&p, &forest, None, &cfg).unwrap();
        let b = simulate(&p, &forest, None, &cfg).unwrap();
        assert_eq!(log_to_jsonl(&a.log), log_to_jsonl(&b.log));
        assert_eq!(a.log.len(), 6);
    }

    #[test]
    fn separator_containment_holds_on_random_trees() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(53);
        for _ in 0..100 {
            let n = rng.random_range(2..=14);
            let mut edges = Vec::new();
            for v in 1..n {
                edges.push((rng.random_range(0..v), v));
            }
            for _ in 0..rng.random_range(0..n) {
                let a = rng.random_range(0..n);
                let b = rng.random_range(0..n);
                if a != b {
                    edges.push((a.min(b), a.max(b)));
                }
            }
            let g = crate::graph::PrimalGraph::from_edges(n, &edges);
            let forest = PseudoForest::build(&g, &degree_ascending_ordering(&g));
            for tree in &forest.trees {
                assert!(check_separator_containment(tree));
            }
        }
    }

    #[test]
    fn disconnected_problem_runs_per_component() {
        // Two coupled pairs plus an isolated variable with a unary cost.
        let f01 = CostFunction::new(vec![0, 1], vec![5.0, 2.0, 8.0, 3.0]);
        let f23 = CostFunction::new(vec![2, 3], vec![9.0, 4.0, 6.0, 7.0]);
        let f4 = CostFunction::new(vec![4], vec![3.0, 1.0]);
        let p = Problem::new(vec![2; 5], vec![f01, f23, f4], Semiring::min_sum()).unwrap();
        let g = build_primal_graph(&p);
        let forest = PseudoForest::build(&g, &degree_ascending_ordering(&g));
        assert_eq!(forest.trees.len(), 3);
        let (s, m) = run_dpop(&p, &forest, &DcopConfig::default()).unwrap();
        assert_eq!(s.optimum, 2.0 + 4.0 + 1.0);
        assert_eq!(crate::model::evaluate_complete(&p, &s.assignment), s.optimum);
        // One UTIL and one VALUE message per tree edge.
        assert_eq!(m.util_messages, 2);
        assert_eq!(m.value_messages, 2);
    }

    #[test]
    fn budget_refusal_in_simulation() {
        let p = crate::solver::tests::diamond_instance();
        let forest = forest_for(&p);
        let cfg = DcopConfig { budget_rows: 7, ..DcopConfig::default() };
        match run_dpop(&p, &forest, &cfg) {
            Err(SolveError::BudgetExceeded { .. }) => {}
            other => panic!("expected budget refusal, got {other:?}"),
        }
    }
}
