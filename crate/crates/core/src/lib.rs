//! Exact and approximate inference for discrete cost networks.
//!
//! The crate solves weighted constraint problems (minimize a sum of costs)
//! and most-probable-explanation queries on belief networks (maximize a
//! product of probabilities) with one engine: cost functions become flat
//! tables sorted by a global variable ordering, and two data-parallel
//! kernels — aggregate and eliminate — process them bucket by bucket.
//!
//! * [`solver::bucket_elimination`] is exact; its memory grows with the
//!   ordering's induced width.
//! * [`solver::mini_bucket_elimination`] bounds table scopes by `z` and
//!   returns a certified bound plus a concrete assignment.
//! * [`dcop::run_dpop`] / [`dcop::run_adpop`] simulate the multi-agent
//!   counterparts over a pseudo-tree, with logical-clock runtime and
//!   message metrics; their tables match the centralized ones entry for
//!   entry.
//!
//! I/O covers the WCSP text format, UAI Bayes networks with evidence files,
//! ordering permutation files, random instance generators, and an
//! exhaustive oracle for cross-checking.
//!
//! ```
//! use costnet::{bucket_elimination, build_primal_graph, SolveConfig};
//! use costnet::graph::dfs_degree_ordering;
//!
//! let text = "\
//! tiny 3 2 3 100
//! 2 2 2
//! 2 0 1 0 2
//! 0 0 3
//! 1 1 4
//! 2 1 2 1 1
//! 0 1 0
//! 1 2 6 1
//! 1 7";
//! let problem = costnet::wcsp::parse_wcsp(text)?;
//! let ordering = dfs_degree_ordering(&build_primal_graph(&problem));
//! let solution = bucket_elimination(&problem, &ordering, &SolveConfig::default())?;
//! assert_eq!(solution.optimum, 7.0);
//! assert_eq!(solution.assignment, vec![0, 1, 0]);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod dcop;
pub mod generate;
pub mod graph;
pub mod model;
pub mod oracle;
pub mod report;
pub mod solver;
pub mod table;
pub mod uai;
pub mod wcsp;

pub use graph::{
    build_primal_graph, compute_ordering, connected_components, induced_width, Ordering,
    OrderingHeuristic, PrimalGraph, PseudoForest, PseudoTree,
};
pub use model::{
    condition_on_evidence, evaluate, Assignment, BeliefNetwork, Cost, CostFunction, Problem,
    Semiring, Task, VarId,
};
pub use solver::{
    bucket_elimination, mini_bucket_elimination, Bounds, InferenceStats, ResultRecord, Solution,
    SolveConfig, SolveError,
};
pub use table::{BucketTable, ExecBackend, IndexMap};
