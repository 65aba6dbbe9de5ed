//! Random instance generators: uniform random graphs, preferential-
//! attachment scale-free graphs, and rectangular grids, each carrying binary
//! cost functions with uniform integer costs and a tightness fraction of
//! forbidden cells. Generation is fully deterministic under the seed.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{CostFunction, Problem, Semiring, VarId};

#[derive(Debug, Error, PartialEq)]
pub enum GenError {
    #[error("n = {n} is too small for topology {topology}")]
    TooFewVariables { n: usize, topology: &'static str },
    #[error("grid size {n} is not a perfect square")]
    NotASquare { n: usize },
    #[error("could not produce a connected graph after {attempts} attempts")]
    ConnectivityFailed { attempts: usize },
    #[error("tightness p2 = {p2} must lie in [0, 1]")]
    BadTightness { p2: f64 },
}

/// How the uniform random topology turns its density parameter into an edge
/// count.
///
/// `TotalFormula` takes `floor(n * (n-1) * p1)` distinct edges, clamped to
/// the number of unordered pairs, and warns when the clamp bites. It doubles
/// the count one would expect from reading `p1` as a per-pair density; the
/// companion convention `PairDensity` (`floor(n * (n-1) * p1 / 2)`) produces
/// the sparser graphs whose induced widths match the reference statistics
/// for the same nominal `p1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeConvention {
    TotalFormula,
    PairDensity,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Topology {
    Random { p1: f64, convention: EdgeConvention },
    ScaleFree,
    Grid,
}

impl Topology {
    pub fn random(p1: f64) -> Self {
        Topology::Random { p1, convention: EdgeConvention::TotalFormula }
    }

    pub fn random_pair_density(p1: f64) -> Self {
        Topology::Random { p1, convention: EdgeConvention::PairDensity }
    }

    fn label(&self) -> &'static str {
        match self {
            Topology::Random { .. } => "random",
            Topology::ScaleFree => "scalefree",
            Topology::Grid => "grid",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub topology: Topology,
    /// Number of variables; must be a perfect square for grids.
    pub n: usize,
    /// Domain size of every variable.
    pub d: usize,
    /// Fraction of forbidden cells per cost function.
    pub p2: f64,
    /// Costs are uniform integers in `[0, cost_max]`.
    pub cost_max: u64,
    pub seed: u64,
}

impl GeneratorConfig {
    pub fn new(topology: Topology, n: usize, d: usize, p2: f64, seed: u64) -> Self {
        GeneratorConfig { topology, n, d, p2, cost_max: 100, seed }
    }
}

#[derive(Debug)]
pub struct Generated {
    pub problem: Problem,
    pub edges: Vec<(VarId, VarId)>,
    pub warnings: Vec<String>,
}

/// Generate a connected random instance. Random topologies are resampled
/// with fresh sub-seeds until connected, up to a bounded number of attempts;
/// scale-free and grid topologies are connected by construction.
pub fn generate(cfg: &GeneratorConfig) -> Result<Generated, GenError> {
    if !(0.0..=1.0).contains(&cfg.p2) {
        return Err(GenError::BadTightness { p2: cfg.p2 });
    }
    let mut warnings = Vec::new();
    let edges = match cfg.topology {
        Topology::Random { p1, convention } => {
            random_edges(cfg.n, p1, convention, cfg.seed, &mut warnings)?
        }
        Topology::ScaleFree => scale_free_edges(cfg.n, cfg.seed)?,
        Topology::Grid => grid_edges(cfg.n)?,
    };

    // Cost tables are drawn from a stream separate from the topology's, so
    // the structure for a seed does not depend on p2 or cost_max.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let ring = Semiring::min_sum();
    let cells = cfg.d * cfg.d;
    let forbidden = (cfg.p2 * cells as f64).floor() as usize;

    let mut functions = Vec::with_capacity(edges.len());
    for &(a, b) in &edges {
        let mut costs: Vec<f64> =
            (0..cells).map(|_| rng.random_range(0..=cfg.cost_max) as f64).collect();
        let mut cells_order: Vec<usize> = (0..cells).collect();
        cells_order.shuffle(&mut rng);
        for &cell in cells_order.iter().take(forbidden) {
            costs[cell] = ring.top();
        }
        functions.push(CostFunction::new(vec![a, b], costs));
    }

    let mut problem = Problem::new(vec![cfg.d; cfg.n], functions, ring)
        .expect("generated instance is structurally valid");
    problem.name = Some(format!(
        "{}_n{}_d{}_s{}",
        cfg.topology.label(),
        cfg.n,
        cfg.d,
        cfg.seed
    ));
    problem.upper_bound = Some(crate::wcsp::implied_upper_bound(&problem));
    Ok(Generated { problem, edges, warnings })
}

fn connected(n: usize, edges: &[(VarId, VarId)]) -> bool {
    if n == 0 {
        return true;
    }
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut count = 1;
    while let Some(v) = stack.pop() {
        for &u in &adj[v] {
            if !seen[u] {
                seen[u] = true;
                count += 1;
                stack.push(u);
            }
        }
    }
    count == n
}

const CONNECTIVITY_ATTEMPTS: usize = 1000;

fn random_edges(
    n: usize,
    p1: f64,
    convention: EdgeConvention,
    seed: u64,
    warnings: &mut Vec<String>,
) -> Result<Vec<(VarId, VarId)>, GenError> {
    if n < 2 {
        return Err(GenError::TooFewVariables { n, topology: "random" });
    }
    let pairs = n * (n - 1) / 2;
    let requested = match convention {
        EdgeConvention::TotalFormula => (n as f64 * (n - 1) as f64 * p1).floor() as usize,
        EdgeConvention::PairDensity => (n as f64 * (n - 1) as f64 * p1 / 2.0).floor() as usize,
    };
    let m = requested.min(pairs);
    if m < requested {
        warnings.push(format!(
            "requested {requested} edges exceeds the {pairs} unordered pairs; clamped"
        ));
    }
    if m < n - 1 {
        return Err(GenError::ConnectivityFailed { attempts: 0 });
    }

    let mut all_pairs: Vec<(VarId, VarId)> = Vec::with_capacity(pairs);
    for a in 0..n {
        for b in a + 1..n {
            all_pairs.push((a, b));
        }
    }

    for attempt in 0..CONNECTIVITY_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(100 + attempt as u64);
        let mut pool = all_pairs.clone();
        pool.shuffle(&mut rng);
        pool.truncate(m);
        pool.sort_unstable();
        if connected(n, &pool) {
            return Ok(pool);
        }
    }
    Err(GenError::ConnectivityFailed { attempts: CONNECTIVITY_ATTEMPTS })
}

/// Preferential attachment starting from a connected pair: each new node
/// links to two distinct existing nodes chosen proportionally to degree,
/// giving exactly `2 * (n - 2) + 1` edges.
fn scale_free_edges(n: usize, seed: u64) -> Result<Vec<(VarId, VarId)>, GenError> {
    if n < 3 {
        return Err(GenError::TooFewVariables { n, topology: "scalefree" });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut degree = vec![0usize; n];
    let mut edges = vec![(0usize, 1usize)];
    degree[0] = 1;
    degree[1] = 1;
    for v in 2..n {
        let first = pick_weighted(&degree[..v], None, &mut rng);
        let second = pick_weighted(&degree[..v], Some(first), &mut rng);
        edges.push((first.min(v), first.max(v)));
        edges.push((second.min(v), second.max(v)));
        degree[first] += 1;
        degree[second] += 1;
        degree[v] = 2;
    }
    edges.sort_unstable();
    Ok(edges)
}

fn pick_weighted(degree: &[usize], exclude: Option<usize>, rng: &mut ChaCha8Rng) -> usize {
    let total: usize = degree
        .iter()
        .enumerate()
        .filter(|&(i, _)| Some(i) != exclude)
        .map(|(_, &d)| d)
        .sum();
    let mut ticket = rng.random_range(0..total);
    for (i, &d) in degree.iter().enumerate() {
        if Some(i) == exclude {
            continue;
        }
        if ticket < d {
            return i;
        }
        ticket -= d;
    }
    unreachable!("weights sum to total");
}

/// Rectangular grid: interior nodes have four neighbors, border nodes three,
/// corners two.
fn grid_edges(n: usize) -> Result<Vec<(VarId, VarId)>, GenError> {
    let side = (n as f64).sqrt().round() as usize;
    if side * side != n {
        return Err(GenError::NotASquare { n });
    }
    if side < 2 {
        return Err(GenError::TooFewVariables { n, topology: "grid" });
    }
    let mut edges = Vec::with_capacity(2 * side * (side - 1));
    for r in 0..side {
        for c in 0..side {
            let v = r * side + c;
            if c + 1 < side {
                edges.push((v, v + 1));
            }
            if r + 1 < side {
                edges.push((v, v + side));
            }
        }
    }
    edges.sort_unstable();
    Ok(edges)
}
