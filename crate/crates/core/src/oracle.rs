//! Exhaustive reference solver. Enumerates the full state space in
//! lexicographic order, so the reported assignment is the lexicographically
//! smallest optimal one. Used as the independent oracle for every other
//! solver in the test suites.

use thiserror::Error;

use crate::model::{Cost, Problem, Semiring, Task};

/// Refuse to enumerate state spaces above this size.
pub const MAX_STATES: u128 = 100_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("state space of {states} tuples exceeds the enumeration guard of {max}")]
    StateSpaceTooLarge { states: u128, max: u128 },
}

/// Result of an exhaustive search.
#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub optimum: Cost,
    pub assignment: Vec<usize>,
    /// False when every complete assignment is forbidden.
    pub feasible: bool,
}

/// Exhaustive search with partial-cost pruning. Pruning on partial sums is
/// only sound when the combine operator cannot improve the score as factors
/// are added, which holds for non-negative min-sum costs and for max-product
/// probabilities at most 1; otherwise the search enumerates fully.
pub fn brute_force(problem: &Problem) -> Result<OracleSolution, OracleError> {
    let states = problem.state_space();
    if states > MAX_STATES {
        return Err(OracleError::StateSpaceTooLarge { states, max: MAX_STATES });
    }
    let n = problem.num_vars();
    let ring = problem.semiring;

    // Functions grouped by their last variable in id order, so partial costs
    // can accumulate as the tuple is extended.
    let mut by_depth: Vec<Vec<usize>> = vec![Vec::new(); n + 1];
    for (i, f) in problem.functions.iter().enumerate() {
        match f.scope.iter().max() {
            Some(&v) => by_depth[v + 1].push(i),
            None => by_depth[0].push(i),
        }
    }

    let can_prune = match ring.task {
        Task::MinSum => problem.functions.iter().all(|f| f.costs.iter().all(|&c| c >= 0.0)),
        Task::MaxProduct => problem
            .functions
            .iter()
            .all(|f| f.costs.iter().all(|&c| c <= ring.identity())),
    };

    let mut base = ring.identity();
    for &i in &by_depth[0] {
        base = ring.combine(base, problem.functions[i].costs[0]);
    }

    let mut best_cost = ring.top();
    let mut best: Vec<usize> = vec![0; n];
    let mut found = false;
    let mut values = vec![0usize; n];
    let mut partial = vec![ring.identity(); n + 1];
    partial[0] = base;

    // Iterative depth-first enumeration in lexicographic order.
    let mut depth = 0usize;
    loop {
        if depth == n {
            let cost = partial[n];
            if !found || ring.better(cost, best_cost) {
                best_cost = cost;
                best.copy_from_slice(&values);
                found = true;
            }
            // Backtrack to the next tuple.
            match step_back(&mut values, &problem.domains, n) {
                Some(d) => depth = d,
                None => break,
            }
            continue;
        }

        let mut cost = partial[depth];
        for &i in &by_depth[depth + 1] {
            cost = ring.combine(cost, problem.functions[i].eval(&values, &problem.domains));
        }
        partial[depth + 1] = cost;

        let dead = ring.is_top(cost)
            || (can_prune && found && !ring.better(cost, best_cost));
        if dead {
            // No extension of this prefix can beat the incumbent.
            values[depth] += 1;
            while values[depth] >= problem.domains[depth] {
                values[depth] = 0;
                if depth == 0 {
                    return Ok(finish(ring, best_cost, best, found, n));
                }
                depth -= 1;
                values[depth] += 1;
            }
            continue;
        }
        depth += 1;
    }

    Ok(finish(ring, best_cost, best, found, n))
}

fn finish(ring: Semiring, best_cost: Cost, best: Vec<usize>, found: bool, n: usize) -> OracleSolution {
    if found && !ring.is_top(best_cost) {
        OracleSolution { optimum: best_cost, assignment: best, feasible: true }
    } else {
        // Everything is forbidden: report the absorbing value with the
        // all-zeros assignment.
        OracleSolution { optimum: ring.top(), assignment: vec![0; n], feasible: false }
    }
}

// Advance to the lexicographic successor after a complete tuple; returns the
// depth to resume at, or None when enumeration is finished.
fn step_back(values: &mut [usize], domains: &[usize], n: usize) -> Option<usize> {
    if n == 0 {
        return None;
    }
    let mut d = n - 1;
    values[d] += 1;
    while values[d] >= domains[d] {
        values[d] = 0;
        if d == 0 {
            return None;
        }
        d -= 1;
        values[d] += 1;
    }
    Some(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CostFunction, Semiring};

    #[test]
    fn empty_problem_is_all_zeros() {
        let p = Problem::new(vec![2, 3], vec![], Semiring::min_sum()).unwrap();
        let s = brute_force(&p).unwrap();
        assert_eq!(s.optimum, 0.0);
        assert_eq!(s.assignment, vec![0, 0]);
        assert!(s.feasible);
    }

    #[test]
    fn all_top_reports_infeasible() {
        let ring = Semiring::min_sum();
        let f = CostFunction::new(vec![0, 1], vec![ring.top(); 4]);
        let p = Problem::new(vec![2, 2], vec![f], ring).unwrap();
        let s = brute_force(&p).unwrap();
        assert!(!s.feasible);
        assert!(ring.is_top(s.optimum));
    }

    #[test]
    fn returns_lexicographically_smallest_optimum() {
        // Two optima: (0,1) and (1,0), both cost 1.
        let f = CostFunction::new(vec![0, 1], vec![5.0, 1.0, 1.0, 5.0]);
        let p = Problem::new(vec![2, 2], vec![f], Semiring::min_sum()).unwrap();
        let s = brute_force(&p).unwrap();
        assert_eq!(s.optimum, 1.0);
        assert_eq!(s.assignment, vec![0, 1]);
    }

    #[test]
    fn guard_refuses_huge_state_spaces() {
        let p = Problem::new(vec![10; 9], vec![], Semiring::min_sum()).unwrap();
        assert!(brute_force(&p).is_err());
    }

    #[test]
    fn pruning_agrees_with_full_enumeration() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(19);
        for _ in 0..40 {
            let n = rng.random_range(2..=6);
            let d = rng.random_range(2..=3);
            let mut functions = Vec::new();
            for _ in 0..rng.random_range(1..=6) {
                let a = rng.random_range(0..n);
                let b = rng.random_range(0..n);
                let scope = if a == b { vec![a] } else { vec![a.min(b), a.max(b)] };
                let rows = scope.iter().map(|_| d).product::<usize>();
                let costs = (0..rows)
                    .map(|_| {
                        if rng.random_bool(0.2) {
                            f64::INFINITY
                        } else {
                            rng.random_range(0..40) as f64
                        }
                    })
                    .collect();
                functions.push(CostFunction::new(scope, costs));
            }
            let p = Problem::new(vec![d; n], functions, Semiring::min_sum()).unwrap();
            let fast = brute_force(&p).unwrap();

            // Plain nested-loop reference without pruning.
            let mut best = f64::INFINITY;
            let mut arg = vec![0usize; n];
            let states: usize = p.domains.iter().product();
            for s in 0..states {
                let mut rest = s;
                let mut vals = vec![0usize; n];
                for i in (0..n).rev() {
                    vals[i] = rest % d;
                    rest /= d;
                }
                let c = crate::model::evaluate_complete(&p, &vals);
                if c < best {
                    best = c;
                    arg = vals;
                }
            }
            if best.is_infinite() {
                assert!(!fast.feasible);
            } else {
                assert_eq!(fast.optimum, best);
                assert_eq!(fast.assignment, arg);
            }
        }
    }
}
