//! Problem representation: cost values, the task semiring, cost functions
//! stored as flat tables, min-sum problems, and belief networks.
//!
//! A cost function keeps its table in lexicographic row order over its scope:
//! the first scope variable is the most significant digit, so strides
//! decrease along the scope. Row `r` holds the cost of the tuple whose
//! lexicographic rank is `r`.

use serde::Serialize;
use thiserror::Error;

/// Index of a problem variable.
pub type VarId = usize;

/// A cost table entry. Finite magnitudes share the array with one absorbing
/// "forbidden" element whose representation depends on the task:
/// `+inf` for min-sum, `0.0` for linear max-product, `-inf` for log-domain
/// max-product. Use [`Semiring::is_top`] to test for it.
pub type Cost = f64;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("variable {var} is not assigned")]
    UnassignedVariable { var: VarId },
    #[error("variable {var} out of range (n = {n})")]
    VariableOutOfRange { var: VarId, n: usize },
    #[error("value {value} out of domain for variable {var} (size {size})")]
    ValueOutOfDomain { var: VarId, value: usize, size: usize },
    #[error("scope of function {index} contains duplicate variables")]
    DuplicateScopeVariable { index: usize },
    #[error("function {index} has {got} costs, scope requires {want}")]
    CostLengthMismatch { index: usize, got: usize, want: usize },
    #[error("domain size of variable {var} must be >= 1")]
    EmptyDomain { var: VarId },
    #[error("CPT {index} rows do not sum to 1 (max deviation {deviation:.3e})")]
    UnnormalizedCpt { index: usize, deviation: f64 },
}

/// Which optimization task the tables encode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    /// Minimize a sum of non-negative costs (WCSP).
    MinSum,
    /// Maximize a product of probabilities (MPE).
    MaxProduct,
}

/// The (combine, marginalize) operator pair plus the representation of the
/// absorbing element. Combine and marginalize are associative and
/// commutative; `top` is absorbing under combine and never wins a
/// marginalization against a non-absorbing value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Semiring {
    pub task: Task,
    /// Max-product only: store logarithms of probabilities instead of the
    /// probabilities themselves. Guards against underflow on deep networks.
    pub log_domain: bool,
}

impl Semiring {
    pub fn min_sum() -> Self {
        Semiring { task: Task::MinSum, log_domain: false }
    }

    /// Max-product in the log domain (the default for MPE).
    pub fn max_product() -> Self {
        Semiring { task: Task::MaxProduct, log_domain: true }
    }

    /// Max-product on raw probabilities. Mostly useful for testing the
    /// log-domain path.
    pub fn max_product_linear() -> Self {
        Semiring { task: Task::MaxProduct, log_domain: false }
    }

    /// Identity of combine: cost 0, probability 1, or log-probability 0.
    #[inline]
    pub fn identity(&self) -> Cost {
        match (self.task, self.log_domain) {
            (Task::MinSum, _) => 0.0,
            (Task::MaxProduct, true) => 0.0,
            (Task::MaxProduct, false) => 1.0,
        }
    }

    /// The absorbing "forbidden" element.
    #[inline]
    pub fn top(&self) -> Cost {
        match (self.task, self.log_domain) {
            (Task::MinSum, _) => f64::INFINITY,
            (Task::MaxProduct, true) => f64::NEG_INFINITY,
            (Task::MaxProduct, false) => 0.0,
        }
    }

    #[inline]
    pub fn is_top(&self, c: Cost) -> bool {
        c == self.top()
    }

    /// Aggregation: saturating addition for min-sum, product (or addition of
    /// logs) for max-product. The absorbing element propagates.
    #[inline(always)]
    pub fn combine(&self, a: Cost, b: Cost) -> Cost {
        match (self.task, self.log_domain) {
            (Task::MaxProduct, false) => a * b,
            _ => a + b,
        }
    }

    /// Elimination: min for min-sum, max for max-product.
    #[inline(always)]
    pub fn marginalize(&self, a: Cost, b: Cost) -> Cost {
        match self.task {
            Task::MinSum => {
                if b < a {
                    b
                } else {
                    a
                }
            }
            Task::MaxProduct => {
                if b > a {
                    b
                } else {
                    a
                }
            }
        }
    }

    /// Strict "is `a` preferable to `b`" for assignment selection. Ties are
    /// not better, so scanning values in ascending order picks the smallest
    /// optimal value index.
    #[inline]
    pub fn better(&self, a: Cost, b: Cost) -> bool {
        match self.task {
            Task::MinSum => a < b,
            Task::MaxProduct => a > b,
        }
    }

    /// Convert a cost back into a probability, for reporting.
    pub fn to_linear(&self, c: Cost) -> f64 {
        match (self.task, self.log_domain) {
            (Task::MaxProduct, true) => c.exp(),
            _ => c,
        }
    }
}

/// A cost function over an ordered scope, stored as a flat table in
/// lexicographic row order.
#[derive(Debug, Clone, PartialEq)]
pub struct CostFunction {
    pub scope: Vec<VarId>,
    pub costs: Vec<Cost>,
}

impl CostFunction {
    pub fn new(scope: Vec<VarId>, costs: Vec<Cost>) -> Self {
        CostFunction { scope, costs }
    }

    /// A scope-free constant contribution.
    pub fn constant(cost: Cost) -> Self {
        CostFunction { scope: Vec::new(), costs: vec![cost] }
    }

    pub fn arity(&self) -> usize {
        self.scope.len()
    }

    /// Lexicographic rank of a value tuple given in scope order.
    pub fn rank(&self, values: &[usize], domains: &[usize]) -> usize {
        debug_assert_eq!(values.len(), self.scope.len());
        let mut r = 0usize;
        for (i, &v) in self.scope.iter().enumerate() {
            r = r * domains[v] + values[i];
        }
        r
    }

    /// Cost of a complete assignment, projected to this scope.
    #[inline]
    pub fn eval(&self, assignment: &[usize], domains: &[usize]) -> Cost {
        let mut r = 0usize;
        for &v in &self.scope {
            r = r * domains[v] + assignment[v];
        }
        self.costs[r]
    }

    fn table_len(&self, domains: &[usize]) -> usize {
        self.scope.iter().map(|&v| domains[v]).product()
    }
}

/// A discrete cost network: variables with finite domains, a set of cost
/// functions, and the semiring that interprets them.
#[derive(Debug, Clone)]
pub struct Problem {
    pub domains: Vec<usize>,
    pub functions: Vec<CostFunction>,
    pub semiring: Semiring,
    pub name: Option<String>,
    /// Declared global upper bound (min-sum). File costs at or above this
    /// threshold are forbidden.
    pub upper_bound: Option<f64>,
}

impl Problem {
    pub fn new(
        domains: Vec<usize>,
        functions: Vec<CostFunction>,
        semiring: Semiring,
    ) -> Result<Self, ModelError> {
        let p = Problem { domains, functions, semiring, name: None, upper_bound: None };
        p.validate()?;
        Ok(p)
    }

    pub fn num_vars(&self) -> usize {
        self.domains.len()
    }

    fn validate(&self) -> Result<(), ModelError> {
        let n = self.num_vars();
        for (var, &d) in self.domains.iter().enumerate() {
            if d == 0 {
                return Err(ModelError::EmptyDomain { var });
            }
        }
        for (index, f) in self.functions.iter().enumerate() {
            let mut seen = vec![false; n];
            for &v in &f.scope {
                if v >= n {
                    return Err(ModelError::VariableOutOfRange { var: v, n });
                }
                if seen[v] {
                    return Err(ModelError::DuplicateScopeVariable { index });
                }
                seen[v] = true;
            }
            let want = f.table_len(&self.domains);
            if f.costs.len() != want {
                return Err(ModelError::CostLengthMismatch { index, got: f.costs.len(), want });
            }
        }
        Ok(())
    }

    /// Size of the full state space, saturating at `u128::MAX`.
    pub fn state_space(&self) -> u128 {
        self.domains
            .iter()
            .try_fold(1u128, |acc, &d| acc.checked_mul(d as u128))
            .unwrap_or(u128::MAX)
    }
}

/// A partial value assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    values: Vec<Option<usize>>,
}

impl Assignment {
    pub fn empty(n: usize) -> Self {
        Assignment { values: vec![None; n] }
    }

    pub fn from_complete(values: &[usize]) -> Self {
        Assignment { values: values.iter().map(|&v| Some(v)).collect() }
    }

    pub fn set(&mut self, var: VarId, value: usize) {
        self.values[var] = Some(value);
    }

    pub fn get(&self, var: VarId) -> Option<usize> {
        self.values.get(var).copied().flatten()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.iter().all(|v| v.is_none())
    }

    pub fn assigned(&self) -> impl Iterator<Item = (VarId, usize)> + '_ {
        self.values.iter().enumerate().filter_map(|(v, x)| x.map(|x| (v, x)))
    }

    pub fn is_complete(&self) -> bool {
        self.values.iter().all(|v| v.is_some())
    }

    /// Checks every assigned value against the domains.
    pub fn check_domains(&self, domains: &[usize]) -> Result<(), ModelError> {
        for (var, value) in self.assigned() {
            if var >= domains.len() {
                return Err(ModelError::VariableOutOfRange { var, n: domains.len() });
            }
            if value >= domains[var] {
                return Err(ModelError::ValueOutOfDomain { var, value, size: domains[var] });
            }
        }
        Ok(())
    }

    pub fn to_complete(&self) -> Result<Vec<usize>, ModelError> {
        self.values
            .iter()
            .enumerate()
            .map(|(var, v)| v.ok_or(ModelError::UnassignedVariable { var }))
            .collect()
    }
}

/// Combined cost of a complete assignment: the semiring combine over every
/// function's table entry for the assignment projected to its scope.
pub fn evaluate(problem: &Problem, assignment: &Assignment) -> Result<Cost, ModelError> {
    if assignment.len() != problem.num_vars() {
        return Err(ModelError::VariableOutOfRange {
            var: assignment.len().min(problem.num_vars()),
            n: problem.num_vars(),
        });
    }
    assignment.check_domains(&problem.domains)?;
    let complete = assignment.to_complete()?;
    Ok(evaluate_complete(problem, &complete))
}

/// As [`evaluate`], without the completeness checks. `values[v]` must be a
/// valid value for every variable `v`.
pub fn evaluate_complete(problem: &Problem, values: &[usize]) -> Cost {
    let ring = problem.semiring;
    let mut acc = ring.identity();
    for f in &problem.functions {
        acc = ring.combine(acc, f.eval(values, &problem.domains));
    }
    acc
}

/// A belief network: one conditional probability table per variable, stored
/// linearly (not in log space). The child variable of each CPT is recorded
/// explicitly; by convention it is the last scope variable of tables read
/// from UAI files.
#[derive(Debug, Clone)]
pub struct BeliefNetwork {
    pub domains: Vec<usize>,
    pub cpts: Vec<CostFunction>,
    /// Child variable of each CPT; its scope is the child plus its parents.
    pub child: Vec<VarId>,
    pub name: Option<String>,
}

impl BeliefNetwork {
    pub fn new(
        domains: Vec<usize>,
        cpts: Vec<CostFunction>,
        child: Vec<VarId>,
    ) -> Result<Self, ModelError> {
        assert_eq!(cpts.len(), child.len());
        let bn = BeliefNetwork { domains, cpts, child, name: None };
        // Reuse structural validation via a throwaway linear problem.
        Problem::new(bn.domains.clone(), bn.cpts.clone(), Semiring::max_product_linear())?;
        for (i, (cpt, &c)) in bn.cpts.iter().zip(&bn.child).enumerate() {
            if !cpt.scope.contains(&c) {
                return Err(ModelError::VariableOutOfRange { var: c, n: bn.domains.len() });
            }
            let _ = i;
        }
        Ok(bn)
    }

    pub fn num_vars(&self) -> usize {
        self.domains.len()
    }

    /// Largest deviation of any (parent tuple) row sum from 1, over all CPTs.
    pub fn max_normalization_deviation(&self) -> f64 {
        let mut worst = 0.0f64;
        for (cpt, &child) in self.cpts.iter().zip(&self.child) {
            let child_pos = cpt.scope.iter().position(|&v| v == child).unwrap();
            let dims: Vec<usize> = cpt.scope.iter().map(|&v| self.domains[v]).collect();
            let rows = cpt.costs.len();
            let child_dim = dims[child_pos];
            let child_stride: usize = dims[child_pos + 1..].iter().product();
            let mut visited = vec![false; rows];
            for start in 0..rows {
                if visited[start] {
                    continue;
                }
                // `start` is the first row of its parent-tuple group exactly
                // when its child digit is 0.
                if !(start / child_stride).is_multiple_of(child_dim) {
                    continue;
                }
                let mut sum = 0.0;
                for k in 0..child_dim {
                    let idx = start + k * child_stride;
                    visited[idx] = true;
                    sum += cpt.costs[idx];
                }
                worst = worst.max((sum - 1.0).abs());
            }
        }
        worst
    }

    /// Errors if any CPT row group deviates from sum 1 by more than `tol`.
    pub fn check_normalized(&self, tol: f64) -> Result<(), ModelError> {
        let deviation = self.max_normalization_deviation();
        if deviation > tol {
            Err(ModelError::UnnormalizedCpt { index: 0, deviation })
        } else {
            Ok(())
        }
    }
}

/// A belief network conditioned on evidence, recast as a max-product
/// [`Problem`] over the free variables. Free variables are renumbered
/// `0..problem.num_vars()`; `kept[i]` is the original id of variable `i`.
#[derive(Debug, Clone)]
pub struct ConditionedProblem {
    pub problem: Problem,
    pub kept: Vec<VarId>,
    pub evidence: Assignment,
}

impl ConditionedProblem {
    /// Expand an assignment of the conditioned problem back to the original
    /// variable space, filling in the evidence values.
    pub fn expand_assignment(&self, values: &[usize]) -> Vec<usize> {
        let n = self.kept.len() + self.evidence.assigned().count();
        let mut full = vec![0usize; n];
        for (i, &orig) in self.kept.iter().enumerate() {
            full[orig] = values[i];
        }
        for (var, value) in self.evidence.assigned() {
            full[var] = value;
        }
        full
    }
}

/// Slice the CPTs of a belief network on an evidence set and return the
/// resulting max-product problem. Rows inconsistent with the evidence are
/// dropped, evidence variables disappear from scopes and from the variable
/// set, and fully instantiated CPTs contribute scope-free constants.
pub fn condition_on_evidence(
    bn: &BeliefNetwork,
    evidence: &Assignment,
    log_domain: bool,
) -> Result<ConditionedProblem, ModelError> {
    evidence.check_domains(&bn.domains)?;
    let n = bn.num_vars();
    let mut kept = Vec::new();
    let mut new_id = vec![usize::MAX; n];
    for (v, slot) in new_id.iter_mut().enumerate() {
        if evidence.get(v).is_none() {
            *slot = kept.len();
            kept.push(v);
        }
    }
    let ring = if log_domain { Semiring::max_product() } else { Semiring::max_product_linear() };

    let mut functions = Vec::with_capacity(bn.cpts.len());
    for cpt in &bn.cpts {
        let dims: Vec<usize> = cpt.scope.iter().map(|&v| bn.domains[v]).collect();
        let free: Vec<usize> = (0..cpt.scope.len())
            .filter(|&i| evidence.get(cpt.scope[i]).is_none())
            .collect();
        let new_scope: Vec<VarId> = free.iter().map(|&i| new_id[cpt.scope[i]]).collect();
        let rows: usize = free.iter().map(|&i| dims[i]).product();

        let mut costs = Vec::with_capacity(rows);
        let mut tuple = vec![0usize; cpt.scope.len()];
        for (i, &v) in cpt.scope.iter().enumerate() {
            if let Some(value) = evidence.get(v) {
                tuple[i] = value;
            }
        }
        for r in 0..rows {
            let mut rest = r;
            for &i in free.iter().rev() {
                tuple[i] = rest % dims[i];
                rest /= dims[i];
            }
            let mut rank = 0usize;
            for (i, &d) in dims.iter().enumerate() {
                rank = rank * d + tuple[i];
            }
            let p = cpt.costs[rank];
            costs.push(if log_domain { p.ln() } else { p });
        }
        functions.push(CostFunction::new(new_scope, costs));
    }

    let domains: Vec<usize> = kept.iter().map(|&v| bn.domains[v]).collect();
    let mut problem = Problem::new(domains, functions, ring)?;
    problem.name = bn.name.clone();
    Ok(ConditionedProblem { problem, kept, evidence: evidence.clone() })
}
