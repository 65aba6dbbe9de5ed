//! Flat bucket tables and the two data-parallel kernels that operate on
//! them: aggregation (combine a smaller table into a larger one) and
//! elimination (marginalize out the last scope variable).
//!
//! A table's scope is sorted by the global ordering with the variable to be
//! eliminated last, and rows are laid out in lexicographic order of the
//! scope tuple (first scope variable most significant). Because the
//! eliminated variable occupies the lowest stride, elimination reduces `d`
//! consecutive rows into one, and aggregation can locate the input row for
//! any output row with a handful of integer ops per scope variable — no
//! tuple materialization needed. Both kernels assign each output row to
//! exactly one logical task, so results are identical for every backend and
//! worker count.

use thiserror::Error;

use crate::graph::Ordering;
use crate::model::{Cost, CostFunction, Semiring, VarId};

#[derive(Debug, Error, PartialEq)]
pub enum TableError {
    #[error("input scope is not a subsequence of the output scope")]
    NotASubsequence,
    #[error("input and output tables must share their last scope variable")]
    LastVariableMismatch,
    #[error("cannot eliminate from a table with an empty scope")]
    EmptyScope,
}

/// How kernels execute: single-threaded, or output rows partitioned across
/// a fixed number of workers. Every backend produces bit-identical tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendKind {
    Sequential,
    ParallelWorkers(usize),
}

/// Execution backend plus dispatch parameters. Tables larger than
/// `chunk_rows` are processed in row chunks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExecBackend {
    pub kind: BackendKind,
    pub chunk_rows: usize,
    /// Chunks smaller than this run inline even under a parallel backend;
    /// the result is identical either way and thread startup would dominate.
    pub parallel_threshold: usize,
}

const PARALLEL_MIN_ROWS: usize = 1 << 12;

impl ExecBackend {
    pub fn sequential() -> Self {
        ExecBackend {
            kind: BackendKind::Sequential,
            chunk_rows: 1 << 20,
            parallel_threshold: PARALLEL_MIN_ROWS,
        }
    }

    pub fn parallel(workers: usize) -> Self {
        ExecBackend {
            kind: BackendKind::ParallelWorkers(workers.max(1)),
            chunk_rows: 1 << 20,
            parallel_threshold: PARALLEL_MIN_ROWS,
        }
    }

    pub fn with_chunk_rows(mut self, chunk_rows: usize) -> Self {
        self.chunk_rows = chunk_rows.max(1);
        self
    }

    /// Force thread dispatch even for tiny tables (used by tests).
    pub fn with_parallel_threshold(mut self, rows: usize) -> Self {
        self.parallel_threshold = rows;
        self
    }

    pub fn workers(&self) -> usize {
        match self.kind {
            BackendKind::Sequential => 1,
            BackendKind::ParallelWorkers(k) => k.max(1),
        }
    }

    pub fn label(&self) -> String {
        match self.kind {
            BackendKind::Sequential => "seq".to_string(),
            BackendKind::ParallelWorkers(k) => format!("par:{k}"),
        }
    }
}

impl Default for ExecBackend {
    fn default() -> Self {
        ExecBackend::sequential()
    }
}

/// A flat cost table over a sorted scope. Row `r` holds the cost of the
/// scope tuple with lexicographic rank `r`; the tuple list itself is never
/// materialized.
#[derive(Debug, Clone, PartialEq)]
pub struct BucketTable {
    pub scope: Vec<VarId>,
    pub dims: Vec<usize>,
    pub chi: Vec<Cost>,
}

impl BucketTable {
    /// A table filled with the combine identity.
    pub fn filled(scope: Vec<VarId>, dims: Vec<usize>, fill: Cost) -> Self {
        debug_assert_eq!(scope.len(), dims.len());
        let rows: usize = dims.iter().product();
        BucketTable { scope, dims, chi: vec![fill; rows] }
    }

    /// A scope-free table holding a single constant.
    pub fn constant(value: Cost) -> Self {
        BucketTable { scope: Vec::new(), dims: Vec::new(), chi: vec![value] }
    }

    pub fn rows(&self) -> usize {
        self.chi.len()
    }

    /// Number of rows a table over `dims` would have, saturating.
    pub fn row_count(dims: &[usize]) -> u128 {
        dims.iter()
            .try_fold(1u128, |acc, &d| acc.checked_mul(d as u128))
            .unwrap_or(u128::MAX)
    }

    /// Lexicographic rank of a full scope tuple.
    pub fn rank(&self, values: &[usize]) -> usize {
        debug_assert_eq!(values.len(), self.scope.len());
        let mut r = 0usize;
        for (i, &d) in self.dims.iter().enumerate() {
            r = r * d + values[i];
        }
        r
    }

    /// Decode row `r` into a scope tuple.
    pub fn tuple(&self, r: usize) -> Vec<usize> {
        let mut values = vec![0usize; self.dims.len()];
        let mut rest = r;
        for i in (0..self.dims.len()).rev() {
            values[i] = rest % self.dims[i];
            rest /= self.dims[i];
        }
        values
    }

    /// True when the scope is strictly increasing under the ordering's
    /// priority, the layout every kernel expects.
    pub fn is_sorted_by(&self, ordering: &Ordering) -> bool {
        self.scope
            .windows(2)
            .all(|w| ordering.position(w[0]) < ordering.position(w[1]))
    }
}

/// Reorder a cost function's table so its scope is sorted ascending by the
/// given ordering's priority. Each entry keeps its tuple semantics; only the
/// row layout changes.
pub fn table_from_function(
    f: &CostFunction,
    ordering: &Ordering,
    domains: &[usize],
) -> BucketTable {
    let arity = f.scope.len();
    let mut perm: Vec<usize> = (0..arity).collect();
    perm.sort_by_key(|&i| ordering.position(f.scope[i]));

    let scope: Vec<VarId> = perm.iter().map(|&i| f.scope[i]).collect();
    let dims: Vec<usize> = scope.iter().map(|&v| domains[v]).collect();
    if perm.iter().enumerate().all(|(k, &i)| k == i) {
        return BucketTable { scope, dims, chi: f.costs.clone() };
    }

    // Stride of each original scope position in the sorted layout.
    let mut out_stride = vec![1usize; arity];
    {
        let mut strides = vec![1usize; arity];
        let mut acc = 1usize;
        for k in (0..arity).rev() {
            strides[k] = acc;
            acc *= dims[k];
        }
        for (k, &i) in perm.iter().enumerate() {
            out_stride[i] = strides[k];
        }
    }

    let in_dims: Vec<usize> = f.scope.iter().map(|&v| domains[v]).collect();
    let mut chi = vec![0.0; f.costs.len()];
    let mut tuple = vec![0usize; arity];
    for (r, &cost) in f.costs.iter().enumerate() {
        let mut rest = r;
        for i in (0..arity).rev() {
            tuple[i] = rest % in_dims[i];
            rest /= in_dims[i];
        }
        let out_rank: usize = tuple.iter().zip(&out_stride).map(|(&v, &s)| v * s).sum();
        chi[out_rank] = cost;
    }
    BucketTable { scope, dims, chi }
}

/// Stride arithmetic mapping output rows of an aggregation to input rows.
///
/// For input scope position `k` (0-based), `mul[k]` is the input stride of
/// that variable, `div[k]` the output stride of the same variable, and
/// `modv[k]` its domain size. The input row matching output row `r` is
///
/// ```text
/// sum over k < s-1 of mul[k] * ((r / div[k]) % modv[k])  +  r % modv[s-1]
/// ```
///
/// The final term uses no division because both scopes end in the same
/// variable, which therefore has stride 1 in both layouts.
#[derive(Debug, Clone)]
pub struct IndexMap {
    pub mul: Vec<u64>,
    pub div: Vec<u64>,
    pub modv: Vec<u64>,
}

impl IndexMap {
    /// Build the map for aggregating a table over `in_scope` into one over
    /// `out_scope`. Requires `in_scope` to be a subsequence of `out_scope`
    /// ending in the same variable.
    pub fn build(
        in_scope: &[VarId],
        in_dims: &[usize],
        out_scope: &[VarId],
        out_dims: &[usize],
    ) -> Result<Self, TableError> {
        let s = in_scope.len();
        let m = out_scope.len();
        if s == 0 || m == 0 || in_scope[s - 1] != out_scope[m - 1] {
            return Err(TableError::LastVariableMismatch);
        }

        // Match in_scope against out_scope left to right.
        let mut phi = vec![0usize; s];
        let mut j = 0usize;
        for (k, &v) in in_scope.iter().enumerate() {
            while j < m && out_scope[j] != v {
                j += 1;
            }
            if j == m {
                return Err(TableError::NotASubsequence);
            }
            phi[k] = j;
            j += 1;
        }

        let mut in_stride = vec![1u64; s];
        for k in (0..s.saturating_sub(1)).rev() {
            in_stride[k] = in_stride[k + 1] * in_dims[k + 1] as u64;
        }
        let mut out_stride = vec![1u64; m];
        for k in (0..m.saturating_sub(1)).rev() {
            out_stride[k] = out_stride[k + 1] * out_dims[k + 1] as u64;
        }

        let mul = in_stride[..s - 1].to_vec();
        let div = phi[..s - 1].iter().map(|&j| out_stride[j]).collect();
        let modv = in_dims.iter().map(|&d| d as u64).collect();
        Ok(IndexMap { mul, div, modv })
    }

    /// Input row whose tuple agrees with output row `r_out` on the shared
    /// variables.
    #[inline(always)]
    pub fn map_row(&self, r_out: u64) -> u64 {
        let s = self.modv.len();
        let mut r = r_out % self.modv[s - 1];
        for k in 0..s - 1 {
            r += self.mul[k] * ((r_out / self.div[k]) % self.modv[k]);
        }
        r
    }
}

/// Split `chi` into at most `workers` contiguous chunks and run `work` on
/// each, in parallel when it pays off. `work` receives the global row offset
/// of its chunk. Rows are covered exactly once, so no two tasks ever write
/// the same output row.
fn run_partitioned<F>(chi: &mut [Cost], backend: &ExecBackend, work: F)
where
    F: Fn(u64, &mut [Cost]) + Sync,
{
    let workers = backend.workers();
    let mut base = 0usize;
    let total = chi.len();
    let mut rest = chi;
    while !rest.is_empty() {
        let take = rest.len().min(backend.chunk_rows.max(1));
        let (chunk, tail) = rest.split_at_mut(take);
        if workers <= 1 || take < backend.parallel_threshold {
            work(base as u64, chunk);
        } else {
            let per = take.div_ceil(workers);
            std::thread::scope(|scope| {
                let mut offset = base;
                for piece in chunk.chunks_mut(per) {
                    let w = &work;
                    let start = offset;
                    offset += piece.len();
                    scope.spawn(move || w(start as u64, piece));
                }
            });
        }
        base += take;
        rest = tail;
    }
    debug_assert_eq!(base, total);
}

/// Combine one input table into the matching rows of the output table:
/// `out[r] = combine(out[r], in[map_row(r)])` for every output row `r`.
pub fn aggregate_into(
    out: &mut BucketTable,
    input: &BucketTable,
    ring: Semiring,
    backend: &ExecBackend,
) -> Result<(), TableError> {
    aggregate_many_into(out, &[input], ring, backend)
}

/// Batched aggregation: combine several input tables into the output in one
/// pass over the output rows. Equivalent to calling [`aggregate_into`] once
/// per input in order, including bit-for-bit.
pub fn aggregate_many_into(
    out: &mut BucketTable,
    inputs: &[&BucketTable],
    ring: Semiring,
    backend: &ExecBackend,
) -> Result<(), TableError> {
    let mut maps = Vec::with_capacity(inputs.len());
    for input in inputs {
        maps.push(IndexMap::build(&input.scope, &input.dims, &out.scope, &out.dims)?);
    }
    let multiply = matches!(
        (ring.task, ring.log_domain),
        (crate::model::Task::MaxProduct, false)
    );
    run_partitioned(&mut out.chi, backend, |base, rows| {
        for (input, map) in inputs.iter().zip(&maps) {
            let chi_in = &input.chi;
            if input.scope == out.scope {
                // Full overlap: the map is the identity.
                let src = &chi_in[base as usize..base as usize + rows.len()];
                if multiply {
                    for (o, &v) in rows.iter_mut().zip(src) {
                        *o *= v;
                    }
                } else {
                    for (o, &v) in rows.iter_mut().zip(src) {
                        *o += v;
                    }
                }
            } else if multiply {
                for (i, o) in rows.iter_mut().enumerate() {
                    *o *= chi_in[map.map_row(base + i as u64) as usize];
                }
            } else {
                for (i, o) in rows.iter_mut().enumerate() {
                    *o += chi_in[map.map_row(base + i as u64) as usize];
                }
            }
        }
    });
    Ok(())
}

/// Marginalize out the last scope variable: output row `r` is the
/// marginalization of the `d` consecutive input rows starting at `r * d`.
pub fn eliminate_last(
    table: &BucketTable,
    ring: Semiring,
    backend: &ExecBackend,
) -> Result<BucketTable, TableError> {
    if table.scope.is_empty() {
        return Err(TableError::EmptyScope);
    }
    let d = *table.dims.last().unwrap();
    let out_scope = table.scope[..table.scope.len() - 1].to_vec();
    let out_dims = table.dims[..table.dims.len() - 1].to_vec();
    let out_rows = table.rows() / d;
    let mut chi = vec![0.0; out_rows];
    let maximize = matches!(ring.task, crate::model::Task::MaxProduct);
    let chi_in = &table.chi;
    run_partitioned(&mut chi, backend, |base, rows| {
        for (i, o) in rows.iter_mut().enumerate() {
            let start = (base as usize + i) * d;
            let group = &chi_in[start..start + d];
            let mut best = group[0];
            if maximize {
                for &v in &group[1..] {
                    if v > best {
                        best = v;
                    }
                }
            } else {
                for &v in &group[1..] {
                    if v < best {
                        best = v;
                    }
                }
            }
            *o = best;
        }
    });
    Ok(BucketTable { scope: out_scope, dims: out_dims, chi })
}
