//! Benchmark report rows: one row per (instance, algorithm, z, backend),
//! serializable as CSV or JSON lines.

use serde::Serialize;

/// A single benchmark measurement.
#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub instance: String,
    pub algorithm: String,
    pub z: Option<usize>,
    pub backend: String,
    /// Optimum for exact runs, relaxation bound for bounded runs; `None`
    /// when infeasible or refused.
    pub value: Option<f64>,
    pub assignment_cost: Option<f64>,
    pub induced_width: Option<usize>,
    pub wall_ms: f64,
    /// Sequential wall time over this row's wall time, when both were
    /// measured on identical inputs.
    pub speedup: Option<f64>,
    pub simulated_runtime: Option<u64>,
    pub util_messages: Option<usize>,
    pub value_messages: Option<usize>,
    pub max_message_rows: Option<u64>,
    /// Outcome: `ok`, `oom`, or `error:...`.
    pub status: String,
}

pub const CSV_HEADER: &str = "instance,algorithm,z,backend,value,assignment_cost,induced_width,\
wall_ms,speedup,simulated_runtime,util_messages,value_messages,max_message_rows,status";

fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

impl BenchRow {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{:.3},{},{},{},{},{},{}",
            self.instance,
            self.algorithm,
            opt(&self.z),
            self.backend,
            opt(&self.value),
            opt(&self.assignment_cost),
            opt(&self.induced_width),
            self.wall_ms,
            opt(&self.speedup.map(|s| format!("{s:.2}"))),
            opt(&self.simulated_runtime),
            opt(&self.util_messages),
            opt(&self.value_messages),
            opt(&self.max_message_rows),
            self.status
        )
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("row serializes")
    }
}
