//! Plain-text WCSP format, toulbar2 style.
//!
//! ```text
//! <name> <n> <max-domain> <n-functions> <global-UB>
//! <d_1> ... <d_n>
//! <arity> <var...> <default-cost> <n-tuples>
//! <v_1> ... <v_arity> <cost>          (one line per listed tuple)
//! ```
//!
//! Unlisted tuples take the function's default cost. Any cost at or above
//! the declared global upper bound parses to the forbidden value. Output is
//! ASCII with `\n` newlines; writing and re-parsing preserves cost
//! semantics.

use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{Cost, CostFunction, Problem, Semiring, Task};
use crate::table::BucketTable;

/// Refuse to materialize a single parsed table above this row count; real
/// instances stay far below it, and it keeps a malformed one-line function
/// from requesting terabytes.
const MAX_PARSED_ROWS: u128 = 1 << 28;

#[derive(Debug, Error, PartialEq)]
pub enum WcspError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("writing requires a min-sum problem")]
    NotMinSum,
}

fn err(line: usize, message: impl Into<String>) -> WcspError {
    WcspError::Parse { line, message: message.into() }
}

struct Lines<'a> {
    iter: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines { iter: text.lines().enumerate() }
    }

    /// Next non-empty line as (1-based number, tokens).
    fn next_tokens(&mut self) -> Option<(usize, Vec<&'a str>)> {
        for (i, line) in self.iter.by_ref() {
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if !tokens.is_empty() {
                return Some((i + 1, tokens));
            }
        }
        None
    }
}

fn parse_num<T: std::str::FromStr>(token: &str, line: usize, what: &str) -> Result<T, WcspError> {
    token.parse::<T>().map_err(|_| err(line, format!("invalid {what}: {token:?}")))
}

/// Parse a WCSP instance into a min-sum problem.
pub fn parse_wcsp(text: &str) -> Result<Problem, WcspError> {
    let ring = Semiring::min_sum();
    let mut lines = Lines::new(text);

    let (hline, header) = lines.next_tokens().ok_or_else(|| err(0, "empty input"))?;
    if header.len() != 5 {
        return Err(err(hline, format!("header needs 5 fields, found {}", header.len())));
    }
    let name = header[0].to_string();
    let n: usize = parse_num(header[1], hline, "variable count")?;
    let _max_domain: usize = parse_num(header[2], hline, "max domain size")?;
    let nfunctions: usize = parse_num(header[3], hline, "function count")?;
    let ub: f64 = parse_num(header[4], hline, "global upper bound")?;

    let (dline, dtokens) = lines.next_tokens().ok_or_else(|| err(hline, "missing domain line"))?;
    if dtokens.len() != n {
        return Err(err(dline, format!("expected {n} domain sizes, found {}", dtokens.len())));
    }
    let mut domains = Vec::with_capacity(n);
    for t in &dtokens {
        let d: usize = parse_num(t, dline, "domain size")?;
        if d == 0 {
            return Err(err(dline, "domain size must be >= 1"));
        }
        domains.push(d);
    }

    let clamp = |c: f64| if c >= ub { ring.top() } else { c };

    let mut functions = Vec::with_capacity(nfunctions);
    for k in 0..nfunctions {
        let (fline, ftokens) =
            lines.next_tokens().ok_or_else(|| err(dline, format!("missing function {k}")))?;
        let arity: usize = parse_num(ftokens[0], fline, "arity")?;
        if arity > n {
            return Err(err(fline, format!("arity {arity} exceeds the variable count {n}")));
        }
        if ftokens.len() != arity + 3 {
            return Err(err(
                fline,
                format!("function line needs {} fields for arity {arity}, found {}",
                    arity + 3,
                    ftokens.len()),
            ));
        }
        let mut scope = Vec::with_capacity(arity);
        for t in &ftokens[1..1 + arity] {
            let v: usize = parse_num(t, fline, "variable id")?;
            if v >= n {
                return Err(err(fline, format!("variable id {v} out of range (n = {n})")));
            }
            if scope.contains(&v) {
                return Err(err(fline, format!("duplicate variable {v} in scope")));
            }
            scope.push(v);
        }
        let default_cost: f64 = parse_num(ftokens[1 + arity], fline, "default cost")?;
        let ntuples: usize = parse_num(ftokens[2 + arity], fline, "tuple count")?;

        let dims: Vec<usize> = scope.iter().map(|&v| domains[v]).collect();
        let rows = BucketTable::row_count(&dims);
        if rows > MAX_PARSED_ROWS {
            return Err(err(fline, format!("function table of {rows} rows is too large")));
        }
        let rows = rows as usize;
        let mut costs = vec![clamp(default_cost); rows];

        for _ in 0..ntuples {
            let (tline, ttokens) =
                lines.next_tokens().ok_or_else(|| err(fline, "missing tuple line"))?;
            if ttokens.len() != arity + 1 {
                return Err(err(
                    tline,
                    format!("tuple needs {arity} values and a cost, found {} fields",
                        ttokens.len()),
                ));
            }
            let mut rank = 0usize;
            for (i, t) in ttokens[..arity].iter().enumerate() {
                let v: usize = parse_num(t, tline, "tuple value")?;
                if v >= dims[i] {
                    return Err(err(
                        tline,
                        format!("value {v} out of domain (size {}) for variable {}",
                            dims[i], scope[i]),
                    ));
                }
                rank = rank * dims[i] + v;
            }
            let cost: f64 = parse_num(ttokens[arity], tline, "cost")?;
            costs[rank] = clamp(cost);
        }
        functions.push(CostFunction::new(scope, costs));
    }

    let mut problem = Problem::new(domains, functions, ring)
        .map_err(|e| err(hline, e.to_string()))?;
    problem.name = Some(name);
    problem.upper_bound = Some(ub);
    Ok(problem)
}

/// Upper bound used when writing a problem that does not declare one: the
/// sum of each function's largest finite cost, plus one.
pub fn implied_upper_bound(problem: &Problem) -> f64 {
    let ring = problem.semiring;
    let mut ub = 1.0;
    for f in &problem.functions {
        let max_finite = f
            .costs
            .iter()
            .copied()
            .filter(|&c| !ring.is_top(c))
            .fold(0.0f64, f64::max);
        ub += max_finite;
    }
    ub
}

/// Render a min-sum problem in WCSP format. Forbidden entries are written as
/// the global upper bound; each function's default cost is its most frequent
/// value.
pub fn write_wcsp(problem: &Problem) -> Result<String, WcspError> {
    if problem.semiring.task != Task::MinSum {
        return Err(WcspError::NotMinSum);
    }
    let ring = problem.semiring;
    let ub = problem.upper_bound.unwrap_or_else(|| implied_upper_bound(problem));
    let encode = |c: Cost| if ring.is_top(c) { ub } else { c };

    let mut out = String::new();
    let name = problem.name.as_deref().unwrap_or("instance");
    let max_domain = problem.domains.iter().copied().max().unwrap_or(1);
    writeln!(out, "{} {} {} {} {}", name, problem.num_vars(), max_domain,
        problem.functions.len(), format_cost(ub)).unwrap();
    let dline: Vec<String> = problem.domains.iter().map(|d| d.to_string()).collect();
    writeln!(out, "{}", dline.join(" ")).unwrap();

    for f in &problem.functions {
        let dims: Vec<usize> = f.scope.iter().map(|&v| problem.domains[v]).collect();
        // Most frequent encoded cost becomes the default.
        let mut counts: Vec<(u64, usize)> = Vec::new();
        for &c in &f.costs {
            let bits = encode(c).to_bits();
            match counts.iter_mut().find(|(b, _)| *b == bits) {
                Some((_, k)) => *k += 1,
                None => counts.push((bits, 1)),
            }
        }
        let default_bits =
            counts.iter().max_by_key(|&&(_, k)| k).map(|&(b, _)| b).unwrap_or(0f64.to_bits());
        let default = f64::from_bits(default_bits);

        let listed: Vec<usize> = (0..f.costs.len())
            .filter(|&r| encode(f.costs[r]).to_bits() != default_bits)
            .collect();

        let scope_str: Vec<String> = f.scope.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{} {} {} {}", f.scope.len(),
            scope_str.join(" "),
            format_cost(default),
            listed.len())
        .unwrap();
        for r in listed {
            let mut tuple = Vec::with_capacity(f.scope.len());
            let mut rest = r;
            for i in (0..dims.len()).rev() {
                tuple.push(rest % dims[i]);
                rest /= dims[i];
            }
            tuple.reverse();
            let mut fields: Vec<String> = tuple.iter().map(|v| v.to_string()).collect();
            fields.push(format_cost(encode(f.costs[r])));
            writeln!(out, "{}", fields.join(" ")).unwrap();
        }
    }
    Ok(out)
}

// Integer-valued costs print without a trailing ".0" so files match the
// integer-cost corpus convention.
fn format_cost(c: f64) -> String {
    if c.fract() == 0.0 && c.abs() < 1e15 {
        format!("{}", c as i64)
    } else {
        format!("{c}")
    }
}
