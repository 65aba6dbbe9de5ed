//! UAI Bayes-network format: preamble (`BAYES`, variable count, domain
//! sizes, function count, scopes), then one flattened probability table per
//! function in declared scope order. The child variable of each CPT is the
//! last of its scope. Evidence files hold a count followed by
//! (variable, value) pairs. Tokens may be split across lines arbitrarily.

use thiserror::Error;

use crate::model::{Assignment, BeliefNetwork, CostFunction};

#[derive(Debug, Error, PartialEq)]
pub enum UaiError {
    #[error("expected BAYES network, found {0:?}")]
    UnsupportedNetwork(String),
    #[error("unexpected end of input while reading {0}")]
    UnexpectedEof(&'static str),
    #[error("invalid token {token:?} while reading {what}")]
    BadToken { token: String, what: &'static str },
    #[error("{0}")]
    Structure(String),
}

struct Tokens<'a> {
    iter: std::str::SplitWhitespace<'a>,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        Tokens { iter: text.split_whitespace() }
    }

    fn next_str(&mut self, what: &'static str) -> Result<&'a str, UaiError> {
        self.iter.next().ok_or(UaiError::UnexpectedEof(what))
    }

    fn next_usize(&mut self, what: &'static str) -> Result<usize, UaiError> {
        let t = self.next_str(what)?;
        t.parse().map_err(|_| UaiError::BadToken { token: t.to_string(), what })
    }

    fn next_f64(&mut self, what: &'static str) -> Result<f64, UaiError> {
        let t = self.next_str(what)?;
        t.parse().map_err(|_| UaiError::BadToken { token: t.to_string(), what })
    }
}

/// Parsed network plus non-fatal warnings (currently only CPT normalization
/// drift beyond 1e-6).
#[derive(Debug)]
pub struct ParsedUai {
    pub network: BeliefNetwork,
    pub warnings: Vec<String>,
}

pub fn parse_uai(text: &str) -> Result<ParsedUai, UaiError> {
    let mut tok = Tokens::new(text);
    let kind = tok.next_str("network type")?;
    if !kind.eq_ignore_ascii_case("BAYES") {
        return Err(UaiError::UnsupportedNetwork(kind.to_string()));
    }
    let n = tok.next_usize("variable count")?;
    let mut domains = Vec::with_capacity(n);
    for _ in 0..n {
        let d = tok.next_usize("domain size")?;
        if d == 0 {
            return Err(UaiError::Structure("domain size must be >= 1".into()));
        }
        domains.push(d);
    }
    let nfunc = tok.next_usize("function count")?;

    let mut scopes = Vec::with_capacity(nfunc);
    for _ in 0..nfunc {
        let arity = tok.next_usize("scope arity")?;
        if arity > n {
            return Err(UaiError::Structure(format!(
                "arity {arity} exceeds the variable count {n}"
            )));
        }
        let mut scope = Vec::with_capacity(arity);
        for _ in 0..arity {
            let v = tok.next_usize("scope variable")?;
            if v >= n {
                return Err(UaiError::Structure(format!("variable {v} out of range")));
            }
            if scope.contains(&v) {
                return Err(UaiError::Structure(format!("duplicate variable {v} in scope")));
            }
            scope.push(v);
        }
        if scope.is_empty() {
            return Err(UaiError::Structure("empty CPT scope".into()));
        }
        scopes.push(scope);
    }

    let mut cpts = Vec::with_capacity(nfunc);
    let mut children = Vec::with_capacity(nfunc);
    for scope in scopes {
        let want = scope
            .iter()
            .try_fold(1u128, |acc, &v| acc.checked_mul(domains[v] as u128))
            .unwrap_or(u128::MAX);
        if want > (1 << 28) {
            return Err(UaiError::Structure(format!("CPT of {want} rows is too large")));
        }
        let want = want as usize;
        let count = tok.next_usize("table size")?;
        if count != want {
            return Err(UaiError::Structure(format!(
                "table declares {count} entries, scope requires {want}"
            )));
        }
        let mut costs = Vec::with_capacity(count);
        for _ in 0..count {
            costs.push(tok.next_f64("table entry")?);
        }
        children.push(*scope.last().unwrap());
        cpts.push(CostFunction::new(scope, costs));
    }

    let network = BeliefNetwork::new(domains, cpts, children)
        .map_err(|e| UaiError::Structure(e.to_string()))?;
    let mut warnings = Vec::new();
    let deviation = network.max_normalization_deviation();
    if deviation > 1e-6 {
        warnings.push(format!(
            "CPT normalization deviates from 1 by up to {deviation:.3e}"
        ));
    }
    Ok(ParsedUai { network, warnings })
}

/// Evidence file: a count followed by (variable, value) pairs.
pub fn parse_evidence(text: &str, n: usize) -> Result<Assignment, UaiError> {
    let mut tok = Tokens::new(text);
    let count = tok.next_usize("evidence count")?;
    let mut ev = Assignment::empty(n);
    for _ in 0..count {
        let var = tok.next_usize("evidence variable")?;
        let value = tok.next_usize("evidence value")?;
        if var >= n {
            return Err(UaiError::Structure(format!("evidence variable {var} out of range")));
        }
        ev.set(var, value);
    }
    Ok(ev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{condition_on_evidence, evaluate_complete};

    #[test]
    fn single_variable_network() {
        let text = "BAYES\n1\n2\n1\n1 0\n\n2\n0.3 0.7\n";
        let parsed = parse_uai(text).unwrap();
        assert!(parsed.warnings.is_empty());
        let bn = parsed.network;
        assert_eq!(bn.num_vars(), 1);
        assert_eq!(bn.cpts[0].costs, vec![0.3, 0.7]);
        // The MPE of this network is x0 = 1 with probability 0.7.
        let cond = condition_on_evidence(&bn, &Assignment::empty(1), false).unwrap();
        let best = (0..2)
            .map(|v| evaluate_complete(&cond.problem, &[v]))
            .fold(f64::MIN, f64::max);
        assert!((best - 0.7).abs() < 1e-12);
    }

    #[test]
    fn rejects_markov_networks() {
        let text = "MARKOV\n1\n2\n1\n1 0\n2\n0.5 0.5\n";
        assert_eq!(
            parse_uai(text).unwrap_err(),
            UaiError::UnsupportedNetwork("MARKOV".into())
        );
    }

    #[test]
    fn two_variable_chain_matches_enumeration() {
        let text = "BAYES\n2\n2 2\n2\n1 0\n2 0 1\n\n2\n0.6 0.4\n4\n0.9 0.1 0.2 0.8\n";
        let bn = parse_uai(text).unwrap().network;
        let cond = condition_on_evidence(&bn, &Assignment::empty(2), false).unwrap();
        let mut best = 0.0f64;
        for a in 0..2 {
            for b in 0..2 {
                let p = bn.cpts[0].costs[a] * bn.cpts[1].costs[a * 2 + b];
                best = best.max(p);
            }
        }
        let mut got = 0.0f64;
        for a in 0..2 {
            for b in 0..2 {
                got = got.max(evaluate_complete(&cond.problem, &[a, b]));
            }
        }
        assert!((best - got).abs() < 1e-12);
    }

    #[test]
    fn normalization_drift_warns_but_parses() {
        let text = "BAYES\n1\n2\n1\n1 0\n2\n0.5 0.6\n";
        let parsed = parse_uai(text).unwrap();
        assert_eq!(parsed.warnings.len(), 1);
    }

    #[test]
    fn table_size_mismatch_is_structural_error() {
        let text = "BAYES\n1\n2\n1\n1 0\n3\n0.5 0.5 0.1\n";
        assert!(matches!(parse_uai(text), Err(UaiError::Structure(_))));
    }

    #[test]
    fn evidence_fixes_variables() {
        let ev = parse_evidence("2 0 1 3 0\n", 4).unwrap();
        assert_eq!(ev.get(0), Some(1));
        assert_eq!(ev.get(3), Some(0));
        assert_eq!(ev.assigned().count(), 2);
    }

    #[test]
    fn evidence_slicing_drops_fixed_variable() {
        let text = "BAYES\n2\n2 2\n2\n1 0\n2 0 1\n\n2\n0.6 0.4\n4\n0.9 0.1 0.2 0.8\n";
        let bn = parse_uai(text).unwrap().network;
        let ev = parse_evidence("1 1 0", 2).unwrap();
        let cond = condition_on_evidence(&bn, &ev, false).unwrap();
        assert_eq!(cond.problem.num_vars(), 1);
        assert_eq!(cond.kept, vec![0]);
    }
}
