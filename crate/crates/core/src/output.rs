//! One tabular schema for every method's CDF so results can be diffed:
//!
//! ```text
//! t, pi, cdf, absorb_cdf, evidence, undetermined, mu_<sp>..., var_<sp>..., ci_half_width
//! ```
//!
//! Columns a method cannot provide are written as `nan`.

use std::fmt::Write as _;

use serde_json::{json, Map, Value};

#[derive(Debug, Clone, PartialEq)]
pub struct CdfTable {
    pub method: String,
    pub species: Vec<String>,
    pub times: Vec<f64>,
    pub pi: Vec<f64>,
    pub cdf: Vec<f64>,
    pub absorb_cdf: Vec<f64>,
    pub evidence: Vec<f64>,
    pub undetermined: Vec<f64>,
    /// `mu[i][s]`: mean of species `s` at time `i`.
    pub mu: Vec<Vec<f64>>,
    pub var: Vec<Vec<f64>>,
    /// Pointwise confidence half-width; empty for deterministic methods.
    pub ci_half_width: Vec<f64>,
    /// Additional labelled columns appended after the fixed ones.
    pub extra: Vec<(String, Vec<f64>)>,
}

fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:.10e}")
    }
}

impl CdfTable {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = ["t", "pi", "cdf", "absorb_cdf", "evidence", "undetermined"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        h.extend(self.species.iter().map(|s| format!("mu_{s}")));
        h.extend(self.species.iter().map(|s| format!("var_{s}")));
        h.push("ci_half_width".into());
        h.extend(self.extra.iter().map(|(name, _)| name.clone()));
        h
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header().join(",");
        out.push('\n');
        let n_sp = self.species.len();
        for i in 0..self.len() {
            let mut row = vec![
                num(self.times[i]),
                num(self.pi[i]),
                num(self.cdf[i]),
                num(self.absorb_cdf[i]),
                num(self.evidence[i]),
                num(self.undetermined[i]),
            ];
            for s in 0..n_sp {
                row.push(num(self.mu.get(i).and_then(|m| m.get(s)).copied().unwrap_or(f64::NAN)));
            }
            for s in 0..n_sp {
                row.push(num(self.var.get(i).and_then(|m| m.get(s)).copied().unwrap_or(f64::NAN)));
            }
            row.push(num(self.ci_half_width.get(i).copied().unwrap_or(f64::NAN)));
            for (_, col) in &self.extra {
                row.push(num(col[i]));
            }
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let col = |v: &[f64]| Value::Array(v.iter().map(|&x| json_num(x)).collect());
        let per_species = |m: &[Vec<f64>]| {
            let mut obj = Map::new();
            for (s, name) in self.species.iter().enumerate() {
                let series: Vec<f64> = (0..self.len())
                    .map(|i| m.get(i).and_then(|r| r.get(s)).copied().unwrap_or(f64::NAN))
                    .collect();
                obj.insert(name.clone(), col(&series));
            }
            Value::Object(obj)
        };
        let mut obj = json!({
            "method": self.method,
            "species": self.species,
            "t": col(&self.times),
            "pi": col(&self.pi),
            "cdf": col(&self.cdf),
            "absorb_cdf": col(&self.absorb_cdf),
            "evidence": col(&self.evidence),
            "undetermined": col(&self.undetermined),
            "mu": per_species(&self.mu),
            "var": per_species(&self.var),
        });
        let hw: Vec<f64> = (0..self.len())
            .map(|i| self.ci_half_width.get(i).copied().unwrap_or(f64::NAN))
            .collect();
        obj["ci_half_width"] = col(&hw);
        for (name, values) in &self.extra {
            obj[name.as_str()] = col(values);
        }
        obj
    }
}

fn json_num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}
