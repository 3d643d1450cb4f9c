//! Dense joint probability tables over small finite variables, with
//! marginalization and conditioning.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A named discrete variable with a finite ordered domain.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableSpec {
    pub name: String,
    pub domain: Vec<i64>,
}

impl VariableSpec {
    pub fn new(name: impl Into<String>, domain: Vec<i64>) -> Result<Self> {
        let name = name.into();
        if domain.is_empty() {
            return Err(Error::InvalidTable {
                reason: format!("variable {name} has an empty domain"),
            });
        }
        Ok(Self { name, domain })
    }

    /// Variable over `0..n`.
    pub fn indexed(name: impl Into<String>, n: usize) -> Result<Self> {
        Self::new(name, (0..n as i64).collect())
    }

    /// A +-1-valued outcome variable, domain ordered `[-1, +1]`.
    pub fn sign(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            domain: vec![-1, 1],
        }
    }

    pub fn position(&self, value: i64) -> Option<usize> {
        self.domain.iter().position(|v| *v == value)
    }
}

/// A normalized joint distribution over the cartesian product of the variable
/// domains, stored row-major, optionally carrying the raw tallies it was
/// estimated from.
#[derive(Clone, Debug)]
pub struct ProbabilityTable {
    vars: Vec<VariableSpec>,
    p: Vec<f64>,
    counts: Option<Vec<u64>>,
    n: u64,
}

fn num_cells(vars: &[VariableSpec]) -> usize {
    vars.iter().map(|v| v.domain.len()).product()
}

fn strides(vars: &[VariableSpec]) -> Vec<usize> {
    let mut s = vec![1usize; vars.len()];
    for i in (0..vars.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * vars[i + 1].domain.len();
    }
    s
}

fn check_unique_names(vars: &[VariableSpec]) -> Result<()> {
    for (i, v) in vars.iter().enumerate() {
        if vars[i + 1..].iter().any(|w| w.name == v.name) {
            return Err(Error::InvalidTable {
                reason: format!("duplicate variable name {}", v.name),
            });
        }
    }
    Ok(())
}

impl ProbabilityTable {
    /// Builds a table from raw tallies; probabilities are relative frequencies.
    pub fn from_counts(vars: Vec<VariableSpec>, counts: Vec<u64>) -> Result<Self> {
        check_unique_names(&vars)?;
        if counts.len() != num_cells(&vars) {
            return Err(Error::InvalidTable {
                reason: format!(
                    "expected {} cells, got {}",
                    num_cells(&vars),
                    counts.len()
                ),
            });
        }
        let n: u64 = counts.iter().sum();
        if n == 0 {
            return Err(Error::InvalidTable {
                reason: "table holds zero samples".into(),
            });
        }
        let p = counts.iter().map(|c| *c as f64 / n as f64).collect();
        Ok(Self {
            vars,
            p,
            counts: Some(counts),
            n,
        })
    }

    /// Builds a table from explicit probabilities (no tallies attached).
    pub fn from_probabilities(vars: Vec<VariableSpec>, p: Vec<f64>) -> Result<Self> {
        check_unique_names(&vars)?;
        if p.len() != num_cells(&vars) {
            return Err(Error::InvalidTable {
                reason: format!("expected {} cells, got {}", num_cells(&vars), p.len()),
            });
        }
        if p.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::InvalidTable {
                reason: "probabilities must be finite and non-negative".into(),
            });
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidTable {
                reason: format!("probabilities sum to {total}"),
            });
        }
        Ok(Self {
            vars,
            p,
            counts: None,
            n: 0,
        })
    }

    pub fn vars(&self) -> &[VariableSpec] {
        &self.vars
    }

    pub fn num_cells(&self) -> usize {
        self.p.len()
    }

    /// Total number of samples behind the table; 0 for analytic tables.
    pub fn samples(&self) -> u64 {
        self.n
    }

    pub fn has_counts(&self) -> bool {
        self.counts.is_some()
    }

    pub fn var_index(&self, name: &str) -> Result<usize> {
        self.vars
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| Error::UnknownVariable { name: name.into() })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    /// Decodes a flat cell index into the value tuple.
    pub fn values_at(&self, mut flat: usize) -> Vec<i64> {
        let s = strides(&self.vars);
        self.vars
            .iter()
            .zip(s.iter())
            .map(|(v, stride)| {
                let pos = flat / stride;
                flat %= stride;
                v.domain[pos]
            })
            .collect()
    }

    /// Probability of a full assignment given by value (not position).
    pub fn probability(&self, values: &[i64]) -> Result<f64> {
        if values.len() != self.vars.len() {
            return Err(Error::InvalidTable {
                reason: "assignment arity mismatch".into(),
            });
        }
        let s = strides(&self.vars);
        let mut flat = 0usize;
        for ((v, stride), value) in self.vars.iter().zip(s.iter()).zip(values.iter()) {
            let pos = v.position(*value).ok_or_else(|| Error::InvalidTable {
                reason: format!("value {value} outside domain of {}", v.name),
            })?;
            flat += pos * stride;
        }
        Ok(self.p[flat])
    }

    /// Sums out every variable not named in `keep`; the result's variable order
    /// follows `keep`.
    pub fn marginalize(&self, keep: &[&str]) -> Result<ProbabilityTable> {
        let keep_idx: Vec<usize> = keep
            .iter()
            .map(|name| self.var_index(name))
            .collect::<Result<_>>()?;
        let out_vars: Vec<VariableSpec> = keep_idx.iter().map(|i| self.vars[*i].clone()).collect();
        check_unique_names(&out_vars)?;
        let out_cells = num_cells(&out_vars);
        let out_strides = strides(&out_vars);
        let in_strides = strides(&self.vars);

        let mut p = vec![0.0f64; out_cells];
        let mut counts = self.counts.as_ref().map(|_| vec![0u64; out_cells]);
        for flat in 0..self.p.len() {
            let mut out_flat = 0usize;
            for (k, i) in keep_idx.iter().enumerate() {
                let pos = (flat / in_strides[*i]) % self.vars[*i].domain.len();
                out_flat += pos * out_strides[k];
            }
            p[out_flat] += self.p[flat];
            if let (Some(out), Some(src)) = (counts.as_mut(), self.counts.as_ref()) {
                out[out_flat] += src[flat];
            }
        }
        Ok(ProbabilityTable {
            vars: out_vars,
            p,
            counts,
            n: self.n,
        })
    }

    /// Conditional distributions `P(targets | givens)`, one row per given tuple
    /// with positive probability. Zero-probability given tuples are excluded
    /// and counted; if every given tuple has zero mass the conditioning is
    /// reported as empty.
    pub fn conditional(&self, targets: &[&str], givens: &[&str]) -> Result<ConditionalTable> {
        for t in targets {
            if givens.contains(t) {
                return Err(Error::InvalidTable {
                    reason: format!("variable {t} appears as both target and given"),
                });
            }
        }
        let mut keep: Vec<&str> = givens.to_vec();
        keep.extend_from_slice(targets);
        let reduced = self.marginalize(&keep)?;

        let given_vars: Vec<VariableSpec> = reduced.vars[..givens.len()].to_vec();
        let target_vars: Vec<VariableSpec> = reduced.vars[givens.len()..].to_vec();
        let target_cells = num_cells(&target_vars);
        let given_cells = num_cells(&given_vars);

        let mut rows = Vec::new();
        let mut excluded = 0u64;
        for g in 0..given_cells {
            let base = g * target_cells;
            let mass: f64 = reduced.p[base..base + target_cells].iter().sum();
            let n_given: u64 = reduced
                .counts
                .as_ref()
                .map(|c| c[base..base + target_cells].iter().sum())
                .unwrap_or(0);
            if mass <= 0.0 && n_given == 0 {
                excluded += 1;
                continue;
            }
            let p: Vec<f64> = reduced.p[base..base + target_cells]
                .iter()
                .map(|x| x / mass)
                .collect();
            let mut flat = g;
            let given_values: Vec<i64> = given_vars
                .iter()
                .rev()
                .map(|v| {
                    let pos = flat % v.domain.len();
                    flat /= v.domain.len();
                    v.domain[pos]
                })
                .collect::<Vec<_>>()
                .into_iter()
                .rev()
                .collect();
            rows.push(ConditionalRow {
                given_values,
                p,
                n_given,
                mass,
            });
        }
        if rows.is_empty() {
            return Err(Error::EmptyConditional {
                detail: format!("no given tuple over {givens:?} has positive probability"),
            });
        }
        Ok(ConditionalTable {
            targets: target_vars,
            givens: given_vars,
            rows,
            excluded_zero_rows: excluded,
        })
    }

    /// One row per value tuple: the variable values, the raw count (0 for
    /// analytic tables) and the probability.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for v in &self.vars {
            write!(w, "{},", v.name)?;
        }
        writeln!(w, "count,probability")?;
        for flat in 0..self.p.len() {
            for value in self.values_at(flat) {
                write!(w, "{value},")?;
            }
            let count = self.counts.as_ref().map(|c| c[flat]).unwrap_or(0);
            writeln!(w, "{count},{:e}", self.p[flat])?;
        }
        Ok(())
    }
}

/// Rows of `P(targets | givens)` keyed by the given-value tuples.
#[derive(Clone, Debug)]
pub struct ConditionalTable {
    pub targets: Vec<VariableSpec>,
    pub givens: Vec<VariableSpec>,
    pub rows: Vec<ConditionalRow>,
    pub excluded_zero_rows: u64,
}

#[derive(Clone, Debug)]
pub struct ConditionalRow {
    pub given_values: Vec<i64>,
    /// Distribution over the target cells, row-major over `targets`.
    pub p: Vec<f64>,
    /// Samples in the conditioning cell (0 when the table carries no counts).
    pub n_given: u64,
    /// Probability of the given tuple.
    pub mass: f64,
}

impl ConditionalTable {
    /// Value tuple for a flat target cell index.
    pub fn target_values(&self, mut flat: usize) -> Vec<i64> {
        let mut out = vec![0i64; self.targets.len()];
        for (k, v) in self.targets.iter().enumerate().rev() {
            out[k] = v.domain[flat % v.domain.len()];
            flat /= v.domain.len();
        }
        out
    }

    pub fn num_target_cells(&self) -> usize {
        self.targets.iter().map(|v| v.domain.len()).product()
    }
}
