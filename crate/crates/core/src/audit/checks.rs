//! Statistical checkers for the free-choice, non-signalling, staticity and
//! parameter-independence conditions on estimated probability tables.
//!
//! Every checker reduces to a list of scalar comparisons (a deviation together
//! with an estimated standard error and the conditioning-cell population) and a
//! tolerance policy turns those into a verdict. Sampled tables use the binomial
//! rule `tolerance = sigmas * sqrt(p1 q1 / n1 + p2 q2 / n2)` per comparison,
//! with thinly populated cells flagged inconclusive instead of silently
//! passing; analytic and fixture tables use a fixed epsilon.

use serde::{Deserialize, Serialize};

use super::table::{ConditionalTable, ProbabilityTable};
use crate::{Error, Result};

/// The audited conditions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Condition {
    /// Full free-choice: each setting independent of everything outside its
    /// future light-cone, including the disclosure output.
    Fr,
    /// Free will: the local settings jointly independent of each other and of
    /// the hidden state.
    Fw,
    /// Non-signalling at the observed level: outcome marginals independent of
    /// the remote setting.
    Ns2,
    /// Staticity: the disclosure setting and output independent of the local
    /// settings and outcomes.
    St,
    /// Parameter independence: outcome distributions given the hidden state
    /// depend only on the local setting.
    Pi,
}

impl Condition {
    pub fn name(&self) -> &'static str {
        match self {
            Condition::Fr => "FR",
            Condition::Fw => "FW",
            Condition::Ns2 => "NS2",
            Condition::St => "ST",
            Condition::Pi => "PI",
        }
    }
}

/// How deviations are turned into pass/fail decisions.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TolerancePolicy {
    /// Fixed threshold on every comparison; nothing is inconclusive.
    Exact { epsilon: f64 },
    /// Per-comparison binomial tolerance with a floor on the conditioning-cell
    /// population below which comparisons are flagged inconclusive.
    Binomial { sigmas: f64, min_cell: u64 },
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        TolerancePolicy::Binomial {
            sigmas: 4.0,
            min_cell: 100,
        }
    }
}

/// Verdict for one condition on one table.
#[derive(Clone, Debug, Serialize)]
pub struct ConditionVerdict {
    pub condition: Condition,
    /// Deviation at the worst comparison (by margin over its tolerance).
    pub max_deviation: f64,
    /// Tolerance at that same comparison.
    pub tolerance: f64,
    pub pass: bool,
    /// Deviation in estimated standard errors at the worst comparison.
    pub sigma_level: f64,
    /// Human-readable identification of the worst comparison.
    pub worst: String,
    /// Comparisons that entered the verdict.
    pub evaluated: u64,
    /// Comparisons skipped for insufficient population.
    pub inconclusive: u64,
    /// False when no comparison was conclusive; `pass` is then meaningless.
    pub decided: bool,
}

/// A single scalar comparison extracted from a table.
#[derive(Clone, Debug)]
pub(crate) struct Comparison {
    pub deviation: f64,
    /// Estimated standard error of the deviation (0 for structural identities).
    pub sigma: f64,
    /// Smallest conditioning-cell population involved.
    pub n_min: u64,
    /// Smallest conditioning-cell probability involved.
    pub mass_min: f64,
    pub description: String,
}

const SIGMA_FLOOR: f64 = 1e-12;

pub(crate) fn finalize(
    condition: Condition,
    comparisons: &[Comparison],
    policy: TolerancePolicy,
) -> ConditionVerdict {
    let mut verdict = ConditionVerdict {
        condition,
        max_deviation: 0.0,
        tolerance: match policy {
            TolerancePolicy::Exact { epsilon } => epsilon,
            TolerancePolicy::Binomial { .. } => 0.0,
        },
        pass: true,
        sigma_level: 0.0,
        worst: String::from("no conclusive comparison"),
        evaluated: 0,
        inconclusive: 0,
        decided: false,
    };
    let mut worst_margin = f64::NEG_INFINITY;
    for c in comparisons {
        let tol = match policy {
            TolerancePolicy::Exact { epsilon } => epsilon,
            TolerancePolicy::Binomial { sigmas, min_cell } => {
                if c.n_min < min_cell {
                    verdict.inconclusive += 1;
                    continue;
                }
                sigmas * c.sigma
            }
        };
        verdict.evaluated += 1;
        verdict.decided = true;
        if c.deviation > tol {
            verdict.pass = false;
        }
        let margin = c.deviation - tol;
        if margin > worst_margin || (margin == worst_margin && c.deviation > verdict.max_deviation)
        {
            worst_margin = margin;
            verdict.max_deviation = c.deviation;
            verdict.tolerance = tol;
            verdict.sigma_level = c.deviation / c.sigma.max(SIGMA_FLOOR);
            verdict.worst = c.description.clone();
        }
    }
    if !verdict.decided {
        verdict.pass = false;
    }
    verdict
}

fn require_counts(table: &ProbabilityTable, policy: TolerancePolicy) -> Result<()> {
    if matches!(policy, TolerancePolicy::Binomial { .. }) && !table.has_counts() {
        return Err(Error::InvalidTable {
            reason: "binomial tolerance requires a table with raw counts".into(),
        });
    }
    Ok(())
}

fn binom_var(p: f64, n: u64) -> f64 {
    if n == 0 {
        0.0
    } else {
        (p * (1.0 - p)).max(0.0) / n as f64
    }
}

/// Standard error of `p1 - p2` for two independent relative frequencies under
/// the null hypothesis that they estimate the same probability (pooled
/// two-proportion form). Using the pooled scale keeps empty cells from
/// producing a zero tolerance against a small positive counterpart.
fn pooled_sigma(p1: f64, n1: u64, p2: f64, n2: u64) -> f64 {
    if n1 == 0 || n2 == 0 {
        return 0.0;
    }
    let pool = (p1 * n1 as f64 + p2 * n2 as f64) / (n1 + n2) as f64;
    let v = (pool * (1.0 - pool)).max(0.0);
    (v * (1.0 / n1 as f64 + 1.0 / n2 as f64)).sqrt()
}

/// Standard error for a frequency compared against a null value `q` estimated
/// from a much larger sample: the cell variance is taken at whichever of the
/// two probabilities is less extreme.
fn against_null_sigma(p: f64, n: u64, q: f64, n_total: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let v_cell = (p * (1.0 - p)).max(0.0).max((q * (1.0 - q)).max(0.0));
    (v_cell / n as f64 + binom_var(q, n_total)).sqrt()
}

fn format_given(cond: &ConditionalTable, row: &super::table::ConditionalRow) -> String {
    cond.givens
        .iter()
        .zip(row.given_values.iter())
        .map(|(v, x)| format!("{}={}", v.name, x))
        .collect::<Vec<_>>()
        .join(",")
}

fn format_target(cond: &ConditionalTable, cell: usize) -> String {
    cond.targets
        .iter()
        .zip(cond.target_values(cell).iter())
        .map(|(v, x)| format!("{}={}", v.name, x))
        .collect::<Vec<_>>()
        .join(",")
}

/// Comparisons between rows of `cond` that agree on every given variable
/// except `vary`.
pub(crate) fn compare_across(cond: &ConditionalTable, vary: &str) -> Result<Vec<Comparison>> {
    let vary_idx = cond
        .givens
        .iter()
        .position(|v| v.name == vary)
        .ok_or_else(|| Error::UnknownVariable { name: vary.into() })?;
    let mut out = Vec::new();
    for (i, row1) in cond.rows.iter().enumerate() {
        for row2 in cond.rows.iter().skip(i + 1) {
            let same_rest = row1
                .given_values
                .iter()
                .zip(row2.given_values.iter())
                .enumerate()
                .all(|(k, (a, b))| k == vary_idx || a == b);
            if !same_rest || row1.given_values[vary_idx] == row2.given_values[vary_idx] {
                continue;
            }
            for cell in 0..cond.num_target_cells() {
                let p1 = row1.p[cell];
                let p2 = row2.p[cell];
                let sigma = pooled_sigma(p1, row1.n_given, p2, row2.n_given);
                out.push(Comparison {
                    deviation: (p1 - p2).abs(),
                    sigma,
                    n_min: row1.n_given.min(row2.n_given),
                    mass_min: row1.mass.min(row2.mass),
                    description: format!(
                        "P({} | {}) vs P({} | {})",
                        format_target(cond, cell),
                        format_given(cond, row1),
                        format_target(cond, cell),
                        format_given(cond, row2),
                    ),
                });
            }
        }
    }
    Ok(out)
}

/// Comparisons of each row of `cond` against the unconditional distribution of
/// the same targets.
pub(crate) fn compare_to_marginal(
    table: &ProbabilityTable,
    cond: &ConditionalTable,
    target_names: &[&str],
) -> Result<Vec<Comparison>> {
    let marginal = table.conditional(target_names, &[])?;
    let m_row = &marginal.rows[0];
    let n_total = table.samples();
    let mut out = Vec::new();
    for row in &cond.rows {
        for cell in 0..cond.num_target_cells() {
            let p = row.p[cell];
            let q = m_row.p[cell];
            let sigma = against_null_sigma(p, row.n_given, q, n_total);
            out.push(Comparison {
                deviation: (p - q).abs(),
                sigma,
                n_min: row.n_given,
                mass_min: row.mass,
                description: format!(
                    "P({} | {}) vs P({})",
                    format_target(cond, cell),
                    format_given(cond, row),
                    format_target(cond, cell),
                ),
            });
        }
    }
    Ok(out)
}

/// Non-signalling at the observed level: `P(X|A,B)` must not depend on B and
/// `P(Y|A,B)` must not depend on A.
pub fn check_ns2(table: &ProbabilityTable, policy: TolerancePolicy) -> Result<ConditionVerdict> {
    require_counts(table, policy)?;
    let mut comparisons = compare_across(&table.conditional(&["X"], &["A", "B"])?, "B")?;
    comparisons.extend(compare_across(
        &table.conditional(&["Y"], &["A", "B"])?,
        "A",
    )?);
    Ok(finalize(Condition::Ns2, &comparisons, policy))
}

pub(crate) fn fw_comparisons(
    table: &ProbabilityTable,
    with_lambda: bool,
) -> Result<Vec<Comparison>> {
    let mut comparisons = Vec::new();
    let joint_names: &[&str] = if with_lambda { &["A", "B", "L"] } else { &["A", "B"] };
    let joint = table.marginalize(joint_names)?;
    let n = table.samples();

    // Product form: P(A,B,L) vs P(A) P(B) P(L).
    let marginals: Vec<ProbabilityTable> = joint_names
        .iter()
        .map(|name| table.marginalize(&[name]))
        .collect::<Result<_>>()?;
    for flat in 0..joint.num_cells() {
        let values = joint.values_at(flat);
        let p_joint = joint.probabilities()[flat];
        let mut product = 1.0;
        for (m, v) in marginals.iter().zip(values.iter()) {
            product *= m.probability(&[*v])?;
        }
        // Variance scale at the null value (the product) when the empirical
        // cell is empty or nearly so.
        let v = (p_joint * (1.0 - p_joint))
            .max(product * (1.0 - product))
            .max(0.0);
        let sigma = if n == 0 { 0.0 } else { (v / n as f64).sqrt() };
        let label: Vec<String> = joint_names
            .iter()
            .zip(values.iter())
            .map(|(name, v)| format!("{name}={v}"))
            .collect();
        comparisons.push(Comparison {
            deviation: (p_joint - product).abs(),
            sigma,
            n_min: n,
            mass_min: p_joint,
            description: format!("P({}) vs product of marginals", label.join(",")),
        });
    }

    // Conditional forms: P(A | B, L) = P(A) and P(B | A, L) = P(B).
    let (a_givens, b_givens): (Vec<&str>, Vec<&str>) = if with_lambda {
        (vec!["B", "L"], vec!["A", "L"])
    } else {
        (vec!["B"], vec!["A"])
    };
    comparisons.extend(compare_to_marginal(
        table,
        &table.conditional(&["A"], &a_givens)?,
        &["A"],
    )?);
    comparisons.extend(compare_to_marginal(
        table,
        &table.conditional(&["B"], &b_givens)?,
        &["B"],
    )?);
    Ok(comparisons)
}

/// Free will: settings jointly independent of each other and of the hidden
/// state bin. Requires the table to carry the `L` variable.
pub fn check_fw(table: &ProbabilityTable, policy: TolerancePolicy) -> Result<ConditionVerdict> {
    require_counts(table, policy)?;
    table.var_index("L")?;
    Ok(finalize(Condition::Fw, &fw_comparisons(table, true)?, policy))
}

/// Parameter independence at the resolution of the hidden-state bin: the local
/// outcome distribution given `(settings, L)` must not depend on the remote
/// setting. With a single bin this collapses to the observed-level
/// non-signalling check.
pub fn check_pi(table: &ProbabilityTable, policy: TolerancePolicy) -> Result<ConditionVerdict> {
    require_counts(table, policy)?;
    table.var_index("L")?;
    let mut comparisons = compare_across(&table.conditional(&["X"], &["A", "B", "L"])?, "B")?;
    comparisons.extend(compare_across(
        &table.conditional(&["Y"], &["A", "B", "L"])?,
        "A",
    )?);
    Ok(finalize(Condition::Pi, &comparisons, policy))
}

pub(crate) struct FrDetail {
    /// Comparisons together with the clause they belong to (1, 2 or 3).
    pub comparisons: Vec<(Comparison, u8)>,
    pub dom_a: usize,
    pub dom_b: usize,
    pub dom_z: usize,
}

pub(crate) fn fr_comparisons(table: &ProbabilityTable) -> Result<FrDetail> {
    let dom_a = table.vars()[table.var_index("A")?].domain.len();
    let dom_b = table.vars()[table.var_index("B")?].domain.len();
    let dom_z = table.vars()[table.var_index("Z")?].domain.len();
    let mut comparisons = Vec::new();
    for c in compare_to_marginal(
        table,
        &table.conditional(&["A"], &["B", "C", "Y", "Z"])?,
        &["A"],
    )? {
        comparisons.push((c, 1));
    }
    for c in compare_to_marginal(
        table,
        &table.conditional(&["B"], &["A", "C", "X", "Z"])?,
        &["B"],
    )? {
        comparisons.push((c, 2));
    }
    for c in compare_to_marginal(
        table,
        &table.conditional(&["C"], &["A", "B", "X", "Y"])?,
        &["C"],
    )? {
        comparisons.push((c, 3));
    }
    Ok(FrDetail {
        comparisons,
        dom_a,
        dom_b,
        dom_z,
    })
}

/// Full free-choice over the table `(A, B, C, X, Y, Z)`: each setting
/// distributed independently of every variable outside its future light-cone.
pub fn check_fr(table: &ProbabilityTable, policy: TolerancePolicy) -> Result<ConditionVerdict> {
    require_counts(table, policy)?;
    let detail = fr_comparisons(table)?;
    let comparisons: Vec<Comparison> = detail.comparisons.into_iter().map(|(c, _)| c).collect();
    Ok(finalize(Condition::Fr, &comparisons, policy))
}

/// Staticity: the joint law of the disclosure setting and output must not
/// depend on the local settings and outcomes.
pub fn check_st(table: &ProbabilityTable, policy: TolerancePolicy) -> Result<ConditionVerdict> {
    require_counts(table, policy)?;
    let comparisons = compare_to_marginal(
        table,
        &table.conditional(&["C", "Z"], &["A", "B", "X", "Y"])?,
        &["C", "Z"],
    )?;
    Ok(finalize(Condition::St, &comparisons, policy))
}
