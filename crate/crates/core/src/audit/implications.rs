//! Logical relations between the audited conditions, evaluated on finite
//! tables.
//!
//! Forward direction: if the settings are free, the observed level is
//! non-signalling and the disclosure is static, then the full free-choice
//! condition holds. The finite-sample transfer is explicit: writing
//! `eps_fw`, `eps_ns`, `eps_st` for the premise allowances and
//! `delta = (1+eps_fw)(1+eps_ns)(1+eps_st) - 1`, the setting-clause deviations
//! are bounded by `delta * (1 + |dom|) / P(conditioning cell)` and the
//! disclosure clause by `|dom Z| * eps_st`, plus the per-cell statistical
//! allowance of the estimate itself.
//!
//! The converse (free choice implying the three premises) is evaluated as an
//! observational consistency report on tables whose disclosure output reveals
//! the hidden state completely. It is not a finite-table tautology: it
//! additionally needs outcomes to carry no information about the hidden state
//! beyond the observed statistics, which holds for models reproducing quantum
//! statistics but can fail for deterministic toy tables.

use serde::Serialize;

use super::checks::{
    check_ns2, check_st, finalize, fr_comparisons, fw_comparisons, Condition, ConditionVerdict,
    TolerancePolicy,
};
use super::table::ProbabilityTable;
use crate::{Error, Result};

#[derive(Clone, Debug, Serialize)]
pub struct ConverseReport {
    pub fr_pass: bool,
    pub fw_pass: bool,
    pub ns_pass: bool,
    pub st_pass: bool,
    /// If the full free-choice condition holds, all three premises must hold.
    pub consistent: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ImplicationReport {
    pub fw: ConditionVerdict,
    pub ns: ConditionVerdict,
    pub st: ConditionVerdict,
    pub premises_pass: bool,
    pub fr: ConditionVerdict,
    /// Transfer bound at the worst free-choice comparison.
    pub derived_tolerance: f64,
    pub fr_within_derived: bool,
    /// Premises holding implies free choice within the derived tolerance.
    pub forward_consistent: bool,
    pub converse: Option<ConverseReport>,
}

/// Checks the premises (free will, non-signalling, staticity), the full
/// free-choice condition, and whether the forward implication holds at the
/// derived tolerance. With `full_disclosure` the converse is evaluated as well.
pub fn verify_implication_fr(
    table: &ProbabilityTable,
    policy: TolerancePolicy,
    full_disclosure: bool,
) -> Result<ImplicationReport> {
    if matches!(policy, TolerancePolicy::Binomial { .. }) && !table.has_counts() {
        return Err(Error::InvalidTable {
            reason: "binomial tolerance requires a table with raw counts".into(),
        });
    }
    // Free will at the level the table supports: with the hidden-state bin when
    // present, otherwise the settings-only factorization (which is all the
    // forward implication needs).
    let with_lambda = table.var_index("L").is_ok();
    let fw = finalize(Condition::Fw, &fw_comparisons(table, with_lambda)?, policy);
    // The transfer bound uses the settings-marginal factorization directly;
    // reusing the bin-level deviations would understate it by up to a factor
    // of the bin count.
    let fw_marginal = if with_lambda {
        finalize(Condition::Fw, &fw_comparisons(table, false)?, policy)
    } else {
        fw.clone()
    };
    let ns = check_ns2(table, policy)?;
    let st = check_st(table, policy)?;
    let premises_pass =
        fw.decided && fw.pass && ns.decided && ns.pass && st.decided && st.pass;

    let detail = fr_comparisons(table)?;
    let plain: Vec<_> = detail.comparisons.iter().map(|(c, _)| c.clone()).collect();
    let fr = finalize(Condition::Fr, &plain, policy);

    let eps_fw = fw_marginal.max_deviation + fw_marginal.tolerance;
    let eps_ns = ns.max_deviation + ns.tolerance;
    let eps_st = st.max_deviation + st.tolerance;
    let delta = (1.0 + eps_fw) * (1.0 + eps_ns) * (1.0 + eps_st) - 1.0;

    let mut fr_within_derived = true;
    let mut derived_tolerance = 0.0f64;
    let mut worst_margin = f64::NEG_INFINITY;
    for (c, clause) in &detail.comparisons {
        let slack = match policy {
            TolerancePolicy::Exact { epsilon } => epsilon,
            TolerancePolicy::Binomial { sigmas, min_cell } => {
                if c.n_min < min_cell {
                    continue;
                }
                sigmas * c.sigma
            }
        };
        let structural = match clause {
            1 => delta * (1.0 + detail.dom_a as f64) / c.mass_min.max(f64::MIN_POSITIVE),
            2 => delta * (1.0 + detail.dom_b as f64) / c.mass_min.max(f64::MIN_POSITIVE),
            _ => detail.dom_z as f64 * eps_st,
        };
        let bound = structural + slack;
        if c.deviation > bound {
            fr_within_derived = false;
        }
        let margin = c.deviation - bound;
        if margin > worst_margin {
            worst_margin = margin;
            derived_tolerance = bound;
        }
    }

    let forward_consistent = !premises_pass || fr_within_derived;
    let converse = full_disclosure.then(|| {
        let fr_pass = fr.decided && fr.pass;
        ConverseReport {
            fr_pass,
            fw_pass: fw.decided && fw.pass,
            ns_pass: ns.decided && ns.pass,
            st_pass: st.decided && st.pass,
            consistent: !fr_pass || premises_pass,
        }
    });

    Ok(ImplicationReport {
        fw,
        ns,
        st,
        premises_pass,
        fr,
        derived_tolerance,
        fr_within_derived,
        forward_consistent,
        converse,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct NsDerivationReport {
    /// max |P(a,b,x) - P(x|a,b) P(a) P(b)|: the chain factorization with free
    /// settings.
    pub factorization_joint_dev: f64,
    pub factorization_joint_tol: f64,
    pub factorization_joint_holds: bool,
    /// max |P(a,b,x) - P(a,x) P(b)|: the remote wing factored out entirely.
    pub factorization_local_dev: f64,
    pub factorization_local_tol: f64,
    pub factorization_local_holds: bool,
    pub both_hold: bool,
    /// max |P(x|a,b) - P(x|a)|.
    pub ns_deviation: f64,
    /// `(eps_local + |dom X| eps_joint) / min P(a,b)` plus statistical slack.
    pub derived_tolerance: f64,
    pub ns_within_derived: bool,
    /// Only asserted when both factorizations hold.
    pub asserted: bool,
    pub consistent: bool,
    pub detail: String,
}

/// Expresses `P(A,B,X)` through the two factorizations licensed by free
/// settings choices and, when both hold, derives the non-signalling identity
/// `P(X|A,B) = P(X|A)` with an explicit tolerance transfer.
pub fn derive_ns_from_free_choice(
    table: &ProbabilityTable,
    policy: TolerancePolicy,
) -> Result<NsDerivationReport> {
    if matches!(policy, TolerancePolicy::Binomial { .. }) && !table.has_counts() {
        return Err(Error::InvalidTable {
            reason: "binomial tolerance requires a table with raw counts".into(),
        });
    }
    let joint = table.marginalize(&["A", "B", "X"])?;
    let n = table.samples();
    let marg_a = table.marginalize(&["A"])?;
    let marg_b = table.marginalize(&["B"])?;
    let marg_ab = table.marginalize(&["A", "B"])?;
    let marg_ax = table.marginalize(&["A", "X"])?;
    let cond_ab = table.conditional(&["X"], &["A", "B"])?;
    let cond_a = table.conditional(&["X"], &["A"])?;

    let slack = |sigma: f64| match policy {
        TolerancePolicy::Exact { epsilon } => epsilon,
        TolerancePolicy::Binomial { sigmas, .. } => sigmas * sigma,
    };
    let binom_sigma = |p: f64, m: u64| {
        if m == 0 {
            0.0
        } else {
            ((p * (1.0 - p)).max(0.0) / m as f64).sqrt()
        }
    };
    // Variance scale at whichever of the empirical cell and its null value is
    // less extreme, so empty cells do not zero out the tolerance.
    let null_sigma = |p: f64, q: f64, m: u64| {
        if m == 0 {
            0.0
        } else {
            let v = (p * (1.0 - p)).max(q * (1.0 - q)).max(0.0);
            (v / m as f64).sqrt()
        }
    };

    let mut joint_dev = 0.0f64;
    let mut joint_tol = 0.0f64;
    let mut local_dev = 0.0f64;
    let mut local_tol = 0.0f64;
    let mut detail = String::new();
    for flat in 0..joint.num_cells() {
        let values = joint.values_at(flat);
        let (a, b, x) = (values[0], values[1], values[2]);
        let p_abx = joint.probabilities()[flat];
        let pa = marg_a.probability(&[a])?;
        let pb = marg_b.probability(&[b])?;
        let p_ab = marg_ab.probability(&[a, b])?;
        let p_ax = marg_ax.probability(&[a, x])?;
        let p_x_given_ab = if p_ab > 0.0 { p_abx / p_ab } else { 0.0 };

        let null1 = p_x_given_ab * pa * pb;
        let d1 = (p_abx - null1).abs();
        if d1 > joint_dev {
            joint_dev = d1;
            joint_tol = slack(null_sigma(p_abx, null1, n));
            detail = format!("worst joint-factorization cell: A={a},B={b},X={x}");
        }
        let null2 = p_ax * pb;
        let d2 = (p_abx - null2).abs();
        if d2 > local_dev {
            local_dev = d2;
            local_tol = slack(null_sigma(p_abx, null2, n));
        }
    }
    let factorization_joint_holds = joint_dev <= joint_tol;
    let factorization_local_holds = local_dev <= local_tol;
    let both_hold = factorization_joint_holds && factorization_local_holds;

    let dom_x = cond_a.targets[0].domain.len() as f64;
    let mut min_mass_ab = f64::INFINITY;
    let mut ns_deviation = 0.0f64;
    let mut ns_sigma = 0.0f64;
    for row in &cond_ab.rows {
        min_mass_ab = min_mass_ab.min(row.mass);
        let a = row.given_values[0];
        let row_a = cond_a
            .rows
            .iter()
            .find(|r| r.given_values == [a])
            .expect("the A row exists whenever the (A, B) row does");
        for cell in 0..cond_ab.num_target_cells() {
            let dev = (row.p[cell] - row_a.p[cell]).abs();
            if dev > ns_deviation {
                ns_deviation = dev;
                ns_sigma = (binom_sigma(row.p[cell], row.n_given).powi(2)
                    + binom_sigma(row_a.p[cell], row_a.n_given).powi(2))
                .sqrt();
            }
        }
    }
    let eps_joint = joint_dev + joint_tol;
    let eps_local = local_dev + local_tol;
    let derived_tolerance =
        (eps_local + dom_x * eps_joint) / min_mass_ab.max(f64::MIN_POSITIVE) + slack(ns_sigma);
    let ns_within_derived = ns_deviation <= derived_tolerance;
    Ok(NsDerivationReport {
        factorization_joint_dev: joint_dev,
        factorization_joint_tol: joint_tol,
        factorization_joint_holds,
        factorization_local_dev: local_dev,
        factorization_local_tol: local_tol,
        factorization_local_holds,
        both_hold,
        ns_deviation,
        derived_tolerance,
        ns_within_derived,
        asserted: both_hold,
        consistent: !both_hold || ns_within_derived,
        detail,
    })
}
