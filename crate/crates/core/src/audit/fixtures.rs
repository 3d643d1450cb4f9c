//! Small exact tables with known condition profiles, used by the test suites.
//!
//! Every fixture is built from integer tallies whose totals are powers of two,
//! so all derived probabilities and conditionals are dyadic rationals and the
//! double-precision table algebra is exact: identities that hold for the
//! fixture hold with deviation exactly zero.

use super::table::{ProbabilityTable, VariableSpec};

fn sign_vars(names: &[(&str, usize)]) -> Vec<VariableSpec> {
    names
        .iter()
        .map(|(name, n)| {
            if *n == 0 {
                VariableSpec::sign(*name)
            } else {
                VariableSpec::indexed(*name, *n).expect("nonempty domain")
            }
        })
        .collect()
}

/// Deterministic local model with free settings: X depends on `(A, L)` only,
/// Y on `(B, L)` only, constant disclosure output. Satisfies free will,
/// non-signalling, staticity and therefore full free choice, all exactly.
pub fn local_deterministic() -> ProbabilityTable {
    let vars = sign_vars(&[
        ("A", 2),
        ("B", 2),
        ("C", 2),
        ("X", 0),
        ("Y", 0),
        ("Z", 1),
        ("L", 4),
    ]);
    let mut counts = vec![0u64; 2 * 2 * 2 * 2 * 2 * 4];
    for a in 0..2usize {
        for b in 0..2usize {
            for c in 0..2usize {
                for l in 0..4usize {
                    let x = (l >> a) & 1;
                    let y = (l >> b) & 1;
                    let idx = ((((a * 2 + b) * 2 + c) * 2 + x) * 2 + y) * 4 + l;
                    counts[idx] += 1;
                }
            }
        }
    }
    ProbabilityTable::from_counts(vars, counts).expect("valid fixture")
}

/// Hidden state fully disclosed, outcomes pure noise: full free choice and all
/// three premises hold, so the converse direction is exercised non-vacuously.
pub fn noise_full_disclosure() -> ProbabilityTable {
    let vars = sign_vars(&[
        ("A", 2),
        ("B", 2),
        ("C", 2),
        ("X", 0),
        ("Y", 0),
        ("Z", 4),
        ("L", 4),
    ]);
    let mut counts = vec![0u64; 2 * 2 * 2 * 2 * 2 * 4 * 4];
    for a in 0..2usize {
        for b in 0..2usize {
            for c in 0..2usize {
                for x in 0..2usize {
                    for y in 0..2usize {
                        for l in 0..4usize {
                            let z = l;
                            let idx =
                                (((((a * 2 + b) * 2 + c) * 2 + x) * 2 + y) * 4 + z) * 4 + l;
                            counts[idx] += 1;
                        }
                    }
                }
            }
        }
    }
    ProbabilityTable::from_counts(vars, counts).expect("valid fixture")
}

/// Hidden state fully disclosed but outcomes deterministic functions of it:
/// every full free-choice clause holds, yet staticity fails because
/// conditioning on the outcomes reveals the hidden state. A counterexample to
/// reading the converse implication as a finite-table tautology.
pub fn deterministic_full_disclosure() -> ProbabilityTable {
    let vars = sign_vars(&[
        ("A", 2),
        ("B", 2),
        ("C", 2),
        ("X", 0),
        ("Y", 0),
        ("Z", 2),
        ("L", 2),
    ]);
    let mut counts = vec![0u64; 2 * 2 * 2 * 2 * 2 * 2 * 2];
    for a in 0..2usize {
        for b in 0..2usize {
            for c in 0..2usize {
                for l in 0..2usize {
                    let x = a ^ l;
                    let y = l;
                    let z = l;
                    let idx = (((((a * 2 + b) * 2 + c) * 2 + x) * 2 + y) * 2 + z) * 2 + l;
                    counts[idx] += 1;
                }
            }
        }
    }
    ProbabilityTable::from_counts(vars, counts).expect("valid fixture")
}

/// The setting A copies the fully disclosed hidden bit: free will and full
/// free choice both fail.
pub fn superdeterministic() -> ProbabilityTable {
    let vars = sign_vars(&[
        ("A", 2),
        ("B", 2),
        ("C", 2),
        ("X", 0),
        ("Y", 0),
        ("Z", 2),
        ("L", 2),
    ]);
    let mut counts = vec![0u64; 2 * 2 * 2 * 2 * 2 * 2 * 2];
    for a in 0..2usize {
        for b in 0..2usize {
            for c in 0..2usize {
                for x in 0..2usize {
                    for y in 0..2usize {
                        let l = a;
                        let z = l;
                        let idx =
                            (((((a * 2 + b) * 2 + c) * 2 + x) * 2 + y) * 2 + z) * 2 + l;
                        counts[idx] += 1;
                    }
                }
            }
        }
    }
    ProbabilityTable::from_counts(vars, counts).expect("valid fixture")
}

/// X copies the remote setting B while the settings stay independent: the
/// observed level signals.
pub fn signalling() -> ProbabilityTable {
    let vars = sign_vars(&[("A", 2), ("B", 2), ("X", 0)]);
    let mut counts = vec![0u64; 8];
    for a in 0..2usize {
        for b in 0..2usize {
            counts[(a * 2 + b) * 2 + b] += 2;
        }
    }
    ProbabilityTable::from_counts(vars, counts).expect("valid fixture")
}
