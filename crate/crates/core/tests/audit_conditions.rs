//! Condition checks on tabulated model runs and on exact fixture tables,
//! including the implication between free will, non-signalling, staticity and
//! the full free-choice condition.

use beable_core::audit::{
    check_fr, check_fw, check_ns2, check_pi, check_st, derive_ns_from_free_choice, fixtures,
    run_experiment, verify_implication_fr, ChannelKind, DisclosureChannel, ExperimentConfig,
    LambdaBinning, ProbabilityTable, TolerancePolicy, VariableSpec,
};
use beable_core::hilbert::{Setting, StateVector};
use beable_core::ontic::{ModelKind, OnticSampler};
use beable_core::quantum::born_distribution;
use rand::SeedableRng;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

fn reference00() -> StateVector {
    StateVector::computational(0)
}

fn binomial() -> TolerancePolicy {
    TolerancePolicy::Binomial {
        sigmas: 4.0,
        min_cell: 100,
    }
}

fn exact(epsilon: f64) -> TolerancePolicy {
    TolerancePolicy::Exact { epsilon }
}

/// The standard audited scenario: CHSH-style menus, disclosure of the hidden
/// coordinate at the granularity selected by C, hidden-state bin attached.
fn scenario(psi: StateVector, samples: u64) -> ExperimentConfig {
    ExperimentConfig {
        sampler: OnticSampler::new(psi, reference00(), ModelKind::Ontic),
        menu_a: vec![Setting::xz(0.0), Setting::xz(FRAC_PI_2)],
        menu_b: vec![Setting::xz(FRAC_PI_4), Setting::xz(3.0 * FRAC_PI_4)],
        prior_a: None,
        prior_b: None,
        prior_c: None,
        channel: DisclosureChannel::new(ChannelKind::TauBits, vec![6, 3]).unwrap(),
        samples,
        lambda: Some(LambdaBinning {
            bits: 6,
            include_e0: false,
        }),
    }
}

#[test]
fn singlet_audit_fw_and_ns_pass_while_pi_fr_st_fail() {
    let table = run_experiment(&scenario(StateVector::singlet(), 400_000), 2024, 4).unwrap();

    let fw = check_fw(&table, binomial()).unwrap();
    assert!(fw.decided && fw.pass, "free will: {fw:?}");

    let ns = check_ns2(&table, binomial()).unwrap();
    assert!(ns.decided && ns.pass, "non-signalling: {ns:?}");

    let pi = check_pi(&table, binomial()).unwrap();
    assert!(pi.decided && !pi.pass, "parameter independence: {pi:?}");
    assert!(pi.sigma_level >= 5.0, "weak witness: {pi:?}");

    let fr = check_fr(&table, binomial()).unwrap();
    assert!(fr.decided && !fr.pass, "free choice: {fr:?}");
    assert!(fr.sigma_level >= 5.0, "weak witness: {fr:?}");

    let st = check_st(&table, binomial()).unwrap();
    assert!(st.decided && !st.pass, "staticity: {st:?}");
    assert!(st.sigma_level >= 5.0, "weak witness: {st:?}");

    // The disclosure setting itself is drawn independently, so the C-only
    // clause (disclosure output projected out) passes.
    let c_only = table.conditional(&["C"], &["A", "B", "X", "Y"]).unwrap();
    let c_marg = table.conditional(&["C"], &[]).unwrap();
    for row in &c_only.rows {
        for cell in 0..2 {
            let p = row.p[cell];
            let q = c_marg.rows[0].p[cell];
            let sigma = (p * (1.0 - p) / row.n_given as f64
                + q * (1.0 - q) / table.samples() as f64)
                .sqrt();
            assert!((p - q).abs() <= 4.0 * sigma, "C clause: {p} vs {q}");
        }
    }

    // Premise staticity fails here, so the forward implication is vacuous.
    let implication = verify_implication_fr(&table, binomial(), false).unwrap();
    assert!(!implication.premises_pass);
    assert!(implication.forward_consistent);
}

#[test]
fn product_state_audit_satisfies_parameter_independence() {
    let table = run_experiment(
        &scenario(StateVector::computational(0), 400_000),
        2025,
        4,
    )
    .unwrap();
    let pi = check_pi(&table, binomial()).unwrap();
    assert!(pi.decided && pi.pass, "{pi:?}");
    let ns = check_ns2(&table, binomial()).unwrap();
    assert!(ns.decided && ns.pass, "{ns:?}");
}

#[test]
fn collapsing_the_hidden_bin_reduces_pi_to_observed_non_signalling() {
    let mut cfg = scenario(StateVector::singlet(), 200_000);
    cfg.lambda = Some(LambdaBinning {
        bits: 0,
        include_e0: false,
    });
    let table = run_experiment(&cfg, 2026, 4).unwrap();
    let pi = check_pi(&table, binomial()).unwrap();
    assert!(pi.decided && pi.pass, "{pi:?}");
}

#[test]
fn constant_disclosure_restores_free_choice() {
    let mut cfg = scenario(StateVector::singlet(), 200_000);
    cfg.channel = DisclosureChannel::constant();
    let table = run_experiment(&cfg, 2027, 4).unwrap();
    let fr = check_fr(&table, binomial()).unwrap();
    assert!(fr.decided && fr.pass, "{fr:?}");
    let st = check_st(&table, binomial()).unwrap();
    assert!(st.decided && st.pass, "{st:?}");

    // All premises hold on this table, so the implication is exercised
    // non-vacuously at the derived tolerance.
    let implication = verify_implication_fr(&table, binomial(), false).unwrap();
    assert!(implication.premises_pass, "{implication:?}");
    assert!(implication.fr_within_derived, "{implication:?}");
    assert!(implication.forward_consistent);
}

/// Analytic table for the two-wing scenario with a constant disclosure output
/// and two disclosure settings, built directly from Born probabilities.
fn quantum_constant_z_table(psi: &StateVector) -> ProbabilityTable {
    let menu_a = [Setting::xz(0.0), Setting::xz(FRAC_PI_2)];
    let menu_b = [Setting::xz(FRAC_PI_4), Setting::xz(3.0 * FRAC_PI_4)];
    let vars = vec![
        VariableSpec::indexed("A", 2).unwrap(),
        VariableSpec::indexed("B", 2).unwrap(),
        VariableSpec::indexed("C", 2).unwrap(),
        VariableSpec::sign("X"),
        VariableSpec::sign("Y"),
        VariableSpec::indexed("Z", 1).unwrap(),
    ];
    let mut p = vec![0.0f64; 2 * 2 * 2 * 2 * 2];
    for (ai, a) in menu_a.iter().enumerate() {
        for (bi, b) in menu_b.iter().enumerate() {
            let d = born_distribution(psi, *a, *b, &reference00());
            for ci in 0..2usize {
                for ((x, y), prob) in d.iter() {
                    let px = (x > 0) as usize;
                    let py = (y > 0) as usize;
                    let idx = (((ai * 2 + bi) * 2 + ci) * 2 + px) * 2 + py;
                    p[idx] = 0.25 * 0.5 * prob;
                }
            }
        }
    }
    ProbabilityTable::from_probabilities(vars, p).unwrap()
}

#[test]
fn quantum_table_with_constant_disclosure_satisfies_the_implication() {
    let table = quantum_constant_z_table(&StateVector::singlet());
    let implication = verify_implication_fr(&table, exact(1e-9), false).unwrap();
    assert!(implication.premises_pass, "{implication:?}");
    assert!(implication.fr.pass, "{implication:?}");
    assert!(implication.fr_within_derived);
    assert!(implication.forward_consistent);
}


/// Checks `P(target | rest) = P(target)` on a counts table by integer
/// cross-multiplication, with no floating point involved.
fn exact_independence_holds(
    table: &ProbabilityTable,
    target: &str,
    givens: &[&str],
) -> bool {
    let n = table.samples();
    let joint = {
        let mut keep = vec![target];
        keep.extend_from_slice(givens);
        table.marginalize(&keep).unwrap()
    };
    let t_marg = table.marginalize(&[target]).unwrap();
    let g_marg = table.marginalize(givens).unwrap();
    for flat in 0..joint.num_cells() {
        let values = joint.values_at(flat);
        let joint_count = (joint.probabilities()[flat] * n as f64).round() as u128;
        let t_count = (t_marg.probability(&values[..1]).unwrap() * n as f64).round() as u128;
        let g_count = (g_marg.probability(&values[1..]).unwrap() * n as f64).round() as u128;
        if joint_count * n as u128 != t_count * g_count {
            return false;
        }
    }
    true
}

#[test]
fn exact_fixture_satisfies_the_implication_with_zero_tolerance() {
    let table = fixtures::local_deterministic();

    // Independent integer-arithmetic verification of the three free-choice
    // clauses before trusting the floating-point checker.
    assert!(exact_independence_holds(&table, "A", &["B", "C", "Y", "Z"]));
    assert!(exact_independence_holds(&table, "B", &["A", "C", "X", "Z"]));
    assert!(exact_independence_holds(&table, "C", &["A", "B", "X", "Y"]));

    let implication = verify_implication_fr(&table, exact(0.0), false).unwrap();
    assert!(implication.premises_pass, "{implication:?}");
    assert_eq!(implication.fw.max_deviation, 0.0);
    assert_eq!(implication.ns.max_deviation, 0.0);
    assert_eq!(implication.st.max_deviation, 0.0);
    assert_eq!(implication.fr.max_deviation, 0.0);
    assert!(implication.fr_within_derived);
    assert_eq!(implication.derived_tolerance, 0.0);
}



#[test]
fn converse_holds_when_outcomes_carry_no_hidden_state_information() {
    let table = fixtures::noise_full_disclosure();
    let implication = verify_implication_fr(&table, exact(0.0), true).unwrap();
    assert!(implication.fr.pass, "{implication:?}");
    assert!(implication.premises_pass);
    let converse = implication.converse.unwrap();
    assert!(converse.fr_pass && converse.fw_pass && converse.ns_pass && converse.st_pass);
    assert!(converse.consistent);
}

#[test]
fn converse_fails_for_deterministic_outcomes_under_full_disclosure() {
    let table = fixtures::deterministic_full_disclosure();
    assert!(exact_independence_holds(&table, "A", &["B", "C", "Y", "Z"]));
    assert!(exact_independence_holds(&table, "B", &["A", "C", "X", "Z"]));
    assert!(exact_independence_holds(&table, "C", &["A", "B", "X", "Y"]));
    let implication = verify_implication_fr(&table, exact(0.0), true).unwrap();
    assert!(implication.fr.pass, "{implication:?}");
    assert!(!implication.st.pass, "{implication:?}");
    let converse = implication.converse.unwrap();
    assert!(!converse.consistent);
}

#[test]
fn superdeterministic_table_fails_free_will_and_free_choice() {
    let table = fixtures::superdeterministic();
    let fw = check_fw(&table, exact(0.0)).unwrap();
    assert!(!fw.pass);
    let fr = check_fr(&table, exact(0.0)).unwrap();
    assert!(!fr.pass);
}

#[test]
fn ns_derivation_succeeds_on_an_independent_settings_quantum_table() {
    let table = quantum_constant_z_table(&StateVector::computational(0));
    let report = derive_ns_from_free_choice(&table, exact(1e-9)).unwrap();
    assert!(report.both_hold, "{report:?}");
    assert!(report.asserted);
    assert!(report.ns_within_derived, "{report:?}");
    assert!(report.consistent);
}

#[test]
fn ns_derivation_is_exact_on_the_local_fixture() {
    let table = fixtures::local_deterministic();
    let report = derive_ns_from_free_choice(&table, exact(0.0)).unwrap();
    assert!(report.both_hold, "{report:?}");
    assert_eq!(report.factorization_joint_dev, 0.0);
    assert_eq!(report.factorization_local_dev, 0.0);
    assert_eq!(report.ns_deviation, 0.0);
    assert!(report.ns_within_derived);
    assert!(report.consistent);
}

#[test]
fn ns_derivation_refuses_to_assert_on_a_signalling_table() {
    // X copies the remote setting B; the settings themselves stay independent,
    // so the chain factorization holds but the local one fails.
    let table = fixtures::signalling();
    let report = derive_ns_from_free_choice(&table, exact(0.0)).unwrap();
    assert!(report.factorization_joint_holds, "{report:?}");
    assert!(!report.factorization_local_holds, "{report:?}");
    assert!(!report.asserted);
    assert!(report.consistent, "vacuously consistent: {report:?}");
}

#[test]
fn epistemic_model_tables_are_also_non_signalling() {
    // An in-cap preparation exercises the redistribution branch; the observed
    // statistics still satisfy free will and non-signalling.
    let reference = reference00();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
    let psi = beable_core::epistemic::random_in_cap(&reference, &mut rng);
    let mut cfg = scenario(psi, 300_000);
    cfg.sampler = OnticSampler::new(psi, reference, ModelKind::Epistemic);
    cfg.lambda = Some(LambdaBinning {
        bits: 4,
        include_e0: true,
    });
    cfg.channel = DisclosureChannel::new(ChannelKind::Composite, vec![4, 2]).unwrap();
    let table = run_experiment(&cfg, 2028, 4).unwrap();
    let ns = check_ns2(&table, binomial()).unwrap();
    assert!(ns.decided && ns.pass, "{ns:?}");
    let fw = check_fw(&table, binomial()).unwrap();
    assert!(fw.decided && fw.pass, "{fw:?}");
}

#[test]
fn two_seed_runs_agree_on_the_free_will_deviation_scale() {
    let cfg = scenario(StateVector::singlet(), 200_000);
    let v1 = check_fw(&run_experiment(&cfg, 31, 4).unwrap(), binomial()).unwrap();
    let v2 = check_fw(&run_experiment(&cfg, 32, 4).unwrap(), binomial()).unwrap();
    assert!(v1.pass && v2.pass);
    // Both max deviations sit within their own four-sigma tolerances, so they
    // agree with zero to the same resolution.
    assert!(v1.max_deviation <= v1.tolerance);
    assert!(v2.max_deviation <= v2.tolerance);
}
