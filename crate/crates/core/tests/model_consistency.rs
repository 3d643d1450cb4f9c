//! Monte Carlo consistency of both hidden-variable models against the
//! Born-rule oracle, plus the structural properties of the shared
//! redistribution region.

use beable_core::epistemic::{
    self, epistemic_born_check, in_e0, overlap_certificate, random_in_cap, sample_epistemic,
    E0Sampler,
};
use beable_core::hilbert::{overlap, JointEigenbasis, Setting, StateVector};
use beable_core::ontic::{assigned_index, outcomes, sample_ontic};
use beable_core::quantum::born_distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn reference00() -> StateVector {
    StateVector::computational(0)
}

#[test]
fn ontic_outcome_frequencies_match_born_statistics() {
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    let reference = reference00();
    let n = 100_000usize;
    for case in 0..5 {
        let psi = StateVector::haar_random(&mut rng);
        let a = Setting::random(&mut rng);
        let b = Setting::random(&mut rng);
        let oracle = born_distribution(&psi, a, b, &reference);
        let mut counts = [0u64; 4];
        for _ in 0..n {
            let lambda = sample_ontic(&psi, &mut rng);
            let (x, y) = outcomes(&lambda, a, b, &reference);
            counts[beable_core::hilbert::outcome_rank(x, y)] += 1;
        }
        for ((pair, p), count) in oracle.iter().zip(counts.iter()) {
            let freq = *count as f64 / n as f64;
            let tol = 4.0 * (p * (1.0 - p) / n as f64).sqrt();
            assert!(
                (freq - p).abs() <= tol,
                "case {case}, pair {pair:?}: {freq} vs {p} (tol {tol})"
            );
        }
    }
}

#[test]
fn epistemic_outcome_frequencies_match_born_statistics_in_the_cap() {
    let mut rng = ChaCha8Rng::seed_from_u64(1002);
    let reference = reference00();
    for case in 0..8 {
        let psi = random_in_cap(&reference, &mut rng);
        let a = Setting::random(&mut rng);
        let b = Setting::random(&mut rng);
        let summary =
            epistemic_born_check(&psi, a, b, &reference, 100_000, 4.0, &mut rng).unwrap();
        assert!(summary.pass, "case {case}: {summary:?}");
    }
}

#[test]
fn redistribution_region_outcomes_are_setting_independent() {
    let reference = reference00();
    let mut rng = ChaCha8Rng::seed_from_u64(1003);
    let pairs: Vec<(Setting, Setting)> = (0..30)
        .map(|_| (Setting::random(&mut rng), Setting::random(&mut rng)))
        .collect();
    let bases: Vec<JointEigenbasis> = pairs
        .iter()
        .map(|(a, b)| JointEigenbasis::new(*a, *b, reference))
        .collect();
    let mut region = E0Sampler::new(reference);
    for _ in 0..2_000 {
        let lambda = region.sample(&mut rng).unwrap();
        for basis in &bases {
            assert_eq!(assigned_index(&lambda, basis), 0);
        }
    }
}

#[test]
fn epistemic_preparations_share_region_states_while_ontic_ones_do_not() {
    let reference = reference00();
    let mut rng = ChaCha8Rng::seed_from_u64(1004);
    let psi1 = random_in_cap(&reference, &mut rng);
    let psi2 = random_in_cap(&reference, &mut rng);
    assert!(!psi1.ray_equal(&psi2, 1e-9));

    let cert = overlap_certificate(&psi1, &psi2, &reference).unwrap();
    assert!(cert.lower_bound > 0.0);

    // Ontic baseline: the state component never leaves the preparation ray.
    for _ in 0..20_000 {
        let l1 = sample_ontic(&psi1, &mut rng);
        assert!(l1.phi().ray_equal(&psi1, 1e-12));
        assert!(!l1.phi().ray_equal(&psi2, 1e-9));
    }

    // Redistributed model: both preparations emit region states, and region
    // states drawn for one preparation are in-distribution for the other
    // (the shared component is the same uniform law; compare the reference
    // overlap histograms of the two restricted ensembles).
    let bins = 6usize;
    let mut h1 = vec![0u64; bins];
    let mut h2 = vec![0u64; bins];
    let mut n1 = 0u64;
    let mut n2 = 0u64;
    for _ in 0..400_000 {
        let l1 = sample_epistemic(&psi1, &reference, &mut rng).unwrap();
        if in_e0(&l1, &reference) && !l1.phi().bit_equal(&psi1) {
            let c2 = overlap(l1.phi(), &reference);
            h1[(((c2 - 0.75) / 0.25) * bins as f64).min(bins as f64 - 1.0) as usize] += 1;
            n1 += 1;
        }
        let l2 = sample_epistemic(&psi2, &reference, &mut rng).unwrap();
        if in_e0(&l2, &reference) && !l2.phi().bit_equal(&psi2) {
            let c2 = overlap(l2.phi(), &reference);
            h2[(((c2 - 0.75) / 0.25) * bins as f64).min(bins as f64 - 1.0) as usize] += 1;
            n2 += 1;
        }
    }
    assert!(n1 > 1_000 && n2 > 1_000, "too few region draws: {n1}, {n2}");
    for b in 0..bins {
        let p1 = h1[b] as f64 / n1 as f64;
        let p2 = h2[b] as f64 / n2 as f64;
        let sigma = (p1 * (1.0 - p1) / n1 as f64 + p2 * (1.0 - p2) / n2 as f64).sqrt();
        assert!(
            (p1 - p2).abs() <= 4.0 * sigma.max(1e-3),
            "bin {b}: {p1} vs {p2}"
        );
    }
}

#[test]
fn mixture_weights_sum_to_one_exactly() {
    let reference = reference00();
    let mut rng = ChaCha8Rng::seed_from_u64(1005);
    for _ in 0..1_000 {
        let psi = random_in_cap(&reference, &mut rng);
        let z = epistemic::z(&psi, &reference);
        assert_eq!((1.0 - z) + z, 1.0);
    }
}
