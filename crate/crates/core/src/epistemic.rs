//! The psi-epistemic redistribution of the generalized Bell model.
//!
//! States whose reference overlap clears the cap threshold 3/4 donate the
//! probability mass of their initial tau-segment `[0, z(psi))` to a shared
//! region of the ontic space; since every state of reality in that region is
//! assigned the top basis index regardless of the settings, the outcome
//! statistics are unchanged while distinct preparations acquire overlapping
//! supports.

use std::sync::OnceLock;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::hilbert::{overlap, JointEigenbasis, Setting, StateVector};
use crate::ontic::{assigned_index, sample_ontic, OnticState};
use crate::{Error, Result};

/// Reference-overlap threshold above which a state donates mass.
pub const CAP_THRESHOLD: f64 = 0.75;

/// Reference-overlap level constraining the infimum that defines `z`.
pub const CONSTRAINT_LEVEL: f64 = 0.25;

/// Supremum of `z`, attained at the reference state itself.
pub const Z_MAX: f64 = 0.25;

/// Iteration cap for the rejection loop; exceeding it signals misconfiguration.
pub const REJECTION_CAP: u64 = 10_000_000;

/// Closed form of the constrained infimum
/// `z(phi) = inf { |<v|phi>|^2 : |<v|reference>|^2 >= 1/4 }`.
///
/// Restricting to the plane spanned by the reference and `phi`, with
/// `c^2 = |<reference|phi>|^2`: the infimum is 0 when `c^2 <= 3/4` (the
/// orthogonal direction is feasible) and `(c - sqrt(3) sqrt(1 - c^2))^2 / 4`
/// otherwise (the minimum sits on the constraint boundary).
pub fn z(phi: &StateVector, reference: &StateVector) -> f64 {
    z_from_cap_overlap(overlap(reference, phi))
}

/// Same closed form, parameterized directly by `c^2 = |<reference|phi>|^2`.
pub fn z_from_cap_overlap(c2: f64) -> f64 {
    if c2 <= CAP_THRESHOLD {
        return 0.0;
    }
    let c = c2.sqrt();
    let s = (1.0 - c2).max(0.0).sqrt();
    let d = c - 3.0f64.sqrt() * s;
    0.25 * d * d
}

/// Membership in the shared redistribution region: reference overlap strictly
/// above the cap threshold and `tau < z(phi)`.
pub fn in_e0(lambda: &OnticState, reference: &StateVector) -> bool {
    let c2 = overlap(lambda.phi(), reference);
    c2 > CAP_THRESHOLD && lambda.tau() < z_from_cap_overlap(c2)
}

/// Orthonormal basis of the subspace orthogonal to `reference`, chosen
/// deterministically by repeated largest-residual Gram-Schmidt over the
/// computational basis.
fn orthonormal_complement(reference: &StateVector) -> [StateVector; 3] {
    let mut chosen: Vec<StateVector> = vec![*reference];
    while chosen.len() < 4 {
        let mut best: Option<([Complex64; 4], f64)> = None;
        for k in 0..4 {
            let e = StateVector::computational(k);
            let mut res = *e.amps();
            for u in &chosen {
                let c = u.inner(&e);
                for (r, ua) in res.iter_mut().zip(u.amps().iter()) {
                    *r -= c * ua;
                }
            }
            let norm_sq: f64 = res.iter().map(|c| c.norm_sqr()).sum();
            if best.as_ref().is_none_or(|(_, n)| norm_sq > *n) {
                best = Some((res, norm_sq));
            }
        }
        let (res, norm_sq) = best.expect("four candidates were scanned");
        let inv = 1.0 / norm_sq.sqrt();
        chosen.push(StateVector::from_amps_unchecked(res.map(|c| c * inv)));
    }
    [chosen[1], chosen[2], chosen[3]]
}

/// Builds `sqrt(t) e^{i theta} reference + sqrt(1-t) w` with `w` a unit vector
/// in the orthogonal complement.
fn assemble_cap_state(
    reference: &StateVector,
    complement: &[StateVector; 3],
    t: f64,
    theta: f64,
    w_coeffs: [Complex64; 3],
) -> StateVector {
    let norm_sq: f64 = w_coeffs.iter().map(|c| c.norm_sqr()).sum();
    let scale = ((1.0 - t).max(0.0) / norm_sq).sqrt();
    let par = Complex64::from_polar(t.sqrt(), theta);
    let mut amps = [Complex64::ZERO; 4];
    for (k, amp) in amps.iter_mut().enumerate() {
        *amp = par * reference.amp(k)
            + scale
                * (w_coeffs[0] * complement[0].amp(k)
                    + w_coeffs[1] * complement[1].amp(k)
                    + w_coeffs[2] * complement[2].amp(k));
    }
    StateVector::normalized(amps).expect("cap state has unit norm")
}

fn gaussian_coeffs<R: Rng + ?Sized>(rng: &mut R) -> [Complex64; 3] {
    loop {
        let mut c = [Complex64::ZERO; 3];
        for v in &mut c {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *v = Complex64::new(re, im);
        }
        if c.iter().map(|v| v.norm_sqr()).sum::<f64>() > 1e-12 {
            return c;
        }
    }
}

/// Unnormalized density of the cap-overlap marginal of the region's uniform
/// measure: Haar weight `3 (1-t)^2` times the tau-thickness `z(t)`.
fn cap_overlap_weight(t: f64) -> f64 {
    let r = 1.0 - t;
    3.0 * r * r * z_from_cap_overlap(t)
}

fn envelope() -> f64 {
    static ENVELOPE: OnceLock<f64> = OnceLock::new();
    *ENVELOPE.get_or_init(|| {
        let mut max: f64 = 0.0;
        for i in 0..=200_000 {
            let t = CAP_THRESHOLD + 0.25 * (i as f64 / 200_000.0);
            max = max.max(cap_overlap_weight(t));
        }
        max * (1.0 + 1e-6)
    })
}

/// Samples states of reality uniformly from the redistribution region under the
/// Haar-times-Lebesgue measure, tracking rejection statistics.
///
/// A Haar draw factorizes into an independent reference-overlap marginal and a
/// uniform orthogonal direction, so the rejection runs on the scalar overlap
/// first and the full state is only assembled for accepted draws. This is
/// distributionally identical to rejecting whole Haar draws (the naive variant
/// is kept in [`crate::reference`] and compared in the tests) and several
/// hundred times cheaper.
#[derive(Clone, Debug)]
pub struct E0Sampler {
    reference: StateVector,
    complement: [StateVector; 3],
    attempts: u64,
    accepted: u64,
}

impl E0Sampler {
    pub fn new(reference: StateVector) -> Self {
        Self {
            reference,
            complement: orthonormal_complement(&reference),
            attempts: 0,
            accepted: 0,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<OnticState> {
        let bound = envelope();
        for _ in 0..REJECTION_CAP {
            self.attempts += 1;
            let t = CAP_THRESHOLD + 0.25 * rng.random::<f64>();
            if rng.random::<f64>() * bound >= cap_overlap_weight(t) {
                continue;
            }
            let theta = std::f64::consts::TAU * rng.random::<f64>();
            let phi = assemble_cap_state(
                &self.reference,
                &self.complement,
                t,
                theta,
                gaussian_coeffs(rng),
            );
            let zv = z(&phi, &self.reference);
            if zv <= 0.0 {
                continue;
            }
            let tau = loop {
                let tau = rng.random::<f64>() * zv;
                if tau < zv {
                    break tau;
                }
            };
            self.accepted += 1;
            return OnticState::new(phi, tau);
        }
        Err(Error::RejectionCapExceeded { cap: REJECTION_CAP })
    }

    pub fn attempts(&self) -> u64 {
        self.attempts
    }

    pub fn accepted(&self) -> u64 {
        self.accepted
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.attempts == 0 {
            0.0
        } else {
            self.accepted as f64 / self.attempts as f64
        }
    }
}

/// One-shot draw from the uniform distribution over the redistribution region.
pub fn sample_e0_uniform<R: Rng + ?Sized>(
    reference: &StateVector,
    rng: &mut R,
) -> Result<OnticState> {
    E0Sampler::new(*reference).sample(rng)
}

/// Draws from the redistributed state distribution of the preparation `psi`.
///
/// Below the cap this is exactly the point-mass model. Above it, the initial
/// tau-segment of thickness `z(psi)` is traded for the shared region: with
/// probability `z(psi)` a uniform draw from the region, otherwise `(psi, tau)`
/// with `tau` uniform on `[z(psi), 1)`. The two branch weights add to 1 exactly.
pub fn sample_epistemic<R: Rng + ?Sized>(
    psi: &StateVector,
    reference: &StateVector,
    rng: &mut R,
) -> Result<OnticState> {
    let mut region = E0Sampler::new(*reference);
    sample_epistemic_with(&mut region, psi, rng)
}

/// Same draw as [`sample_epistemic`], reusing a caller-held region sampler so
/// hot loops avoid rebuilding the orthogonal complement on every call.
pub fn sample_epistemic_with<R: Rng + ?Sized>(
    region: &mut E0Sampler,
    psi: &StateVector,
    rng: &mut R,
) -> Result<OnticState> {
    let c2 = overlap(psi, &region.reference);
    if c2 <= CAP_THRESHOLD {
        return Ok(sample_ontic(psi, rng));
    }
    let zpsi = z_from_cap_overlap(c2);
    if rng.random::<f64>() < zpsi {
        region.sample(rng)
    } else {
        let tau = zpsi + (1.0 - zpsi) * rng.random::<f64>();
        OnticState::new(*psi, tau)
    }
}

/// Outcome of a sampled Born-consistency run for one `(psi, a, b)` triple.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BornCheckSummary {
    pub samples: u64,
    pub counts: [u64; 4],
    pub expected: [f64; 4],
    pub max_deviation: f64,
    pub tolerance_at_worst: f64,
    pub worst_cell: usize,
    pub pass: bool,
}

/// Empirical frequencies of the assigned basis index over `n` redistributed
/// draws, checked cell by cell against `|<phi_j|psi>|^2` at `sigmas` binomial
/// standard deviations.
pub fn epistemic_born_check<R: Rng + ?Sized>(
    psi: &StateVector,
    a: Setting,
    b: Setting,
    reference: &StateVector,
    n: u64,
    sigmas: f64,
    rng: &mut R,
) -> Result<BornCheckSummary> {
    if n == 0 {
        return Err(Error::ZeroSamples);
    }
    let basis = JointEigenbasis::new(a, b, *reference);
    let expected = basis.overlaps_with(psi);
    let psi_cum = basis.cumulative_weights(psi);

    let c2 = overlap(psi, reference);
    let zpsi = z_from_cap_overlap(c2);
    let mut region = E0Sampler::new(*reference);

    let mut counts = [0u64; 4];
    for _ in 0..n {
        let j = if c2 <= CAP_THRESHOLD {
            crate::ontic::index_from_cumulative(&psi_cum, rng.random::<f64>())
        } else if rng.random::<f64>() < zpsi {
            let lambda = region.sample(rng)?;
            assigned_index(&lambda, &basis)
        } else {
            let tau = zpsi + (1.0 - zpsi) * rng.random::<f64>();
            crate::ontic::index_from_cumulative(&psi_cum, tau)
        };
        counts[j] += 1;
    }

    let mut max_deviation = 0.0;
    let mut tolerance_at_worst = 0.0;
    let mut worst_cell = 0;
    let mut worst_margin = f64::NEG_INFINITY;
    let mut pass = true;
    for j in 0..4 {
        let freq = counts[j] as f64 / n as f64;
        let p = expected[j];
        let dev = (freq - p).abs();
        let tol = sigmas * (p * (1.0 - p) / n as f64).sqrt();
        if dev > tol {
            pass = false;
        }
        let margin = dev - tol;
        if margin > worst_margin || (margin == worst_margin && dev > max_deviation) {
            worst_margin = margin;
            max_deviation = dev;
            tolerance_at_worst = tol;
            worst_cell = j;
        }
    }
    Ok(BornCheckSummary {
        samples: n,
        counts,
        expected,
        max_deviation,
        tolerance_at_worst,
        worst_cell,
        pass,
    })
}

/// A certified lower bound on the shared support of two preparations.
#[derive(Clone, Debug, Serialize)]
pub struct OverlapCertificate {
    pub psi1: StateVector,
    pub psi2: StateVector,
    pub cap_overlap1: f64,
    pub cap_overlap2: f64,
    pub z1: f64,
    pub z2: f64,
    pub lower_bound: f64,
    pub witness: String,
}

/// Certifies overlapping supports for two ray-distinct preparations.
///
/// When both states sit strictly inside the cap, each places the mass `z(psi)`
/// on the identical uniform distribution over the shared region, so the total
/// variation overlap of the two state distributions is at least
/// `min(z(psi1), z(psi2))`. Outside the cap the certificate is empty (a zero
/// bound, not a disproof).
pub fn overlap_certificate(
    psi1: &StateVector,
    psi2: &StateVector,
    reference: &StateVector,
) -> Result<OverlapCertificate> {
    if psi1.ray_equal(psi2, 1e-12) {
        return Err(Error::RayEqualStates);
    }
    let c1 = overlap(psi1, reference);
    let c2 = overlap(psi2, reference);
    let z1 = z_from_cap_overlap(c1);
    let z2 = z_from_cap_overlap(c2);
    let both_in_cap = c1 > CAP_THRESHOLD && c2 > CAP_THRESHOLD;
    let lower_bound = if both_in_cap { z1.min(z2) } else { 0.0 };
    let witness = if both_in_cap {
        format!(
            "both states donate mass to the shared region: z1 = {z1:.6}, z2 = {z2:.6}; \
             common component min(z1, z2) = {lower_bound:.6} of identical uniform law"
        )
    } else {
        "at least one state lies outside the cap; no shared component is certified".to_string()
    };
    Ok(OverlapCertificate {
        psi1: *psi1,
        psi2: *psi2,
        cap_overlap1: c1,
        cap_overlap2: c2,
        z1,
        z2,
        lower_bound,
        witness,
    })
}

/// Random state with reference overlap strictly inside the cap, uniform in the
/// overlap parameter and Haar-uniform in the orthogonal direction.
pub fn random_in_cap<R: Rng + ?Sized>(reference: &StateVector, rng: &mut R) -> StateVector {
    let complement = orthonormal_complement(reference);
    let t = loop {
        let t = CAP_THRESHOLD + 0.25 * rng.random::<f64>();
        if t > CAP_THRESHOLD + 1e-9 {
            break t;
        }
    };
    let theta = std::f64::consts::TAU * rng.random::<f64>();
    assemble_cap_state(reference, &complement, t, theta, gaussian_coeffs(rng))
}
