//! The generalized Bell model: a complete state of reality `(phi, tau)`, its
//! sampler, the deterministic projector-value assignment and the exact
//! Born-rule consistency check.
//!
//! For a preparation `psi` the model's state distribution is the point mass at
//! `phi = psi` with `tau` uniform on `[0, 1)`. Given local settings, the ordered
//! joint eigenbasis splits `[0, 1)` into four consecutive intervals whose
//! lengths are the squared overlaps `|<phi_j|phi>|^2`; the interval containing
//! `tau` selects the outcome pair. Distinct preparations have disjoint state
//! distributions, which is what makes this variant of the model psi-ontic.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::epistemic;
use crate::hilbert::{JointEigenbasis, Setting, StateVector};
use crate::{Error, Result};

/// The model's complete state of reality.
#[derive(Clone, Copy, Debug)]
pub struct OnticState {
    phi: StateVector,
    tau: f64,
}

impl OnticState {
    pub fn new(phi: StateVector, tau: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&tau) {
            return Err(Error::TauOutOfRange { tau });
        }
        Ok(Self { phi, tau })
    }

    pub fn phi(&self) -> &StateVector {
        &self.phi
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }
}

/// Which state distribution a preparation uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Point mass at the prepared state; disjoint supports for distinct rays.
    Ontic,
    /// Redistributed variant with overlapping supports near the reference state.
    Epistemic,
}

/// A preparation bound to one of the two models.
#[derive(Clone, Copy, Debug)]
pub struct OnticSampler {
    psi: StateVector,
    reference: StateVector,
    kind: ModelKind,
}

impl OnticSampler {
    pub fn new(psi: StateVector, reference: StateVector, kind: ModelKind) -> Self {
        Self {
            psi,
            reference,
            kind,
        }
    }

    pub fn psi(&self) -> &StateVector {
        &self.psi
    }

    pub fn reference(&self) -> &StateVector {
        &self.reference
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<OnticState> {
        match self.kind {
            ModelKind::Ontic => Ok(sample_ontic(&self.psi, rng)),
            ModelKind::Epistemic => epistemic::sample_epistemic(&self.psi, &self.reference, rng),
        }
    }
}

/// Draws `(psi, tau)` with `tau` uniform on `[0, 1)`; the state component
/// equals the preparation exactly.
pub fn sample_ontic<R: Rng + ?Sized>(psi: &StateVector, rng: &mut R) -> OnticState {
    OnticState {
        phi: *psi,
        tau: rng.random::<f64>(),
    }
}

/// Index of the interval of the cumulative overlap partition containing `tau`.
///
/// The last cumulative sum is clamped to exactly 1, so the intervals are
/// pairwise disjoint and cover `[0, 1)` despite rounding in the partial sums.
pub fn assigned_index(lambda: &OnticState, basis: &JointEigenbasis) -> usize {
    let cum = basis.cumulative_weights(&lambda.phi);
    index_from_cumulative(&cum, lambda.tau)
}

pub(crate) fn index_from_cumulative(cum: &[f64; 4], tau: f64) -> usize {
    for (j, c) in cum.iter().enumerate() {
        if tau < *c {
            return j;
        }
    }
    3
}

/// Deterministic outcome pair `(X, Y)` of the two local measurements in the
/// state of reality `lambda`.
pub fn outcomes(
    lambda: &OnticState,
    a: Setting,
    b: Setting,
    reference: &StateVector,
) -> (i8, i8) {
    let basis = JointEigenbasis::new(a, b, *reference);
    basis.outcome(assigned_index(lambda, &basis))
}

/// Largest analytic deviation between the tau-interval lengths and the Born
/// probabilities for the given preparation and settings. No sampling involved;
/// the only possible deviation is rounding in the cumulative sums.
pub fn exact_born_check(
    psi: &StateVector,
    a: Setting,
    b: Setting,
    reference: &StateVector,
) -> f64 {
    let basis = JointEigenbasis::new(a, b, *reference);
    let o = basis.overlaps_with(psi);
    let cum = basis.cumulative_weights(psi);
    let mut worst: f64 = 0.0;
    let mut prev = 0.0;
    for j in 0..4 {
        let length = cum[j] - prev;
        prev = cum[j];
        worst = worst.max((length - o[j]).abs());
    }
    worst
}
