//! Ground-truth Born-rule statistics for local +-1-valued measurements on the
//! bipartite system, used to validate both hidden-variable models.

use serde::Serialize;

use crate::hilbert::{outcome_rank, overlap, JointEigenbasis, Setting, StateVector, OUTCOME_PAIRS};

/// Probabilities of the four outcome pairs `(X, Y)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct OutcomeDistribution {
    p: [f64; 4],
}

impl OutcomeDistribution {
    pub(crate) fn from_ranked(p: [f64; 4]) -> Self {
        Self { p }
    }

    /// Probability of the pair `(x, y)` with `x, y` in `{-1, +1}`.
    pub fn probability(&self, x: i8, y: i8) -> f64 {
        self.p[outcome_rank(x, y)]
    }

    /// Pairs and probabilities in lexicographic label order, `(+1, +1)` first.
    pub fn iter(&self) -> impl Iterator<Item = ((i8, i8), f64)> + '_ {
        OUTCOME_PAIRS.iter().copied().zip(self.p.iter().copied())
    }

    pub fn total(&self) -> f64 {
        self.p.iter().sum()
    }

    /// Marginal distribution of X: `(p(X=+1), p(X=-1))`.
    pub fn marginal_x(&self) -> (f64, f64) {
        (self.p[0] + self.p[1], self.p[2] + self.p[3])
    }

    /// Marginal distribution of Y: `(p(Y=+1), p(Y=-1))`.
    pub fn marginal_y(&self) -> (f64, f64) {
        (self.p[0] + self.p[2], self.p[1] + self.p[3])
    }

    /// `E = sum XY p(X, Y)`.
    pub fn correlation(&self) -> f64 {
        self.p[0] - self.p[1] - self.p[2] + self.p[3]
    }
}

/// Born probabilities `p(X_j, Y_j) = |<phi_j|psi>|^2` over the joint eigenbasis.
pub fn born_distribution(
    psi: &StateVector,
    a: Setting,
    b: Setting,
    reference: &StateVector,
) -> OutcomeDistribution {
    let basis = JointEigenbasis::new(a, b, *reference);
    let mut p = [0.0; 4];
    for j in 0..4 {
        let (x, y) = basis.outcome(j);
        p[outcome_rank(x, y)] = overlap(basis.vector(j), psi);
    }
    OutcomeDistribution::from_ranked(p)
}

/// Quantum correlation function `E(a, b) = sum_j X_j Y_j |<phi_j|psi>|^2`.
pub fn correlation(psi: &StateVector, a: Setting, b: Setting, reference: &StateVector) -> f64 {
    born_distribution(psi, a, b, reference).correlation()
}

/// The four-correlation combination
/// `S = E(a, b) + E(a, b') + E(a', b) - E(a', b')`.
pub fn chsh(
    psi: &StateVector,
    a: Setting,
    a2: Setting,
    b: Setting,
    b2: Setting,
    reference: &StateVector,
) -> f64 {
    correlation(psi, a, b, reference) + correlation(psi, a, b2, reference)
        + correlation(psi, a2, b, reference)
        - correlation(psi, a2, b2, reference)
}

/// Settings in the x-z plane that maximize `|S|` for the singlet under the
/// combination computed by [`chsh`]: `a = 0`, `a' = 90`, `b = 45`, `b' = -45`
/// degrees.
pub fn chsh_optimal_settings() -> (Setting, Setting, Setting, Setting) {
    use std::f64::consts::FRAC_PI_2;
    use std::f64::consts::FRAC_PI_4;
    (
        Setting::xz(0.0),
        Setting::xz(FRAC_PI_2),
        Setting::xz(FRAC_PI_4),
        Setting::xz(-FRAC_PI_4),
    )
}
