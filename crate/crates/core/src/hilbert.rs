//! Exact complex linear algebra for the four-dimensional bipartite qubit space.
//!
//! Everything here is small and dense on purpose: amplitudes are `[Complex64; 4]`
//! indexed by `2 * i_a + i_b`, observables are 2x2 Hermitian matrices built from
//! unit Bloch vectors, and the joint eigenbasis is the set of four factorized
//! common eigenvectors of the two local observables, ordered by overlap with a
//! fixed reference state.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

/// A single complex amplitude.
pub type Amplitude = Complex64;

/// Tolerance on squared-norm deviations accepted by the validating constructors.
pub const NORM_TOL: f64 = 1e-12;

/// Amplitudes smaller than this are treated as zero when fixing the global phase.
const PHASE_EPS: f64 = 1e-12;

/// Overlaps closer than this are treated as ties and ordered by outcome label.
const TIE_TOL: f64 = 1e-9;

/// Outcome labels in lexicographic order, `(+1, +1)` first.
pub const OUTCOME_PAIRS: [(i8, i8); 4] = [(1, 1), (1, -1), (-1, 1), (-1, -1)];

/// Position of an outcome pair in [`OUTCOME_PAIRS`].
pub const fn outcome_rank(x: i8, y: i8) -> usize {
    (((x < 0) as usize) << 1) | ((y < 0) as usize)
}

/// Normalized pure state of the bipartite system.
///
/// Index convention: amplitude `k = 2 * i_a + i_b` multiplies `|i_a i_b>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateVector {
    amps: [Amplitude; 4],
}

impl StateVector {
    /// Validates finiteness and unit norm (within [`NORM_TOL`]).
    pub fn new(amps: [Amplitude; 4]) -> Result<Self> {
        for a in &amps {
            if !a.re.is_finite() || !a.im.is_finite() {
                return Err(Error::NonFinite {
                    what: "state vector",
                });
            }
        }
        let norm_sq: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm_sq });
        }
        Ok(Self { amps })
    }

    /// Rescales an arbitrary nonzero amplitude list to unit norm.
    pub fn normalized(amps: [Amplitude; 4]) -> Result<Self> {
        for a in &amps {
            if !a.re.is_finite() || !a.im.is_finite() {
                return Err(Error::NonFinite {
                    what: "state vector",
                });
            }
        }
        let norm_sq: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if norm_sq <= 0.0 {
            return Err(Error::NotNormalized { norm_sq });
        }
        let inv = 1.0 / norm_sq.sqrt();
        Ok(Self {
            amps: amps.map(|a| a * inv),
        })
    }

    pub(crate) fn from_amps_unchecked(amps: [Amplitude; 4]) -> Self {
        Self { amps }
    }

    /// Computational basis vector `|i_a i_b>` with `k = 2 * i_a + i_b`.
    pub fn computational(k: usize) -> Self {
        let mut amps = [Complex64::ZERO; 4];
        amps[k] = Complex64::ONE;
        Self { amps }
    }

    /// The maximally entangled state `(|01> - |10>)/sqrt(2)`.
    pub fn singlet() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            amps: [
                Complex64::ZERO,
                Complex64::new(h, 0.0),
                Complex64::new(-h, 0.0),
                Complex64::ZERO,
            ],
        }
    }

    /// Product state `u (x) v` of two single-qubit amplitude pairs.
    pub fn product(u: [Amplitude; 2], v: [Amplitude; 2]) -> Result<Self> {
        Self::new([u[0] * v[0], u[0] * v[1], u[1] * v[0], u[1] * v[1]])
    }

    pub fn amps(&self) -> &[Amplitude; 4] {
        &self.amps
    }

    pub fn amp(&self, k: usize) -> Amplitude {
        self.amps[k]
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Draws a state from the unitarily invariant (Haar) measure.
    pub fn haar_random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let mut amps = [Complex64::ZERO; 4];
            for a in &mut amps {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                *a = Complex64::new(re, im);
            }
            let norm_sq: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
            if norm_sq > 1e-12 {
                let inv = 1.0 / norm_sq.sqrt();
                return Self {
                    amps: amps.map(|a| a * inv),
                };
            }
        }
    }

    /// True when the two vectors coincide up to a global phase.
    pub fn ray_equal(&self, other: &StateVector, tol: f64) -> bool {
        overlap(self, other) >= 1.0 - tol
    }

    /// Exact bitwise equality of the amplitude arrays.
    pub fn bit_equal(&self, other: &StateVector) -> bool {
        self.amps
            .iter()
            .zip(other.amps.iter())
            .all(|(a, b)| a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits())
    }
}

impl Serialize for StateVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: [[f64; 2]; 4] = self.amps.map(|a| [a.re, a.im]);
        pairs.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for StateVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let pairs = <[[f64; 2]; 4]>::deserialize(deserializer)?;
        StateVector::new(pairs.map(|p| Complex64::new(p[0], p[1])))
            .map_err(|e| D::Error::custom(e.to_string()))
    }
}

/// Squared modulus of the inner product, `|<u|v>|^2`, clamped to `[0, 1]`.
pub fn overlap(u: &StateVector, v: &StateVector) -> f64 {
    u.inner(v).norm_sqr().clamp(0.0, 1.0)
}

/// A measurement direction: a unit vector in R^3.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Setting {
    n: [f64; 3],
}

impl Setting {
    pub fn new(n: [f64; 3]) -> Result<Self> {
        if n.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite { what: "setting" });
        }
        let norm_sq: f64 = n.iter().map(|c| c * c).sum();
        if (norm_sq - 1.0).abs() > NORM_TOL {
            return Err(Error::NonUnitSetting { norm_sq });
        }
        Ok(Self { n })
    }

    /// Direction at polar angle `theta` in the x-z plane.
    pub fn xz(theta: f64) -> Self {
        Self {
            n: [theta.sin(), 0.0, theta.cos()],
        }
    }

    pub fn x() -> Self {
        Self { n: [1.0, 0.0, 0.0] }
    }

    pub fn y() -> Self {
        Self { n: [0.0, 1.0, 0.0] }
    }

    pub fn z() -> Self {
        Self { n: [0.0, 0.0, 1.0] }
    }

    /// Uniformly random direction on the unit sphere.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let v: [f64; 3] = [
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
            ];
            let norm_sq: f64 = v.iter().map(|c| c * c).sum();
            if norm_sq > 1e-12 {
                let inv = 1.0 / norm_sq.sqrt();
                return Self {
                    n: v.map(|c| c * inv),
                };
            }
        }
    }

    pub fn components(&self) -> [f64; 3] {
        self.n
    }

    pub fn dot(&self, other: &Setting) -> f64 {
        self.n
            .iter()
            .zip(other.n.iter())
            .map(|(a, b)| a * b)
            .sum()
    }
}

impl Serialize for Setting {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.n.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Setting {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let n = <[f64; 3]>::deserialize(deserializer)?;
        Setting::new(n).map_err(|e| D::Error::custom(e.to_string()))
    }
}

/// A single-qubit +-1-valued observable `n . sigma`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Observable {
    m: [[Complex64; 2]; 2],
}

impl Observable {
    /// Builds `a . sigma = a_x sigma_x + a_y sigma_y + a_z sigma_z`.
    pub fn from_setting(a: Setting) -> Self {
        let [x, y, z] = a.components();
        Self {
            m: [
                [Complex64::new(z, 0.0), Complex64::new(x, -y)],
                [Complex64::new(x, y), Complex64::new(-z, 0.0)],
            ],
        }
    }

    pub fn matrix(&self) -> &[[Complex64; 2]; 2] {
        &self.m
    }

    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }
}

/// Normalized eigenvector of `n . sigma` for eigenvalue `sign`, phase-fixed.
///
/// With `theta = acos(n_z)` and `phi = atan2(n_y, n_x)` the +1 eigenvector is
/// `(cos(theta/2), e^{i phi} sin(theta/2))` and the -1 eigenvector is
/// `(-e^{-i phi} sin(theta/2), cos(theta/2))`.
fn bloch_eigenvector(n: [f64; 3], sign: i8) -> [Complex64; 2] {
    let theta = n[2].clamp(-1.0, 1.0).acos();
    let phi = n[1].atan2(n[0]);
    let (c, s) = ((0.5 * theta).cos(), (0.5 * theta).sin());
    let phase = Complex64::from_polar(1.0, phi);
    let v = if sign > 0 {
        [Complex64::new(c, 0.0), phase * s]
    } else {
        [phase.conj() * (-s), Complex64::new(c, 0.0)]
    };
    phase_fix_2(v)
}

fn phase_fix_2(v: [Complex64; 2]) -> [Complex64; 2] {
    for k in 0..2 {
        let m = v[k].norm();
        if m > PHASE_EPS {
            let rot = v[k].conj() / m;
            let mut out = [v[0] * rot, v[1] * rot];
            out[k] = Complex64::new(m, 0.0);
            return out;
        }
    }
    v
}

fn phase_fix_4(mut amps: [Complex64; 4]) -> [Complex64; 4] {
    for k in 0..4 {
        let m = amps[k].norm();
        if m > PHASE_EPS {
            let rot = amps[k].conj() / m;
            for a in &mut amps {
                *a *= rot;
            }
            amps[k] = Complex64::new(m, 0.0);
            return amps;
        }
    }
    amps
}

/// The four factorized common eigenvectors of `a . sigma` and `b . sigma`,
/// ordered by descending overlap with a reference state.
///
/// Ties (overlaps within 1e-9 of each other) are broken lexicographically on
/// the outcome labels, `(+1, +1)` first, which makes the construction a pure
/// deterministic function of its inputs.
#[derive(Clone, Debug)]
pub struct JointEigenbasis {
    vectors: [StateVector; 4],
    outcomes: [(i8, i8); 4],
    reference: StateVector,
}

impl JointEigenbasis {
    pub fn new(a: Setting, b: Setting, reference: StateVector) -> Self {
        let mut entries: Vec<(usize, StateVector, f64)> = Vec::with_capacity(4);
        for (rank, &(x, y)) in OUTCOME_PAIRS.iter().enumerate() {
            let ua = bloch_eigenvector(a.components(), x);
            let ub = bloch_eigenvector(b.components(), y);
            let amps = phase_fix_4([
                ua[0] * ub[0],
                ua[0] * ub[1],
                ua[1] * ub[0],
                ua[1] * ub[1],
            ]);
            let vec = StateVector::from_amps_unchecked(amps);
            let o = overlap(&vec, &reference);
            entries.push((rank, vec, o));
        }
        // Descending by overlap; the initial order is already lexicographic on
        // labels, so a stable sort keeps exact ties in label order.
        entries.sort_by(|a, b| b.2.total_cmp(&a.2));
        // Regroup near-ties (distinct rounding of mathematically equal values)
        // and order each group by label rank.
        let mut start = 0;
        while start < 4 {
            let head = entries[start].2;
            let mut end = start + 1;
            while end < 4 && head - entries[end].2 <= TIE_TOL {
                end += 1;
            }
            entries[start..end].sort_by_key(|e| e.0);
            start = end;
        }
        let vectors = [entries[0].1, entries[1].1, entries[2].1, entries[3].1];
        let outcomes = [
            OUTCOME_PAIRS[entries[0].0],
            OUTCOME_PAIRS[entries[1].0],
            OUTCOME_PAIRS[entries[2].0],
            OUTCOME_PAIRS[entries[3].0],
        ];
        Self {
            vectors,
            outcomes,
            reference,
        }
    }

    pub fn vector(&self, j: usize) -> &StateVector {
        &self.vectors[j]
    }

    pub fn vectors(&self) -> &[StateVector; 4] {
        &self.vectors
    }

    /// Outcome pair `(X_j, Y_j)` attached to the j-th eigenvector.
    pub fn outcome(&self, j: usize) -> (i8, i8) {
        self.outcomes[j]
    }

    pub fn outcomes(&self) -> &[(i8, i8); 4] {
        &self.outcomes
    }

    pub fn reference(&self) -> &StateVector {
        &self.reference
    }

    /// `|<phi_j|reference>|^2` in basis order.
    pub fn reference_overlaps(&self) -> [f64; 4] {
        self.overlaps_with(&self.reference)
    }

    /// `|<phi_j|phi>|^2` in basis order.
    pub fn overlaps_with(&self, phi: &StateVector) -> [f64; 4] {
        [
            overlap(&self.vectors[0], phi),
            overlap(&self.vectors[1], phi),
            overlap(&self.vectors[2], phi),
            overlap(&self.vectors[3], phi),
        ]
    }

    /// Cumulative sums of `overlaps_with(phi)` with the last entry clamped to 1,
    /// so that the four half-open intervals partition `[0, 1)`.
    pub fn cumulative_weights(&self, phi: &StateVector) -> [f64; 4] {
        let o = self.overlaps_with(phi);
        let mut cum = [0.0; 4];
        let mut acc = 0.0;
        for (c, w) in cum.iter_mut().zip(o.iter()) {
            acc += w;
            *c = acc;
        }
        cum[3] = 1.0;
        cum
    }

    /// Same basis with the vectors and labels reordered by `perm`.
    ///
    /// Useful for checking that statistical statements do not depend on how
    /// overlap ties were broken. The permuted basis no longer satisfies the
    /// descending-overlap ordering in general.
    pub fn permuted(&self, perm: [usize; 4]) -> Self {
        Self {
            vectors: perm.map(|j| self.vectors[j]),
            outcomes: perm.map(|j| self.outcomes[j]),
            reference: self.reference,
        }
    }
}
