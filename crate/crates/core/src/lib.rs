//! Hidden-variable models for a pair of two-level systems.
//!
//! The crate provides:
//!
//! * [`hilbert`] — exact 4-dimensional complex linear algebra: states, unit
//!   measurement directions, observables, and the ordered factorized joint
//!   eigenbasis of two local observables.
//! * [`quantum`] — ground-truth Born-rule probabilities, correlation functions
//!   and the four-correlation CHSH combination.
//! * [`ontic`] — the point-mass (psi-ontic) model: a state of reality
//!   `(phi, tau)`, deterministic outcome maps and exact Born consistency.
//! * [`epistemic`] — the redistributed (psi-epistemic) variant: the constrained
//!   infimum `z`, the shared overlap region, its samplers, Born consistency
//!   under sampling and support-overlap certificates.
//! * [`audit`] — conditional probability tables estimated from model runs and
//!   statistical checks of the free-choice, non-signalling, staticity and
//!   parameter-independence conditions and their logical relations.
//! * [`reference`] — slow independent reference computations used by the test
//!   suites to cross-check the fast paths.

pub mod audit;
pub mod epistemic;
pub mod error;
pub mod hilbert;
pub mod ontic;
pub mod quantum;
pub mod reference;

pub use error::Error;
pub use hilbert::{overlap, Amplitude, JointEigenbasis, Observable, Setting, StateVector};
pub use ontic::{ModelKind, OnticSampler, OnticState};
pub use quantum::OutcomeDistribution;

pub type Result<T> = std::result::Result<T, Error>;
