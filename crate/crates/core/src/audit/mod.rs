//! Estimation of joint conditional-probability tables from model runs and
//! statistical checks of the free-choice, free-will, non-signalling, staticity
//! and parameter-independence conditions, together with their logical
//! relations.

mod checks;
mod experiment;
pub mod fixtures;
mod implications;
mod table;

pub use checks::{
    check_fr, check_fw, check_ns2, check_pi, check_st, Condition, ConditionVerdict,
    TolerancePolicy,
};
pub use experiment::{
    run_experiment, ChannelKind, DisclosureChannel, ExperimentConfig, LambdaBinning,
};
pub use implications::{
    derive_ns_from_free_choice, verify_implication_fr, ConverseReport, ImplicationReport,
    NsDerivationReport,
};
pub use table::{ConditionalRow, ConditionalTable, ProbabilityTable, VariableSpec};

use serde::Serialize;

/// Everything one audited run produced: the per-condition verdicts and, when
/// requested, the implication and derivation reports.
#[derive(Clone, Debug, Serialize)]
pub struct AuditReport {
    pub seed: u64,
    pub samples: u64,
    pub verdicts: Vec<ConditionVerdict>,
    pub implication: Option<ImplicationReport>,
    pub ns_derivation: Option<NsDerivationReport>,
}
