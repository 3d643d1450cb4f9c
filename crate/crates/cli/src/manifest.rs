//! The JSON experiment manifest: everything a run needs, in one schema.

use std::fs;
use std::path::Path;

use beable_core::audit::{
    DisclosureChannel, ExperimentConfig, LambdaBinning, TolerancePolicy,
};
use beable_core::hilbert::{Setting, StateVector};
use beable_core::ontic::{ModelKind, OnticSampler};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::report::to_canonical_json;
use crate::CliError;

/// Which checks an audit run performs and what outcome each is expected to
/// produce. Expected failures are only satisfied by a statistically
/// significant witness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckName {
    Fw,
    Ns2,
    Pi,
    Fr,
    St,
    Implication,
    NsDerivation,
}

impl CheckName {
    pub fn label(&self) -> &'static str {
        match self {
            CheckName::Fw => "FW",
            CheckName::Ns2 => "NS2",
            CheckName::Pi => "PI",
            CheckName::Fr => "FR",
            CheckName::St => "ST",
            CheckName::Implication => "IMPLICATION",
            CheckName::NsDerivation => "NS_DERIVATION",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    #[default]
    Pass,
    Fail,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CheckSpec {
    pub check: CheckName,
    #[serde(default)]
    pub expect: Expectation,
}

fn default_reference() -> StateVector {
    StateVector::computational(0)
}

fn default_channel() -> DisclosureChannel {
    DisclosureChannel::constant()
}

fn default_checks() -> Vec<CheckSpec> {
    [
        (CheckName::Fw, Expectation::Pass),
        (CheckName::Ns2, Expectation::Pass),
        (CheckName::Pi, Expectation::Fail),
        (CheckName::Fr, Expectation::Fail),
        (CheckName::St, Expectation::Fail),
        (CheckName::Implication, Expectation::Pass),
        (CheckName::NsDerivation, Expectation::Pass),
    ]
    .into_iter()
    .map(|(check, expect)| CheckSpec { check, expect })
    .collect()
}

fn default_witness_sigmas() -> f64 {
    5.0
}

/// One experiment, fully specified. Serialization of states is
/// `[[re, im]; 4]`, of settings `[x, y, z]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentManifest {
    pub model: ModelKind,
    pub psi: StateVector,
    /// Second preparation, used by the overlap certificate command.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi2: Option<StateVector>,
    #[serde(default = "default_reference")]
    pub reference: StateVector,
    pub menu_a: Vec<Setting>,
    pub menu_b: Vec<Setting>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior_a: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior_b: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior_c: Option<Vec<f64>>,
    #[serde(default = "default_channel")]
    pub channel: DisclosureChannel,
    /// Hidden-state bin carried by audit tables; omit to drop the L variable.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<LambdaBinning>,
    pub samples: u64,
    pub seed: u64,
    #[serde(default = "default_checks")]
    pub checks: Vec<CheckSpec>,
    #[serde(default)]
    pub tolerance: TolerancePolicy,
    /// Significance (in standard errors) required of an expected-failure
    /// witness.
    #[serde(default = "default_witness_sigmas")]
    pub witness_sigmas: f64,
}

impl ExperimentManifest {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let bytes = fs::read(path)
            .map_err(|e| CliError::validation(format!("cannot read manifest: {e}")))?;
        let manifest: ExperimentManifest = serde_json::from_slice(&bytes)
            .map_err(|e| CliError::validation(format!("invalid manifest: {e}")))?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.menu_a.is_empty() || self.menu_b.is_empty() {
            return Err(CliError::validation("setting menus must not be empty"));
        }
        if self.samples == 0 {
            return Err(CliError::validation("samples must be at least 1"));
        }
        if self.witness_sigmas <= 0.0 {
            return Err(CliError::validation("witness_sigmas must be positive"));
        }
        match self.tolerance {
            TolerancePolicy::Exact { epsilon } => {
                if epsilon < 0.0 {
                    return Err(CliError::validation("tolerance epsilon must be >= 0"));
                }
            }
            TolerancePolicy::Binomial { sigmas, .. } => {
                if sigmas <= 0.0 {
                    return Err(CliError::validation("tolerance sigmas must be positive"));
                }
            }
        }
        Ok(())
    }

    /// Digest of the canonical serialization; embedded in every report.
    pub fn digest(&self) -> Result<String, CliError> {
        let bytes = to_canonical_json(self)?;
        Ok(hex::encode(Sha256::digest(&bytes)))
    }

    pub fn sampler(&self) -> OnticSampler {
        OnticSampler::new(self.psi, self.reference, self.model)
    }

    pub fn model_name(&self) -> &'static str {
        match self.model {
            ModelKind::Ontic => "ontic",
            ModelKind::Epistemic => "epistemic",
        }
    }

    pub fn experiment_config(&self) -> ExperimentConfig {
        ExperimentConfig {
            sampler: self.sampler(),
            menu_a: self.menu_a.clone(),
            menu_b: self.menu_b.clone(),
            prior_a: self.prior_a.clone(),
            prior_b: self.prior_b.clone(),
            prior_c: self.prior_c.clone(),
            channel: self.channel.clone(),
            samples: self.samples,
            lambda: self.lambda,
        }
    }
}
