//! Run reports and their canonical byte representation.
//!
//! Reports must be byte-identical across re-runs with the same manifest and
//! seed, so every float is written with a fixed 17-significant-digit format
//! and wall-clock timings never enter the report (they go to stderr).

use std::io;

use beable_core::audit::AuditReport;
use beable_core::epistemic::{BornCheckSummary, OverlapCertificate};
use serde::Serialize;
use serde_json::ser::Formatter;

use crate::manifest::Expectation;
use crate::CliError;

#[derive(Clone, Copy, Debug)]
struct CanonicalFormatter;

impl Formatter for CanonicalFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.7e}")
    }
}

/// Serializes with canonical float formatting and a trailing newline.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, CanonicalFormatter);
    value
        .serialize(&mut ser)
        .map_err(|e| CliError::validation(format!("serialization failed: {e}")))?;
    out.push(b'\n');
    Ok(out)
}

/// Formats a float the same way reports do (17 significant digits).
pub fn canonical_float(value: f64) -> String {
    format!("{value:.16e}")
}

#[derive(Clone, Debug, Serialize)]
pub struct BornPairReport {
    pub a_index: usize,
    pub b_index: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Sampling summary; absent for the analytic point-mass identity.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampled: Option<BornCheckSummary>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BornReport {
    pub pairs: Vec<BornPairReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChshReport {
    pub oracle: f64,
    pub monte_carlo: f64,
    pub standard_error: f64,
    pub deviation_sigmas: f64,
    pub samples_per_pair: u64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExpectationResult {
    pub check: String,
    pub expect: Expectation,
    pub met: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct AuditOutcome {
    pub report: AuditReport,
    pub expectations: Vec<ExpectationResult>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ZmapReport {
    pub points: usize,
}

/// The single report every command emits.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    pub manifest_digest: String,
    pub seed: u64,
    pub model: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub born: Option<BornReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chsh: Option<ChshReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub overlap: Option<OverlapCertificate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub audit: Option<AuditOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zmap: Option<ZmapReport>,
    pub artifacts: Vec<String>,
}

impl RunReport {
    pub fn new(command: &str, manifest_digest: String, seed: u64, model: &str) -> Self {
        Self {
            command: command.to_string(),
            manifest_digest,
            seed,
            model: model.to_string(),
            pass: true,
            born: None,
            chsh: None,
            overlap: None,
            audit: None,
            zmap: None,
            artifacts: Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_floats_parse_back_exactly() {
        for v in [
            0.0,
            -0.0,
            0.5,
            1.0 / 3.0,
            2.0 * std::f64::consts::SQRT_2,
            1e-300,
            -4.409214372646e-1,
            f64::MIN_POSITIVE,
        ] {
            let s = canonical_float(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(v.to_bits(), back.to_bits(), "{v} -> {s}");
        }
    }

    #[test]
    fn canonical_json_floats_are_fixed_width() {
        #[derive(Serialize)]
        struct Probe {
            x: f64,
        }
        let bytes = to_canonical_json(&Probe { x: 0.5 }).unwrap();
        assert_eq!(
            String::from_utf8(bytes).unwrap(),
            "{\"x\":5.0000000000000000e-1}\n"
        );
    }
}
