//! The five subcommands: Born checks, CHSH runs, overlap certificates,
//! condition audits and the infimum profile.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use beable_core::audit::{
    check_fr, check_fw, check_ns2, check_pi, check_st, derive_ns_from_free_choice,
    run_experiment, verify_implication_fr, ChannelKind, ProbabilityTable, TolerancePolicy,
    VariableSpec,
};
use beable_core::epistemic::{
    epistemic_born_check, in_e0, overlap_certificate, sample_epistemic_with, z_from_cap_overlap,
    E0Sampler,
};
use beable_core::hilbert::{overlap, JointEigenbasis};
use beable_core::ontic::{assigned_index, sample_ontic, ModelKind, OnticState};
use beable_core::quantum;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::manifest::{CheckName, CheckSpec, Expectation, ExperimentManifest};
use crate::report::{
    canonical_float, to_canonical_json, AuditOutcome, BornPairReport, BornReport, ChshReport,
    ExpectationResult, RunReport, ZmapReport,
};
use crate::{CliError, TableFormat};

pub struct RunOptions {
    pub seed: u64,
    pub workers: usize,
    pub out_dir: PathBuf,
    pub format: TableFormat,
}

/// Deviation bound of the analytic interval-length identity.
const EXACT_BORN_TOL: f64 = 1e-12;

fn write_artifact(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes)
        .map_err(|e| CliError::validation(format!("cannot write {}: {e}", path.display())))
}

/// Reports list artifacts by file name so their bytes do not depend on where
/// the output directory lives.
fn artifact_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn finish(report: &RunReport, opts: &RunOptions) -> Result<bool, CliError> {
    let path = opts.out_dir.join(format!("{}-report.json", report.command));
    write_artifact(&path, &to_canonical_json(report)?)?;
    println!(
        "{}: {} (report: {})",
        report.command,
        if report.pass { "pass" } else { "FAIL" },
        path.display()
    );
    Ok(report.pass)
}

fn policy_sigmas(policy: TolerancePolicy) -> f64 {
    match policy {
        TolerancePolicy::Binomial { sigmas, .. } => sigmas,
        TolerancePolicy::Exact { .. } => 4.0,
    }
}

pub fn born_check(
    manifest: &ExperimentManifest,
    opts: &RunOptions,
    dump: Option<u64>,
) -> Result<bool, CliError> {
    let mut report = RunReport::new(
        "born-check",
        manifest.digest()?,
        opts.seed,
        manifest.model_name(),
    );
    let mut pairs = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for (ai, a) in manifest.menu_a.iter().enumerate() {
        for (bi, b) in manifest.menu_b.iter().enumerate() {
            let pair = match manifest.model {
                ModelKind::Ontic => {
                    let dev = beable_core::ontic::exact_born_check(
                        &manifest.psi,
                        *a,
                        *b,
                        &manifest.reference,
                    );
                    let tol = match manifest.tolerance {
                        TolerancePolicy::Exact { epsilon } => epsilon,
                        TolerancePolicy::Binomial { .. } => EXACT_BORN_TOL,
                    };
                    BornPairReport {
                        a_index: ai,
                        b_index: bi,
                        max_deviation: dev,
                        tolerance: tol,
                        pass: dev <= tol,
                        sampled: None,
                    }
                }
                ModelKind::Epistemic => {
                    let summary = epistemic_born_check(
                        &manifest.psi,
                        *a,
                        *b,
                        &manifest.reference,
                        manifest.samples,
                        policy_sigmas(manifest.tolerance),
                        &mut rng,
                    )?;
                    let (tol, pass) = match manifest.tolerance {
                        TolerancePolicy::Exact { epsilon } => {
                            (epsilon, summary.max_deviation <= epsilon)
                        }
                        TolerancePolicy::Binomial { .. } => {
                            (summary.tolerance_at_worst, summary.pass)
                        }
                    };
                    BornPairReport {
                        a_index: ai,
                        b_index: bi,
                        max_deviation: summary.max_deviation,
                        tolerance: tol,
                        pass,
                        sampled: Some(summary),
                    }
                }
            };
            println!(
                "born-check pair ({ai}, {bi}): max_deviation={} tolerance={} {}",
                canonical_float(pair.max_deviation),
                canonical_float(pair.tolerance),
                if pair.pass { "pass" } else { "FAIL" }
            );
            report.pass &= pair.pass;
            pairs.push(pair);
        }
    }
    if let Some(n) = dump {
        let path = opts.out_dir.join("samples.csv");
        dump_samples(manifest, opts.seed, n, &path)?;
        report.artifacts.push(artifact_name(&path));
    }
    report.born = Some(BornReport { pairs });
    finish(&report, opts)
}

/// Raw sample dump for offline analysis: the point-mass model emits
/// `tau, j, x, y`, the redistributed one prepends the region membership flag
/// and the reference overlap.
fn dump_samples(
    manifest: &ExperimentManifest,
    seed: u64,
    n: u64,
    path: &Path,
) -> Result<(), CliError> {
    let a = manifest.menu_a[0];
    let b = manifest.menu_b[0];
    let basis = JointEigenbasis::new(a, b, manifest.reference);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    let mut region = E0Sampler::new(manifest.reference);
    let mut out = Vec::new();
    writeln!(
        out,
        "# seed={seed} model={} pair=(0,0)",
        manifest.model_name()
    )
    .ok();
    match manifest.model {
        ModelKind::Ontic => {
            writeln!(out, "tau,j,x,y").ok();
            for _ in 0..n {
                let lambda = sample_ontic(&manifest.psi, &mut rng);
                let j = assigned_index(&lambda, &basis);
                let (x, y) = basis.outcome(j);
                writeln!(out, "{},{j},{x},{y}", canonical_float(lambda.tau())).ok();
            }
        }
        ModelKind::Epistemic => {
            writeln!(out, "in_e0,c2,tau,j,x,y").ok();
            for _ in 0..n {
                let lambda = sample_epistemic_with(&mut region, &manifest.psi, &mut rng)?;
                let j = assigned_index(&lambda, &basis);
                let (x, y) = basis.outcome(j);
                writeln!(
                    out,
                    "{},{},{},{j},{x},{y}",
                    in_e0(&lambda, &manifest.reference) as u8,
                    canonical_float(overlap(lambda.phi(), &manifest.reference)),
                    canonical_float(lambda.tau()),
                )
                .ok();
            }
        }
    }
    write_artifact(path, &out)
}

fn mc_correlation(
    manifest: &ExperimentManifest,
    a: beable_core::Setting,
    b: beable_core::Setting,
    n: u64,
    rng: &mut ChaCha8Rng,
    region: &mut E0Sampler,
) -> Result<f64, CliError> {
    let basis = JointEigenbasis::new(a, b, manifest.reference);
    let mut sum = 0i64;
    for _ in 0..n {
        let lambda: OnticState = match manifest.model {
            ModelKind::Ontic => sample_ontic(&manifest.psi, rng),
            ModelKind::Epistemic => sample_epistemic_with(region, &manifest.psi, rng)?,
        };
        let (x, y) = basis.outcome(assigned_index(&lambda, &basis));
        sum += (x as i64) * (y as i64);
    }
    Ok(sum as f64 / n as f64)
}

pub fn chsh(manifest: &ExperimentManifest, opts: &RunOptions) -> Result<bool, CliError> {
    if manifest.menu_a.len() < 2 || manifest.menu_b.len() < 2 {
        return Err(CliError::validation(
            "the chsh command needs two settings in each menu",
        ));
    }
    let (a, a2) = (manifest.menu_a[0], manifest.menu_a[1]);
    let (b, b2) = (manifest.menu_b[0], manifest.menu_b[1]);
    let oracle = quantum::chsh(&manifest.psi, a, a2, b, b2, &manifest.reference);

    let n = (manifest.samples / 4).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut region = E0Sampler::new(manifest.reference);
    let mut s_mc = 0.0;
    let mut variance = 0.0;
    for (i, (sa, sb)) in [(a, b), (a, b2), (a2, b), (a2, b2)].into_iter().enumerate() {
        let e = mc_correlation(manifest, sa, sb, n, &mut rng, &mut region)?;
        let signed = if i == 3 { -e } else { e };
        s_mc += signed;
        variance += (1.0 - e * e).max(0.0) / n as f64;
    }
    let se = variance.sqrt();
    let deviation = (s_mc - oracle).abs();
    let pass = match manifest.tolerance {
        TolerancePolicy::Exact { epsilon } => deviation <= epsilon,
        TolerancePolicy::Binomial { sigmas, .. } => deviation <= sigmas * se,
    };
    println!(
        "chsh: oracle={} monte_carlo={} se={} {}",
        canonical_float(oracle),
        canonical_float(s_mc),
        canonical_float(se),
        if pass { "pass" } else { "FAIL" }
    );
    let mut report = RunReport::new("chsh", manifest.digest()?, opts.seed, manifest.model_name());
    report.pass = pass;
    report.chsh = Some(ChshReport {
        oracle,
        monte_carlo: s_mc,
        standard_error: se,
        deviation_sigmas: deviation / se.max(1e-300),
        samples_per_pair: n,
        pass,
    });
    finish(&report, opts)
}

pub fn overlap_cmd(manifest: &ExperimentManifest, opts: &RunOptions) -> Result<bool, CliError> {
    let psi2 = manifest
        .psi2
        .ok_or_else(|| CliError::validation("the overlap command needs the psi2 field"))?;
    let cert = overlap_certificate(&manifest.psi, &psi2, &manifest.reference)
        .map_err(|e| CliError::validation(e.to_string()))?;
    println!(
        "overlap: lower_bound={} ({})",
        canonical_float(cert.lower_bound),
        cert.witness
    );
    let zpath = opts.out_dir.join("zprofile.csv");
    write_artifact(&zpath, &zmap_csv(512))?;
    let mut report = RunReport::new(
        "overlap",
        manifest.digest()?,
        opts.seed,
        manifest.model_name(),
    );
    report.overlap = Some(cert);
    report.artifacts.push(artifact_name(&zpath));
    finish(&report, opts)
}

#[derive(Serialize)]
struct TableCell {
    values: Vec<i64>,
    count: u64,
    probability: f64,
}

#[derive(Serialize)]
struct TableJson {
    variables: Vec<VariableSpec>,
    samples: u64,
    cells: Vec<TableCell>,
}

fn table_json(table: &ProbabilityTable) -> TableJson {
    TableJson {
        variables: table.vars().to_vec(),
        samples: table.samples(),
        cells: (0..table.num_cells())
            .map(|flat| TableCell {
                values: table.values_at(flat),
                count: (table.probabilities()[flat] * table.samples() as f64).round() as u64,
                probability: table.probabilities()[flat],
            })
            .collect(),
    }
}

/// The converse of the implication is only meaningful when the disclosure
/// output refines the hidden-state bin.
fn discloses_fully(manifest: &ExperimentManifest) -> bool {
    let Some(lambda) = manifest.lambda else {
        return false;
    };
    if lambda.include_e0 {
        return false;
    }
    matches!(
        manifest.channel.kind,
        ChannelKind::TauBits | ChannelKind::Composite
    ) && manifest.channel.menu.iter().all(|b| *b >= lambda.bits)
}

pub fn audit(manifest: &ExperimentManifest, opts: &RunOptions) -> Result<bool, CliError> {
    let cfg = manifest.experiment_config();
    let table = run_experiment(&cfg, opts.seed, opts.workers)?;

    let table_path = match opts.format {
        TableFormat::Csv => {
            let path = opts.out_dir.join("audit-table.csv");
            let mut bytes = Vec::new();
            table
                .write_csv(&mut bytes)
                .map_err(|e| CliError::validation(format!("table serialization failed: {e}")))?;
            write_artifact(&path, &bytes)?;
            path
        }
        TableFormat::Json => {
            let path = opts.out_dir.join("audit-table.json");
            write_artifact(&path, &to_canonical_json(&table_json(&table))?)?;
            path
        }
    };

    let policy = manifest.tolerance;
    let mut verdicts = Vec::new();
    let mut implication = None;
    let mut ns_derivation = None;
    let mut expectations = Vec::new();
    let mut all_met = true;
    for spec in &manifest.checks {
        let result = evaluate_check(&table, manifest, policy, *spec)?;
        match result.payload {
            CheckPayload::Verdict(v) => verdicts.push(v),
            CheckPayload::Implication(r) => implication = Some(*r),
            CheckPayload::NsDerivation(r) => ns_derivation = Some(r),
        }
        println!(
            "audit {}: expected {} -> {} ({})",
            spec.check.label(),
            match spec.expect {
                Expectation::Pass => "pass",
                Expectation::Fail => "fail",
            },
            if result.expectation.met { "met" } else { "NOT MET" },
            result.expectation.detail
        );
        all_met &= result.expectation.met;
        expectations.push(result.expectation);
    }

    let mut report = RunReport::new("audit", manifest.digest()?, opts.seed, manifest.model_name());
    report.pass = all_met;
    report.audit = Some(AuditOutcome {
        report: beable_core::audit::AuditReport {
            seed: opts.seed,
            samples: manifest.samples,
            verdicts,
            implication,
            ns_derivation,
        },
        expectations,
    });
    report.artifacts.push(artifact_name(&table_path));
    finish(&report, opts)
}

enum CheckPayload {
    Verdict(beable_core::audit::ConditionVerdict),
    Implication(Box<beable_core::audit::ImplicationReport>),
    NsDerivation(beable_core::audit::NsDerivationReport),
}

struct CheckResult {
    payload: CheckPayload,
    expectation: ExpectationResult,
}

fn evaluate_check(
    table: &ProbabilityTable,
    manifest: &ExperimentManifest,
    policy: TolerancePolicy,
    spec: CheckSpec,
) -> Result<CheckResult, CliError> {
    let (payload, passed, witness_sigma, detail) = match spec.check {
        CheckName::Fw | CheckName::Ns2 | CheckName::Pi | CheckName::Fr | CheckName::St => {
            let v = match spec.check {
                CheckName::Fw => check_fw(table, policy)?,
                CheckName::Ns2 => check_ns2(table, policy)?,
                CheckName::Pi => check_pi(table, policy)?,
                CheckName::Fr => check_fr(table, policy)?,
                CheckName::St => check_st(table, policy)?,
                _ => unreachable!(),
            };
            let detail = format!(
                "max_deviation={} tolerance={} sigma={:.1} worst: {}",
                canonical_float(v.max_deviation),
                canonical_float(v.tolerance),
                v.sigma_level,
                v.worst
            );
            let passed = v.decided && v.pass;
            let sigma = v.sigma_level;
            (CheckPayload::Verdict(v), passed, sigma, detail)
        }
        CheckName::Implication => {
            let r = verify_implication_fr(table, policy, discloses_fully(manifest))?;
            let consistent = r.forward_consistent
                && r.converse.as_ref().map(|c| c.consistent).unwrap_or(true);
            let detail = format!(
                "premises_pass={} fr_within_derived={} converse={:?}",
                r.premises_pass,
                r.fr_within_derived,
                r.converse.as_ref().map(|c| c.consistent)
            );
            (CheckPayload::Implication(Box::new(r)), consistent, f64::INFINITY, detail)
        }
        CheckName::NsDerivation => {
            let r = derive_ns_from_free_choice(table, policy)?;
            let detail = format!(
                "both_factorizations={} ns_deviation={} derived_tolerance={}",
                r.both_hold,
                canonical_float(r.ns_deviation),
                canonical_float(r.derived_tolerance)
            );
            let ok = r.consistent;
            (CheckPayload::NsDerivation(r), ok, f64::INFINITY, detail)
        }
    };
    let met = match spec.expect {
        Expectation::Pass => passed,
        Expectation::Fail => match policy {
            TolerancePolicy::Exact { .. } => !passed,
            TolerancePolicy::Binomial { .. } => !passed && witness_sigma >= manifest.witness_sigmas,
        },
    };
    Ok(CheckResult {
        payload,
        expectation: ExpectationResult {
            check: spec.check.label().to_string(),
            expect: spec.expect,
            met,
            detail,
        },
    })
}

pub fn zmap_csv(points: usize) -> Vec<u8> {
    let mut out = Vec::new();
    writeln!(out, "c2,z").ok();
    for i in 0..points {
        let c2 = i as f64 / (points - 1).max(1) as f64;
        writeln!(
            out,
            "{},{}",
            canonical_float(c2),
            canonical_float(z_from_cap_overlap(c2))
        )
        .ok();
    }
    out
}

pub fn zmap(points: usize, out_dir: &Path) -> Result<bool, CliError> {
    if points < 2 {
        return Err(CliError::validation("zmap needs at least 2 points"));
    }
    let path = out_dir.join("zmap.csv");
    write_artifact(&path, &zmap_csv(points))?;
    let mut report = RunReport::new("zmap", String::new(), 0, "-");
    report.zmap = Some(ZmapReport { points });
    report.artifacts.push(artifact_name(&path));
    let report_path = out_dir.join("zmap-report.json");
    write_artifact(&report_path, &to_canonical_json(&report)?)?;
    println!("zmap: wrote {} points to {}", points, path.display());
    Ok(true)
}
