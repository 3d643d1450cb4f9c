//! End-to-end behavior of the command-line driver: exit codes, validation
//! diagnostics and artifact layout.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn beable() -> Command {
    Command::new(env!("CARGO_BIN_EXE_beable"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("beable-cli-test-{name}-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_manifest(dir: &std::path::Path, name: &str, value: serde_json::Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_vec_pretty(&value).unwrap()).unwrap();
    path
}

fn singlet_psi() -> serde_json::Value {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    serde_json::json!([[0.0, 0.0], [h, 0.0], [-h, 0.0], [0.0, 0.0]])
}

fn base_manifest(samples: u64, seed: u64) -> serde_json::Value {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    serde_json::json!({
        "model": "ontic",
        "psi": singlet_psi(),
        "menu_a": [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]],
        "menu_b": [[h, 0.0, h], [-h, 0.0, h]],
        "samples": samples,
        "seed": seed,
    })
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

#[test]
fn help_exits_zero() {
    let out = run(beable().arg("--help"));
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in ["born-check", "chsh", "overlap", "audit", "zmap"] {
        assert!(text.contains(sub), "missing subcommand {sub} in help");
    }
}

#[test]
fn unknown_flag_exits_one() {
    let out = run(beable().args(["audit", "--nonsense"]));
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn corrupted_state_norm_exits_one_with_json_diagnostic() {
    let dir = scratch("badnorm");
    let mut m = base_manifest(10, 1);
    m["psi"] = serde_json::json!([[0.9, 0.0], [0.1, 0.0], [0.0, 0.0], [0.0, 0.0]]);
    let path = write_manifest(&dir, "m.json", m);
    let out = run(beable()
        .args(["born-check", "--manifest"])
        .arg(&path)
        .env("BEABLE_OUT", &dir));
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value =
        serde_json::from_slice(&out.stderr).expect("stderr is a JSON diagnostic");
    assert_eq!(err["kind"], "validation");
    assert!(err["error"].as_str().unwrap().contains("normalized"));
}

#[test]
fn born_check_passes_and_writes_a_report() {
    let dir = scratch("bornok");
    let path = write_manifest(&dir, "m.json", base_manifest(1000, 5));
    let out = run(beable()
        .args(["born-check", "--manifest"])
        .arg(&path)
        .env("BEABLE_OUT", &dir));
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.join("born-check-report.json")).unwrap()).unwrap();
    assert_eq!(report["command"], "born-check");
    assert_eq!(report["pass"], true);
    assert_eq!(report["seed"], 5);
    assert!(report["manifest_digest"].as_str().unwrap().len() == 64);
}

#[test]
fn unreachable_tolerance_forces_exit_two() {
    // An epistemic sampling check against a zero-width tolerance is the
    // harness self-test for the failure exit path.
    let dir = scratch("forced");
    let mut m = base_manifest(20_000, 6);
    m["model"] = serde_json::json!("epistemic");
    m["psi"] = serde_json::json!([[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]]);
    m["tolerance"] = serde_json::json!({"kind": "exact", "epsilon": 1e-12});
    let path = write_manifest(&dir, "m.json", m);
    let out = run(beable()
        .args(["born-check", "--manifest"])
        .arg(&path)
        .env("BEABLE_OUT", &dir));
    assert_eq!(out.status.code(), Some(2), "{out:?}");
}

#[test]
fn chsh_requires_two_settings_per_menu() {
    let dir = scratch("chshmenu");
    let mut m = base_manifest(1000, 7);
    m["menu_a"] = serde_json::json!([[0.0, 0.0, 1.0]]);
    let path = write_manifest(&dir, "m.json", m);
    let out = run(beable()
        .args(["chsh", "--manifest"])
        .arg(&path)
        .env("BEABLE_OUT", &dir));
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn overlap_requires_a_ray_distinct_second_state() {
    let dir = scratch("overlap");
    // Missing psi2.
    let path = write_manifest(&dir, "m1.json", base_manifest(1, 8));
    let out = run(beable()
        .args(["overlap", "--manifest"])
        .arg(&path)
        .env("BEABLE_OUT", &dir));
    assert_eq!(out.status.code(), Some(1));

    // Ray-equal psi2 (global phase only).
    let mut m = base_manifest(1, 8);
    m["psi"] = serde_json::json!([[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]]);
    m["psi2"] = serde_json::json!([[0.0, 1.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]]);
    let path = write_manifest(&dir, "m2.json", m);
    let out = run(beable()
        .args(["overlap", "--manifest"])
        .arg(&path)
        .env("BEABLE_OUT", &dir));
    assert_eq!(out.status.code(), Some(1));

    // A genuine in-cap pair produces a certificate.
    let mut m = base_manifest(1, 8);
    m["psi"] = serde_json::json!([[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]]);
    m["psi2"] = serde_json::json!([
        [0.9486832980505138, 0.0],
        [0.31622776601683794, 0.0],
        [0.0, 0.0],
        [0.0, 0.0]
    ]);
    let path = write_manifest(&dir, "m3.json", m);
    let out = run(beable()
        .args(["overlap", "--manifest"])
        .arg(&path)
        .env("BEABLE_OUT", &dir));
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.join("overlap-report.json")).unwrap()).unwrap();
    let bound: f64 = report["overlap"]["lower_bound"].as_f64().unwrap();
    assert!(bound > 0.01, "bound {bound}");
    assert!(dir.join("zprofile.csv").exists());
}

#[test]
fn audit_exit_two_when_an_expectation_is_missed() {
    let dir = scratch("auditexpect");
    let mut m = base_manifest(50_000, 9);
    m["channel"] = serde_json::json!({"kind": "tau_bits", "menu": [6, 3]});
    m["lambda"] = serde_json::json!({"bits": 6, "include_e0": false});
    // Expecting the free-will condition to fail is wrong for this scenario.
    m["checks"] = serde_json::json!([{ "check": "fw", "expect": "fail" }]);
    let path = write_manifest(&dir, "m.json", m);
    let out = run(beable()
        .args(["audit", "--manifest"])
        .arg(&path)
        .env("BEABLE_OUT", &dir));
    assert_eq!(out.status.code(), Some(2), "{out:?}");
}

#[test]
fn audit_writes_table_artifacts_in_the_requested_format() {
    let dir = scratch("auditfmt");
    let mut m = base_manifest(5_000, 10);
    m["channel"] = serde_json::json!({"kind": "tau_bits", "menu": [3]});
    m["lambda"] = serde_json::json!({"bits": 3, "include_e0": false});
    m["checks"] = serde_json::json!([{ "check": "fw" }, { "check": "ns2" }]);
    let path = write_manifest(&dir, "m.json", m);
    let out = run(beable()
        .args(["audit", "--manifest"])
        .arg(&path)
        .env("BEABLE_OUT", &dir));
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let csv = fs::read_to_string(dir.join("audit-table.csv")).unwrap();
    assert!(csv.starts_with("A,B,C,X,Y,Z,L,count,probability"));

    let out = run(beable()
        .args(["audit", "--format", "json", "--manifest"])
        .arg(&path)
        .env("BEABLE_OUT", &dir));
    assert_eq!(out.status.code(), Some(0));
    let table: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.join("audit-table.json")).unwrap()).unwrap();
    assert_eq!(table["variables"][0]["name"], "A");
    assert_eq!(table["samples"], 5000);
}

#[test]
fn seed_flag_overrides_the_manifest_seed() {
    let dir = scratch("seedflag");
    let path = write_manifest(&dir, "m.json", base_manifest(10_000, 20));
    let out = run(beable()
        .args(["chsh", "--seed", "99", "--manifest"])
        .arg(&path)
        .env("BEABLE_OUT", &dir));
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.join("chsh-report.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 99);
}

#[test]
fn dump_writes_sample_rows_with_the_seed_recorded() {
    let dir = scratch("dump");
    let path = write_manifest(&dir, "m.json", base_manifest(100, 21));
    let out = run(beable()
        .args(["born-check", "--dump", "7", "--manifest"])
        .arg(&path)
        .env("BEABLE_OUT", &dir));
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.join("samples.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "# seed=21 model=ontic pair=(0,0)");
    assert_eq!(lines.next().unwrap(), "tau,j,x,y");
    assert_eq!(csv.lines().count(), 9);
}

#[test]
fn product_state_chsh_respects_the_local_bound() {
    let dir = scratch("chshlocal");
    let mut m = base_manifest(200_000, 33);
    m["psi"] = serde_json::json!([[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]]);
    let path = write_manifest(&dir, "m.json", m);
    let out = run(beable()
        .args(["chsh", "--manifest"])
        .arg(&path)
        .env("BEABLE_OUT", &dir));
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.join("chsh-report.json")).unwrap()).unwrap();
    let s = report["chsh"]["monte_carlo"].as_f64().unwrap();
    let se = report["chsh"]["standard_error"].as_f64().unwrap();
    assert!(s.abs() <= 2.0 + 4.0 * se, "|S| = {} (se {se})", s.abs());
}

#[test]
fn shipped_manifests_run_end_to_end() {
    let dir = scratch("shipped");
    let manifests = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../manifests");
    for (command, file) in [
        ("audit", "singlet_audit.json"),
        ("chsh", "singlet_chsh.json"),
        ("born-check", "epistemic_born.json"),
        ("overlap", "overlap_pair.json"),
    ] {
        let out = run(beable()
            .args([command, "--manifest"])
            .arg(manifests.join(file))
            .env("BEABLE_OUT", &dir));
        assert_eq!(out.status.code(), Some(0), "{command} on {file}: {out:?}");
    }
}

#[test]
fn zmap_tabulates_the_infimum_profile() {
    let dir = scratch("zmap");
    let out = run(beable()
        .args(["zmap", "--points", "101", "--out"])
        .arg(&dir));
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.join("zmap.csv")).unwrap();
    assert_eq!(csv.lines().count(), 102);
    let last = csv.lines().last().unwrap();
    let z: f64 = last.split(',').nth(1).unwrap().parse().unwrap();
    assert!((z - 0.25).abs() < 1e-12, "z at full overlap: {z}");
}
