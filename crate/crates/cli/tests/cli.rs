//! End-to-end runs of the binary: determinism, exit codes, file formats.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mvopr"))
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

fn worked_config(dir: &Path, seed: u64) -> String {
    format!(
        r#"{{
  "dimension": 2,
  "max_degree": 5,
  "scalar": "rational",
  "measure": {{"type": "box", "bounds": [["-1", "1"], ["-1", "1"]]}},
  "darboux": {{"factors": [{{"poly": "2 - x1", "power": 1}}, {{"poly": "2 - x2", "power": 1}}]}},
  "degrees": [0, 1, 2],
  "nodes": {{"source": "auto", "budget": 50, "seed": {seed}}},
  "output": {{
    "family": "{dir}/family.json",
    "transformed": "{dir}/transformed.json",
    "report": "{dir}/report.json",
    "nodes": "{dir}/nodes.json"
  }}
}}
"#,
        dir = dir.display(),
        seed = seed
    )
}

fn run_ok(mut cmd: Command) -> Output {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn compute_then_darboux_verify_succeeds() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    write(&cfg, &worked_config(tmp.path(), 7));

    run_ok({
        let mut c = bin();
        c.args(["compute", "--config", cfg.to_str().unwrap()]);
        c
    });
    let family: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("family.json")).unwrap())
            .unwrap();
    assert_eq!(family["h_blocks"][0][0][0], "4");
    assert_eq!(family["h_blocks"][1][0][0], "4/3");
    assert_eq!(family["h_blocks"][1][1][1], "4/3");

    let out = run_ok({
        let mut c = bin();
        c.args(["darboux", "--config", cfg.to_str().unwrap(), "--verify"]);
        c
    });
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("oracle deviation 0e0"), "{stdout}");

    let out = run_ok({
        let mut c = bin();
        c.args(["verify", "--config", cfg.to_str().unwrap()]);
        c
    });
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("max violation 0e0"), "{stdout}");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["passed"], true);
}

/// Criterion 9: identical config and seed give byte-identical outputs.
#[test]
fn determinism_byte_identical_outputs() {
    let tmp_a = tempfile::tempdir().unwrap();
    let tmp_b = tempfile::tempdir().unwrap();
    for tmp in [&tmp_a, &tmp_b] {
        let cfg = tmp.path().join("cfg.json");
        write(&cfg, &worked_config(tmp.path(), 7));
        run_ok({
            let mut c = bin();
            c.args(["darboux", "--config", cfg.to_str().unwrap(), "--verify"]);
            c
        });
        run_ok({
            let mut c = bin();
            c.args(["sample-nodes", "--config", cfg.to_str().unwrap()]);
            c
        });
    }
    for name in ["transformed.json", "nodes.json"] {
        let a = std::fs::read(tmp_a.path().join(name)).unwrap();
        let b = std::fs::read(tmp_b.path().join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }

    // Identical stdout as well.
    let cfg_a = tmp_a.path().join("cfg.json");
    let out1 = run_ok({
        let mut c = bin();
        c.args(["verify", "--config", cfg_a.to_str().unwrap()]);
        c
    });
    let out2 = run_ok({
        let mut c = bin();
        c.args(["verify", "--config", cfg_a.to_str().unwrap()]);
        c
    });
    assert_eq!(out1.stdout, out2.stdout);
}

#[test]
fn node_file_source_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    write(&cfg, &worked_config(tmp.path(), 7));
    run_ok({
        let mut c = bin();
        c.args(["sample-nodes", "--config", cfg.to_str().unwrap()]);
        c
    });
    // Re-run the k=0 transform with the sampled nodes loaded from the file.
    let cfg_file = tmp.path().join("cfg-file.json");
    write(
        &cfg_file,
        &format!(
            r#"{{
  "dimension": 2,
  "max_degree": 5,
  "measure": {{"type": "box", "bounds": [["-1", "1"], ["-1", "1"]]}},
  "darboux": {{"factors": [{{"poly": "2 - x1", "power": 1}}, {{"poly": "2 - x2", "power": 1}}]}},
  "degrees": [0],
  "nodes": {{"source": "file", "path": "{dir}/nodes.json"}},
  "output": {{"transformed": "{dir}/t-file.json"}}
}}
"#,
            dir = tmp.path().display()
        ),
    );
    let out = run_ok({
        let mut c = bin();
        c.args([
            "darboux",
            "--config",
            cfg_file.to_str().unwrap(),
            "--verify",
        ]);
        c
    });
    assert!(String::from_utf8_lossy(&out.stdout).contains("oracle deviation 0e0"));
}

#[test]
fn univariate_family_matches_legendre() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    write(
        &cfg,
        &format!(
            r#"{{
  "dimension": 1,
  "max_degree": 5,
  "measure": {{"type": "box", "bounds": [["-1", "1"]]}},
  "output": {{"family": "{dir}/family.json"}}
}}
"#,
            dir = tmp.path().display()
        ),
    );
    run_ok({
        let mut c = bin();
        c.args(["compute", "--config", cfg.to_str().unwrap()]);
        c
    });
    let family: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("family.json")).unwrap())
            .unwrap();
    let polys = &family["polynomials"];
    assert_eq!(polys[2][0], "-1/3 + x1^2");
    assert_eq!(polys[3][0], "-3/5*x1 + x1^3");
    assert_eq!(polys[4][0], "3/35 - 6/7*x1^2 + x1^4");
    assert_eq!(polys[5][0], "5/21*x1 - 10/9*x1^3 + x1^5");
}

#[test]
fn exit_2_on_singular_block() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    write(
        &cfg,
        r#"{
  "dimension": 2,
  "max_degree": 1,
  "measure": {"type": "discrete", "points": [["0", "0"]], "weights": ["1"]}
}
"#,
    );
    let out = bin()
        .args(["compute", "--config", cfg.to_str().unwrap()])
        .arg("--out")
        .arg(tmp.path().join("x.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("degree 1"));
}

#[test]
fn exit_3_on_forced_plain_nodes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    write(
        &cfg,
        &format!(
            r#"{{
  "dimension": 2,
  "max_degree": 5,
  "measure": {{"type": "box", "bounds": [["-1", "1"], ["-1", "1"]]}},
  "darboux": {{"factors": [{{"poly": "2 - x1", "power": 2}}]}},
  "degrees": [0],
  "nodes": {{"source": "auto", "budget": 10, "seed": 1, "orders": [0]}},
  "output": {{"transformed": "{dir}/t.json"}}
}}
"#,
            dir = tmp.path().display()
        ),
    );
    let out = bin()
        .args(["darboux", "--config", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("repeated prime factor"), "{stderr}");
}

#[test]
fn exit_4_on_tightened_verify_tolerance() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    write(
        &cfg,
        &format!(
            r#"{{
  "dimension": 2,
  "max_degree": 4,
  "scalar": "float",
  "measure": {{"type": "box", "bounds": [["-1", "1"], ["-1", "1"]]}},
  "darboux": {{"factors": [{{"poly": "x1^2 + x2^2 - 4", "power": 1}}, {{"poly": "3 - x1", "power": 1}}]}},
  "degrees": [1],
  "nodes": {{"source": "auto", "budget": 80, "seed": 5}},
  "output": {{"report": "{dir}/report.json"}}
}}
"#,
            dir = tmp.path().display()
        ),
    );
    // The float run carries ~1e-12 rounding residuals; a 1e-13 gate fails.
    let out = bin()
        .args(["verify", "--config", cfg.to_str().unwrap()])
        .env("MVOPR_TOL_RESIDUAL", "1e-13")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("exceeds tolerance"));
    // At the documented tolerance the same run passes.
    let out = bin()
        .args(["verify", "--config", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn exit_5_on_bad_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    write(
        &cfg,
        r#"{
  "dimension": 2,
  "max_degree": 2,
  "measure": {"type": "box", "bounds": [["-1", "1"], ["-1", "1"]]},
  "darboux": {"factors": [{"poly": "2 - x1", "power": 1}, {"poly": "2 - x2", "power": 1}]},
  "degrees": [2]
}
"#,
    );
    let out = bin()
        .args(["darboux", "--config", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&out.stderr).contains("max_degree >= 4"));

    let garbled = tmp.path().join("garbled.json");
    write(&garbled, "{not json");
    let out = bin()
        .args(["compute", "--config", garbled.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn verify_with_constant_perturbation_is_trivially_clean() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    write(
        &cfg,
        &format!(
            r#"{{
  "dimension": 2,
  "max_degree": 3,
  "measure": {{"type": "box", "bounds": [["-1", "1"], ["-1", "1"]]}},
  "darboux": {{"factors": [{{"poly": "1", "power": 1}}]}},
  "degrees": [0, 1],
  "output": {{"report": "{dir}/report.json"}}
}}
"#,
            dir = tmp.path().display()
        ),
    );
    let out = run_ok({
        let mut c = bin();
        c.args(["verify", "--config", cfg.to_str().unwrap()]);
        c
    });
    assert!(String::from_utf8_lossy(&out.stdout).contains("max violation 0e0"));
}
