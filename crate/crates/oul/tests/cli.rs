//! End-to-end checks of the `oul` binary: output structure, exit codes, and
//! thread-count independence of the emitted tables.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_oul"))
}

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .ancestors()
        .nth(2)
        .expect("crate lives two levels below the workspace root")
        .to_path_buf()
}

fn classical_preset() -> PathBuf {
    workspace_root().join("presets/classical_2d.toml")
}

fn quantum_preset() -> PathBuf {
    workspace_root().join("presets/quantum_optical.toml")
}

fn run(args: &[&str]) -> Output {
    binary().args(args).output().expect("binary launches")
}

#[test]
fn spectrum_emits_a_metadata_header_and_the_full_eigenvalue_lattice() {
    let config = classical_preset();
    let out = run(&["spectrum", "--config", config.to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).expect("CSV output is UTF-8");

    let metadata: Vec<&str> = text.lines().take_while(|l| l.starts_with("# ")).collect();
    for key in ["# model_hash: ", "# version: ", "# command: ", "# seed: "] {
        assert!(
            metadata.iter().any(|l| l.starts_with(key)),
            "missing metadata line {key:?} in {metadata:?}"
        );
    }

    let mut body = text.lines().skip_while(|l| l.starts_with("# "));
    assert_eq!(body.next(), Some("mu_1,mu_2,eigenvalue_re,eigenvalue_im"));
    // Multi-indices with |μ| ≤ 12 over two axes: C(14, 2) = 91 rows.
    assert_eq!(body.count(), 91);
}

#[test]
fn propagate_writes_the_requested_grid_to_a_file() {
    let dir = tempfile::tempdir().expect("temp dir");
    let out_path = dir.path().join("q.csv");
    let config = quantum_preset();
    let out = run(&[
        "propagate",
        "--config",
        config.to_str().unwrap(),
        "--t",
        "0.8",
        "--alpha0",
        "1.0,0.5",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&out_path).expect("output file exists");
    let mut body = text.lines().skip_while(|l| l.starts_with("# "));
    assert_eq!(body.next(), Some("alpha_re,alpha_im,q_re,q_im"));
    assert_eq!(body.count(), 41 * 41);
}

#[test]
fn covariance_output_is_identical_across_thread_counts() {
    // Identical relative `--out` in per-run working directories keeps the
    // recorded command line byte-identical, so the whole files must match.
    let config = quantum_preset();
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let dir = tempfile::tempdir().expect("temp dir");
        let out = binary()
            .current_dir(dir.path())
            .env("OUL_THREADS", threads)
            .args(["covariance", "--config", config.to_str().unwrap(), "--out", "cov.csv"])
            .output()
            .expect("binary launches");
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
        outputs.push(fs::read(dir.path().join("cov.csv")).expect("output file exists"));
    }
    assert_eq!(outputs[0], outputs[1], "covariance table must not depend on OUL_THREADS");
}

#[test]
fn unstable_drift_is_a_configuration_error() {
    let dir = tempfile::tempdir().expect("temp dir");
    let config = dir.path().join("unstable.toml");
    fs::write(&config, "kind = \"classical_ou\"\nbeta = [[-1.0]]\ndiffusion = [[1.0]]\n")
        .expect("write config");
    let out = run(&["spectrum", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.starts_with("error: "), "stderr was {stderr:?}");
}

#[test]
fn malformed_toml_is_a_configuration_error_with_a_line_number() {
    let dir = tempfile::tempdir().expect("temp dir");
    let config = dir.path().join("broken.toml");
    fs::write(&config, "kind = \"classical_ou\"\nbeta = [[\n").expect("write config");
    let out = run(&["spectrum", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));
}

#[test]
fn defective_drift_is_a_numerical_error() {
    let dir = tempfile::tempdir().expect("temp dir");
    let config = dir.path().join("jordan.toml");
    fs::write(
        &config,
        "kind = \"classical_ou\"\nbeta = [[1.0, 1.0], [0.0, 1.0]]\ndiffusion = [[1.0, 0.0], [0.0, 1.0]]\n",
    )
    .expect("write config");
    let out = run(&["spectrum", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn verify_reports_failure_when_a_tolerance_is_tightened_to_zero() {
    let dir = tempfile::tempdir().expect("temp dir");
    let config = dir.path().join("strict.toml");
    fs::write(
        &config,
        "kind = \"classical_ou\"\nbeta = [[2.0, 0.6], [-0.4, 1.3]]\ndiffusion = [[1.0, 0.2], [0.2, 0.7]]\n\n[options.tolerances]\nc1a_lyapunov_residual = 1e-300\n",
    )
    .expect("write config");
    let out = run(&["verify", "--config", config.to_str().unwrap(), "--suite", "classical"]);
    assert_eq!(out.status.code(), Some(1), "tightened bound must fail the suite");
    let text = String::from_utf8(out.stdout).expect("report is UTF-8");
    assert!(text.contains("\"all_pass\":false"));
    assert!(text.contains("\"name\":\"c1a_lyapunov_residual\",\"measured\""));
    assert!(text.contains("\"bound\":1e-300,\"pass\":false"));
}

#[test]
fn eigfun_rejects_a_multi_index_of_the_wrong_length() {
    let config = classical_preset();
    let out = run(&["eigfun", "--config", config.to_str().unwrap(), "--mu", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn seed_override_is_recorded_in_the_output_header() {
    let config = classical_preset();
    let out = run(&["ness", "--config", config.to_str().unwrap(), "--seed", "77"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).expect("CSV output is UTF-8");
    assert!(text.lines().any(|l| l == "# seed: 77"), "seed header missing");
}
