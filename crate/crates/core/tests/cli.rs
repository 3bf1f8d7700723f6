use std::path::Path;
use std::process::{Command, Output};

fn poslab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_poslab")).args(args).current_dir(dir).output().unwrap()
}

const ROBIN: &str = r#"{
    "mesh": {"generate": {"shape": "unit_square", "n": 6, "tags": "all=N"}},
    "coefficients": {"a": [[1, 0], [0, 1]], "beta": 1, "mu": 1, "mode": "robin"},
    "output_dir": "out",
    "seed": 3
}"#;

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

#[test]
fn verify_output_is_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "run.json", ROBIN);
    let first = poslab(&["verify", "--config", "run.json"], tmp.path());
    assert_eq!(first.status.code(), Some(0), "{}", String::from_utf8_lossy(&first.stdout));
    let a = std::fs::read(tmp.path().join("out/verify.json")).unwrap();
    let second = poslab(&["verify", "--config", "run.json"], tmp.path());
    assert_eq!(second.status.code(), Some(0));
    let b = std::fs::read(tmp.path().join("out/verify.json")).unwrap();
    assert_eq!(a, b);
    let text = String::from_utf8(first.stdout).unwrap();
    assert!(text.contains("PASS  robin-strict-positivity"), "{text}");
    assert!(text.contains("dirichlet-interior-positivity"), "{text}");
}

#[test]
fn usage_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(poslab(&["eig"], tmp.path()).status.code(), Some(2));
    assert_eq!(poslab(&["frobnicate"], tmp.path()).status.code(), Some(2));
    assert_eq!(poslab(&["eig", "--config", "missing.json"], tmp.path()).status.code(), Some(2));
    write(tmp.path(), "run.json", ROBIN);
    let out = poslab(&["verify", "--config", "run.json", "--only", "no-such-claim"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("spectral-gap"));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "run.json", &ROBIN.replacen('{', r#"{"sed": 1,"#, 1));
    let out = poslab(&["eig", "--config", "run.json"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sed"));
}

#[test]
fn oracle_marks_expected_negatives() {
    let tmp = tempfile::tempdir().unwrap();
    write(
        tmp.path(),
        "q.json",
        r#"{"matrix": [[-1, 1, 0], [0, -1, 1], [0, 0, -1]], "expect": "reducible"}"#,
    );
    let out = poslab(&["oracle", "--matrix", "q.json", "--out", "r.json"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = std::fs::read_to_string(tmp.path().join("r.json")).unwrap();
    assert!(report.contains("EXPECTED_NEGATIVE"), "{report}");

    write(tmp.path(), "q.json", r#"{"matrix": [[-1, 1, 0], [0, -1, 1], [0, 0, -1]], "expect": "irreducible"}"#);
    assert_eq!(poslab(&["oracle", "--matrix", "q.json"], tmp.path()).status.code(), Some(1));
}

#[test]
fn eig_evolve_and_kernel_write_their_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "run.json", &ROBIN.replacen('{', r#"{"u0": "x * (1 - y)","#, 1));
    assert_eq!(poslab(&["evolve", "--config", "run.json"], tmp.path()).status.code(), Some(0));
    write(tmp.path(), "bare.json", ROBIN);
    assert_eq!(poslab(&["evolve", "--config", "bare.json"], tmp.path()).status.code(), Some(2));
    for args in [&["eig", "--config", "run.json"][..], &["evolve", "--config", "run.json"], &["kernel", "--config", "run.json", "--t", "0.05"]] {
        let out = poslab(args, tmp.path());
        assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    for f in ["eig.json", "eigenvector.csv", "eigenvector.svg", "evolve.json", "trajectory.csv", "kernel.bin", "kernel.json"] {
        assert!(tmp.path().join("out").join(f).is_file(), "{f} missing");
    }
    let bin = std::fs::read(tmp.path().join("out/kernel.bin")).unwrap();
    assert_eq!(&bin[..8], b"KTMAT001");
}

#[test]
fn mesh_command_writes_a_loadable_mesh() {
    let tmp = tempfile::tempdir().unwrap();
    let out = poslab(&["mesh", "--shape", "l_shape", "--n", "2", "--tags", "all=D", "--out", "l.mesh"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(tmp.path().join("l.mesh")).unwrap();
    assert!(poslab::mesh::load_mesh(&text).is_ok());
}
