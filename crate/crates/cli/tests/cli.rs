use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_gme");

const TWO_LEVEL: &str = r#"{"dimension":2,"hamiltonian":{"preset":"diag","values":[0,1]},"coupling_q":{"preset":"pauli_x"},"beta":1.0,"gamma_e":0.1}"#;

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn gme(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(BIN).args(args).arg(config).arg("--out").arg(out).output().unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn malformed_json_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "bad.json", "{\"dimension\": 2,,}");
    let out = gme(&["simulate"], &cfg, tmp.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
}

#[test]
fn negative_beta_exits_2_naming_field() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.json", &TWO_LEVEL.replace("\"beta\":1.0", "\"beta\":-1"));
    let out = gme(&["jacobian"], &cfg, tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("beta: must be positive"));
}

#[test]
fn non_hermitian_input_names_entry_pair() {
    let tmp = tempfile::tempdir().unwrap();
    let text = TWO_LEVEL.replace(r#"{"preset":"pauli_x"}"#, r#"{"matrix":[[[0,0],[1,1]],[[1,1],[0,0]]]}"#);
    let cfg = write(tmp.path(), "c.json", &text);
    let out = gme(&["simulate"], &cfg, tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("coupling_q.matrix") && err.contains("[0][1] and [1][0]"), "{err}");
}

#[test]
fn missing_file_is_internal_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = gme(&["simulate"], &tmp.path().join("absent.json"), tmp.path());
    assert_eq!(out.status.code(), Some(6));
}

#[test]
fn linear_mode_rejected_by_jacobian() {
    let tmp = tempfile::tempdir().unwrap();
    let text = TWO_LEVEL.replace("\"beta\":1.0", "\"beta\":1.0,\"mode\":\"linear\",\"beta_prime\":0.5");
    let cfg = write(tmp.path(), "c.json", &text);
    assert_eq!(gme(&["jacobian"], &cfg, tmp.path()).status.code(), Some(2));
    assert_eq!(gme(&["simulate"], &cfg, tmp.path()).status.code(), Some(0));
}

#[test]
fn two_level_free_energy_is_monotone() {
    let tmp = tempfile::tempdir().unwrap();
    let text = TWO_LEVEL.replace("\"gamma_e\":0.1", "\"gamma_e\":0.1,\"initial_state\":\"maximally_mixed\",\"outputs\":{\"dump_states\":true}");
    let cfg = write(tmp.path(), "c.json", &text);
    let out = gme(&["simulate"], &cfg, tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&tmp.path().join("trajectory.csv"));
    assert_eq!(header, ["t", "purity", "entropy", "free_energy", "c_norm", "trace_error", "min_eig"]);
    let u: Vec<f64> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
    assert!(u.len() > 100);
    assert!(u.windows(2).all(|w| w[1] <= w[0] + 1e-10));
    assert!(u[0] - u[u.len() - 1] > 0.1);
    let (header, rows) = read_csv(&tmp.path().join("states.csv"));
    assert_eq!(header, ["t", "row", "col", "re", "im"]);
    assert_eq!(rows.len(), 4 * u.len());
}

#[test]
fn sigma_x_diagonals_match_closed_forms() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.json", TWO_LEVEL);
    let out = gme(&["jacobian"], &cfg, tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("verdict              stable"), "{stdout}");
    assert!(stdout.contains("diagonal criterion   marginal"), "{stdout}");

    let (header, rows) = read_csv(&tmp.path().join("diagonals.csv"));
    assert_eq!(header, ["label", "closed_form", "fd_value", "abs_diff"]);
    let labels: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(labels, ["X(2,1)", "Y(2,1)", "Z(1)"]);
    // η = tanh(β/2) for levels (0, 1); γ = 0.1.
    let eta = (0.5f64).tanh();
    let f = eta / eta.atanh();
    let expected = [0.0, 0.4 / f, 0.4 * f / (1.0 - eta * eta)];
    for (row, want) in rows.iter().zip(expected) {
        let cf: f64 = row[1].parse().unwrap();
        let fd: f64 = row[2].parse().unwrap();
        assert!((cf - want).abs() < 1e-12, "{}: {cf} vs {want}", row[0]);
        assert!((fd - want).abs() < 1e-5);
    }

    let (header, rows) = read_csv(&tmp.path().join("jacobian.csv"));
    assert_eq!(header, ["label", "X(2,1)", "Y(2,1)", "Z(1)"]);
    assert_eq!(rows.len(), 3);
    let (_, spectrum) = read_csv(&tmp.path().join("spectrum.csv"));
    assert!(spectrum.iter().all(|r| r[0].parse::<f64>().unwrap() < 0.0));
}

#[test]
fn tight_tolerance_reports_route_mismatch() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.json", TWO_LEVEL);
    let out = Command::new(BIN).arg("jacobian").arg(&cfg).arg("--out").arg(tmp.path()).args(["--tol", "1e-15"]).output().unwrap();
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn scan_preserves_order_and_writes_points() {
    let tmp = tempfile::tempdir().unwrap();
    let text = format!(r#"{{"base":{TWO_LEVEL},"axis":"gamma_e","values":[0.4,0.1,0.2]}}"#);
    let cfg = write(tmp.path(), "sweep.json", &text);
    let out = gme(&["scan"], &cfg, tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&tmp.path().join("scan.csv"));
    assert_eq!(header, ["value", "max_real_part", "min_diag", "verdict"]);
    let values: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(values, ["0.4", "0.1", "0.2"]);
    assert!(rows.iter().all(|r| r[3] == "stable"));
    for i in 0..3 {
        assert!(tmp.path().join(format!("point_{i:03}/jacobian.csv")).exists());
    }
}

#[test]
fn scan_rejects_single_scenario() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.json", TWO_LEVEL);
    assert_eq!(gme(&["scan"], &cfg, tmp.path()).status.code(), Some(2));
}

#[test]
fn seed_override_changes_random_presets() {
    let tmp = tempfile::tempdir().unwrap();
    let text = r#"{"dimension":3,"hamiltonian":{"preset":"random_gue:1"},"coupling_q":{"preset":"random_gue:1"},"beta":1.0,"gamma_e":0.3}"#;
    let cfg = write(tmp.path(), "c.json", text);
    let mut spectra = Vec::new();
    for (dir, seed) in [("a", "1"), ("b", "2"), ("c", "1")] {
        let out_dir = tmp.path().join(dir);
        let out = Command::new(BIN).arg("jacobian").arg(&cfg).arg("--out").arg(&out_dir).args(["--seed", seed]).output().unwrap();
        assert_eq!(out.status.code(), Some(0));
        spectra.push(std::fs::read(out_dir.join("spectrum.csv")).unwrap());
    }
    assert_ne!(spectra[0], spectra[1]);
    assert_eq!(spectra[0], spectra[2]);
}

#[test]
fn oversized_step_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let text = TWO_LEVEL.replace("\"gamma_e\":0.1", "\"gamma_e\":1.0,\"initial_state\":\"pure:1\",\"integrator\":{\"dt\":2.0}");
    let cfg = write(tmp.path(), "c.json", &text);
    let out = gme(&["simulate"], &cfg, tmp.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}
