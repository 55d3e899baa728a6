//! Runs every acceptance criterion and prints one PASS/FAIL line each.
//! Criteria 1-10 run in-process; 11 drives the built binary.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use gme::selftest::{Suite, DEFAULT_SEED};

const BIN: &str = env!("CARGO_BIN_EXE_gme");

fn scenario_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("scenario.json");
    let text = r#"{
        "dimension": 3,
        "hamiltonian": {"preset": "random_gue:11", "scale": 0.5},
        "coupling_q": {"preset": "random_gue:11", "scale": 0.5},
        "beta": 1.2,
        "gamma_e": 0.25
    }"#;
    std::fs::write(&path, text).expect("write config");
    path
}

fn cli_determinism() -> Result<String, String> {
    let selftest = Command::new(BIN).args(["selftest", "--seed", &DEFAULT_SEED.to_string()]).output().map_err(|e| e.to_string())?;
    if !selftest.status.success() {
        return Err(format!("selftest exited with {:?}", selftest.status.code()));
    }
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = scenario_config(tmp.path());
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out = tmp.path().join(run);
        let status = Command::new(BIN)
            .arg("jacobian")
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?
            .status;
        if !status.success() {
            return Err(format!("jacobian run {run} exited with {:?}", status.code()));
        }
        outputs.push(out);
    }
    for file in ["jacobian.csv", "spectrum.csv", "diagonals.csv"] {
        let a = std::fs::read(outputs[0].join(file)).map_err(|e| e.to_string())?;
        let b = std::fs::read(outputs[1].join(file)).map_err(|e| e.to_string())?;
        if a != b {
            return Err(format!("{file} differs between runs"));
        }
    }
    Ok("selftest exit 0; jacobian.csv, spectrum.csv, diagonals.csv byte-identical".into())
}

fn main() -> ExitCode {
    let suite = Suite::new(DEFAULT_SEED);
    let mut all = true;
    for outcome in suite.run_all() {
        all &= outcome.passed;
        println!("{outcome}");
    }
    let start = Instant::now();
    let (passed, detail) = match cli_determinism() {
        Ok(d) => (true, d),
        Err(e) => (false, e),
    };
    all &= passed;
    println!(
        "criterion 11 CLI determinism: {} ({detail}; {:.2}s)",
        if passed { "PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64()
    );
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
