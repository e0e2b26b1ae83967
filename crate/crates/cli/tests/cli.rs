use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BUNDLED: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/qubit-sigmaz.toml");
const GOLDEN: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden/qubit-sigmaz");
const CSVS: [&str; 4] = [
    "trajectory.csv",
    "discrete.csv",
    "branches.csv",
    "sigma.csv",
];

fn trajent(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trajent"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn trajent_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trajent"))
        .args(args)
        .env(key, value)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn run_bundled(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", BUNDLED, "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    trajent(&args)
}

fn write_scenario(dir: &Path, edit: impl FnOnce(String) -> String) -> PathBuf {
    let text = edit(fs::read_to_string(BUNDLED).unwrap());
    let p = dir.join("scenario.toml");
    fs::write(&p, text).unwrap();
    p
}

fn parse_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn close(a: &str, b: &str) -> bool {
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) if x.is_nan() && y.is_nan() => true,
        (Ok(x), Ok(y)) => (x - y).abs() <= 1e-9 * (1.0 + x.abs().max(y.abs())),
        _ => a == b,
    }
}

#[test]
fn bundled_scenario_matches_golden_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_bundled(dir.path(), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    for name in CSVS {
        let (h_new, rows_new) = parse_csv(&dir.path().join(name));
        let (h_old, rows_old) = parse_csv(&Path::new(GOLDEN).join(name));
        assert_eq!(h_new, h_old, "{name} header");
        assert_eq!(rows_new.len(), rows_old.len(), "{name} rows");
        for (i, (a, b)) in rows_new.iter().zip(&rows_old).enumerate() {
            for (j, (x, y)) in a.iter().zip(b).enumerate() {
                assert!(
                    close(x, y),
                    "{name} row {i} column {}: {x} vs {y}",
                    h_new[j]
                );
            }
        }
    }
}

#[test]
fn manifest_records_hashes_and_adjudication() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_bundled(dir.path(), &[]).status.success());
    let m: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("run-manifest.json")).unwrap()).unwrap();
    assert_eq!(m["scenario"], "qubit-sigmaz");
    assert_eq!(m["seed"], 1);
    assert_eq!(m["config_sha256"].as_str().unwrap().len(), 64);
    let artifacts = m["artifacts"].as_array().unwrap();
    assert_eq!(artifacts.len(), CSVS.len());
    for a in artifacts {
        let file = a["file"].as_str().unwrap();
        let bytes = fs::read(dir.path().join(file)).unwrap();
        let (_, rows) = parse_csv(&dir.path().join(file));
        assert_eq!(a["rows"], rows.len(), "{file}");
        assert_eq!(a["sha256"].as_str().unwrap().len(), 64);
        assert!(!bytes.is_empty());
    }
    assert_eq!(m["adjudication"]["identified"], "lambda");
    for s in m["sigma"].as_array().unwrap() {
        assert_eq!(s["converged"], true);
        assert!(s["abs_error"].as_f64().unwrap() < 1e-8);
    }
}

#[test]
fn same_seed_gives_identical_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(run_bundled(a.path(), &[]).status.success());
    let o = trajent_env(
        &["run", BUNDLED, "--out", b.path().to_str().unwrap()],
        "TRAJENT_THREADS",
        "1",
    );
    assert!(o.status.success(), "{}", stderr(&o));
    for name in CSVS {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn seed_and_dt_overrides() {
    let base = tempfile::tempdir().unwrap();
    let seeded = tempfile::tempdir().unwrap();
    let fine = tempfile::tempdir().unwrap();
    let out = |d: &tempfile::TempDir| d.path().to_str().unwrap().to_string();
    assert!(trajent(&["simulate", BUNDLED, "--out", &out(&base)])
        .status
        .success());
    assert!(
        trajent(&["simulate", BUNDLED, "--out", &out(&seeded), "--seed", "2"])
            .status
            .success()
    );
    assert!(
        trajent(&["simulate", BUNDLED, "--out", &out(&fine), "--dt", "5e-4"])
            .status
            .success()
    );
    let read = |d: &tempfile::TempDir| fs::read(d.path().join("trajectory.csv")).unwrap();
    assert_ne!(read(&base), read(&seeded));
    let (_, rows) = parse_csv(&fine.path().join("trajectory.csv"));
    assert_eq!(rows.len(), 4 * 400);
    let m: serde_json::Value =
        serde_json::from_slice(&fs::read(seeded.path().join("simulate-manifest.json")).unwrap())
            .unwrap();
    assert_eq!(m["seed"], 2);
    assert!(m.get("discrete").is_none() && m.get("sigma").is_none());
}

#[test]
fn variant_flag_selects_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = trajent(&["sigma", BUNDLED, "--out", out, "--variant", "paper"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (_, rows) = parse_csv(&dir.path().join("sigma.csv"));
    assert!(rows.iter().all(|r| r[0] == "paper"));
    assert_eq!(rows.len(), 41);
    assert_eq!(
        trajent(&["sigma", BUNDLED, "--variant", "neither"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn missing_scenario_is_a_config_error() {
    let o = trajent(&["run", "/definitely/not/here.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/definitely/not/here.toml"));
}

#[test]
fn bad_matrix_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_scenario(dir.path(), |s| {
        s.replace(
            "[[0.1, 0.0], [0.45, 0.0]]]",
            "[[0.1, 0.0], [0.45, 0.0], [0.0, 0.0]]]",
        )
    });
    let o = trajent(&[
        "sigma",
        p.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("initial_state.matrix"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn unknown_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_scenario(dir.path(), |s| {
        s.replace("seed = 1\nn_traj", "sede = 1\nn_traj")
    });
    let o = trajent(&["simulate", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sede"), "{}", stderr(&o));
}

#[test]
fn numerical_failure_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    // a pure initial state has no logarithm, so the Σ report cannot be formed
    let p = write_scenario(dir.path(), |s| {
        s.replace(
            "matrix = [[[0.55, 0.0], [0.1, 0.0]],\n          [[0.1, 0.0], [0.45, 0.0]]]",
            "pure = [[1.0, 0.0], [0.0, 0.0]]",
        )
    });
    let out = dir.path().join("out");
    let o = trajent(&["sigma", p.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, b"x").unwrap();
    let out = blocker.join("sub");
    let o = trajent(&["sigma", BUNDLED, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let o = trajent_env(
        &["verify", "opalg", "--seeds", "2"],
        "TRAJENT_THREADS",
        "zero",
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_all_passes() {
    let o = trajent(&["verify", "all"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.lines().filter(|l| l.starts_with("PASS ")).count() >= 30);
    assert!(text.contains(" ms)"));
}

#[test]
fn mutated_sigma_coefficient_fails_paycha() {
    let o = trajent(&["verify", "paycha", "--mutate-sigma"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL paycha::series_matches_oracle"));
}

#[test]
fn unknown_selector_prints_usage() {
    let o = trajent(&["verify", "everything"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Usage: trajent verify"));
}
