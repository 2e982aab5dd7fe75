use std::f64::consts::PI;
use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use periclock_cli::config::ScenarioConfig;

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn periclock(args: &[&str], tol: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_periclock"));
    cmd.args(args).env_remove("PERICLOCK_TOL");
    if let Some(t) = tol {
        cmd.env("PERICLOCK_TOL", t);
    }
    cmd.output().expect("binary runs")
}

fn report(name: &str) -> (i32, serde_json::Value, Vec<u8>) {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = periclock(&["run", scenario(name).to_str().unwrap(), "--out", out.to_str().unwrap()], None);
    let bytes = fs::read(&out).unwrap();
    (o.status.code().unwrap(), serde_json::from_slice(&bytes).unwrap(), bytes)
}

#[test]
fn commensurate_scenario_passes_with_four_physical_states() {
    let (code, r, _) = report("commensurate.json");
    assert_eq!(code, 0);
    assert_eq!(r["physical_dim"], 4);
    assert_eq!(r["passed"], true);
    assert!(r["checks"].as_array().unwrap().iter().any(|c| c["lemma"] == "full-twirl"));
}

#[test]
fn incommensurate_scenario_has_at_most_one_physical_state() {
    let (code, r, _) = report("incommensurate.json");
    assert_eq!(code, 0);
    assert!(r["physical_dim"].as_u64().unwrap() <= 1);
    assert_eq!(r["group"], "Line");
}

#[test]
fn reports_are_deterministic() {
    let (_, _, a) = report("qubit_particle.json");
    let (_, _, b) = report("qubit_particle.json");
    assert_eq!(a, b);
}

#[test]
fn scenario_files_round_trip_byte_for_byte() {
    for name in ["commensurate.json", "incommensurate.json", "qubit_particle.json"] {
        let text = fs::read_to_string(scenario(name)).unwrap();
        let cfg = ScenarioConfig::parse(&text).unwrap();
        assert_eq!(cfg.emit(), text, "{name}");
        assert_eq!(ScenarioConfig::parse(&cfg.emit()).unwrap(), cfg);
    }
}

#[test]
fn custom_system_round_trips() {
    let text = fs::read_to_string(scenario("commensurate.json")).unwrap();
    let mut cfg = ScenarioConfig::parse(&text).unwrap();
    cfg.system = periclock_cli::config::SystemConfig::Custom {
        clock: periclock_cli::config::ClockConfig { n_set: vec![0, 1, 2], omega_t: 1.0, varphi: 0.0, g: None },
        system: periclock_cli::config::LevelsConfig { energies: vec![0.0, -1.0], labels: vec![0, 1] },
    };
    cfg.tolerance = Some(1e-8);
    let emitted = cfg.emit();
    assert_eq!(ScenarioConfig::parse(&emitted).unwrap().emit(), emitted);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("custom.json");
    fs::write(&path, &emitted).unwrap();
    let out = dir.path().join("r.json");
    let o = periclock(&["run", path.to_str().unwrap(), "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r: serde_json::Value = serde_json::from_slice(&fs::read(&out).unwrap()).unwrap();
    assert_eq!(r["physical_dim"], 2);
}

fn parse_failure(text: &str) -> String {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, text).unwrap();
    let o = periclock(&["run", path.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    String::from_utf8(o.stderr).unwrap()
}

#[test]
fn malformed_configs_exit_2_naming_the_key() {
    let good = fs::read_to_string(scenario("commensurate.json")).unwrap();
    let msg = parse_failure(&good.replace("\"levels\": 8", "\"levels\": \"eight\""));
    assert!(msg.contains("system.commensurate_oscillators.levels"), "{msg}");
    let msg = parse_failure(&good.replace("\"seed\": 42", "\"seed\": 42,\n  \"sead\": 1"));
    assert!(msg.contains("sead"), "{msg}");
    let msg = parse_failure(&good.replace("\"schema_version\": 1", "\"schema_version\": 9"));
    assert!(msg.contains("schema_version"), "{msg}");
    let msg = parse_failure(&good.replace("\"commensurate_oscillators\"", "\"pendulum\""));
    assert!(msg.contains("pendulum"), "{msg}");
    parse_failure("{ not json");
}

#[test]
fn bad_tolerance_variable_is_a_parse_error() {
    let o = periclock(&["verify", "--filter", "torus"], Some("tiny"));
    assert_eq!(o.status.code(), Some(2));
}

fn csv_rows(fig: &str) -> (String, Vec<Vec<f64>>) {
    let o = periclock(&["emit-figure", fig], None);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    (header, rows)
}

#[test]
fn fig1_has_three_plateaus() {
    let (header, rows) = csv_rows("fig1");
    assert_eq!(header, "s,value");
    assert_eq!(rows.len(), 600);
    let mut levels: Vec<f64> = Vec::new();
    for r in &rows {
        if levels.last().map_or(true, |l| (l - r[1]).abs() > 1e-12) {
            levels.push(r[1]);
        }
    }
    assert_eq!(levels.len(), 3);
    for w in levels.windows(2) {
        assert!((w[1] - w[0] + 0.5 * 2.0 * PI).abs() <= 1e-12);
    }
}

#[test]
fn fig2_marks_odd_multiples_of_pi() {
    let (header, rows) = csv_rows("fig2");
    assert_eq!(header, "s,F_value,gauge_fix_marker");
    let marked: Vec<f64> = rows.iter().filter(|r| r[2] == 1.0).map(|r| r[0]).collect();
    assert_eq!(marked.len(), 3);
    for (s, want) in marked.iter().zip([PI, 3.0 * PI, 5.0 * PI]) {
        assert!((s - want).abs() <= 1e-12);
    }
}

#[test]
fn figure_files_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        assert!(periclock(&["emit-figure", "fig2", "--out", p.to_str().unwrap()], None).status.success());
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn verify_filter_runs_one_group() {
    let o = periclock(&["verify", "--filter", "trinity", "--seed", "3"], None);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(2).filter(|l| l.contains('|')).collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|l| l.starts_with("trinity")));
}

#[test]
fn strict_tolerance_fails_verification() {
    let o = periclock(&["verify", "--filter", "moments"], Some("1e-15"));
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8(o.stdout).unwrap().contains("FAIL"));
}

#[test]
fn strict_tolerance_fails_a_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_periclock"));
    let o = cmd
        .args(["run", scenario("commensurate.json").to_str().unwrap(), "--out", out.to_str().unwrap()])
        .env("PERICLOCK_TOL", "1e-18")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    let r: serde_json::Value = serde_json::from_slice(&fs::read(&out).unwrap()).unwrap();
    assert_eq!(r["passed"], false);
}
