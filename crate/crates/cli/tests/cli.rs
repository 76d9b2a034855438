use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn llt_lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_llt-lab")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const TWO_STATE: &str = r#"{"model":{"type":"local_time","g":[[-1,1],[1,-1]]},"t_grid":[5,10,20],"grid":{"points":151}}"#;
const POISSON_BOTH: &str =
    r#"{"model":{"type":"marp","d0":[[-1]],"d1":[[1]]},"t_grid":[10,20],"density_source":"both","mc":{"n_paths":5000,"seed":9,"bins":30}}"#;

#[test]
fn run_writes_json_report() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "a.json", TWO_STATE);
    let out = dir.path().join("out");
    let o = llt_lab(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&out.join("report.json"));
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["points"].as_array().unwrap().len(), 3);
    for p in r["points"].as_array().unwrap() {
        assert!(p["sup_error"].as_f64().unwrap() >= 0.0);
        assert!(p["boundary_term"].as_f64().unwrap() >= 0.0);
    }
    assert!(r["fit"]["fit"]["slope"].is_number());
    assert!(r["fit"]["residual"].is_number());
}

#[test]
fn reports_are_byte_identical_across_threads() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "d.json", POISSON_BOTH);
    let mut bodies = Vec::new();
    for (i, threads) in ["1", "3"].iter().enumerate() {
        let out = dir.path().join(format!("out{i}"));
        let o = llt_lab(&["run", &cfg, "--out", out.to_str().unwrap(), "--threads", threads, "--seed", "42"]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        bodies.push(std::fs::read(out.join("report.json")).unwrap());
    }
    assert_eq!(bodies[0], bodies[1]);
    let r: Value = serde_json::from_slice(&bodies[0]).unwrap();
    assert_eq!(r["points"][0]["montecarlo"]["seed"], 42);
}

#[test]
fn csv_outputs_have_documented_columns() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "d.json", POISSON_BOTH);
    let out = dir.path().join("out");
    let o = llt_lab(&["run", &cfg, "--out", out.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(out.join("report.csv")).unwrap();
    assert!(table.lines().nth(1).unwrap().starts_with("t,sup_error,boundary_term"));
    assert_eq!(table.lines().count(), 4);
    let density = std::fs::read_to_string(out.join("density_n10.csv")).unwrap();
    assert_eq!(density.lines().next().unwrap(), "y,g_0_0");
    let samples = std::fs::read_to_string(out.join("samples_t10.csv")).unwrap();
    assert!(samples.contains("seed=9"));
    assert!(samples.contains("generator="));
    assert_eq!(samples.lines().filter(|l| !l.starts_with('#')).count(), 5001);

    let lt = write(dir.path(), "a.json", TWO_STATE);
    let out2 = dir.path().join("out2");
    assert_eq!(llt_lab(&["run", &lt, "--out", out2.to_str().unwrap(), "--format", "csv"]).status.code(), Some(0));
    let slice = std::fs::read_to_string(out2.join("density_t5.csv")).unwrap();
    assert_eq!(slice.lines().next().unwrap(), "y_0,value");
}

#[test]
fn lattice_chain_flags_assumptions() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "l.json",
        r#"{"model":{"type":"lattice","p":[[0.5,0.5],[0.5,0.5]],"increments":[[0,1],[0,1]]},
            "t_grid":[10,20],"density_source":"montecarlo","mc":{"n_paths":2000},"diagnostics":true}"#,
    );
    let out = dir.path().join("out");
    let o = llt_lab(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("N-L"));
    let r = read_json(&out.join("report.json"));
    assert_eq!(r["diagnostics"]["lattice_verdict"], "suspected_lattice");
}

#[test]
fn degenerate_covariance_exits_with_two() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "u.json",
        r#"{"model":{"type":"lattice","p":[[1]],"increments":[[1]]},"t_grid":[10,20],"density_source":"montecarlo","mc":{"n_paths":100}}"#,
    );
    let o = llt_lab(&["run", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("degenerate"));
}

#[test]
fn errors_exit_with_one() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nope.json");
    assert_eq!(llt_lab(&["run", missing.to_str().unwrap()]).status.code(), Some(1));
    let bad = write(dir.path(), "bad.json", r#"{"model":{"type":"local_time","g":[[-1,1],[1,-1]]},"t_grid":[10]}"#);
    assert_eq!(llt_lab(&["run", &bad, "--out", dir.path().join("o").to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(llt_lab(&["run", &bad, "--format", "xml"]).status.code(), Some(1));
    assert_eq!(llt_lab(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn diag_reports_each_assumption() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"model":{"type":"marp","d0":[[-2,1],[0,-3]],"d1":[[1,0],[1,2]]},"mc":{"n_paths":20000}}"#,
    );
    for (fmt, file) in [("json", "diagnostics.json"), ("csv", "diagnostics.csv")] {
        let out = dir.path().join(fmt);
        let o = llt_lab(&["diag", &cfg, "--out", out.to_str().unwrap(), "--format", fmt]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(out.join(file).exists());
    }
    let d = read_json(&dir.path().join("json/diagnostics.json"));
    assert_eq!(d["irreducible_aperiodic"], true);
    assert_eq!(d["moment3"]["method"], "closed_form");
    assert_eq!(d["absolute_continuity"]["singular_mass"], 0.0);
    let csv = std::fs::read_to_string(dir.path().join("csv/diagnostics.csv")).unwrap();
    for name in ["I-P", "M3", "AC1", "AC2", "N-L"] {
        assert!(csv.lines().any(|l| l.starts_with(name)), "{name}");
    }
}

#[test]
fn sweep_excludes_periodic_member() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "sym.json", r#"{"type":"local_time","g":[[-1,1],[1,-1]]}"#);
    let cfg = write(
        dir.path(),
        "fam.json",
        r#"{"family":{"kind":"members","members":["sym.json",
              {"type":"local_time","g":[[-2,2],[2,-2]]},
              {"type":"marp","d0":[[-1,0],[0,-1]],"d1":[[0,1],[1,0]]}]},
            "t_grid":[5,10,20],"grid":{"points":101}}"#,
    );
    let out = dir.path().join("out");
    let o = llt_lab(&["sweep", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let r = read_json(&out.join("family.json"));
    let members = r["members"].as_array().unwrap();
    assert_eq!(members[2]["excluded"], true);
    assert_eq!(members[0]["excluded"], false);
    assert!(r["alpha"].as_f64().unwrap() <= r["beta"].as_f64().unwrap());
    assert_eq!(r["max_error"].as_array().unwrap().len(), 3);
}
