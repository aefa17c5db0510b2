use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_drazin-lab"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin()
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&o.stdout)
        )
    })
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

fn entries(v: &Value) -> Vec<[f64; 2]> {
    v["data"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| [e[0].as_f64().unwrap(), e[1].as_f64().unwrap()])
        .collect()
}

#[test]
fn compute_identity_and_nilpotent() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "i.json",
        r#"{"n":2,"data":[[1,0],[0,0],[0,0],[1,0]]}"#,
    );
    let o = run(dir.path(), &["compute", "i.json"]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert_eq!(v["index"], 0);
    assert_eq!(
        entries(&v["inverse"]),
        vec![[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]
    );

    write(
        dir.path(),
        "j.json",
        r#"{"n":2,"data":[[0,0],[1,0],[0,0],[0,0]]}"#,
    );
    let v = stdout_json(&run(dir.path(), &["compute", "j.json"]));
    assert_eq!(v["index"], 2);
    assert!(entries(&v["inverse"]).iter().all(|e| *e == [0.0, 0.0]));
}

#[test]
fn compute_block_example() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "b.json",
        r#"{"n":3,"data":[[2,0],[0,0],[0,0],[0,0],[0,0],[1,0],[0,0],[0,0],[0,0]]}"#,
    );
    let v = stdout_json(&run(dir.path(), &["compute", "b.json"]));
    let d = entries(&v["inverse"]);
    assert!((d[0][0] - 0.5).abs() < 1e-14);
    assert!(d[1..]
        .iter()
        .all(|e| e[0].abs() < 1e-14 && e[1].abs() < 1e-14));
}

#[test]
fn parse_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bad.json", r#"{"n":2,"data":[[1,0]]}"#);
    let o = run(dir.path(), &["compute", "bad.json"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("`data`"));

    write(dir.path(), "bad2.json", r#"{"data":[[1,0]]}"#);
    let o = run(dir.path(), &["compute", "bad2.json"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("`n`"));

    assert_eq!(code(&run(dir.path(), &["compute", "missing.json"])), 3);
    assert_eq!(code(&run(dir.path(), &["no-such-command"])), 3);
}

#[test]
fn compute_output_feeds_check() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "p.json",
        r#"{"n":2,"data":[[1,0],[1,0],[0,0],[0,0]]}"#,
    );
    let o = run(dir.path(), &["compute", "p.json"]);
    fs::write(dir.path().join("pd.json"), &o.stdout).unwrap();
    let o = run(
        dir.path(),
        &[
            "check",
            "--identity",
            "PROP34",
            "p.json",
            "pd.json",
            "--m",
            "2",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout_json(&o)["verdict"], "pass");
}

#[test]
fn generate_pair_alpha_scalar() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &[
            "generate", "pairα", "--alpha", "1", "--n", "1", "--seed", "7", "--out", "out",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let read = |name: &str| -> [f64; 2] {
        let v: Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("out").join(name)).unwrap())
                .unwrap();
        entries(&v)[0]
    };
    let (a, b) = (read("x1.json"), read("x2.json"));
    let prod = [a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0]];
    let sum = [a[0] + b[0], a[1] + b[1]];
    assert!(((prod[0] - sum[0]).powi(2) + (prod[1] - sum[1]).powi(2)).sqrt() <= 1e-12);
    assert!(String::from_utf8_lossy(&o.stdout).contains("constraint residual"));
}

#[test]
fn generate_idempotent_trace_is_rank() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &[
            "generate",
            "idempotent",
            "--n",
            "4",
            "--rank",
            "2",
            "--out",
            ".",
        ],
    );
    assert_eq!(code(&o), 0);
    let v: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("p.json")).unwrap()).unwrap();
    let d = entries(&v);
    let trace: f64 = (0..4).map(|i| d[5 * i][0]).sum();
    let trace_im: f64 = (0..4).map(|i| d[5 * i][1]).sum();
    assert!((trace - 2.0).abs() < 1e-10 && trace_im.abs() < 1e-10);
}

#[test]
fn generate_guards() {
    let dir = tempfile::tempdir().unwrap();
    let excluded = [
        "generate",
        "triple-sum",
        "--alpha1",
        "1",
        "--alpha2",
        "1",
        "--beta",
        "0",
    ];
    assert_eq!(code(&run(dir.path(), &excluded)), 4);
    let mut audit = excluded.to_vec();
    audit.push("--audit-mode");
    assert_eq!(code(&run(dir.path(), &audit)), 0);
    assert_eq!(
        code(&run(
            dir.path(),
            &["generate", "pair-alpha", "--alpha", "0"]
        )),
        4
    );
    assert_eq!(
        code(&run(
            dir.path(),
            &["generate", "pair0", "--n", "2", "--rank", "2"]
        )),
        4
    );
}

#[test]
fn check_triples_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let params = ["--alpha1", "0.5", "--alpha2", "0.3i", "--beta", "0.2"];
    let mut gen = vec!["generate", "triple-sum", "--n", "3", "--seed", "3"];
    gen.extend(params);
    assert_eq!(code(&run(dir.path(), &gen)), 0);
    for id in ["EQ3", "EQ5"] {
        let mut args = vec!["check", "--identity", id, "x1.json", "x2.json", "x3.json"];
        args.extend(params);
        let o = run(dir.path(), &args);
        assert_eq!(code(&o), 0, "{id}: {}", String::from_utf8_lossy(&o.stderr));
        let v = stdout_json(&o);
        assert_eq!(v["identity_id"], id);
        assert!(v["residual"].as_f64().unwrap() <= 1e-8);
        assert!(v["context"]["lambda"].is_array());
    }
    let o = run(
        dir.path(),
        &[
            "check",
            "--identity",
            "EQ3",
            "x1.json",
            "x2.json",
            "x3.json",
            "--alpha1",
            "0.9",
        ],
    );
    assert_eq!(code(&o), 5);

    let o = run(
        dir.path(),
        &[
            "generate",
            "triple-idem",
            "--n",
            "3",
            "--lambda",
            "2",
            "--gamma1",
            "0.5",
        ],
    );
    assert_eq!(code(&o), 0);
    let o = run(
        dir.path(),
        &[
            "check",
            "--identity",
            "EQ7",
            "x1.json",
            "x2.json",
            "x3.json",
            "--alpha1",
            "0.5",
            "--alpha2",
            "2",
            "--lambda",
            "1+1i",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn sum_formula_witness_is_under_audit() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.json", r#"{"n":1,"data":[[3,0]]}"#);
    write(dir.path(), "b.json", r#"{"n":1,"data":[[1.5,0]]}"#);
    let o = run(
        dir.path(),
        &[
            "check",
            "--identity",
            "THM41_SUM",
            "a.json",
            "b.json",
            "--alpha",
            "1",
        ],
    );
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert_eq!(v["verdict"], "under-audit");
    assert_eq!(entries(&v["values"]["formula"])[0], [0.0, 0.0]);
    assert!((entries(&v["values"]["engine"])[0][0] - 2.0 / 9.0).abs() < 1e-12);
}

#[test]
fn substitution_checks() {
    let dir = tempfile::tempdir().unwrap();
    for id in ["CARDANO_SUM", "CARDANO_PROD", "QUAD_SUB"] {
        let o = run(
            dir.path(),
            &[
                "check",
                "--identity",
                id,
                "--mu",
                "0.3-0.4i",
                "--mu",
                "2",
                "--alpha",
                "0.5",
                "--alpha1",
                "0.2",
                "--alpha2",
                "-0.1i",
                "--beta",
                "0.3",
            ],
        );
        assert_eq!(code(&o), 0, "{id}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout_json(&o)["context"]["mu"].is_array());
    }
    assert_eq!(
        code(&run(dir.path(), &["check", "--identity", "CARDANO_SUM"])),
        4
    );
}

#[test]
fn lemma33_check() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "x.json",
        r#"{"n":2,"data":[[1,0],[0,0],[0,0],[0,0]]}"#,
    );
    let o = run(
        dir.path(),
        &[
            "check",
            "--identity",
            "LEMMA33_INV",
            "x.json",
            "--coeff",
            "0",
            "--coeff",
            "-1",
            "--coeff",
            "1",
        ],
    );
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert_eq!(v["values"]["report"]["f_invertible"], false);
    assert_eq!(v["values"]["report"]["equivalent"], true);
}

#[test]
fn suite_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &[
            "suite", "--trials", "1", "--dims", "2", "--format", "csv", "--out", "r.csv",
        ],
    );
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(dir.path().join("r.csv")).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(
        lines[0],
        "identity_id,seed,n,verdict,max_residual,wall_time_ms"
    );
    assert_eq!(lines.len(), 13);
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("passed=12 failed=0"));

    write(
        dir.path(),
        "cfg.json",
        r#"{"trials_per_identity": 1, "dims": [1, 3]}"#,
    );
    let o = run(
        dir.path(),
        &["suite", "--config", "cfg.json", "--out", "r.json"],
    );
    assert_eq!(code(&o), 0);
    let v: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 24);

    write(dir.path(), "bad.json", r#"{"trials_per_identity": "x"}"#);
    assert_eq!(
        code(&run(dir.path(), &["suite", "--config", "bad.json"])),
        3
    );
    assert_eq!(code(&run(dir.path(), &["suite", "--trials", "0"])), 3);
}
