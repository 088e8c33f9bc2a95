use std::process::{Command, Output};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_imaginarity-lab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("json output")
}

#[test]
fn measures_of_imbit() {
    let v = json(&lab(&["measures", "--state", "imbit+"]));
    assert!((v["fidelity_of_imaginarity"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((v["robustness"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((v["geometric"].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn assisted_werner_matches_oracle() {
    let v = json(&lab(&["assisted", "--state", "werner(0.6)"]));
    let cf = v["closed_form"].as_f64().unwrap();
    let or = v["oracle"].as_f64().unwrap();
    assert!((cf - 0.8).abs() < 1e-12);
    assert!((cf - or).abs() < 2e-3);
}

#[test]
fn convert_reports_branch() {
    let v = json(&lab(&[
        "convert", "--alpha", "0.7853981633974483", "--beta", "0.5", "--fidelity", "1",
    ]));
    assert_eq!(v["branch"], "deterministic");
    assert!((v["P_f"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn sdp_bound_identity_target() {
    let v = json(&lab(&["sdp-bound", "--state", "phi+", "--target", "imbit+", "--p", "1"]));
    assert!(v["value"].as_f64().unwrap() > 1.0 - 1e-5);
}

#[test]
fn discriminate_real_versus_any() {
    let real = json(&lab(&[
        "discriminate", "--task", "taskA", "--param", "0.75", "--constraint", "real",
    ]));
    let any = json(&lab(&[
        "discriminate", "--task", "taskA", "--param", "0.75", "--constraint", "any",
    ]));
    assert!((real["p_succ"].as_f64().unwrap() - 0.625).abs() < 1e-3);
    assert!((any["p_succ"].as_f64().unwrap() - 1.0).abs() < 1e-10);
}

#[test]
fn sweep_writes_csv_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let out = lab(&[
        "--out",
        path.to_str().unwrap(),
        "discriminate",
        "--task",
        "taskB",
        "--sweep",
        "0:1:3",
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# imaginarity-lab v1"));
    assert_eq!(lines.next().unwrap(), "param,p_allowed,p_real");
    assert_eq!(lines.count(), 3);
}

#[test]
fn experiment_is_deterministic() {
    let args = ["experiment", "fig2a_pure", "--grid", "0,0.5,1"];
    let a = lab(&args);
    let b = lab(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn validation_errors_exit_2() {
    assert_eq!(lab(&["measures", "--state", "nope"]).status.code(), Some(2));
    assert_eq!(
        lab(&["discriminate", "--task", "taskA", "--param", "1.5"]).status.code(),
        Some(2)
    );
    assert_eq!(
        lab(&["convert", "--alpha", "0.3", "--beta", "0.5", "--fidelity", "1.5"]).status.code(),
        Some(2)
    );
}

#[test]
fn non_convergence_exits_3() {
    let out = lab(&[
        "sdp-bound", "--state", "phi+", "--target", "imbit+", "--p", "1", "--max-iter", "5",
    ]);
    assert_eq!(out.status.code(), Some(3));
}
