//! Black-box tests of the `trajrecon` binary: artifact layout, exit
//! codes, error JSON, and determinism.

use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trajrecon"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str]) {
    let out = run(args);
    assert!(
        out.status.success(),
        "command {:?} failed:\nstdout: {}\nstderr: {}",
        args,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn stderr_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.trim()).unwrap_or_else(|e| panic!("stderr not JSON ({e}): {text}"))
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.toml");
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn full_pipeline_emits_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let out_s = out.to_string_lossy().into_owned();
    let config = write_config(
        dir.path(),
        "methods = [\"PCHIP\", \"VCHIP-ME\"]\nseed = 3\n[synth]\ntrips = 6\n[bench]\nn_values = [50, 100]\nbatch = 2\n",
    );

    run_ok(&["synth", "--config", &config, "--out", &out_s]);
    for name in ["raw.csv", "truth.json", "resolved_config.toml"] {
        assert!(out.join(name).exists(), "missing {name}");
    }

    run_ok(&["preprocess", "--config", &config, "--out", &out_s]);
    for name in ["dense.csv", "sparse.csv", "preprocess_report.json"] {
        assert!(out.join(name).exists(), "missing {name}");
    }

    run_ok(&["fit", "--config", &config, "--out", &out_s, "--dataset", "sparse"]);
    let models: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("models_sparse.json")).unwrap())
            .unwrap();
    assert_eq!(models.as_array().unwrap().len(), 2 * 6, "2 methods x 6 trips");
    let grid = std::fs::read_to_string(out.join("trajectories_sparse.csv")).unwrap();
    assert!(grid.lines().next().unwrap().starts_with("method,trip_id,t,x,v,a"));
    assert!(grid.lines().count() > 100);

    run_ok(&["evaluate", "--config", &config, "--out", &out_s]);
    let report = std::fs::read_to_string(out.join("report.json")).unwrap();
    let report: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert_eq!(report["fit"].as_array().unwrap().len(), 4, "2 methods x 2 datasets");
    assert_eq!(report["baseline_method"], "VCHIP-ME");
    assert_eq!(report["baseline_dataset"], "dense");
    assert!(out.join("timings.csv").exists());

    run_ok(&["bench", "--config", &config, "--out", &out_s]);
    let bench = std::fs::read_to_string(out.join("bench.csv")).unwrap();
    assert_eq!(bench.lines().count(), 1 + 2 * 2, "2 methods x 2 sizes");
}

#[test]
fn unknown_method_exits_two_and_names_the_token() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let out = run(&["synth", "--methods", "PCHIP,FRITZ", "--out", &out.to_string_lossy()]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["error"]["kind"], "unknown-method");
    assert!(err["error"]["message"].as_str().unwrap().contains("FRITZ"));
}

#[test]
fn bad_config_field_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "[preprocess]\nmax_jump = -5.0\n");
    let out = run(&["synth", "--config", &config]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"]["kind"], "config");
}

#[test]
fn baseline_flag_must_be_method_dash_dataset() {
    let out = run(&["evaluate", "--baseline", "nodash"]);
    assert_eq!(out.status.code(), Some(2));

    // Baseline dataset must be among the evaluated datasets.
    let dir = tempfile::tempdir().unwrap();
    let trips = dir.path().join("trips.csv");
    std::fs::write(&trips, "trip_id,t,x,v,stopped\nA,0,0,10,0\nA,10,100,10,0\n").unwrap();
    let out = run(&[
        "evaluate",
        "--dataset",
        &trips.to_string_lossy(),
        "--baseline",
        "VCHIP-ME-dense",
        "--out",
        &dir.path().join("o").to_string_lossy(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_json(&out)["error"]["message"]
        .as_str()
        .unwrap()
        .contains("dense"));
}

#[test]
fn velocity_method_refuses_velocity_free_trips() {
    let dir = tempfile::tempdir().unwrap();
    let trips = dir.path().join("trips.csv");
    std::fs::write(
        &trips,
        "trip_id,t,x,v,stopped\nA,0,0,,0\nA,10,100,,0\nA,20,260,,0\nA,30,420,,0\n",
    )
    .unwrap();
    let out = run(&[
        "fit",
        "--methods",
        "VCHIP",
        "--dataset",
        &trips.to_string_lossy(),
        "--out",
        &dir.path().join("o").to_string_lossy(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_json(&out);
    assert_eq!(err["error"]["kind"], "runtime");
    let message = err["error"]["message"].as_str().unwrap().to_ascii_lowercase();
    assert!(message.contains("velocit"), "{message}");
}

#[test]
fn repeated_runs_are_byte_identical_outside_timings() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "methods = [\"LSEG\", \"LVMI\"]\nseed = 11\n[synth]\ntrips = 4\n",
    );

    let mut outs = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let out_s = out.to_string_lossy().into_owned();
        run_ok(&["synth", "--config", &config, "--out", &out_s]);
        run_ok(&["preprocess", "--config", &config, "--out", &out_s]);
        run_ok(&["evaluate", "--config", &config, "--out", &out_s]);
        outs.push(out);
    }

    for name in [
        "raw.csv",
        "truth.json",
        "dense.csv",
        "sparse.csv",
        "preprocess_report.json",
        "fit_metrics.csv",
        "profile_metrics.csv",
        "intersection_metrics.csv",
        "report.json",
        "resolved_config.toml",
    ] {
        let a = std::fs::read(outs[0].join(name)).unwrap();
        let b = std::fs::read(outs[1].join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}
