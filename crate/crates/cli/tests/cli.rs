use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn gep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gep")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A quick search on the stand-in system.
fn quick<'a>(cmd: &'a str, out: &'a Path, extra: &[&'a str]) -> Vec<&'a str> {
    let config = Box::leak(data("paper_system.json").into_boxed_path());
    let mut v = vec![
        cmd,
        "--config",
        arg(config),
        "--out",
        arg(out),
        "--population",
        "16",
        "--generations",
        "3",
        "--runs",
        "2",
    ];
    v.extend_from_slice(extra);
    v
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn body(p: &Path) -> String {
    let text = fs::read_to_string(p).unwrap();
    text.split_once('\n').unwrap().1.to_string()
}

#[test]
fn missing_config_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = gep(&[
        "solve",
        "--config",
        "/nonexistent/config.json",
        "--out",
        arg(dir.path()),
    ]);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn malformed_config_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    let mut doc: Value = serde_json::from_str(&fs::read_to_string(data("paper_system.json")).unwrap()).unwrap();
    doc["units"][0]["invest_cost"]["unit"] = "per_kwh".into();
    fs::write(&bad, doc.to_string()).unwrap();
    let out = gep(&["solve", "--config", arg(&bad), "--out", arg(dir.path())]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("units[0].invest_cost.unit"));

    let out = gep(&["solve", "--out", arg(dir.path())]);
    assert_eq!(code(&out), 2);
    let out = gep(&[
        "solve",
        "--config",
        arg(&data("paper_system.json")),
        "--regime",
        "gale",
        "--out",
        arg(dir.path()),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn all_infeasible_sweep_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = gep(&quick("sweep-penetration", dir.path(), &["--w", "60"]));
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    // Results are still written.
    assert!(dir.path().join("penetration.csv").exists());
}

#[test]
fn every_output_carries_the_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = gep(&quick("solve", dir.path(), &["--seed", "7"]));
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = read_json(&dir.path().join("manifest.json"));
    let hash = manifest["header"]["config_sha256"].as_str().unwrap();
    assert_eq!(hash.len(), 64);
    assert_eq!(manifest["header"]["seed"], 7);
    let files = manifest["files"].as_array().unwrap();
    assert!(files.len() >= 6);
    for f in files {
        let path = dir.path().join(f.as_str().unwrap());
        let text = fs::read_to_string(&path).unwrap();
        if path.extension().unwrap() == "csv" {
            assert_eq!(
                text.lines().next().unwrap(),
                format!("# gep solve seed=7 config_sha256={hash}")
            );
        } else {
            assert_eq!(read_json(&path)["header"], manifest["header"]);
        }
    }
}

#[test]
fn evaluating_the_solved_plan_reproduces_its_breakdown() {
    let dir = tempfile::tempdir().unwrap();
    let solved = dir.path().join("solve");
    let checked = dir.path().join("evaluate");
    assert_eq!(code(&gep(&quick("solve", &solved, &[]))), 0);
    let plan = solved.join("plan.csv");
    let config = data("paper_system.json");
    let out = gep(&[
        "evaluate",
        "--config",
        arg(&config),
        "--plan",
        arg(&plan),
        "--out",
        arg(&checked),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        read_json(&solved.join("breakdown.json"))["breakdown"],
        read_json(&checked.join("breakdown.json"))["breakdown"]
    );
    assert_eq!(
        body(&solved.join("breakdown.csv")),
        body(&checked.join("breakdown.csv"))
    );
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let one = dir.path().join("one");
    let four = dir.path().join("four");
    assert_eq!(
        code(&gep(&quick("solve", &one, &["--seed", "42", "--threads", "1"]))),
        0
    );
    assert_eq!(
        code(&gep(&quick("solve", &four, &["--seed", "42", "--threads", "4"]))),
        0
    );
    let mut names: Vec<_> = fs::read_dir(&one).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(!names.is_empty());
    for n in names {
        assert_eq!(
            fs::read(one.join(&n)).unwrap(),
            fs::read(four.join(&n)).unwrap(),
            "{n:?}"
        );
    }
}

#[test]
fn excluded_types_leave_the_plan() {
    let dir = tempfile::tempdir().unwrap();
    let out = gep(&quick("solve", dir.path(), &["--exclude-types", "WIND"]));
    assert!(matches!(code(&out), 0 | 3), "{}", String::from_utf8_lossy(&out.stderr));
    let plan = body(&dir.path().join("plan.csv"));
    let columns = plan.lines().next().unwrap();
    assert!(columns.starts_with("stage,"));
    assert!(!columns.split(',').any(|c| c == "WIND"), "{columns}");

    let out = gep(&quick("solve", dir.path(), &["--exclude-types", "FUSION"]));
    assert_eq!(code(&out), 2);
}

#[test]
fn single_reliable_turbine_farm_is_the_turbine() {
    let dir = tempfile::tempdir().unwrap();
    let table = data("turbine_weak.csv");
    let out = gep(&[
        "wind-model",
        "--turbine-model",
        arg(&table),
        "--turbines",
        "1",
        "--for",
        "0",
        "--out",
        arg(dir.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        body(&dir.path().join("farm_model.csv")),
        body(&dir.path().join("turbine_model.csv"))
    );
}

#[test]
fn wind_model_without_a_source_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&gep(&["wind-model", "--out", arg(dir.path())])), 2);
}
