use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_tensorhpo");

fn tensorhpo(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(dir)
        .env_remove("TENSORHPO_OUTPUT_DIR")
        .env_remove("TENSORHPO_SERVER")
        .output()
        .unwrap()
}

fn write_config(dir: &Path, name: &str, method: &str, objective: &str, trials: usize, dims: &str) {
    let text = format!(
        "[experiment]\nmethod = \"{method}\"\nobjective = \"{objective}\"\ntrials = {trials}\n\
         base_seed = 2\noutput_path = \"out/{name}.csv\"\n\n[space]\ndims = {dims}\npoints = 4\n"
    );
    std::fs::write(dir.join(format!("{name}.toml")), text).unwrap();
}

fn error_line(out: &Output) -> Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let last = stderr.lines().last().unwrap_or_default();
    serde_json::from_str(last).unwrap_or_else(|_| panic!("not a JSON error line: {stderr}"))
}

#[test]
fn run_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "gs", "gs", "schwefel", 2, "[3]");
    let out = tensorhpo(dir.path(), &["run", "--config", "gs.toml", "--quiet"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out/gs.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "trial,seed,method,objective,d,n,r,best_fitness,distinct_evals,total_requests,wall_ms");
    assert_eq!(lines.len(), 4);
    assert!(lines[3].starts_with("summary,"));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/gs.json")).unwrap()).unwrap();
    assert_eq!(report["groups"][0]["summary"]["er"], 64);
    assert!(String::from_utf8_lossy(&out.stdout).contains("er=64"));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "tt", "tt", "fletcher_powell", 3, "[3, 6]");
    let first = dir.path().join("first.csv");
    assert!(tensorhpo(dir.path(), &["run", "--config", "tt.toml"]).status.success());
    std::fs::rename(dir.path().join("out/tt.csv"), &first).unwrap();
    assert!(tensorhpo(dir.path(), &["run", "--config", "tt.toml"]).status.success());
    assert_eq!(std::fs::read(first).unwrap(), std::fs::read(dir.path().join("out/tt.csv")).unwrap());
}

#[test]
fn output_dir_override() {
    let dir = tempfile::tempdir().unwrap();
    let alt = dir.path().join("elsewhere");
    write_config(dir.path(), "gs", "gs", "vincent", 1, "[3]");
    let out = Command::new(BIN)
        .args(["run", "--config", "gs.toml", "--quiet"])
        .current_dir(dir.path())
        .env("TENSORHPO_OUTPUT_DIR", &alt)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(alt.join("gs.csv").exists() && alt.join("gs.json").exists());
    assert!(!dir.path().join("out").exists());
}

#[test]
fn invalid_config_exits_with_field_errors() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "bad", "gs", "schwefel", 0, "[3]");
    let out = tensorhpo(dir.path(), &["run", "--config", "bad.toml"]);
    assert_eq!(out.status.code(), Some(2));
    let err = error_line(&out);
    assert_eq!(err["error"]["kind"], "ConfigInvalid");
    assert_eq!(err["error"]["fields"][0]["field"], "experiment.trials");

    let out = tensorhpo(dir.path(), &["run", "--config", "missing.toml"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_line(&out)["error"]["kind"], "Io");

    let out = tensorhpo(dir.path(), &["launch"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_line(&out)["error"]["kind"], "Usage");
}

#[test]
fn compare_reports() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "tt", "tt", "schwefel", 2, "[6, 3]");
    write_config(dir.path(), "gs", "gs", "schwefel", 1, "[3, 6]");
    write_config(dir.path(), "vi", "gs", "vincent", 1, "[3, 6]");
    for name in ["tt", "gs", "vi"] {
        assert!(tensorhpo(dir.path(), &["run", "--config", &format!("{name}.toml")]).status.success());
    }
    let out = tensorhpo(dir.path(), &["compare", "out/tt.csv", "out/gs.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = String::from_utf8(out.stdout).unwrap();
    let ds: Vec<&str> = table.lines().skip(1).take(2).map(|l| l.split_whitespace().next().unwrap()).collect();
    assert_eq!(ds, ["3", "6"]);

    let out = tensorhpo(dir.path(), &["compare", "out/gs.csv", "out/gs.csv", "--json"]);
    let cmp: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(cmp["rows"].as_array().unwrap().iter().all(|r| r["mean_delta"] == 0.0));

    let out = tensorhpo(dir.path(), &["compare", "out/gs.csv", "out/vi.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_line(&out)["error"]["kind"], "MismatchedExperiments");
}

#[test]
fn selftest_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = tensorhpo(dir.path(), &["selftest"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 7);
    assert!(text.lines().all(|l| l.starts_with("PASS ")));
}

#[test]
fn remote_server_and_unreachable_server() {
    let dir = tempfile::tempdir().unwrap();
    let mut server = Command::new(BIN)
        .args(["serve", "--addr", "127.0.0.1:0"])
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut lines = BufReader::new(server.stderr.take().unwrap()).lines();
    let url = loop {
        let line = lines.next().expect("server exited").unwrap();
        if let Some(url) = line.strip_prefix("listening on ") {
            break url.to_string();
        }
    };
    write_config(dir.path(), "gs", "gs", "schwefel", 1, "[3]");
    let out = tensorhpo(dir.path(), &["--server", &url, "run", "--config", "gs.toml"]);
    server.kill().unwrap();
    server.wait().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("out/gs.csv").exists());

    let out = tensorhpo(dir.path(), &["--server", &url, "run", "--config", "gs.toml"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_line(&out)["error"]["kind"], "Transport");
}

#[cfg(unix)]
#[test]
fn interrupt_flushes_partial_results() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "long", "tt", "schwefel", 1_000_000, "[10]");
    let mut child = Command::new(BIN)
        .args(["run", "--config", "long.toml", "--poll-ms", "10"])
        .current_dir(dir.path())
        .env_remove("TENSORHPO_OUTPUT_DIR")
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut lines = BufReader::new(child.stderr.take().unwrap()).lines();
    let first = lines.next().unwrap().unwrap();
    assert!(first.ends_with("/1000000 trials"), "{first}");
    let status = Command::new("kill").args(["-INT", &child.id().to_string()]).status().unwrap();
    assert!(status.success());
    let rest: Vec<String> = lines.map(Result::unwrap).collect();
    let code = child.wait().unwrap().code();
    assert_eq!(code, Some(130));
    let err: Value = serde_json::from_str(rest.last().unwrap()).unwrap();
    assert_eq!(err["error"]["kind"], "Cancelled");

    let csv = std::fs::read_to_string(dir.path().join("out/long.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines.len() >= 3 && lines.len() < 1_000_002);
    assert!(lines.last().unwrap().starts_with("summary,"));
    assert!(lines[1..lines.len() - 1].iter().enumerate().all(|(i, l)| l.starts_with(&format!("{i},"))));
}

#[test]
fn shipped_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = tensorhpo_core::harness::ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert!(!cfg.spaces().unwrap().is_empty());
        count += 1;
    }
    assert_eq!(count, 8);
}
