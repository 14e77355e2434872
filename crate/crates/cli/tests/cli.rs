use std::process::Command;

fn qtwist(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_qtwist")).args(args).env_remove("QTWIST_SEED").output().expect("spawn qtwist")
}

#[test]
fn unknown_suite_is_a_usage_error() {
    let out = qtwist(&["check", "bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("usage"));
}

#[test]
fn invalid_config_values_are_usage_errors() {
    assert_eq!(qtwist(&["check", "algebra", "--n", "1"]).status.code(), Some(2));
    assert_eq!(qtwist(&["check", "algebra", "--samples", "0"]).status.code(), Some(2));
    assert_eq!(qtwist(&["check", "algebra", "--format", "yaml"]).status.code(), Some(2));
    assert_eq!(qtwist(&["check", "algebra", "--config", "/nonexistent/qtwist.conf"]).status.code(), Some(2));
}

#[test]
fn json_reports_are_deterministic() {
    let args = ["check", "twistor", "--samples", "20", "--seed", "7", "--format", "json"];
    let a = qtwist(&args);
    let b = qtwist(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let doc: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(doc["schema"], 1);
    assert_eq!(doc["config"]["seed"], 7);
    let reports = doc["reports"].as_array().unwrap();
    assert!(!reports.is_empty());
    let ids: Vec<&str> = reports.iter().map(|r| r["check-id"].as_str().unwrap()).collect();
    let mut sorted = ids.clone();
    sorted.sort();
    assert_eq!(ids, sorted);
    assert!(reports.iter().all(|r| r["anchor"].as_str().is_some_and(|s| !s.is_empty())));
    assert!(reports.iter().all(|r| r.get("elapsed_ms").is_none()));
}

#[test]
fn seed_sources_and_config_file() {
    let dir = std::env::temp_dir().join(format!("qtwist-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let conf = dir.join("run.conf");
    std::fs::write(&conf, "# comment\nsamples = 5\nseed = 11\nformat = json\n").unwrap();
    let conf = conf.to_str().unwrap();

    let from_file: serde_json::Value = serde_json::from_slice(&qtwist(&["check", "algebra", "--config", conf]).stdout).unwrap();
    assert_eq!(from_file["config"]["seed"], 11);
    assert_eq!(from_file["config"]["samples"], 5);

    let env = Command::new(env!("CARGO_BIN_EXE_qtwist"))
        .args(["check", "algebra", "--config", conf])
        .env("QTWIST_SEED", "13")
        .output()
        .unwrap();
    let from_env: serde_json::Value = serde_json::from_slice(&env.stdout).unwrap();
    assert_eq!(from_env["config"]["seed"], 13);

    let flag: serde_json::Value =
        serde_json::from_slice(&qtwist(&["check", "algebra", "--config", conf, "--seed", "17", "--samples", "3"]).stdout).unwrap();
    assert_eq!(flag["config"]["seed"], 17);
    assert_eq!(flag["config"]["samples"], 3);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn text_output_has_suite_counts_and_timings_on_stderr() {
    let out = qtwist(&["check", "ehrep", "--samples", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("suite ehrep: 5 passed, 0 failed, 0 skipped"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("elapsed:"));
}
