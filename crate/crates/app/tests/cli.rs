use std::path::Path;
use std::process::{Command, Output};

fn siot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_siot")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn generate_and_build(dir: &Path) -> std::path::PathBuf {
    let params = dir.join("params.json");
    std::fs::write(&params, r#"{"preset": "three_clusters", "n_devices": 150}"#).unwrap();
    let city = dir.join("city");
    let out = siot(&["generate", "--params", s(&params), "--seed", "3", "--out", s(&city)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["devices.csv", "owners.csv", "contacts.csv", "ground_truth.json"] {
        assert!(city.join(f).exists(), "{f}");
    }
    let archive = dir.join("index.json");
    let out = siot(&[
        "build",
        "--devices",
        s(&city.join("devices.csv")),
        "--owners",
        s(&city.join("owners.csv")),
        "--trace",
        s(&city.join("contacts.csv")),
        "--seed",
        "3",
        "--out",
        s(&archive),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = String::from_utf8_lossy(&out.stdout);
    assert!(summary.contains("CLOR") && summary.contains("communities"), "{summary}");
    assert!(dir.join("stats").join("clor_communities.csv").exists());
    archive
}

#[test]
fn generate_build_query_stats() {
    let dir = tempfile::tempdir().unwrap();
    let archive = generate_and_build(dir.path());

    let out = siot(&[
        "query",
        "--archive",
        s(&archive),
        "--text",
        "What is the humidity level near the beach?",
        "--requester",
        "0",
        "--pos",
        "0.2,0.25",
        "--trust",
        "any",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let result: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(result["application"], "weather");
    assert_eq!(result["target_name"], "beach");

    let out = siot(&["query", "--archive", s(&archive), "--text", "qwzx blorp", "--requester", "0", "--pos", "0.5,0.5"]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(err["error"], "unknown_application");
    assert_eq!(err["scores"].as_array().unwrap().len(), 3);

    let stats = dir.path().join("again");
    let out = siot(&["stats", "--archive", s(&archive), "--out", s(&stats)]);
    assert!(out.status.success());
    let built = std::fs::read_to_string(dir.path().join("stats/clor_communities.csv")).unwrap();
    assert_eq!(std::fs::read_to_string(stats.join("clor_communities.csv")).unwrap(), built);
}

#[test]
fn build_requires_owner_and_sor_sources() {
    let out = siot(&["build", "--devices", "d.csv", "--out", "x.json"]);
    assert!(!out.status.success());
}

#[test]
fn missing_catalogue_names_the_file() {
    let out = siot(&["build", "--devices", "/nonexistent/devices.csv", "--ws", "10,2,0.1", "--trace", "t.csv", "--out", "x.json"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/devices.csv"));
}
