use std::path::Path;
use std::process::{Command, Output};

fn curvlab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_curvlab")).args(args).current_dir(dir).output().expect("binary runs")
}

fn text(out: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
}

#[test]
fn empty_vector_list_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("probe.toml");
    std::fs::write(&cfg, "vectors = []\n").unwrap();
    let out = curvlab(&["order-probe", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2), "{}", text(&out));
    assert!(text(&out).contains("vectors"), "{}", text(&out));
}

#[test]
fn malformed_vector_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = curvlab(&["order-probe", "--vector", "cos:1:e9"], dir.path());
    assert_eq!(out.status.code(), Some(2), "{}", text(&out));
}

#[test]
fn biinvariant_check_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = curvlab(&["biinvariant-check", "--output", "out"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", text(&out));
    let csvs: Vec<_> = std::fs::read_dir(dir.path().join("out"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    assert_eq!(csvs.len(), 1);
    let body = std::fs::read_to_string(&csvs[0]).unwrap();
    assert!(body.starts_with("# curvlab-schema v1"), "{body}");
    let json = csvs[0].with_extension("json");
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
    assert!(v.is_object());
}

#[test]
fn runs_are_deterministic() {
    let read = || {
        let dir = tempfile::tempdir().unwrap();
        let out = curvlab(&["identity-check", "--seed", "3", "--output", "out"], dir.path());
        assert_eq!(out.status.code(), Some(0), "{}", text(&out));
        let mut files: Vec<_> = std::fs::read_dir(dir.path().join("out")).unwrap().map(|e| e.unwrap().path()).collect();
        files.sort();
        files.iter().map(|p| std::fs::read_to_string(p).unwrap()).collect::<Vec<_>>()
    };
    assert_eq!(read(), read());
}

#[test]
fn torus_ricci_single_exponent() {
    let dir = tempfile::tempdir().unwrap();
    let out = curvlab(&["torus-ricci", "--s-values", "1", "--output", "out"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", text(&out));
    assert!(!text(&out).contains("FAIL"), "{}", text(&out));
}

#[test]
fn print_config_shows_resolved_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let out = curvlab(&["order-probe", "--print-config", "--m0", "0.5"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", text(&out));
    let resolved: toml::Value = toml::from_str(&String::from_utf8_lossy(&out.stdout)).unwrap();
    assert_eq!(resolved.get("m0").and_then(toml::Value::as_float), Some(0.5));
    assert!(resolved.get("vectors").is_some());
    // nothing is written
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}
