use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spike-cluster")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("run.toml");
    std::fs::write(&p, body).unwrap();
    p.display().to_string()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const N1: &str = "[problem]\ndim = 1\np = 3.0\n";

#[test]
fn constants_closed_form_and_repeatable() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), N1);
    let out = tmp.path().join("a");
    let o = bin(&["constants", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let first = std::fs::read(out.join("constants.json")).unwrap();
    let v: Value = serde_json::from_slice(&first).unwrap();
    let rel = |k: &str, want: f64| (v[k].as_f64().unwrap() / want - 1.0).abs();
    assert!(rel("c2", 3.0) < 1e-4);
    assert!(rel("c3", 12.0) < 1e-4);
    assert!(rel("w0", 1.5) < 1e-4);
    assert!(rel("A", 6.0) < 1e-2);

    // Second run reads the cached profile; a third solves afresh elsewhere.
    assert!(bin(&["constants", "--config", &cfg, "--out", out.to_str().unwrap(), "--cache-only"]).status.success());
    assert_eq!(std::fs::read(out.join("constants.json")).unwrap(), first);
    let fresh = tmp.path().join("b");
    assert!(bin(&["constants", "--config", &cfg, "--out", fresh.to_str().unwrap()]).status.success());
    assert_eq!(std::fs::read(fresh.join("constants.json")).unwrap(), first);
}

#[test]
fn cache_miss_is_a_validation_exit() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), N1);
    let o = bin(&["constants", "--config", &cfg, "--out", tmp.path().join("x").to_str().unwrap(), "--cache-only"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cache miss"));
}

#[test]
fn bad_configs_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    for body in [
        "[ladder]\neps = [0.05, 0.07]\n",
        "[problem]\nlambdas = [1.0, 2.0]\n",
        "[grid]\nkappa = 0.5\n",
        "unknown_key = 1\n",
        "[problem]\ndim = 3\np = 7.0\nlambdas = [1.0, -1.0, -1.0]\n",
    ] {
        let cfg = write_config(tmp.path(), body);
        let o = bin(&["profile", "--config", &cfg, "--out", tmp.path().join("o").to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{body}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = bin(&["profile", "--config", tmp.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = bin(&["profile", "--threads", "0", "--out", tmp.path().join("t").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    // dim = 1 has no saddle potential.
    let cfg = write_config(tmp.path(), N1);
    let o = bin(&["search", "--config", &cfg, "--out", tmp.path().join("s").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn lemma_check_verdicts_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "seed = 3\n[lemma]\nell_min = 5\nell_max = 7\ntrials = 300\n");
    let out = tmp.path().join("l");
    let o = bin(&["lemma-check", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let verdicts = std::fs::read_to_string(out.join("lemma_verdicts.txt")).unwrap();
    let lines: Vec<&str> = verdicts.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("l=5: no nontrivial kernel found"));
    assert!(lines[1].starts_with("l=6: no nontrivial kernel found"));
    assert_eq!(lines[2], "l=7: nontrivial kernel found (hexagon+center)");

    let m = json(&out.join("manifest_lemma-check.json"));
    assert_eq!(m["command"], "lemma-check");
    assert_eq!(m["config"]["seed"], 3);
    let stages = m["stages"].as_array().unwrap();
    assert_eq!(stages.len(), 4);
    assert_eq!(stages[0]["outputs"][0], "lemma_l5.json");

    // Re-running from the manifest reproduces the reports byte for byte.
    let report = std::fs::read(out.join("lemma_l7.json")).unwrap();
    let again = tmp.path().join("again");
    let manifest = out.join("manifest_lemma-check.json");
    let o = bin(&["lemma-check", "--config", manifest.to_str().unwrap(), "--out", again.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(std::fs::read(again.join("lemma_l7.json")).unwrap(), report);
    assert_eq!(std::fs::read_to_string(again.join("lemma_verdicts.txt")).unwrap(), verdicts);
}

#[test]
fn reduce_and_search_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[ladder]\neps = [0.05]\n[reduce]\nsamples = 5\n");
    let out = tmp.path().join("r");
    for verb in ["reduce", "search"] {
        let o = bin(&[verb, "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{verb}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let csv = std::fs::read_to_string(out.join("reduce_eps0.05.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "a1,r2,J,grad_norm");
    assert!(csv.lines().count() > 1);
    let rep = json(&out.join("search_eps0.05.json"));
    let results = rep["results"].as_array().unwrap();
    assert!(!results.is_empty());
    for r in results {
        let s = &r["signature"];
        let total = s["positive"].as_u64().unwrap() + s["negative"].as_u64().unwrap() + s["near_null"].as_u64().unwrap();
        assert_eq!(total, 4);
    }
}

#[test]
fn pde_peaks_and_field_dump() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[ladder]\neps = [0.1, 0.05]\n");
    let out = tmp.path().join("p");
    let o = bin(&["pde", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    // ε = 0.1 puts the box where V < 0 and is skipped.
    assert!(json(&out.join("pde_eps0.1.json"))["skipped"].is_string());
    let peaks = std::fs::read_to_string(out.join("pde_eps0.05_peaks.csv")).unwrap();
    let rows: Vec<&str> = peaks.lines().collect();
    assert_eq!(rows[0], "i,x,y,sign,height");
    assert_eq!(rows.len(), 3);
    let summary = json(&out.join("pde_eps0.05.json"));
    assert_eq!(summary["signs_match"], true);

    let bytes = std::fs::read(out.join("pde_eps0.05_field.bin")).unwrap();
    let n = u64::from_le_bytes(bytes[..8].try_into().unwrap()) as usize;
    assert_eq!(bytes.len(), 16 + 8 * n * n);
    assert_eq!(n as u64, summary["n"].as_u64().unwrap());
}
