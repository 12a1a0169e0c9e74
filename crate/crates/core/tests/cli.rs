use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_weylflow"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn unknown_target_kind_is_a_schema_error_with_no_output() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(configs().join("circle_relax.json"))
        .unwrap()
        .replace("\"circle\"", "\"mobius\"");
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, text).unwrap();
    let out = dir.path().join("out");
    let status = bin()
        .args(["flow", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&status.stderr).contains("config error"));
    assert!(!out.exists());
}

#[test]
fn traveling_wave_config_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(configs().join("traveling_wave_T3.json")).unwrap()).unwrap();
    cfg["flow"]["window"] = 20.into();
    let path = dir.path().join("tw.json");
    std::fs::write(&path, cfg.to_string()).unwrap();
    let status = bin()
        .args(["flow", "--grid-override", "16", "--config"])
        .arg(&path)
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["flow"]["outcome"], "traveling_wave");
    assert_eq!(report["classification"]["weyl_class"]["tag"], "closed_nonexact");
}

#[test]
fn circle_relax_converges_and_reemits_identically() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let status = bin()
        .args(["flow", "--grid-override", "48,4", "--seed", "3", "--config"])
        .arg(configs().join("circle_relax.json"))
        .arg("--out")
        .arg(&a)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.join("report.json")).unwrap()).unwrap();
    let e = report["flow"]["final_energy"].as_f64().unwrap();
    assert!((e - std::f64::consts::PI).abs() < 1e-3);
    assert_eq!(report["provenance"]["seed"], 3);
    for f in ["series.csv", "residuals.csv", "final_map.csv", "timing.json"] {
        assert!(a.join(f).exists(), "{f}");
    }

    let b = dir.path().join("b");
    let status = bin()
        .args(["report", "--from"])
        .arg(a.join("report.json"))
        .arg("--out")
        .arg(&b)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    for f in ["report.json", "residuals.csv", "series.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn abelian_subcommand_writes_the_table() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["abelian", "--config"])
        .arg(configs().join("abelian_tables.json"))
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("abelian.csv")).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 8);
    assert!(rows[1].replace('"', "").starts_with("so(1,3),1,2,true"));
    assert!(rows[5].replace('"', "").starts_with("su(1,3),3,6,"));
}

#[test]
fn bundled_schema_is_current_and_configs_parse() {
    let out = bin().arg("schema").output().unwrap();
    assert!(out.status.success());
    let bundled = std::fs::read_to_string(configs().join("schema.json")).unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap(), bundled);
    for entry in std::fs::read_dir(configs()).unwrap() {
        let p = entry.unwrap().path();
        if p.file_name().unwrap() != "schema.json" {
            weylflow::config::ExperimentConfig::from_path(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        }
    }
}

#[test]
fn gauduchon_and_classify_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("g.json");
    std::fs::write(
        &cfg,
        r#"{
        "domain": {"grid": {"sizes": [12, 12, 4], "lengths": [6.283185307179586, 6.283185307179586, 6.283185307179586]},
                   "metric": {"family": "conformal", "phi": {"waves": [{"amplitude": 0.2, "wavevector": [1, 0, 0]}]}}},
        "higgs": {"family": "components", "components": [
            {"waves": [{"amplitude": 0.3, "wavevector": [0, 1, 0]}]},
            {"constant": 0.2}, {}]},
        "target": {"kind": "sphere", "m": 2, "radius": 1.0},
        "initial_map": {"family": "normalized", "components": [
            {"waves": [{"amplitude": 1.0, "wavevector": [1, 0, 0]}]},
            {"waves": [{"amplitude": 1.0, "wavevector": [0, 1, 0]}]},
            {"constant": 3.0}]}
    }"#,
    )
    .unwrap();
    let g = dir.path().join("g");
    let status = bin().args(["gauduchon", "--config"]).arg(&cfg).arg("--out").arg(&g).status().unwrap();
    assert_eq!(status.code(), Some(0));
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(g.join("report.json")).unwrap()).unwrap();
    assert_eq!(r["gauduchon"]["converged"], true);
    assert!(r["gauduchon"]["residual"].as_f64().unwrap() < 1e-8);

    let c = dir.path().join("c");
    let status = bin().args(["classify", "--config"]).arg(&cfg).arg("--out").arg(&c).status().unwrap();
    assert_eq!(status.code(), Some(0));
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(c.join("report.json")).unwrap()).unwrap();
    assert_eq!(r["classification"]["weyl_class"]["tag"], "nonclosed");
    assert_eq!(r["classification"]["rank"]["max"], 2);
    assert!(r["classification"]["ricci_cond"]["rank_histogram"].is_array());
}
