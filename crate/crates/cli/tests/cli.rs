use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_whitney")
}

fn write_config(dir: &Path, domain: &str, level: u32, n_list: &str) -> std::path::PathBuf {
    let out = dir.join("out");
    let cfg = format!(
        r#"{{
  "domain": {domain},
  "level": {level},
  "weights": {{"p": 2.0, "q": 2.0, "r": 1, "alpha": null, "beta": null,
               "g_boundary": null, "v_boundary": null}},
  "n_list": {n_list},
  "m": 1,
  "out_dir": {},
  "seed": 0
}}"#,
        serde_json::to_string(&out).unwrap()
    );
    let path = dir.join("config.json");
    fs::write(&path, cfg).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().unwrap()
}

#[test]
fn decompose_writes_artifacts_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"kind": "square", "dim": 2}"#, 6, "[4]");
    let out = run(&["decompose", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let cover: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/cover.json")).unwrap())
            .unwrap();
    assert_eq!(cover["invariants_pass"], serde_json::Value::Bool(true));
    assert!(cover["cube_count"].as_u64().unwrap() > 0);
    let svg = fs::read_to_string(dir.path().join("out/cover.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
}

#[test]
fn invalid_config_exits_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"kind": "square", "dim": 2}"#, 6, "[]");
    let out = run(&["decompose", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_list"));
}

#[test]
fn weights_violating_the_hypotheses_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let cfg = dir.path().join("config.json");
    fs::write(
        &cfg,
        format!(
            r#"{{"domain": {{"kind": "square", "dim": 2}}, "level": 5,
                 "weights": {{"p": 2.0, "q": 2.0, "r": 1, "alpha": null, "beta": 1.5,
                              "g_boundary": null, "v_boundary": null}},
                 "n_list": [4], "m": 0, "out_dir": {}, "seed": 0}}"#,
            serde_json::to_string(&out_dir).unwrap()
        ),
    )
    .unwrap();
    let out = run(&["rates", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("beta must exceed q"));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"kind": "l-shape", "dim": 2}"#, 6, "[4, 8]");
    let cfg = cfg.to_str().unwrap();
    for sub in ["decompose", "tree", "partition", "rates"] {
        assert!(run(&[sub, "--config", cfg]).status.success(), "{sub} failed");
    }
    let read_all = || -> Vec<(String, Vec<u8>)> {
        let mut files: Vec<_> = fs::read_dir(dir.path().join("out"))
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        files.sort();
        files
            .into_iter()
            .map(|p| (p.display().to_string(), fs::read(&p).unwrap()))
            .collect()
    };
    let first = read_all();
    assert!(first.len() >= 8);
    for sub in ["decompose", "tree", "partition", "rates"] {
        assert!(run(&[sub, "--config", cfg]).status.success());
    }
    assert_eq!(first, read_all(), "rerun changed an artifact");
}

#[test]
fn rates_with_single_n_warns_and_omits_slope() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"kind": "square", "dim": 2}"#, 6, "[8]");
    let out = run(&["rates", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("slope omitted"));
    let csv = fs::read_to_string(dir.path().join("out/rates.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "n,cells,error,theory_exponent,fitted_slope"
    );
    let row = lines.next().unwrap();
    assert!(row.ends_with(','), "slope column should be empty: {row}");
}

#[test]
fn pgm_bitmap_domain_round_trips_both_formats() {
    let dir = tempfile::tempdir().unwrap();
    let side = 32usize; // level 5
    // same picture (a centered disc) in ascii and binary encodings
    let inside = |r: usize, c: usize| {
        let dy = r as f64 + 0.5 - 16.0;
        let dx = c as f64 + 0.5 - 16.0;
        dx * dx + dy * dy < 144.0
    };
    let mut p2 = format!("P2\n# disc\n{side} {side}\n255\n");
    let mut p5 = format!("P5\n{side} {side}\n255\n").into_bytes();
    for r in 0..side {
        for c in 0..side {
            let v = if inside(r, c) { 255u8 } else { 0 };
            p2.push_str(&format!("{v} "));
            p5.push(v);
        }
        p2.push('\n');
    }
    fs::write(dir.path().join("disc.pgm"), p2).unwrap();
    fs::write(dir.path().join("disc_bin.pgm"), p5).unwrap();
    let mut covers = Vec::new();
    for name in ["disc.pgm", "disc_bin.pgm"] {
        let domain = format!(
            r#"{{"kind": "bitmap", "pgm": {}}}"#,
            serde_json::to_string(&dir.path().join(name)).unwrap()
        );
        let cfg = write_config(dir.path(), &domain, 5, "[4]");
        let out = run(&["decompose", "--config", cfg.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        covers.push(fs::read_to_string(dir.path().join("out/cover.json")).unwrap());
    }
    assert_eq!(covers[0], covers[1], "P2 and P5 readers disagree");
}

#[test]
fn exponent_report_is_exact() {
    let out = run(&["exponent", "--p", "2", "--q", "10", "--r", "9", "--d", "20"]);
    assert!(out.status.success());
    let rep: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rep["theta"]["exact"], "1/4");
    assert_eq!(rep["eta"]["exact"], "1/2");
    assert_eq!(rep["case"], "small smoothness");

    let out = run(&["exponent", "--p", "inf", "--q", "2", "--r", "1", "--d", "3"]);
    assert!(out.status.success());
    let rep: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rep["theta"]["exact"], "1/3");
    assert_eq!(rep["case"], "p >= q");

    let out = run(&["exponent", "--p", "0", "--q", "2", "--r", "1", "--d", "1"]);
    assert_eq!(out.status.code(), Some(2));
}
