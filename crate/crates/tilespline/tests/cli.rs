use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tilespline"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let mut full = vec!["--json"];
    full.extend_from_slice(args);
    let out = run(&full);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON summary")
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn regularity_summary() {
    let v = json(&["regularity", "--preset", "bear", "--order", "1"]);
    assert!((v["alpha_L2"].as_f64().unwrap() - 1.5372).abs() < 1e-3);
    let c = v["alpha_C"].as_array().unwrap();
    assert!(c[0].as_f64().unwrap() <= 0.7892 && 0.7892 <= c[1].as_f64().unwrap());
    assert_eq!(v["preset"], "bear");
    assert_eq!(v["k"], 1);
    assert_eq!(v["depth"], 14);
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    assert_eq!(keys, ["alpha_C", "alpha_L2", "depth", "k", "order", "preset"]);
}

#[test]
fn tails_summary() {
    let v = json(&["tails", "--q", "0.7", "--m", "22"]);
    assert!((v["H2"].as_f64().unwrap() - 0.00375).abs() < 1e-5);
    let t = json(&["tails"]);
    assert_eq!(t["table"].as_array().unwrap().len(), 7);
}

#[test]
fn trivial_mask() {
    let v = json(&["mask", "--preset", "square", "--order", "0"]);
    assert_eq!(v["count"], 2);
    for c in v["coeffs"].as_array().unwrap() {
        assert_eq!(c["c"], "1");
    }
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["mask", "--preset", "hexagon"]).status.code(), Some(2));
    assert_eq!(run(&["tails", "--q", "1.5"]).status.code(), Some(2));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
    // digits {0, 3} for M = 2 give a non-tile attractor and an ambiguous eigenvector
    let out = run(&["values", "--matrix", "2", "--digits", "0;3", "--order", "1"]);
    assert_eq!(out.status.code(), Some(3));
    let dir = scratch("config");
    let cfg = dir.join("bad.json");
    fs::write(&cfg, r#"{"preset": "bear", "colour": 3}"#).unwrap();
    let out = run(&["--config", cfg.to_str().unwrap(), "mask"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn config_values_and_overrides() {
    let dir = scratch("override");
    let cfg = dir.join("cfg.json");
    fs::write(&cfg, r#"{"preset": "dragon", "order": 2}"#).unwrap();
    let c = cfg.to_str().unwrap();
    let v = json(&["--config", c, "mask"]);
    assert_eq!((v["preset"].as_str(), v["count"].as_u64()), (Some("dragon"), Some(4)));
    let v = json(&["--config", c, "mask", "--order", "3"]);
    assert_eq!(v["count"], 5);
}

#[test]
fn outputs_are_deterministic() {
    let runs: Vec<Vec<Vec<u8>>> = ["1", "2"]
        .iter()
        .map(|threads| {
            let dir = scratch(&format!("det{threads}"));
            let p = |f: &str| dir.join(f).to_str().unwrap().to_string();
            let cmds: Vec<Vec<String>> = vec![
                vec!["tile".into(), "--preset".into(), "bear".into(), "--depth".into(), "10".into(), "--points".into(), p("t.csv"), "--pgm".into(), p("t.pgm"), "--width".into(), "64".into()],
                vec!["values".into(), "--preset".into(), "dragon".into(), "--order".into(), "2".into(), "--depth".into(), "4".into(), "--out".into(), p("v.csv")],
                vec!["ortho".into(), "--preset".into(), "bear".into(), "--grid".into(), "64".into(), "--out".into(), p("o.csv")],
                vec!["subdivide".into(), "--preset".into(), "bear".into(), "--order".into(), "3".into(), "--iters".into(), "5".into(), "--out".into(), p("s.csv")],
            ];
            let mut stdout = Vec::new();
            for c in &cmds {
                let mut args: Vec<&str> = vec!["--json", "--threads", threads];
                args.extend(c.iter().map(String::as_str));
                let out = run(&args);
                assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
                stdout.extend(out.stdout);
            }
            let mut files = vec![stdout];
            for f in ["t.csv", "t.pgm", "v.csv", "o.csv", "s.csv"] {
                files.push(fs::read(dir.join(f)).unwrap());
            }
            files
        })
        .collect();
    // summaries embed output paths, which differ between the two directories
    for (a, b) in runs[0][1..].iter().zip(&runs[1][1..]) {
        assert!(a == b);
    }
    let pgm = &runs[0][2];
    assert!(pgm.starts_with(b"P5\n64 64\n255\n"));
    assert_eq!(pgm.len(), b"P5\n64 64\n255\n".len() + 64 * 64);
}

#[test]
fn subdivide_torus_from_obj() {
    let dir = scratch("torus");
    let mut obj = String::from("# grid 4 5\n");
    for i in 0..4 {
        for j in 0..5 {
            let (u, v) = (i as f64 * std::f64::consts::TAU / 4.0, j as f64 * std::f64::consts::TAU / 5.0);
            obj.push_str(&format!("v {} {} {}\n", (2.0 + v.cos()) * u.cos(), (2.0 + v.cos()) * u.sin(), v.sin()));
        }
    }
    let input = dir.join("torus.obj");
    fs::write(&input, obj).unwrap();
    let out = dir.join("out.obj");
    let v = json(&[
        "subdivide", "--preset", "bear", "--order", "3", "--iters", "2", "--boundary", "periodic",
        "--input", input.to_str().unwrap(), "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(v["nodes"], 80);
    let text = fs::read_to_string(out).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("f ")).count(), 80);
}

#[test]
fn wavelet_summary_and_raster() {
    let dir = scratch("wavelet");
    let pgm = dir.join("psi.pgm");
    let csv = dir.join("psi.csv");
    let v = json(&[
        "wavelet", "--preset", "bear", "--order", "1", "--pgm", pgm.to_str().unwrap(), "--coeffs",
        csv.to_str().unwrap(), "--width", "32", "--depth", "5",
    ]);
    assert_eq!(v["q"], 0.635);
    assert!(v["qmf_deviation"][0].as_f64().unwrap() < 1e-6);
    let kept = v["truncation"]["kept"].as_u64().unwrap() as usize;
    assert_eq!(fs::read_to_string(csv).unwrap().lines().count(), kept + 1);
    assert_eq!(fs::read(pgm).unwrap().len(), b"P5\n32 32\n255\n".len() + 32 * 32);
}
