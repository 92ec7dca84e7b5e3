use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_atomchain"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn example(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples").join(name)
}

fn rows(out: &Output) -> Vec<Vec<String>> {
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn identical_config_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let cfg = example("fig5_pattern_sizes.json");
    let cfg = cfg.to_str().unwrap();
    assert!(run(&["run", "--config", cfg, "-o", a.to_str().unwrap()]).status.success());
    let two = bin()
        .args(["run", "--config", cfg, "-o", b.to_str().unwrap()])
        .env("ATOMCHAIN_WORKERS", "3")
        .output()
        .unwrap();
    assert!(two.status.success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn every_example_config_runs() {
    let dir = tempfile::tempdir().unwrap();
    let mut n = 0;
    for entry in std::fs::read_dir(example("")).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let out = dir.path().join("out.csv");
            let o = run(&["run", "--config", path.to_str().unwrap(), "-o", out.to_str().unwrap()]);
            assert!(o.status.success(), "{}: {}", path.display(), String::from_utf8_lossy(&o.stderr));
            n += 1;
        }
    }
    assert!(n >= 9);
}

#[test]
fn unknown_key_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, "{\n  \"task\": \"rates\",\n  \"chain\": {\"m\": 11, \"lamda_over_a\": 0.5}\n}\n").unwrap();
    let o = run(&["run", "--config", cfg.to_str().unwrap()]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.json:3:"), "{err}");
    assert!(err.contains("lamda_over_a"), "{err}");
}

#[test]
fn misplaced_key_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, "{\n  \"task\": \"rates\",\n  \"chain\": {\"m\": 11},\n  \"epsilon\": 0.5\n}\n").unwrap();
    let o = run(&["run", "--config", cfg.to_str().unwrap()]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.json:4:3") && err.contains("epsilon"), "{err}");
}

#[test]
fn off_grid_request_names_nearest() {
    let o = run(&["pattern", "--m", "101", "--state", "K=0,p=pi/2a", "--snap", "exact"]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("nearest grid value is 1.555244") && err.contains("index 25"), "{err}");
}

#[test]
fn strong_scattering_pattern_peaks_only_in_direct_channels() {
    let o = run(&["pattern", "--state", "K=0,p=pi/2a", "--U", "strong"]);
    assert!(o.status.success());
    let r = rows(&o);
    let max = r.iter().map(|x| num(&x[8])).fold(0.0, f64::max);
    for x in &r {
        let kbar = num(&x[6]).abs();
        let direct = (kbar - 25.0 * 2.0 / 101.0).abs() < 1e-9;
        let v = num(&x[8]);
        assert!(if direct { v > 0.5 * max } else { v < 0.01 * max }, "{x:?}");
    }
}

#[test]
fn g2_plateaus() {
    let o = run(&["g2", "--lambda-over-a", "0.5", "--beta2", "arcsin(0.5)", "--U", "0"]);
    assert!(o.status.success());
    for x in rows(&o) {
        let want = if x[6] == "1" { 1.0 / 6.0 } else { 2.0 / 3.0 };
        assert!((num(&x[7]) - want).abs() < 1e-10, "{x:?}");
    }
}

#[test]
fn json_output_has_columns_and_rows() {
    let o = run(&["rates", "--format", "json", "--x-max", "1"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["task"], "rates");
    assert_eq!(v["columns"][4]["name"], "gamma_re");
    let g1 = &v["rows"][1];
    assert!((g1[4].as_f64().unwrap() - 0.009).abs() < 5e-4);
    assert!((g1[5].as_f64().unwrap() + 0.119).abs() < 5e-4);
}

#[test]
fn verify_is_green() {
    let o = run(&["verify"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(rows(&o).len() > 10);
}
