use std::path::Path;
use std::process::{Command, Output};

fn brwlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_brwlab"))
        .args(args)
        .env_remove("BRWLAB_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn manifest_value(dir: &Path, key: &str) -> String {
    let m = read(dir, "manifest.txt");
    let line = m.lines().find(|l| l.starts_with(&format!("{key}="))).unwrap_or_else(|| panic!("{key} missing in {m}"));
    line[key.len() + 1..].to_string()
}

#[test]
fn classify_gw_digest() {
    let dir = tempfile::tempdir().unwrap();
    let o = brwlab(&["classify", "gw", "mean=2", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("local=survives, global=survives, q̄=0.5"), "{}", stdout(&o));
    assert!(read(dir.path(), "classify.txt").contains("local: survives"));
}

#[test]
fn unknown_command_is_usage_error() {
    let o = brwlab(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn scenario_and_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(brwlab(&["classify", "nope", "--out", out]).status.code(), Some(2));
    assert_eq!(brwlab(&["classify", "gw", "colour=red", "--out", out]).status.code(), Some(2));
    assert_eq!(brwlab(&["classify", "gw", "--replicas", "0", "--out", out]).status.code(), Some(1));
    assert_eq!(brwlab(&["classify", "gw", "--set", "bogus=1", "--out", out]).status.code(), Some(1));
    assert_eq!(brwlab(&["sweep", "gw", "--out", out]).status.code(), Some(1));
}

#[test]
fn sweep_is_deterministic_and_hashed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = |d: &Path| {
        vec![
            "sweep".to_string(),
            "zdrift".into(),
            "mean=1.5".into(),
            "radius=6".into(),
            "--caps".into(),
            "1,2,4,8,16".into(),
            "--replicas".into(),
            "200".into(),
            "--horizon".into(),
            "60".into(),
            "--seed".into(),
            "11".into(),
            "--out".into(),
            d.to_str().unwrap().to_string(),
        ]
    };
    for d in [a.path(), b.path()] {
        let v = args(d);
        let o = brwlab(&v.iter().map(String::as_str).collect::<Vec<_>>());
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).contains("coupled domination: holds"));
    }
    let hash = manifest_value(a.path(), "model_hash");
    for f in manifest_value(a.path(), "files").split(',') {
        let body = read(a.path(), f);
        assert_eq!(body, read(b.path(), f), "{f} differs between identical runs");
        assert_eq!(body.lines().next().unwrap(), format!("# model_hash={hash}"));
    }
    // frequencies are nondecreasing in m under the shared streams
    let sweep = read(a.path(), "sweep.csv");
    let freqs: Vec<f64> = sweep.lines().skip(2).map(|l| l.split(',').nth(3).unwrap().parse().unwrap()).collect();
    assert_eq!(freqs.len(), 6);
    assert!(freqs.windows(2).all(|w| w[0] <= w[1]), "{freqs:?}");
}

#[test]
fn seed_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# test run\nscenario = gw\nparam.mean = 2\nseed = 5\n").unwrap();
    let out = dir.path().join("out");
    let run = |extra: &[&str], env: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_brwlab"));
        c.args(["extinction", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]).args(extra);
        c.env_remove("BRWLAB_SEED");
        if let Some(s) = env {
            c.env("BRWLAB_SEED", s);
        }
        assert!(c.output().unwrap().status.success());
        let m = read(&out, "manifest.txt");
        m.split_whitespace().find_map(|w| w.strip_prefix("seed=")).unwrap().to_string()
    };
    assert_eq!(run(&[], None), "5");
    assert_eq!(run(&[], Some("7")), "7");
    assert_eq!(run(&["--seed", "9"], Some("7")), "9");
}

#[test]
fn overflow_exit_code_still_writes() {
    let dir = tempfile::tempdir().unwrap();
    let o = brwlab(&[
        "sweep", "zd_translation", "radius=5", "--caps", "1000", "--replicas", "20", "--horizon", "100", "--set",
        "hard_cap=200", "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(manifest_value(dir.path(), "overflow"), "true");
    assert!(dir.path().join("sweep.csv").exists());
}

#[test]
fn scenarios_listing_is_stable() {
    let a = stdout(&brwlab(&["scenarios"]));
    assert_eq!(a, stdout(&brwlab(&["scenarios"])));
    let names = ["gw", "line_noext", "line_ex45", "zd_translation", "tree_counterpart", "zdrift"];
    let pos: Vec<usize> = names.iter().map(|n| a.find(&format!("{n}\n")).unwrap()).collect();
    assert!(pos.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn percolation_extremes() {
    let dir = tempfile::tempdir().unwrap();
    let o = brwlab(&["percolate", "--set", "p=0,1", "--horizon", "40", "--replicas", "10", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains("p=0: reaches level 40 with frequency 0"));
    assert!(s.contains("p=1: reaches level 40 with frequency 1"));
}

#[test]
fn spectral_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = brwlab(&["spectral", "zd_translation", "radius=3", "--set", "lambda=0.5", "--out", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("series.csv").exists());
    let o = brwlab(&["sweep", "zdrift", "radius=4", "--caps", "1,2", "--replicas", "50", "--horizon", "30", "--set", "mode=report", "--out", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(read(dir.path(), "report_q_region.csv").contains("alpha,beta,Q,inside"));
}
