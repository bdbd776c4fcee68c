use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fraclog::io::{read_dump, read_metadata};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fraclog")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn meta(path: &Path, key: &str) -> String {
    read_metadata(path).unwrap().into_iter().find(|(k, _)| k == key).unwrap().1
}

const SMALL_SWEEP: &str = r#"
[grid]
dim = 1
L = 8.0
M = 512

[order]
s = 0.5

[potential]
family = "compact_well"
center = [0.3]
radius = 0.5
depth = 0.9

[region]
lambda_set = { shape = "ball", center = [0.3], radius = 1.0 }
outer_set = { shape = "ball", center = [0.3], radius = 1.5 }

[solver]
max_iter = 50000

[sweep]
epsilons = [0.4, 0.2]
window = [2.0, 5.0]
limiting_grid = { L = 20.0, M = 256 }

[output]
directory = "unused"
formats = ["csv", "dump"]
"#;

#[test]
fn gausson_solve_matches_closed_form() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("g");
    let cfg = configs().join("gausson.toml");
    let o = run(&["solve", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (u, h) = read_dump(&out.join("solution.flog")).unwrap();
    assert_eq!(h.order, 1.0);
    let e = 0.5f64.exp();
    let mut num = 0.0;
    let mut den = 0.0;
    u.grid().for_each_node(|i, x| {
        let g = e * (-0.5 * x[0] * x[0]).exp();
        num += (u.values()[i] - g).powi(2);
        den += g * g;
    });
    assert!((num / den).sqrt() < 1e-4);
    for f in ["config.toml", "manifest.txt", "solution.csv", "solution.txt"] {
        assert!(out.join(f).exists(), "{f}");
    }
    assert_eq!(meta(&out.join("solution.txt"), "converged"), "true");
    assert_eq!(meta(&out.join("manifest.txt"), "command"), "solve");
}

#[test]
fn nonconvergence_exits_two_and_still_dumps() {
    let tmp = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(configs().join("gausson.toml")).unwrap().replace("max_iter = 20000", "max_iter = 1");
    let cfg = write(tmp.path(), "c.toml", &text);
    let out = tmp.path().join("o");
    let o = run(&["solve", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(out.join("solution.flog").exists());
    assert_eq!(meta(&out.join("solution.txt"), "converged"), "false");
}

#[test]
fn config_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let base = fs::read_to_string(configs().join("gausson.toml")).unwrap();
    let cases = [
        base.replace("hi = [6.0]", "hi = [3.0]"),
        base.replace("[order]", "bogus = 1\n\n[order]"),
        base.replace("M = 512", "M = 0"),
        base.replace("s = 1.0", "s = 1.5"),
    ];
    for (k, text) in cases.iter().enumerate() {
        let cfg = write(tmp.path(), &format!("c{k}.toml"), text);
        let out = tmp.path().join(format!("o{k}"));
        let o = run(&["solve", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 1, "case {k}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = run(&["solve", "--config", tmp.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(code(&o), 1);
}

#[test]
fn lenient_mode_accepts_unknown_keys() {
    let tmp = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(configs().join("limit.toml")).unwrap().replace("[order]", "bogus = 1\n\n[order]");
    let cfg = write(tmp.path(), "c.toml", &text);
    let out = tmp.path().join("o");
    let args = ["limit", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--lambda", "0"];
    assert_eq!(code(&run(&args)), 1);
    let mut lenient = args.to_vec();
    lenient.extend(["--strict", "false"]);
    assert_eq!(code(&run(&lenient)), 0);
}

#[test]
fn limit_matches_classical_closed_form() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("limit.toml");
    let out = tmp.path().join("o");
    let o = run(&[
        "limit", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--lambda", "0,1", "--s", "1",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("limit.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("lambda,C_lambda,residual,converged"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    for row in rows {
        let lambda: f64 = row[0].parse().unwrap();
        let c: f64 = row[1].parse().unwrap();
        let exact = std::f64::consts::PI.sqrt() / 2.0 * (1.0 + lambda).exp();
        assert!((c / exact - 1.0).abs() < 0.01);
        assert_eq!(row[3], "1");
    }

    let one = tmp.path().join("one");
    let o = run(&["limit", "--config", cfg.to_str().unwrap(), "--out", one.to_str().unwrap(), "--lambda", "0.5"]);
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read_to_string(one.join("limit.csv")).unwrap().lines().count(), 2);

    let o = run(&["limit", "--config", cfg.to_str().unwrap(), "--out", one.to_str().unwrap(), "--lambda", "-1"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn sweep_is_reproducible_and_analyzable() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "sweep.toml", SMALL_SWEEP);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for out in [&a, &b] {
        let o = run(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let csv = fs::read(a.join("sweep.csv")).unwrap();
    assert_eq!(csv, fs::read(b.join("sweep.csv")).unwrap());
    let text = String::from_utf8(csv).unwrap();
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data.len(), 3);
    assert_eq!(fs::read(a.join("sweep_1.flog")).unwrap(), fs::read(b.join("sweep_1.flog")).unwrap());

    let out = tmp.path().join("an");
    let dump = a.join("sweep_1.flog");
    let o = run(&[
        "analyze", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--dump", dump.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let analysis = out.join("analysis.txt");
    assert_eq!(meta(&analysis, "origin_recovered"), "true");
    let x: Vec<f64> = {
        let s = meta(&analysis, "x_max");
        s.trim_matches(|c| c == '[' || c == ']').split(',').map(|v| v.trim().parse().unwrap()).collect()
    };
    assert!((x[0] - 0.3).abs() < 0.05);
}

#[test]
fn empty_sweep_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "s.toml", &SMALL_SWEEP.replace("epsilons = [0.4, 0.2]", "epsilons = []"));
    let o = run(&["sweep", "--config", cfg.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&o), 1);
}

#[test]
fn verify_corpus_passes_and_rejects_bad_inputs() {
    let tmp = tempfile::tempdir().unwrap();
    let base = fs::read_to_string(configs().join("verify.toml")).unwrap().replace("seeds = 100", "seeds = 5");
    let cfg = write(tmp.path(), "v.toml", &base);
    let out = tmp.path().join("o");
    let o = run(&["verify", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "40"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("verify.csv")).unwrap();
    assert!(csv.starts_with("check_name,seed,parameter,value,pass\n"));
    assert_eq!(csv.lines().count(), 1 + 5 * 11);
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",1") || l.ends_with(",true")));

    for (k, text) in [base.replace("4.0]\nlog", "4.5]\nlog"), base.replace("seeds = 5", "seeds = 0")]
        .iter()
        .enumerate()
    {
        assert_ne!(text, &base);
        let c = write(tmp.path(), &format!("bad{k}.toml"), text);
        let o = run(&["verify", "--config", c.to_str().unwrap(), "--out", tmp.path().join("x").to_str().unwrap()]);
        assert_eq!(code(&o), 1, "case {k}");
    }
}
