use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use levyest_cli::Config;

const CP: &str = "\
[run]
config_id = cp_small
seed = 11
[model]
family = compound_poisson
intensity = 2
jumps = truncated_normal(0,1,-3,3)
[geometry]
a_bar = 3
[grid]
n = 256, 1024
delta = 0.25, 0.125
[estimator]
order = 3
[bench]
replicates = 4
bound_runs = 100
";

fn levyest(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_levyest"))
        .current_dir(dir)
        .env_remove("LEVYEST_WORKERS")
        .args(args)
        .output()
        .expect("binary runs")
}

fn setup(config: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("plan.ini"), config).unwrap();
    dir
}

#[test]
fn bench_is_reproducible_across_worker_counts() {
    let dir = setup(CP);
    let a = levyest(dir.path(), &["bench", "--config", "plan.ini", "--out", "a", "--workers", "1"]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    let b = Command::new(env!("CARGO_BIN_EXE_levyest"))
        .current_dir(dir.path())
        .env("LEVYEST_WORKERS", "3")
        .args(["bench", "--config", "plan.ini", "--out", "b"])
        .output()
        .unwrap();
    assert_eq!(b.status.code(), Some(0));
    for f in ["risk.csv", "slopes.csv", "bounds.csv", "resolved_config"] {
        let x = fs::read(dir.path().join("a").join(f)).unwrap();
        let y = fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(x, y, "{f} differs");
        assert!(!x.is_empty());
    }
    let risk = fs::read_to_string(dir.path().join("a/risk.csv")).unwrap();
    assert!(risk.starts_with("schema_version,1\n"));
}

#[test]
fn seed_override_is_recorded() {
    let dir = setup(CP);
    let o = levyest(dir.path(), &["simulate", "--config", "plan.ini", "--out", "s", "--seed", "42"]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("s/resolved_config")).unwrap();
    let resolved = Config::parse(&text).unwrap();
    assert_eq!(resolved.seed, 42);
    let mut original = Config::parse(CP).unwrap();
    original.seed = 42;
    assert_eq!(resolved, original);
    assert!(dir.path().join("s/samples/sample_0.csv").exists());
    assert!(dir.path().join("s/samples/sample_1.csv").exists());
}

#[test]
fn estimate_on_dumped_sample() {
    let dir = setup(CP);
    let o = levyest(dir.path(), &["bench", "--config", "plan.ini", "--out", "b", "--dump-samples"]);
    assert_eq!(o.status.code(), Some(0));
    let est = format!("{CP}[estimate]\ninput = b/samples/sample_1.csv\neval_points = 101\n");
    fs::write(dir.path().join("est.ini"), est).unwrap();
    let o = levyest(dir.path(), &["estimate", "--config", "est.ini", "--out", "e"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let density = fs::read_to_string(dir.path().join("e/density.csv")).unwrap();
    let lines: Vec<&str> = density.lines().collect();
    assert_eq!(lines[0], "schema_version,1");
    assert_eq!(lines[1], "x,value");
    assert_eq!(lines.len(), 2 + 101);
    // the estimate integrates to roughly λ
    let pts: Vec<(f64, f64)> = lines[2..]
        .iter()
        .map(|l| {
            let (x, v) = l.split_once(',').unwrap();
            (x.parse().unwrap(), v.parse().unwrap())
        })
        .collect();
    let mass: f64 = pts.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum();
    assert!((mass - 2.0).abs() < 0.5, "mass {mass}");
}

#[test]
fn skipped_checks_are_not_failures() {
    // λΔ ≥ 5 disables the mixture check
    let cfg = CP.replace("intensity = 2", "intensity = 40");
    let dir = setup(&cfg);
    let o = levyest(dir.path(), &["check-bounds", "--config", "plan.ini", "--out", "c"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let b = fs::read_to_string(dir.path().join("c/bounds.csv")).unwrap();
    assert!(b.contains("skipped: lambda_eps * delta >= 5"), "{b}");
    assert!(!b.contains(",fail"));
}

#[test]
fn failed_bound_exits_with_two() {
    // ten Monte Carlo draws cannot push the upper confidence limit of the
    // tail probability below the bound, so the tail check fails
    let cfg = "[model]\nfamily = stable\nalpha = 0.5\n[geometry]\neps = 1\na_bar = 4\n\
               [grid]\nn = 100\ndelta = 0.01\n[estimator]\norder = 3\n\
               [bench]\nreplicates = 2\nbound_runs = 50\ndiag_replicates = 10\n";
    let dir = setup(cfg);
    let o = levyest(dir.path(), &["check-bounds", "--config", "plan.ini", "--out", "c"]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let b = fs::read_to_string(dir.path().join("c/bounds.csv")).unwrap();
    assert!(b.lines().any(|l| l.starts_with("small_jump_tail") && l.ends_with(",fail")), "{b}");
}

#[test]
fn config_errors_exit_with_one() {
    let dir = setup("[model]\nfamily = gamma\n[geometry]\neps = 0\n");
    let o = levyest(dir.path(), &["bench", "--config", "plan.ini"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 4") && err.contains("eps=0 requires finite Lévy measure"), "{err}");

    let o = levyest(dir.path(), &["bench", "--config", "missing.ini"]);
    assert_eq!(o.status.code(), Some(1));

    let dir = setup(CP);
    let o = levyest(dir.path(), &["bench", "--config", "plan.ini", "--workers", "0"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn diagnose_writes_table() {
    let cfg = "[model]\nfamily = gamma\n[geometry]\neps = 0.5\na_bar = 4\n\
               [grid]\nn = 100\ndelta = 0.01\n[bench]\ndiag_replicates = 2000\n";
    let dir = setup(cfg);
    let o = levyest(dir.path(), &["diagnose", "--config", "plan.ini", "--out", "d"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let d = fs::read_to_string(dir.path().join("d/diagnostics.csv")).unwrap();
    assert!(d.starts_with("schema_version,1\nconfig_id,kind,delta,eps,value,ci_lo,ci_hi,reference,note\n"));
    assert!(d.contains(",h1_ratio,") && d.contains(",h2_beta,"), "{d}");
}
