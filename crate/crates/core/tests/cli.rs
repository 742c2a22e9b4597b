use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use linenet::exact::{q_m, EvalMode, Ratio};
use linenet::sweep::{read_csv, CSV_HEADER};

fn linenet() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_linenet"));
    cmd.env_remove("LINENET_SEED").env_remove("LINENET_WORKERS");
    cmd
}

fn run(args: &[&str]) -> Output {
    linenet().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Value of a `key: value` line of `exact` output.
fn field(text: &str, key: &str) -> Option<String> {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}: ")).map(str::to_owned))
}

#[test]
fn help_for_every_command() {
    let top = run(&["--help"]);
    assert!(top.status.success());
    for sub in ["exact", "simulate", "figures", "validate"] {
        assert!(stdout(&top).contains(sub), "{sub} missing from --help");
        let o = run(&[sub, "--help"]);
        assert!(o.status.success(), "{sub} --help failed");
        assert!(stdout(&o).contains("Usage: linenet"), "{sub}");
    }
    assert!(stdout(&run(&["exact", "--help"])).contains("--mode"));
    assert!(stdout(&run(&["simulate", "--help"])).contains("--workers"));
    assert!(stdout(&run(&["figures", "--help"])).contains("--svg"));
    assert!(stdout(&run(&["validate", "--help"])).contains("--level"));
}

#[test]
fn exact_prints_value_and_diagnostics() {
    let o = run(&["exact", "--model", "free", "--n", "2", "--m", "1", "--rho", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(field(&text, "q_exact").as_deref(), Some("0.75"));
    assert_eq!(field(&text, "eval_mode").as_deref(), Some("float"));

    let o = run(&[
        "exact", "--model", "anchored", "--n", "1", "--m", "1", "--L", "10", "--r", "5", "--mode", "rational",
    ]);
    let text = stdout(&o);
    assert_eq!(field(&text, "q_exact").as_deref(), Some("0.5"));
    assert_eq!(field(&text, "rational").as_deref(), Some("1/2"));

    let o = run(&["exact", "--model", "free", "--n", "5", "--m", "7", "--rho", "10"]);
    assert_eq!(field(&stdout(&o), "q_exact").as_deref(), Some("0.0"));
}

#[test]
fn exact_float_mode_reports_unstable_raw_value() {
    let args = ["exact", "--model", "free", "--n", "200", "--m", "1", "--rho", "150"];
    let float = stdout(&run(&[&args[..], &["--mode", "float"]].concat()));
    let ratio: f64 = field(&float, "cancellation_ratio").unwrap().parse().unwrap();
    assert!(ratio > 1e8);
    assert!(field(&float, "q_clamped").is_some(), "{float}");

    let auto = stdout(&run(&args));
    assert_eq!(field(&auto, "eval_mode").as_deref(), Some("rational"));
    let q: f64 = field(&auto, "q_exact").unwrap().parse().unwrap();
    assert!((0.0..=1.0).contains(&q));
}

#[test]
fn usage_errors_exit_2() {
    let cases: [&[&str]; 7] = [
        &[
            "exact", "--model", "free", "--n", "3", "--m", "1", "--rho", "2", "--bogus",
        ],
        &["exact", "--n", "3", "--m", "1", "--rho", "2"],
        &["exact", "--model", "free", "--n", "3", "--m", "0", "--rho", "2"],
        &[
            "exact", "--model", "anchored", "--n", "3", "--m", "1", "--rho", "2", "--x", "0.5",
        ],
        &["simulate", "--model", "free", "--n", "3", "--rho", "2", "--trials", "0"],
        &["simulate", "--model", "anchored", "--n", "3", "--rho", "2", "--x", "9"],
        &["figures", "--rho-step", "0"],
    ];
    for args in cases {
        let o = run(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
        assert!(stderr(&o).contains("error"), "{args:?}");
    }
}

#[test]
fn simulate_compares_with_closed_form() {
    let o = run(&[
        "simulate",
        "--model",
        "anchored",
        "--x",
        "0",
        "--n",
        "5",
        "--rho",
        "5",
        "--trials",
        "100000",
        "--seed",
        "42",
        "--workers",
        "2",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("chi_square="));
    // Comparison rows: m, q_exact, p_hat, stderr, z.
    let zs: Vec<f64> = text
        .lines()
        .skip_while(|l| !l.contains("q_exact"))
        .skip(1)
        .take_while(|l| !l.starts_with("chi_square"))
        .map(|l| l.split_whitespace().last().unwrap().parse().unwrap())
        .collect();
    assert_eq!(zs.len(), 6);
    assert!(zs.iter().all(|z| z.abs() <= 4.0), "{zs:?}");
}

#[test]
fn simulate_off_origin_access_point_has_estimates_only() {
    let o = run(&[
        "simulate", "--model", "anchored", "--x", "0.3", "--n", "5", "--rho", "5", "--L", "1", "--trials", "1000",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("no closed form"));
    assert!(!text.contains("chi_square"));
}

fn seed_of(o: &Output) -> String {
    stdout(o)
        .split_whitespace()
        .find_map(|w| w.strip_prefix("seed="))
        .unwrap()
        .to_owned()
}

#[test]
fn settings_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    fs::write(&conf, "# test\nseed = 7\nmodel = free\nn = 4\nrho = 3\ntrials = 1000\n").unwrap();
    let conf = conf.to_str().unwrap();
    let base = ["simulate", "--workers", "1"];

    let o = linenet().args(base).output().unwrap();
    assert_eq!(o.status.code(), Some(2), "no geometry without a file");

    let o = linenet().args(base).args(["--config", conf]).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(seed_of(&o), "7");
    assert!(stdout(&o).contains("n=4"));

    let o = linenet()
        .args(base)
        .args(["--config", conf, "--seed", "9"])
        .output()
        .unwrap();
    assert_eq!(seed_of(&o), "9");

    let o = linenet()
        .args(base)
        .args(["--config", conf])
        .env("LINENET_SEED", "11")
        .output()
        .unwrap();
    assert_eq!(seed_of(&o), "7", "file beats environment");

    let geometry = ["--model", "free", "--n", "4", "--rho", "3", "--trials", "1000"];
    let o = linenet()
        .args(base)
        .args(geometry)
        .env("LINENET_SEED", "11")
        .output()
        .unwrap();
    assert_eq!(seed_of(&o), "11");
    let o = linenet().args(base).args(geometry).output().unwrap();
    assert_eq!(seed_of(&o), "42");

    let o = linenet()
        .args(["simulate"])
        .args(geometry)
        .env("LINENET_WORKERS", "3")
        .output()
        .unwrap();
    assert!(stdout(&o).contains("workers=3"));

    let bad = dir.path().join("bad.conf");
    fs::write(&bad, "colour = blue\n").unwrap();
    let o = linenet()
        .args(base)
        .args(["--config", bad.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown key"));
}

fn write_figures(out: &Path, extra: &[&str]) {
    let o = linenet()
        .args([
            "figures",
            "--out",
            out.to_str().unwrap(),
            "--rho-start",
            "0.5",
            "--rho-stop",
            "12",
            "--rho-step",
            "0.5",
        ])
        .args(extra)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn figures_round_trip_through_exact_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    write_figures(dir.path(), &["--svg", "--trials", "0"]);
    for m in 1..=6 {
        let csv = fs::read_to_string(dir.path().join(format!("fig{m}.csv"))).unwrap();
        assert_eq!(csv.lines().next(), Some(CSV_HEADER.join(",").as_str()));
        let rows = read_csv(csv.as_bytes()).unwrap();
        assert_eq!(rows.len(), 3 * 24);
        for row in &rows {
            assert_eq!(row.m, m);
            assert!(row.p_hat.is_none() && row.trials.is_none());
            let q = q_m(row.model, row.n, row.m, &Ratio::new(row.rho).unwrap(), EvalMode::Auto).unwrap();
            assert_eq!(q.float_value.to_bits(), row.q_exact.to_bits(), "{row:?}");
        }
        let svg = fs::read_to_string(dir.path().join(format!("fig{m}.svg"))).unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    }
}

#[test]
fn figures_with_simulation_are_worker_independent() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    write_figures(&a, &["--trials", "500", "--seed", "3", "--workers", "1"]);
    write_figures(&b, &["--trials", "500", "--seed", "3", "--workers", "5"]);
    for m in 1..=6 {
        let name = format!("fig{m}.csv");
        let left = fs::read(a.join(&name)).unwrap();
        assert_eq!(left, fs::read(b.join(&name)).unwrap(), "{name}");
        let rows = read_csv(left.as_slice()).unwrap();
        assert!(rows.iter().all(|r| r.trials == Some(500) && r.p_hat.is_some()));
    }
}

#[test]
fn validate_quick_passes() {
    let o = run(&["validate", "--workers", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 5);
    assert!(text.contains("all 5 checks passed"));
}
