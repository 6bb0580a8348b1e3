use std::path::Path;
use std::process::{Command, Output};

fn sabr(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sabr"))
        .current_dir(dir)
        .env_remove("SABR_WORKERS")
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

const EURUSD_CASE1: &str = r#"{"model": "case1", "alpha": 0.155464, "beta": 0.971908, "rho0": -0.642617, "nu0": 0.800275, "a": 0.001, "b": 2.6093}"#;
const EUROSTOXX_CASE1: &str = r#"{"model": "case1", "alpha": 0.294722, "beta": 1.0, "rho0": -1.0, "nu0": 0.388539, "a": 0.001, "b": 0.131466}"#;

fn csv_value(csv: &str, key: &str) -> f64 {
    csv.lines()
        .find_map(|l| l.strip_prefix(&format!("{key},")))
        .and_then(|v| v.parse().ok())
        .unwrap()
}

#[test]
fn eval_tabulates_published_parameters() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "p.json", EURUSD_CASE1);
    let out = sabr(dir.path(), &["eval", "--surface", "builtin:eurusd", "--params", "p.json", "-o", "out"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(dir.path(), "out/evaluation.csv");
    assert!((csv_value(&csv, "mean_rel_error") - 2.441722e-2).abs() < 5e-8);
    assert_eq!(csv_value(&csv, "evals"), 1.0);
    assert!(dir.path().join("out/evaluation.json").exists());
}

#[test]
fn smile_on_quoted_strikes_contains_table_values() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "p.json", EUROSTOXX_CASE1);
    write(
        dir.path(),
        "run.toml",
        "surface = \"builtin:eurostoxx50\"\nparams = \"p.json\"\n[smile]\nquotes = true\nprices = true\n",
    );
    let out = sabr(dir.path(), &["smile", "--config", "run.toml"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(dir.path(), "out/smile.csv");
    let rows: Vec<Vec<f64>> = csv.lines().skip(1).map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 84);
    // 3-month slice, strike at 88% of spot.
    let k = 0.88 * 2311.1;
    let row = rows.iter().find(|r| r[0] == 0.2438 && (r[1] - k).abs() < 1e-6).unwrap();
    assert!((100.0 * row[3] - 31.7628).abs() < 1e-3);
    assert!(row[4] > 0.0);
}

#[test]
fn single_point_smile_has_one_row_per_maturity() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "p.json", EUROSTOXX_CASE1);
    write(dir.path(), "run.toml", "surface = \"builtin:eurostoxx50\"\nparams = \"p.json\"\n[smile]\npoints = 1\n");
    let out = sabr(dir.path(), &["smile", "-c", "run.toml"]);
    assert!(out.status.success());
    assert_eq!(read(dir.path(), "out/smile.csv").lines().count(), 5);
}

fn static_config(dir: &Path) {
    write(
        dir,
        "run.toml",
        "model = \"static\"\nsurface = \"builtin:eurusd\"\nslice = 1\n[anneal]\nmax_evals = 20000\nchain_length = 100\n",
    );
}

#[test]
fn seeded_calibration_is_reproducible_across_workers() {
    let dir = tempfile::tempdir().unwrap();
    static_config(dir.path());
    let a = sabr(dir.path(), &["calibrate", "-c", "run.toml", "--seed", "11", "-w", "1", "-o", "a"]);
    let b = sabr(dir.path(), &["calibrate", "-c", "run.toml", "--seed", "11", "-w", "3", "-o", "b"]);
    assert!(a.status.success() && b.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    for f in ["calibration_slice1.csv", "calibration_slice1.json", "calibration_slice1_params.json"] {
        assert_eq!(read(dir.path(), &format!("a/{f}")), read(dir.path(), &format!("b/{f}")), "{f}");
    }
    let csv = read(dir.path(), "a/calibration_slice1.csv");
    assert_eq!(csv_value(&csv, "seed"), 11.0);
    assert!(csv_value(&csv, "mean_rel_error") < 5e-2);
}

#[test]
fn worker_env_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    static_config(dir.path());
    let out = Command::new(env!("CARGO_BIN_EXE_sabr"))
        .current_dir(dir.path())
        .env("SABR_WORKERS", "2")
        .args(["calibrate", "-c", "run.toml", "--fixed", "beta=1"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(read(dir.path(), "out/calibration_slice1.csv").contains("param,beta,1,fixed"));
}

#[test]
fn fully_fixed_calibration_only_evaluates() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "run.toml", "model = \"case1\"\nsurface = \"builtin:eurusd\"\n");
    let out = sabr(
        dir.path(),
        &[
            "calibrate", "-c", "run.toml", "--fixed", "alpha=0.155464", "--fixed", "beta=0.971908", "--fixed",
            "rho0=-0.642617", "--fixed", "nu0=0.800275", "--fixed", "a=0.001", "--fixed", "b=2.6093",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(dir.path(), "out/calibration.csv");
    assert!((csv_value(&csv, "mean_rel_error") - 2.441722e-2).abs() < 5e-8);
    assert!(csv_value(&csv, "evals") <= 1.0);
}

#[test]
fn degenerate_cliquet_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "p.json", EURUSD_CASE1);
    write(
        dir.path(),
        "run.toml",
        "params = \"p.json\"\n[simulation]\nnum_paths = 4096\n[contract]\ntype = \"cliquet\"\nmaturity = 1.0\nresets = 4\n\
         local_floor = 0.01\nlocal_cap = 0.01\nglobal_floor = 0.0\nglobal_cap = 1.0\nspot = 1.3\nrate = 0.0\ndividend = 0.0\n",
    );
    let out = sabr(dir.path(), &["price", "-c", "run.toml"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&read(dir.path(), "out/price.json")).unwrap();
    assert!((v["value"].as_f64().unwrap() - 0.03).abs() < 1e-12);
    assert_eq!(v["std_error"].as_f64().unwrap(), 0.0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("wall_time_s"));
}

#[test]
fn european_price_uses_surface_market_data() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "p.json", EURUSD_CASE1);
    write(
        dir.path(),
        "run.toml",
        "params = \"p.json\"\nsurface = \"builtin:eurusd\"\n[simulation]\nnum_paths = 8192\n\
         [contract]\ntype = \"european\"\nstrike = 1.3\nmaturity = 1.0\n",
    );
    let a = sabr(dir.path(), &["price", "-c", "run.toml", "--seed", "3", "-o", "a"]);
    let b = sabr(dir.path(), &["price", "-c", "run.toml", "--seed", "3", "-w", "4", "-o", "b"]);
    assert!(a.status.success() && b.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(read(dir.path(), "a/price.json"), read(dir.path(), "b/price.json"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    write(p, "bounds.toml", "model = \"static\"\nsurface = \"builtin:eurusd\"\n[bounds]\nnu = [2.0, 1.0]\n");
    assert_eq!(sabr(p, &["calibrate", "-c", "bounds.toml"]).status.code(), Some(3));
    write(p, "unknown.toml", "modle = \"static\"\n");
    assert_eq!(sabr(p, &["calibrate", "-c", "unknown.toml"]).status.code(), Some(3));
    assert_eq!(sabr(p, &["calibrate", "--fixed", "gamma=1"]).status.code(), Some(3));

    write(p, "bad.csv", "spot,100\nstrikes,absolute\n1.0,1.0,0.0\n90,abc\n");
    assert_eq!(sabr(p, &["calibrate", "--surface", "bad.csv"]).status.code(), Some(4));
    write(p, "bad.json", "{\"model\": \"case1\",\n \"alpha\": }");
    assert_eq!(sabr(p, &["eval", "--surface", "builtin:eurusd", "--params", "bad.json"]).status.code(), Some(4));

    // Correlation dips below −1 right after time zero.
    write(
        p,
        "infeasible.json",
        r#"{"model": "case2", "alpha": 0.29679, "beta": 1.0, "rho0": -0.36061, "q_rho": 15.0, "d_rho": -0.715716,
            "nu0": 0.0001, "q_nu": -8.969205, "d_nu": 0.847244, "a": 15.0, "b": 15.0}"#,
    );
    assert_eq!(
        sabr(p, &["eval", "--surface", "builtin:eurostoxx50", "--params", "infeasible.json"]).status.code(),
        Some(5)
    );
    assert_eq!(sabr(p, &["bogus"]).status.code(), Some(2));
}
