use std::f64::consts::FRAC_PI_2;
use std::path::Path;
use std::process::{Command, Output};

use statrs::function::gamma::gamma;
use tempfile::TempDir;

fn run(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_soliton"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .arg("--deterministic")
        .output()
        .unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join("out").join(name)).unwrap()
}

fn json(dir: &Path, name: &str) -> serde_json::Value {
    serde_json::from_str(&read(dir, name)).unwrap()
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const PARABOLA: &str = "f.kind = \"poly\"\nf.coeffs = [0, 0, 1]\n";

#[test]
fn profile_table_matches_the_log_cosine() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), "alpha = 1.0\n", &["profile"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = read(dir.path(), "profile.csv");
    assert!(csv.starts_with("s,y,z,phi\n"));
    for r in rows(&csv) {
        let (y, z): (f64, f64) = (r[1].parse().unwrap(), r[2].parse().unwrap());
        assert!((z + y.cos().ln()).abs() < 1e-8, "y = {y}");
    }
    let summary = json(dir.path(), "profile.json");
    assert!((summary["halfwidth"].as_f64().unwrap() - FRAC_PI_2).abs() < 1e-10);
    assert!(summary["residual_max"].as_f64().unwrap() < 1e-8);
}

#[test]
fn catenary_profile_for_alpha_two() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), "alpha = 2.0\n", &["profile"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for r in rows(&read(dir.path(), "profile.csv")) {
        let (y, z): (f64, f64) = (r[1].parse().unwrap(), r[2].parse().unwrap());
        assert!((z - (y.cosh() - 1.0)).abs() < 1e-8 * y.cosh(), "y = {y}");
    }
    assert!(json(dir.path(), "profile.json")["halfwidth"].is_null());
}

#[test]
fn halfwidth_sweep_against_the_beta_function() {
    let dir = TempDir::new().unwrap();
    let o = run(
        dir.path(),
        "oracle = true\nhalfwidth.alpha_min = 0.0\nhalfwidth.alpha_max = 2.5\nhalfwidth.steps = 11\n",
        &["halfwidth"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let table = rows(&read(dir.path(), "halfwidth.csv"));
    assert_eq!(table.len(), 11);
    let mut last = 0.0;
    for r in &table {
        let a: f64 = r[0].parse().unwrap();
        if a >= 2.0 - 1e-12 {
            assert_eq!((r[1].as_str(), r[2].as_str()), ("inf", "divergent"));
            continue;
        }
        let d: f64 = r[1].parse().unwrap();
        // ∫_0^{π/2} sin^b = √π Γ((b+1)/2) / (2 Γ(b/2 + 1)), b = 1 − α
        let b = 1.0 - a;
        let exact = std::f64::consts::PI.sqrt() * gamma(0.5 * (b + 1.0)) / (2.0 * gamma(0.5 * b + 1.0));
        assert!((d - exact).abs() < 1e-10, "alpha {a}: {d} vs {exact}");
        assert!(d > last);
        last = d;
        assert_eq!(r[2] == "finite_above_one", a > 1.0, "alpha {a}");
    }
    assert!((table[0][1].parse::<f64>().unwrap() - 1.0).abs() < 1e-10);
    assert!((table[4][1].parse::<f64>().unwrap() - FRAC_PI_2).abs() < 1e-10);
}

#[test]
fn half_alpha_width() {
    let dir = TempDir::new().unwrap();
    let o = run(
        dir.path(),
        "halfwidth.alpha_min = 0.5\nhalfwidth.alpha_max = 1.0\nhalfwidth.steps = 2\n",
        &["halfwidth"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let d: f64 = rows(&read(dir.path(), "halfwidth.csv"))[0][1].parse().unwrap();
    assert!((d - 1.19814).abs() < 1e-5, "{d}");
}

#[test]
fn bowl_table() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), "bowl.radius = 2.0\n", &["bowl"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = rows(&read(dir.path(), "bowl.csv"));
    assert_eq!(table[0][1].parse::<f64>().unwrap(), 0.0);
    let bp: Vec<f64> = table.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(bp.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn constant_data_strip_reaches_the_profile_value() {
    let dir = TempDir::new().unwrap();
    let cfg = "m = 1.0\nL = 6.0\ngrid = { nx = 241, ny = 41 }\nf = { kind = \"const\", value = 0.0 }\n";
    let o = run(dir.path(), cfg, &["solve"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = json(dir.path(), "report.json");
    let h = report["h"].as_f64().unwrap();
    let center = report["center_value"].as_f64().unwrap();
    assert!((center - 1.0f64.cos().ln()).abs() <= 5.0 * h * h, "{center}");
    let csv = read(dir.path(), "field.csv");
    assert!(csv.starts_with("x,y,u\n"));
    assert_eq!(csv.lines().count(), 1 + 241 * 41);
}

#[test]
fn parabola_strip_passes_every_check() {
    let dir = TempDir::new().unwrap();
    let cfg = format!("m = 1.0\nL = 6.0\ngrid = {{ nx = 121, ny = 21 }}\n{PARABOLA}");
    let o = run(dir.path(), &cfg, &["solve"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = json(dir.path(), "report.json");
    let checks = report["checks"].as_array().unwrap();
    let names: Vec<&str> = checks.iter().map(|c| c["name"].as_str().unwrap()).collect();
    for name in ["sandwich", "bounds", "gradient_boundary", "comparison", "uniqueness"] {
        assert!(names.contains(&name), "{names:?}");
    }
    assert!(checks.iter().all(|c| c["pass"].as_bool().unwrap()));
}

#[test]
fn verify_writes_the_report_array() {
    let dir = TempDir::new().unwrap();
    let cfg = "domain = \"disk\"\ndisk.h = 0.1\nf.kind = \"const\"\nf.value = 0.0\n";
    let o = run(dir.path(), cfg, &["verify"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let reports = json(dir.path(), "verify.json");
    assert_eq!(reports.as_array().unwrap().len(), 4);
}

#[test]
fn width_violation_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = format!("m = 2.0\nL = 6.0\ngrid = {{ nx = 121, ny = 41 }}\n{PARABOLA}");
    let o = run(dir.path(), &cfg, &["solve"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("maximal admissible m is 1.5707963267948966"), "{}", stderr(&o));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn malformed_configs_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), "alpha = 1.0\nsolver.tolerance = 1e-9\n", &["profile"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));

    let cfg = "m = 1.0\nL = 3.0\ngrid = { nx = 31, ny = 11 }\nf = { kind = \"poly\", coeffs = [0, 0, 0, 1] }\n";
    let o = run(dir.path(), cfg, &["solve"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));

    let o = run(dir.path(), "m = 1.0\nL = 3.0\n", &["solve"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("grid"), "{}", stderr(&o));
}

#[test]
fn solver_failure_exits_with_three() {
    let dir = TempDir::new().unwrap();
    let cfg = format!("m = 1.0\nL = 3.0\ngrid = {{ nx = 61, ny = 21 }}\nsolver.max_iter = 1\n{PARABOLA}");
    let o = run(dir.path(), &cfg, &["solve"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn perron_trace_is_monotone_and_matches_newton() {
    let dir = TempDir::new().unwrap();
    let cfg = format!("m = 1.0\nL = 3.0\ngrid = {{ nx = 61, ny = 21 }}\nschedule.shuffle_seed = 3\n{PARABOLA}");
    let o = run(dir.path(), &cfg, &["perron"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = json(dir.path(), "trace.json");
    assert!(report["cross_solver_difference"].as_f64().unwrap() < 5e-3);
    let tol = report["trace"]["monotonicity_tol"].as_f64().unwrap();
    for s in report["trace"]["sweeps"].as_array().unwrap() {
        assert!(s["min_decrease"].as_f64().unwrap() >= -tol);
    }
}

#[test]
fn reruns_are_byte_identical() {
    let cfg = format!("m = 1.0\nL = 4.0\ngrid = {{ nx = 81, ny = 21 }}\n{PARABOLA}");
    let outputs: Vec<(String, String)> = (0..2)
        .map(|_| {
            let dir = TempDir::new().unwrap();
            let o = run(dir.path(), &cfg, &["solve"]);
            assert!(o.status.success(), "{}", stderr(&o));
            (read(dir.path(), "field.csv"), read(dir.path(), "report.json"))
        })
        .collect();
    assert!(outputs[0] == outputs[1]);
}
