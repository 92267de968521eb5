use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use expg::base::Family;
use expg::model::ExpGModel;
use expg::quadrature::{integrate_over_support, QuadOptions};
use jsonschema::{Resource, Validator};
use serde_json::Value;

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fatigue_csv() -> String {
    repo().join("data/fatigue.csv").display().to_string()
}

fn expg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_expg")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Runs a command expected to succeed and parses its JSON output.
fn json_ok(args: &[&str]) -> Value {
    let o = expg(args);
    assert_eq!(o.status.code(), Some(0), "{args:?}: {}", stderr(&o));
    serde_json::from_str(&stdout(&o)).expect("valid JSON")
}

fn load_schema(name: &str) -> Value {
    let path = repo().join(format!("docs/schemas/{name}.schema.json"));
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn validator(name: &str) -> Validator {
    let mut opts = jsonschema::options();
    for dep in ["fit", "test"] {
        let r = Resource::from_contents(load_schema(dep)).unwrap();
        opts = opts.with_resource(format!("urn:expg:schema:{dep}"), r);
    }
    opts.build(&load_schema(name)).unwrap()
}

fn assert_valid(name: &str, v: &Value) {
    let errors: Vec<String> = validator(name).iter_errors(v).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "{name}: {errors:#?}");
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

#[test]
fn base_fit_reproduces_the_weibull_loglik() {
    let v = json_ok(&["fit", "--family", "weibull", "--data", &fatigue_csv(), "--fix-lambda", "0"]);
    assert_valid("fit", &v);
    assert!((num(&v["loglik"]) + 459.0999).abs() < 0.05, "{v}");
    assert_eq!(v["n"], 100);
    assert_eq!(v["fixed"], serde_json::json!(["lambda"]));
    assert!(v["std_errors"]["lambda"].is_null());
    assert!((num(&v["estimates"]["alpha"]) / 5.979 - 1.0).abs() < 5e-3);
    assert!((num(&v["estimates"]["beta"]) / 143.315 - 1.0).abs() < 5e-3);
}

#[test]
fn free_fit_and_lr_test_agree() {
    let data = fatigue_csv();
    let full = json_ok(&["fit", "--family", "weibull", "--data", &data, "--level", "0.9"]);
    let base = json_ok(&["fit", "--family", "weibull", "--data", &data, "--fix-lambda", "0"]);
    assert_valid("fit", &full);
    assert_eq!(full["converged"], true);
    assert_eq!(num(&full["ci"]["level"]), 0.9);
    assert!(num(&full["loglik"]) >= -454.3272);
    let lr = json_ok(&["test", "--family", "weibull", "--data", &data, "--stat", "lr"]);
    assert_valid("test", &lr);
    assert_eq!(lr["df"], 1);
    let w = 2.0 * (num(&full["loglik"]) - num(&base["loglik"]));
    assert!((num(&lr["value"]) - w).abs() < 1e-6, "{lr} vs {w}");
    for stat in ["wald", "score"] {
        let t = json_ok(&["test", "--family", "weibull", "--data", &data, "--stat", stat]);
        assert_valid("test", &t);
        assert_eq!(t["stat"], stat);
        assert!((0.0..=1.0).contains(&num(&t["p_value"])));
    }
}

#[test]
fn text_output_is_available() {
    let o = expg(&["fit", "--family", "weibull", "--data", &fatigue_csv(), "--out", "text"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("loglik") && s.contains("lambda") && s.contains("95% interval"), "{s}");
}

#[test]
fn input_errors_exit_with_1() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "# nothing here\n\n").unwrap();
    let o = expg(&["fit", "--family", "weibull", "--data", empty.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no observations"), "{}", stderr(&o));

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "1.5\n2.5\nabc\n").unwrap();
    let o = expg(&["fit", "--family", "weibull", "--data", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    let missing = dir.path().join("missing.csv");
    let o = expg(&["test", "--family", "weibull", "--data", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("cannot read"));

    let outside = dir.path().join("outside.csv");
    std::fs::write(&outside, "0.2\n1.4\n").unwrap();
    assert_eq!(expg(&["fit", "--family", "beta", "--data", outside.to_str().unwrap()]).status.code(), Some(1));

    for args in [
        vec!["fit", "--family", "gamma", "--data", "x.csv"],
        vec!["moments", "--family", "weibull", "--theta", "1,1,1"],
        vec!["moments", "--family", "weibull", "--theta", "1,-1"],
        vec!["curves", "--family", "weibull", "--theta", "1,1", "--quantity", "pdf"],
        vec!["curves", "--family", "weibull", "--theta", "1,1", "--quantity", "pdf", "--grid", "2:1:0.1"],
        vec!["sample", "--family", "beta", "--theta", "2,2"],
        vec!["fit", "--family", "weibull", "--data", "x.csv", "--level", "1.5"],
        vec!["frobnicate"],
    ] {
        let o = expg(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn numerical_failures_exit_with_2() {
    let o = expg(&["moments", "--family", "frechet", "--theta", "2,1", "--lambda", "1", "--order", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("does not exist"), "{}", stderr(&o));
    let o = expg(&["curves", "--family", "frechet", "--theta", "3,1", "--quantity", "kurtosis", "--lambda-grid", "0:1:1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn help_exits_with_0() {
    assert_eq!(expg(&["--help"]).status.code(), Some(0));
    assert_eq!(expg(&["fit", "--help"]).status.code(), Some(0));
}

#[test]
fn moments_report_series_and_quadrature() {
    let v = json_ok(&["moments", "--family", "weibull", "--theta", "1,1", "--lambda", "1", "--order", "1"]);
    assert_valid("moments", &v);
    let m = &v["moments"][0];
    // mpmath: int x f(x) dx for exp-Weibull(lambda=1, alpha=1, beta=1)
    assert!((num(&m["raw"]) - 0.766_988_354_079_4).abs() < 1e-10, "{m}");
    assert!(num(&m["relative_gap"]) < 1e-10);
    assert_eq!(m["route"], "weibull_series");

    let v = json_ok(&["moments", "--family", "beta", "--theta", "2,3", "--lambda", "-2", "--order", "4"]);
    assert_valid("moments", &v);
    let rows = v["moments"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    assert!(num(&rows[0]["central"]).abs() < 1e-15);
    assert!(num(&rows[1]["central"]) > 0.0);
    for r in rows {
        assert!(num(&r["relative_gap"]) < 1e-8, "{r}");
    }

    let v = json_ok(&["moments", "--family", "weibull", "--theta", "2,1", "--order", "0.5"]);
    assert_valid("moments", &v);
    assert!(v["moments"][0]["central"].is_null());
}

#[test]
fn entropy_reports_both_divergences() {
    for theta in [("weibull", "1.5,2"), ("beta", "2,3"), ("frechet", "4,1")] {
        let v = json_ok(&["entropy", "--family", theta.0, "--theta", theta.1, "--lambda", "-3"]);
        assert_valid("entropy", &v);
        assert!((num(&v["entropy"]) - num(&v["entropy_quadrature"])).abs() < 1e-7, "{v}");
        for key in ["kl_g_vs_expg", "kl_expg_vs_g"] {
            assert!(num(&v[key]["discrepancy"]) < 1e-8);
        }
    }
    let o = expg(&["entropy", "--family", "bernoulli", "--theta", "0.3"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sampling_is_seeded() {
    let args = ["sample", "--family", "beta", "--theta", "2,2", "--lambda", "0", "-n", "5", "--seed", "7"];
    let (a, b) = (expg(&args), expg(&args));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let draws: Vec<f64> = stdout(&a).lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(draws.len(), 5);
    assert!(draws.iter().all(|x| (0.0..1.0).contains(x)));
    let c = expg(&["sample", "--family", "beta", "--theta", "2,2", "--lambda", "0", "--n", "5", "--seed", "8"]);
    assert_ne!(a.stdout, c.stdout);
}

fn tsv(o: &Output) -> Vec<(f64, f64)> {
    assert_eq!(o.status.code(), Some(0), "{}", stderr(o));
    stdout(o)
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| {
            let (a, b) = l.split_once('\t').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect()
}

#[test]
fn skewness_curve_settles_to_the_base_shape() {
    let rows = tsv(&expg(&[
        "curves", "--family", "weibull", "--theta", "1,0.5", "--quantity", "skewness", "--lambda-grid", "-10:10:0.5",
    ]));
    assert_eq!(rows.len(), 41);
    assert!(rows.iter().all(|r| r.1.is_finite()));
    // lambda = 0 is the exponential law
    assert!((rows[20].1 - 2.0).abs() < 1e-9);
    // Skewness is scale free, so for large lambda it returns to that of the
    // base shape (2 for alpha = 1) from above.
    let tail = tsv(&expg(&[
        "curves", "--family", "weibull", "--theta", "1,0.5", "--quantity", "skewness", "--lambda-grid", "20:200:30",
    ]));
    assert!(tail.windows(2).all(|w| w[1].1 < w[0].1));
    assert!((tail.last().unwrap().1 - 2.0).abs() < 0.05);
}

#[test]
fn density_grids_cover_the_plotted_settings() {
    for (family, theta, lambdas, grid) in [
        ("weibull", "2,1", ["-5", "-1", "0.5", "3", "10"], "0:3:0.05"),
        ("weibull", "0.5,1", ["-5", "-1", "0.5", "3", "10"], "0:3:0.05"),
        ("beta", "2,3", ["-10", "-3", "0", "3", "10"], "0:1:0.01"),
        ("beta", "0.5,0.5", ["-10", "-3", "0", "3", "10"], "0:1:0.01"),
    ] {
        for l in lambdas {
            for q in ["pdf", "cdf", "hazard"] {
                let rows = tsv(&expg(&[
                    "curves", "--family", family, "--theta", theta, "--lambda", l, "--quantity", q, "--grid", grid,
                ]));
                assert!(rows.len() > 30);
                for &(x, y) in &rows {
                    // the hazard past the upper endpoint of beta is undefined
                    if !(q == "hazard" && family == "beta" && x >= 1.0) {
                        assert!(!y.is_nan() && y >= 0.0, "{family} {theta} {l} {q} x={x} y={y}");
                    }
                }
                if q == "cdf" {
                    assert!(rows.windows(2).all(|w| w[1].1 >= w[0].1));
                }
            }
        }
    }
}

#[test]
fn demo_is_deterministic_and_valid() {
    let a = expg(&["demo"]);
    let b = expg(&["demo"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.contains("100 observations") && text.contains("lr") && text.contains("wald") && text.contains("score"));

    let v = json_ok(&["demo", "--out", "json"]);
    assert_valid("demo", &v);
    assert_eq!(v["data"]["n"], 100);
    let rows = v["density"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 161);
    assert_eq!(num(&rows[0][0]), 60.0);
    assert_eq!(num(&rows[160][0]), 220.0);

    let est = &v["fits"]["exp_weibull"]["estimates"];
    let params = [num(&est["lambda"]), num(&est["alpha"]), num(&est["beta"])];
    let m = ExpGModel::from_params(Family::Weibull, &params).unwrap();
    let mass = integrate_over_support(&m, |x| m.pdf(x).unwrap(), &QuadOptions::with_tolerance(1e-12, 1e-12))
        .unwrap()
        .value;
    assert!((mass - 1.0).abs() < 1e-6, "{mass}");

    let lr = num(&v["tests"][0]["value"]);
    let w = 2.0 * (num(&v["fits"]["exp_weibull"]["loglik"]) - num(&v["fits"]["weibull"]["loglik"]));
    assert!((lr - w).abs() < 1e-9);
}

#[test]
fn demo_accepts_a_data_override() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fatigue101.csv");
    let mut text = std::fs::read_to_string(fatigue_csv()).unwrap();
    text.push_str("212\n");
    std::fs::write(&path, text).unwrap();
    let v = json_ok(&["demo", "--out", "json", "--data", path.to_str().unwrap()]);
    assert_eq!(v["data"]["n"], 101);
    assert_eq!(v["data"]["source"], path.to_str().unwrap());
}

#[test]
fn null_data_gives_unremarkable_p_values() {
    let dir = tempfile::tempdir().unwrap();
    let mut p = Vec::new();
    for seed in 0..20 {
        let draws = expg(&["sample", "--family", "weibull", "--theta", "2,1", "-n", "300", "--seed", &seed.to_string()]);
        let path = dir.path().join(format!("null{seed}.csv"));
        std::fs::write(&path, &draws.stdout).unwrap();
        let t = json_ok(&["test", "--family", "weibull", "--data", path.to_str().unwrap(), "--stat", "lr"]);
        p.push(num(&t["p_value"]));
    }
    let mean = p.iter().sum::<f64>() / p.len() as f64;
    let small = p.iter().filter(|&&x| x < 0.05).count();
    assert!((0.25..0.75).contains(&mean) && small <= 4, "{p:?}");
}
