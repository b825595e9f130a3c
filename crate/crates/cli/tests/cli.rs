use std::fs;
use std::process::Command as Proc;

use ellipcert_cli::config::parse_config;
use ellipcert_cli::run::{run, Command, Example, EXAMPLE41, EXAMPLE42};
use serde_json::Value;

const INTERVAL: &str = "\
[domain]
kind = interval
lower = 0
upper = 1
h = 1/64

[equation.1]
f = \"0.1*z1 + 1\"
lambda = 1

[radii]
rho = 1
";

fn bin() -> Proc {
    Proc::new(env!("CARGO_BIN_EXE_ellipcert"))
}

fn json(report: &str) -> Value {
    serde_json::from_str(report).unwrap()
}

#[test]
fn bundled_configs_round_trip_through_display() {
    for text in [EXAMPLE41, EXAMPLE42, INTERVAL] {
        let a = parse_config(text).unwrap();
        let b = parse_config(&a.to_string()).unwrap();
        assert_eq!(a, b);
    }
    assert_eq!(Example::Example41.config(), parse_config(EXAMPLE41).unwrap());
}

#[test]
fn interval_constants_match_closed_form() {
    let cfg = parse_config(INTERVAL).unwrap();
    let out = run(Command::Constants, &cfg).unwrap();
    assert_eq!(out.exit_code, 0);
    let v = json(&out.report);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["command"], "constants");
    assert_eq!(v["domain"]["dim"], 1);
    let c = &v["result"][0]["constants"];
    // G(1) = x(1-x)/2 and r = 1/pi^2 on (0, 1).
    let g1 = c["g1_sup"].as_f64().unwrap();
    assert!((g1 / 0.125 - 1.0).abs() < 0.01, "{g1}");
    let r = c["r"].as_f64().unwrap();
    assert!((r * std::f64::consts::PI.powi(2) - 1.0).abs() < 0.01, "{r}");
    assert_eq!(v["result"][0]["assumptions"]["checks"].as_array().unwrap().len(), 4);
}

#[test]
fn reports_are_deterministic() {
    let cfg = parse_config(INTERVAL).unwrap();
    for cmd in [Command::Constants, Command::Solve, Command::ValidateGreen] {
        let a = run(cmd, &cfg).unwrap();
        let b = run(cmd, &cfg).unwrap();
        assert_eq!(a.report, b.report);
        assert_eq!(a.artifacts, b.artifacts);
    }
}

#[test]
fn solve_writes_field_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("interval.cfg");
    fs::write(&cfg_path, INTERVAL).unwrap();
    let out = bin().arg("solve").arg(&cfg_path).arg("--out-dir").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(v["result"]["result"]["classification"], "nonzero");
    let csv = fs::read_to_string(dir.path().join("u1.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x1,value"));
    assert_eq!(lines.count(), 65);
}

#[test]
fn exit_codes_follow_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let ok = dir.path().join("ok.cfg");
    let bad = dir.path().join("bad.cfg");
    fs::write(&ok, EXAMPLE41).unwrap();
    fs::write(&bad, EXAMPLE41.replacen("lambda = 0.05", "lambda = 5", 1)).unwrap();
    let code = |path: &std::path::Path| bin().args(["check-existence", "--h", "0.125"]).arg(path).output().unwrap();
    let pass = code(&ok);
    assert_eq!(pass.status.code(), Some(0), "{}", String::from_utf8_lossy(&pass.stderr));
    assert_eq!(json(&String::from_utf8(pass.stdout).unwrap())["verdict"], true);
    let fail = code(&bad);
    assert_eq!(fail.status.code(), Some(2));
    assert_eq!(json(&String::from_utf8(fail.stdout).unwrap())["verdict"], false);
    let missing = bin().args(["constants", "/nonexistent/file.cfg"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn negative_boundary_profile_is_a_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("neg.cfg");
    fs::write(&p, INTERVAL.replace("[radii]", "[bc.1]\nzeta = \"-1\"\n\n[radii]")).unwrap();
    let out = bin().arg("constants").arg(&p).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("zeta") && err.contains("bc.1"), "{err}");
}

#[test]
fn print_config_emits_the_bundled_text() {
    let out = bin().args(["reproduce", "example42", "--print-config"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), EXAMPLE42);
}

#[test]
fn existence_report_lists_inequalities() {
    let mut cfg = parse_config(EXAMPLE41).unwrap();
    cfg.domain.h = 0.125;
    let out = run(Command::CheckExistence, &cfg).unwrap();
    let v = json(&out.report);
    let names: Vec<&str> = v["inequalities"].as_array().unwrap().iter().map(|i| i["name"].as_str().unwrap()).collect();
    assert!(!names.is_empty());
    for i in v["inequalities"].as_array().unwrap() {
        let (lhs, rhs) = (i["lhs"].as_f64(), i["rhs"].as_f64());
        if let (Some(l), Some(r)) = (lhs, rhs) {
            let strict = i["strict"].as_bool().unwrap();
            assert_eq!(i["pass"].as_bool().unwrap(), if strict { l < r } else { l <= r }, "{i}");
        }
    }
}

proptest::proptest! {
    #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]

    #[test]
    fn numeric_settings_round_trip(lambda in 0.0f64..100.0, eta in 0.0f64..10.0, k in 4u32..64, rho in 0.01f64..5.0) {
        let text = format!(
            "[domain]\nkind = box\ndim = 2\nh = 1/{k}\n\n[equation.1]\nf = \"exp(z1)\"\nlambda = {lambda:?}\n\n[bc.1]\nh = \"intbnd(z1)\"\neta = {eta:?}\n\n[radii]\nrho = {rho:?}\n"
        );
        let a = parse_config(&text).unwrap();
        proptest::prop_assert_eq!(a.equations[0].lambda, lambda);
        proptest::prop_assert_eq!(a.domain.h, 1.0 / k as f64);
        let b = parse_config(&a.to_string()).unwrap();
        proptest::prop_assert_eq!(a, b);
    }
}
