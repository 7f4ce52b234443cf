use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const BUNDLED: [&str; 5] = ["fig2", "example1", "example2", "appendixD", "corollaryC2"];

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(format!("{name}.json"))
}

fn procure(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_procure"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run(cmd: &str, cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    procure(&args)
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// A bundled config with `edit` applied to its JSON.
fn edited(dir: &TempDir, name: &str, edit: impl FnOnce(&mut Value)) -> PathBuf {
    let mut v = json(&config(name));
    edit(&mut v);
    let path = dir.path().join(format!("{name}-edited.json"));
    fs::write(&path, v.to_string()).unwrap();
    path
}

fn solved(name: &str) -> (TempDir, PathBuf) {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let o = run("solve", &config(name), &out, &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    (dir, out)
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

#[test]
fn example1_mechanism_has_two_intervals() {
    let (_dir, out) = solved("example1");
    let m = json(&out.join("mechanism.json"));
    let iv = m["intervals"].as_array().unwrap();
    assert_eq!(iv.len(), 2);
    assert_eq!(f(&iv[0][0]), 0.0);
    assert!((f(&iv[0][1]) - 0.346).abs() < 1e-3);
    assert_eq!((f(&iv[1][0]), f(&iv[1][1])), (1.0, 1.0));
    assert!(m["extra_bid"].is_null());
}

#[test]
fn example2_mechanism_is_augmented() {
    let (_dir, out) = solved("example2");
    let m = json(&out.join("mechanism.json"));
    let s = json(&out.join("summary.json"));
    assert_eq!(f(&m["extra_bid"]), 1.0);
    let zeta = f(&m["zeta"]);
    assert!((zeta - 0.0297).abs() < 1e-4, "zeta {zeta}");
    let expected = 2.0 * f(&s["p_bar"]) / (1.0 - f(&s["s_plus"]));
    assert!((zeta - expected).abs() < 1e-9);
    assert!(f(&s["payoffs"]["buyer"]).abs() < 1e-4);
}

#[test]
fn negative_weight_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = edited(&dir, "example1", |v| v["environment"]["gamma"] = (-0.5).into());
    let o = run("solve", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("gamma"));
}

#[test]
fn malformed_and_missing_configs_exit_2() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{ not json").unwrap();
    assert_eq!(code(&run("solve", &bad, dir.path(), &[])), 2);
    assert_eq!(code(&run("solve", &dir.path().join("absent.json"), dir.path(), &[])), 2);
    let cfg = edited(&dir, "fig2", |v| v["numerics"]["grid"] = 1000.into());
    assert_eq!(code(&run("solve", &cfg, dir.path(), &[])), 2);
}

#[test]
fn assumption_violation_exits_3_and_names_it() {
    let dir = TempDir::new().unwrap();
    let cfg = edited(&dir, "fig2", |v| {
        v["environment"]["valuation"]["coefficients"] = serde_json::json!([-0.2, 4.0, -2.0]);
    });
    let o = run("solve", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("v(0) >= 0"), "{}", stderr(&o));
}

#[test]
fn bundled_configs_round_trip() {
    for name in BUNDLED {
        let (_dir, out) = solved(name);
        let o = run("simulate", &config(name), &out, &["--trials", "20000"]);
        assert_eq!(code(&o), 0, "{name}: {}", stderr(&o));
        let o = run("verify", &config(name), &out, &[]);
        assert_eq!(code(&o), 0, "{name}: {}", stderr(&o));
        for file in ["border.json", "oracle.json", "dominance.json"] {
            assert_eq!(json(&out.join(file))["pass"], true, "{name}: {file}");
        }
        let o = run("plot", &config(name), &out, &[]);
        assert_eq!(code(&o), 0, "{name}: {}", stderr(&o));
    }
}

#[test]
fn verify_catches_missing_payment_reduction() {
    let (_dir, out) = solved("example1");
    let path = out.join("mechanism.json");
    let mut m = json(&path);
    m["payment_reduction"] = false.into();
    fs::write(&path, m.to_string()).unwrap();
    let o = run("verify", &config("example1"), &out, &[]);
    assert_eq!(code(&o), 5);
    assert!(stderr(&o).contains("dominance"), "{}", stderr(&o));
    let d = json(&out.join("dominance.json"));
    assert_eq!(d["pass"], false);
    assert!(!d["report"]["violations"].as_array().unwrap().is_empty());
    assert_eq!(json(&out.join("border.json"))["pass"], true);
}

#[test]
fn verify_catches_infeasible_allocation() {
    let (_dir, out) = solved("example1");
    let path = out.join("allocation.csv");
    let text = fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    let mut edited = format!("{}\n", lines.next().unwrap());
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        edited += &format!("{},{},1,{}\n", cols[0], cols[1], cols[3]);
    }
    fs::write(&path, edited).unwrap();
    let o = run("verify", &config("example1"), &out, &[]);
    assert_eq!(code(&o), 5);
    assert!(stderr(&o).contains("border"), "{}", stderr(&o));
    assert_eq!(json(&out.join("border.json"))["pass"], false);
}

#[test]
fn out_of_range_mechanism_is_a_mismatch() {
    let dir = TempDir::new().unwrap();
    let mech = dir.path().join("mech.json");
    fs::write(&mech, r#"{"intervals": [[0.0, 1.5]], "extra_bid": null, "zeta": null}"#).unwrap();
    let o = run(
        "simulate",
        &config("example1"),
        &dir.path().join("out"),
        &["--mechanism", mech.to_str().unwrap(), "--trials", "100"],
    );
    assert_eq!(code(&o), 4);
    assert!(stderr(&o).contains("outside [0, 1]"), "{}", stderr(&o));
}

#[test]
fn single_trial_has_undefined_standard_errors() {
    let (_dir, out) = solved("example1");
    let o = run("simulate", &config("example1"), &out, &["--trials", "1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = json(&out.join("report.json"));
    assert_eq!(r["trials"], 1);
    assert!(r["buyer_payoff"]["std_error"].is_null());
    assert!(r["social_surplus"]["std_error"].is_null());
    assert!(r["bins"].as_array().unwrap().iter().all(|b| b["std_err"].is_null()));
    let zero_trials = run("simulate", &config("example1"), &out, &["--trials", "0"]);
    assert_eq!(code(&zero_trials), 2);
}

#[test]
fn same_seed_reproduces_report() {
    let (_dir, out) = solved("example2");
    let mech = out.join("mechanism.json");
    let report = |dir: &str, seed: &str| {
        let o = out.join(dir);
        let args = ["--mechanism", mech.to_str().unwrap(), "--trials", "30000", "--seed", seed];
        assert_eq!(code(&run("simulate", &config("example2"), &o, &args)), 0);
        fs::read(o.join("report.json")).unwrap()
    };
    assert_eq!(report("a", "9"), report("b", "9"));
    assert_ne!(report("a", "9"), report("c", "10"));
}

#[test]
fn plot_requires_solve_outputs() {
    let dir = TempDir::new().unwrap();
    let o = run("plot", &config("fig2"), dir.path(), &[]);
    assert_eq!(code(&o), 2);

    let (_dir, out) = solved("fig2");
    assert_eq!(code(&run("plot", &config("fig2"), &out, &[])), 0);
    let ironing = fs::read_to_string(out.join("ironing.svg")).unwrap();
    let allocation = fs::read_to_string(out.join("allocation.svg")).unwrap();
    assert_eq!(ironing.matches("<polyline").count(), 3);
    assert_eq!(allocation.matches("<polyline").count(), 2);
    for label in [">G<", ">Gbar<", ">gbar<"] {
        assert!(ironing.contains(label), "{label}");
    }
    assert!(allocation.contains(">P_hat<") && allocation.contains(">P_star<"));
}

#[test]
fn fig2_allocation_table_pools_then_competes() {
    let (_dir, out) = solved("fig2");
    let mut r = csv::Reader::from_path(out.join("allocation.csv")).unwrap();
    assert_eq!(r.headers().unwrap(), vec!["s", "q", "P_hat", "P_star"]);
    for row in r.records() {
        let row = row.unwrap();
        let s: f64 = row[0].parse().unwrap();
        let p: f64 = row[2].parse().unwrap();
        if (s - 0.75).abs() < 1e-9 {
            continue;
        }
        let expected = if s < 0.75 { 0.625 } else { 1.0 - s };
        assert!((p - expected).abs() < 1e-9, "s = {s}: {p}");
    }
}

#[test]
fn no_trade_is_marked_and_plots() {
    let dir = TempDir::new().unwrap();
    let cfg = edited(&dir, "fig2", |v| {
        v["environment"]["valuation"]["coefficients"] = serde_json::json!([0.0]);
    });
    let out = dir.path().join("out");
    let o = run("solve", &cfg, &out, &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let s = json(&out.join("summary.json"));
    assert_eq!(s["no_trade"], true);
    assert_eq!(s["status"], "no_trade");
    let mut r = csv::Reader::from_path(out.join("allocation.csv")).unwrap();
    assert!(r.records().all(|row| &row.unwrap()[2] == "0"));
    assert_eq!(code(&run("plot", &cfg, &out, &[])), 0);
    assert!(out.join("allocation.svg").exists());
}

#[test]
fn example1_buyer_payoff_near_reported_value() {
    let (_dir, out) = solved("example1");
    assert_eq!(code(&run("simulate", &config("example1"), &out, &["--trials", "1000000"])), 0);
    let r = json(&out.join("report.json"));
    let mean = f(&r["buyer_payoff"]["mean"]);
    let se = f(&r["buyer_payoff"]["std_error"]);
    assert!((mean - 0.448).abs() <= 3.0 * se, "{mean} +- {se}");
}

#[test]
fn appendix_d_tail_frequency_matches_exact_pooling() {
    let (_dir, out) = solved("appendixD");
    assert_eq!(code(&run("simulate", &config("appendixD"), &out, &["--trials", "1000000"])), 0);
    let r = json(&out.join("report.json"));
    let tail: Vec<&Value> = r["bins"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|b| f(&b["bin_lo"]) >= 0.48)
        .collect();
    assert!(!tail.is_empty());
    for b in tail {
        let (p, a, se) = (f(&b["empirical_p"]), f(&b["analytic_p"]), f(&b["std_err"]));
        assert!((a - 0.268026).abs() < 1e-5);
        assert!((p - a).abs() <= 4.0 * se, "bin {}: {p} vs {a}", b["bin_lo"]);
    }
}
