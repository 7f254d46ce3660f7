use std::path::Path;
use std::process::Command;

use tempfile::TempDir;

fn epqubits(args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_epqubits"))
        .args(args)
        .output()
        .expect("binary runs")
        .status
        .code()
        .expect("exit code")
}

fn out(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

/// Data rows of a CSV output as (header, rows).
fn read_csv(path: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<f64>], name: &str) -> Vec<f64> {
    let k = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[k]).collect()
}

fn json(path: &str) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn spectrum_writes_one_row_per_step() {
    let dir = TempDir::new().unwrap();
    let f = out(&dir, "s.csv");
    assert_eq!(epqubits(&["spectrum", "--gamma", "6", "--J", "0", "--omega", "1.3:1.8:200", "--out", &f]), 0);
    let (header, rows) = read_csv(&f);
    assert_eq!(rows.len(), 200);
    assert_eq!(header.len(), 11);
    assert!(std::fs::read_to_string(&f).unwrap().starts_with('#'));
}

#[test]
fn coupled_spectrum_overlap_peaks_near_shifted_ep() {
    let dir = TempDir::new().unwrap();
    let f = out(&dir, "s.csv");
    assert_eq!(epqubits(&["spectrum", "--J", "1e-3", "--omega", "1.45:1.56:111", "--out", &f]), 0);
    let (header, rows) = read_csv(&f);
    let omega = column(&header, &rows, "omega");
    let max_ov = column(&header, &rows, "max_overlap");
    let k = (0..rows.len()).max_by(|&a, &b| max_ov[a].total_cmp(&max_ov[b])).unwrap();
    assert!((omega[k] - 1.506).abs() < 2e-3, "peak at {}", omega[k]);
}

#[test]
fn invalid_input_exits_2_without_output() {
    let dir = TempDir::new().unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["spectrum", "--omega", "1.8:1.3:10"],
        vec!["spectrum", "--omega", "1.5"],
        vec!["evolve", "--gamma", "-1"],
        vec!["evolve", "--omega", "1.6rad/us"],
        vec!["evolve", "--t-max", "1", "--dt", "0.3"],
        vec!["evolve", "--method", "perturbative", "--gamma2", "5"],
        vec!["evolve", "--method", "perturbative", "--detuning", "0.001"],
        vec!["evolve", "--seed-state", "custom:0,0,0,0,0,0,0,0"],
        vec!["optimize", "--J", ""],
        vec!["epscan", "--format", "csv"],
        vec!["lindblad", "--gamma-f", "-0.1"],
        vec!["nonsense"],
    ];
    for (k, case) in cases.iter().enumerate() {
        let f = out(&dir, &format!("bad{k}.out"));
        let mut args = case.clone();
        args.extend(["--out", &f]);
        assert_eq!(epqubits(&args), 2, "{case:?}");
        assert!(!Path::new(&f).exists(), "{case:?} left a file");
    }
}

#[test]
fn numerical_failure_exits_3_without_output() {
    let dir = TempDir::new().unwrap();
    let f = out(&dir, "l.csv");
    let args = ["lindblad", "--J", "0.3", "--t-max", "1", "--dt", "0.02", "--record-every", "1", "--out", &f];
    assert_eq!(epqubits(&args), 3);
    assert!(!Path::new(&f).exists());
}

#[test]
fn evolve_methods_agree() {
    let dir = TempDir::new().unwrap();
    let (e, p) = (out(&dir, "e.csv"), out(&dir, "p.csv"));
    assert_eq!(epqubits(&["evolve", "--t-max", "6", "--out", &e]), 0);
    assert_eq!(epqubits(&["evolve", "--t-max", "6", "--method", "perturbative", "--out", &p]), 0);
    let (he, re) = read_csv(&e);
    let (hp, rp) = read_csv(&p);
    let (t, ce, cp) = (column(&he, &re, "t"), column(&he, &re, "C"), column(&hp, &rp, "C"));
    let worst = (0..t.len()).filter(|&k| t[k] >= 0.1).map(|k| (ce[k] - cp[k]).abs()).fold(0.0, f64::max);
    assert!(worst <= 0.02, "max |dC| = {worst}");
    let k = (0..t.len()).max_by(|&a, &b| ce[a].total_cmp(&ce[b])).unwrap();
    assert!(ce[k] >= 0.99 && (t[k] - 5.325).abs() < 0.05);
}

#[test]
fn lindblad_without_f_decay_matches_evolve() {
    let dir = TempDir::new().unwrap();
    let (e, l) = (out(&dir, "e.csv"), out(&dir, "l.csv"));
    assert_eq!(epqubits(&["evolve", "--t-max", "6", "--out", &e]), 0);
    assert_eq!(epqubits(&["lindblad", "--t-max", "6", "--out", &l]), 0);
    let (he, re) = read_csv(&e);
    let (hl, rl) = read_csv(&l);
    let (ce, cl) = (column(&he, &re, "C"), column(&hl, &rl, "C_mixed"));
    assert_eq!(ce.len(), cl.len());
    let worst = ce.iter().zip(&cl).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(worst <= 1e-6, "max |dC| = {worst}");
}

#[test]
fn f_decay_lowers_the_peak() {
    let dir = TempDir::new().unwrap();
    let peak = |gf: &str| {
        let f = out(&dir, &format!("l{gf}.json"));
        assert_eq!(epqubits(&["lindblad", "--t-max", "6", "--gamma-f", gf, "--format", "json", "--out", &f]), 0);
        json(&f)["result"]["peak_concurrence"].as_f64().unwrap()
    };
    assert!(peak("1e-3") < peak("0"));
}

#[test]
fn detuned_lindblad_still_entangles() {
    let dir = TempDir::new().unwrap();
    let f = out(&dir, "l.json");
    assert_eq!(epqubits(&["lindblad", "--detuning", "0.001", "--format", "json", "--out", &f]), 0);
    assert!(json(&f)["result"]["peak_concurrence"].as_f64().unwrap() >= 0.9);
}

#[test]
fn epscan_reports_orders_and_slopes() {
    let dir = TempDir::new().unwrap();
    let f = out(&dir, "ep.json");
    assert_eq!(epqubits(&["epscan", "--J", "0", "--format", "json", "--out", &f]), 0);
    let v = json(&f);
    assert_eq!(v["result"]["ep_order"]["order"], 4);
    for b in v["result"]["scaling_fit"]["branches"].as_array().unwrap() {
        if b["ep_participating"].as_bool().unwrap() {
            let slope = b["real"]["slope"].as_f64().unwrap();
            assert!((slope - 1.0 / 3.0).abs() <= 0.02, "slope {slope}");
        }
    }
    let f0 = out(&dir, "ep0.json");
    assert_eq!(epqubits(&["epscan", "--gamma", "0", "--omega", "1", "--J", "0", "--format", "json", "--out", &f0]), 0);
    assert_eq!(json(&f0)["result"]["ep_order"]["order"], 1);
}

#[test]
fn optimize_summary() {
    let dir = TempDir::new().unwrap();
    let f = out(&dir, "o.json");
    assert_eq!(epqubits(&["optimize", "--J", "1e-3", "--format", "json", "--out", &f]), 0);
    let p = &json(&f)["result"]["points"][0];
    let (w, t) = (p["omega_star"].as_f64().unwrap(), p["t_star"].as_f64().unwrap());
    assert!((1.58..=1.62).contains(&w) && (5.27..=5.38).contains(&t), "({w}, {t})");
    assert!(p["c_max"].as_f64().unwrap() >= 0.99);
    assert!(p["factor"].as_f64().unwrap() > 1.0);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "gamma1 = 5.0\ngamma2 = 5.0\nomega1 = 1.4\nomega2 = 1.4\nJ = 0.002\n").unwrap();
    let f = out(&dir, "e.csv");
    let cfg = cfg.to_str().unwrap();
    assert_eq!(epqubits(&["evolve", "--config", cfg, "--gamma2", "4", "--t-max", "1", "--out", &f]), 0);
    let text = std::fs::read_to_string(&f).unwrap();
    for line in ["# gamma1 = 5.0", "# gamma2 = 4.0", "# omega1 = 1.4", "# J = 0.002"] {
        assert!(text.contains(line), "missing {line}");
    }
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "gamma = 5.0\n").unwrap();
    assert_eq!(epqubits(&["evolve", "--config", bad.to_str().unwrap(), "--out", &out(&dir, "x.csv")]), 2);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let runs: Vec<Vec<&str>> = vec![
        vec!["spectrum", "--omega", "1.3:1.8:50"],
        vec!["evolve", "--t-max", "2", "--format", "json"],
        vec!["lindblad", "--t-max", "1", "--gamma-f", "1e-3"],
        vec!["epscan", "--J", "1e-3", "--no-fit", "--format", "json"],
    ];
    for (k, run) in runs.iter().enumerate() {
        let (a, b) = (out(&dir, &format!("{k}a")), out(&dir, &format!("{k}b")));
        for f in [&a, &b] {
            let mut args = run.clone();
            args.extend(["--out", f.as_str()]);
            assert_eq!(epqubits(&args), 0, "{run:?}");
        }
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap(), "{run:?}");
    }
}

#[test]
fn json_outputs_lead_with_the_configuration() {
    let dir = TempDir::new().unwrap();
    let f = out(&dir, "e.json");
    assert_eq!(epqubits(&["evolve", "--t-max", "0.5", "--format", "json", "--out", &f]), 0);
    let text = std::fs::read_to_string(&f).unwrap();
    assert!(text.trim_start().starts_with("{\n  \"config\""));
    assert_eq!(json(&f)["config"]["system"]["J"], 1e-3);
}
