use std::fs;
use std::process::{Command, Output};

fn cvtele(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cvtele")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("no `{key}` in {text}"))
        .parse()
        .unwrap()
}

#[test]
fn lossy_point() {
    let o = cvtele(&["point", "--epsilon", "0.77", "--omega", "0.56", "--beta", "0.9", "--eta2", "0.97"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!((value(&s, "v_x") - 0.453).abs() < 1e-3, "{s}");
    assert!((value(&s, "v_p") - 0.453).abs() < 1e-3, "{s}");
    assert!((value(&s, "fidelity") - 0.815).abs() < 1e-3, "{s}");
}

#[test]
fn point_json() {
    let o = cvtele(&["point", "--squeeze-r", "0", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["fidelity"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!((v["v_x"].as_f64().unwrap() - 2.0).abs() < 1e-12);
}

#[test]
fn bandwidth_at_moderate_pump() {
    let o = cvtele(&["bandwidth", "--epsilon", "0.6"]);
    assert!(o.status.success());
    let w: f64 = stdout(&o).trim().parse().unwrap();
    assert!(w > 15.2 && w < 15.4, "{w}");

    let o = cvtele(&["bandwidth", "--epsilon", "0.6", "--protocol", "swap"]);
    let ws: f64 = stdout(&o).trim().parse().unwrap();
    assert!(ws > 0.0 && ws < w);
}

#[test]
fn no_entanglement_gives_classical_fidelity() {
    let o = cvtele(&["spectrum", "--epsilon", "0", "--omega-end", "2", "--omega-step", "0.5"]);
    assert!(o.status.success());
    let s = stdout(&o);
    let mut lines = s.lines();
    assert_eq!(lines.next(), Some("omega,v_x,v_p,fidelity"));
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), 5);
    for r in rows {
        let f: f64 = r.rsplit(',').next().unwrap().parse().unwrap();
        assert!((f - 0.5).abs() < 1e-12, "{r}");
    }
}

#[test]
fn output_is_deterministic_across_threads() {
    let base = ["spectrum", "--epsilon", "0.7", "--beta", "0.9", "--eta2", "0.95", "--omega-end", "30"];
    let a = cvtele(&[&base[..], &["--threads", "1"]].concat());
    let b = cvtele(&[&base[..], &["--threads", "4"]].concat());
    let c = cvtele(&base);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);

    let s1 = cvtele(&["swap-spectrum", "--epsilon", "0.5", "--threads", "1"]);
    let s3 = cvtele(&["swap-spectrum", "--epsilon", "0.5", "--threads", "3"]);
    assert!(s1.status.success());
    assert_eq!(s1.stdout, s3.stdout);
}

#[test]
fn files_and_gnuplot() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("f.csv");
    let gp = dir.path().join("f.gp");
    let o = cvtele(&[
        "spectrum",
        "--epsilon",
        "0.4",
        "--output",
        csv.to_str().unwrap(),
        "--gnuplot",
        gp.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    assert!(fs::read_to_string(&csv).unwrap().starts_with("omega,"));
    assert!(fs::read_to_string(&gp).unwrap().contains(csv.to_str().unwrap()));

    let json = cvtele(&["swap-spectrum", "--epsilon", "0.4", "--format", "json", "--omega-end", "1"]);
    let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert!(v.to_string().contains("fidelity"));
}

#[test]
fn custom_spectrum_source() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    // a flat table equal to squeezing r = 0.5
    let (p, m) = (0.5f64.exp(), (-0.5f64).exp());
    fs::write(&path, format!("omega,s_plus_re,s_plus_im,s_minus_re,s_minus_im\n0,{p},0,{m},0\n10,{p},0,{m},0\n")).unwrap();
    let a = cvtele(&["point", "--custom-spectrum", path.to_str().unwrap(), "--omega", "3"]);
    let b = cvtele(&["point", "--squeeze-r", "0.5", "--omega", "3"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let (fa, fb) = (value(&stdout(&a), "fidelity"), value(&stdout(&b), "fidelity"));
    assert!((fa - fb).abs() < 1e-9);

    fs::write(&path, "garbage\n").unwrap();
    assert_eq!(cvtele(&["point", "--custom-spectrum", path.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn config_file_with_override() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    fs::write(&conf, "# point setup\nepsilon = 0.4\nomega = 0.5\n").unwrap();
    let c = conf.to_str().unwrap();
    let from_file = stdout(&cvtele(&["point", "--config", c]));
    let direct = stdout(&cvtele(&["point", "--epsilon", "0.4", "--omega", "0.5"]));
    assert_eq!(from_file, direct);
    let overridden = stdout(&cvtele(&["point", "--config", c, "--epsilon", "0.6"]));
    let direct = stdout(&cvtele(&["point", "--epsilon", "0.6", "--omega", "0.5"]));
    assert_eq!(overridden, direct);
}

#[test]
fn exit_codes() {
    assert_eq!(cvtele(&["--help"]).status.code(), Some(0));
    assert_eq!(cvtele(&["--version"]).status.code(), Some(0));
    assert_eq!(cvtele(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(cvtele(&["point"]).status.code(), Some(1));
    assert_eq!(cvtele(&["point", "--epsilon", "1.5"]).status.code(), Some(1));
    assert_eq!(cvtele(&["point", "--epsilon", "0.5", "--squeeze-r", "1"]).status.code(), Some(1));
    assert_eq!(cvtele(&["point", "--epsilon", "0.5", "--eta2", "0"]).status.code(), Some(1));
    assert_eq!(cvtele(&["spectrum", "--epsilon", "0.5", "--omega-step", "-1"]).status.code(), Some(1));
    assert_eq!(cvtele(&["spectrum", "--epsilon", "0.5", "--gain", "fixed:x"]).status.code(), Some(1));
    assert_eq!(cvtele(&["point", "--config", "/nonexistent/run.conf"]).status.code(), Some(1));
    assert_eq!(
        cvtele(&["spectrum", "--epsilon", "0.5", "--output", "/nonexistent/dir/out.csv"]).status.code(),
        Some(1)
    );
    // the threshold point has no finite operator description at non-unit gain
    let o = cvtele(&["point", "--epsilon", "1", "--gain", "fixed:0.8"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
}

#[test]
fn threshold_point_at_unit_gain() {
    let o = cvtele(&["point", "--epsilon", "1"]);
    assert!(o.status.success());
    assert!((value(&stdout(&o), "fidelity") - 1.0).abs() < 1e-12);
}

#[test]
fn criteria_report() {
    let o = cvtele(&["criteria", "--epsilon", "0.5", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["verdicts"]["fidelity"], serde_json::Value::Bool(true));
    let o = cvtele(&["criteria", "--epsilon", "0"]);
    assert!(stdout(&o).contains("not beaten"));
}

#[test]
fn oracle_check_small_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("oracle.json");
    let o = cvtele(&["oracle-check", "--samples", "20000", "--seed", "7", "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["passed"], serde_json::Value::Bool(true));
    assert_eq!(cvtele(&["oracle-check", "--samples", "10"]).status.code(), Some(1));
}
