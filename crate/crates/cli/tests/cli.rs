use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn apnorm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_apnorm")).args(args).env_remove("APNORM_CACHE_DIR").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn summary_value(csv: &str, key: &str) -> f64 {
    let line = csv.lines().skip_while(|l| *l != "# summary").find(|l| l.contains(key)).unwrap();
    let field = line.split_whitespace().find(|f| f.starts_with(key)).unwrap();
    field[key.len()..].parse().unwrap()
}

#[test]
fn phases_listing() {
    let out = apnorm(&["phases"]);
    assert!(out.status.success());
    let text = stdout(&out);
    for family in ["constant", "linear", "cosine", "cosine_sum", "weierstrass", "tensor_sum"] {
        assert!(text.lines().any(|l| l.starts_with(family)), "{family}");
    }
    let json: serde_json::Value = serde_json::from_slice(&apnorm(&["phases", "--json"]).stdout).unwrap();
    assert!(json.as_array().unwrap().len() >= 6);
}

#[test]
fn unknown_subcommand_prints_usage() {
    let out = apnorm(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("Usage"));
}

#[test]
fn cosine_sweep_schema_and_exponent() {
    let out = apnorm(&["sweep", "--phase", "cosine", "--lambda", "dyadic:8:64", "--p", "1"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(
        header,
        "phase,m,p,lambda,grid_n,norm,tail_bound,cert_lower,upper_bound,theory_lower_exp,theory_upper_exp"
    );
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 4);
    let norms: Vec<f64> = rows.iter().map(|r| r[5].parse().unwrap()).collect();
    assert!(norms.windows(2).all(|w| w[1] > w[0]));
    for r in &rows {
        let cert: f64 = r[7].parse().unwrap();
        let upper: f64 = r[8].parse().unwrap();
        let norm: f64 = r[5].parse().unwrap();
        assert!(cert <= norm && norm <= upper, "{r:?}");
    }
    assert!(text.starts_with("# apnorm "));
    assert!(text.contains("# grid_policy="));
    let beta = summary_value(&text, "exponent=");
    assert!((beta - 0.5).abs() < 0.1, "beta={beta}");
}

#[test]
fn single_row_parseval() {
    let out = apnorm(&["sweep", "--lambda", "1", "--p", "2"]);
    assert!(out.status.success());
    let rows = data_rows(&stdout(&out));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][5], "1.0");
}

fn cached_sweep(cache: &Path, out: &Path) -> Output {
    apnorm(&[
        "sweep",
        "--phase",
        "cosine_sum",
        "--m",
        "2",
        "--lambda",
        "8,16,32",
        "--p",
        "1,1.5",
        "--cache-dir",
        cache.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ])
}

#[test]
fn cache_reuse_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let first = dir.path().join("a.csv");
    let second = dir.path().join("b.csv");
    assert!(cached_sweep(&cache, &first).status.success());
    let records = fs::read_dir(&cache).unwrap().count();
    assert_eq!(records, 6);
    assert!(cached_sweep(&cache, &second).status.success());
    assert_eq!(fs::read(&first).unwrap(), fs::read(&second).unwrap());

    for entry in fs::read_dir(&cache).unwrap() {
        fs::write(entry.unwrap().path(), "garbage").unwrap();
    }
    let third = dir.path().join("c.csv");
    assert!(cached_sweep(&cache, &third).status.success());
    assert_eq!(fs::read(&first).unwrap(), fs::read(&third).unwrap());

    let uncached = apnorm(&["sweep", "--phase", "cosine_sum", "--m", "2", "--lambda", "8,16,32", "--p", "1,1.5"]);
    assert_eq!(uncached.stdout, fs::read(&first).unwrap());
}

#[test]
fn cache_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_apnorm"))
        .args(["sweep", "--lambda", "8", "--certify", "false"])
        .env("APNORM_CACHE_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# a run\nphase = cosine\np = 1.5\nlambda = 8,16\nformat = json\n").unwrap();
    let out = apnorm(&["sweep", "--config", cfg.to_str().unwrap(), "--p", "1"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let records = doc["records"].as_array().unwrap();
    assert_eq!(records.len(), 2);
    assert_eq!(records[0]["p"], 1.0);
    assert_eq!(doc["command"], "sweep");

    fs::write(&cfg, "phase = cosine\ncolour = blue\n").unwrap();
    let bad = apnorm(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(stderr(&bad).contains("colour"));
    assert_eq!(apnorm(&["sweep", "--p", "3"]).status.code(), Some(2));
    assert_eq!(apnorm(&["sweep", "--phase", "weierstrass", "--m", "2"]).status.code(), Some(2));
}

#[test]
fn unresolvable_grid_exit_code() {
    let out = apnorm(&["sweep", "--lambda", "64", "--max-points", "64", "--certify", "false"]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn certify_refuses_linear_phase() {
    let out = apnorm(&["certify", "--phase", "linear", "--m", "2", "--k", "2,1", "--lambda", "16"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr(&out).contains("measure 0"));
}

#[test]
fn certify_cosine_sum() {
    let out =
        apnorm(&["certify", "--phase", "cosine_sum", "--m", "2", "--lambda", "64", "--p", "1", "--format", "csv"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = data_rows(&stdout(&out));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][8], "1.0");
    assert_eq!(rows[0][13], "true");
}

#[test]
fn certify_cosine_json() {
    let out = apnorm(&["certify", "--phase", "cosine", "--lambda", "32", "--p", "1.5", "--format", "json"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let cert = &doc["records"][0];
    assert_eq!(cert["sound"], true);
    assert!((cert["exponent"].as_f64().unwrap() - 1.0 / 6.0).abs() < 1e-12);
    assert!(cert["pass_rate"].as_f64().unwrap() >= 0.95);
}

#[test]
fn export_writes_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let plots = dir.path().join("plots");
    let out = apnorm(&[
        "export",
        "--phase",
        "weierstrass",
        "--lambda",
        "dyadic:8:64",
        "--certify",
        "false",
        "--plot-dir",
        plots.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let data = fs::read_to_string(plots.join("weierstrass_alpha_0.5_depth_12_m1_p1.0.dat")).unwrap();
    let lines: Vec<&str> = data.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[0].split(' ').count(), 2);
    assert!(plots.join("weierstrass_alpha_0.5_depth_12_m1_p1.0_theta.dat").exists());
}

#[test]
fn verify_selected_criteria() {
    let ok = apnorm(&["verify", "--criteria", "2,9", "--tighten", "2"]);
    assert!(ok.status.success(), "{}", stdout(&ok));
    let text = stdout(&ok);
    assert!(text.contains("PASS [2]") && text.contains("PASS [9]"));
    assert_eq!(apnorm(&["verify", "--criteria", "42"]).status.code(), Some(2));
}
