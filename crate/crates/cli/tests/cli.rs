use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn risklab(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_risklab"));
    cmd.args(args).env_remove("RISKLAB_THREADS").env("RUST_LOG", "error");
    if let Some(t) = threads {
        cmd.env("RISKLAB_THREADS", t);
    }
    cmd.output().expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Three assets over 40 dates with deterministic prices.
fn toy_universe(dir: &Path) -> PathBuf {
    let data = dir.join("toy");
    std::fs::create_dir_all(&data).unwrap();
    for (a, ticker) in ["AAA", "BBB", "CCC"].iter().enumerate() {
        let mut text = String::from("Date,Adj Close\n");
        for t in 0..40 {
            let x = t as f64;
            let price = 100.0 * (1.0 + 0.001 * (a as f64 + 1.0) * x + 0.02 * ((a as f64 + 1.3) * x).sin());
            text.push_str(&format!("2018-{:02}-{:02},{price:.4}\n", 3 + t / 28, 1 + t % 28));
        }
        std::fs::write(data.join(format!("{ticker}.csv")), text).unwrap();
    }
    data
}

fn write_config(dir: &Path, name: &str, data_dir: &Path) -> PathBuf {
    let cfg = dir.join(format!("{name}.cfg"));
    let text = format!(
        "[run]\nseed = 5\nout_dir = {name}\n\n[universe.toy]\ndata_dir = {}\n\n\
         [model]\ngrid_step = 0.02\nl_values = 2, 3\n\n[bootstrap]\nresamples = 100\n\n\
         [simulation]\nlarge_samples = 60\n",
        data_dir.display()
    );
    std::fs::write(&cfg, text).unwrap();
    cfg
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn run_writes_every_output_and_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let data = toy_universe(tmp.path());
    let first = risklab(&["run", write_config(tmp.path(), "a", &data).to_str().unwrap()], None);
    assert!(first.status.success(), "{}", stderr(&first));
    let second = risklab(&["run", write_config(tmp.path(), "b", &data).to_str().unwrap()], Some("1"));
    assert!(second.status.success(), "{}", stderr(&second));

    let a = tree(&tmp.path().join("a"));
    assert_eq!(a, tree(&tmp.path().join("b")));
    let names: Vec<&str> = a.iter().map(|(n, _)| n.as_str()).collect();
    for scenario in ["toy_market", "toy_sim_zeta", "toy_sim_60"] {
        for suffix in ["var_rows", "var_table", "cvar_rows", "cvar_table", "cvar_lselect"] {
            assert!(names.contains(&format!("{scenario}_{suffix}.csv").as_str()), "{scenario}_{suffix}");
        }
    }
    let manifest = String::from_utf8(a.iter().find(|(n, _)| n == "manifest.txt").unwrap().1.clone()).unwrap();
    let scenarios = manifest.lines().filter(|l| l.starts_with("toy_")).count();
    assert_eq!(scenarios, 3);
    assert_eq!(manifest.lines().filter(|l| l.starts_with("sha256 ") && l.contains("toy/")).count(), 3);
    assert!(manifest.contains("toy_sim_60 kind=Simulated sample_size=60 rows=60"));

    let rows = std::str::from_utf8(&a.iter().find(|(n, _)| n == "toy_market_var_rows.csv").unwrap().1).unwrap();
    assert!(rows.starts_with("epsilon,model,mu,sigma_d,sortino\n"));
    assert_eq!(rows.lines().count(), 1 + 2 * 5);
    let summary = std::str::from_utf8(&a.iter().find(|(n, _)| n == "summary.csv").unwrap().1).unwrap();
    assert_eq!(summary.lines().count(), 4);
}

#[test]
fn missing_data_dir_exits_with_data_error() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nowhere");
    let out = risklab(&["run", write_config(tmp.path(), "x", &missing).to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.starts_with("error[data]: "), "{err}");
    assert!(err.contains(missing.to_str().unwrap()), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1);
}

#[test]
fn config_and_usage_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.cfg");
    std::fs::write(&bad, "[data]\ndata_dir = d\n[model]\nannual_rf = -1\n").unwrap();
    for (args, threads) in [
        (vec!["run", bad.to_str().unwrap()], None),
        (vec!["run", "/no/such/config.cfg"], None),
        (vec!["frobnicate"], None),
        (vec![], None),
        (vec!["version"], Some("zero")),
    ] {
        let out = risklab(&args, threads);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        let err = stderr(&out);
        assert!(err.starts_with("error[config]: ") || err.starts_with("error[usage]: "), "{err}");
        assert_eq!(err.trim_end().lines().count(), 1);
    }
}

#[test]
fn version_prints_name_and_version() {
    let out = risklab(&["version"], None);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), format!("risklab {}", env!("CARGO_PKG_VERSION")));
}

#[test]
fn plotdata_pivots_and_sorts() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("rows.csv");
    let mut text = String::from("epsilon,model,mu,sigma_d,sortino\n");
    // Descending epsilon so the output order has to be restored.
    for k in (0..50).rev() {
        let e = 0.0001 + 0.002 * k as f64;
        text.push_str(&format!("{e:.4},VaR,0.001,0.01,{}\n", k));
        text.push_str(&format!("{e:.4},WVaR,0.001,0.01,{}\n", 100 + k));
    }
    std::fs::write(&input, text).unwrap();
    let output = tmp.path().join("pivot.csv");
    let out = risklab(&["plotdata", input.to_str().unwrap(), output.to_str().unwrap()], None);
    assert!(out.status.success(), "{}", stderr(&out));
    let pivot = std::fs::read_to_string(&output).unwrap();
    let lines: Vec<&str> = pivot.lines().collect();
    assert_eq!(lines.len(), 51);
    assert_eq!(lines[0], "epsilon,sr_var,sr_wvar");
    assert_eq!(lines[1], "0.0001,0,100");
    assert_eq!(lines[50], "0.0981,49,149");

    let single = tmp.path().join("single.csv");
    std::fs::write(&single, "epsilon,model,mu,sigma_d,sortino\n0.02,CVaR,1,1,0.5\n0.01,CVaR,1,1,0.4\n").unwrap();
    let out = risklab(&["plotdata", single.to_str().unwrap(), output.to_str().unwrap()], None);
    assert!(out.status.success());
    assert_eq!(std::fs::read_to_string(&output).unwrap(), "epsilon,sr_cvar\n0.01,0.4\n0.02,0.5\n");

    std::fs::write(&single, "not,a,rows,file\n").unwrap();
    let out = risklab(&["plotdata", single.to_str().unwrap(), output.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("error[data]: "));
}
