use std::path::PathBuf;
use std::process::Command;

fn cldg() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cldg"));
    for (key, _) in std::env::vars() {
        if key.starts_with("CLDG_") {
            cmd.env_remove(key);
        }
    }
    cmd
}

fn read(path: &PathBuf) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn converge_writes_csv_with_rates() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rates.csv");
    let status = cldg().args(["converge", "--alpha", "1.5", "--cells", "8,16", "--out"]).arg(&out).status().unwrap();
    assert!(status.success());
    let text = read(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("inv_h,E1,rate1,E2,rate2"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "8");
    assert!(first[2].is_empty());
    let second: Vec<&str> = lines.next().unwrap().split(',').collect();
    let rate: f64 = second[2].parse().unwrap();
    assert!((1.8..2.6).contains(&rate), "rate {rate}");
}

#[test]
fn config_file_and_env_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("study.toml");
    std::fs::write(
        &cfg,
        "problem = \"custom\"\ndimension = 1\nalpha = 1.5\nT = 0.01\n\
         g = \"x^2*(1-x)^2\"\nf = \"0\"\ncells = [8]\nformat = \"json\"\n",
    )
    .unwrap();
    let out = dir.path().join("run.json");
    let status =
        cldg().env("CLDG_ALPHA", "1.3").arg("run").arg("--config").arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert!(status.success());
    let v: serde_json::Value = serde_json::from_str(&read(&out)).unwrap();
    assert_eq!(v["inv_h"], 8);
    assert!((v["t"].as_f64().unwrap() - 0.01).abs() < 1e-14);
    assert!(v["energy"].as_f64().unwrap() > 0.0);
    assert!(v["e1"].is_null());
}

#[test]
fn invalid_order_exits_with_config_code() {
    let out = cldg().args(["run", "--alpha", "2.5"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let unknown = cldg().args(["run", "--no-such-flag"]).output().unwrap();
    assert_eq!(unknown.status.code(), Some(1));
}

#[test]
fn unstable_stepping_exits_with_code_two() {
    let out = cldg()
        .args([
            "stability",
            "--cells",
            "8",
            "--integrator",
            "forward-euler",
            "--tau-max-coeff",
            "5",
            "--tau-coeff",
            "1",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn stability_trace_is_monotone() {
    let out = cldg().args(["stability", "--cells", "8", "--tmax-final", "0.01"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let energies: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(energies.len() > 2);
    assert!(energies.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
}
