use std::process::{Command, Output};

fn ptchain(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ptchain")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn spectrum_csv_has_one_row_per_level() {
    let out = ptchain(&["spectrum", "--n", "8", "--gamma", "0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("gamma,level_index,k_re,k_im,energy_re,energy_im,phase"));
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r.ends_with(",unbroken")));
}

#[test]
fn broken_spectrum_reports_complex_pair() {
    let out = ptchain(&["spectrum", "--n", "2", "--gamma", "1.25"]);
    let text = stdout(&out);
    let imag: Vec<f64> = text.lines().skip(1).map(|r| r.split(',').nth(5).unwrap().parse().unwrap()).collect();
    let mut imag = imag;
    imag.sort_by(f64::total_cmp);
    assert!((imag[0] + 0.75).abs() < 1e-10 && (imag[1] - 0.75).abs() < 1e-10, "{imag:?}");
}

#[test]
fn hermitian_couplings_for_seven_sites() {
    let out = ptchain(&["hermitian", "--n", "7", "--gamma", "0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("n,gamma,i,j,lambda\n"));
    // the 3 × 4 block has 12 entries
    assert_eq!(text.lines().count(), 13);
    let has = |x: f64| {
        text.lines().skip(1).any(|r| (r.rsplit(',').next().unwrap().parse::<f64>().unwrap().abs() - x).abs() < 2e-4)
    };
    assert!(has(1.2075) && has(0.0883));
}

#[test]
fn output_is_deterministic() {
    let args = ["sweep", "--n", "6", "--gamma-min", "0", "--gamma-max", "2", "--steps", "9"];
    assert_eq!(ptchain(&args).stdout, ptchain(&args).stdout);
}

#[test]
fn json_output_carries_metadata() {
    let out = ptchain(&["metric", "--n", "4", "--gamma", "0.3", "--format", "json"]);
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["meta"]["command"], "metric");
    assert_eq!(doc["meta"]["spec"]["n_sites"], 4);
    assert_eq!(doc["records"].as_array().unwrap().len(), 16);
}

#[test]
fn out_flag_writes_file() {
    let path = std::env::temp_dir().join(format!("ptchain-phase-{}.csv", std::process::id()));
    let out = ptchain(&["phase", "--n", "9", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).ok();
    let row: Vec<_> = text.lines().nth(1).unwrap().split(',').collect();
    let gc: f64 = row[2].parse().unwrap();
    assert!((gc - (5.0f64 / 4.0).sqrt()).abs() < 1e-10);
}

#[test]
fn verify_passes_on_small_chains() {
    let out = ptchain(&["verify", "--n-max", "5"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).lines().skip(1).all(|r| r.ends_with(",PASS")));
}

#[test]
fn exit_codes_separate_usage_from_failure() {
    assert_eq!(ptchain(&["spectrum", "--n", "0", "--gamma", "0.5"]).status.code(), Some(2));
    assert_eq!(ptchain(&["spectrum", "--gamma", "0.5"]).status.code(), Some(2));
    assert_eq!(ptchain(&["bogus"]).status.code(), Some(2));
    let broken = ptchain(&["metric", "--n", "6", "--gamma", "5"]);
    assert_eq!(broken.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&broken.stderr).contains("unbroken"));
}
