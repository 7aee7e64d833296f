use std::fs;
use std::path::Path;
use std::process::Command;

use gecodes::bounds::CodeParams;
use gecodes::exact::{bsc_exact, ge_exact, DecoderSpec, DecodingRule, TiePolicy};
use gecodes::markov::ChannelParams;

const BIN: &str = env!("CARGO_BIN_EXE_gecodes");

fn sweep(args: &[&str], out: &Path) {
    let status = Command::new(BIN).args(args).arg("--out").arg(out).status().unwrap();
    assert!(status.success(), "{args:?}");
}

fn rows(path: &Path) -> Vec<csv::StringRecord> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|r| r.unwrap()).collect()
}

fn find<'a>(rows: &'a [csv::StringRecord], quantity: &str, n: &str, rate_nats: f64) -> &'a csv::StringRecord {
    rows.iter()
        .find(|r| &r[0] == quantity && &r[1] == n && (r[2].parse::<f64>().unwrap() - rate_nats).abs() < 1e-8)
        .unwrap_or_else(|| panic!("no row {quantity} N={n} R={rate_nats}"))
}

fn value(r: &csv::StringRecord) -> f64 {
    r[8].parse().unwrap()
}

#[test]
fn fig2_first_gallager_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig2.csv");
    sweep(&["fig2"], &out);
    let rows = rows(&out);
    assert_eq!(rows.len(), 66);
    let r = find(&rows, "bound_gallager", "50", 0.25 * std::f64::consts::LN_2);
    assert!((value(r) / 0.000624627 - 1.0).abs() < 0.01, "{}", value(r));
}

#[test]
fn fig3_values_pass_through_library() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig3.csv");
    sweep(&["fig3"], &out);
    let rows = rows(&out);
    assert_eq!(rows.len(), 44);
    let params = ChannelParams::new(0.0533, 0.08, 0.01, 0.1).unwrap();
    let code = CodeParams::from_bits(75, 0.5).unwrap();
    let decoder = DecoderSpec::new(DecodingRule::MaximumLikelihood, TiePolicy::Error);
    let want = ge_exact(&params, &code, decoder).unwrap().averaged;
    let r = find(&rows, "exact_ml", "75", 0.5 * std::f64::consts::LN_2);
    assert_eq!(&r[8], format!("{want:.8e}"));
    assert_eq!(&r[13], "error");
    assert_eq!(&r[14], "ml");
}

#[test]
fn bsc_passes_through() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bsc.csv");
    sweep(&["--rates", "0.25", "--N", "50", "--quantity", "bsc", "--p", "0.1", "--M", "2"], &out);
    let rows = rows(&out);
    assert_eq!(rows.len(), 1);
    let want = bsc_exact(50, 0.1, 2, TiePolicy::Error).unwrap();
    assert_eq!(&rows[0][8], format!("{want:.8e}"));
}

#[test]
fn output_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "--quantity", "simulate,exact_md,bound_gallager", "--N", "16,24", "--rates", "0.3,0.2",
        "--alpha", "0.1", "--beta", "0.2", "--eps-g", "0.02", "--eps-b", "0.2", "--trials", "3000", "--seed", "9",
    ];
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    sweep(&args, &a);
    sweep(&args, &b);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(
        fs::read(a.with_extension("csv.meta.json")).unwrap(),
        fs::read(b.with_extension("csv.meta.json")).unwrap()
    );
    let keys: Vec<(String, String, f64)> = rows(&a)
        .iter()
        .map(|r| (r[0].to_string(), r[1].to_string(), r[2].parse().unwrap()))
        .collect();
    let mut sorted = keys.clone();
    sorted.sort_by(|x, y| (&x.0, x.1.parse::<usize>().unwrap()).cmp(&(&y.0, y.1.parse().unwrap())).then(x.2.total_cmp(&y.2)));
    assert_eq!(keys, sorted);
}

#[test]
fn sidecar_keys_are_sorted() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.csv");
    sweep(&["fig2", "--N", "50", "--rates", "0.5"], &out);
    let text = fs::read_to_string(dir.path().join("o.csv.meta.json")).unwrap();
    let meta: serde_json::Value = serde_json::from_str(&text).unwrap();
    let keys: Vec<_> = meta.as_object().unwrap().keys().cloned().collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    let top: Vec<_> = text.lines().filter(|l| l.starts_with("  \"")).map(|l| l.trim().to_string()).collect();
    assert!(top.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(meta["rate_unit"], "bits");
    assert_eq!(meta["rows"], 2);
}

#[test]
fn invalid_parameters_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bad.csv");
    let res = Command::new(BIN)
        .args(["--quantity", "exact_md", "--N", "10", "--rates", "0.3", "--alpha", "1.5", "--beta", "0.2"])
        .args(["--eps-g", "0.01", "--eps-b", "0.1", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(!res.status.success());
    let stderr = String::from_utf8(res.stderr).unwrap();
    assert_eq!(stderr.lines().count(), 1, "{stderr}");
    assert!(stderr.starts_with("error: kind=invalid_parameter message=\""), "{stderr}");
    assert!(!out.exists());
    assert!(!dir.path().join("bad.csv.meta.json").exists());
}

#[test]
fn unwritable_destination_reports_io() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("missing").join("x.csv");
    let code = gecodes_cli::run(["gecodes", "--quantity", "bsc", "--N", "8", "--rates", "0.2", "--p", "0.1", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(!out.exists());
}
