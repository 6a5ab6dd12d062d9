use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qsteg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsteg")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').map(str::to_owned).collect()).collect()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn kcr_curve_has_header_and_zero_row() {
    let o = qsteg(&["kcr", "--p", "0.05,0.1,0.2,0.3", "--delta-p", "0,0.01", "--n", "10000"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let first = text.lines().next().unwrap();
    assert!(first.starts_with("# qsteg ") && first.contains("config-sha256="), "{first}");
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 8);
    for r in rows.iter().filter(|r| r[1] == "0") {
        assert_eq!(r[3], "0");
    }
    let k: Vec<f64> = rows.iter().filter(|r| r[1] == "0.01").map(|r| r[3].parse().unwrap()).collect();
    assert!(k.windows(2).all(|w| w[0] < w[1]), "{k:?}");
}

#[test]
fn config_file_and_output_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("security.json");
    fs::write(&cfg, r#"{"verb": "security", "n": [1, 2], "p": 0.1, "delta_p": 0.02}"#).unwrap();
    let out = dir.path().join("s.csv");
    let o = qsteg(&["security", "--config", path(&cfg), "--out", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.contains("n,p,delta_p,diamond_norm,p_opt,s37_bound"));
    let rows = data_rows(&text);
    let d1: f64 = rows[0][3].parse().unwrap();
    assert!((d1 - 0.04).abs() < 1e-12);
}

#[test]
fn simulation_is_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let common = ["simulate-p1", "--n", "60", "--p", "0.2", "--delta", "0.3", "--blocks", "200", "--seed", "11"];
    let mut args_a = common.to_vec();
    args_a.extend(["--threads", "1", "--out", path(&a)]);
    let mut args_b = common.to_vec();
    args_b.extend(["--threads", "4", "--out", path(&b)]);
    assert!(qsteg(&args_a).status.success());
    let ob = qsteg(&args_b);
    assert!(ob.status.success());
    assert!(String::from_utf8_lossy(&ob.stderr).contains("NON-SECRET"));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn trace_hides_secrets_unless_revealed() {
    let dir = tempfile::tempdir().unwrap();
    let plain = dir.path().join("plain.jsonl");
    let shown = dir.path().join("shown.jsonl");
    let base = ["simulate-p1", "--n", "40", "--p", "0.2", "--delta", "0.3", "--blocks", "5", "--seed", "2"];
    let mut a = base.to_vec();
    a.extend(["--trace", path(&plain)]);
    let mut b = base.to_vec();
    b.extend(["--trace", path(&shown), "--reveal"]);
    assert!(qsteg(&a).status.success());
    assert!(qsteg(&b).status.success());
    let plain = fs::read_to_string(plain).unwrap();
    let shown = fs::read_to_string(shown).unwrap();
    assert_eq!(plain.lines().count(), 5);
    for line in plain.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v.get("mixed_count").is_some() && v.get("pad").is_none() && v.get("payload_slots").is_none());
    }
    let v: serde_json::Value = serde_json::from_str(shown.lines().next().unwrap()).unwrap();
    assert!(v.get("pad").is_some() && v.get("payload_slots").is_some());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // Missing key material for a simulation.
    assert_eq!(qsteg(&["simulate-p1", "--blocks", "3"]).status.code(), Some(2));
    // Out-of-range grid.
    assert_eq!(qsteg(&["security", "--p", "0.9"]).status.code(), Some(2));
    // Malformed config.
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"verb\": \"kcr\", \"unknown\": 1}").unwrap();
    assert_eq!(qsteg(&["kcr", "--config", path(&bad)]).status.code(), Some(2));
    // Verb mismatch between config and subcommand.
    let other = dir.path().join("other.json");
    fs::write(&other, "{\"verb\": \"rates\"}").unwrap();
    assert_eq!(qsteg(&["kcr", "--config", path(&other)]).status.code(), Some(2));
    // A short key file runs dry.
    let key = dir.path().join("key.hex");
    fs::write(&key, "a5a5").unwrap();
    let o = qsteg(&["simulate-p1", "--n", "200", "--p", "0.15", "--delta", "0.45", "--blocks", "10", "--key-file", path(&key)]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn p2_encode_decode_roundtrip_with_partition_file() {
    let dir = tempfile::tempdir().unwrap();
    let msg = dir.path().join("m.txt");
    let block = dir.path().join("block.json");
    let part = dir.path().join("partition.json");
    let key = dir.path().join("key.hex");
    fs::write(&key, "0123456789abcdeffedcba9876543210".repeat(4)).unwrap();
    let grid = ["--channel", "bsc", "--n", "12", "--p", "0.25", "--delta", "0.2"];

    // The partition carries 7 bits at this grid point.
    fs::write(&msg, "1011010\n").unwrap();
    let mut enc = vec!["p2-encode"];
    enc.extend(grid);
    enc.extend(["--key-file", path(&key), "--message", path(&msg), "--out", path(&block), "--partition-out", path(&part)]);
    let o = qsteg(&enc);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let partition: serde_json::Value = serde_json::from_str(&fs::read_to_string(&part).unwrap()).unwrap();
    assert_eq!(partition["set_count"], "128");

    let o = qsteg(&["p2-decode", "--partition", path(&part), "--key-file", path(&key), "--block", path(&block)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).trim(), "1011010");

    // Wrong message length is a config error.
    fs::write(&msg, "101").unwrap();
    let mut enc = vec!["p2-encode"];
    enc.extend(grid);
    enc.extend(["--seed", "1", "--message", path(&msg)]);
    assert_eq!(qsteg(&enc).status.code(), Some(2));
}

#[test]
fn noisy_protocol2_writes_codebook() {
    let dir = tempfile::tempdir().unwrap();
    let artifacts = dir.path().join("art");
    let o = qsteg(&[
        "simulate-p2",
        "--noisy",
        "--channel",
        "bsc",
        "--n",
        "200",
        "--p",
        "0.1",
        "--delta-p",
        "0.01",
        "--trials",
        "200",
        "--seed",
        "3",
        "--artifact-dir",
        path(&artifacts),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = data_rows(&stdout(&o));
    assert_eq!(rows.len(), 1);
    let cb: serde_json::Value = serde_json::from_str(&fs::read_to_string(artifacts.join("codebook-0.json")).unwrap()).unwrap();
    assert_eq!(cb["codewords"].as_array().unwrap().len(), rows[0][5].parse::<usize>().unwrap());
}

#[test]
fn eve_reports_ceiling() {
    let o = qsteg(&["eve", "--p", "0.1", "--delta-p", "0.3", "--n", "1", "--blocks", "1", "--trials", "2000", "--seed", "4"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("# prior: fair coin"));
    let rows = data_rows(&text);
    let ceiling: f64 = rows[0][8].parse().unwrap();
    assert!((ceiling - 0.65).abs() < 1e-12);
    assert_eq!(qsteg(&["eve", "--trials", "10", "--seed", "4"]).status.code(), Some(2));
}
