use std::fs::{self, File};
use std::io::BufReader;
use std::path::Path;
use std::process::{Command, Output};

use ap3lab::formats::{read_spectrum, write_function};
use ap3lab::zp_fourier::forward_transform;
use ap3lab::Function64;
use serde_json::Value;

fn ap3lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ap3lab")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn json(out: &Output) -> Value {
    assert_eq!(code(out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn primes_one_per_line() {
    let out = ap3lab(&["primes", "--limit", "30"]);
    assert_eq!(code(&out), 0);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "2\n3\n5\n7\n11\n13\n17\n19\n23\n29\n");
}

#[test]
fn primes_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.txt");
    let out = ap3lab(&["primes", "--limit", "100000", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert_eq!(fs::read_to_string(path).unwrap().lines().count(), 9592);
}

#[test]
fn exit_codes() {
    assert_eq!(code(&ap3lab(&[])), 1);
    assert_eq!(code(&ap3lab(&["primes", "--limit", "ten"])), 1);
    assert_eq!(code(&ap3lab(&["primes", "--limit", "1"])), 1);
    assert_eq!(code(&ap3lab(&["--help"])), 0);
    assert_eq!(code(&ap3lab(&["--threads", "0", "primes", "--limit", "10"])), 1);
    // N beyond the supported range
    assert_eq!(code(&ap3lab(&["wtrick", "--n", "2251799813685249"])), 3);
    // k outside the stated range of the L^{2k} bound
    assert_eq!(code(&ap3lab(&["bounds", "--n", "1000000", "--z", "3.45", "--sigma", "10"])), 2);
    assert_eq!(code(&ap3lab(&["lambda", "--p", "30011", "--set", "/nonexistent", "--direct"])), 1);
}

#[test]
fn forced_bounds_are_exploratory() {
    let v = json(&ap3lab(&["--force", "bounds", "--n", "1000000", "--z", "3.45", "--sigma", "10", "--alpha", "0.5", "--xi", "0.3"]));
    assert_eq!(v["exploratory"], Value::Bool(true));
    assert_eq!(v["k"], 1);
    assert!(v["prop32"].as_f64().unwrap() > 0.0);
    assert!(v["density"]["rows"][0]["value"].is_null());
}

#[test]
fn direct_lambda_over_ceiling_is_resource_limit() {
    let dir = tempfile::tempdir().unwrap();
    let set = write(dir.path(), "s.txt", "1\n2\n3\n");
    assert_eq!(code(&ap3lab(&["lambda", "--p", "30011", "--set", &set, "--direct"])), 3);
}

#[test]
fn nonprime_in_set_is_invalid_input() {
    let dir = tempfile::tempdir().unwrap();
    let set = write(dir.path(), "s.txt", "5\n11\n15\n17\n");
    assert_eq!(code(&ap3lab(&["wtrick", "--n", "1000", "--set", &set])), 1);
}

#[test]
fn wtrick_report_fields() {
    let v = json(&ap3lab(&["wtrick", "--n", "1000000"]));
    assert_eq!(v["W"], 6);
    assert_eq!(v["phiW"], 2);
    assert_eq!(v["P"], 500_009);
    assert_eq!(v["|A|"], 78_498);
    assert_eq!(v["bounds_hold"]["mass"], Value::Bool(true));
}

#[test]
fn bohr_size() {
    let v = json(&ap3lab(&["bohr", "--p", "101", "--freqs", "1", "--eps", "0.1", "--members"]));
    assert_eq!(v["size"], 21);
    assert_eq!(v["members"].as_array().unwrap().len(), 21);
    assert_eq!(v["pigeonhole_holds"], Value::Bool(true));
}

#[test]
fn lambda_methods_agree() {
    let dir = tempfile::tempdir().unwrap();
    let set = write(dir.path(), "s.txt", "0\n1\n2\n");
    let v = json(&ap3lab(&["lambda", "--p", "101", "--set", &set, "--both"]));
    assert!(v["difference"].as_f64().unwrap() < 1e-12);
    assert_eq!(v["pair_count"], 5);
    let lambda = v["lambda"].as_f64().unwrap();
    assert!((lambda * 101.0 * 101.0 - 5.0).abs() < 1e-9);
}

#[test]
fn tuples_report() {
    let v = json(&ap3lab(&["tuples", "--w", "6", "--offsets", "1,5", "--limit", "10", "--series-cutoff", "1000"]));
    assert_eq!(v["count"], 5);
    assert!(v["klimov_bound"].as_f64().unwrap() > 0.0);
    assert_eq!(code(&ap3lab(&["tuples", "--w", "6", "--offsets", "1", "--limit", "10"])), 1);
}

#[test]
fn transform_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let f = Function64::from_fn(101, |x| ((x * 37) % 11) as f64 - 5.0).unwrap();
    let input = dir.path().join("f.zpfn");
    write_function(&mut File::create(&input).unwrap(), &f).unwrap();
    let output = dir.path().join("f.zpsp");
    let out = ap3lab(&["transform", "--in", input.to_str().unwrap(), "--out", output.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let s = read_spectrum(&mut BufReader::new(File::open(&output).unwrap())).unwrap();
    assert_eq!(s, forward_transform(&f));
    assert_eq!(code(&ap3lab(&["transform", "--in", input.to_str().unwrap()])), 1);
}

#[test]
fn pipeline_is_deterministic_across_threads() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"N": 30000, "delta": "0.1", "epsilon": "0.25", "k_grid": [1, 2]}"#);
    let one = ap3lab(&["--threads", "1", "pipeline", "--config", &cfg]);
    let three = ap3lab(&["pipeline", "--config", &cfg, "--threads", "3"]);
    assert_eq!(code(&one), 0);
    assert_eq!(one.stdout, three.stdout);
    let v: Value = serde_json::from_slice(&one.stdout).unwrap();
    assert_eq!(v["schema"], "ap3lab-report/1");
    assert_eq!(v["norms"].as_array().unwrap().len(), 2);
    let gap = v["lambda"]["gap"].as_f64().unwrap();
    let recomputed = (v["lambda"]["lambda_a"].as_f64().unwrap() - v["lambda"]["lambda_h"].as_f64().unwrap()).abs();
    assert!((gap - recomputed).abs() <= 1e-12);
}

#[test]
fn pipeline_needs_n() {
    assert_eq!(code(&ap3lab(&["pipeline"])), 1);
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"N": 30000, "delta": "0.7"}"#);
    assert_eq!(code(&ap3lab(&["pipeline", "--config", &cfg])), 1);
}

#[test]
fn sweeps_write_csv_in_grid_order() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"N": 30000, "k_grid": [1, 2, 3], "delta_grid": ["0.2", "0.1"], "epsilon_grid": ["0.1", "0.25"]}"#,
    );
    let out = ap3lab(&["norm-sweep", "--config", &cfg]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("delta,epsilon,bohr_size,k,norm"));

    let path = dir.path().join("d.csv");
    let out = ap3lab(&["delta-sweep", "--config", &cfg, "--out", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let mut reader = csv::Reader::from_path(&path).unwrap();
    let rows: Vec<(String, String)> = reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].to_string(), r[1].to_string())
        })
        .collect();
    let want = [("0.2", "0.1"), ("0.2", "0.25"), ("0.1", "0.1"), ("0.1", "0.25")];
    assert_eq!(rows.len(), want.len());
    for ((d, e), (wd, we)) in rows.iter().zip(want) {
        assert_eq!((d.as_str(), e.as_str()), (wd, we));
    }
}
