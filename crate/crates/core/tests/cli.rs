use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn privtopk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_privtopk")).args(args).env_remove("PRIVTOPK_THREADS").output().unwrap()
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn scores(v: &Value) -> Vec<u64> {
    v["scores"].as_array().unwrap().iter().map(|x| x.as_u64().unwrap()).collect()
}

const HEADER: &str =
    "trial_id,m,n,k,epsilon,algorithm,access_cost_L1,access_cost_total,wall_time_ns,returned_items,error_alpha";

#[test]
fn run_is_byte_identical_for_a_fixed_seed() {
    let args = ["run", "--algo", "privta_lazy", "--instance", "zipf:m=5000,n=1000", "--k", "3", "--trials", "1", "--seed", "17"];
    let a = stdout(&privtopk(&args));
    let b = stdout(&privtopk(&args));
    assert_eq!(a, b);
    assert_eq!(a.lines().next().unwrap(), HEADER);
    assert_eq!(a.lines().count(), 2);

    let many = ["run", "--algo", "oneshot_gumbel", "--instance", "uniform_random:m=300,n=50", "--k", "4", "--trials", "30", "--seed", "5"];
    let serial = Command::new(env!("CARGO_BIN_EXE_privtopk")).args(many).env("PRIVTOPK_THREADS", "1").output().unwrap();
    assert_eq!(stdout(&serial), stdout(&privtopk(&many)));
}

#[test]
fn threshold_exact_rows_have_zero_error() {
    let out = stdout(&privtopk(&[
        "run", "--algo", "threshold_exact", "--instance", "both_access_hard", "--m", "400", "--n", "9", "--k", "4",
        "--trials", "5",
    ]));
    let rows: Vec<&str> = out.lines().skip(1).collect();
    assert_eq!(rows.len(), 5);
    for row in rows {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols[5], "threshold_exact");
        assert_eq!(cols[10], "0");
        assert_eq!(cols[9].split(';').count(), 4);
    }
}

#[test]
fn run_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("zipf.csv");
    let out = privtopk(&[
        "run", "--algo", "privta_lazy", "--instance", "zipf:m=100000,n=1000000", "--k", "10", "--trials", "200",
        "--out", csv.to_str().unwrap(),
    ]);
    stdout(&out);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 201);
    let summary = read_json(&dir.path().join("zipf.summary.json"));
    assert_eq!(summary["trials"], 200);
    assert_eq!(summary["algorithm"], "privta_lazy");
    let mean = summary["mean_access_cost_l1"].as_f64().unwrap();
    let from_rows: f64 = text
        .lines()
        .skip(1)
        .map(|r| r.split(',').nth(6).unwrap().parse::<f64>().unwrap())
        .sum::<f64>()
        / 200.0;
    assert!((mean - from_rows).abs() < 1e-9);
    assert!(mean < 2.0 * (1e6f64).sqrt());
}

#[test]
fn timing_flag_fills_wall_time() {
    let out = stdout(&privtopk(&[
        "run", "--algo", "oneshot_laplace", "--instance", "zipf:m=20000,n=100", "--k", "2", "--trials", "3", "--timing",
    ]));
    assert!(out.lines().skip(1).all(|r| r.split(',').nth(8).unwrap() != "0"));
}

#[test]
fn run_accepts_a_histogram_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.json");
    std::fs::write(&path, r#"{"n": 10, "scores": [1, 9, 4, 10, 0]}"#).unwrap();
    let out = stdout(&privtopk(&["run", "--algo", "threshold_exact", "--instance", path.to_str().unwrap(), "--k", "2"]));
    let row = out.lines().nth(1).unwrap();
    assert!(row.starts_with("0,5,10,2,"));
    assert_eq!(row.split(',').nth(9).unwrap(), "4;2");
}

#[test]
fn gen_zipf_example() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("zipf.json");
    stdout(&privtopk(&["gen", "--instance", "zipf", "--m", "3", "--n", "6", "--s", "1", "--out", path.to_str().unwrap()]));
    let v = read_json(&path);
    let mut s = scores(&v);
    s.sort_unstable();
    assert_eq!(s, vec![2, 3, 6]);
    assert_eq!(v["n"], 6);
    assert!(v.get("s_low").is_none());
}

#[test]
fn gen_both_access_hard_example() {
    let out = stdout(&privtopk(&["gen", "--instance", "both_access_hard:m=100,n=50,k=4"]));
    let v: Value = serde_json::from_str(&out).unwrap();
    let s = scores(&v);
    assert_eq!(s.iter().filter(|&&x| x == 50).count(), 15);
    assert_eq!(s.iter().filter(|&&x| x == 49).count(), 5);
    assert_eq!(s.iter().filter(|&&x| x == 0).count(), 80);
    let low: Vec<usize> = v["s_low"].as_array().unwrap().iter().map(|x| x.as_u64().unwrap() as usize).collect();
    assert_eq!(low.len(), 5);
    assert!(low.iter().all(|&i| s[i - 1] == 49));
}

#[test]
fn invalid_requests_exit_nonzero() {
    let cases: [&[&str]; 5] = [
        &["gen", "--instance", "zipf:m=3,n=6,k=4"],
        &["run", "--algo", "privta_lazy", "--instance", "zipf:m=5,n=6", "--k", "6"],
        &["run", "--algo", "privta_lazy", "--instance", "zipf:m=5,n=6", "--eps", "0"],
        &["run", "--algo", "nosuch", "--instance", "zipf:m=5,n=6"],
        &["run", "--algo", "privta_lazy", "--instance", "/nonexistent/h.json"],
    ];
    for args in cases {
        let out = privtopk(args);
        assert!(!out.status.success(), "{args:?} should fail");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn verify_expmech_suite_passes() {
    let out = stdout(&privtopk(&["verify", "--suite", "expmech"]));
    assert!(out.starts_with("PASS [4]"), "{out}");
    assert!(!privtopk(&["verify", "--suite", "bogus"]).status.success());
}
