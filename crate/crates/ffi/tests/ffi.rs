use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use privtopk::experiment::{run_trial, Algorithm, ExperimentConfig, InstanceSource};
use privtopk::{Histogram, NoiseKind};
use privtopk_ffi::*;

fn histogram(scores: &[u64], n: u64) -> *mut PtkHistogram {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { ptk_histogram_new(scores.as_ptr(), scores.len(), n, &mut h) }, PtkStatus::Ok);
    h
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(ptk_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn histogram_lifecycle_and_errors() {
    let h = histogram(&[4, 1, 3], 5);
    assert_eq!(unsafe { ptk_histogram_len(h) }, 3);
    unsafe { ptk_histogram_free(h) };
    unsafe { ptk_histogram_free(ptr::null_mut()) };
    assert_eq!(unsafe { ptk_histogram_len(ptr::null()) }, 0);

    let mut out = ptr::null_mut();
    let status = unsafe { ptk_histogram_new([9u64].as_ptr(), 1, 5, &mut out) };
    assert_eq!(status, PtkStatus::InvalidArgument);
    assert!(out.is_null());
    assert!(!last_error().is_empty());
    assert_eq!(unsafe { ptk_histogram_new(ptr::null(), 1, 5, &mut out) }, PtkStatus::NullPointer);

    let json = CString::new(r#"{"n": 6, "scores": [6, 3, 2]}"#).unwrap();
    assert_eq!(unsafe { ptk_histogram_from_json(json.as_ptr(), &mut out) }, PtkStatus::Ok);
    assert_eq!(unsafe { ptk_histogram_len(out) }, 3);
    unsafe { ptk_histogram_free(out) };
    let bad = CString::new("{not json").unwrap();
    assert_eq!(unsafe { ptk_histogram_from_json(bad.as_ptr(), &mut out) }, PtkStatus::Parse);
}

#[test]
fn queries_match_the_cli_trial_stream() {
    let scores: Vec<u64> = (0..500).map(|i| (i * 37 % 101) as u64).collect();
    let h = histogram(&scores, 100);
    let mut items = [0usize; 4];
    let mut cost = PtkCost::default();
    let status =
        unsafe { ptk_private_topk(h, 4, PtkNoiseKind::Laplace, 0.5, PtkMode::Lazy, 11, items.as_mut_ptr(), &mut cost) };
    assert_eq!(status, PtkStatus::Ok);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.json");
    Histogram::new(scores.clone(), 100).unwrap().save(&path, None).unwrap();
    let config = ExperimentConfig {
        algorithm: Algorithm::PrivtaLazy,
        noise: NoiseKind::Laplace,
        instance: InstanceSource::File(path),
        k: 4,
        epsilon: 0.5,
        trials: 1,
        seed: 11,
        timing: false,
    };
    let record = run_trial(&config, &config.instance.load().unwrap(), 0).unwrap();
    let expected: Vec<usize> = record.returned_items.iter().map(|i| i.get()).collect();
    assert_eq!(items.to_vec(), expected);
    assert_eq!(cost.histogram, record.access_cost_l1);
    assert_eq!(cost.total, record.access_cost_total);

    let mut one = 0usize;
    assert_eq!(unsafe { ptk_exponential_mechanism(h, 1.0, 3, &mut one, ptr::null_mut()) }, PtkStatus::Ok);
    assert!((1..=500).contains(&one));
    let mut all = [0usize; 2];
    let mut cost = PtkCost::default();
    let status = unsafe { ptk_oneshot_topk(h, 2, PtkNoiseKind::Gumbel, 1.0, 3, all.as_mut_ptr(), &mut cost) };
    assert_eq!(status, PtkStatus::Ok);
    assert_eq!(cost.histogram, 500);
    assert_eq!(unsafe { ptk_exponential_mechanism(h, -1.0, 3, &mut one, ptr::null_mut()) }, PtkStatus::InvalidArgument);
    unsafe { ptk_histogram_free(h) };
}

#[test]
fn noise_oracle_access() {
    let mut o = ptr::null_mut();
    assert_eq!(unsafe { ptk_noise_oracle_new(3, PtkNoiseKind::Gumbel, 1.0, 5, &mut o) }, PtkStatus::Ok);
    let (mut item, mut z) = (0usize, 0.0f64);
    let mut seen = Vec::new();
    for _ in 0..3 {
        assert_eq!(unsafe { ptk_noise_oracle_sorted_access(o, &mut item, &mut z) }, PtkStatus::Ok);
        seen.push((item, z));
    }
    assert!(seen.windows(2).all(|w| w[0].1 >= w[1].1));
    assert_eq!(unsafe { ptk_noise_oracle_sorted_access(o, &mut item, &mut z) }, PtkStatus::Exhausted);
    let mut again = 0.0;
    assert_eq!(unsafe { ptk_noise_oracle_random_access(o, seen[1].0, &mut again) }, PtkStatus::Ok);
    assert_eq!(again, seen[1].1);
    assert_eq!(unsafe { ptk_noise_oracle_random_access(o, 4, &mut again) }, PtkStatus::OutOfRange);
    // failed calls are not charged
    assert_eq!(unsafe { ptk_noise_oracle_access_count(o) }, 4);
    unsafe { ptk_noise_oracle_free(o) };
    assert_eq!(unsafe { ptk_noise_oracle_new(0, PtkNoiseKind::Gumbel, 1.0, 5, &mut o) }, PtkStatus::InvalidArgument);
}

#[test]
fn privacy_parameters() {
    let (mut pure, mut approx, mut has) = (0.0, 0.0, true);
    assert_eq!(unsafe { ptk_laplace_privacy(3, 0.001, 0.0, 100, &mut pure, &mut approx, &mut has) }, PtkStatus::Ok);
    assert!((pure - 0.006).abs() < 1e-15);
    assert!(!has && approx.is_nan());
    assert_eq!(unsafe { ptk_laplace_privacy(4, 0.001, 0.01, 100, &mut pure, &mut approx, &mut has) }, PtkStatus::Ok);
    assert!(has && (approx - 0.0486).abs() < 1e-4);
    let mut eps = 0.0;
    assert_eq!(unsafe { ptk_gumbel_privacy(4, 0.5, 0.01, &mut eps) }, PtkStatus::Ok);
    assert_eq!(eps, 2.0);
    assert_eq!(unsafe { ptk_gumbel_privacy(4, 0.5, 2.0, &mut eps) }, PtkStatus::InvalidArgument);
    let version = unsafe { CStr::from_ptr(ptk_version()) };
    assert_eq!(version.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

/// Compiles `tests/c/smoke.c` against the generated header and the static
/// library produced alongside this test binary.
#[test]
fn c_program_links_against_the_header() {
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let profile_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = profile_dir.join("libprivtopk_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let compiler = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(&compiler)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(crate_dir.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("C compiler available");
    assert!(status.success(), "compiling smoke.c failed");
    let out = Command::new(&exe).output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "smoke failed: {text} {}", String::from_utf8_lossy(&out.stderr));
    assert!(text.contains("ok"));
}
