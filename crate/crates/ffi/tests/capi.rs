use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use qbench_ffi::*;

fn last_error() -> String {
    let p = qb_last_error();
    assert!(!p.is_null());
    let s = unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned();
    unsafe { qb_string_free(p) };
    s
}

fn config(json: &str) -> *mut QbConfig {
    let text = CString::new(json).unwrap();
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { qb_config_from_json(text.as_ptr(), &mut c) }, QbStatus::Ok);
    c
}

fn files(run: *const QbRun) -> Vec<(String, Vec<u8>)> {
    let mut n = 0;
    assert_eq!(unsafe { qb_run_file_count(run, &mut n) }, QbStatus::Ok);
    (0..n)
        .map(|i| {
            let (mut name, mut data, mut len) = (ptr::null(), ptr::null(), 0);
            assert_eq!(unsafe { qb_run_file(run, i, &mut name, &mut data, &mut len) }, QbStatus::Ok);
            let name = unsafe { CStr::from_ptr(name) }.to_str().unwrap().to_string();
            (name, unsafe { std::slice::from_raw_parts(data, len) }.to_vec())
        })
        .collect()
}

#[test]
fn eraser_run_round_trip() {
    let c = config(r#"{"scenario":"eraser","right":"whichpath","formats":["json"]}"#);
    let mut run = ptr::null_mut();
    assert_eq!(unsafe { qb_run(c, 2, &mut run) }, QbStatus::Ok);
    let out = files(run);
    let joint = &out.iter().find(|(n, _)| n == "joint.json").unwrap().1;
    let v: serde_json::Value = serde_json::from_slice(joint).unwrap();
    for e in v["copenhagen"].as_array().unwrap() {
        assert_eq!(e["exact"], "1/4");
    }
    let mut ok = 0;
    assert_eq!(unsafe { qb_run_claims_ok(run, &mut ok) }, QbStatus::Ok);
    assert_eq!(ok, 1);
    let dir = tempfile::tempdir().unwrap();
    let d = CString::new(dir.path().to_str().unwrap()).unwrap();
    assert_eq!(unsafe { qb_run_write(run, d.as_ptr()) }, QbStatus::Ok);
    assert!(dir.path().join("manifest.json").exists());
    let mut n = 0;
    unsafe { qb_run_file_count(run, &mut n) };
    let (mut name, mut data, mut len) = (ptr::null(), ptr::null(), 0);
    assert_eq!(unsafe { qb_run_file(run, n, &mut name, &mut data, &mut len) }, QbStatus::OutOfRange);
    unsafe {
        qb_run_free(run);
        qb_config_free(c);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    let bad = CString::new("{\"scenario\": \"eraser\", \"sed\": 1}").unwrap();
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { qb_config_from_json(bad.as_ptr(), &mut c) }, QbStatus::Config);
    assert!(c.is_null());
    assert!(last_error().contains("sed"));
    assert_eq!(unsafe { qb_config_from_json(ptr::null(), &mut c) }, QbStatus::NullPointer);
    let mut run = ptr::null_mut();
    assert_eq!(unsafe { qb_run(ptr::null(), 1, &mut run) }, QbStatus::NullPointer);
    let mut s = ptr::null_mut();
    let name = CString::new("nope").unwrap();
    assert_eq!(unsafe { qb_schema(name.as_ptr(), &mut s) }, QbStatus::Config);
    let name = CString::new("reports").unwrap();
    assert_eq!(unsafe { qb_schema(name.as_ptr(), &mut s) }, QbStatus::Ok);
    assert!(qb_last_error().is_null());
    unsafe { qb_string_free(s) };
}

#[test]
fn chsh_at_a_tsirelson_point() {
    use std::f64::consts::PI;
    let mut s = 0.0;
    assert_eq!(unsafe { qb_chsh_value(PI / 4.0, PI / 2.0, 3.0 * PI / 8.0, PI / 8.0, &mut s) }, QbStatus::Ok);
    assert!((s - 2.0 * 2f64.sqrt()).abs() < 1e-12, "{s}");
}

#[test]
fn header_is_valid_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/qbench.h");
    let text = std::fs::read_to_string(header).unwrap();
    for sym in ["qb_run", "qb_config_from_json", "QB_STATUS_OK", "typedef struct QbRun QbRun"] {
        assert!(text.contains(sym), "{sym} missing from header");
    }
    let Ok(status) = Command::new("cc").args(["-fsyntax-only", "-x", "c", header]).status() else {
        eprintln!("no C compiler available; skipping syntax check");
        return;
    };
    assert!(status.success());
}
