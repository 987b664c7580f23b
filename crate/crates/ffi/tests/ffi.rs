use std::ffi::{CStr, CString};
use std::ptr;

use asymptolab_ffi::*;

fn last_error() -> String {
    let p = asym_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

fn family(spec: &str) -> *mut AsymFamily {
    let s = CString::new(spec).unwrap();
    let mut f = ptr::null_mut();
    assert_eq!(unsafe { asym_family_new(s.as_ptr(), &mut f) }, AsymStatus::Ok);
    assert!(!f.is_null());
    f
}

#[test]
fn geometric_porosity_through_handle() {
    let f = family(r#"{"kind": "geometric", "q": 2.0}"#);
    let mut p = f64::NAN;
    assert_eq!(unsafe { asym_family_porosity(f, &mut p) }, AsymStatus::Ok);
    assert!((p - 0.5).abs() < 1e-3, "{p}");
    assert!(asym_last_error().is_null());
    unsafe { asym_family_free(f) };
}

#[test]
fn classify_returns_json() {
    let f = family(r#"{"kind": "superexp", "c": 1.0}"#);
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { asym_family_classify_json(f, 0, &mut out) }, AsymStatus::Ok);
    let text = unsafe { CStr::from_ptr(out) }.to_str().unwrap().to_owned();
    unsafe {
        asym_string_free(out);
        asym_family_free(f);
    }
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["strongly_porous"]["verdict"], "true");
    assert!(v["flags"].as_array().unwrap().is_empty());
}

#[test]
fn errors_map_to_codes() {
    let mut f = ptr::null_mut();
    let bad = CString::new(r#"{"kind": "geometric", "q": 0.5}"#).unwrap();
    assert_eq!(unsafe { asym_family_new(bad.as_ptr(), &mut f) }, AsymStatus::Parse);
    assert!(f.is_null());
    assert!(last_error().contains("q"), "{}", last_error());

    let junk = CString::new("{not json").unwrap();
    assert_eq!(unsafe { asym_family_new(junk.as_ptr(), &mut f) }, AsymStatus::Parse);
    assert_eq!(unsafe { asym_family_new(ptr::null(), &mut f) }, AsymStatus::InvalidArgument);
    let ok = CString::new(r#"{"kind": "integers"}"#).unwrap();
    assert_eq!(unsafe { asym_family_new(ok.as_ptr(), ptr::null_mut()) }, AsymStatus::InvalidArgument);
    assert_eq!(unsafe { asym_family_porosity(ptr::null(), ptr::null_mut()) }, AsymStatus::InvalidArgument);

    let cfg = CString::new(
        r#"{"command": "porosity", "rule": {"kind": "lattice_norms", "dim": 2}, "overrides": {"horizon_log2_max": 60}}"#,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let d = CString::new(dir.path().to_str().unwrap()).unwrap();
    assert_eq!(unsafe { asym_run(cfg.as_ptr(), d.as_ptr()) }, AsymStatus::Resource);
}

#[test]
fn free_functions_accept_null() {
    unsafe {
        asym_family_free(ptr::null_mut());
        asym_string_free(ptr::null_mut());
    }
}

#[test]
fn run_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let d = CString::new(dir.path().to_str().unwrap()).unwrap();
    let cfg = CString::new(r#"{"command": "graph", "family": {"kind": "integers"}, "grid": [[-2], [-1], [1], [2]]}"#)
        .unwrap();
    assert_eq!(unsafe { asym_run(cfg.as_ptr(), d.as_ptr()) }, AsymStatus::Ok);
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("graph.json")).unwrap()).unwrap();
    assert_eq!(v["result"]["edges"].as_array().unwrap().len(), 10);
    assert_eq!(v["result"]["cliques"].as_array().unwrap().len(), 1);
}

#[test]
fn header_declares_every_export() {
    let h = include_str!("../include/asymptolab.h");
    for name in [
        "asym_last_error",
        "asym_string_free",
        "asym_family_new",
        "asym_family_free",
        "asym_family_porosity",
        "asym_family_classify_json",
        "asym_verify_json",
        "asym_run",
        "ASYM_STATUS_RESOURCE = 3",
        "typedef struct AsymFamily AsymFamily",
    ] {
        assert!(h.contains(name), "{name}");
    }
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = which_cc() else { return };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("t.c");
    std::fs::write(
        &src,
        "#include \"asymptolab.h\"\nint main(void) { AsymFamily *f = 0; (void)f; return ASYM_STATUS_OK; }\n",
    )
    .unwrap();
    let inc = concat!(env!("CARGO_MANIFEST_DIR"), "/include");
    let st = std::process::Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I", inc])
        .arg(&src)
        .status()
        .unwrap();
    assert!(st.success());
}

fn which_cc() -> Result<&'static str, ()> {
    for cc in ["cc", "gcc", "clang"] {
        if std::process::Command::new(cc).arg("--version").output().is_ok_and(|o| o.status.success()) {
            return Ok(cc);
        }
    }
    Err(())
}
