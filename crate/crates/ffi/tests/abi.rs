use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use ribounds_ffi::*;

fn table(pearson: [f64; 4]) -> *mut RbTable {
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { rb_table_from_pearson(pearson.as_ptr(), &mut t) }, RbStatus::Ok);
    assert!(!t.is_null());
    t
}

fn last_error() -> String {
    let p = rb_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn classify_through_the_abi() {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let t = table([s, s, s, -s]);
    let mut v = RbVerdict { local: 9, quantum_compatible: false, ri_feasible: false, witness_r: 0.0, epsilon: 1.0, chsh: 0.0 };
    assert_eq!(unsafe { rb_classify(t, 1e-9, &mut v) }, RbStatus::Ok);
    assert_eq!(v.local, 0);
    assert!(v.quantum_compatible && v.ri_feasible);
    assert!(v.witness_r.abs() < 1e-12);
    assert!((v.chsh - 2.0 * std::f64::consts::SQRT_2).abs() < 1e-12);
    let mut tlm = RbTlm { pass: false, lhs: [0.0; 2], rhs: [0.0; 2] };
    assert_eq!(unsafe { rb_tlm_check(t, 1e-9, &mut tlm) }, RbStatus::Ok);
    assert!(tlm.pass && (tlm.lhs[0] - 1.0).abs() < 1e-12);
    let mut rho = [0.0; 4];
    assert_eq!(unsafe { rb_table_pearson(t, rho.as_mut_ptr()) }, RbStatus::Ok);
    assert_eq!(rho, [s, s, s, -s]);
    unsafe { rb_table_free(t) };
}

#[test]
fn pr_box_gap() {
    let t = table([1.0, 1.0, 1.0, -1.0]);
    let mut e = 0.0;
    assert_eq!(unsafe { rb_epsilon(t, 1e-9, &mut e) }, RbStatus::Ok);
    assert_eq!(e, 2.0);
    let mut v = RbVerdict { local: 9, quantum_compatible: true, ri_feasible: true, witness_r: 0.0, epsilon: 0.0, chsh: 0.0 };
    assert_eq!(unsafe { rb_classify(t, 1e-9, &mut v) }, RbStatus::Ok);
    assert!(!v.ri_feasible && !v.quantum_compatible && v.witness_r.is_nan());
    unsafe { rb_table_free(t) };
}

#[test]
fn moments_with_pm1_signature_are_classified_locally() {
    let (zero, one) = ([0.0; 2], [1.0; 2]);
    let cov = [0.5, 0.5, 0.5, -0.5];
    let mut t = ptr::null_mut();
    let status = unsafe { rb_table_from_moments(zero.as_ptr(), zero.as_ptr(), one.as_ptr(), one.as_ptr(), cov.as_ptr(), &mut t) };
    assert_eq!(status, RbStatus::Ok);
    let mut v = RbVerdict { local: 9, quantum_compatible: false, ri_feasible: false, witness_r: 0.0, epsilon: 0.0, chsh: 0.0 };
    assert_eq!(unsafe { rb_classify(t, 1e-9, &mut v) }, RbStatus::Ok);
    assert_eq!(v.local, 1);
    unsafe { rb_table_free(t) };
}

#[test]
fn error_codes_and_messages() {
    let mut t = ptr::null_mut();
    let bad = [0.0, 0.0, 0.0, 2.0];
    assert_eq!(unsafe { rb_table_from_pearson(bad.as_ptr(), &mut t) }, RbStatus::Malformed);
    assert!(t.is_null());
    assert!(last_error().contains("outside"));

    assert_eq!(unsafe { rb_table_from_pearson(ptr::null(), &mut t) }, RbStatus::NullPointer);
    assert!(last_error().contains("pearson"));

    let mut e = 0.0;
    assert_eq!(unsafe { rb_epsilon(ptr::null(), 1e-9, &mut e) }, RbStatus::NullPointer);

    // Zero variance leaves the Pearson coefficients undefined.
    let (zero, one) = ([0.0; 2], [1.0; 2]);
    let cov = [0.0; 4];
    assert_eq!(
        unsafe { rb_table_from_moments(zero.as_ptr(), zero.as_ptr(), zero.as_ptr(), one.as_ptr(), cov.as_ptr(), &mut t) },
        RbStatus::Ok
    );
    let mut rho = [0.0; 4];
    assert_eq!(unsafe { rb_table_pearson(t, rho.as_mut_ptr()) }, RbStatus::Degenerate);
    unsafe { rb_table_free(t) };

    let junk = CString::new("{\"dims\": [2]}").unwrap();
    let mut sc = ptr::null_mut();
    assert_eq!(unsafe { rb_scenario_from_json(junk.as_ptr(), &mut sc) }, RbStatus::Malformed);

    let mut best = 0.0;
    let mut short = [0.0; 3];
    assert_eq!(
        unsafe { rb_optimize_chsh(1, 10, 0, &mut best, short.as_mut_ptr(), short.len()) },
        RbStatus::BufferTooSmall
    );
    assert_eq!(unsafe { rb_optimize_chsh(0, 10, 0, &mut best, ptr::null_mut(), 0) }, RbStatus::Malformed);
}

#[test]
fn errors_are_per_thread() {
    let bad = [0.0, 0.0, 0.0, 2.0];
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { rb_table_from_pearson(bad.as_ptr(), &mut t) }, RbStatus::Malformed);
    let other = std::thread::spawn(|| rb_last_error().is_null()).join().unwrap();
    assert!(other);
}

#[test]
fn scenario_round_trip() {
    let json = serde_json::to_string(&ribounds::qmodel::sampling::maximal_eta_scenario()).unwrap();
    let json = CString::new(json).unwrap();
    let mut sc = ptr::null_mut();
    assert_eq!(unsafe { rb_scenario_from_json(json.as_ptr(), &mut sc) }, RbStatus::Ok);
    let (mut ea, mut eb) = (0.0, 0.0);
    assert_eq!(unsafe { rb_scenario_eta(sc, &mut ea, &mut eb) }, RbStatus::Ok);
    assert!((ea.abs() - 1.0).abs() < 1e-12 && (eb.abs() - 1.0).abs() < 1e-12);
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { rb_scenario_table(sc, &mut t) }, RbStatus::Ok);
    let mut rho = [0.0; 4];
    assert_eq!(unsafe { rb_table_pearson(t, rho.as_mut_ptr()) }, RbStatus::Ok);
    assert!(rho.iter().all(|x| x.abs() < 1e-12));
    unsafe { rb_table_free(t) };
    unsafe { rb_scenario_free(sc) };
}

#[test]
fn optimizer_reaches_tsirelson() {
    let mut best = 0.0;
    let mut params = [0.0; RB_QUBIT_PARAMS];
    let status = unsafe { rb_optimize_chsh(4, 3000, 3, &mut best, params.as_mut_ptr(), params.len()) };
    assert_eq!(status, RbStatus::Ok);
    assert!(best >= 2.0 * std::f64::consts::SQRT_2 - 1e-6);
    assert!(params.iter().any(|&x| x != 0.0));
    let version = unsafe { CStr::from_ptr(rb_version()) }.to_str().unwrap();
    assert_eq!(version, env!("CARGO_PKG_VERSION"));
}

fn target_dir() -> PathBuf {
    // tests run from target/<profile>/deps
    std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links_from_c() {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let lib = target_dir().join("libribounds_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let compiled = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Wextra", "-Werror", "-I"])
        .arg(manifest.join("include"))
        .arg(manifest.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .status();
    let Ok(status) = compiled else {
        eprintln!("no C compiler on PATH; skipping");
        return;
    };
    assert!(status.success(), "C smoke test failed to build");
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "smoke exited with {:?}", run.status.code());
    assert_eq!(String::from_utf8(run.stdout).unwrap().trim(), env!("CARGO_PKG_VERSION"));
}
