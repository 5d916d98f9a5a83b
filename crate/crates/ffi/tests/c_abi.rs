use std::ffi::CStr;
use std::path::Path;
use std::process::Command;
use std::ptr;

use toda_spectra_ffi::*;

fn model(n: usize, u: &[f64], u_n: TsComplex) -> *mut TsModel {
    let mut out = ptr::null_mut();
    let st = unsafe { ts_model_new(n, 1.0, 1.0, u.as_ptr(), u.len(), u_n, &mut out) };
    assert_eq!(st, TsStatus::Ok);
    assert!(!out.is_null());
    out
}

fn last_error() -> String {
    let p = ts_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn version_matches_the_core_crate() {
    let v = unsafe { CStr::from_ptr(ts_version()) }.to_str().unwrap();
    assert_eq!(v, toda_spectra::VERSION);
}

#[test]
fn invalid_order_reports_domain_error() {
    let mut out = ptr::null_mut();
    let st = unsafe { ts_model_new(1, 1.0, 1.0, ptr::null(), 0, TsComplex::default(), &mut out) };
    assert_eq!(st, TsStatus::Domain);
    assert!(out.is_null());
    assert!(last_error().contains("N must be >= 2"));
}

#[test]
fn null_arguments_are_rejected() {
    let st = unsafe { ts_locate_sigma(ptr::null(), ptr::null_mut()) };
    assert_eq!(st, TsStatus::NullPointer);
    let m = model(2, &[], TsComplex { re: -1.0, im: 0.0 });
    let st = unsafe { ts_locate_sigma(m, ptr::null_mut()) };
    assert_eq!(st, TsStatus::NullPointer);
    let mut out = ptr::null_mut();
    let st = unsafe { ts_model_new(4, 1.0, 1.0, ptr::null(), 1, TsComplex::default(), &mut out) };
    assert_eq!(st, TsStatus::NullPointer);
    unsafe { ts_model_free(m) };
    // freeing null is a no-op
    unsafe { ts_model_free(ptr::null_mut()) };
    unsafe { ts_floquet_free(ptr::null_mut()) };
    unsafe { ts_spectrum_free(ptr::null_mut()) };
}

#[test]
fn floquet_data_round_trip() {
    let m = model(2, &[], TsComplex { re: -1.0, im: 0.0 });
    assert_eq!(unsafe { ts_model_set_det_rows(m, 64) }, TsStatus::Ok);
    assert_eq!(unsafe { ts_model_set_det_rows(m, 2) }, TsStatus::Domain);
    let mut fd = ptr::null_mut();
    assert_eq!(unsafe { ts_locate_sigma(m, &mut fd) }, TsStatus::Ok);
    assert_eq!(unsafe { ts_floquet_len(fd) }, 2);
    let (mut s, mut z) = (TsComplex::default(), TsComplex::default());
    let mut total = 0.0;
    for j in 0..2 {
        assert_eq!(unsafe { ts_floquet_get(fd, j, &mut s, &mut z) }, TsStatus::Ok);
        total += s.im;
        assert!(z.re.is_finite() && z.im.is_finite());
    }
    assert!(total.abs() < 1e-12);
    assert_eq!(unsafe { ts_floquet_get(fd, 2, &mut s, &mut z) }, TsStatus::OutOfRange);
    unsafe {
        ts_floquet_free(fd);
        ts_model_free(m);
    }
}

#[test]
fn n2_ground_state_through_the_abi() {
    let m = model(2, &[], TsComplex::default());
    let mut sp = ptr::null_mut();
    assert_eq!(unsafe { ts_spectrum_real(m, -4.0, -2.0, 20, &mut sp) }, TsStatus::Ok);
    assert_eq!(unsafe { ts_spectrum_len(sp) }, 1);
    let mut r = TsRoot::default();
    assert_eq!(unsafe { ts_spectrum_root(sp, 0, &mut r) }, TsStatus::Ok);
    let e0 = toda_spectra::oracle::schrodinger_eigen_n2(1.0, 1.0, 1, &Default::default()).unwrap()[0];
    assert!((r.u_n.re + e0).abs() < 1e-6, "{} vs {}", r.u_n.re, -e0);
    assert!(r.u_n.im.abs() < 1e-8);

    let mut q = TsComplex::default();
    assert_eq!(unsafe { ts_quantization_function(m, r.u_n, TsCase::Even, &mut q) }, TsStatus::Ok);
    assert!(q.re.hypot(q.im) <= r.qc_abs * 10.0 + 1e-18);
    // wrong parity
    assert_eq!(unsafe { ts_quantization_function(m, r.u_n, TsCase::OddCase1, &mut q) }, TsStatus::Domain);
    unsafe {
        ts_spectrum_free(sp);
        ts_model_free(m);
    }
}

#[test]
fn header_is_valid_c() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = dir.join("include/toda_spectra.h");
    let text = std::fs::read_to_string(&header).expect("header generated by build.rs");
    for f in ["ts_model_new", "ts_locate_sigma", "ts_spectrum_root", "ts_last_error_message", "TS_STATUS_OK"] {
        assert!(text.contains(f), "{f} missing from header");
    }
    let probe = std::env::temp_dir().join("toda_spectra_header_probe.c");
    std::fs::write(&probe, "#include \"toda_spectra.h\"\nint main(void) { return ts_version() == 0; }\n").unwrap();
    match Command::new("cc").arg("-fsyntax-only").arg("-Wall").arg("-Werror").arg("-I").arg(dir.join("include")).arg(&probe).output() {
        Ok(out) => assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr)),
        Err(_) => eprintln!("no C compiler on PATH; syntax check skipped"),
    }
}
