//! C ABI over `toda-spectra`.
//!
//! Objects are opaque handles created by `ts_*_new` or by a solver and
//! released with the matching `ts_*_free`. Every fallible call returns a
//! [`TsStatus`]; on failure a message is available from
//! [`ts_last_error_message`] on the calling thread until the next call.
//! Panics are caught at the boundary and reported as [`TsStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use toda_spectra::connection::QcCase;
use toda_spectra::floquet::{locate_sigma, FloquetData};
use toda_spectra::qfn::{ModelParams, TruncationOpts};
use toda_spectra::spectrum::{quantization_function, spectrum_list, SearchRegion, SpectrumResult};
use toda_spectra::{Error, C64};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TsStatus {
    Ok = 0,
    NullPointer = 1,
    OutOfRange = 2,
    Domain = 3,
    NearPole = 4,
    NotConverged = 5,
    RootFinding = 6,
    Degenerate = 7,
    ResonantDenominator = 8,
    Oracle = 9,
    Config = 10,
    Panic = 99,
}

impl From<&Error> for TsStatus {
    fn from(e: &Error) -> Self {
        match e.root_cause() {
            Error::Domain(_) | Error::Dimension { .. } => TsStatus::Domain,
            Error::NearPole { .. } | Error::RemovableSingularity { .. } => TsStatus::NearPole,
            Error::NotConverged { .. } | Error::NoConvergence { .. } => TsStatus::NotConverged,
            Error::MissedRoots { .. } | Error::Newton(_) | Error::ZeroSum(_) | Error::MultiplierBlowUp(_) => {
                TsStatus::RootFinding
            }
            Error::DegenerateExponents(..) | Error::DegenerateMonodromy(..) => TsStatus::Degenerate,
            Error::ResonantDenominator(..) => TsStatus::ResonantDenominator,
            Error::Oracle(_) => TsStatus::Oracle,
            Error::Config(_) => TsStatus::Config,
            Error::AtSpectralParameter { .. } => unreachable!("root_cause strips wrappers"),
        }
    }
}

/// Quantization condition selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TsCase {
    Even = 0,
    OddCase1 = 1,
    OddCase2 = 2,
}

impl From<TsCase> for QcCase {
    fn from(c: TsCase) -> Self {
        match c {
            TsCase::Even => QcCase::Even,
            TsCase::OddCase1 => QcCase::OddCase1,
            TsCase::OddCase2 => QcCase::OddCase2,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TsComplex {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for TsComplex {
    fn from(z: C64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

impl From<TsComplex> for C64 {
    fn from(z: TsComplex) -> Self {
        C64::new(z.re, z.im)
    }
}

/// One located root.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TsRoot {
    pub u_n: TsComplex,
    pub qc_abs: f64,
    pub truncation_stability: f64,
    pub refinement_steps: usize,
}

/// Model couplings plus truncation options.
pub struct TsModel {
    params: ModelParams,
    opts: TruncationOpts,
}

/// Floquet exponents and multipliers at one parameter point.
pub struct TsFloquet {
    data: FloquetData,
}

/// Roots located by a spectrum search.
pub struct TsSpectrum {
    result: SpectrumResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (TsStatus, String)>) -> TsStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TsStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_error(format!("panic: {msg}"));
            TsStatus::Panic
        }
    }
}

fn lib(e: Error) -> (TsStatus, String) {
    (TsStatus::from(&e), e.to_string())
}

fn null(what: &str) -> (TsStatus, String) {
    (TsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (TsStatus, String)> {
    // SAFETY: caller passes a handle from this library or null.
    unsafe { p.as_ref() }.ok_or_else(|| null(what))
}

unsafe fn write_out<T>(p: *mut T, v: T, what: &str) -> Result<(), (TsStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    // SAFETY: non-null and, per the caller contract, valid for writes.
    unsafe { p.write(v) };
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ts_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(s) => s,
        Err(_) => panic!("version string"),
    };
    VERSION.as_ptr()
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn ts_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Creates a model. `u` holds `u_2 … u_{N−2}` (`u_len = max(N − 3, 0)`);
/// it may be null when `u_len` is zero.
///
/// # Safety
/// `u` must point to `u_len` doubles; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ts_model_new(
    n: usize,
    hbar: f64,
    lambda: f64,
    u: *const f64,
    u_len: usize,
    u_n: TsComplex,
    out: *mut *mut TsModel,
) -> TsStatus {
    guard(|| {
        let couplings = if u_len == 0 {
            Vec::new()
        } else if u.is_null() {
            return Err(null("u"));
        } else {
            // SAFETY: u points to u_len doubles per the contract.
            unsafe { std::slice::from_raw_parts(u, u_len) }.to_vec()
        };
        let params = ModelParams::new(n, hbar, lambda, couplings, u_n.into()).map_err(lib)?;
        let model = Box::new(TsModel { params, opts: TruncationOpts::default() });
        // SAFETY: checked by write_out.
        unsafe { write_out(out, Box::into_raw(model), "out") }
    })
}

/// Sets the explicit determinant rows used by every later call.
///
/// # Safety
/// `model` must be a live handle from [`ts_model_new`].
#[no_mangle]
pub unsafe extern "C" fn ts_model_set_det_rows(model: *mut TsModel, rows: usize) -> TsStatus {
    guard(|| {
        // SAFETY: live handle per the contract.
        let m = unsafe { model.as_mut() }.ok_or_else(|| null("model"))?;
        let opts = m.opts.with_det_rows(rows);
        opts.validate().map_err(lib)?;
        m.opts = opts;
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle from [`ts_model_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ts_model_free(model: *mut TsModel) {
    if !model.is_null() {
        // SAFETY: the handle came from Box::into_raw.
        drop(unsafe { Box::from_raw(model) });
    }
}

/// Locates the Floquet exponents of `model`.
///
/// # Safety
/// `model` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ts_locate_sigma(model: *const TsModel, out: *mut *mut TsFloquet) -> TsStatus {
    guard(|| {
        // SAFETY: live handle per the contract.
        let m = unsafe { deref(model, "model") }?;
        let data = locate_sigma(&m.params, &m.opts).map_err(lib)?;
        // SAFETY: checked by write_out.
        unsafe { write_out(out, Box::into_raw(Box::new(TsFloquet { data })), "out") }
    })
}

/// Number of exponents (the order `N`); 0 for a null handle.
///
/// # Safety
/// `fd` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ts_floquet_len(fd: *const TsFloquet) -> usize {
    // SAFETY: null or live per the contract.
    unsafe { fd.as_ref() }.map_or(0, |f| f.data.n())
}

/// Exponent `σ_j` and multiplier `ζ_j`, zero-based `j`.
///
/// # Safety
/// `fd` must be a live handle; `sigma` and `zeta` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ts_floquet_get(
    fd: *const TsFloquet,
    j: usize,
    sigma: *mut TsComplex,
    zeta: *mut TsComplex,
) -> TsStatus {
    guard(|| {
        // SAFETY: live handle per the contract.
        let f = unsafe { deref(fd, "floquet") }?;
        if j >= f.data.n() {
            return Err((TsStatus::OutOfRange, format!("index {j} outside 0..{}", f.data.n())));
        }
        // SAFETY: checked by write_out.
        unsafe {
            write_out(sigma, f.data.sigma[j].into(), "sigma")?;
            write_out(zeta, f.data.zeta[j].into(), "zeta")
        }
    })
}

/// # Safety
/// `fd` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ts_floquet_free(fd: *mut TsFloquet) {
    if !fd.is_null() {
        // SAFETY: the handle came from Box::into_raw.
        drop(unsafe { Box::from_raw(fd) });
    }
}

/// Quantization function at `u_n`; the value of `u_N` stored in `model` is
/// ignored.
///
/// # Safety
/// `model` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ts_quantization_function(
    model: *const TsModel,
    u_n: TsComplex,
    case: TsCase,
    out: *mut TsComplex,
) -> TsStatus {
    guard(|| {
        // SAFETY: live handle per the contract.
        let m = unsafe { deref(model, "model") }?;
        let q = quantization_function(&m.params, u_n.into(), case.into(), &m.opts).map_err(lib)?;
        // SAFETY: checked by write_out.
        unsafe { write_out(out, q.into(), "out") }
    })
}

unsafe fn run_spectrum(model: *const TsModel, case: QcCase, region: SearchRegion, out: *mut *mut TsSpectrum) -> TsStatus {
    guard(|| {
        // SAFETY: live handle per the caller contract.
        let m = unsafe { deref(model, "model") }?;
        let result = spectrum_list(&m.params, case, region, &m.opts).map_err(lib)?;
        // SAFETY: checked by write_out.
        unsafe { write_out(out, Box::into_raw(Box::new(TsSpectrum { result })), "out") }
    })
}

/// Bound states for even `N`: real scan of `u_N ∈ [lo, hi]` with `steps`
/// cells, Newton refinement and deduplication.
///
/// # Safety
/// `model` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ts_spectrum_real(
    model: *const TsModel,
    lo: f64,
    hi: f64,
    steps: usize,
    out: *mut *mut TsSpectrum,
) -> TsStatus {
    // SAFETY: forwarded contract.
    unsafe { run_spectrum(model, QcCase::Even, SearchRegion::Real { lo, hi, steps }, out) }
}

/// Resonances for odd `N` on the rectangle `[re_lo, re_hi] × [im_lo, im_hi]`.
///
/// # Safety
/// `model` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ts_spectrum_complex(
    model: *const TsModel,
    case: TsCase,
    re_lo: f64,
    re_hi: f64,
    im_lo: f64,
    im_hi: f64,
    re_steps: usize,
    im_steps: usize,
    out: *mut *mut TsSpectrum,
) -> TsStatus {
    let region = SearchRegion::Complex { re: (re_lo, re_hi), im: (im_lo, im_hi), re_steps, im_steps };
    // SAFETY: forwarded contract.
    unsafe { run_spectrum(model, case.into(), region, out) }
}

/// Number of accepted roots; 0 for a null handle.
///
/// # Safety
/// `s` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ts_spectrum_len(s: *const TsSpectrum) -> usize {
    // SAFETY: null or live per the contract.
    unsafe { s.as_ref() }.map_or(0, |s| s.result.roots.len())
}

/// Accepted root `i`, sorted by real part.
///
/// # Safety
/// `s` must be a live handle; `root` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ts_spectrum_root(s: *const TsSpectrum, i: usize, root: *mut TsRoot) -> TsStatus {
    guard(|| {
        // SAFETY: live handle per the contract.
        let s = unsafe { deref(s, "spectrum") }?;
        let r = s
            .result
            .roots
            .get(i)
            .ok_or_else(|| (TsStatus::OutOfRange, format!("index {i} outside 0..{}", s.result.roots.len())))?;
        let v = TsRoot {
            u_n: r.u_n.into(),
            qc_abs: r.qc_abs,
            truncation_stability: r.truncation_stability,
            refinement_steps: r.refinement_steps,
        };
        // SAFETY: checked by write_out.
        unsafe { write_out(root, v, "root") }
    })
}

/// # Safety
/// `s` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ts_spectrum_free(s: *mut TsSpectrum) {
    if !s.is_null() {
        // SAFETY: the handle came from Box::into_raw.
        drop(unsafe { Box::from_raw(s) });
    }
}
