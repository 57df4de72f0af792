//! C ABI over the dark-pairing engine.
//!
//! Every object crosses the boundary as an opaque pointer created by a
//! constructor such as `dp_lattice_from_json` and released by the matching
//! `dp_*_free`.
//! Fallible calls return a [`DpStatus`] and write results through out
//! pointers; the message of the most recent failure on the calling thread is
//! available from [`dp_last_error`]. Strings handed out by the library must
//! be released with [`dp_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dark_pairing::cli::exit_code;
use dark_pairing::config::RunConfig;
use dark_pairing::exact::{self, ratio};
use dark_pairing::model::PairingModel;
use dark_pairing::operator::apply;
use dark_pairing::states::nc_state;
use dark_pairing::verify::{run_battery, VerificationReport};
use dark_pairing::{Error, ModeTable, Rational, StateVector};

/// Status codes. The first seven match the command-line exit codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DpStatus {
    Ok = 0,
    CheckFailed = 1,
    Config = 2,
    Cap = 3,
    Io = 4,
    NoConvergence = 5,
    Other = 6,
    NullPointer = 7,
    InvalidUtf8 = 8,
    Panic = 9,
}

/// A lattice, its mode table and the run configuration it came from.
pub struct DpLattice {
    config: RunConfig,
    table: ModeTable,
    model: PairingModel,
}

/// A state vector with exact rational amplitudes.
pub struct DpState {
    state: StateVector<Rational>,
}

/// Result of the verification battery.
pub struct DpReport {
    report: VerificationReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> DpStatus {
    match exit_code(e) {
        2 => DpStatus::Config,
        3 => DpStatus::Cap,
        4 => DpStatus::Io,
        5 => DpStatus::NoConvergence,
        _ => DpStatus::Other,
    }
}

/// Runs `f`, translating errors and panics into a status.
fn guard<F: FnOnce() -> Result<(), DpStatus>>(f: F) -> DpStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DpStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => {
            set_error("internal panic");
            DpStatus::Panic
        }
    }
}

fn fail(e: Error) -> DpStatus {
    set_error(e.to_string());
    status_of(&e)
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, DpStatus> {
    p.as_ref().ok_or_else(|| {
        set_error(format!("{what} is null"));
        DpStatus::NullPointer
    })
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, DpStatus> {
    if p.is_null() {
        set_error(format!("{what} is null"));
        return Err(DpStatus::NullPointer);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{what} is not valid UTF-8"));
        DpStatus::InvalidUtf8
    })
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), DpStatus> {
    if out.is_null() {
        set_error("output pointer is null");
        return Err(DpStatus::NullPointer);
    }
    out.write(value);
    Ok(())
}

fn into_c_string(s: String) -> Result<*mut c_char, DpStatus> {
    CString::new(s).map(CString::into_raw).map_err(|_| {
        set_error("string contains an interior NUL");
        DpStatus::Other
    })
}

fn coupling(num: i64, den: i64) -> Result<Rational, DpStatus> {
    if den == 0 {
        set_error("coupling denominator is zero");
        return Err(DpStatus::Config);
    }
    Ok(ratio(num, den))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL.
/// The pointer stays valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn dp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `s` must be NULL or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a lattice from a run-configuration JSON document.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dp_lattice_from_json(json: *const c_char, out: *mut *mut DpLattice) -> DpStatus {
    guard(|| {
        let text = read_str(json, "json")?;
        let config = RunConfig::from_json(text).map_err(fail)?;
        let table = ModeTable::build(&config.lattice).map_err(fail)?;
        let ff = config.formfactor.resolve().map_err(fail)?;
        let model = PairingModel::new(table.clone(), &ff, config.formfactor_mode).map_err(fail)?;
        write_out(out, Box::into_raw(Box::new(DpLattice { config, table, model })))
    })
}

/// # Safety
/// `lattice` must be NULL or a handle from [`dp_lattice_from_json`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dp_lattice_free(lattice: *mut DpLattice) {
    if !lattice.is_null() {
        drop(Box::from_raw(lattice));
    }
}

/// Number of modes in the Fock space, 0 for NULL.
///
/// # Safety
/// `lattice` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dp_lattice_mode_count(lattice: *const DpLattice) -> usize {
    lattice.as_ref().map_or(0, |l| l.table.len())
}

/// Particle number of the pair state, frozen core included.
///
/// # Safety
/// `lattice` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dp_lattice_nc_particles(lattice: *const DpLattice) -> usize {
    lattice.as_ref().map_or(0, |l| l.table.nc_particles_total())
}

/// Free energy of the pair state, frozen core included.
///
/// # Safety
/// `lattice` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dp_lattice_nc_energy(lattice: *const DpLattice, out: *mut f64) -> DpStatus {
    guard(|| {
        let l = as_ref(lattice, "lattice")?;
        write_out(out, exact::to_f64(&l.table.nc_energy_total()))
    })
}

/// Mode table as a JSON array; free with [`dp_string_free`].
///
/// # Safety
/// `lattice` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dp_lattice_modes_json(lattice: *const DpLattice, out: *mut *mut c_char) -> DpStatus {
    guard(|| {
        let l = as_ref(lattice, "lattice")?;
        write_out(out, into_c_string(l.table.to_json().to_string())?)
    })
}

/// Builds the pair state on the lattice.
///
/// # Safety
/// `lattice` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dp_nc_state(lattice: *const DpLattice, out: *mut *mut DpState) -> DpStatus {
    guard(|| {
        let l = as_ref(lattice, "lattice")?;
        let state = nc_state::<Rational>(&l.table).map_err(fail)?;
        write_out(out, Box::into_raw(Box::new(DpState { state })))
    })
}

/// # Safety
/// `state` must be NULL or a handle from [`dp_nc_state`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dp_state_free(state: *mut DpState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Number of basis states with nonzero amplitude, 0 for NULL.
///
/// # Safety
/// `state` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dp_state_term_count(state: *const DpState) -> usize {
    state.as_ref().map_or(0, |s| s.state.len())
}

/// Euclidean norm, 0 for NULL.
///
/// # Safety
/// `state` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dp_state_norm(state: *const DpState) -> f64 {
    state.as_ref().map_or(0.0, |s| s.state.norm())
}

/// One JSON line per basis state; free with [`dp_string_free`].
///
/// # Safety
/// `state` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dp_state_to_jsonl(state: *const DpState, out: *mut *mut c_char) -> DpStatus {
    guard(|| {
        let s = as_ref(state, "state")?;
        write_out(out, into_c_string(s.state.to_complex().to_jsonl())?)
    })
}

/// `|W|NC>| / (|W|_1 |NC|)` at coupling `g_num / g_den`, evaluated exactly
/// and converted at the end.
///
/// # Safety
/// `lattice` and `state` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dp_interaction_residual(
    lattice: *const DpLattice,
    state: *const DpState,
    g_num: i64,
    g_den: i64,
    out: *mut f64,
) -> DpStatus {
    guard(|| {
        let l = as_ref(lattice, "lattice")?;
        let s = as_ref(state, "state")?;
        let w = l.model.interaction(&coupling(g_num, g_den)?);
        let image = apply(&w, &s.state).map_err(fail)?;
        let r = if image.is_empty() { 0.0 } else { image.norm() / (w.l1_norm_f64() * s.state.norm()) };
        write_out(out, r)
    })
}

/// Runs the identity battery with the lattice's configuration.
/// Returns `DP_STATUS_CHECK_FAILED` with a valid report when a check fails.
///
/// # Safety
/// `lattice` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dp_verify(lattice: *const DpLattice, out: *mut *mut DpReport) -> DpStatus {
    guard(|| {
        let l = as_ref(lattice, "lattice")?;
        let opts = l.config.battery_options().map_err(fail)?;
        let report = run_battery(&l.config.lattice, &opts).map_err(fail)?;
        let passed = report.passed;
        write_out(out, Box::into_raw(Box::new(DpReport { report })))?;
        if passed {
            Ok(())
        } else {
            set_error("verification battery reported a failed check");
            Err(DpStatus::CheckFailed)
        }
    })
}

/// # Safety
/// `report` must be NULL or a handle from [`dp_verify`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dp_report_free(report: *mut DpReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// 1 when every check passed, 0 otherwise or for NULL.
///
/// # Safety
/// `report` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dp_report_passed(report: *const DpReport) -> i32 {
    report.as_ref().map_or(0, |r| i32::from(r.report.passed))
}

/// Number of checks in the report, 0 for NULL.
///
/// # Safety
/// `report` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dp_report_check_count(report: *const DpReport) -> usize {
    report.as_ref().map_or(0, |r| r.report.checks.len())
}

/// The report as JSON; free with [`dp_string_free`].
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dp_report_to_json(report: *const DpReport, out: *mut *mut c_char) -> DpStatus {
    guard(|| {
        let r = as_ref(report, "report")?;
        write_out(out, into_c_string(r.report.to_json())?)
    })
}
