//! C interface to the dcone solvers.
//!
//! Every fallible call returns a [`DconeStatus`]; on failure the message is
//! kept per thread and read with [`dcone_last_error`]. Solutions and tables
//! are opaque handles released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dcone_core::elastica::{minimize, Init, Solution, SolverConfig};
use dcone_core::linear_problem::{global_minimizer_search, LinearSolution};
use dcone_core::recovery::{energy_e0, recovery_convergence, RecoveryTable};
use dcone_core::sphere_curve::{DiscreteCurve, ParameterKind};
use dcone_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DconeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Regime = 3,
    Resolution = 4,
    NonConvergence = 5,
    InvalidCurve = 6,
    Numerical = 7,
    Io = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DconeInit {
    OneBump = 0,
    TwoBump = 1,
}

/// The one-fold solution of the linear problem.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DconeLinear {
    pub s_hat: f64,
    pub lambda: f64,
    pub energy: f64,
    pub fold_length: f64,
}

/// Energies behind the one-fold certificate.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DconeCertificate {
    pub one_fold_energy: f64,
    /// Infinity when no two-fold configuration exists.
    pub two_fold_energy: f64,
    pub passed: bool,
}

/// Opaque result of an elastica solve.
pub struct DconeSolution(Solution);

/// Opaque recovery table.
pub struct DconeRecovery(RecoveryTable);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> DconeStatus {
    match e {
        Error::Regime(_) => DconeStatus::Regime,
        Error::Resolution(_) => DconeStatus::Resolution,
        Error::NonConvergence(_) | Error::Bracketing { .. } => DconeStatus::NonConvergence,
        Error::InvalidCurve(_) => DconeStatus::InvalidCurve,
        Error::Consistency(_) => DconeStatus::Numerical,
        Error::Io(_) | Error::Csv(_) | Error::Json(_) => DconeStatus::Io,
        _ => DconeStatus::InvalidArgument,
    }
}

/// Runs `f`, recording errors and panics.
fn guard<F>(f: F) -> DconeStatus
where
    F: FnOnce() -> Result<(), (DconeStatus, String)>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DconeStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("panic inside dcone");
            DconeStatus::Panic
        }
    }
}

fn core(e: Error) -> (DconeStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (DconeStatus, String) {
    (DconeStatus::NullPointer, format!("{what} is null"))
}

/// # Safety
/// `points` must hold `3 * n` readable values.
unsafe fn read_curve(points: *const f64, n: usize) -> Result<DiscreteCurve, (DconeStatus, String)> {
    if points.is_null() {
        return Err(null("points"));
    }
    let flat = std::slice::from_raw_parts(points, 3 * n);
    let pts = flat.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
    DiscreteCurve::new(pts, ParameterKind::Arclength, 2.0 * std::f64::consts::PI).map_err(core)
}

/// Message of the last failed call on this thread; empty if none. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn dcone_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn dcone_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `out` must be null or point to writable memory for one `DconeLinear`.
#[no_mangle]
pub unsafe extern "C" fn dcone_linear_solve(out: *mut DconeLinear) -> DconeStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let s = LinearSolution::solve().map_err(core)?;
        *out = DconeLinear {
            s_hat: s.s_hat,
            lambda: s.lambda,
            energy: s.energy,
            fold_length: s.fold_length(),
        };
        Ok(())
    })
}

/// # Safety
/// `out` must be null or point to writable memory for one `DconeCertificate`.
#[no_mangle]
pub unsafe extern "C" fn dcone_certify(out: *mut DconeCertificate) -> DconeStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let (_, cert) = global_minimizer_search().map_err(core)?;
        *out = DconeCertificate {
            one_fold_energy: cert.one_fold.energy,
            two_fold_energy: cert.best_two_fold.as_ref().map_or(f64::INFINITY, |c| c.energy),
            passed: cert.passed(),
        };
        Ok(())
    })
}

/// Minimizes at obstacle height `epsilon` on `n` nodes with default solver
/// settings. A run that stops without converging still yields a handle; see
/// [`dcone_solution_converged`].
///
/// # Safety
/// `out` must be null or point to writable memory for one pointer.
#[no_mangle]
pub unsafe extern "C" fn dcone_elastica_solve(
    epsilon: f64,
    n: usize,
    init: DconeInit,
    out: *mut *mut DconeSolution,
) -> DconeStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let config = SolverConfig {
            init: Some(match init {
                DconeInit::OneBump => Init::OneBump,
                DconeInit::TwoBump => Init::TwoBump,
            }),
            ..SolverConfig::default()
        };
        let sol = minimize(epsilon, n, &config).map_err(core)?;
        *out = Box::into_raw(Box::new(DconeSolution(sol)));
        Ok(())
    })
}

/// # Safety
/// `sol` must be null or a handle from [`dcone_elastica_solve`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dcone_solution_free(sol: *mut DconeSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// Number of nodes, or 0 for a null handle.
///
/// # Safety
/// `sol` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dcone_solution_len(sol: *const DconeSolution) -> usize {
    sol.as_ref().map_or(0, |s| s.0.curve.len())
}

/// # Safety
/// `sol` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dcone_solution_converged(sol: *const DconeSolution) -> bool {
    sol.as_ref().is_some_and(|s| s.0.report.converged)
}

/// Bending energy of the solution, NaN for a null handle.
///
/// # Safety
/// `sol` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dcone_solution_energy(sol: *const DconeSolution) -> f64 {
    sol.as_ref().map_or(f64::NAN, |s| s.0.report.final_energy)
}

/// # Safety
/// `sol` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dcone_solution_lift_count(sol: *const DconeSolution) -> usize {
    sol.as_ref().map_or(0, |s| s.0.report.lift_intervals.len())
}

/// Copies the heights above the equator into `buf`, which holds `len` values.
///
/// # Safety
/// `sol` must be null or a live handle; `buf` must be null or hold `len`
/// writable values.
#[no_mangle]
pub unsafe extern "C" fn dcone_solution_alpha(
    sol: *const DconeSolution,
    buf: *mut f64,
    len: usize,
) -> DconeStatus {
    guard(|| {
        let s = sol.as_ref().ok_or_else(|| null("solution"))?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let a = &s.0.curve.alpha;
        if len != a.len() {
            return Err((
                DconeStatus::InvalidArgument,
                format!("buffer holds {len} values, solution has {}", a.len()),
            ));
        }
        std::slice::from_raw_parts_mut(buf, len).copy_from_slice(a);
        Ok(())
    })
}

/// Report as JSON. Release the string with [`dcone_string_free`].
///
/// # Safety
/// `sol` must be null or a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn dcone_solution_report_json(
    sol: *const DconeSolution,
    out: *mut *mut c_char,
) -> DconeStatus {
    guard(|| {
        let s = sol.as_ref().ok_or_else(|| null("solution"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let text = s.0.report.to_json().map_err(core)?;
        *out = CString::new(text)
            .map_err(|e| (DconeStatus::Numerical, e.to_string()))?
            .into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dcone_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Limit energy `int |gamma'' + gamma|^2` of a unit-speed closed curve of
/// length `2 pi` given as `n` points `x0 y0 z0 x1 ...` uniform in arclength.
///
/// # Safety
/// `points` must hold `3 * n` values; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn dcone_limit_energy(points: *const f64, n: usize, out: *mut f64) -> DconeStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let c = read_curve(points, n)?;
        *out = energy_e0(&c).map_err(core)?.circle;
        Ok(())
    })
}

/// Recovery energies over the thicknesses `h_list` (decreasing, in `(0, 0.1]`)
/// for a curve given as in [`dcone_limit_energy`].
///
/// # Safety
/// `points` must hold `3 * n` values, `h_list` must hold `m` values and `out`
/// must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn dcone_recovery(
    points: *const f64,
    n: usize,
    h_list: *const f64,
    m: usize,
    out: *mut *mut DconeRecovery,
) -> DconeStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        if h_list.is_null() {
            return Err(null("h_list"));
        }
        let c = read_curve(points, n)?;
        let hs = std::slice::from_raw_parts(h_list, m);
        let t = recovery_convergence(&c, hs).map_err(core)?;
        *out = Box::into_raw(Box::new(DconeRecovery(t)));
        Ok(())
    })
}

/// # Safety
/// `t` must be null or a handle from [`dcone_recovery`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dcone_recovery_free(t: *mut DconeRecovery) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Fitted log-log slope of the energy gap, NaN for a null handle.
///
/// # Safety
/// `t` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dcone_recovery_slope(t: *const DconeRecovery) -> f64 {
    t.as_ref().map_or(f64::NAN, |t| t.0.slope)
}

/// Fitted `a` in `gap = a / |log h|`, NaN for a null handle.
///
/// # Safety
/// `t` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dcone_recovery_coefficient(t: *const DconeRecovery) -> f64 {
    t.as_ref().map_or(f64::NAN, |t| t.0.fitted_a)
}

/// Copies the energy gaps, one per thickness, into `buf` of length `len`.
///
/// # Safety
/// `t` must be null or a live handle; `buf` must be null or hold `len`
/// writable values.
#[no_mangle]
pub unsafe extern "C" fn dcone_recovery_gaps(
    t: *const DconeRecovery,
    buf: *mut f64,
    len: usize,
) -> DconeStatus {
    guard(|| {
        let t = t.as_ref().ok_or_else(|| null("table"))?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        if len != t.0.rows.len() {
            return Err((
                DconeStatus::InvalidArgument,
                format!("buffer holds {len} values, table has {}", t.0.rows.len()),
            ));
        }
        for (dst, r) in std::slice::from_raw_parts_mut(buf, len).iter_mut().zip(&t.0.rows) {
            *dst = r.gap;
        }
        Ok(())
    })
}
