//! C ABI over the `lossphase` library.
//!
//! Every fallible function returns an [`LpStatus`] and writes its result
//! through an out-pointer. On failure a message for the calling thread can be
//! fetched with [`lp_last_error`]. Optimal solutions live behind the opaque
//! [`LpSolution`] handle, released with [`lp_solution_free`]. Panics never
//! cross the boundary; they surface as `LP_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lossphase::bounds::{self, BoundForm};
use lossphase::eigen::DEFAULT_TOL;
use lossphase::simulator::MonteCarlo;
use lossphase::{optimize, CostSpec, Error, LossModel, OptimalSolution};

/// Result codes shared by every function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Ok = 0,
    /// Argument outside the domain of the quantity.
    Domain = 1,
    /// Structurally invalid input.
    Validation = 2,
    /// An iterative solver did not reach the requested tolerance.
    Convergence = 3,
    Io = 4,
    NullPointer = 5,
    /// The caller's buffer is shorter than the data.
    BufferTooSmall = 6,
    Panic = 7,
}

/// Which asymptotic bound to use.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpBoundForm {
    /// Equal-arm form when the transmissions match, otherwise one-arm.
    Natural = 0,
    EqualArms = 1,
    OneArm = 2,
}

/// Optimal probe and cost for one configuration.
pub struct LpSolution {
    inner: OptimalSolution,
    loss: LossModel,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> LpStatus {
    match e {
        Error::Domain(_) => LpStatus::Domain,
        Error::Validation(_) => LpStatus::Validation,
        Error::Convergence { .. } => LpStatus::Convergence,
        Error::Io(_) => LpStatus::Io,
    }
}

/// Runs `f`, recording any error or panic for [`lp_last_error`].
fn guard(f: impl FnOnce() -> Result<(), (LpStatus, String)>) -> LpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            LpStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("internal panic: {msg}"));
            LpStatus::Panic
        }
    }
}

fn lib<T>(r: lossphase::Result<T>) -> Result<T, (LpStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (LpStatus, String) {
    (LpStatus::NullPointer, format!("{what} is null"))
}

/// Writes `value` through `out`.
///
/// # Safety
/// `out` must be null or valid for a write of `T`.
unsafe fn put<T>(out: *mut T, value: T) -> Result<(), (LpStatus, String)> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

fn form_of(form: LpBoundForm, loss: &LossModel) -> BoundForm {
    match form {
        LpBoundForm::Natural => BoundForm::natural(loss),
        LpBoundForm::EqualArms => BoundForm::EqualArms,
        LpBoundForm::OneArm => BoundForm::OneArm,
    }
}

/// Message for the last failed call on this thread, empty after a success.
/// The pointer stays valid until the next call into the library from the
/// same thread.
#[no_mangle]
pub extern "C" fn lp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Default eigen-residual tolerance.
#[no_mangle]
pub extern "C" fn lp_default_tol() -> f64 {
    DEFAULT_TOL
}

/// Solves for the optimal `n_total`-photon probe under the `4 sin^2` cost.
/// On success `*out` receives a handle owned by the caller.
///
/// # Safety
/// `out` must be valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn lp_optimize(
    n_total: usize,
    eta_a: f64,
    eta_b: f64,
    tol: f64,
    out: *mut *mut LpSolution,
) -> LpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output pointer"));
        }
        out.write(ptr::null_mut());
        let loss = lib(LossModel::new(eta_a, eta_b))?;
        let inner = lib(optimize(n_total, &loss, &CostSpec::sin_squared(), tol))?;
        out.write(Box::into_raw(Box::new(LpSolution { inner, loss })));
        Ok(())
    })
}

/// Releases a handle from [`lp_optimize`]; null is ignored.
///
/// # Safety
/// `solution` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lp_solution_free(solution: *mut LpSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// # Safety
/// `solution` must be null or a live handle.
unsafe fn borrow<'a>(solution: *const LpSolution) -> Result<&'a LpSolution, (LpStatus, String)> {
    solution.as_ref().ok_or_else(|| null("solution"))
}

/// Minimal average cost `2 - lambda_max`.
///
/// # Safety
/// `solution` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn lp_solution_cost(solution: *const LpSolution, out: *mut f64) -> LpStatus {
    guard(|| put(out, borrow(solution)?.inner.avg_cost))
}

/// Largest eigenvalue of the cost matrix.
///
/// # Safety
/// `solution` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn lp_solution_lambda_max(solution: *const LpSolution, out: *mut f64) -> LpStatus {
    guard(|| put(out, borrow(solution)?.inner.lambda_max))
}

/// Eigen residual of the returned pair.
///
/// # Safety
/// `solution` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn lp_solution_residual(solution: *const LpSolution, out: *mut f64) -> LpStatus {
    guard(|| put(out, borrow(solution)?.inner.residual))
}

/// Number of amplitudes, `N + 1`; zero for a null handle.
///
/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lp_solution_len(solution: *const LpSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.inner.state.amplitudes().len())
}

/// Copies the optimal amplitudes into `buf`, which must hold at least
/// [`lp_solution_len`] values.
///
/// # Safety
/// `solution` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn lp_solution_state(solution: *const LpSolution, buf: *mut f64, len: usize) -> LpStatus {
    guard(|| {
        let amps = borrow(solution)?.inner.state.amplitudes();
        if buf.is_null() {
            return Err(null("buffer"));
        }
        if len < amps.len() {
            return Err((
                LpStatus::BufferTooSmall,
                format!("buffer holds {len} values, state has {}", amps.len()),
            ));
        }
        ptr::copy_nonoverlapping(amps.as_ptr(), buf, amps.len());
        Ok(())
    })
}

/// Monte Carlo estimate of the cost of `solution`'s probe under the optimal
/// measurement, at true phase zero.
///
/// # Safety
/// `solution` must be a live handle; `mean` and `std_error` valid for one
/// write each.
#[no_mangle]
pub unsafe extern "C" fn lp_monte_carlo(
    solution: *const LpSolution,
    n_samples: usize,
    seed: u64,
    mean: *mut f64,
    std_error: *mut f64,
) -> LpStatus {
    guard(|| {
        let s = borrow(solution)?;
        if mean.is_null() || std_error.is_null() {
            return Err(null("output pointer"));
        }
        let res = lib(MonteCarlo::new(n_samples, seed).run(&s.inner.state, &s.loss, &CostSpec::sin_squared()))?;
        mean.write(res.mean_cost);
        std_error.write(res.std_error);
        Ok(())
    })
}

/// Finite-`N` lower bound on the cost for weaker-arm transmission `eta`.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn lp_finite_bound(n_total: usize, eta: f64, out: *mut f64) -> LpStatus {
    guard(|| put(out, lib(bounds::finite_n_quantum_bound(n_total, eta))?))
}

/// Leading `1/N` quantum bound.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn lp_asymptotic_bound(
    n_total: usize,
    eta_a: f64,
    eta_b: f64,
    form: LpBoundForm,
    out: *mut f64,
) -> LpStatus {
    guard(|| {
        let loss = lib(LossModel::new(eta_a, eta_b))?;
        put(out, lib(bounds::asymptotic_quantum_bound(n_total, &loss, form_of(form, &loss)))?)
    })
}

/// Asymptotic quantum gain factor; `LP_STATUS_DOMAIN` when lossless.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn lp_gain_factor(eta_a: f64, eta_b: f64, form: LpBoundForm, out: *mut f64) -> LpStatus {
    guard(|| {
        let loss = lib(LossModel::new(eta_a, eta_b))?;
        put(out, lib(bounds::gain_factor_for(&loss, form_of(form, &loss)))?)
    })
}

/// Coherent-state cost at mean photon number `n_mean` and splitting `tau`.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn lp_classical_cost(n_mean: f64, eta_a: f64, eta_b: f64, tau: f64, out: *mut f64) -> LpStatus {
    guard(|| {
        let loss = lib(LossModel::new(eta_a, eta_b))?;
        put(out, lib(bounds::classical_cost(n_mean, &loss, tau))?)
    })
}

/// Asymptotically optimal splitting `1 / (1 + sqrt(eta_a / eta_b))`.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn lp_classical_optimal_tau(eta_a: f64, eta_b: f64, out: *mut f64) -> LpStatus {
    guard(|| {
        let loss = lib(LossModel::new(eta_a, eta_b))?;
        put(out, lib(bounds::classical_optimal_tau(&loss))?)
    })
}

/// Mean of `sqrt(n)` for `n ~ Poisson(x)`.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn lp_bell_half(x: f64, out: *mut f64) -> LpStatus {
    guard(|| put(out, lib(bounds::bell_half(x, bounds::BELL_REL_TOL))?))
}
