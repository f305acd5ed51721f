//! C ABI over the blow-up laboratory.
//!
//! Conventions:
//! * every fallible call returns a [`BlStatus`] code and writes results
//!   through out-pointers;
//! * parameter sets are opaque handles created by `bl_params_*` and
//!   released with [`bl_params_free`];
//! * all arrays are caller-allocated.

use blowup_lab::abel::{abel_solve, half_integral, InterpKind, TimeSeries};
use blowup_lab::ansatz::{matching_report, mu0, Ansatz, ModulationPath};
use blowup_lab::grid::RadialGrid;
use blowup_lab::params::BlowupParams;
use blowup_lab::profiles;
use blowup_lab::Error;
use std::cell::RefCell;
use std::ffi::{c_char, c_double, c_int, c_uint, CStr};

/// Status codes of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlStatus {
    Ok = 0,
    InvalidArgument = 1,
    DomainError = 2,
    NumericalError = 3,
    ConstraintViolation = 4,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &Error) -> BlStatus {
    match err {
        Error::Domain(_) => BlStatus::DomainError,
        Error::InvalidInput(_) | Error::Config(_) => BlStatus::InvalidArgument,
        Error::Numerical(_) | Error::Io(_) => BlStatus::NumericalError,
        Error::Constraint(_) => BlStatus::ConstraintViolation,
    }
}

fn fail(err: Error) -> BlStatus {
    let st = status_of(&err);
    set_error(err.to_string());
    st
}

/// Opaque parameter set (`k`, `A`, `T`, cutoffs, and the norm exponents).
pub struct BlParams {
    inner: BlowupParams,
}

/// Version string of the library; the pointer stays valid for the process
/// lifetime.
#[no_mangle]
pub extern "C" fn bl_version() -> *const c_char {
    static VERSION: &CStr = c"blowup-lab 0.1.0";
    VERSION.as_ptr()
}

/// Copy the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `cap`). Returns the untruncated length.
///
/// # Safety
/// `buf` must point to `cap` writable bytes (or be NULL with `cap = 0`).
#[no_mangle]
pub unsafe extern "C" fn bl_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            unsafe {
                std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, n);
                *buf.add(n) = 0;
            }
        }
        bytes.len()
    })
}

/// Default parameter set (`k = 2` tuple passing every admissibility
/// inequality). Returns an owned handle; release with [`bl_params_free`].
#[no_mangle]
pub extern "C" fn bl_params_default() -> *mut BlParams {
    Box::into_raw(Box::new(BlParams {
        inner: BlowupParams::default(),
    }))
}

/// Parameter set with the given `k`, `A`, `T` on top of the default
/// exponent tuple. Writes NULL and returns an error code when the set is
/// inadmissible and `waive_constraints` is 0.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bl_params_new(
    k: c_uint,
    big_a: c_double,
    t_end: c_double,
    waive_constraints: c_int,
    out: *mut *mut BlParams,
) -> BlStatus {
    if out.is_null() {
        set_error("out pointer is NULL");
        return BlStatus::InvalidArgument;
    }
    unsafe { *out = std::ptr::null_mut() };
    let p = BlowupParams {
        k,
        big_a,
        t_end,
        ..BlowupParams::default()
    };
    match p.validated(waive_constraints != 0) {
        Ok(valid) => {
            unsafe { *out = Box::into_raw(Box::new(BlParams { inner: valid })) };
            BlStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Replace the norm-exponent tuple `(β, ν, σ, a, a₂, ν₂)` and re-validate.
///
/// # Safety
/// `params` must be a live handle from `bl_params_*`.
#[no_mangle]
pub unsafe extern "C" fn bl_params_set_exponents(
    params: *mut BlParams,
    beta: c_double,
    nu: c_double,
    sigma: c_double,
    a: c_double,
    a2: c_double,
    nu2: c_double,
    waive_constraints: c_int,
) -> BlStatus {
    let Some(h) = (unsafe { params.as_mut() }) else {
        set_error("params handle is NULL");
        return BlStatus::InvalidArgument;
    };
    let candidate = BlowupParams {
        beta,
        nu,
        sigma,
        a,
        a2,
        nu2,
        ..h.inner.clone()
    };
    match candidate.validated(waive_constraints != 0) {
        Ok(valid) => {
            h.inner = valid;
            BlStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Number of violated admissibility inequalities (0 for an admissible set).
///
/// # Safety
/// `params` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn bl_params_violations(params: *const BlParams) -> c_int {
    match unsafe { params.as_ref() } {
        Some(h) => h
            .inner
            .check_constraints()
            .iter()
            .filter(|c| !c.satisfied)
            .count() as c_int,
        None => -1,
    }
}

/// Release a parameter handle.
///
/// # Safety
/// `params` must come from `bl_params_*` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bl_params_free(params: *mut BlParams) {
    if !params.is_null() {
        drop(unsafe { Box::from_raw(params) });
    }
}

macro_rules! write_out {
    ($ptr:expr, $val:expr) => {{
        if $ptr.is_null() {
            set_error("out pointer is NULL");
            return BlStatus::InvalidArgument;
        }
        unsafe { *$ptr = $val };
    }};
}

/// Bubble `w(y) = 3^{1/4}(1+y²)^{-1/2}` and its radial derivative.
///
/// # Safety
/// `value` and `derivative` must be valid or NULL (skipped).
#[no_mangle]
pub unsafe extern "C" fn bl_bubble_w(
    y: c_double,
    value: *mut c_double,
    derivative: *mut c_double,
) -> BlStatus {
    match profiles::bubble_w(y) {
        Ok(s) => {
            if !value.is_null() {
                unsafe { *value = s.value };
            }
            if !derivative.is_null() {
                unsafe { *derivative = s.derivative };
            }
            BlStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Dilation kernel `Z₀(y)`.
///
/// # Safety
/// As for [`bl_bubble_w`].
#[no_mangle]
pub unsafe extern "C" fn bl_kernel_z0(
    y: c_double,
    value: *mut c_double,
    derivative: *mut c_double,
) -> BlStatus {
    match profiles::kernel_z0(y) {
        Ok(s) => {
            if !value.is_null() {
                unsafe { *value = s.value };
            }
            if !derivative.is_null() {
                unsafe { *derivative = s.derivative };
            }
            BlStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Corrector `J(y)` (tabulated ODE solution) and its derivative.
///
/// # Safety
/// As for [`bl_bubble_w`].
#[no_mangle]
pub unsafe extern "C" fn bl_corrector_j(
    y: c_double,
    value: *mut c_double,
    derivative: *mut c_double,
) -> BlStatus {
    match profiles::corrector_j(y, profiles::JMethod::Ode) {
        Ok(s) => {
            if !value.is_null() {
                unsafe { *value = s.sample.value };
            }
            if !derivative.is_null() {
                unsafe { *derivative = s.sample.derivative };
            }
            BlStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Even Hermite polynomial `H_{2k}(x)` with `H_{2k}(0) = (-1)^k (2k)!/k!`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bl_hermite_even(k: c_uint, x: c_double, out: *mut c_double) -> BlStatus {
    match profiles::hermite_even(k, x) {
        Ok(v) => {
            write_out!(out, v);
            BlStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Smallest eigenvalue of `-Δ - 5w⁴` and the gap to the next one, on a
/// uniform radial grid with `n` cells reaching `y_max >= 30`.
///
/// # Safety
/// `lambda_minus` and `gap` must be valid or NULL.
#[no_mangle]
pub unsafe extern "C" fn bl_negative_eigenvalue(
    y_max: c_double,
    n: c_uint,
    lambda_minus: *mut c_double,
    gap: *mut c_double,
) -> BlStatus {
    let grid = match RadialGrid::uniform(y_max, n as usize) {
        Ok(g) => g,
        Err(e) => return fail(e),
    };
    match profiles::negative_eigenpair(&grid) {
        Ok(pair) => {
            if !lambda_minus.is_null() {
                unsafe { *lambda_minus = pair.lambda_minus };
            }
            if !gap.is_null() {
                unsafe { *gap = pair.gap_to_next };
            }
            BlStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// `μ₀(t) = √3 A (T-t)^{2k}`.
///
/// # Safety
/// `params` must be a live handle; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn bl_mu0(
    params: *const BlParams,
    t: c_double,
    out: *mut c_double,
) -> BlStatus {
    let Some(h) = (unsafe { params.as_ref() }) else {
        set_error("params handle is NULL");
        return BlStatus::InvalidArgument;
    };
    match mu0(t, &h.inner) {
        Ok(v) => {
            write_out!(out, v);
            BlStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Glued first approximation `U₁(x, t)` on the leading scaling `μ = μ₀`.
///
/// # Safety
/// `params` must be a live handle; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn bl_u1(
    params: *const BlParams,
    x: c_double,
    t: c_double,
    out: *mut c_double,
) -> BlStatus {
    let Some(h) = (unsafe { params.as_ref() }) else {
        set_error("params handle is NULL");
        return BlStatus::InvalidArgument;
    };
    if !(t < h.inner.t_end) || x < 0.0 {
        set_error("u1 needs x >= 0 and t < T");
        return BlStatus::DomainError;
    }
    let times: Vec<f64> = (0..64)
        .map(|i| h.inner.t_end * 0.999 * i as f64 / 63.0)
        .collect();
    let path = match ModulationPath::zero(h.inner.clone(), times) {
        Ok(p) => p,
        Err(e) => return fail(e),
    };
    write_out!(out, Ansatz::new(path).u1(x, t).value);
    BlStatus::Ok
}

/// Relative inner/outer gap at the geometric-mean matching radius.
///
/// # Safety
/// `params` must be a live handle; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn bl_matching_mid_gap(
    params: *const BlParams,
    t: c_double,
    out: *mut c_double,
) -> BlStatus {
    let Some(h) = (unsafe { params.as_ref() }) else {
        set_error("params handle is NULL");
        return BlStatus::InvalidArgument;
    };
    match matching_report(t, &h.inner) {
        Ok(rep) => {
            write_out!(out, rep.mid_gap_rel);
            BlStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Half-order fractional integral of the sampled curve
/// `(times, values)[len]`, written to `out[len]`.
///
/// # Safety
/// All arrays must hold `len` readable (resp. writable) doubles.
#[no_mangle]
pub unsafe extern "C" fn bl_half_integral(
    times: *const c_double,
    values: *const c_double,
    len: usize,
    out: *mut c_double,
) -> BlStatus {
    if times.is_null() || values.is_null() || out.is_null() || len < 2 {
        set_error("half_integral needs two arrays of length >= 2 and an out array");
        return BlStatus::InvalidArgument;
    }
    let ts = unsafe { std::slice::from_raw_parts(times, len) };
    let vs = unsafe { std::slice::from_raw_parts(values, len) };
    let series = match TimeSeries::new(ts.to_vec(), vs.to_vec(), InterpKind::Linear) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    match half_integral(&series) {
        Ok(res) => {
            let outs = unsafe { std::slice::from_raw_parts_mut(out, len) };
            outs.copy_from_slice(res.values());
            BlStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Solve the Abel equation `∫₀ᵗ α(s)(t-s)^{-1/2} ds = h(t)` for sampled
/// `h` with `h(0) = 0`. Writes `α` at `times[1..len]` into
/// `alpha_out[len-1]` and the forward-map sup residual into `residual`.
///
/// # Safety
/// Arrays as documented; `residual` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn bl_abel_solve(
    times: *const c_double,
    h_values: *const c_double,
    len: usize,
    alpha_out: *mut c_double,
    residual: *mut c_double,
) -> BlStatus {
    if times.is_null() || h_values.is_null() || alpha_out.is_null() || len < 3 {
        set_error("abel_solve needs arrays of length >= 3");
        return BlStatus::InvalidArgument;
    }
    let ts = unsafe { std::slice::from_raw_parts(times, len) };
    let hs = unsafe { std::slice::from_raw_parts(h_values, len) };
    let series = match TimeSeries::new(ts.to_vec(), hs.to_vec(), InterpKind::Linear) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    match abel_solve(&series) {
        Ok(sol) => {
            let outs = unsafe { std::slice::from_raw_parts_mut(alpha_out, len - 1) };
            outs.copy_from_slice(sol.alpha.values());
            if !residual.is_null() {
                unsafe { *residual = sol.forward_residual };
            }
            BlStatus::Ok
        }
        Err(e) => fail(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn version_is_c_string() {
        let v = unsafe { CStr::from_ptr(bl_version()) };
        assert!(v.to_str().unwrap().starts_with("blowup-lab"));
    }

    #[test]
    fn params_lifecycle_and_constraints() {
        let p = bl_params_default();
        assert!(!p.is_null());
        unsafe {
            assert_eq!(bl_params_violations(p), 0);
            let st = bl_params_set_exponents(p, 0.1, 0.5, 1.5, 0.4, 1.5, 0.1, 0);
            assert_eq!(st, BlStatus::Ok);
            bl_params_free(p);
        }

        // k = 1 without the waiver is a constraint violation
        let mut out: *mut BlParams = std::ptr::null_mut();
        let st = unsafe { bl_params_new(1, 1.0, 0.01, 0, &mut out) };
        assert_eq!(st, BlStatus::ConstraintViolation);
        assert!(out.is_null());
        let mut buf = [0i8; 256];
        let n = unsafe { bl_last_error(buf.as_mut_ptr(), buf.len()) };
        assert!(n > 0);

        // waived: handle exists and reports one violation
        let st = unsafe { bl_params_new(1, 1.0, 0.01, 1, &mut out) };
        assert_eq!(st, BlStatus::Ok);
        unsafe {
            assert_eq!(bl_params_violations(out), 1);
            bl_params_free(out);
        }
    }

    #[test]
    fn profile_calls() {
        let mut v = 0.0;
        let mut d = 0.0;
        unsafe {
            assert_eq!(bl_bubble_w(0.0, &mut v, &mut d), BlStatus::Ok);
            assert!((v - 3.0_f64.powf(0.25)).abs() < 1e-14);
            assert_eq!(bl_bubble_w(-1.0, &mut v, &mut d), BlStatus::DomainError);
            assert_eq!(bl_kernel_z0(1.0, &mut v, &mut d), BlStatus::Ok);
            assert_eq!(v, 0.0);
            assert_eq!(bl_corrector_j(0.0, &mut v, &mut d), BlStatus::Ok);
            assert_eq!(v, 0.0);
            assert_eq!(bl_hermite_even(2, 0.0, &mut v), BlStatus::Ok);
            assert_eq!(v, 12.0);
            assert_eq!(bl_hermite_even(0, 0.0, &mut v), BlStatus::DomainError);
        }
    }

    #[test]
    fn mu0_and_u1_through_ffi() {
        let p = bl_params_default();
        let mut v = 0.0;
        unsafe {
            assert_eq!(bl_mu0(p, 0.0, &mut v), BlStatus::Ok);
            assert!(v > 0.0);
            assert_eq!(bl_mu0(p, 1.0, &mut v), BlStatus::DomainError);
            assert_eq!(bl_u1(p, 0.0, 0.001, &mut v), BlStatus::Ok);
            assert!(v > 0.0);
            bl_params_free(p);
        }
    }

    #[test]
    fn abel_solve_through_ffi() {
        let n = 400usize;
        let times: Vec<f64> = (0..n)
            .map(|j| {
                let f = j as f64 / (n - 1) as f64;
                0.5 * f * f
            })
            .collect();
        let h: Vec<f64> = times.iter().map(|&t| 2.0 * t.sqrt()).collect();
        let mut alpha = vec![0.0; n - 1];
        let mut residual = 0.0;
        let st = unsafe {
            bl_abel_solve(
                times.as_ptr(),
                h.as_ptr(),
                n,
                alpha.as_mut_ptr(),
                &mut residual,
            )
        };
        assert_eq!(st, BlStatus::Ok);
        for &a in &alpha {
            assert!((a - 1.0).abs() < 1e-3);
        }
        assert!(residual < 1e-9);
    }
}
