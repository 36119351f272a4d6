//! C ABI for the orlicz-duality solvers.
//!
//! Every fallible function returns an [`OdStatus`] and writes its result
//! through an out-pointer. On failure the message is available from
//! [`od_last_error_message`] on the same thread. Objects are opaque handles
//! released with the matching `_free` function.
//!
//! # Safety
//!
//! Handle arguments must be null or come from this library and not yet be
//! freed. Array arguments must point to at least the stated number of
//! values, out-pointers must be null or writable, and strings must be
//! nul-terminated. Null is always detected and reported.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use orlicz_duality::cli::scenario::MarketSpec;
use orlicz_duality::orlicz::{luxemburg_norm, HatU};
use orlicz_duality::{
    dual_optimize, primal_optimize, DualSolution, Error, EventTree, FiniteRV, LossBound, PrimalSolution,
    UtilityFunction,
};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OdStatus {
    Ok = 0,
    InvalidInput = 1,
    Domain = 2,
    EmptyPolytope = 3,
    Unbounded = 4,
    NotConverged = 5,
    StrictConcavityRequired = 6,
    Unsupported = 7,
    NullPointer = 8,
    BufferTooSmall = 9,
    Panic = 10,
    Other = 11,
}

/// Opaque utility function.
pub struct OdUtility(UtilityFunction);

/// Opaque finite market.
pub struct OdMarket(EventTree);

/// Opaque dual solution.
pub struct OdDualSolution(DualSolution);

/// Opaque primal solution.
pub struct OdPrimalSolution(PrimalSolution);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<Vec<u8>>) {
    let mut bytes = msg.into();
    bytes.retain(|b| *b != 0);
    let s = CString::new(bytes).expect("interior nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(s));
}

fn status_of(e: &Error) -> OdStatus {
    match e {
        Error::InvalidInput(_) => OdStatus::InvalidInput,
        Error::Domain(_) => OdStatus::Domain,
        Error::EmptyPolytope => OdStatus::EmptyPolytope,
        Error::Unbounded { .. } => OdStatus::Unbounded,
        Error::NotConverged { .. } => OdStatus::NotConverged,
        Error::StrictConcavityRequired => OdStatus::StrictConcavityRequired,
        Error::UnsupportedFamily(_) | Error::UnsupportedAsymptotics(_) => OdStatus::Unsupported,
        _ => OdStatus::Other,
    }
}

struct Failure(OdStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(name: &str) -> Failure {
    Failure(OdStatus::NullPointer, format!("{name} is null"))
}

/// Runs `f`, records any error or panic, and maps it to a status.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> OdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => OdStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_error(format!("internal panic: {msg}"));
            OdStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    // SAFETY: the caller passes a handle obtained from this library or null.
    unsafe { p.as_ref() }.ok_or_else(|| null(name))
}

unsafe fn write<T>(out: *mut T, value: T, name: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(name));
    }
    // SAFETY: non-null and, per the API contract, valid for writes.
    unsafe { out.write(value) };
    Ok(())
}

unsafe fn slice<'a>(p: *const f64, len: usize, name: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    // SAFETY: the caller guarantees `len` readable doubles at `p`.
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

/// Copies `data` into `buf` and stores its length in `len_out`.
unsafe fn copy_out(data: &[f64], buf: *mut f64, capacity: usize, len_out: *mut usize) -> Result<(), Failure> {
    unsafe { write(len_out, data.len(), "len_out") }?;
    if capacity < data.len() || (buf.is_null() && !data.is_empty()) {
        return Err(Failure(
            OdStatus::BufferTooSmall,
            format!("buffer holds {capacity} values, {} needed", data.len()),
        ));
    }
    if !data.is_empty() {
        // SAFETY: `buf` is non-null with room for `capacity ≥ data.len()` values.
        unsafe { ptr::copy_nonoverlapping(data.as_ptr(), buf, data.len()) };
    }
    Ok(())
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn od_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn od_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

fn new_utility(make: impl FnOnce() -> orlicz_duality::Result<UtilityFunction>, out: *mut *mut OdUtility) -> OdStatus {
    guard(|| {
        let u = make()?;
        unsafe { write(out, boxed(OdUtility(u)), "out") }
    })
}

/// `u(x) = −e^{−γx}`.
#[no_mangle]
pub unsafe extern "C" fn od_utility_exponential(gamma: f64, out: *mut *mut OdUtility) -> OdStatus {
    new_utility(|| UtilityFunction::exponential(gamma), out)
}

/// `u(x) = ln(x − a)`.
#[no_mangle]
pub unsafe extern "C" fn od_utility_log_shifted(a: f64, out: *mut *mut OdUtility) -> OdStatus {
    new_utility(|| UtilityFunction::log_shifted(a), out)
}

/// Shifted power utility with endpoint `a` and exponent in `(0, 1)`.
#[no_mangle]
pub unsafe extern "C" fn od_utility_power_shifted(a: f64, exponent: f64, out: *mut *mut OdUtility) -> OdStatus {
    new_utility(|| UtilityFunction::power_shifted(a, exponent), out)
}

/// `u(x) = x`.
#[no_mangle]
pub unsafe extern "C" fn od_utility_linear(out: *mut *mut OdUtility) -> OdStatus {
    new_utility(|| Ok(UtilityFunction::linear()), out)
}

/// Utility value; `-inf` outside the domain.
#[no_mangle]
pub unsafe extern "C" fn od_utility_value(u: *const OdUtility, x: f64, out: *mut f64) -> OdStatus {
    guard(|| {
        let u = unsafe { borrow(u, "utility") }?;
        unsafe { write(out, u.0.value(x), "out") }
    })
}

/// Convex conjugate `Φ(y) = sup_x (u(x) − xy)`; `+inf` where it is infinite.
#[no_mangle]
pub unsafe extern "C" fn od_utility_conjugate(u: *const OdUtility, y: f64, out: *mut f64) -> OdStatus {
    guard(|| {
        let u = unsafe { borrow(u, "utility") }?;
        unsafe { write(out, u.0.phi(y).to_f64(), "out") }
    })
}

/// Left endpoint of the utility's domain (`-inf` when unbounded).
#[no_mangle]
pub unsafe extern "C" fn od_utility_endpoint(u: *const OdUtility, out: *mut f64) -> OdStatus {
    guard(|| {
        let u = unsafe { borrow(u, "utility") }?;
        unsafe { write(out, u.0.endpoint(), "out") }
    })
}

#[no_mangle]
pub unsafe extern "C" fn od_utility_free(u: *mut OdUtility) {
    if !u.is_null() {
        // SAFETY: `u` came from `Box::into_raw` in this library.
        drop(unsafe { Box::from_raw(u) });
    }
}

fn new_market(make: impl FnOnce() -> Result<EventTree, Failure>, out: *mut *mut OdMarket) -> OdStatus {
    guard(|| {
        let t = make()?;
        unsafe { write(out, boxed(OdMarket(t)), "out") }
    })
}

/// Multiplicative binomial tree.
#[no_mangle]
pub unsafe extern "C" fn od_market_binomial(
    s0: f64,
    up: f64,
    down: f64,
    p_up: f64,
    periods: usize,
    out: *mut *mut OdMarket,
) -> OdStatus {
    new_market(|| Ok(EventTree::binomial(s0, up, down, p_up, periods)?), out)
}

/// One period with `states` outcomes over `assets` assets. `prices` holds
/// `states × assets` values in row-major order.
#[no_mangle]
pub unsafe extern "C" fn od_market_one_period(
    assets: usize,
    s0: *const f64,
    states: usize,
    probs: *const f64,
    prices: *const f64,
    out: *mut *mut OdMarket,
) -> OdStatus {
    new_market(
        || {
            let s0 = unsafe { slice(s0, assets, "s0") }?;
            let probs = unsafe { slice(probs, states, "probs") }?;
            let prices = unsafe { slice(prices, states * assets, "prices") }?;
            let outcomes: Vec<(f64, Vec<f64>)> =
                (0..states).map(|i| (probs[i], prices[i * assets..(i + 1) * assets].to_vec())).collect();
            Ok(EventTree::one_period(s0.to_vec(), &outcomes)?)
        },
        out,
    )
}

/// Market from the JSON `market` section of a scenario document.
#[no_mangle]
pub unsafe extern "C" fn od_market_from_json(json: *const c_char, seed: u64, out: *mut *mut OdMarket) -> OdStatus {
    new_market(
        || {
            if json.is_null() {
                return Err(null("json"));
            }
            // SAFETY: non-null and nul-terminated per the API contract.
            let text = unsafe { CStr::from_ptr(json) }
                .to_str()
                .map_err(|e| Failure(OdStatus::InvalidInput, format!("json is not UTF-8: {e}")))?;
            let spec: MarketSpec =
                serde_json::from_str(text).map_err(|e| Failure(OdStatus::InvalidInput, e.to_string()))?;
            Ok(spec.build(seed)?)
        },
        out,
    )
}

#[no_mangle]
pub unsafe extern "C" fn od_market_path_count(m: *const OdMarket, out: *mut usize) -> OdStatus {
    guard(|| {
        let m = unsafe { borrow(m, "market") }?;
        unsafe { write(out, m.0.path_count(), "out") }
    })
}

#[no_mangle]
pub unsafe extern "C" fn od_market_free(m: *mut OdMarket) {
    if !m.is_null() {
        // SAFETY: `m` came from `Box::into_raw` in this library.
        drop(unsafe { Box::from_raw(m) });
    }
}

/// Minimizes the dual objective over the market's martingale measures.
#[no_mangle]
pub unsafe extern "C" fn od_dual_optimize(
    u: *const OdUtility,
    m: *const OdMarket,
    x: f64,
    out: *mut *mut OdDualSolution,
) -> OdStatus {
    guard(|| {
        let u = unsafe { borrow(u, "utility") }?;
        let m = unsafe { borrow(m, "market") }?;
        let w = LossBound::constant(&m.0, 1.0)?;
        let sol = dual_optimize(&u.0, &m.0, x, &w)?;
        unsafe { write(out, boxed(OdDualSolution(sol)), "out") }
    })
}

#[no_mangle]
pub unsafe extern "C" fn od_dual_value(s: *const OdDualSolution, out: *mut f64) -> OdStatus {
    guard(|| {
        let s = unsafe { borrow(s, "solution") }?;
        unsafe { write(out, s.0.value, "out") }
    })
}

/// Optimal multiplier `λ*`.
#[no_mangle]
pub unsafe extern "C" fn od_dual_lambda(s: *const OdDualSolution, out: *mut f64) -> OdStatus {
    guard(|| {
        let s = unsafe { borrow(s, "solution") }?;
        unsafe { write(out, s.0.lambda, "out") }
    })
}

/// Optimal martingale measure as path probabilities. Writes the number of
/// paths to `len_out` even when `capacity` is too small.
#[no_mangle]
pub unsafe extern "C" fn od_dual_measure(
    s: *const OdDualSolution,
    buf: *mut f64,
    capacity: usize,
    len_out: *mut usize,
) -> OdStatus {
    guard(|| {
        let s = unsafe { borrow(s, "solution") }?;
        unsafe { copy_out(&s.0.q, buf, capacity, len_out) }
    })
}

#[no_mangle]
pub unsafe extern "C" fn od_dual_free(s: *mut OdDualSolution) {
    if !s.is_null() {
        // SAFETY: `s` came from `Box::into_raw` in this library.
        drop(unsafe { Box::from_raw(s) });
    }
}

/// Maximizes expected utility of terminal wealth. `c_max` caps losses at
/// `c_max` per unit of a constant loss bound; pass NaN for no cap.
#[no_mangle]
pub unsafe extern "C" fn od_primal_optimize(
    u: *const OdUtility,
    m: *const OdMarket,
    x: f64,
    c_max: f64,
    out: *mut *mut OdPrimalSolution,
) -> OdStatus {
    guard(|| {
        let u = unsafe { borrow(u, "utility") }?;
        let m = unsafe { borrow(m, "market") }?;
        let w = LossBound::constant(&m.0, 1.0)?;
        let cap = (!c_max.is_nan()).then_some(c_max);
        let sol = primal_optimize(&u.0, &m.0, x, &w, cap)?;
        unsafe { write(out, boxed(OdPrimalSolution(sol)), "out") }
    })
}

#[no_mangle]
pub unsafe extern "C" fn od_primal_value(s: *const OdPrimalSolution, out: *mut f64) -> OdStatus {
    guard(|| {
        let s = unsafe { borrow(s, "solution") }?;
        unsafe { write(out, s.0.value, "out") }
    })
}

/// Positions at every nonterminal node, concatenated in node order.
#[no_mangle]
pub unsafe extern "C" fn od_primal_strategy(
    s: *const OdPrimalSolution,
    buf: *mut f64,
    capacity: usize,
    len_out: *mut usize,
) -> OdStatus {
    guard(|| {
        let s = unsafe { borrow(s, "solution") }?;
        unsafe { copy_out(&s.0.strategy.flat(), buf, capacity, len_out) }
    })
}

/// Terminal wealth per path.
#[no_mangle]
pub unsafe extern "C" fn od_primal_wealth(
    s: *const OdPrimalSolution,
    buf: *mut f64,
    capacity: usize,
    len_out: *mut usize,
) -> OdStatus {
    guard(|| {
        let s = unsafe { borrow(s, "solution") }?;
        unsafe { copy_out(s.0.claim.values(), buf, capacity, len_out) }
    })
}

#[no_mangle]
pub unsafe extern "C" fn od_primal_free(s: *mut OdPrimalSolution) {
    if !s.is_null() {
        // SAFETY: `s` came from `Box::into_raw` in this library.
        drop(unsafe { Box::from_raw(s) });
    }
}

/// Luxemburg norm of `f` for the Young function `û(x) = −u(−|x|)`.
#[no_mangle]
pub unsafe extern "C" fn od_luxemburg_norm(
    u: *const OdUtility,
    values: *const f64,
    probs: *const f64,
    len: usize,
    out: *mut f64,
) -> OdStatus {
    guard(|| {
        let u = unsafe { borrow(u, "utility") }?;
        let v = unsafe { slice(values, len, "values") }?;
        let p = unsafe { slice(probs, len, "probs") }?;
        let f = FiniteRV::new(v.to_vec(), p.to_vec())?;
        unsafe { write(out, luxemburg_norm(&HatU(&u.0), &f), "out") }
    })
}
