//! C ABI over the thermoform engine.
//!
//! Every fallible call returns a [`TfStatus`] and writes results through
//! out-pointers. On failure the message is kept per thread and can be read
//! with [`tf_last_error_message`]. Handles are opaque; release each with
//! its `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use thermoform::config::MapConfig;
use thermoform::empirical::finite_time_lyapunov;
use thermoform::pressure::{
    detect_phase_transitions, pressure_curve, pressure_matrix, pressure_periodic, Method, PotentialFamily,
    PressureCurve,
};
use thermoform::spectra::{dimension_spectrum, legendre_lyapunov, temperature_curve, ExtReal, TemperatureCurve, TemperatureOptions, TemperatureSolver};
use thermoform::{Error, MapSpec, Potential};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TfStatus {
    Ok = 0,
    NullPointer = 1,
    Invalid = 2,
    Domain = 3,
    Budget = 4,
    Convergence = 5,
    Bracket = 6,
    NotNormalized = 7,
    InsufficientData = 8,
    BufferTooSmall = 9,
    Other = 10,
    Panic = 11,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TfMethod {
    PeriodicOrbit = 0,
    CylinderMatrix = 1,
}

pub struct TfMap {
    inner: MapSpec,
}

pub struct TfPotential {
    inner: Potential,
}

pub struct TfPressureCurve {
    inner: PressureCurve,
}

pub struct TfTemperatureCurve {
    inner: TemperatureCurve,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> TfStatus {
    match e.root() {
        Error::Domain { .. } | Error::CriticalPoint { .. } | Error::Depth { .. } => TfStatus::Domain,
        Error::Budget { .. } => TfStatus::Budget,
        Error::Convergence { .. } | Error::PowerIterationStall { .. } | Error::DivergentSum { .. } => {
            TfStatus::Convergence
        }
        Error::Bracket(_) => TfStatus::Bracket,
        Error::NotNormalized { .. } => TfStatus::NotNormalized,
        Error::InsufficientData(_) => TfStatus::InsufficientData,
        Error::Invalid(_) | Error::NotMarkovBase { .. } | Error::NotApplicable(_) => TfStatus::Invalid,
        _ => TfStatus::Other,
    }
}

struct Fail(TfStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> TfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            TfStatus::Ok
        }
        Ok(Err(Fail(s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            TfStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(TfStatus::NullPointer, format!("{what} is null"))
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    // SAFETY: caller passes either null or a live handle from this library.
    unsafe { p.as_ref() }.ok_or_else(|| null(what))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    // SAFETY: caller guarantees `len` readable doubles at `p`.
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

unsafe fn write<T>(p: *mut T, v: T, what: &str) -> Result<(), Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    // SAFETY: non-null and, per the caller contract, writable.
    unsafe { p.write(v) };
    Ok(())
}

fn method(kind: TfMethod, param: usize) -> Method {
    match kind {
        TfMethod::PeriodicOrbit => Method::PeriodicOrbit { period: param },
        TfMethod::CylinderMatrix => Method::CylinderMatrix { depth: param },
    }
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn tf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

fn new_map(out: *mut *mut TfMap, build: impl FnOnce() -> Result<MapSpec, Error>) -> TfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let m = build()?;
        // SAFETY: checked non-null above.
        unsafe { write(out, boxed(TfMap { inner: m }), "out") }
    })
}

#[no_mangle]
pub extern "C" fn tf_map_doubling(out: *mut *mut TfMap) -> TfStatus {
    new_map(out, || Ok(MapSpec::doubling()))
}

#[no_mangle]
pub extern "C" fn tf_map_chebyshev(out: *mut *mut TfMap) -> TfStatus {
    new_map(out, || Ok(MapSpec::chebyshev()))
}

/// Tent map with left slope `slope > 1`.
#[no_mangle]
pub extern "C" fn tf_map_tent(slope: f64, out: *mut *mut TfMap) -> TfStatus {
    new_map(out, || MapSpec::tent(slope))
}

#[no_mangle]
pub extern "C" fn tf_map_manneville_pomeau(gamma: f64, out: *mut *mut TfMap) -> TfStatus {
    new_map(out, || MapSpec::manneville_pomeau(gamma))
}

/// Increasing affine branches cut at `count` interior breakpoints.
///
/// # Safety
/// `breakpoints` must point to `count` readable doubles (or be NULL with
/// `count == 0`).
#[no_mangle]
pub unsafe extern "C" fn tf_map_piecewise_linear(
    breakpoints: *const f64,
    count: usize,
    out: *mut *mut TfMap,
) -> TfStatus {
    let b = match unsafe { slice(breakpoints, count, "breakpoints") } {
        Ok(b) => b.to_vec(),
        Err(Fail(s, m)) => {
            set_error(m);
            return s;
        }
    };
    new_map(out, || MapSpec::piecewise_linear(&b))
}

/// Map from a TOML `[map]` table body such as `family = "tent"\nslope = 3`.
///
/// # Safety
/// `text` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn tf_map_from_toml(text: *const c_char, out: *mut *mut TfMap) -> TfStatus {
    guard(|| {
        if text.is_null() {
            return Err(null("text"));
        }
        // SAFETY: caller guarantees a NUL-terminated string.
        let s = unsafe { CStr::from_ptr(text) }
            .to_str()
            .map_err(|e| Fail(TfStatus::Invalid, e.to_string()))?;
        let cfg: MapConfig = toml::from_str(s).map_err(|e| Fail(TfStatus::Invalid, e.to_string()))?;
        let m = MapSpec::from_family(&cfg.family())?;
        unsafe { write(out, boxed(TfMap { inner: m }), "out") }
    })
}

/// # Safety
/// `map` must be NULL or a handle from a `tf_map_*` constructor, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tf_map_free(map: *mut TfMap) {
    if !map.is_null() {
        // SAFETY: allocated by `boxed` and owned by the caller.
        drop(unsafe { Box::from_raw(map) });
    }
}

/// Number of branches, or 0 for NULL.
///
/// # Safety
/// `map` must be NULL or a live map handle.
#[no_mangle]
pub unsafe extern "C" fn tf_map_branch_count(map: *const TfMap) -> usize {
    unsafe { map.as_ref() }.map_or(0, |m| m.inner.branch_count())
}

/// # Safety
/// `map` must be a live map handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tf_map_eval(map: *const TfMap, x: f64, out: *mut f64) -> TfStatus {
    guard(|| {
        let m = unsafe { as_ref(map, "map") }?;
        let v = m.inner.eval(x)?;
        unsafe { write(out, v, "out") }
    })
}

fn new_potential(out: *mut *mut TfPotential, p: Potential) -> Result<(), Fail> {
    unsafe { write(out, boxed(TfPotential { inner: p }), "out") }
}

/// `φ = −t·log|Df|`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tf_potential_geometric(t: f64, out: *mut *mut TfPotential) -> TfStatus {
    guard(|| new_potential(out, Potential::geometric(t)))
}

/// One value per branch.
///
/// # Safety
/// `values` must point to `count` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tf_potential_locally_constant(
    values: *const f64,
    count: usize,
    out: *mut *mut TfPotential,
) -> TfStatus {
    guard(|| {
        let v = unsafe { slice(values, count, "values") }?;
        new_potential(out, Potential::locally_constant(v.to_vec()))
    })
}

/// `log p_i` on branch `i`.
///
/// # Safety
/// `probs` must point to `count` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tf_potential_bernoulli(
    probs: *const f64,
    count: usize,
    out: *mut *mut TfPotential,
) -> TfStatus {
    guard(|| {
        let p = unsafe { slice(probs, count, "probs") }?;
        if p.iter().any(|x| !(*x > 0.0 && *x <= 1.0)) {
            return Err(Fail(TfStatus::Invalid, "probabilities must lie in (0,1]".into()));
        }
        new_potential(out, Potential::bernoulli(p))
    })
}

/// # Safety
/// `phi` must be NULL or a live potential handle.
#[no_mangle]
pub unsafe extern "C" fn tf_potential_free(phi: *mut TfPotential) {
    if !phi.is_null() {
        drop(unsafe { Box::from_raw(phi) });
    }
}

/// Pressure from periodic orbits of period `period`.
///
/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tf_pressure_periodic(
    map: *const TfMap,
    phi: *const TfPotential,
    period: usize,
    out: *mut f64,
) -> TfStatus {
    guard(|| {
        let m = unsafe { as_ref(map, "map") }?;
        let p = unsafe { as_ref(phi, "phi") }?;
        let v = pressure_periodic(&m.inner, &p.inner, period, 0)?;
        unsafe { write(out, v, "out") }
    })
}

/// Pressure as the log spectral radius of the depth-`depth` cylinder matrix.
///
/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tf_pressure_matrix(
    map: *const TfMap,
    phi: *const TfPotential,
    depth: usize,
    out: *mut f64,
) -> TfStatus {
    guard(|| {
        let m = unsafe { as_ref(map, "map") }?;
        let p = unsafe { as_ref(phi, "phi") }?;
        let v = pressure_matrix(&m.inner, &p.inner, depth)?;
        unsafe { write(out, v, "out") }
    })
}

/// `t ↦ P(−t·log|Df|)` on `grid`.
///
/// # Safety
/// `grid` must point to `count` readable doubles; `map` live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tf_pressure_curve_geometric(
    map: *const TfMap,
    grid: *const f64,
    count: usize,
    kind: TfMethod,
    param: usize,
    out: *mut *mut TfPressureCurve,
) -> TfStatus {
    guard(|| {
        let m = unsafe { as_ref(map, "map") }?;
        let g = unsafe { slice(grid, count, "grid") }?;
        let fam = PotentialFamily::geometric(m.inner.branch_count());
        let c = pressure_curve(&m.inner, &fam, g, method(kind, param))?;
        unsafe { write(out, boxed(TfPressureCurve { inner: c }), "out") }
    })
}

/// Copies the curve values into `buf`; `*len` is the capacity on entry
/// and the number of values on exit.
///
/// # Safety
/// `curve` live; `buf` holds `*len` writable doubles; `len` writable.
#[no_mangle]
pub unsafe extern "C" fn tf_pressure_curve_values(
    curve: *const TfPressureCurve,
    buf: *mut f64,
    len: *mut usize,
) -> TfStatus {
    guard(|| {
        let c = unsafe { as_ref(curve, "curve") }?;
        unsafe { copy_out(&c.inner.values, buf, len) }
    })
}

unsafe fn copy_out(values: &[f64], buf: *mut f64, len: *mut usize) -> Result<(), Fail> {
    if len.is_null() {
        return Err(null("len"));
    }
    // SAFETY: checked non-null.
    let cap = unsafe { *len };
    unsafe { *len = values.len() };
    if cap < values.len() {
        return Err(Fail(
            TfStatus::BufferTooSmall,
            format!("buffer holds {cap} values, {} needed", values.len()),
        ));
    }
    if !values.is_empty() {
        if buf.is_null() {
            return Err(null("buf"));
        }
        // SAFETY: `buf` has room for `cap >= values.len()` doubles.
        unsafe { ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len()) };
    }
    Ok(())
}

/// Kink locations with slope gap above `slope_gap_tol`; `*len` is the
/// capacity on entry and the kink count on exit.
///
/// # Safety
/// As for [`tf_pressure_curve_values`].
#[no_mangle]
pub unsafe extern "C" fn tf_pressure_curve_kinks(
    curve: *const TfPressureCurve,
    slope_gap_tol: f64,
    buf: *mut f64,
    len: *mut usize,
) -> TfStatus {
    guard(|| {
        let c = unsafe { as_ref(curve, "curve") }?;
        let locs: Vec<f64> = detect_phase_transitions(&c.inner, slope_gap_tol)
            .kinks
            .iter()
            .map(|k| k.location)
            .collect();
        unsafe { copy_out(&locs, buf, len) }
    })
}

/// Lyapunov spectrum value `L(λ)`.
///
/// # Safety
/// `curve` live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tf_legendre_lyapunov(curve: *const TfPressureCurve, lambda: f64, out: *mut f64) -> TfStatus {
    guard(|| {
        let c = unsafe { as_ref(curve, "curve") }?;
        let v = legendre_lyapunov(&c.inner, lambda)?.value;
        unsafe { write(out, v, "out") }
    })
}

/// # Safety
/// `curve` must be NULL or a live curve handle.
#[no_mangle]
pub unsafe extern "C" fn tf_pressure_curve_free(curve: *mut TfPressureCurve) {
    if !curve.is_null() {
        drop(unsafe { Box::from_raw(curve) });
    }
}

/// Temperature `T_φ(q)`; `*is_infinite` is set when it is `+∞`, in which
/// case `*out` is `INFINITY`.
///
/// # Safety
/// Handles live; `out` and `is_infinite` writable.
#[no_mangle]
pub unsafe extern "C" fn tf_temperature(
    map: *const TfMap,
    phi: *const TfPotential,
    q: f64,
    kind: TfMethod,
    param: usize,
    out: *mut f64,
    is_infinite: *mut bool,
) -> TfStatus {
    guard(|| {
        let m = unsafe { as_ref(map, "map") }?;
        let p = unsafe { as_ref(phi, "phi") }?;
        let solver = TemperatureSolver::new(&m.inner, &p.inner, method(kind, param), TemperatureOptions::default())?;
        let (v, inf) = match solver.solve(q)? {
            ExtReal::Finite(v) => (v, false),
            ExtReal::Infinite => (f64::INFINITY, true),
        };
        unsafe { write(out, v, "out") }?;
        unsafe { write(is_infinite, inf, "is_infinite") }
    })
}

/// Temperature function on `q_grid`.
///
/// # Safety
/// `q_grid` holds `count` readable doubles; handles live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tf_temperature_curve(
    map: *const TfMap,
    phi: *const TfPotential,
    q_grid: *const f64,
    count: usize,
    kind: TfMethod,
    param: usize,
    out: *mut *mut TfTemperatureCurve,
) -> TfStatus {
    guard(|| {
        let m = unsafe { as_ref(map, "map") }?;
        let p = unsafe { as_ref(phi, "phi") }?;
        let q = unsafe { slice(q_grid, count, "q_grid") }?;
        let c = temperature_curve(&m.inner, &p.inner, q, method(kind, param))?;
        unsafe { write(out, boxed(TfTemperatureCurve { inner: c }), "out") }
    })
}

/// Temperature values, `INFINITY` marking infinite entries.
///
/// # Safety
/// As for [`tf_pressure_curve_values`].
#[no_mangle]
pub unsafe extern "C" fn tf_temperature_curve_values(
    curve: *const TfTemperatureCurve,
    buf: *mut f64,
    len: *mut usize,
) -> TfStatus {
    guard(|| {
        let c = unsafe { as_ref(curve, "curve") }?;
        let v: Vec<f64> = c.inner.t_values.iter().map(|x| x.finite().unwrap_or(f64::INFINITY)).collect();
        unsafe { copy_out(&v, buf, len) }
    })
}

/// Dimension spectrum at `count` values of `α`, written to `out`.
///
/// # Safety
/// `alphas` holds `count` readable doubles and `out` `count` writable ones.
#[no_mangle]
pub unsafe extern "C" fn tf_dimension_spectrum(
    curve: *const TfTemperatureCurve,
    alphas: *const f64,
    count: usize,
    out: *mut f64,
) -> TfStatus {
    guard(|| {
        let c = unsafe { as_ref(curve, "curve") }?;
        let a = unsafe { slice(alphas, count, "alphas") }?;
        let s = dimension_spectrum(&c.inner, a)?;
        let mut len = count;
        unsafe { copy_out(&s.values, out, &mut len) }
    })
}

/// # Safety
/// `curve` must be NULL or a live temperature-curve handle.
#[no_mangle]
pub unsafe extern "C" fn tf_temperature_curve_free(curve: *mut TfTemperatureCurve) {
    if !curve.is_null() {
        drop(unsafe { Box::from_raw(curve) });
    }
}

/// `(1/n)·log|Df^n(x0)|`.
///
/// # Safety
/// `map` live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tf_finite_time_lyapunov(map: *const TfMap, x0: f64, n: usize, out: *mut f64) -> TfStatus {
    guard(|| {
        let m = unsafe { as_ref(map, "map") }?;
        let v = finite_time_lyapunov(&m.inner, x0, n)?;
        unsafe { write(out, v, "out") }
    })
}
