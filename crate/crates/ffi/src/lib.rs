//! C interface to horizonlab.
//!
//! Objects are opaque handles created by `hl_*_new`-style functions and
//! released with the matching `hl_*_free`. Every fallible function returns
//! an [`HlStatus`]; on failure the message is available from
//! [`hl_last_error`] on the same thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::sync::Arc;

use horizonlab::geometry::{Family, HoleKind};
use horizonlab::horizon::{horizon_report, HorizonConfig, HorizonReport};
use horizonlab::metric::{vortex_metric, SpacetimeMetric};
use horizonlab::scenario::{builtin, parse_config, parse_config_str, run_command, Command, RunOptions, ScenarioConfig};
use horizonlab::wave::{first_order_reduce, AnnularGrid, InteriorPulse, SolverConfig, WaveSolver};
use horizonlab::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Parse or validation failure of a scenario.
    Config = 3,
    /// A numerical routine failed or an experiment missed its criterion.
    Numerical = 4,
    Io = 5,
    /// A Rust panic was caught at the boundary.
    Panic = 6,
}

/// A spacetime metric.
pub struct HlMetric(SpacetimeMetric);

/// Ergosphere and horizons of a metric.
pub struct HlHorizonReport(HorizonReport);

/// Wave solver on a polar annulus.
pub struct HlSolver(WaveSolver);

/// One horizon of a report.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HlCycle {
    pub fixed_r: f64,
    /// `+1` for the plus family, `-1` for the minus family.
    pub family: i32,
    /// `1` black hole, `2` white hole, `0` unclassified.
    pub kind: i32,
    /// Sign margin of the classification, NaN when unclassified.
    pub margin: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> HlStatus {
    match e {
        Error::Io(_) => HlStatus::Io,
        Error::InvalidArgument(_) => HlStatus::InvalidArgument,
        e if e.is_config_error() => HlStatus::Config,
        _ => HlStatus::Numerical,
    }
}

fn fail(e: Error) -> HlStatus {
    let status = status_of(&e);
    set_error(e.to_string());
    status
}

/// Runs `f`, converting panics into `HlStatus::Panic`.
fn guard(f: impl FnOnce() -> HlStatus) -> HlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            HlStatus::Panic
        }
    }
}

macro_rules! non_null {
    ($($p:expr),+) => {
        $(if $p.is_null() {
            set_error(format!("`{}` is null", stringify!($p)));
            return HlStatus::NullPointer;
        })+
    };
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, HlStatus> {
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error("argument is not valid UTF-8".into());
        HlStatus::InvalidArgument
    })
}

fn into_handle<T>(value: T, out: *mut *mut T) -> HlStatus {
    unsafe { *out = Box::into_raw(Box::new(value)) };
    HlStatus::Ok
}

/// Last error message of this thread, or null. The pointer stays valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn hl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn hl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn hl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Acoustic metric of the vortex `(A/r) r_hat + (B/r) theta_hat`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hl_metric_vortex(a: f64, b: f64, out: *mut *mut HlMetric) -> HlStatus {
    non_null!(out);
    guard(|| match vortex_metric(a, b) {
        Ok(m) => into_handle(HlMetric(m), out),
        Err(e) => fail(e),
    })
}

fn load_scenario(spec: &str) -> horizonlab::Result<ScenarioConfig> {
    if spec.trim_start().starts_with("name") || spec.contains('\n') {
        parse_config_str(spec)
    } else if Path::new(spec).exists() {
        parse_config(Path::new(spec))
    } else {
        builtin(spec)
    }
}

/// Metric of a scenario given as a built-in name, a file path, or TOML
/// text.
///
/// # Safety
/// `scenario` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hl_metric_from_scenario(scenario: *const c_char, out: *mut *mut HlMetric) -> HlStatus {
    non_null!(scenario, out);
    guard(|| {
        let spec = match str_arg(scenario) {
            Ok(s) => s,
            Err(s) => return s,
        };
        match load_scenario(spec).and_then(|c| c.metric.build()) {
            Ok(m) => into_handle(HlMetric(m), out),
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `m` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn hl_metric_free(m: *mut HlMetric) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Writes the 3x3 components `g^{jk}(x, y)` row-major into `out`.
///
/// # Safety
/// `m` must be a live handle and `out` must hold 9 doubles.
#[no_mangle]
pub unsafe extern "C" fn hl_metric_eval(m: *const HlMetric, x: f64, y: f64, out: *mut f64) -> HlStatus {
    non_null!(m, out);
    guard(|| match (*m).0.eval(&[x, y]) {
        Ok(g) => {
            if g.dim() != 3 {
                set_error(format!("metric has dimension {}, expected 3", g.dim()));
                return HlStatus::InvalidArgument;
            }
            let dst = std::slice::from_raw_parts_mut(out, 9);
            for j in 0..3 {
                for k in 0..3 {
                    dst[3 * j + k] = g.get(j, k);
                }
            }
            HlStatus::Ok
        }
        Err(e) => fail(e),
    })
}

/// Determinant of the spatial block; negative inside the ergoregion.
///
/// # Safety
/// `m` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hl_metric_spatial_det(m: *const HlMetric, x: f64, y: f64, out: *mut f64) -> HlStatus {
    non_null!(m, out);
    guard(|| match (*m).0.spatial_det(&[x, y]) {
        Ok(d) => {
            *out = d;
            HlStatus::Ok
        }
        Err(e) => fail(e),
    })
}

/// Ergosphere and classified horizons in the annulus `[r_min, r_max]`.
///
/// # Safety
/// `m` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hl_horizon_report(
    m: *const HlMetric,
    r_min: f64,
    r_max: f64,
    out: *mut *mut HlHorizonReport,
) -> HlStatus {
    non_null!(m, out);
    guard(|| match horizon_report(&(*m).0, &HorizonConfig::new(r_min, r_max)) {
        Ok(r) => into_handle(HlHorizonReport(r), out),
        Err(e) => fail(e),
    })
}

/// # Safety
/// `r` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn hl_report_free(r: *mut HlHorizonReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Mean radius of the ergosphere locus.
///
/// # Safety
/// `r` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hl_report_ergosphere_radius(r: *const HlHorizonReport, out: *mut f64) -> HlStatus {
    non_null!(r, out);
    *out = (*r).0.ergosphere.mean_radius();
    HlStatus::Ok
}

/// # Safety
/// `r` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hl_report_cycle_count(r: *const HlHorizonReport, out: *mut usize) -> HlStatus {
    non_null!(r, out);
    *out = (*r).0.cycles.len();
    HlStatus::Ok
}

/// # Safety
/// `r` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hl_report_cycle(r: *const HlHorizonReport, index: usize, out: *mut HlCycle) -> HlStatus {
    non_null!(r, out);
    let rep = &(*r).0;
    let Some(c) = rep.cycles.get(index) else {
        set_error(format!(
            "cycle index {index} out of range ({} cycles)",
            rep.cycles.len()
        ));
        return HlStatus::InvalidArgument;
    };
    let class = rep.classes[index];
    *out = HlCycle {
        fixed_r: c.fixed_r,
        family: match c.family {
            Family::Plus => 1,
            Family::Minus => -1,
        },
        kind: match class.map(|k| k.kind) {
            Some(HoleKind::BlackHole) => 1,
            Some(HoleKind::WhiteHole) => 2,
            None => 0,
        },
        margin: class.map_or(f64::NAN, |k| k.margin),
    };
    HlStatus::Ok
}

/// Report as a JSON string; release it with [`hl_string_free`].
///
/// # Safety
/// `r` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hl_report_to_json(r: *const HlHorizonReport, out: *mut *mut c_char) -> HlStatus {
    non_null!(r, out);
    guard(|| match serde_json::to_string(&(*r).0.to_json()) {
        Ok(s) => {
            *out = CString::new(s).unwrap_or_default().into_raw();
            HlStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            HlStatus::Numerical
        }
    })
}

/// Wave solver for `m` on an `nr x ntheta` annular grid with default
/// settings and zero initial data.
///
/// # Safety
/// `m` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hl_solver_new(
    m: *const HlMetric,
    nr: usize,
    ntheta: usize,
    r_min: f64,
    r_max: f64,
    out: *mut *mut HlSolver,
) -> HlStatus {
    non_null!(m, out);
    guard(|| {
        let built = AnnularGrid::new(nr, ntheta, r_min, r_max).and_then(|g| first_order_reduce(&(*m).0, &g));
        match built {
            Ok(op) => {
                let mut s = WaveSolver::new(Arc::new(op), SolverConfig::default());
                s.set_initial_with(0.0, |_| (0.0, [0.0; 2], 0.0));
                into_handle(HlSolver(s), out)
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn hl_solver_free(s: *mut HlSolver) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Resets the state to a Gaussian displacement pulse at `(cx, cy)`.
///
/// # Safety
/// `s` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn hl_solver_set_pulse(
    s: *mut HlSolver,
    cx: f64,
    cy: f64,
    width: f64,
    amplitude: f64,
) -> HlStatus {
    non_null!(s);
    if !(width > 0.0) {
        set_error(format!("pulse width must be positive, got {width}"));
        return HlStatus::InvalidArgument;
    }
    guard(|| {
        (*s).0
            .set_pulse(&InteriorPulse::displacement([cx, cy], width, amplitude));
        HlStatus::Ok
    })
}

/// Advances to `t_end`, recording energy every `record_interval`.
///
/// # Safety
/// `s` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn hl_solver_advance(s: *mut HlSolver, t_end: f64, record_interval: f64) -> HlStatus {
    non_null!(s);
    if !(record_interval > 0.0) || !t_end.is_finite() {
        set_error("need a finite end time and a positive record interval".into());
        return HlStatus::InvalidArgument;
    }
    guard(|| match (*s).0.advance(t_end, record_interval, |_| Ok(())) {
        Ok(_) => HlStatus::Ok,
        Err(e) => fail(e),
    })
}

/// Current time and total and exterior energies.
///
/// # Safety
/// `s` must be a live handle; output pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn hl_solver_energy(
    s: *const HlSolver,
    t: *mut f64,
    total: *mut f64,
    exterior: *mut f64,
) -> HlStatus {
    non_null!(s);
    let e = (*s).0.energy();
    for (p, v) in [(t, e.t), (total, e.total), (exterior, e.exterior)] {
        if !p.is_null() {
            *p = v;
        }
    }
    HlStatus::Ok
}

/// Copies the field `u` (ring-major, `(nr + 1) * ntheta` values) into
/// `buf`. `written` receives the field length even when `len` is too
/// small, in which case nothing is copied.
///
/// # Safety
/// `s` must be a live handle, `buf` must hold `len` doubles and `written`
/// must be valid.
#[no_mangle]
pub unsafe extern "C" fn hl_solver_field(
    s: *const HlSolver,
    buf: *mut f64,
    len: usize,
    written: *mut usize,
) -> HlStatus {
    non_null!(s, written);
    let u = &(*s).0.state.u;
    *written = u.len();
    if len < u.len() {
        set_error(format!("buffer holds {len} values, field has {}", u.len()));
        return HlStatus::InvalidArgument;
    }
    non_null!(buf);
    ptr::copy_nonoverlapping(u.as_ptr(), buf, u.len());
    HlStatus::Ok
}

/// Runs a scenario command (`horizon`, `wave`, ...; null selects the
/// scenario's default) and writes its artifacts under `out_dir`.
///
/// # Safety
/// `scenario` and `out_dir` must be NUL-terminated strings; `command` may
/// be null.
#[no_mangle]
pub unsafe extern "C" fn hl_run_scenario(
    scenario: *const c_char,
    command: *const c_char,
    out_dir: *const c_char,
) -> HlStatus {
    non_null!(scenario, out_dir);
    guard(|| {
        let (spec, dir) = match (str_arg(scenario), str_arg(out_dir)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        let cfg = match load_scenario(spec) {
            Ok(c) => c,
            Err(e) => return fail(e),
        };
        let cmd = if command.is_null() {
            horizonlab::scenario::default_command(&cfg)
        } else {
            match str_arg(command).map(Command::parse) {
                Ok(Ok(c)) => c,
                Ok(Err(e)) => return fail(e),
                Err(s) => return s,
            }
        };
        match run_command(&cfg, cmd, &RunOptions::new(dir)) {
            Ok(art) if art.exit_code() == 0 => HlStatus::Ok,
            Ok(art) => {
                let msg = art
                    .manifest
                    .error
                    .map(|e| e.message)
                    .unwrap_or_else(|| "pass criterion not met".into());
                set_error(msg);
                HlStatus::Numerical
            }
            Err(e) => fail(e),
        }
    })
}
