//! C interface to `twobubble`.
//!
//! Every function returns a [`TbStatus`]. Strings handed out by the library are
//! NUL-terminated UTF-8 and must be released with [`tb_string_free`]; handles are
//! released with their matching `_free` function. After a failure,
//! [`tb_last_error`] returns the message for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use twobubble::cli::{self, RunConfig};
use twobubble::radial_core::{Grading, RadialGrid};
use twobubble::Error;

/// Status codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Accuracy = 4,
    Spectral = 5,
    Numerical = 6,
    Degenerate = 7,
    Regime = 8,
    Decomposition = 9,
    Construction = 10,
    CheckFailed = 11,
    Panic = 12,
}

impl From<&Error> for TbStatus {
    fn from(e: &Error) -> TbStatus {
        match e {
            Error::Config { .. } => TbStatus::Config,
            Error::Accuracy(_) => TbStatus::Accuracy,
            Error::Spectral(_) => TbStatus::Spectral,
            Error::Numerical(_) => TbStatus::Numerical,
            Error::Degenerate(_) => TbStatus::Degenerate,
            Error::Regime(_) => TbStatus::Regime,
            Error::Decomposition { .. } => TbStatus::Decomposition,
            Error::Construction(_) => TbStatus::Construction,
        }
    }
}

/// Opaque run configuration.
pub struct TbConfig {
    inner: RunConfig,
}

/// Opaque radial grid.
pub struct TbGrid {
    inner: Arc<RadialGrid>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("NUL removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: TbStatus, msg: String) -> TbStatus {
    set_error(msg);
    status
}

fn guard<F: FnOnce() -> Result<(), (TbStatus, String)>>(f: F) -> TbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TbStatus::Ok,
        Ok(Err((s, m))) => fail(s, m),
        Err(p) => {
            let msg = p.downcast_ref::<&str>().map(|s| s.to_string()).or_else(|| p.downcast_ref::<String>().cloned());
            fail(TbStatus::Panic, msg.unwrap_or_else(|| "panic".into()))
        }
    }
}

fn lib(e: Error) -> (TbStatus, String) {
    (TbStatus::from(&e), e.to_string())
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, (TbStatus, String)> {
    if p.is_null() {
        return Err((TbStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| (TbStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn config_ref<'a>(p: *const TbConfig) -> Result<&'a RunConfig, (TbStatus, String)> {
    p.as_ref().map(|c| &c.inner).ok_or((TbStatus::NullPointer, "config is null".into()))
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), (TbStatus, String)> {
    if out.is_null() {
        return Err((TbStatus::NullPointer, "output pointer is null".into()));
    }
    let c = CString::new(s).map_err(|_| (TbStatus::InvalidUtf8, "output contains NUL".into()))?;
    *out = c.into_raw();
    Ok(())
}

/// Message of the last failure on this thread, or null. Free with `tb_string_free`.
#[no_mangle]
pub extern "C" fn tb_last_error() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map(|c| c.clone().into_raw()).unwrap_or(ptr::null_mut()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn tb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Default configuration.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tb_config_new(out: *mut *mut TbConfig) -> TbStatus {
    guard(|| {
        if out.is_null() {
            return Err((TbStatus::NullPointer, "output pointer is null".into()));
        }
        *out = Box::into_raw(Box::new(TbConfig { inner: RunConfig::default() }));
        Ok(())
    })
}

/// Parses flat `key=value` text over the defaults.
///
/// # Safety
/// `text` must be NUL-terminated; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tb_config_parse(text_: *const c_char, out: *mut *mut TbConfig) -> TbStatus {
    guard(|| {
        let t = text(text_, "text")?;
        if out.is_null() {
            return Err((TbStatus::NullPointer, "output pointer is null".into()));
        }
        let cfg = cli::parse_config(t).map_err(lib)?;
        *out = Box::into_raw(Box::new(TbConfig { inner: cfg }));
        Ok(())
    })
}

/// Sets one key.
///
/// # Safety
/// `cfg` must be a live handle; `key` and `value` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn tb_config_set(cfg: *mut TbConfig, key: *const c_char, value: *const c_char) -> TbStatus {
    guard(|| {
        let c = cfg.as_mut().ok_or((TbStatus::NullPointer, "config is null".into()))?;
        let k = text(key, "key")?;
        let v = text(value, "value")?;
        c.inner.set(k, v).map_err(lib)
    })
}

/// Resolved configuration as JSON.
///
/// # Safety
/// `cfg` must be a live handle; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn tb_config_json(cfg: *const TbConfig, out: *mut *mut c_char) -> TbStatus {
    guard(|| {
        let c = config_ref(cfg)?;
        put_string(out, serde_json::to_string(c).expect("config serializes"))
    })
}

/// # Safety
/// `cfg` must come from `tb_config_new` or `tb_config_parse`; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn tb_config_free(cfg: *mut TbConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Closed-form constants as JSON.
///
/// # Safety
/// `cfg` must be a live handle; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn tb_constants_json(cfg: *const TbConfig, out: *mut *mut c_char) -> TbStatus {
    guard(|| put_string(out, cli::cmd_constants(config_ref(cfg)?).map_err(lib)?))
}

/// Eigenpair summary as JSON.
///
/// # Safety
/// `cfg` must be a live handle; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn tb_eigen_json(cfg: *const TbConfig, out: *mut *mut c_char) -> TbStatus {
    guard(|| put_string(out, cli::cmd_eigen(config_ref(cfg)?).map_err(lib)?))
}

/// Runs the property suite (`only` may be null) and writes one JSON record per
/// line. Returns `CheckFailed` when any check fails; `out` is written either way.
///
/// # Safety
/// `cfg` must be a live handle; `only` null or NUL-terminated; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn tb_check_jsonl(cfg: *const TbConfig, only: *const c_char, out: *mut *mut c_char) -> TbStatus {
    guard(|| {
        let c = config_ref(cfg)?;
        let o = if only.is_null() { None } else { Some(text(only, "only")?) };
        let recs = cli::run_suite(c, o).map_err(lib)?;
        put_string(out, cli::records_jsonl(&recs))?;
        match recs.iter().filter(|r| !r.pass).map(|r| r.id.clone()).collect::<Vec<_>>() {
            f if f.is_empty() => Ok(()),
            f => Err((TbStatus::CheckFailed, format!("failed: {}", f.join(", ")))),
        }
    })
}

/// Reduced modulation law as CSV.
///
/// # Safety
/// `cfg` must be a live handle; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn tb_ode_csv(cfg: *const TbConfig, out: *mut *mut c_char) -> TbStatus {
    guard(|| put_string(out, cli::cmd_ode(config_ref(cfg)?).map_err(lib)?))
}

/// Two-bubble experiment: trajectory CSV and summary JSON.
///
/// # Safety
/// `cfg` must be a live handle; both outputs valid.
#[no_mangle]
pub unsafe extern "C" fn tb_simulate(cfg: *const TbConfig, out_csv: *mut *mut c_char, out_json: *mut *mut c_char) -> TbStatus {
    guard(|| {
        let (c, j) = cli::cmd_simulate(config_ref(cfg)?).map_err(lib)?;
        put_string(out_csv, c)?;
        put_string(out_json, j)
    })
}

/// Exit landscape: CSV and summary JSON.
///
/// # Safety
/// `cfg` must be a live handle; both outputs valid.
#[no_mangle]
pub unsafe extern "C" fn tb_shoot(cfg: *const TbConfig, out_csv: *mut *mut c_char, out_json: *mut *mut c_char) -> TbStatus {
    guard(|| {
        let (c, j) = cli::cmd_shoot(config_ref(cfg)?).map_err(lib)?;
        put_string(out_csv, c)?;
        put_string(out_json, j)
    })
}

/// Tangent-graded radial grid in dimension `dim`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tb_grid_new(dim: usize, r_max: f64, n_nodes: usize, scale: f64, out: *mut *mut TbGrid) -> TbStatus {
    guard(|| {
        if out.is_null() {
            return Err((TbStatus::NullPointer, "output pointer is null".into()));
        }
        let g = RadialGrid::build(dim, r_max, n_nodes, Grading::Tangent { scale }).map_err(lib)?;
        *out = Box::into_raw(Box::new(TbGrid { inner: g }));
        Ok(())
    })
}

/// Number of nodes, or 0 for null.
///
/// # Safety
/// `grid` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tb_grid_len(grid: *const TbGrid) -> usize {
    grid.as_ref().map(|g| g.inner.len()).unwrap_or(0)
}

/// Copies up to `cap` node radii into `buf`.
///
/// # Safety
/// `grid` must be a live handle; `buf` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn tb_grid_nodes(grid: *const TbGrid, buf: *mut f64, cap: usize) -> TbStatus {
    guard(|| {
        let g = grid.as_ref().ok_or((TbStatus::NullPointer, "grid is null".into()))?;
        if buf.is_null() {
            return Err((TbStatus::NullPointer, "buffer is null".into()));
        }
        let n = cap.min(g.inner.len());
        ptr::copy_nonoverlapping(g.inner.nodes().as_ptr(), buf, n);
        Ok(())
    })
}

/// Largest relative residual of the ground-state equation on `[r_lo, r_hi]`.
///
/// # Safety
/// `grid` must be a live handle; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn tb_grid_w_residual(grid: *const TbGrid, r_lo: f64, r_hi: f64, out: *mut f64) -> TbStatus {
    guard(|| {
        let g = grid.as_ref().ok_or((TbStatus::NullPointer, "grid is null".into()))?;
        if out.is_null() {
            return Err((TbStatus::NullPointer, "output pointer is null".into()));
        }
        *out = cli::w_residual(&g.inner, r_lo, r_hi).map_err(lib)?;
        Ok(())
    })
}

/// # Safety
/// `grid` must come from `tb_grid_new`; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn tb_grid_free(grid: *mut TbGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}
