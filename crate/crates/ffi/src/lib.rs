//! C ABI for running scenarios. Every function returns a [`QbStatus`];
//! on failure the message is available from [`qb_last_error`]. Handles are
//! opaque and must be released with their `_free` function; strings
//! returned to C are released with [`qb_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use qbench::inference::{chsh_value, ChshSettings};
use qbench::scenario::{self, PartialConfig, RunOutput, ScenarioConfig};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Runtime = 4,
    OutOfRange = 5,
    Panic = 6,
}

/// A resolved scenario configuration.
pub struct QbConfig(ScenarioConfig);

/// Outputs of one scenario run, kept in memory.
pub struct QbRun {
    config: ScenarioConfig,
    output: RunOutput,
    names: Vec<CString>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard<F: FnOnce() -> Result<(), (QbStatus, String)>>(f: F) -> QbStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QbStatus::Ok,
        Ok(Err((status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            QbStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, (QbStatus, String)> {
    if p.is_null() {
        return Err((QbStatus::NullPointer, "null string argument".into()));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| (QbStatus::InvalidUtf8, e.to_string()))
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), (QbStatus, String)> {
    if p.is_null() {
        Err((QbStatus::NullPointer, format!("null {what}")))
    } else {
        Ok(())
    }
}

/// Copy of the calling thread's last error message, or null when the last
/// call succeeded.
#[no_mangle]
pub extern "C" fn qb_last_error() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |c| c.clone().into_raw()))
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn qb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a JSON configuration document and resolves it against defaults.
///
/// # Safety
/// `json` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qb_config_from_json(json: *const c_char, out: *mut *mut QbConfig) -> QbStatus {
    guard(|| {
        non_null(out, "output pointer")?;
        let text = text(json)?;
        let config = PartialConfig::from_json(text)
            .and_then(|p| ScenarioConfig::resolve(&p))
            .map_err(|e| (QbStatus::Config, e.to_string()))?;
        *out = Box::into_raw(Box::new(QbConfig(config)));
        Ok(())
    })
}

/// # Safety
/// `config` must be null or a handle from [`qb_config_from_json`].
#[no_mangle]
pub unsafe extern "C" fn qb_config_free(config: *mut QbConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Runs the scenario on `workers` threads (0 picks the core count). The
/// outputs do not depend on `workers`.
///
/// # Safety
/// `config` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qb_run(config: *const QbConfig, workers: usize, out: *mut *mut QbRun) -> QbStatus {
    guard(|| {
        non_null(config, "config handle")?;
        non_null(out, "output pointer")?;
        let config = (*config).0.clone();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| (QbStatus::Runtime, e.to_string()))?;
        let output = pool
            .install(|| scenario::run(&config))
            .map_err(|e| (QbStatus::Runtime, e.to_string()))?;
        let names = output
            .files
            .iter()
            .map(|f| CString::new(f.name.clone()).expect("file names have no nul bytes"))
            .collect();
        *out = Box::into_raw(Box::new(QbRun { config, output, names }));
        Ok(())
    })
}

/// # Safety
/// `run` must be null or a handle from [`qb_run`].
#[no_mangle]
pub unsafe extern "C" fn qb_run_free(run: *mut QbRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Number of emitted files.
///
/// # Safety
/// `run` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn qb_run_file_count(run: *const QbRun, out: *mut usize) -> QbStatus {
    guard(|| {
        non_null(run, "run handle")?;
        non_null(out, "output pointer")?;
        *out = (*run).output.files.len();
        Ok(())
    })
}

/// Name and contents of file `index`. Both pointers stay valid until the
/// run handle is freed.
///
/// # Safety
/// `run` must be a live handle; the output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qb_run_file(
    run: *const QbRun,
    index: usize,
    name: *mut *const c_char,
    data: *mut *const u8,
    len: *mut usize,
) -> QbStatus {
    guard(|| {
        non_null(run, "run handle")?;
        non_null(name, "name pointer")?;
        non_null(data, "data pointer")?;
        non_null(len, "length pointer")?;
        let r = &*run;
        let f = r
            .output
            .files
            .get(index)
            .ok_or_else(|| (QbStatus::OutOfRange, format!("file index {index} out of range")))?;
        *name = r.names[index].as_ptr();
        *data = f.bytes.as_ptr();
        *len = f.bytes.len();
        Ok(())
    })
}

/// 1 when every claims-suite verdict matched its expectation (always 1 for
/// other scenarios), 0 otherwise.
///
/// # Safety
/// `run` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn qb_run_claims_ok(run: *const QbRun, out: *mut i32) -> QbStatus {
    guard(|| {
        non_null(run, "run handle")?;
        non_null(out, "output pointer")?;
        *out = i32::from((*run).output.claims_ok);
        Ok(())
    })
}

/// Writes every file and `manifest.json` into `dir`.
///
/// # Safety
/// `run` must be a live handle and `dir` a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn qb_run_write(run: *const QbRun, dir: *const c_char) -> QbStatus {
    guard(|| {
        non_null(run, "run handle")?;
        let dir = text(dir)?;
        let r = &*run;
        scenario::write_outputs(&r.config, &r.output, Path::new(dir)).map_err(|e| (QbStatus::Runtime, e.to_string()))?;
        Ok(())
    })
}

/// A shipped JSON schema by name, as a string to release with
/// [`qb_string_free`].
///
/// # Safety
/// `name` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qb_schema(name: *const c_char, out: *mut *mut c_char) -> QbStatus {
    guard(|| {
        non_null(out, "output pointer")?;
        let name = text(name)?;
        let s = scenario::schema(name).ok_or_else(|| (QbStatus::Config, format!("unknown schema `{name}`")))?;
        *out = CString::new(s).expect("schemas have no nul bytes").into_raw();
        Ok(())
    })
}

/// CHSH value of the pair state at beam-splitter angles (a1, a2; b1, b2).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qb_chsh_value(a1: f64, a2: f64, b1: f64, b2: f64, out: *mut f64) -> QbStatus {
    guard(|| {
        non_null(out, "output pointer")?;
        let s = ChshSettings { a: [a1, a2], b: [b1, b2] };
        *out = chsh_value(&s).map_err(|e| (QbStatus::Config, e.to_string()))?;
        Ok(())
    })
}
