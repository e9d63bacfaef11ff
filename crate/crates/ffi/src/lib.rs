//! C interface to `sps-core`.
//!
//! Programs are opaque `SpsProgram` handles created by [`sps_program_parse`]
//! or [`sps_compile`] and released with [`sps_program_free`]. Functions
//! return an [`SpsStatus`]; on failure [`sps_last_error`] describes what
//! went wrong. Strings handed out by the library are released with
//! [`sps_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use sps_core::dsl;
use sps_core::encodings;
use sps_core::program::{PolicyChoice, Program, StrategyMode};

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpsStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not UTF-8.
    InvalidUtf8 = 2,
    /// The source text has syntax or name errors.
    Parse = 3,
    /// Rules or strategy declarations are invalid.
    Build = 4,
    /// The run stopped with an error.
    Run = 5,
    /// A formalism description could not be compiled.
    Compile = 6,
    /// An option value is out of range.
    InvalidArgument = 7,
    /// The library panicked; the handle should not be used again.
    Internal = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpsPolicy {
    /// The program's own setting, or first-match.
    Default = 0,
    FirstMatch = 1,
    Random = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpsStrategy {
    /// The program's own setting, or basic.
    Default = 0,
    Basic = 1,
    Transformed = 2,
}

/// Run options. Zero-initialized options use the program's settings.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SpsRunOptions {
    /// Step limit; 0 keeps the program's own.
    pub max_steps: usize,
    /// Seed for the random policy; used when `has_seed` is true.
    pub seed: u64,
    pub has_seed: bool,
    /// An `SpsPolicy` value.
    pub policy: u32,
    /// An `SpsStrategy` value.
    pub strategy: u32,
}

/// A parsed program.
pub struct SpsProgram {
    program: Program,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Failure(SpsStatus, String);

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SpsStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SpsStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal error");
            SpsStatus::Internal
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(SpsStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(SpsStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn program<'a>(p: *const SpsProgram) -> Result<&'a Program, Failure> {
    p.as_ref().map(|h| &h.program).ok_or_else(|| Failure(SpsStatus::NullArgument, "program is null".into()))
}

unsafe fn give_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(SpsStatus::NullArgument, "output pointer is null".into()));
    }
    let c = CString::new(s).map_err(|_| Failure(SpsStatus::Internal, "output contains a NUL byte".into()))?;
    *out = c.into_raw();
    Ok(())
}

unsafe fn give_program(out: *mut *mut SpsProgram, program: Program) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(SpsStatus::NullArgument, "output pointer is null".into()));
    }
    *out = Box::into_raw(Box::new(SpsProgram { program }));
    Ok(())
}

/// Parses DSL source into a new program handle.
///
/// # Safety
/// `source` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sps_program_parse(source: *const c_char, out: *mut *mut SpsProgram) -> SpsStatus {
    guard(|| {
        if !out.is_null() {
            *out = ptr::null_mut();
        }
        let src = text(source, "source")?;
        let p = dsl::load(src).map_err(|diags| {
            let lines: Vec<String> = diags.iter().map(|d| d.to_string()).collect();
            Failure(SpsStatus::Parse, lines.join("\n"))
        })?;
        give_program(out, p)
    })
}

/// Compiles a TOML description (`kind` is one of `ts`, `tm`, `axioms`,
/// `ca`, `pcfg`) into a new program handle.
///
/// # Safety
/// `kind` and `description` must be NUL-terminated strings and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sps_compile(
    kind: *const c_char,
    description: *const c_char,
    out: *mut *mut SpsProgram,
) -> SpsStatus {
    guard(|| {
        if !out.is_null() {
            *out = ptr::null_mut();
        }
        let kind = text(kind, "kind")?;
        let src = text(description, "description")?;
        let p = encodings::compile(kind, src).map_err(|e| Failure(SpsStatus::Compile, e.to_string()))?;
        give_program(out, p)
    })
}

/// Releases a program handle. Null is ignored.
///
/// # Safety
/// `program` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sps_program_free(program: *mut SpsProgram) {
    if !program.is_null() {
        drop(Box::from_raw(program));
    }
}

/// Validates the program with and without its strategy declarations lowered.
///
/// # Safety
/// `program` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sps_program_check(program: *const SpsProgram) -> SpsStatus {
    guard(|| {
        let p = self::program(program)?;
        for mode in [StrategyMode::Basic, StrategyMode::Transformed] {
            p.build(mode).map_err(|e| Failure(SpsStatus::Build, e.to_string()))?;
        }
        Ok(())
    })
}

/// Renders the program as DSL text.
///
/// # Safety
/// `program` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sps_program_to_text(program: *const SpsProgram, out: *mut *mut c_char) -> SpsStatus {
    guard(|| {
        let p = self::program(program)?;
        give_string(out, dsl::program_to_text(p))
    })
}

/// Options that defer to the program's settings.
#[no_mangle]
pub extern "C" fn sps_run_options_default() -> SpsRunOptions {
    SpsRunOptions { max_steps: 0, seed: 0, has_seed: false, policy: SpsPolicy::Default as u32, strategy: SpsStrategy::Default as u32 }
}

/// Runs the program and writes a JSON object with `state` (canonical
/// key/value strings), `derivation`, `halt` and `trace`.
///
/// # Safety
/// `program` must be a live handle, `options` null or valid, and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sps_program_run(
    program: *const SpsProgram,
    options: *const SpsRunOptions,
    out: *mut *mut c_char,
) -> SpsStatus {
    guard(|| {
        let p = self::program(program)?;
        let o = options.as_ref().copied().unwrap_or_else(|| sps_run_options_default());
        let policy = match o.policy {
            0 => None,
            1 => Some(PolicyChoice::First),
            2 => Some(PolicyChoice::Random),
            n => return Err(Failure(SpsStatus::InvalidArgument, format!("unknown policy {n}"))),
        };
        let strategy = match o.strategy {
            0 => p.settings.strategy.unwrap_or_default(),
            1 => StrategyMode::Basic,
            2 => StrategyMode::Transformed,
            n => return Err(Failure(SpsStatus::InvalidArgument, format!("unknown strategy {n}"))),
        };
        let sps = p.build(strategy).map_err(|e| Failure(SpsStatus::Build, e.to_string()))?;
        let steps = (o.max_steps > 0).then_some(o.max_steps);
        let seed = o.has_seed.then_some(o.seed);
        let res = sps.run(&p.engine_config(steps, seed, policy)).map_err(|e| Failure(SpsStatus::Run, e.to_string()))?;
        let json = serde_json::json!({
            "state": res.state.canonical(),
            "derivation": res.derivation.iter().map(|r| r.to_string()).collect::<Vec<_>>(),
            "halt": res.halt,
            "trace": res.trace,
        });
        give_string(out, json.to_string())
    })
}

/// Message for the last failed call on this thread, or null. Valid until
/// the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn sps_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sps_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn sps_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
