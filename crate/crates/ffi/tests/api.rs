use std::ffi::{c_char, CStr, CString};
use std::ptr;

use sps_ffi::*;

const DOOR: &str = "concept Door = {door_1, door_2};
concept StatusV = {o, c};
concept Action = {};
operator Status(Door) -> StatusV;
constructor Close(Door) -> Action;
operator Do(Action) -> Bool;
schema close_open: Status(x) = o, Do(Close(x)) -> Status(x) = c where x: Door;
init { Status(door_1) = o; Status(door_2) = c; }
events { [Do(Close(door_1))] }
";

fn last_error() -> String {
    let p = sps_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

unsafe fn take(s: *mut c_char) -> String {
    let out = CStr::from_ptr(s).to_string_lossy().into_owned();
    sps_string_free(s);
    out
}

fn parse(src: &str) -> (SpsStatus, *mut SpsProgram) {
    let c = CString::new(src).unwrap();
    let mut p = ptr::null_mut();
    let status = unsafe { sps_program_parse(c.as_ptr(), &mut p) };
    (status, p)
}

#[test]
fn parse_check_run() {
    let (status, p) = parse(DOOR);
    assert_eq!(status, SpsStatus::Ok);
    assert!(sps_last_error().is_null());
    unsafe {
        assert_eq!(sps_program_check(p), SpsStatus::Ok);
        let mut out = ptr::null_mut();
        assert_eq!(sps_program_run(p, ptr::null(), &mut out), SpsStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
        assert_eq!(v["state"]["Status(door_1)"], "c");
        assert_eq!(v["derivation"][0], "close_open[x=door_1]");
        assert_eq!(v["halt"], "quiescent");
        assert_eq!(v["trace"].as_array().unwrap().len(), 2);

        let mut text = ptr::null_mut();
        assert_eq!(sps_program_to_text(p, &mut text), SpsStatus::Ok);
        let (again, q) = parse(&take(text));
        assert_eq!(again, SpsStatus::Ok);
        sps_program_free(q);
        sps_program_free(p);
    }
}

#[test]
fn run_options() {
    let (_, p) = parse("operator t -> Real; rule tick: -> t = t + 1; init { t = 0; }");
    unsafe {
        let mut o = sps_run_options_default();
        o.max_steps = 4;
        let mut out = ptr::null_mut();
        assert_eq!(sps_program_run(p, &o, &mut out), SpsStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
        assert_eq!(v["state"]["t"], "4");
        assert_eq!(v["halt"], "step-limit");

        o.policy = 9;
        assert_eq!(sps_program_run(p, &o, &mut out), SpsStatus::InvalidArgument);
        assert!(last_error().contains("policy"));
        sps_program_free(p);
    }
}

#[test]
fn errors_have_codes_and_messages() {
    let (status, p) = parse("operator Status(Door) -> StatusV;");
    assert_eq!(status, SpsStatus::Parse);
    assert!(p.is_null());
    assert!(last_error().contains("Door"));

    let cycle = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../core/fixtures/invalid/preference_cycle.sps")).unwrap();
    let (status, p) = parse(&cycle);
    assert_eq!(status, SpsStatus::Ok);
    unsafe {
        assert_eq!(sps_program_check(p), SpsStatus::Build);
        assert!(last_error().contains("cycle"));
        sps_program_free(p);
    }

    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(sps_program_check(ptr::null()), SpsStatus::NullArgument);
        assert_eq!(sps_program_run(ptr::null(), ptr::null(), &mut out), SpsStatus::NullArgument);
        assert_eq!(sps_program_parse(ptr::null(), &mut ptr::null_mut()), SpsStatus::NullArgument);
        let bad = [0xffu8, 0];
        let mut p = ptr::null_mut();
        assert_eq!(sps_program_parse(bad.as_ptr().cast(), &mut p), SpsStatus::InvalidUtf8);
        sps_program_free(ptr::null_mut());
        sps_string_free(ptr::null_mut());
    }
}

#[test]
fn run_errors_are_reported() {
    let (_, p) = parse("concept V = {a}; operator x -> V; operator t -> Real; rule r: -> x = b; individual b; init { t = 0; }");
    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(sps_program_run(p, ptr::null(), &mut out), SpsStatus::Run);
        assert!(last_error().contains("outside"), "{}", last_error());
        sps_program_free(p);
    }
}

#[test]
fn compile_descriptions() {
    let kind = CString::new("pcfg").unwrap();
    let desc = CString::new(
        "nonterminals = [\"S\"]\nterminals = [\"a\", \"b\"]\nstart = \"S\"\nmax_len = 4\n\
         [[productions]]\nlhs = \"S\"\nrhs = [\"a\", \"S\"]\np = 0.4\n\
         [[productions]]\nlhs = \"S\"\nrhs = [\"b\"]\np = 0.6\n",
    )
    .unwrap();
    let mut p = ptr::null_mut();
    unsafe {
        assert_eq!(sps_compile(kind.as_ptr(), desc.as_ptr(), &mut p), SpsStatus::Ok);
        assert_eq!(sps_program_check(p), SpsStatus::Ok);
        sps_program_free(p);
        let other = CString::new("lisp").unwrap();
        assert_eq!(sps_compile(other.as_ptr(), desc.as_ptr(), &mut p), SpsStatus::Compile);
        assert!(p.is_null());
        assert!(last_error().contains("unknown kind"));
    }
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(sps_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
