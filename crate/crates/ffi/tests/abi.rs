use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use xikernel_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = xk_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

fn take_string(p: *mut c_char) -> String {
    assert!(!p.is_null());
    let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned();
    unsafe { xk_string_free(p) };
    s
}

const DISC: &str = r#"{"radii":[1.0]}"#;
const ZERO_WEIGHT: &str = r#"{"zArity":1,"terms":[]}"#;
const DIRAC: &str = r#"{"arity":1,"terms":[{"alpha":[0],"re":1.0}]}"#;

fn model(domain: &str, weight: &str, degree: usize) -> (XkStatus, *mut XkModel) {
    let mut m = ptr::null_mut();
    let st = unsafe { xk_model_new(c(domain).as_ptr(), c(weight).as_ptr(), degree, false, &mut m) };
    (st, m)
}

#[test]
fn kernel_of_unit_disc() {
    let (st, m) = model(DISC, ZERO_WEIGHT, 40);
    assert_eq!(st, XkStatus::Ok);
    assert!(xk_last_error().is_null());
    let mut rank = 0usize;
    assert_eq!(unsafe { xk_model_rank(m, &mut rank) }, XkStatus::Ok);
    assert_eq!(rank, 41);
    for (x, want) in [
        (0.0, 1.0 / std::f64::consts::PI),
        (0.3, 1.0 / (std::f64::consts::PI * 0.8281)),
    ] {
        let mut k = 0.0;
        let st = unsafe { xk_model_kernel(m, c(DIRAC).as_ptr(), &x, &0.0, 1, &mut k) };
        assert_eq!(st, XkStatus::Ok);
        assert!((k - want).abs() < 1e-6 * want, "{k} vs {want}");
    }
    unsafe { xk_model_free(m) };
}

#[test]
fn error_codes_and_messages() {
    let (st, m) = model("{not json", ZERO_WEIGHT, 4);
    assert_eq!(st, XkStatus::Parse);
    assert!(m.is_null());
    assert!(last_error().starts_with("json"));

    let (st, _) = model(
        DISC,
        r#"{"zArity":1,"terms":[{"variant":"logMonomial","c":[50.0]}]}"#,
        5,
    );
    assert_eq!(st, XkStatus::EmptyModel);

    let (st, m) = model(DISC, ZERO_WEIGHT, 4);
    assert_eq!(st, XkStatus::Ok);
    let mut k = 0.0;
    let st = unsafe { xk_model_kernel(m, c(DIRAC).as_ptr(), &1.5, &0.0, 1, &mut k) };
    assert_eq!(st, XkStatus::OutsideDomain);
    let st = unsafe { xk_model_kernel(m, c(DIRAC).as_ptr(), ptr::null(), ptr::null(), 1, &mut k) };
    assert_eq!(st, XkStatus::NullPointer);
    let two = r#"{"arity":2,"terms":[{"alpha":[0,0],"re":1.0}]}"#;
    let st = unsafe { xk_model_kernel(m, c(two).as_ptr(), &0.0, &0.0, 1, &mut k) };
    assert_ne!(st, XkStatus::Ok);
    assert!(!last_error().is_empty());
    unsafe { xk_model_free(m) };

    assert_eq!(unsafe { xk_model_rank(ptr::null(), &mut 0) }, XkStatus::NullPointer);
    unsafe {
        xk_model_free(ptr::null_mut());
        xk_ideal_free(ptr::null_mut());
        xk_string_free(ptr::null_mut());
    }
}

#[test]
fn errors_are_per_thread() {
    let (st, _) = model("{", ZERO_WEIGHT, 1);
    assert_eq!(st, XkStatus::Parse);
    std::thread::spawn(|| assert!(xk_last_error().is_null()))
        .join()
        .unwrap();
    assert!(!xk_last_error().is_null());
}

const PINCHED: &str = r#"{"zArity":2,"wArity":1,"order":2,"generators":[
    [{"alpha":[1,0],"beta":[0],"re":1.0},{"alpha":[0,1],"beta":[1],"re":-1.0}]]}"#;

#[test]
fn ideal_handle_round_trip() {
    let mut h = ptr::null_mut();
    let grid_re = [0.5, -0.25];
    let grid_im = [0.0, 0.1];
    let st = unsafe {
        xk_ideal_new(
            c(PINCHED).as_ptr(),
            c(DISC).as_ptr(),
            grid_re.as_ptr(),
            grid_im.as_ptr(),
            2,
            7,
            &mut h,
        )
    };
    assert_eq!(
        st,
        XkStatus::Ok,
        "{}",
        if st == XkStatus::Ok {
            String::new()
        } else {
            last_error()
        }
    );
    let mut rank = 0usize;
    assert_eq!(unsafe { xk_ideal_rank(h, &mut rank) }, XkStatus::Ok);
    assert_eq!(rank, 1);

    let mut in_u = false;
    assert_eq!(
        unsafe { xk_ideal_in_regular_set(h, &0.5, &0.0, 1, &mut in_u) },
        XkStatus::Ok
    );
    assert!(in_u);

    // At w = 0.5 the fiber generator is z1 − 0.5 z2.
    let mut yes = false;
    let member = r#"{"arity":2,"terms":[{"exp":[1,0],"re":2.0},{"exp":[0,1],"re":-1.0}]}"#;
    assert_eq!(
        unsafe { xk_ideal_contains(h, &0.5, &0.0, 1, c(member).as_ptr(), &mut yes) },
        XkStatus::Ok
    );
    assert!(yes);
    let outsider = r#"{"arity":2,"terms":[{"exp":[1,0],"re":1.0}]}"#;
    assert_eq!(
        unsafe { xk_ideal_contains(h, &0.5, &0.0, 1, c(outsider).as_ptr(), &mut yes) },
        XkStatus::Ok
    );
    assert!(!yes);

    let mut s = ptr::null_mut();
    assert_eq!(unsafe { xk_ideal_to_json(h, &mut s) }, XkStatus::Ok);
    let v: serde_json::Value = serde_json::from_str(&take_string(s)).unwrap();
    assert_eq!(v["annihilator"]["rank"].as_u64(), Some(1));
    assert_eq!(v["functionals"].as_array().unwrap().len(), 2);
    unsafe { xk_ideal_free(h) };
}

#[test]
fn run_config_matches_cli_artifacts() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/c6_lambda_divisor.json");
    let cfg = std::fs::read_to_string(path).unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { xk_run_config(c(&cfg).as_ptr(), ptr::null(), &mut s) },
        XkStatus::Ok
    );
    let v: serde_json::Value = serde_json::from_str(&take_string(s)).unwrap();
    assert_eq!(v["command"], "lambda");
    assert_eq!(v["failed"], false);
    let lambda: serde_json::Value = serde_json::from_str(v["artifacts"]["lambda.json"].as_str().unwrap()).unwrap();
    assert_eq!(lambda["lambdaGrid"], serde_json::json!([[[0.0, 0.0]]]));

    let bad = r#"{"command":"kernel","nope":true}"#;
    assert_eq!(unsafe { xk_run_config(c(bad).as_ptr(), &3, &mut s) }, XkStatus::Parse);
    assert!(s.is_null());
}

#[test]
fn version_is_set() {
    let v = unsafe { CStr::from_ptr(xk_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export_and_compiles() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(dir.join("include/xikernel.h")).unwrap();
    let src = std::fs::read_to_string(dir.join("src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .split("extern \"C\" fn ")
        .skip(1)
        .map(|s| s.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 12);
    for f in exports {
        assert!(header.contains(&format!("{f}(")), "{f} missing from header");
    }
    for compiler in [("cc", "c"), ("c++", "c++")] {
        let Ok(o) = Command::new(compiler.0)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", compiler.1])
            .arg(dir.join("include/xikernel.h"))
            .output()
        else {
            eprintln!("{} not available; skipping", compiler.0);
            continue;
        };
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn c_program_links_against_static_library() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    // tests run from target/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    let lib = exe.parent().unwrap().parent().unwrap().join("libxikernel_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; skipping", lib.display());
        return;
    }
    let tmp = tempfile::tempdir().unwrap();
    let bin = tmp.path().join("smoke");
    let Ok(o) = Command::new("cc")
        .arg(dir.join("examples/smoke.c"))
        .arg("-I")
        .arg(dir.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .output()
    else {
        eprintln!("cc not available; skipping");
        return;
    };
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let run = Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("K = 0.318309886"));
}
