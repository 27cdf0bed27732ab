use std::ffi::{c_int, c_void, CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use eqprox_ffi::*;

unsafe extern "C" fn objective(x: *const f64, _n: usize, f: *mut f64, _u: *mut c_void) -> c_int {
    *f = *x;
    0
}

unsafe extern "C" fn gradient(_x: *const f64, _n: usize, g: *mut f64, _u: *mut c_void) -> c_int {
    *g = 1.0;
    *g.add(1) = 0.0;
    0
}

unsafe extern "C" fn constraints(x: *const f64, _n: usize, c: *mut f64, _m: usize, u: *mut c_void) -> c_int {
    let radius_sq = *(u as *const f64);
    *c = *x * *x + *x.add(1) * *x.add(1) - radius_sq;
    0
}

unsafe extern "C" fn jacobian(x: *const f64, _n: usize, jac: *mut f64, _m: usize, _u: *mut c_void) -> c_int {
    *jac = 2.0 * *x;
    *jac.add(1) = 2.0 * *x.add(1);
    0
}

unsafe extern "C" fn failing_constraints(_x: *const f64, _n: usize, _c: *mut f64, _m: usize, _u: *mut c_void) -> c_int {
    1
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(eqpx_last_error_message()) }.to_string_lossy().into_owned()
}

fn circle_callbacks(radius_sq: &f64) -> EqpxCallbacks {
    EqpxCallbacks {
        objective: Some(objective),
        gradient: Some(gradient),
        constraints: Some(constraints),
        jacobian: Some(jacobian),
        user_data: radius_sq as *const f64 as *mut c_void,
    }
}

#[test]
fn callback_problem_solves() {
    let radius_sq = 4.0;
    let name = CString::new("circle").unwrap();
    let x0 = [1.0, 1.0];
    let mut problem = ptr::null_mut();
    unsafe {
        assert_eq!(eqpx_problem_new(name.as_ptr(), 2, 1, x0.as_ptr(), circle_callbacks(&radius_sq), &mut problem), EqpxError::Ok);
        assert_eq!(eqpx_problem_num_variables(problem), 2);
        assert_eq!(eqpx_problem_num_constraints(problem), 1);
        let mut report = ptr::null_mut();
        assert_eq!(eqpx_solve(problem, ptr::null(), &mut report), EqpxError::Ok);
        assert_eq!(eqpx_report_status(report), EqpxStatus::KktPoint);
        let mut x = [0.0; 2];
        assert_eq!(eqpx_report_x(report, x.as_mut_ptr(), 2), EqpxError::Ok);
        assert!((x[0] + 2.0).abs() < 1e-5 && x[1].abs() < 1e-5, "{x:?}");
        let mut y = [0.0; 1];
        assert_eq!(eqpx_report_multiplier(report, y.as_mut_ptr(), 1), EqpxError::Ok);
        assert!((y[0] + 0.25).abs() < 1e-6);
        assert!((eqpx_report_objective(report) + 2.0).abs() < 1e-6);
        assert!(eqpx_report_feasibility(report) <= 1e-6);
        assert!(eqpx_report_stationarity(report) <= 1e-6);
        assert!(eqpx_report_iterations(report) >= eqpx_report_accepted_count(report));
        assert!(eqpx_report_wall_time(report) >= 0.0);

        assert_eq!(eqpx_report_x(report, x.as_mut_ptr(), 1), EqpxError::BufferTooSmall);
        assert!(last_error().contains("need 2"));
        eqpx_report_free(report);
        eqpx_problem_free(problem);
    }
}

#[test]
fn l1_regularizer_on_callback_problem() {
    // min x1 + 0.3 |x2| on the circle: the regularizer keeps x2 at zero
    let radius_sq = 4.0;
    let name = CString::new("circle-l1").unwrap();
    let x0 = [1.0, 1.0];
    let mut problem = ptr::null_mut();
    unsafe {
        assert_eq!(eqpx_problem_new(name.as_ptr(), 2, 1, x0.as_ptr(), circle_callbacks(&radius_sq), &mut problem), EqpxError::Ok);
        let idx = [1usize];
        assert_eq!(eqpx_problem_set_l1(problem, 0.3, idx.as_ptr(), 1), EqpxError::Ok);
        let bad = [5usize];
        assert_eq!(eqpx_problem_set_l1(problem, 0.3, bad.as_ptr(), 1), EqpxError::Dimension);
        assert_eq!(eqpx_problem_set_l1(problem, -1.0, idx.as_ptr(), 1), EqpxError::InvalidArgument);
        let mut report = ptr::null_mut();
        assert_eq!(eqpx_solve(problem, ptr::null(), &mut report), EqpxError::Ok);
        assert_eq!(eqpx_report_status(report), EqpxStatus::KktPoint);
        let mut x = [0.0; 2];
        eqpx_report_x(report, x.as_mut_ptr(), 2);
        assert!((x[0] + 2.0).abs() < 1e-6);
        assert_eq!(x[1], 0.0);
        eqpx_report_free(report);
        eqpx_problem_free(problem);
    }
}

#[test]
fn failing_callback_gives_error_status() {
    let radius_sq = 4.0;
    let mut cb = circle_callbacks(&radius_sq);
    cb.constraints = Some(failing_constraints);
    let name = CString::new("broken").unwrap();
    let x0 = [1.0, 1.0];
    let mut problem = ptr::null_mut();
    unsafe {
        assert_eq!(eqpx_problem_new(name.as_ptr(), 2, 1, x0.as_ptr(), cb, &mut problem), EqpxError::Ok);
        let mut report = ptr::null_mut();
        assert_eq!(eqpx_solve(problem, ptr::null(), &mut report), EqpxError::Ok);
        assert_eq!(eqpx_report_status(report), EqpxStatus::SubsolverError);
        assert!(last_error().contains("constraint"), "{}", last_error());
        eqpx_report_free(report);
        eqpx_problem_free(problem);
    }
}

#[test]
fn catalog_and_file_constructors() {
    let count = eqpx_catalog_count();
    assert!(count >= 12);
    let names: Vec<String> = (0..count)
        .map(|i| unsafe { CStr::from_ptr(eqpx_catalog_name(i)) }.to_string_lossy().into_owned())
        .collect();
    assert!(names.contains(&"rosenbrock-eq".to_string()));
    assert!(eqpx_catalog_name(count).is_null());

    let name = CString::new("hs48-affine").unwrap();
    let mut problem = ptr::null_mut();
    unsafe {
        assert_eq!(eqpx_problem_from_catalog(name.as_ptr(), true, 0.0, &mut problem), EqpxError::Ok);
        assert_eq!(eqpx_problem_num_variables(problem), 7);
        let mut cfg = eqpx_config_default();
        assert_eq!(cfg.alpha0, 10.0);
        cfg.max_iterations = 500;
        let mut report = ptr::null_mut();
        assert_eq!(eqpx_solve(problem, &cfg, &mut report), EqpxError::Ok);
        assert_eq!(eqpx_report_status(report), EqpxStatus::KktPoint);
        let mut z = [1.0; 7];
        eqpx_report_x(report, z.as_mut_ptr(), 7);
        assert_eq!(&z[5..], &[0.0, 0.0]);
        eqpx_report_free(report);

        cfg.xi = 2.0;
        assert_eq!(eqpx_solve(problem, &cfg, &mut report), EqpxError::InvalidArgument);
        assert!(last_error().contains("xi"));
        eqpx_problem_free(problem);
    }

    let dir = std::env::temp_dir().join(format!("eqprox-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let file = dir.join("line.txt");
    std::fs::write(&file, "name = line\nn = 2\nx0 = 0, 0\nobjective = (x1 - 1)^2 + x2^2\nconstraint = x1 + x2 - 1\n").unwrap();
    let path = CString::new(file.to_str().unwrap()).unwrap();
    unsafe {
        assert_eq!(eqpx_problem_from_file(path.as_ptr(), false, 0.0, &mut problem), EqpxError::Ok);
        let mut report = ptr::null_mut();
        assert_eq!(eqpx_solve(problem, ptr::null(), &mut report), EqpxError::Ok);
        let mut x = [0.0; 2];
        eqpx_report_x(report, x.as_mut_ptr(), 2);
        assert!((x[0] - 1.0).abs() < 1e-6 && x[1].abs() < 1e-6);
        eqpx_report_free(report);
        eqpx_problem_free(problem);

        let missing = CString::new("/nonexistent/problem.txt").unwrap();
        assert_eq!(eqpx_problem_from_file(missing.as_ptr(), true, 0.0, &mut problem), EqpxError::Io);
        std::fs::write(&file, "name = bad\n").unwrap();
        assert_eq!(eqpx_problem_from_file(path.as_ptr(), true, 0.0, &mut problem), EqpxError::Parse);
    }
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn argument_errors() {
    let radius_sq = 4.0;
    let name = CString::new("p").unwrap();
    let x0 = [1.0, 1.0];
    let mut problem = ptr::null_mut();
    unsafe {
        assert_eq!(eqpx_problem_new(ptr::null(), 2, 1, x0.as_ptr(), circle_callbacks(&radius_sq), &mut problem), EqpxError::NullPointer);
        assert_eq!(eqpx_problem_new(name.as_ptr(), 2, 3, x0.as_ptr(), circle_callbacks(&radius_sq), &mut problem), EqpxError::Dimension);
        let mut cb = circle_callbacks(&radius_sq);
        cb.jacobian = None;
        assert_eq!(eqpx_problem_new(name.as_ptr(), 2, 1, x0.as_ptr(), cb, &mut problem), EqpxError::NullPointer);
        let nan = [f64::NAN, 1.0];
        assert_eq!(eqpx_problem_new(name.as_ptr(), 2, 1, nan.as_ptr(), circle_callbacks(&radius_sq), &mut problem), EqpxError::Evaluation);
        let unknown = CString::new("nope").unwrap();
        assert_eq!(eqpx_problem_from_catalog(unknown.as_ptr(), true, 0.0, &mut problem), EqpxError::UnknownProblem);
        assert!(last_error().contains("nope"));
        let mut report = ptr::null_mut();
        assert_eq!(eqpx_solve(ptr::null(), ptr::null(), &mut report), EqpxError::NullPointer);
        assert_eq!(eqpx_report_status(ptr::null()), EqpxStatus::SubsolverError);
        assert!(eqpx_report_objective(ptr::null()).is_nan());
        eqpx_problem_free(ptr::null_mut());
        eqpx_report_free(ptr::null_mut());
    }
    let version = unsafe { CStr::from_ptr(eqpx_version()) };
    assert_eq!(version.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

fn find_static_lib() -> Option<PathBuf> {
    // tests/../../../target/<profile>/libeqprox_ffi.a, next to the test binary's parent
    let exe = std::env::current_exe().ok()?;
    let profile_dir = exe.parent()?.parent()?;
    let lib = profile_dir.join("libeqprox_ffi.a");
    lib.exists().then_some(lib)
}

/// Compiles a C program against the generated header and the static
/// library. Skipped when no C compiler is available.
#[test]
fn c_program_links_and_runs() {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = manifest.join("include").join("eqprox.h");
    assert!(header.exists(), "header is generated by the build script");
    let Some(lib) = find_static_lib() else {
        eprintln!("static library not found; skipping");
        return;
    };
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("no C compiler; skipping");
        return;
    }
    let out_dir = std::env::temp_dir().join(format!("eqprox-c-{}", std::process::id()));
    std::fs::create_dir_all(&out_dir).unwrap();
    let exe = out_dir.join("smoke");
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Wextra", "-Werror", "-I"])
        .arg(manifest.join("include"))
        .arg(manifest.join("tests").join("c").join("smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let run = Command::new(&exe).output().unwrap();
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(run.status.success(), "{stdout}{}", String::from_utf8_lossy(&run.stderr));
    assert!(stdout.contains("status=0"));
    std::fs::remove_dir_all(out_dir).ok();
}
