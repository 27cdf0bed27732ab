//! C interface to the eqprox solver.
//!
//! Every fallible function returns an [`EqpxError`]; on failure a message
//! is available from [`eqpx_last_error_message`] on the same thread.
//! Objects are opaque handles released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, c_void, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::sync::{Arc, OnceLock};

use eqprox::library::{self, CatalogEntry, LambdaPolicy};
use eqprox::{Error, Matrix, ProblemInstance, Regularizer, SmoothModel, SolverConfig, SolverReport, Status, SubsolverConfig, Vector};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EqpxError {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Dimension = 3,
    UnknownProblem = 4,
    Parse = 5,
    Io = 6,
    Evaluation = 7,
    DerivativeCheck = 8,
    BufferTooSmall = 9,
    Panic = 10,
    Internal = 11,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EqpxStatus {
    KktPoint = 0,
    InfeasibleStationary = 1,
    MaxIterations = 2,
    SubsolverError = 3,
}

impl From<Status> for EqpxStatus {
    fn from(s: Status) -> Self {
        match s {
            Status::KktPoint => EqpxStatus::KktPoint,
            Status::InfeasibleStationary => EqpxStatus::InfeasibleStationary,
            Status::MaxIterations => EqpxStatus::MaxIterations,
            Status::SubsolverError => EqpxStatus::SubsolverError,
        }
    }
}

/// Solver settings; obtain defaults from [`eqpx_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct EqpxSolverConfig {
    pub alpha0: f64,
    pub tau_init: f64,
    pub kappa_v: f64,
    pub sigma_c: f64,
    pub eps_tau: f64,
    pub xi: f64,
    pub eta: f64,
    pub sigma_u: f64,
    pub max_iterations: usize,
    pub tol_feas: f64,
    pub tol_stat: f64,
    pub isp_feas_floor: f64,
    pub isp_stat_tol: f64,
    pub sub_tol_stat: f64,
    pub sub_tol_feas: f64,
    pub max_inner_iterations: usize,
    pub penalty_rho: f64,
}

impl From<SolverConfig> for EqpxSolverConfig {
    fn from(c: SolverConfig) -> Self {
        Self {
            alpha0: c.alpha0,
            tau_init: c.tau_init,
            kappa_v: c.kappa_v,
            sigma_c: c.sigma_c,
            eps_tau: c.eps_tau,
            xi: c.xi,
            eta: c.eta,
            sigma_u: c.sigma_u,
            max_iterations: c.max_iterations,
            tol_feas: c.tol_feas,
            tol_stat: c.tol_stat,
            isp_feas_floor: c.isp_feas_floor,
            isp_stat_tol: c.isp_stat_tol,
            sub_tol_stat: c.subsolver.sub_tol_stat,
            sub_tol_feas: c.subsolver.sub_tol_feas,
            max_inner_iterations: c.subsolver.max_inner_iterations,
            penalty_rho: c.subsolver.penalty_rho,
        }
    }
}

impl From<&EqpxSolverConfig> for SolverConfig {
    fn from(c: &EqpxSolverConfig) -> Self {
        Self {
            alpha0: c.alpha0,
            tau_init: c.tau_init,
            kappa_v: c.kappa_v,
            sigma_c: c.sigma_c,
            eps_tau: c.eps_tau,
            xi: c.xi,
            eta: c.eta,
            sigma_u: c.sigma_u,
            max_iterations: c.max_iterations,
            tol_feas: c.tol_feas,
            tol_stat: c.tol_stat,
            isp_feas_floor: c.isp_feas_floor,
            isp_stat_tol: c.isp_stat_tol,
            subsolver: SubsolverConfig {
                sub_tol_stat: c.sub_tol_stat,
                sub_tol_feas: c.sub_tol_feas,
                max_inner_iterations: c.max_inner_iterations,
                penalty_rho: c.penalty_rho,
            },
        }
    }
}

/// Writes `f(x)`; returns 0 on success.
pub type EqpxObjectiveFn = Option<unsafe extern "C" fn(x: *const f64, n: usize, f: *mut f64, user_data: *mut c_void) -> c_int>;
/// Writes the `n` gradient entries; returns 0 on success.
pub type EqpxGradientFn = Option<unsafe extern "C" fn(x: *const f64, n: usize, g: *mut f64, user_data: *mut c_void) -> c_int>;
/// Writes the `m` constraint values; returns 0 on success.
pub type EqpxConstraintsFn =
    Option<unsafe extern "C" fn(x: *const f64, n: usize, c: *mut f64, m: usize, user_data: *mut c_void) -> c_int>;
/// Writes the `m x n` Jacobian in row-major order; returns 0 on success.
pub type EqpxJacobianFn =
    Option<unsafe extern "C" fn(x: *const f64, n: usize, jac: *mut f64, m: usize, user_data: *mut c_void) -> c_int>;

/// User-supplied problem callbacks. A nonzero return value marks the
/// evaluation as failed. The callbacks must be safe to call from any
/// thread for as long as the problem handle exists.
#[repr(C)]
#[derive(Clone, Copy)]
pub struct EqpxCallbacks {
    pub objective: EqpxObjectiveFn,
    pub gradient: EqpxGradientFn,
    pub constraints: EqpxConstraintsFn,
    pub jacobian: EqpxJacobianFn,
    pub user_data: *mut c_void,
}

/// Opaque problem handle.
pub struct EqpxProblem {
    problem: ProblemInstance,
    regularizer: Regularizer,
}

/// Opaque result handle.
pub struct EqpxReport {
    report: SolverReport,
}

struct CallbackModel {
    cb: EqpxCallbacks,
    n: usize,
    m: usize,
}

// The caller promises the callbacks and user_data may be used from any thread.
unsafe impl Send for CallbackModel {}
unsafe impl Sync for CallbackModel {}

impl CallbackModel {
    fn fill(&self, len: usize, call: impl FnOnce(*mut f64) -> c_int) -> Vec<f64> {
        let mut out = vec![0.0; len];
        if call(out.as_mut_ptr()) != 0 {
            out.iter_mut().for_each(|v| *v = f64::NAN);
        }
        out
    }
}

impl SmoothModel for CallbackModel {
    fn objective(&self, x: &Vector) -> f64 {
        let f = self.cb.objective.expect("checked at construction");
        let v = self.fill(1, |out| unsafe { f(x.as_ptr(), self.n, out, self.cb.user_data) });
        v[0]
    }

    fn gradient(&self, x: &Vector) -> Vector {
        let f = self.cb.gradient.expect("checked at construction");
        Vector::from_vec(self.fill(self.n, |out| unsafe { f(x.as_ptr(), self.n, out, self.cb.user_data) }))
    }

    fn constraints(&self, x: &Vector) -> Vector {
        let f = self.cb.constraints.expect("checked at construction");
        Vector::from_vec(self.fill(self.m, |out| unsafe { f(x.as_ptr(), self.n, out, self.m, self.cb.user_data) }))
    }

    fn jacobian(&self, x: &Vector) -> Matrix {
        let f = self.cb.jacobian.expect("checked at construction");
        let data = self.fill(self.m * self.n, |out| unsafe { f(x.as_ptr(), self.n, out, self.m, self.cb.user_data) });
        Matrix::from_row_slice(self.m, self.n, &data)
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(code: EqpxError, msg: impl AsRef<str>) -> EqpxError {
    set_last_error(msg.as_ref());
    code
}

fn code_for(err: &Error) -> EqpxError {
    match err {
        Error::Evaluation { .. } => EqpxError::Evaluation,
        Error::Dimension(_) => EqpxError::Dimension,
        Error::DerivativeCheck { .. } => EqpxError::DerivativeCheck,
        Error::UnknownProblem(_) => EqpxError::UnknownProblem,
        Error::Config(_) | Error::DegenerateInput => EqpxError::InvalidArgument,
        Error::Parse { .. } => EqpxError::Parse,
        Error::Io(_) | Error::Csv(_) => EqpxError::Io,
        Error::Factorization | Error::Subsolver { .. } => EqpxError::Internal,
    }
}

fn from_error(err: Error) -> EqpxError {
    fail(code_for(&err), err.to_string())
}

/// Runs `body` with panics converted to [`EqpxError::Panic`].
fn guard(body: impl FnOnce() -> Result<(), EqpxError>) -> EqpxError {
    set_last_error("");
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => EqpxError::Ok,
        Ok(Err(code)) => code,
        Err(_) => fail(EqpxError::Panic, "internal panic"),
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, EqpxError> {
    if p.is_null() {
        return Err(fail(EqpxError::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(EqpxError::InvalidArgument, format!("{what} is not valid UTF-8")))
}

fn policy(lambda: f64) -> LambdaPolicy {
    if lambda > 0.0 {
        LambdaPolicy::Explicit(lambda)
    } else {
        LambdaPolicy::DefaultOffset
    }
}

fn into_handle(entry: &CatalogEntry, reformulate: bool, lambda: f64) -> Result<*mut EqpxProblem, EqpxError> {
    let handle = if reformulate {
        let r = library::reformulate(entry, policy(lambda)).map_err(from_error)?;
        EqpxProblem {
            regularizer: r.regularizer(),
            problem: r.problem,
        }
    } else {
        EqpxProblem {
            problem: entry.base_problem.clone(),
            regularizer: Regularizer::Zero,
        }
    };
    Ok(Box::into_raw(Box::new(handle)))
}

unsafe fn write_out<T>(out: *mut *mut T, value: *mut T) {
    *out = value;
}

/// Defaults of every solver setting.
#[no_mangle]
pub extern "C" fn eqpx_config_default() -> EqpxSolverConfig {
    SolverConfig::default().into()
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn eqpx_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the most recent failure on this thread; empty after a
/// successful call. Valid until the next call into the library.
#[no_mangle]
pub extern "C" fn eqpx_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

fn catalog_names() -> &'static [CString] {
    static NAMES: OnceLock<Vec<CString>> = OnceLock::new();
    NAMES.get_or_init(|| {
        library::list_problems()
            .into_iter()
            .map(|n| CString::new(n).expect("catalog names have no NUL"))
            .collect()
    })
}

#[no_mangle]
pub extern "C" fn eqpx_catalog_count() -> usize {
    catalog_names().len()
}

/// Name of catalog entry `index` (sorted order), or NULL when out of range.
#[no_mangle]
pub extern "C" fn eqpx_catalog_name(index: usize) -> *const c_char {
    catalog_names().get(index).map_or(ptr::null(), |c| c.as_ptr())
}

/// Builds a problem from callbacks with start point `x0` of length `n`.
///
/// # Safety
/// `name` must be a NUL-terminated string, `x0` must point to `n` doubles,
/// and `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn eqpx_problem_new(
    name: *const c_char,
    n: usize,
    m: usize,
    x0: *const f64,
    callbacks: EqpxCallbacks,
    out: *mut *mut EqpxProblem,
) -> EqpxError {
    guard(|| {
        if out.is_null() || x0.is_null() {
            return Err(fail(EqpxError::NullPointer, "x0 and out must not be null"));
        }
        let name = str_arg(name, "name")?;
        let cb = callbacks;
        if cb.objective.is_none() || cb.gradient.is_none() || cb.constraints.is_none() || cb.jacobian.is_none() {
            return Err(fail(EqpxError::NullPointer, "every callback must be set"));
        }
        if n == 0 || m == 0 || m > n {
            return Err(fail(EqpxError::Dimension, format!("need 1 <= m <= n, got n={n}, m={m}")));
        }
        let x0 = Vector::from_column_slice(std::slice::from_raw_parts(x0, n));
        let model = CallbackModel { cb, n, m };
        let problem = ProblemInstance::new(name, n, m, x0, Arc::new(model)).map_err(from_error)?;
        write_out(
            out,
            Box::into_raw(Box::new(EqpxProblem {
                problem,
                regularizer: Regularizer::Zero,
            })),
        );
        Ok(())
    })
}

/// Built-in problem by name. With `reformulate` the problem is solved in
/// its slack form with weight `lambda`, or `||y*||_inf + 10` when
/// `lambda <= 0`.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn eqpx_problem_from_catalog(
    name: *const c_char,
    reformulate: bool,
    lambda: f64,
    out: *mut *mut EqpxProblem,
) -> EqpxError {
    guard(|| {
        if out.is_null() {
            return Err(fail(EqpxError::NullPointer, "out is null"));
        }
        let entry = library::instantiate(str_arg(name, "name")?).map_err(from_error)?;
        write_out(out, into_handle(&entry, reformulate, lambda)?);
        Ok(())
    })
}

/// Problem from a text description file; see [`eqpx_problem_from_catalog`]
/// for `reformulate` and `lambda`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn eqpx_problem_from_file(
    path: *const c_char,
    reformulate: bool,
    lambda: f64,
    out: *mut *mut EqpxProblem,
) -> EqpxError {
    guard(|| {
        if out.is_null() {
            return Err(fail(EqpxError::NullPointer, "out is null"));
        }
        let entry = library::load_problem(Path::new(str_arg(path, "path")?)).map_err(from_error)?;
        write_out(out, into_handle(&entry, reformulate, lambda)?);
        Ok(())
    })
}

/// Replaces the regularizer with `weight * sum |x_i|` over `indices`
/// (zero-based). `count == 0` removes it.
///
/// # Safety
/// `problem` must be a live handle and `indices` must point to `count`
/// values (it may be NULL when `count == 0`).
#[no_mangle]
pub unsafe extern "C" fn eqpx_problem_set_l1(
    problem: *mut EqpxProblem,
    weight: f64,
    indices: *const usize,
    count: usize,
) -> EqpxError {
    guard(|| {
        let p = problem.as_mut().ok_or_else(|| fail(EqpxError::NullPointer, "problem is null"))?;
        if count == 0 {
            p.regularizer = Regularizer::Zero;
            return Ok(());
        }
        if indices.is_null() {
            return Err(fail(EqpxError::NullPointer, "indices is null"));
        }
        let idx = std::slice::from_raw_parts(indices, count);
        if let Some(&bad) = idx.iter().find(|&&i| i >= p.problem.n()) {
            return Err(fail(EqpxError::Dimension, format!("index {bad} out of range for n = {}", p.problem.n())));
        }
        p.regularizer = Regularizer::weighted_l1(weight, idx.iter().copied()).map_err(from_error)?;
        Ok(())
    })
}

/// Number of variables of the problem as solved (including slacks).
///
/// # Safety
/// `problem` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn eqpx_problem_num_variables(problem: *const EqpxProblem) -> usize {
    problem.as_ref().map_or(0, |p| p.problem.n())
}

/// # Safety
/// `problem` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn eqpx_problem_num_constraints(problem: *const EqpxProblem) -> usize {
    problem.as_ref().map_or(0, |p| p.problem.m())
}

/// # Safety
/// `problem` must come from one of the constructors and not be used again.
#[no_mangle]
pub unsafe extern "C" fn eqpx_problem_free(problem: *mut EqpxProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Runs the solver. `config` may be NULL for defaults. A report is
/// produced for every terminated run, including failed ones; inspect
/// [`eqpx_report_status`].
///
/// # Safety
/// `problem` must be a live handle, `config` NULL or valid, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn eqpx_solve(
    problem: *const EqpxProblem,
    config: *const EqpxSolverConfig,
    out: *mut *mut EqpxReport,
) -> EqpxError {
    guard(|| {
        if out.is_null() {
            return Err(fail(EqpxError::NullPointer, "out is null"));
        }
        let p = problem.as_ref().ok_or_else(|| fail(EqpxError::NullPointer, "problem is null"))?;
        let cfg = config.as_ref().map_or_else(SolverConfig::default, SolverConfig::from);
        let report = eqprox::solve(&p.problem, &p.regularizer, &cfg).map_err(from_error)?;
        if let Some(msg) = &report.message {
            set_last_error(msg);
        }
        write_out(out, Box::into_raw(Box::new(EqpxReport { report })));
        Ok(())
    })
}

/// # Safety
/// `report` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn eqpx_report_status(report: *const EqpxReport) -> EqpxStatus {
    report.as_ref().map_or(EqpxStatus::SubsolverError, |r| r.report.status.into())
}

/// # Safety
/// `report` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn eqpx_report_iterations(report: *const EqpxReport) -> usize {
    report.as_ref().map_or(0, |r| r.report.iterations)
}

/// # Safety
/// `report` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn eqpx_report_accepted_count(report: *const EqpxReport) -> usize {
    report.as_ref().map_or(0, |r| r.report.accepted_count)
}

/// Final `f + r`; NaN for a NULL handle.
///
/// # Safety
/// `report` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn eqpx_report_objective(report: *const EqpxReport) -> f64 {
    report.as_ref().map_or(f64::NAN, |r| r.report.final_objective)
}

/// # Safety
/// `report` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn eqpx_report_feasibility(report: *const EqpxReport) -> f64 {
    report.as_ref().map_or(f64::NAN, |r| r.report.final_feasibility)
}

/// # Safety
/// `report` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn eqpx_report_stationarity(report: *const EqpxReport) -> f64 {
    report.as_ref().map_or(f64::NAN, |r| r.report.final_stationarity)
}

/// # Safety
/// `report` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn eqpx_report_wall_time(report: *const EqpxReport) -> f64 {
    report.as_ref().map_or(f64::NAN, |r| r.report.wall_time_seconds)
}

unsafe fn copy_vector(report: *const EqpxReport, pick: fn(&SolverReport) -> &Vector, out: *mut f64, len: usize) -> EqpxError {
    guard(|| {
        let r = report.as_ref().ok_or_else(|| fail(EqpxError::NullPointer, "report is null"))?;
        let v = pick(&r.report);
        if len < v.len() {
            return Err(fail(EqpxError::BufferTooSmall, format!("need {} entries, got {len}", v.len())));
        }
        if out.is_null() {
            return Err(fail(EqpxError::NullPointer, "out is null"));
        }
        ptr::copy_nonoverlapping(v.as_ptr(), out, v.len());
        Ok(())
    })
}

/// Copies the final point (length [`eqpx_problem_num_variables`]).
///
/// # Safety
/// `report` must be a live handle and `out` must have room for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn eqpx_report_x(report: *const EqpxReport, out: *mut f64, len: usize) -> EqpxError {
    copy_vector(report, |r| &r.final_x, out, len)
}

/// Copies the final multiplier estimate (length [`eqpx_problem_num_constraints`]).
///
/// # Safety
/// `report` must be a live handle and `out` must have room for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn eqpx_report_multiplier(report: *const EqpxReport, out: *mut f64, len: usize) -> EqpxError {
    copy_vector(report, |r| &r.final_multiplier, out, len)
}

/// # Safety
/// `report` must come from [`eqpx_solve`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn eqpx_report_free(report: *mut EqpxReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}
