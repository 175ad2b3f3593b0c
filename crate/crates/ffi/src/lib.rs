//! C interface to the bottleneck solver: opaque handles over the core
//! types, JSON constructors, and flat status codes.
//!
//! Conventions at the boundary: strings are NUL-terminated UTF-8; every
//! object or string a call hands out has a matching `*_free` function;
//! pointer arguments must be valid for the call but are always checked
//! for NULL; fallible calls return a [`GqabStatus`] and leave a
//! human-readable message behind [`gqab_last_error`] on failure. Handles
//! are not synchronized, so share them across threads only behind a lock.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use libc::c_char;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

use gqab::bottleneck::IbProblem;
use gqab::io::{
    density_from_json, density_to_json, problem_from_json, problem_to_json, run_trace_csv,
};
use gqab::linop::DensityMatrix;
use gqab::mixture::e_project;
use gqab::solver::{self, RunTrace, Termination};
use gqab::{Error, SolverConfig};

/// Outcome class of a fallible call. Anything other than `Ok` stores a
/// message retrievable with `gqab_last_error`.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GqabStatus {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was NULL.
    NullPointer = 1,
    /// Malformed JSON, bad parameters, or operands of the wrong shape.
    InvalidInput = 2,
    /// The iteration hit a certified-descent violation or another
    /// numerical breakdown.
    NumericalFailure = 3,
    /// An inner projection ran out of iterations before its tolerance.
    NoConvergence = 4,
    /// A panic was caught at the boundary; the handle state is unharmed
    /// but the result is unusable.
    Panic = 5,
}

/// A bottleneck instance: source, relevance channel, weights, memory
/// dimension, and the induced constraint family.
pub struct GqabProblem(IbProblem);

/// A density matrix, usually a member of a problem's constraint family.
pub struct GqabState(DensityMatrix);

/// Per-iterate history of a solver run; owns the final state.
pub struct GqabTrace(RunTrace);

/// Solver tolerances and iteration limits. Obtain defaults from
/// `gqab_solver_options_default` and override selectively.
#[repr(C)]
#[derive(Clone, Copy)]
pub struct GqabSolverOptions {
    /// Curvature weight of the fixed-point map; must be positive, and
    /// descent is certified when it is at least the compression weight.
    pub gamma: f64,
    /// Relative objective-change threshold of the stopping rule.
    pub tol_obj: f64,
    /// Outer iteration cap.
    pub max_iters: usize,
    /// Gradient-norm threshold of the inner projection.
    pub tol_proj: f64,
    /// Projection iteration cap.
    pub max_proj_iters: usize,
    /// Eigenvalue floor applied before operator logarithms.
    pub eps_clamp: f64,
}

/// Static facts about a problem.
#[repr(C)]
#[derive(Clone, Copy)]
pub struct GqabProblemInfo {
    /// Compression weight.
    pub alpha: f64,
    /// Relevance weight.
    pub beta: f64,
    /// Memory dimension.
    pub dim_t: usize,
    /// Total source dimension.
    pub dim_x: usize,
    /// Total channel-output dimension.
    pub dim_y: usize,
}

/// Objective value split into its entropic parts at a family member.
#[repr(C)]
#[derive(Clone, Copy)]
pub struct GqabDecomposition {
    /// Mutual information between memory and source, in nats.
    pub i_tx: f64,
    /// Memory entropy, in nats.
    pub h_t: f64,
    /// Mutual information between memory and channel output, in nats.
    pub i_ty: f64,
    /// alpha * i_tx + (1 - alpha) * h_t - beta * i_ty.
    pub total: f64,
}

/// One row of a run trace.
#[repr(C)]
#[derive(Clone, Copy)]
pub struct GqabIterRecord {
    /// 1-based iterate index.
    pub iter: usize,
    /// Objective at this iterate.
    pub objective: f64,
    /// Constraint residual at this iterate.
    pub residual: f64,
    /// Relative entropy to the next iterate; NaN on the last row.
    pub step_relent: f64,
    /// Projection steps spent producing the next iterate.
    pub proj_iters: usize,
    /// Whether the descent certificate held on the step leaving here.
    pub monotone_ok: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let owned = CString::new(message.replace('\0', " ")).expect("NULs stripped");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = owned);
}

fn classify(err: &Error) -> GqabStatus {
    match err {
        Error::MonotonicityViolated { .. }
        | Error::UndefinedAtEigenvalue(_)
        | Error::ImaginaryResidue(_) => GqabStatus::NumericalFailure,
        Error::ProjectionDidNotConverge { .. } => GqabStatus::NoConvergence,
        _ => GqabStatus::InvalidInput,
    }
}

fn fail(err: &Error) -> GqabStatus {
    set_error(&err.to_string());
    classify(err)
}

fn null_error(name: &str) -> GqabStatus {
    set_error(&format!("argument {name} is NULL"));
    GqabStatus::NullPointer
}

/// Runs the body behind a panic barrier so unwinding never crosses into C.
fn guarded(body: impl FnOnce() -> GqabStatus) -> GqabStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            GqabStatus::Panic
        }
    }
}

macro_rules! need {
    ($ptr:expr, $name:literal) => {
        match unsafe { $ptr.as_ref() } {
            Some(reference) => reference,
            None => return null_error($name),
        }
    };
}

macro_rules! need_mut {
    ($ptr:expr, $name:literal) => {
        match unsafe { $ptr.as_mut() } {
            Some(reference) => reference,
            None => return null_error($name),
        }
    };
}

fn read_str<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, GqabStatus> {
    if ptr.is_null() {
        return Err(null_error(name));
    }
    unsafe { CStr::from_ptr(ptr) }.to_str().map_err(|_| {
        set_error(&format!("argument {name} is not valid UTF-8"));
        GqabStatus::InvalidInput
    })
}

fn export_string(text: String) -> Result<*mut c_char, GqabStatus> {
    CString::new(text).map(CString::into_raw).map_err(|_| {
        set_error("output contained a NUL byte");
        GqabStatus::InvalidInput
    })
}

fn config_of(options: *const GqabSolverOptions) -> SolverConfig {
    match unsafe { options.as_ref() } {
        None => SolverConfig::default(),
        Some(o) => SolverConfig {
            gamma: o.gamma,
            tol_obj: o.tol_obj,
            max_iters: o.max_iters,
            tol_proj: o.tol_proj,
            max_proj_iters: o.max_proj_iters,
            eps_clamp: o.eps_clamp,
        },
    }
}

/// Version of the linked library, as a static string; do not free.
#[no_mangle]
pub extern "C" fn gqab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message of the last failure on the calling thread, empty when none.
/// The pointer stays valid until the thread's next failing gqab call.
#[no_mangle]
pub extern "C" fn gqab_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Frees a string returned by this library. NULL is ignored.
#[no_mangle]
pub extern "C" fn gqab_string_free(text: *mut c_char) {
    if !text.is_null() {
        drop(unsafe { CString::from_raw(text) });
    }
}

/// Default tolerances and iteration limits.
#[no_mangle]
pub extern "C" fn gqab_solver_options_default() -> GqabSolverOptions {
    let d = SolverConfig::default();
    GqabSolverOptions {
        gamma: d.gamma,
        tol_obj: d.tol_obj,
        max_iters: d.max_iters,
        tol_proj: d.tol_proj,
        max_proj_iters: d.max_proj_iters,
        eps_clamp: d.eps_clamp,
    }
}

/// Builds a problem from its JSON description: source density, Kraus
/// channel, weights, and memory dimension.
#[no_mangle]
pub extern "C" fn gqab_problem_from_json(
    json: *const c_char,
    out: *mut *mut GqabProblem,
) -> GqabStatus {
    guarded(|| {
        let out = need_mut!(out, "out");
        let text = match read_str(json, "json") {
            Ok(t) => t,
            Err(status) => return status,
        };
        match problem_from_json(text) {
            Ok(problem) => {
                *out = Box::into_raw(Box::new(GqabProblem(problem)));
                GqabStatus::Ok
            }
            Err(err) => fail(&err),
        }
    })
}

/// Serializes a problem back to JSON; free the string with
/// `gqab_string_free`.
#[no_mangle]
pub extern "C" fn gqab_problem_to_json(
    problem: *const GqabProblem,
    out: *mut *mut c_char,
) -> GqabStatus {
    guarded(|| {
        let problem = need!(problem, "problem");
        let out = need_mut!(out, "out");
        match export_string(problem_to_json(&problem.0)) {
            Ok(text) => {
                *out = text;
                GqabStatus::Ok
            }
            Err(status) => status,
        }
    })
}

/// Reports a problem's weights and dimensions.
#[no_mangle]
pub extern "C" fn gqab_problem_info(
    problem: *const GqabProblem,
    out: *mut GqabProblemInfo,
) -> GqabStatus {
    guarded(|| {
        let problem = need!(problem, "problem");
        let out = need_mut!(out, "out");
        let p = &problem.0;
        *out = GqabProblemInfo {
            alpha: p.alpha(),
            beta: p.beta(),
            dim_t: p.dim_t(),
            dim_x: p.rho_x().dims().iter().product(),
            dim_y: p.channel().out_dims().iter().product(),
        };
        GqabStatus::Ok
    })
}

/// Frees a problem handle. NULL is ignored.
#[no_mangle]
pub extern "C" fn gqab_problem_free(problem: *mut GqabProblem) {
    if !problem.is_null() {
        drop(unsafe { Box::from_raw(problem) });
    }
}

/// Parses a density matrix from JSON.
#[no_mangle]
pub extern "C" fn gqab_density_from_json(
    json: *const c_char,
    out: *mut *mut GqabState,
) -> GqabStatus {
    guarded(|| {
        let out = need_mut!(out, "out");
        let text = match read_str(json, "json") {
            Ok(t) => t,
            Err(status) => return status,
        };
        match density_from_json(text) {
            Ok(state) => {
                *out = Box::into_raw(Box::new(GqabState(state)));
                GqabStatus::Ok
            }
            Err(err) => fail(&err),
        }
    })
}

/// Serializes a state to JSON; free the string with `gqab_string_free`.
#[no_mangle]
pub extern "C" fn gqab_density_to_json(
    state: *const GqabState,
    out: *mut *mut c_char,
) -> GqabStatus {
    guarded(|| {
        let state = need!(state, "state");
        let out = need_mut!(out, "out");
        match export_string(density_to_json(&state.0)) {
            Ok(text) => {
                *out = text;
                GqabStatus::Ok
            }
            Err(status) => status,
        }
    })
}

/// Frees a state handle. NULL is ignored.
#[no_mangle]
pub extern "C" fn gqab_state_free(state: *mut GqabState) {
    if !state.is_null() {
        drop(unsafe { Box::from_raw(state) });
    }
}

/// Draws a seeded random member of the problem's constraint family,
/// suitable as a run initializer.
#[no_mangle]
pub extern "C" fn gqab_random_member(
    problem: *const GqabProblem,
    seed: u64,
    out: *mut *mut GqabState,
) -> GqabStatus {
    guarded(|| {
        let problem = need!(problem, "problem");
        let out = need_mut!(out, "out");
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        match problem.0.random_member(&mut rng) {
            Ok(state) => {
                *out = Box::into_raw(Box::new(GqabState(state)));
                GqabStatus::Ok
            }
            Err(err) => fail(&err),
        }
    })
}

/// Objective value at a state.
#[no_mangle]
pub extern "C" fn gqab_objective(
    problem: *const GqabProblem,
    state: *const GqabState,
    out: *mut f64,
) -> GqabStatus {
    guarded(|| {
        let problem = need!(problem, "problem");
        let state = need!(state, "state");
        let out = need_mut!(out, "out");
        match solver::objective(&problem.0, &state.0) {
            Ok(value) => {
                *out = value;
                GqabStatus::Ok
            }
            Err(err) => fail(&err),
        }
    })
}

/// Entropic split of the objective at a family member.
#[no_mangle]
pub extern "C" fn gqab_decompose(
    problem: *const GqabProblem,
    state: *const GqabState,
    out: *mut GqabDecomposition,
) -> GqabStatus {
    guarded(|| {
        let problem = need!(problem, "problem");
        let state = need!(state, "state");
        let out = need_mut!(out, "out");
        match problem.0.decompose(&state.0) {
            Ok(d) => {
                *out = GqabDecomposition {
                    i_tx: d.i_tx,
                    h_t: d.h_t,
                    i_ty: d.i_ty,
                    total: d.total,
                };
                GqabStatus::Ok
            }
            Err(err) => fail(&err),
        }
    })
}

/// Induced divergence between two states: a weighted combination of
/// relative entropies that, unlike each term, can be negative. The result
/// may be infinite when supports do not nest.
#[no_mangle]
pub extern "C" fn gqab_divergence(
    problem: *const GqabProblem,
    a: *const GqabState,
    b: *const GqabState,
    out: *mut f64,
) -> GqabStatus {
    guarded(|| {
        let problem = need!(problem, "problem");
        let a = need!(a, "a");
        let b = need!(b, "b");
        let out = need_mut!(out, "out");
        match problem.0.d_omega_entropic(&a.0, &b.0) {
            Ok(value) => {
                *out = value;
                GqabStatus::Ok
            }
            Err(err) => fail(&err),
        }
    })
}

/// Slack of the data-processing contraction between two family members;
/// nonnegative there, and its size controls how much descent each solver
/// step certifies.
#[no_mangle]
pub extern "C" fn gqab_contraction_gap(
    problem: *const GqabProblem,
    a: *const GqabState,
    b: *const GqabState,
    out: *mut f64,
) -> GqabStatus {
    guarded(|| {
        let problem = need!(problem, "problem");
        let a = need!(a, "a");
        let b = need!(b, "b");
        let out = need_mut!(out, "out");
        match problem.0.contraction_gap(&a.0, &b.0) {
            Ok(value) => {
                *out = value;
                GqabStatus::Ok
            }
            Err(err) => fail(&err),
        }
    })
}

/// One solver update from a family member. `options` may be NULL for
/// defaults.
#[no_mangle]
pub extern "C" fn gqab_step(
    problem: *const GqabProblem,
    state: *const GqabState,
    options: *const GqabSolverOptions,
    out: *mut *mut GqabState,
) -> GqabStatus {
    guarded(|| {
        let problem = need!(problem, "problem");
        let state = need!(state, "state");
        let out = need_mut!(out, "out");
        let cfg = config_of(options);
        match solver::step(&problem.0, &state.0, problem.0.family(), &cfg) {
            Ok(next) => {
                *out = Box::into_raw(Box::new(GqabState(next)));
                GqabStatus::Ok
            }
            Err(err) => fail(&err),
        }
    })
}

/// Full solver run from an initial family member. `options` may be NULL
/// for defaults. On success the trace owns the final state; hitting the
/// iteration cap still counts as success and is visible through
/// `gqab_trace_converged`.
#[no_mangle]
pub extern "C" fn gqab_run(
    problem: *const GqabProblem,
    initial: *const GqabState,
    options: *const GqabSolverOptions,
    out: *mut *mut GqabTrace,
) -> GqabStatus {
    guarded(|| {
        let problem = need!(problem, "problem");
        let initial = need!(initial, "initial");
        let out = need_mut!(out, "out");
        let cfg = config_of(options);
        match solver::run(&problem.0, &initial.0, problem.0.family(), &cfg) {
            Ok(trace) => {
                *out = Box::into_raw(Box::new(GqabTrace(trace)));
                GqabStatus::Ok
            }
            Err(err) => fail(&err),
        }
    })
}

/// Projects any state of matching shape onto the problem's constraint
/// family along the exponential arc. `options` may be NULL for defaults.
#[no_mangle]
pub extern "C" fn gqab_project(
    problem: *const GqabProblem,
    state: *const GqabState,
    options: *const GqabSolverOptions,
    out: *mut *mut GqabState,
) -> GqabStatus {
    guarded(|| {
        let problem = need!(problem, "problem");
        let state = need!(state, "state");
        let out = need_mut!(out, "out");
        let cfg = config_of(options);
        match e_project(&state.0, problem.0.family(), &cfg) {
            Ok(result) => {
                *out = Box::into_raw(Box::new(GqabState(result.projected)));
                GqabStatus::Ok
            }
            Err(err) => fail(&err),
        }
    })
}

/// Randomized search for the sign of the induced divergence: evaluates it
/// on seeded families of state pairs and reports the smallest finite value
/// and how many trials were finite.
#[no_mangle]
pub extern "C" fn gqab_probe_min_divergence(
    problem: *const GqabProblem,
    trials: usize,
    seed: u64,
    out_min: *mut f64,
    out_finite: *mut usize,
) -> GqabStatus {
    guarded(|| {
        let problem = need!(problem, "problem");
        let out_min = need_mut!(out_min, "out_min");
        let out_finite = need_mut!(out_finite, "out_finite");
        match problem.0.probe_min_divergence(trials, seed) {
            Ok(probe) => {
                *out_min = probe.min_value;
                *out_finite = probe.finite_trials;
                GqabStatus::Ok
            }
            Err(err) => fail(&err),
        }
    })
}

/// Number of iterates a run visited; zero for NULL.
#[no_mangle]
pub extern "C" fn gqab_trace_iterations(trace: *const GqabTrace) -> usize {
    unsafe { trace.as_ref() }.map_or(0, |t| t.0.iterations())
}

/// Objective at the last iterate; NaN for NULL or an empty trace.
#[no_mangle]
pub extern "C" fn gqab_trace_final_objective(trace: *const GqabTrace) -> f64 {
    unsafe { trace.as_ref() }.map_or(f64::NAN, |t| t.0.final_objective())
}

/// Whether the run stopped on the objective tolerance rather than the
/// iteration cap; false for NULL.
#[no_mangle]
pub extern "C" fn gqab_trace_converged(trace: *const GqabTrace) -> bool {
    unsafe { trace.as_ref() }.is_some_and(|t| t.0.termination == Termination::Converged)
}

/// Whether every step satisfied the descent certificate; false for NULL.
#[no_mangle]
pub extern "C" fn gqab_trace_monotone(trace: *const GqabTrace) -> bool {
    unsafe { trace.as_ref() }.is_some_and(|t| t.0.monotone)
}

/// Copies out one trace row by 0-based position.
#[no_mangle]
pub extern "C" fn gqab_trace_record(
    trace: *const GqabTrace,
    index: usize,
    out: *mut GqabIterRecord,
) -> GqabStatus {
    guarded(|| {
        let trace = need!(trace, "trace");
        let out = need_mut!(out, "out");
        match trace.0.records.get(index) {
            Some(r) => {
                *out = GqabIterRecord {
                    iter: r.iter,
                    objective: r.objective,
                    residual: r.residual,
                    step_relent: r.step_relent,
                    proj_iters: r.proj_iters,
                    monotone_ok: r.monotone_ok,
                };
                GqabStatus::Ok
            }
            None => {
                set_error(&format!(
                    "record index {index} out of range for {} records",
                    trace.0.records.len()
                ));
                GqabStatus::InvalidInput
            }
        }
    })
}

/// Copies the run's final state into a fresh handle.
#[no_mangle]
pub extern "C" fn gqab_trace_final_state(
    trace: *const GqabTrace,
    out: *mut *mut GqabState,
) -> GqabStatus {
    guarded(|| {
        let trace = need!(trace, "trace");
        let out = need_mut!(out, "out");
        *out = Box::into_raw(Box::new(GqabState(trace.0.final_state.clone())));
        GqabStatus::Ok
    })
}

/// Renders the trace as CSV with columns
/// iter,objective,residual,step_relent,proj_iters; free the string with
/// `gqab_string_free`.
#[no_mangle]
pub extern "C" fn gqab_trace_csv(trace: *const GqabTrace, out: *mut *mut c_char) -> GqabStatus {
    guarded(|| {
        let trace = need!(trace, "trace");
        let out = need_mut!(out, "out");
        match export_string(run_trace_csv(&trace.0)) {
            Ok(text) => {
                *out = text;
                GqabStatus::Ok
            }
            Err(status) => status,
        }
    })
}

/// Frees a trace handle. NULL is ignored.
#[no_mangle]
pub extern "C" fn gqab_trace_free(trace: *mut GqabTrace) {
    if !trace.is_null() {
        drop(unsafe { Box::from_raw(trace) });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use gqab::channels::amplitude_damping_model;
    use std::ptr;

    fn build_problem(alpha: f64, beta: f64) -> *mut GqabProblem {
        let (rho_x, channel) = amplitude_damping_model(0.7, 0.3).unwrap();
        let problem = IbProblem::new(rho_x, channel, alpha, beta, 2).unwrap();
        let json = CString::new(problem_to_json(&problem)).unwrap();
        let mut handle: *mut GqabProblem = ptr::null_mut();
        assert_eq!(
            gqab_problem_from_json(json.as_ptr(), &mut handle),
            GqabStatus::Ok
        );
        assert!(!handle.is_null());
        handle
    }

    fn take_string(ptr: *mut c_char) -> String {
        assert!(!ptr.is_null());
        let text = unsafe { CStr::from_ptr(ptr) }.to_str().unwrap().to_owned();
        gqab_string_free(ptr);
        text
    }

    fn last_error() -> String {
        unsafe { CStr::from_ptr(gqab_last_error()) }
            .to_str()
            .unwrap()
            .to_owned()
    }

    #[test]
    fn problem_round_trips_through_json_and_reports_its_shape() {
        let problem = build_problem(1.0, 5.0);
        let mut info = GqabProblemInfo {
            alpha: 0.0,
            beta: 0.0,
            dim_t: 0,
            dim_x: 0,
            dim_y: 0,
        };
        assert_eq!(gqab_problem_info(problem, &mut info), GqabStatus::Ok);
        assert_eq!(info.alpha, 1.0);
        assert_eq!(info.beta, 5.0);
        assert_eq!((info.dim_t, info.dim_x, info.dim_y), (2, 4, 2));

        let mut json: *mut c_char = ptr::null_mut();
        assert_eq!(gqab_problem_to_json(problem, &mut json), GqabStatus::Ok);
        let text = take_string(json);
        let mut again: *mut GqabProblem = ptr::null_mut();
        let c = CString::new(text).unwrap();
        assert_eq!(gqab_problem_from_json(c.as_ptr(), &mut again), GqabStatus::Ok);
        gqab_problem_free(again);
        gqab_problem_free(problem);
    }

    #[test]
    fn run_descends_and_its_trace_is_fully_inspectable() {
        // Weak relevance weight: strongly weighted runs can descend into
        // the eigenvalue floor, where the certificate check fires.
        let problem = build_problem(1.0, 2.0);
        let mut initial: *mut GqabState = ptr::null_mut();
        assert_eq!(gqab_random_member(problem, 7, &mut initial), GqabStatus::Ok);

        let mut start_objective = f64::NAN;
        assert_eq!(
            gqab_objective(problem, initial, &mut start_objective),
            GqabStatus::Ok
        );
        assert!(start_objective.is_finite());

        let mut trace: *mut GqabTrace = ptr::null_mut();
        assert_eq!(
            gqab_run(problem, initial, ptr::null(), &mut trace),
            GqabStatus::Ok
        );
        assert!(gqab_trace_converged(trace));
        assert!(gqab_trace_monotone(trace));
        let final_objective = gqab_trace_final_objective(trace);
        assert!(final_objective <= start_objective + 1e-9);

        let count = gqab_trace_iterations(trace);
        assert!(count >= 2);
        let mut record = GqabIterRecord {
            iter: 0,
            objective: 0.0,
            residual: 0.0,
            step_relent: 0.0,
            proj_iters: 0,
            monotone_ok: false,
        };
        assert_eq!(gqab_trace_record(trace, 0, &mut record), GqabStatus::Ok);
        assert_eq!(record.iter, 1);
        assert!((record.objective - start_objective).abs() < 1e-12);
        assert_eq!(
            gqab_trace_record(trace, count, &mut record),
            GqabStatus::InvalidInput
        );

        let mut csv: *mut c_char = ptr::null_mut();
        assert_eq!(gqab_trace_csv(trace, &mut csv), GqabStatus::Ok);
        let table = gqab::io::parse_csv(&take_string(csv)).unwrap();
        assert_eq!(table.rows.len(), count);

        let mut final_state: *mut GqabState = ptr::null_mut();
        assert_eq!(
            gqab_trace_final_state(trace, &mut final_state),
            GqabStatus::Ok
        );
        let mut decomposition = GqabDecomposition {
            i_tx: 0.0,
            h_t: 0.0,
            i_ty: 0.0,
            total: 0.0,
        };
        assert_eq!(
            gqab_decompose(problem, final_state, &mut decomposition),
            GqabStatus::Ok
        );
        assert!((decomposition.total - final_objective).abs() < 1e-8);

        gqab_state_free(final_state);
        gqab_trace_free(trace);
        gqab_state_free(initial);
        gqab_problem_free(problem);
    }

    #[test]
    fn step_agrees_with_run_and_states_round_trip_as_json() {
        let problem = build_problem(1.0, 2.0);
        let mut member: *mut GqabState = ptr::null_mut();
        assert_eq!(gqab_random_member(problem, 3, &mut member), GqabStatus::Ok);

        let mut next: *mut GqabState = ptr::null_mut();
        assert_eq!(
            gqab_step(problem, member, ptr::null(), &mut next),
            GqabStatus::Ok
        );
        let mut json: *mut c_char = ptr::null_mut();
        assert_eq!(gqab_density_to_json(next, &mut json), GqabStatus::Ok);
        let text = take_string(json);
        let c = CString::new(text).unwrap();
        let mut reparsed: *mut GqabState = ptr::null_mut();
        assert_eq!(
            gqab_density_from_json(c.as_ptr(), &mut reparsed),
            GqabStatus::Ok
        );
        let mut a = f64::NAN;
        let mut b = f64::NAN;
        assert_eq!(gqab_objective(problem, next, &mut a), GqabStatus::Ok);
        assert_eq!(gqab_objective(problem, reparsed, &mut b), GqabStatus::Ok);
        assert_eq!(a.to_bits(), b.to_bits());

        gqab_state_free(reparsed);
        gqab_state_free(next);
        gqab_state_free(member);
        gqab_problem_free(problem);
    }

    #[test]
    fn projection_gap_and_probe_agree_with_the_library_semantics() {
        let problem = build_problem(1.0, 5.0);
        let mut a: *mut GqabState = ptr::null_mut();
        let mut b: *mut GqabState = ptr::null_mut();
        assert_eq!(gqab_random_member(problem, 11, &mut a), GqabStatus::Ok);
        assert_eq!(gqab_random_member(problem, 12, &mut b), GqabStatus::Ok);

        // Members are fixed points of the projection.
        let mut projected: *mut GqabState = ptr::null_mut();
        assert_eq!(
            gqab_project(problem, a, ptr::null(), &mut projected),
            GqabStatus::Ok
        );
        let mut before = f64::NAN;
        let mut after = f64::NAN;
        assert_eq!(gqab_objective(problem, a, &mut before), GqabStatus::Ok);
        assert_eq!(gqab_objective(problem, projected, &mut after), GqabStatus::Ok);
        assert!((before - after).abs() < 1e-8);

        let mut gap = f64::NAN;
        assert_eq!(gqab_contraction_gap(problem, a, b, &mut gap), GqabStatus::Ok);
        assert!(gap >= -1e-9);

        let mut divergence = f64::NAN;
        assert_eq!(gqab_divergence(problem, a, b, &mut divergence), GqabStatus::Ok);
        assert!(!divergence.is_nan());

        let mut min_value = f64::NAN;
        let mut finite = 0usize;
        assert_eq!(
            gqab_probe_min_divergence(problem, 120, 1, &mut min_value, &mut finite),
            GqabStatus::Ok
        );
        assert!(finite > 0);
        assert!(min_value < 0.0, "min divergence {min_value}");

        gqab_state_free(projected);
        gqab_state_free(b);
        gqab_state_free(a);
        gqab_problem_free(problem);
    }

    #[test]
    fn failures_carry_status_classes_and_messages() {
        // NULL arguments.
        let mut out: *mut GqabProblem = ptr::null_mut();
        assert_eq!(
            gqab_problem_from_json(ptr::null(), &mut out),
            GqabStatus::NullPointer
        );
        assert!(last_error().contains("NULL"));
        let json = CString::new("{}").unwrap();
        assert_eq!(
            gqab_problem_from_json(json.as_ptr(), ptr::null_mut()),
            GqabStatus::NullPointer
        );

        // Malformed JSON.
        let bad = CString::new("{ nope").unwrap();
        assert_eq!(
            gqab_problem_from_json(bad.as_ptr(), &mut out),
            GqabStatus::InvalidInput
        );
        assert!(!last_error().is_empty());

        // Shape mismatch between a problem and a foreign state.
        let problem = build_problem(1.0, 2.0);
        let lone = CString::new(
            r#"{"dims": [2], "re": [[0.5, 0.0], [0.0, 0.5]], "im": [[0.0, 0.0], [0.0, 0.0]]}"#,
        )
        .unwrap();
        let mut small: *mut GqabState = ptr::null_mut();
        assert_eq!(
            gqab_density_from_json(lone.as_ptr(), &mut small),
            GqabStatus::Ok
        );
        let mut value = f64::NAN;
        assert_eq!(
            gqab_objective(problem, small, &mut value),
            GqabStatus::InvalidInput
        );

        // A starved projection from an off-family state of the right shape
        // reports non-convergence.
        let uniform = DensityMatrix::try_new(
            gqab::linop::OperatorMatrix::identity(&[2, 2, 2]).scale(0.125),
        )
        .unwrap();
        let uniform_json = CString::new(density_to_json(&uniform)).unwrap();
        let mut off_family: *mut GqabState = ptr::null_mut();
        assert_eq!(
            gqab_density_from_json(uniform_json.as_ptr(), &mut off_family),
            GqabStatus::Ok
        );
        let mut options = gqab_solver_options_default();
        options.tol_proj = 1e-14;
        options.max_proj_iters = 1;
        let mut projected: *mut GqabState = ptr::null_mut();
        assert_eq!(
            gqab_project(problem, off_family, &options, &mut projected),
            GqabStatus::NoConvergence
        );
        assert!(last_error().contains("projection"));

        gqab_state_free(off_family);
        gqab_state_free(small);
        gqab_problem_free(problem);

        // Version and error strings are well-formed C strings.
        let version = unsafe { CStr::from_ptr(gqab_version()) }.to_str().unwrap();
        assert!(!version.is_empty());
    }
}
