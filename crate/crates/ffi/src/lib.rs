//! C ABI for the shadow-descent simulator and optimizers.
//!
//! Every fallible function returns an [`SsdStatus`]; on failure a message is
//! available from [`ssd_last_error`] on the same thread. Handles are opaque
//! and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use shadow_descent::circuit::{build_basic_entangler, build_strongly_entangling, eval_f, ExecutionCounter, ParamCircuit, Shots};
use shadow_descent::deriv::psr_gradient;
use shadow_descent::ipc::{estimate_shadow, estimate_shadow_fused};
use shadow_descent::optim::{
    recommended_alpha, required_iterations, sgd_step, smoothness_bound, ssd_step, OptimizerState, Problem,
    ShadowMode, StepSchedule, ConvergenceBudget,
};
use shadow_descent::sim::{ObservableExpr, PauliTerm};
use shadow_descent::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SsdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    CapacityExceeded = 4,
    Internal = 5,
}

/// Update rule used by [`ssd_optimizer_step`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SsdMethod {
    ShadowTwoCall = 0,
    ShadowFused = 1,
    ParameterShiftSgd = 2,
}

/// Parameterized circuit handle.
pub struct SsdCircuit(ParamCircuit);

/// Observable handle: a real combination of Pauli strings.
pub struct SsdObservable {
    n_qubits: usize,
    terms: Vec<PauliTerm>,
}

/// Optimizer state handle.
pub struct SsdOptimizer(OptimizerState);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let clean = msg.replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(clean).unwrap_or_default());
}

fn status_of(err: &Error) -> SsdStatus {
    match err {
        Error::DimensionMismatch { .. } => SsdStatus::DimensionMismatch,
        Error::QubitCapExceeded { .. } | Error::AncillaCapacity { .. } => SsdStatus::CapacityExceeded,
        Error::Io(_) | Error::Csv(_) | Error::Json(_) => SsdStatus::Internal,
        _ => SsdStatus::InvalidArgument,
    }
}

enum Failure {
    Null(&'static str),
    Invalid(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> SsdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SsdStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(&format!("null pointer: {what}"));
            SsdStatus::NullPointer
        }
        Ok(Err(Failure::Invalid(msg))) => {
            set_error(&msg);
            SsdStatus::InvalidArgument
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            SsdStatus::Internal
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn as_mut<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a>(p: *mut f64, len: usize, what: &'static str) -> Result<&'a mut [f64], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn write<T>(p: *mut T, value: T, what: &'static str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    p.write(value);
    Ok(())
}

fn shots_of(shots: u64) -> Shots {
    if shots == 0 {
        Shots::Exact
    } else {
        Shots::Finite(shots)
    }
}

fn observable(obs: &SsdObservable) -> Result<ObservableExpr, Failure> {
    if obs.terms.is_empty() {
        return Err(Failure::Invalid("observable has no terms".into()));
    }
    Ok(ObservableExpr::from_terms(obs.terms.clone()))
}

/// Message for the most recent failure on this thread. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ssd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

fn new_circuit(
    build: fn(usize, usize) -> shadow_descent::Result<ParamCircuit>,
    n_qubits: usize,
    n_layers: usize,
    out: *mut *mut SsdCircuit,
) -> SsdStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let c = build(n_qubits, n_layers)?;
        unsafe { write(out, Box::into_raw(Box::new(SsdCircuit(c))), "out") }
    })
}

/// RX layers with a CNOT ring; `n_qubits * n_layers` parameters.
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn ssd_circuit_basic_entangler(n_qubits: usize, n_layers: usize, out: *mut *mut SsdCircuit) -> SsdStatus {
    new_circuit(build_basic_entangler, n_qubits, n_layers, out)
}

/// RZ·RY·RZ layers with ranged CNOT rings; `3 * n_qubits * n_layers` parameters.
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn ssd_circuit_strongly_entangling(
    n_qubits: usize,
    n_layers: usize,
    out: *mut *mut SsdCircuit,
) -> SsdStatus {
    new_circuit(build_strongly_entangling, n_qubits, n_layers, out)
}

/// # Safety
/// `circuit` must come from a circuit constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ssd_circuit_free(circuit: *mut SsdCircuit) {
    if !circuit.is_null() {
        drop(Box::from_raw(circuit));
    }
}

/// Number of trainable parameters, or 0 for a null handle.
///
/// # Safety
/// `circuit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ssd_circuit_num_params(circuit: *const SsdCircuit) -> usize {
    circuit.as_ref().map_or(0, |c| c.0.num_params())
}

/// Replaces the data-encoding prefix with `H·RZ(features[i])` on each qubit.
///
/// # Safety
/// `features` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ssd_circuit_set_encoding(circuit: *mut SsdCircuit, features: *const f64, len: usize) -> SsdStatus {
    guard(|| {
        let c = as_mut(circuit, "circuit")?;
        let x = slice(features, len, "features")?;
        c.0 = c.0.clone().with_encoding(x)?;
        Ok(())
    })
}

/// Empty observable on `n_qubits` qubits.
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn ssd_observable_new(n_qubits: usize, out: *mut *mut SsdObservable) -> SsdStatus {
    guard(|| {
        if n_qubits == 0 {
            return Err(Failure::Invalid("observable needs at least one qubit".into()));
        }
        write(out, Box::into_raw(Box::new(SsdObservable { n_qubits, terms: Vec::new() })), "out")
    })
}

/// Adds `coeff * P` where `paulis` is a string such as `"ZIXY"`, one letter per qubit.
///
/// # Safety
/// `paulis` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ssd_observable_add_term(obs: *mut SsdObservable, coeff: f64, paulis: *const c_char) -> SsdStatus {
    guard(|| {
        let o = as_mut(obs, "observable")?;
        if paulis.is_null() {
            return Err(Failure::Null("paulis"));
        }
        let letters = CStr::from_ptr(paulis)
            .to_str()
            .map_err(|_| Failure::Invalid("Pauli string is not UTF-8".into()))?;
        let term = PauliTerm::parse(coeff, letters)?;
        if term.paulis.len() != o.n_qubits {
            return Err(Failure::Core(Error::DimensionMismatch {
                what: "Pauli string length",
                expected: o.n_qubits,
                actual: term.paulis.len(),
            }));
        }
        o.terms.push(term);
        Ok(())
    })
}

/// # Safety
/// `obs` must come from [`ssd_observable_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ssd_observable_free(obs: *mut SsdObservable) {
    if !obs.is_null() {
        drop(Box::from_raw(obs));
    }
}

/// `f(θ)`; `shots = 0` selects the exact expectation.
///
/// # Safety
/// `theta` must point to `d` doubles; `executions` may be null.
#[no_mangle]
pub unsafe extern "C" fn ssd_eval_f(
    circuit: *const SsdCircuit,
    obs: *const SsdObservable,
    theta: *const f64,
    d: usize,
    shots: u64,
    seed: u64,
    out_value: *mut f64,
    executions: *mut u64,
) -> SsdStatus {
    guard(|| {
        let c = as_ref(circuit, "circuit")?;
        let h = observable(as_ref(obs, "observable")?)?;
        let t = slice(theta, d, "theta")?;
        let counter = ExecutionCounter::new();
        let v = eval_f(&c.0, t, &h, shots_of(shots), seed, &counter)?;
        write(out_value, v, "out_value")?;
        if !executions.is_null() {
            executions.write(counter.count());
        }
        Ok(())
    })
}

/// Parameter-shift gradient written to `grad_out[0..d]`.
///
/// # Safety
/// `theta` and `grad_out` must point to `d` doubles; `executions` may be null.
#[no_mangle]
pub unsafe extern "C" fn ssd_psr_gradient(
    circuit: *const SsdCircuit,
    obs: *const SsdObservable,
    theta: *const f64,
    d: usize,
    shots: u64,
    seed: u64,
    grad_out: *mut f64,
    executions: *mut u64,
) -> SsdStatus {
    guard(|| {
        let c = as_ref(circuit, "circuit")?;
        let h = observable(as_ref(obs, "observable")?)?;
        let t = slice(theta, d, "theta")?;
        let out = slice_mut(grad_out, d, "grad_out")?;
        let g = psr_gradient(&c.0, t, &h, shots_of(shots), seed, &ExecutionCounter::new())?;
        out.copy_from_slice(&g.values);
        if !executions.is_null() {
            executions.write(g.executions_used);
        }
        Ok(())
    })
}

/// Directional derivative along `v` from inner-product circuits: two
/// executions, or one when `fused` is true.
///
/// # Safety
/// `theta` and `v` must point to `d` doubles; `executions` may be null.
#[no_mangle]
pub unsafe extern "C" fn ssd_estimate_shadow(
    circuit: *const SsdCircuit,
    obs: *const SsdObservable,
    theta: *const f64,
    v: *const f64,
    d: usize,
    shots: u64,
    seed: u64,
    fused: bool,
    out_value: *mut f64,
    executions: *mut u64,
) -> SsdStatus {
    guard(|| {
        let c = as_ref(circuit, "circuit")?;
        let h = observable(as_ref(obs, "observable")?)?;
        let t = slice(theta, d, "theta")?;
        let dir = slice(v, d, "v")?;
        let counter = ExecutionCounter::new();
        let est = if fused {
            estimate_shadow_fused(&c.0, t, dir, &h, shots_of(shots), seed, &counter)?
        } else {
            estimate_shadow(&c.0, t, dir, &h, shots_of(shots), seed, &counter)?
        };
        write(out_value, est.value, "out_value")?;
        if !executions.is_null() {
            executions.write(est.executions_used);
        }
        Ok(())
    })
}

/// Optimizer with constant step size `lr`, starting at `theta0`.
///
/// # Safety
/// `theta0` must point to `d` doubles.
#[no_mangle]
pub unsafe extern "C" fn ssd_optimizer_new(
    theta0: *const f64,
    d: usize,
    lr: f64,
    seed: u64,
    out: *mut *mut SsdOptimizer,
) -> SsdStatus {
    guard(|| {
        let t = slice(theta0, d, "theta0")?.to_vec();
        let state = OptimizerState::new(t, StepSchedule::Constant(lr), seed)?;
        write(out, Box::into_raw(Box::new(SsdOptimizer(state))), "out")
    })
}

/// One update of `opt` on `f(θ) = ⟨ψ(θ)|H|ψ(θ)⟩`.
///
/// # Safety
/// All handles must be live.
#[no_mangle]
pub unsafe extern "C" fn ssd_optimizer_step(
    opt: *mut SsdOptimizer,
    circuit: *const SsdCircuit,
    obs: *const SsdObservable,
    method: SsdMethod,
    shots: u64,
) -> SsdStatus {
    guard(|| {
        let o = as_mut(opt, "optimizer")?;
        let c = as_ref(circuit, "circuit")?;
        let problem = Problem::single(c.0.clone(), observable(as_ref(obs, "observable")?)?)?;
        let shots = shots_of(shots);
        match method {
            SsdMethod::ShadowTwoCall => ssd_step(&mut o.0, &problem, ShadowMode::TwoCall, shots)?,
            SsdMethod::ShadowFused => ssd_step(&mut o.0, &problem, ShadowMode::Fused, shots)?,
            SsdMethod::ParameterShiftSgd => sgd_step(&mut o.0, &problem, shots)?,
        };
        Ok(())
    })
}

/// Copies the current parameters into `theta_out[0..d]`.
///
/// # Safety
/// `theta_out` must point to `d` doubles.
#[no_mangle]
pub unsafe extern "C" fn ssd_optimizer_theta(opt: *const SsdOptimizer, theta_out: *mut f64, d: usize) -> SsdStatus {
    guard(|| {
        let o = as_ref(opt, "optimizer")?;
        if d != o.0.theta.len() {
            return Err(Failure::Core(Error::DimensionMismatch {
                what: "output buffer",
                expected: o.0.theta.len(),
                actual: d,
            }));
        }
        slice_mut(theta_out, d, "theta_out")?.copy_from_slice(&o.0.theta);
        Ok(())
    })
}

/// Cumulative circuit executions, or 0 for a null handle.
///
/// # Safety
/// `opt` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ssd_optimizer_executions(opt: *const SsdOptimizer) -> u64 {
    opt.as_ref().map_or(0, |o| o.0.executions)
}

/// # Safety
/// `opt` must come from [`ssd_optimizer_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ssd_optimizer_free(opt: *mut SsdOptimizer) {
    if !opt.is_null() {
        drop(Box::from_raw(opt));
    }
}

fn budget(lipschitz: f64, eta2: f64, eps: f64, f0_gap: f64) -> ConvergenceBudget {
    ConvergenceBudget {
        lipschitz,
        eta2,
        eps,
        f0_gap,
    }
}

/// Largest fixed step size covered by the convergence guarantee.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ssd_recommended_alpha(
    lipschitz: f64,
    eta2: f64,
    eps: f64,
    f0_gap: f64,
    d: usize,
    out: *mut f64,
) -> SsdStatus {
    guard(|| {
        let a = recommended_alpha(&budget(lipschitz, eta2, eps, f0_gap), d)?;
        write(out, a, "out")
    })
}

/// Iterations needed to reach an ε-stationary point.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ssd_required_iterations(
    lipschitz: f64,
    eta2: f64,
    eps: f64,
    f0_gap: f64,
    d: usize,
    out: *mut u64,
) -> SsdStatus {
    guard(|| {
        let t = required_iterations(&budget(lipschitz, eta2, eps, f0_gap), d)?;
        write(out, t, "out")
    })
}

/// `d * h_norm`, an upper bound on the smoothness constant.
#[no_mangle]
pub extern "C" fn ssd_smoothness_bound(d: usize, h_norm: f64) -> f64 {
    smoothness_bound(d, h_norm)
}
