use std::ffi::{CStr, CString};
use std::ptr;

use shadow_descent_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(ssd_last_error()) }.to_string_lossy().into_owned()
}

struct Fixture {
    circuit: *mut SsdCircuit,
    obs: *mut SsdObservable,
}

impl Fixture {
    fn new(n: usize, layers: usize, paulis: &str) -> Self {
        let mut circuit = ptr::null_mut();
        let mut obs = ptr::null_mut();
        let p = CString::new(paulis).unwrap();
        unsafe {
            assert_eq!(ssd_circuit_basic_entangler(n, layers, &mut circuit), SsdStatus::Ok);
            assert_eq!(ssd_observable_new(n, &mut obs), SsdStatus::Ok);
            assert_eq!(ssd_observable_add_term(obs, 1.0, p.as_ptr()), SsdStatus::Ok);
        }
        Fixture { circuit, obs }
    }
}

impl Drop for Fixture {
    fn drop(&mut self) {
        unsafe {
            ssd_circuit_free(self.circuit);
            ssd_observable_free(self.obs);
        }
    }
}

#[test]
fn two_qubit_rx_matches_cosine() {
    // with the second angle at zero the CNOT ring maps RX(a)|00> to Z-expectation cos(a) on qubit 1
    let fx = Fixture::new(2, 1, "IZ");
    let theta = [0.7, 0.0];
    let (mut f, mut g, mut execs) = (0.0, [0.0; 2], 0u64);
    unsafe {
        assert_eq!(ssd_eval_f(fx.circuit, fx.obs, theta.as_ptr(), 2, 0, 0, &mut f, &mut execs), SsdStatus::Ok);
        assert!((f - 0.7f64.cos()).abs() < 1e-12);
        assert_eq!(execs, 1);
        assert_eq!(
            ssd_psr_gradient(fx.circuit, fx.obs, theta.as_ptr(), 2, 0, 0, g.as_mut_ptr(), &mut execs),
            SsdStatus::Ok
        );
        assert!((g[0] + 0.7f64.sin()).abs() < 1e-12);
        assert_eq!(execs, 4);
    }
}

#[test]
fn shadow_matches_gradient_projection() {
    let fx = Fixture::new(3, 2, "ZXI");
    let d = unsafe { ssd_circuit_num_params(fx.circuit) };
    assert_eq!(d, 6);
    let theta: Vec<f64> = (0..d).map(|i| 0.4 * i as f64 - 1.0).collect();
    let v: Vec<f64> = (0..d).map(|i| if i % 2 == 0 { 0.5 } else { -0.25 }).collect();
    let mut g = vec![0.0; d];
    let (mut two, mut one, mut e2, mut e1) = (0.0, 0.0, 0u64, 0u64);
    unsafe {
        let st = ssd_psr_gradient(fx.circuit, fx.obs, theta.as_ptr(), d, 0, 0, g.as_mut_ptr(), ptr::null_mut());
        assert_eq!(st, SsdStatus::Ok);
        let st = ssd_estimate_shadow(fx.circuit, fx.obs, theta.as_ptr(), v.as_ptr(), d, 0, 0, false, &mut two, &mut e2);
        assert_eq!(st, SsdStatus::Ok);
        let st = ssd_estimate_shadow(fx.circuit, fx.obs, theta.as_ptr(), v.as_ptr(), d, 0, 0, true, &mut one, &mut e1);
        assert_eq!(st, SsdStatus::Ok);
    }
    let proj: f64 = g.iter().zip(&v).map(|(a, b)| a * b).sum();
    assert!((two - proj).abs() < 1e-10);
    assert!((one - proj).abs() < 1e-10);
    assert_eq!((e2, e1), (2, 1));
}

#[test]
fn optimizer_descends_and_counts_executions() {
    let fx = Fixture::new(2, 1, "ZI");
    let theta0 = [0.3, -0.2];
    let mut opt = ptr::null_mut();
    unsafe {
        assert_eq!(ssd_optimizer_new(theta0.as_ptr(), 2, 0.2, 5, &mut opt), SsdStatus::Ok);
        let mut f0 = 0.0;
        ssd_eval_f(fx.circuit, fx.obs, theta0.as_ptr(), 2, 0, 0, &mut f0, ptr::null_mut());
        for _ in 0..200 {
            assert_eq!(ssd_optimizer_step(opt, fx.circuit, fx.obs, SsdMethod::ShadowFused, 0), SsdStatus::Ok);
        }
        assert_eq!(ssd_optimizer_executions(opt), 200);
        for _ in 0..10 {
            assert_eq!(ssd_optimizer_step(opt, fx.circuit, fx.obs, SsdMethod::ParameterShiftSgd, 0), SsdStatus::Ok);
        }
        assert_eq!(ssd_optimizer_executions(opt), 240);
        let mut theta = [0.0; 2];
        assert_eq!(ssd_optimizer_theta(opt, theta.as_mut_ptr(), 2), SsdStatus::Ok);
        let mut f1 = 0.0;
        ssd_eval_f(fx.circuit, fx.obs, theta.as_ptr(), 2, 0, 0, &mut f1, ptr::null_mut());
        assert!(f1 < f0 - 0.5, "{f0} -> {f1}");
        assert_eq!(ssd_optimizer_theta(opt, theta.as_mut_ptr(), 3), SsdStatus::DimensionMismatch);
        ssd_optimizer_free(opt);
    }
}

#[test]
fn null_pointers_are_reported() {
    let fx = Fixture::new(2, 1, "ZZ");
    let theta = [0.1, 0.2];
    let mut f = 0.0;
    unsafe {
        assert_eq!(ssd_circuit_basic_entangler(2, 1, ptr::null_mut()), SsdStatus::NullPointer);
        assert!(last_error().contains("out"));
        let st = ssd_eval_f(ptr::null(), fx.obs, theta.as_ptr(), 2, 0, 0, &mut f, ptr::null_mut());
        assert_eq!(st, SsdStatus::NullPointer);
        assert!(last_error().contains("circuit"));
        let st = ssd_eval_f(fx.circuit, fx.obs, ptr::null(), 2, 0, 0, &mut f, ptr::null_mut());
        assert_eq!(st, SsdStatus::NullPointer);
        let st = ssd_observable_add_term(fx.obs, 1.0, ptr::null());
        assert_eq!(st, SsdStatus::NullPointer);
        assert_eq!(ssd_circuit_num_params(ptr::null()), 0);
        assert_eq!(ssd_optimizer_executions(ptr::null()), 0);
        ssd_circuit_free(ptr::null_mut());
        ssd_observable_free(ptr::null_mut());
        ssd_optimizer_free(ptr::null_mut());
    }
}

#[test]
fn invalid_inputs_map_to_status_codes() {
    let fx = Fixture::new(2, 1, "ZZ");
    let mut f = 0.0;
    let theta = [0.1, 0.2, 0.3];
    unsafe {
        let st = ssd_eval_f(fx.circuit, fx.obs, theta.as_ptr(), 3, 0, 0, &mut f, ptr::null_mut());
        assert_eq!(st, SsdStatus::DimensionMismatch);
        assert!(!last_error().is_empty());

        let bad = CString::new("ZQ").unwrap();
        assert_eq!(ssd_observable_add_term(fx.obs, 1.0, bad.as_ptr()), SsdStatus::InvalidArgument);
        let long = CString::new("ZZZ").unwrap();
        assert_eq!(ssd_observable_add_term(fx.obs, 1.0, long.as_ptr()), SsdStatus::DimensionMismatch);

        let mut empty = ptr::null_mut();
        assert_eq!(ssd_observable_new(2, &mut empty), SsdStatus::Ok);
        let st = ssd_eval_f(fx.circuit, empty, theta.as_ptr(), 2, 0, 0, &mut f, ptr::null_mut());
        assert_eq!(st, SsdStatus::InvalidArgument);
        ssd_observable_free(empty);

        let mut c = ptr::null_mut();
        assert_eq!(ssd_circuit_basic_entangler(1, 1, &mut c), SsdStatus::InvalidArgument);
        assert_eq!(ssd_circuit_basic_entangler(3, 0, &mut c), SsdStatus::InvalidArgument);
        assert!(c.is_null());

        let wide = Fixture::new(40, 1, &"Z".repeat(40));
        let theta = vec![0.0; 40];
        let st = ssd_eval_f(wide.circuit, wide.obs, theta.as_ptr(), 40, 0, 0, &mut f, ptr::null_mut());
        assert_eq!(st, SsdStatus::CapacityExceeded);

        let mut out = 0.0;
        assert_eq!(ssd_recommended_alpha(-1.0, 1.0, 1.0, 1.0, 4, &mut out), SsdStatus::InvalidArgument);
    }
}

#[test]
fn encoding_changes_the_objective() {
    let fx = Fixture::new(2, 1, "ZI");
    let theta = [0.4, 0.9];
    let (mut plain, mut encoded) = (0.0, 0.0);
    let x = [1.2, -0.3];
    unsafe {
        ssd_eval_f(fx.circuit, fx.obs, theta.as_ptr(), 2, 0, 0, &mut plain, ptr::null_mut());
        assert_eq!(ssd_circuit_set_encoding(fx.circuit, x.as_ptr(), 2), SsdStatus::Ok);
        assert_eq!(ssd_circuit_num_params(fx.circuit), 2);
        ssd_eval_f(fx.circuit, fx.obs, theta.as_ptr(), 2, 0, 0, &mut encoded, ptr::null_mut());
        assert!((plain - encoded).abs() > 1e-6);
        assert_eq!(ssd_circuit_set_encoding(fx.circuit, x.as_ptr(), 3), SsdStatus::DimensionMismatch);
    }
}

#[test]
fn sampled_calls_are_seed_deterministic() {
    let fx = Fixture::new(2, 1, "XZ");
    let theta = [0.4, 0.9];
    let run = |seed| {
        let mut f = 0.0;
        let st = unsafe { ssd_eval_f(fx.circuit, fx.obs, theta.as_ptr(), 2, 100, seed, &mut f, ptr::null_mut()) };
        assert_eq!(st, SsdStatus::Ok);
        f
    };
    assert_eq!(run(9), run(9));
    assert!(run(9).abs() <= 1.0);
}

#[test]
fn step_size_calculators() {
    let (mut alpha, mut iters) = (0.0, 0u64);
    unsafe {
        assert_eq!(ssd_recommended_alpha(2.0, 0.5, 0.1, 1.0, 120, &mut alpha), SsdStatus::Ok);
        assert_eq!(ssd_required_iterations(2.0, 0.5, 0.1, 2.0, 120, &mut iters), SsdStatus::Ok);
        assert_eq!(ssd_recommended_alpha(1.0, 1.0, 1.0, 1.0, 1, ptr::null_mut()), SsdStatus::NullPointer);
    }
    assert!((alpha - 0.01 / 240.0).abs() < 1e-15);
    assert_eq!(iters, 19_200_000);
    assert_eq!(ssd_smoothness_bound(8, 1.5), 12.0);
    assert_eq!(ssd_smoothness_bound(8, -1.0), 0.0);
}
