use std::f64::consts::TAU;

use proptest::prelude::*;

use shadow_descent::circuit::{canonical_uv_form, eval_f, ExecutionCounter, Shots};
use shadow_descent::deriv::psr_gradient;
use shadow_descent::harness::verify::{random_case, RandomCase};
use shadow_descent::ipc::{estimate_shadow, estimate_shadow_fused};
use shadow_descent::sim::{exact_expectation, exact_expectation_complex, sampled_expectation, ObservableExpr};

fn case() -> impl Strategy<Value = RandomCase> {
    (1usize..=4, 1usize..=6, any::<u64>()).prop_map(|(n, d, seed)| random_case(n, d, seed).unwrap())
}

fn exact(c: &RandomCase, theta: &[f64], obs: &ObservableExpr) -> f64 {
    eval_f(&c.circuit, theta, obs, Shots::Exact, 0, &ExecutionCounter::new()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn states_stay_normalised(c in case()) {
        let s = c.circuit.prepare_state(&c.theta).unwrap();
        prop_assert!((s.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn expectations_are_real_and_bounded(c in case()) {
        let s = c.circuit.prepare_state(&c.theta).unwrap();
        let z = exact_expectation_complex(&s, &c.observable).unwrap();
        prop_assert!(z.im.abs() < 1e-12);
        prop_assert!(z.re.abs() <= c.observable.norm_bound() + 1e-12);
    }

    #[test]
    fn expectation_is_additive_over_terms(c in case()) {
        let s = c.circuit.prepare_state(&c.theta).unwrap();
        let total = exact_expectation(&s, &c.observable).unwrap();
        let parts: f64 = c.observable.terms.iter()
            .map(|t| exact_expectation(&s, &ObservableExpr::from_terms(vec![t.clone()])).unwrap())
            .sum();
        prop_assert!((total - parts).abs() < 1e-12);
    }

    #[test]
    fn objective_is_two_pi_periodic(c in case(), i in 0usize..6) {
        let i = i % c.theta.len();
        let mut t = c.theta.clone();
        t[i] += TAU;
        prop_assert!((exact(&c, &t, &c.observable) - exact(&c, &c.theta, &c.observable)).abs() < 1e-10);
    }

    #[test]
    fn canonical_form_preserves_objective(c in case()) {
        let canon = canonical_uv_form(&c.circuit);
        prop_assert_eq!(canon.num_params(), c.circuit.num_params());
        let n = ExecutionCounter::new();
        let a = eval_f(&canon, &c.theta, &c.observable, Shots::Exact, 0, &n).unwrap();
        prop_assert!((a - exact(&c, &c.theta, &c.observable)).abs() < 1e-12);
        prop_assert_eq!(canonical_uv_form(&canon), canon);
    }

    #[test]
    fn shadow_is_linear_in_direction(c in case(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let n = ExecutionCounter::new();
        let w: Vec<f64> = c.v.iter().rev().map(|x| x * 0.5 + 0.1).collect();
        let mix: Vec<f64> = c.v.iter().zip(&w).map(|(x, y)| a * x + b * y).collect();
        let dv = |v: &[f64]| estimate_shadow(&c.circuit, &c.theta, v, &c.observable, Shots::Exact, 0, &n).unwrap().value;
        prop_assert!((dv(&mix) - (a * dv(&c.v) + b * dv(&w))).abs() < 1e-9);
    }

    #[test]
    fn shadow_equals_gradient_projection(c in case()) {
        let n = ExecutionCounter::new();
        let g = psr_gradient(&c.circuit, &c.theta, &c.observable, Shots::Exact, 0, &n).unwrap();
        let two = estimate_shadow(&c.circuit, &c.theta, &c.v, &c.observable, Shots::Exact, 0, &n).unwrap();
        let one = estimate_shadow_fused(&c.circuit, &c.theta, &c.v, &c.observable, Shots::Exact, 0, &n).unwrap();
        prop_assert!((two.value - g.dot(&c.v)).abs() < 1e-9);
        prop_assert!((one.value - two.value).abs() < 1e-9);
        prop_assert_eq!((two.executions_used, one.executions_used), (2, 1));
    }

    #[test]
    fn execution_ledger_is_exact(c in case(), shots in prop_oneof![Just(Shots::Exact), (1u64..50).prop_map(Shots::Finite)]) {
        let n = ExecutionCounter::new();
        let d = c.theta.len() as u64;
        psr_gradient(&c.circuit, &c.theta, &c.observable, shots, 1, &n).unwrap();
        prop_assert_eq!(n.count(), 2 * d);
        estimate_shadow(&c.circuit, &c.theta, &c.v, &c.observable, shots, 1, &n).unwrap();
        estimate_shadow_fused(&c.circuit, &c.theta, &c.v, &c.observable, shots, 1, &n).unwrap();
        prop_assert_eq!(n.count(), 2 * d + 3);
    }

    #[test]
    fn sampling_is_seed_deterministic(c in case(), seed in any::<u64>(), shots in 1u64..200) {
        let s = c.circuit.prepare_state(&c.theta).unwrap();
        let a = sampled_expectation(&s, &c.observable, shots, seed).unwrap();
        prop_assert_eq!(a, sampled_expectation(&s, &c.observable, shots, seed).unwrap());
        prop_assert!(a.abs() <= c.observable.norm_bound() + 1e-12);
    }
}
