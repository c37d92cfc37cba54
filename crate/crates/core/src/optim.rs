//! Iterative optimizers over circuit objectives: shadow descent with random
//! directions, the parameter-shift SGD, RSGF and SPSA baselines, and the
//! step-size and iteration-count calculators for fixed-step shadow descent.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::circuit::{eval_f, ExecutionCounter, ParamCircuit, Shots};
use crate::deriv::{gaussian_direction, psr_gradient, rademacher_direction, rsgf_estimate_along, spsa_estimate_along};
use crate::error::{Error, Result};
use crate::ipc::{estimate_shadow, estimate_shadow_fused};
use crate::rng::{derive_seed, rng_from_seed, SeededRng};
use crate::sim::ObservableExpr;

/// How a directional derivative is obtained from inner-product circuits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShadowMode {
    /// Two signed circuits, two executions.
    TwoCall,
    /// One flagged circuit, one execution.
    Fused,
}

/// One weighted circuit expectation inside an objective.
#[derive(Clone, Debug)]
pub struct ProblemTerm {
    pub circuit: ParamCircuit,
    pub observable: ObservableExpr,
    pub weight: f64,
}

/// Objective `F(θ) = offset + Σ_k weight_k · ⟨ψ_k(θ)|H_k|ψ_k(θ)⟩`.
///
/// All terms share the same parameter vector. Each term is a separate
/// circuit, so an estimator that needs `n` executions per circuit needs
/// `n · terms` executions on the whole objective.
#[derive(Clone, Debug)]
pub struct Problem {
    terms: Vec<ProblemTerm>,
    offset: f64,
}

impl Problem {
    pub fn new(terms: Vec<ProblemTerm>, offset: f64) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| Error::InvalidArgument("objective has no terms".into()))?;
        let d = first.circuit.num_params();
        for t in &terms {
            if t.circuit.num_params() != d {
                return Err(Error::mismatch("term parameter count", d, t.circuit.num_params()));
            }
            t.observable
                .validate(&crate::sim::RegisterLayout::plain(t.circuit.n_qubits()))?;
        }
        Ok(Self { terms, offset })
    }

    pub fn single(circuit: ParamCircuit, observable: ObservableExpr) -> Result<Self> {
        Self::new(
            vec![ProblemTerm {
                circuit,
                observable,
                weight: 1.0,
            }],
            0.0,
        )
    }

    pub fn terms(&self) -> &[ProblemTerm] {
        &self.terms
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn num_params(&self) -> usize {
        self.terms[0].circuit.num_params()
    }

    /// Upper bound on `sup |F − offset|`.
    pub fn norm_bound(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.weight.abs() * t.observable.norm_bound())
            .sum()
    }

    fn combine<F>(&self, mut per_term: F) -> Result<f64>
    where
        F: FnMut(usize, &ProblemTerm) -> Result<f64>,
    {
        let mut acc = 0.0;
        for (k, t) in self.terms.iter().enumerate() {
            acc += t.weight * per_term(k, t)?;
        }
        Ok(acc)
    }

    pub fn value(&self, theta: &[f64], shots: Shots, seed: u64, counter: &ExecutionCounter) -> Result<f64> {
        let v = self.combine(|k, t| {
            eval_f(&t.circuit, theta, &t.observable, shots, derive_seed(seed, k as u64), counter)
        })?;
        Ok(self.offset + v)
    }

    /// Exact objective value for telemetry; not an execution.
    pub fn value_exact(&self, theta: &[f64]) -> Result<f64> {
        self.value(theta, Shots::Exact, 0, &ExecutionCounter::new())
    }

    pub fn gradient(&self, theta: &[f64], shots: Shots, seed: u64, counter: &ExecutionCounter) -> Result<Vec<f64>> {
        let mut g = vec![0.0; self.num_params()];
        for (k, t) in self.terms.iter().enumerate() {
            let gk = psr_gradient(&t.circuit, theta, &t.observable, shots, derive_seed(seed, k as u64), counter)?;
            for (a, b) in g.iter_mut().zip(&gk.values) {
                *a += t.weight * b;
            }
        }
        Ok(g)
    }

    /// Exact parameter-shift gradient for telemetry; not counted.
    pub fn gradient_exact(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.gradient(theta, Shots::Exact, 0, &ExecutionCounter::new())
    }

    #[allow(clippy::too_many_arguments)]
    pub fn shadow(
        &self,
        theta: &[f64],
        v: &[f64],
        mode: ShadowMode,
        shots: Shots,
        seed: u64,
        counter: &ExecutionCounter,
    ) -> Result<f64> {
        self.combine(|k, t| {
            let s = derive_seed(seed, k as u64);
            let est = match mode {
                ShadowMode::TwoCall => estimate_shadow(&t.circuit, theta, v, &t.observable, shots, s, counter)?,
                ShadowMode::Fused => estimate_shadow_fused(&t.circuit, theta, v, &t.observable, shots, s, counter)?,
            };
            Ok(est.value)
        })
    }

    #[allow(clippy::too_many_arguments)]
    pub fn forward_difference(
        &self,
        theta: &[f64],
        v: &[f64],
        mu: f64,
        shots: Shots,
        seed: u64,
        counter: &ExecutionCounter,
    ) -> Result<f64> {
        self.combine(|k, t| {
            let s = derive_seed(seed, k as u64);
            Ok(rsgf_estimate_along(&t.circuit, theta, v, &t.observable, mu, shots, s, counter)?.value)
        })
    }

    #[allow(clippy::too_many_arguments)]
    pub fn spsa_gradient(
        &self,
        theta: &[f64],
        delta: &[f64],
        c: f64,
        shots: Shots,
        seed: u64,
        counter: &ExecutionCounter,
    ) -> Result<Vec<f64>> {
        let mut g = vec![0.0; self.num_params()];
        for (k, t) in self.terms.iter().enumerate() {
            let s = derive_seed(seed, k as u64);
            let e = spsa_estimate_along(&t.circuit, theta, delta, &t.observable, c, shots, s, counter)?;
            for (a, b) in g.iter_mut().zip(&e.gradient.values) {
                *a += t.weight * b;
            }
        }
        Ok(g)
    }
}

/// SPSA gain sequences `a_t = a/(t+1+A)^α`, `c_t = c/(t+1)^γ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpsaGains {
    pub a: f64,
    pub big_a: f64,
    pub c: f64,
    pub alpha_exp: f64,
    pub gamma_exp: f64,
}

impl SpsaGains {
    pub const ALPHA_EXP: f64 = 0.602;
    pub const GAMMA_EXP: f64 = 0.101;

    /// Standard exponents with `A = 0.1·T` and `a` chosen so that `a_0 = lr`.
    pub fn calibrated(lr: f64, c: f64, iterations: u64) -> Self {
        let big_a = 0.1 * iterations as f64;
        Self {
            a: lr * (1.0 + big_a).powf(Self::ALPHA_EXP),
            big_a,
            c,
            alpha_exp: Self::ALPHA_EXP,
            gamma_exp: Self::GAMMA_EXP,
        }
    }

    pub fn step_size(&self, t: u64) -> f64 {
        self.a / (t as f64 + 1.0 + self.big_a).powf(self.alpha_exp)
    }

    pub fn perturbation(&self, t: u64) -> f64 {
        self.c / (t as f64 + 1.0).powf(self.gamma_exp)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepSchedule {
    Constant(f64),
    SpsaGains(SpsaGains),
}

impl StepSchedule {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            StepSchedule::Constant(a) => *a > 0.0 && a.is_finite(),
            StepSchedule::SpsaGains(g) => {
                g.a > 0.0
                    && g.c > 0.0
                    && g.big_a >= 0.0
                    && (0.0 < g.alpha_exp && g.alpha_exp <= 1.0)
                    && (0.0 < g.gamma_exp && g.gamma_exp <= 1.0)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid step schedule {self:?}")))
        }
    }

    pub fn step_size(&self, t: u64) -> f64 {
        match self {
            StepSchedule::Constant(a) => *a,
            StepSchedule::SpsaGains(g) => g.step_size(t),
        }
    }
}

#[derive(Clone, Debug)]
pub struct OptimizerState {
    pub theta: Vec<f64>,
    pub t: u64,
    pub executions: u64,
    pub schedule: StepSchedule,
    pub seed: u64,
    rng: SeededRng,
}

impl OptimizerState {
    pub fn new(theta: Vec<f64>, schedule: StepSchedule, seed: u64) -> Result<Self> {
        schedule.validate()?;
        Ok(Self {
            theta,
            t: 0,
            executions: 0,
            schedule,
            seed,
            rng: rng_from_seed(seed),
        })
    }

    pub fn theta_norm(&self) -> f64 {
        self.theta.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    fn check(&self, problem: &Problem) -> Result<()> {
        if self.theta.len() != problem.num_params() {
            return Err(Error::mismatch("parameter vector", problem.num_params(), self.theta.len()));
        }
        Ok(())
    }

    fn next_seed(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn finish(&mut self, counter: &ExecutionCounter) {
        self.executions += counter.count();
        self.t += 1;
    }

    /// Draws the step's sub-seed without taking a step; used by drivers that
    /// need randomness aligned with the optimizer stream (batch sampling).
    pub fn draw_seed(&mut self) -> u64 {
        self.next_seed()
    }
}

/// Direction draw and estimate from one optimizer step, for diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct StepReport {
    pub direction: Option<Vec<f64>>,
    pub estimate: f64,
    pub executions_used: u64,
}

/// `θ ← θ − α_t·D̂_v·v` with `v ~ N(0, I)` and `D̂_v` from inner-product circuits.
pub fn ssd_step(state: &mut OptimizerState, problem: &Problem, mode: ShadowMode, shots: Shots) -> Result<StepReport> {
    state.check(problem)?;
    let seed = state.next_seed();
    let v = gaussian_direction(problem.num_params(), derive_seed(seed, 0));
    let counter = ExecutionCounter::new();
    let dv = problem.shadow(&state.theta, &v, mode, shots, derive_seed(seed, 1), &counter)?;
    let alpha = state.schedule.step_size(state.t);
    for (t, x) in state.theta.iter_mut().zip(&v) {
        *t -= alpha * dv * x;
    }
    state.finish(&counter);
    Ok(StepReport {
        direction: Some(v),
        estimate: dv,
        executions_used: counter.count(),
    })
}

/// `θ ← θ − α_t·∇f` with the parameter-shift gradient (`2d` executions per term).
pub fn sgd_step(state: &mut OptimizerState, problem: &Problem, shots: Shots) -> Result<StepReport> {
    state.check(problem)?;
    let seed = state.next_seed();
    let counter = ExecutionCounter::new();
    let g = problem.gradient(&state.theta, shots, seed, &counter)?;
    let alpha = state.schedule.step_size(state.t);
    for (t, x) in state.theta.iter_mut().zip(&g) {
        *t -= alpha * x;
    }
    state.finish(&counter);
    Ok(StepReport {
        direction: None,
        estimate: g.iter().map(|x| x * x).sum::<f64>().sqrt(),
        executions_used: counter.count(),
    })
}

/// `θ ← θ − α_t·g·v` with the forward difference `g = (f(θ+μv) − f(θ))/μ`.
pub fn rsgf_step(state: &mut OptimizerState, problem: &Problem, mu: f64, shots: Shots) -> Result<StepReport> {
    state.check(problem)?;
    if !(mu > 0.0) {
        return Err(Error::InvalidArgument(format!("mu must be positive, got {mu}")));
    }
    let seed = state.next_seed();
    let v = gaussian_direction(problem.num_params(), derive_seed(seed, 0));
    let counter = ExecutionCounter::new();
    let g = problem.forward_difference(&state.theta, &v, mu, shots, derive_seed(seed, 1), &counter)?;
    let alpha = state.schedule.step_size(state.t);
    for (t, x) in state.theta.iter_mut().zip(&v) {
        *t -= alpha * g * x;
    }
    state.finish(&counter);
    Ok(StepReport {
        direction: Some(v),
        estimate: g,
        executions_used: counter.count(),
    })
}

/// `θ ← θ − a_t·ĝ` with the simultaneous-perturbation estimate at `c_t`.
/// Requires a [`StepSchedule::SpsaGains`] schedule.
pub fn spsa_step(state: &mut OptimizerState, problem: &Problem, shots: Shots) -> Result<StepReport> {
    state.check(problem)?;
    let gains = match state.schedule {
        StepSchedule::SpsaGains(g) => g,
        StepSchedule::Constant(_) => {
            return Err(Error::InvalidConfig("SPSA needs an SPSA gain schedule".into()))
        }
    };
    let seed = state.next_seed();
    let delta = rademacher_direction(problem.num_params(), derive_seed(seed, 0));
    let counter = ExecutionCounter::new();
    let (a_t, c_t) = (gains.step_size(state.t), gains.perturbation(state.t));
    let g = problem.spsa_gradient(&state.theta, &delta, c_t, shots, derive_seed(seed, 1), &counter)?;
    for (t, x) in state.theta.iter_mut().zip(&g) {
        *t -= a_t * x;
    }
    state.finish(&counter);
    Ok(StepReport {
        direction: Some(delta),
        estimate: g.iter().map(|x| x * x).sum::<f64>().sqrt(),
        executions_used: counter.count(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Ssd(ShadowMode),
    Sgd,
    Rsgf { mu: f64 },
    Spsa,
}

impl Optimizer {
    /// Executions per step on a single-term objective with `d` parameters.
    pub fn executions_per_step(&self, d: usize) -> u64 {
        match self {
            Optimizer::Ssd(ShadowMode::TwoCall) => 2,
            Optimizer::Ssd(ShadowMode::Fused) => 1,
            Optimizer::Sgd => 2 * d as u64,
            Optimizer::Rsgf { .. } | Optimizer::Spsa => 2,
        }
    }
}

pub fn step(state: &mut OptimizerState, optimizer: &Optimizer, problem: &Problem, shots: Shots) -> Result<StepReport> {
    match *optimizer {
        Optimizer::Ssd(mode) => ssd_step(state, problem, mode, shots),
        Optimizer::Sgd => sgd_step(state, problem, shots),
        Optimizer::Rsgf { mu } => rsgf_step(state, problem, mu, shots),
        Optimizer::Spsa => spsa_step(state, problem, shots),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub optimizer: Optimizer,
    pub schedule: StepSchedule,
    pub shots: Shots,
    pub iterations: u64,
    pub seed: u64,
    pub theta0: Vec<f64>,
    /// Stop once the exact gradient norm drops to this value.
    pub grad_tol: Option<f64>,
    /// Charge the exact-gradient telemetry to the execution ledger.
    pub count_instrumentation: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub t: u64,
    pub loss: f64,
    pub executions: u64,
    pub theta_norm: f64,
    pub grad_norm_sq: Option<f64>,
    pub seed: u64,
}

/// Runs up to `iterations` steps; the first record is the starting point.
pub fn run_optimizer(config: &RunConfig, problem: &Problem) -> Result<Vec<RunRecord>> {
    if config.iterations == 0 {
        return Err(Error::InvalidConfig("iterations must be at least 1".into()));
    }
    if let Optimizer::Rsgf { mu } = config.optimizer {
        if !(mu > 0.0) {
            return Err(Error::InvalidConfig(format!("mu must be positive, got {mu}")));
        }
    }
    let mut state = OptimizerState::new(config.theta0.clone(), config.schedule, config.seed)?;
    state.check(problem)?;
    let d = problem.num_params() as u64;

    let mut records = Vec::with_capacity(config.iterations as usize + 1);
    let mut observe = |state: &mut OptimizerState| -> Result<bool> {
        let grad_norm_sq = match config.grad_tol {
            Some(_) => {
                let g = problem.gradient_exact(&state.theta)?;
                if config.count_instrumentation {
                    state.executions += 2 * d * problem.terms().len() as u64;
                }
                Some(g.iter().map(|x| x * x).sum::<f64>())
            }
            None => None,
        };
        records.push(RunRecord {
            t: state.t,
            loss: problem.value_exact(&state.theta)?,
            executions: state.executions,
            theta_norm: state.theta_norm(),
            grad_norm_sq,
            seed: config.seed,
        });
        Ok(matches!((grad_norm_sq, config.grad_tol), (Some(g), Some(tol)) if g <= tol * tol))
    };

    if observe(&mut state)? {
        return Ok(records);
    }
    for _ in 0..config.iterations {
        step(&mut state, &config.optimizer, problem, config.shots)?;
        if observe(&mut state)? {
            break;
        }
    }
    Ok(records)
}

/// Constants of the fixed-step convergence guarantee.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceBudget {
    /// Smoothness constant `L`.
    pub lipschitz: f64,
    /// Variance bound `η²` of the directional-derivative estimates.
    pub eta2: f64,
    /// Target `ε`.
    pub eps: f64,
    /// Upper bound on `f(θ⁰) − f*`.
    pub f0_gap: f64,
}

impl ConvergenceBudget {
    pub fn validate(&self) -> Result<()> {
        if !(self.lipschitz > 0.0) {
            return Err(Error::InvalidArgument(format!("L must be positive, got {}", self.lipschitz)));
        }
        if !(self.eta2 >= 0.0) {
            return Err(Error::InvalidArgument(format!("eta^2 must be non-negative, got {}", self.eta2)));
        }
        if !(self.eps > 0.0) {
            return Err(Error::InvalidArgument(format!("epsilon must be positive, got {}", self.eps)));
        }
        if !(self.f0_gap > 0.0) {
            return Err(Error::InvalidArgument(format!("f0 gap must be positive, got {}", self.f0_gap)));
        }
        Ok(())
    }
}

fn check_dim(d: usize) -> Result<f64> {
    if d < 1 {
        return Err(Error::InvalidArgument("d must be at least 1".into()));
    }
    Ok(d as f64)
}

/// `α = min{1/(L(d+2)), ε²/(2Ldη²)}`; the second term is `+∞` when `η² = 0`.
pub fn recommended_alpha(budget: &ConvergenceBudget, d: usize) -> Result<f64> {
    budget.validate()?;
    let d = check_dim(d)?;
    let l = budget.lipschitz;
    let first = 1.0 / (l * (d + 2.0));
    let second = if budget.eta2 == 0.0 {
        f64::INFINITY
    } else {
        budget.eps * budget.eps / (2.0 * l * d * budget.eta2)
    };
    Ok(first.min(second))
}

/// `T = ⌈(4(f(θ⁰) − f*)/ε²)·max{L(d+2), 2Ldη²/ε²}⌉`.
pub fn required_iterations(budget: &ConvergenceBudget, d: usize) -> Result<u64> {
    budget.validate()?;
    let d = check_dim(d)?;
    let (l, eps2) = (budget.lipschitz, budget.eps * budget.eps);
    let bound = 4.0 * budget.f0_gap / eps2 * (l * (d + 2.0)).max(2.0 * l * d * budget.eta2 / eps2);
    // absorb rounding noise such as 800.0000000001 before taking the ceiling
    let nearest = bound.round();
    let t = if (bound - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        bound.ceil()
    };
    Ok(t as u64)
}

/// `L ≤ d·‖H‖` for objectives built from Pauli-generated rotations.
pub fn smoothness_bound(d: usize, h_norm: f64) -> f64 {
    d as f64 * h_norm.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_basic_entangler, Slot};
    use crate::sim::Axis;
    use std::f64::consts::FRAC_PI_2;

    fn rx1() -> ParamCircuit {
        ParamCircuit::new(
            1,
            vec![],
            vec![Slot {
                axis: Axis::X,
                qubit: 0,
                fixed: vec![],
            }],
        )
        .unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() < tol)
    }

    fn budget(l: f64, eta2: f64, eps: f64, gap: f64) -> ConvergenceBudget {
        ConvergenceBudget {
            lipschitz: l,
            eta2,
            eps,
            f0_gap: gap,
        }
    }

    #[test]
    fn alpha_examples() {
        assert_eq!(recommended_alpha(&budget(1.0, 0.0, 1.0, 1.0), 2).unwrap(), 0.25);
        assert_eq!(recommended_alpha(&budget(1.0, 1.0, 1.0, 1.0), 2).unwrap(), 0.25);
        let a = recommended_alpha(&budget(2.0, 0.5, 0.1, 1.0), 120).unwrap();
        assert!((a - 0.01 / 240.0).abs() < 1e-15);
        assert!((a - 4.1667e-5).abs() < 1e-9);
        assert!(recommended_alpha(&budget(0.0, 0.0, 1.0, 1.0), 2).is_err());
        assert!(recommended_alpha(&budget(1.0, 0.0, 1.0, 1.0), 0).is_err());
    }

    #[test]
    fn iteration_examples() {
        assert_eq!(required_iterations(&budget(1.0, 0.0, 1.0, 1.0), 2).unwrap(), 16);
        assert_eq!(required_iterations(&budget(1.0, 1.0, 1.0, 1.0), 2).unwrap(), 16);
        assert_eq!(required_iterations(&budget(2.0, 0.5, 0.1, 2.0), 120).unwrap(), 19_200_000);
        assert!(required_iterations(&budget(1.0, 0.0, 0.0, 1.0), 2).is_err());
        assert!(required_iterations(&budget(1.0, 0.0, -1.0, 1.0), 2).is_err());
    }

    #[test]
    fn smoothness_examples() {
        assert_eq!(smoothness_bound(1, 1.0), 1.0);
        assert_eq!(smoothness_bound(4, ObservableExpr::z(4, 0).norm_bound()), 4.0);
    }

    #[test]
    fn ssd_step_closed_form() {
        let p = Problem::single(rx1(), ObservableExpr::z(1, 0)).unwrap();
        let mut s = OptimizerState::new(vec![FRAC_PI_2], StepSchedule::Constant(0.1), 4).unwrap();
        let r = ssd_step(&mut s, &p, ShadowMode::TwoCall, Shots::Exact).unwrap();
        let v = r.direction.unwrap()[0];
        assert!((r.estimate + v).abs() < 1e-12);
        assert!((s.theta[0] - (FRAC_PI_2 + 0.1 * v * v)).abs() < 1e-12);
        assert_eq!(s.executions, 2);

        let mut f = OptimizerState::new(vec![FRAC_PI_2], StepSchedule::Constant(0.1), 4).unwrap();
        ssd_step(&mut f, &p, ShadowMode::Fused, Shots::Exact).unwrap();
        assert!((f.theta[0] - s.theta[0]).abs() < 1e-12);
        assert_eq!(f.executions, 1);
    }

    #[test]
    fn step_counts_over_many_iterations() {
        let c = build_basic_entangler(4, 1).unwrap();
        let p = Problem::single(c, ObservableExpr::z(4, 0)).unwrap();
        for (mode, want) in [(ShadowMode::TwoCall, 400), (ShadowMode::Fused, 200)] {
            let mut s = OptimizerState::new(vec![0.3; 4], StepSchedule::Constant(0.05), 1).unwrap();
            for _ in 0..200 {
                ssd_step(&mut s, &p, mode, Shots::Exact).unwrap();
            }
            assert_eq!(s.executions, want);
        }
    }

    #[test]
    fn sgd_step_examples() {
        let p = Problem::single(rx1(), ObservableExpr::z(1, 0)).unwrap();
        // L = 1 for cos θ
        let mut s = OptimizerState::new(vec![0.4], StepSchedule::Constant(1.0), 0).unwrap();
        let mut last = p.value_exact(&s.theta).unwrap();
        for _ in 0..20 {
            sgd_step(&mut s, &p, Shots::Exact).unwrap();
            let now = p.value_exact(&s.theta).unwrap();
            assert!(now <= last + 1e-12);
            last = now;
        }
        let mut z = OptimizerState::new(vec![0.0], StepSchedule::Constant(0.3), 0).unwrap();
        sgd_step(&mut z, &Problem::single(rx1(), ObservableExpr::z(1, 0)).unwrap(), Shots::Exact).unwrap();
        assert!(z.theta[0].abs() < 1e-15);
        assert_eq!(z.executions, 2);

        let big = crate::circuit::build_strongly_entangling(10, 4).unwrap();
        let pb = Problem::single(big, ObservableExpr::z(10, 0)).unwrap();
        let mut sb = OptimizerState::new(vec![0.1; 120], StepSchedule::Constant(0.1), 0).unwrap();
        let r = sgd_step(&mut sb, &pb, Shots::Exact).unwrap();
        assert_eq!(r.executions_used, 240);
    }

    #[test]
    fn rsgf_and_spsa_on_constant_objective() {
        let p = Problem::single(build_basic_entangler(2, 1).unwrap(), ObservableExpr::identity(2)).unwrap();
        let mut s = OptimizerState::new(vec![0.2, 0.9], StepSchedule::Constant(0.5), 3).unwrap();
        rsgf_step(&mut s, &p, 1e-3, Shots::Exact).unwrap();
        assert!(close(&s.theta, &[0.2, 0.9], 1e-9));
        assert!(rsgf_step(&mut s, &p, 0.0, Shots::Exact).is_err());

        let gains = StepSchedule::SpsaGains(SpsaGains::calibrated(0.1, 0.1, 10));
        let mut s = OptimizerState::new(vec![0.2, 0.9], gains, 3).unwrap();
        for _ in 0..5 {
            spsa_step(&mut s, &p, Shots::Exact).unwrap();
        }
        assert!(close(&s.theta, &[0.2, 0.9], 1e-12));
        assert_eq!(s.executions, 10);

        let mut c = OptimizerState::new(vec![0.2, 0.9], StepSchedule::Constant(0.1), 3).unwrap();
        assert!(spsa_step(&mut c, &p, Shots::Exact).is_err());
    }

    #[test]
    fn rsgf_tracks_ssd_for_small_mu() {
        let p = Problem::single(rx1(), ObservableExpr::z(1, 0)).unwrap();
        let mut a = OptimizerState::new(vec![1.1], StepSchedule::Constant(0.1), 8).unwrap();
        let mut b = a.clone();
        ssd_step(&mut a, &p, ShadowMode::TwoCall, Shots::Exact).unwrap();
        rsgf_step(&mut b, &p, 1e-6, Shots::Exact).unwrap();
        // same seed stream, so the same v is drawn
        assert!((a.theta[0] - b.theta[0]).abs() < 1e-5);
    }

    #[test]
    fn spsa_step_descends_in_one_dimension() {
        let p = Problem::single(rx1(), ObservableExpr::z(1, 0)).unwrap();
        let gains = SpsaGains {
            a: 0.1,
            big_a: 0.0,
            c: 1e-4,
            alpha_exp: SpsaGains::ALPHA_EXP,
            gamma_exp: SpsaGains::GAMMA_EXP,
        };
        for seed in 0..5 {
            let mut s = OptimizerState::new(vec![1.0], StepSchedule::SpsaGains(gains), seed).unwrap();
            spsa_step(&mut s, &p, Shots::Exact).unwrap();
            // f' = −sin 1 < 0, so θ must increase
            assert!(s.theta[0] > 1.0);
        }
        let g = SpsaGains::calibrated(0.1, 0.1, 100);
        assert!((g.step_size(0) - 0.1).abs() < 1e-12);
        assert!((g.perturbation(0) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn run_optimizer_contracts() {
        let c = build_basic_entangler(4, 2).unwrap();
        let p = Problem::single(c, ObservableExpr::z(4, 0)).unwrap();
        let cfg = |optimizer| RunConfig {
            optimizer,
            schedule: StepSchedule::Constant(0.05),
            shots: Shots::Finite(64),
            iterations: 10,
            seed: 21,
            theta0: vec![0.4; 8],
            grad_tol: None,
            count_instrumentation: false,
        };
        let a = run_optimizer(&cfg(Optimizer::Ssd(ShadowMode::TwoCall)), &p).unwrap();
        let b = run_optimizer(&cfg(Optimizer::Ssd(ShadowMode::TwoCall)), &p).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 11);
        let sgd = run_optimizer(&cfg(Optimizer::Sgd), &p).unwrap();
        assert_eq!(a.last().unwrap().executions, 20);
        assert_eq!(sgd.last().unwrap().executions, 160);
        assert!(a.windows(2).all(|w| w[0].executions <= w[1].executions));

        let mut zero = cfg(Optimizer::Sgd);
        zero.iterations = 0;
        assert!(run_optimizer(&zero, &p).is_err());

        let mut stop = cfg(Optimizer::Sgd);
        stop.shots = Shots::Exact;
        stop.theta0 = vec![0.0; 8];
        stop.grad_tol = Some(1e-8);
        let recs = run_optimizer(&stop, &p).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].executions, 0);
        stop.count_instrumentation = true;
        assert_eq!(run_optimizer(&stop, &p).unwrap()[0].executions, 16);
    }

    #[test]
    fn schedule_validation() {
        assert!(OptimizerState::new(vec![0.0], StepSchedule::Constant(0.0), 0).is_err());
        let mut g = SpsaGains::calibrated(0.1, 0.1, 10);
        g.alpha_exp = 1.5;
        assert!(StepSchedule::SpsaGains(g).validate().is_err());
    }
}
