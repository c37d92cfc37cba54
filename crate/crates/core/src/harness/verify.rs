//! Self-check suites behind `ssd verify`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::circuit::{build_basic_entangler, eval_f, ExecutionCounter, ParamCircuit, Shots, Slot};
use crate::deriv::{gaussian_direction, psr_gradient, psr_partial, shifted_sums};
use crate::error::{Error, Result};
use crate::ipc::{build_ipc, combine_halves, estimate_half_shadow, estimate_shadow, estimate_shadow_fused, ShiftSign};
use crate::optim::{ssd_step, sgd_step, OptimizerState, Problem, ShadowMode, StepSchedule};
use crate::rng::{derive_seed, rng_from_seed, SeededRng};
use crate::sim::{Axis, GateOp, ObservableExpr, PauliTerm};

/// Deliberate defect used to check that the suites can fail.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Fault {
    #[default]
    None,
    /// Negates the `d/2` factor when combining half shadows.
    SignFlip,
}

impl FromStr for Fault {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Fault::None),
            "sign-flip" => Ok(Fault::SignFlip),
            _ => Err(Error::InvalidArgument(format!("unknown fault {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    pub worst: f64,
    pub detail: String,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<11} {:<4} {:>3}/{:<3} worst={:.3e}  {}",
            self.name,
            if self.passed() { "PASS" } else { "FAIL" },
            self.cases - self.failures,
            self.cases,
            self.worst,
            self.detail
        )
    }
}

/// A random circuit with `n` qubits and `d` parameters, plus a point, a
/// direction and a Pauli observable to evaluate it with.
#[derive(Clone, Debug)]
pub struct RandomCase {
    pub circuit: ParamCircuit,
    pub theta: Vec<f64>,
    pub v: Vec<f64>,
    pub observable: ObservableExpr,
}

fn random_axis(rng: &mut SeededRng) -> Axis {
    [Axis::X, Axis::Y, Axis::Z][rng.random_range(0..3)]
}

fn random_fixed(n: usize, rng: &mut SeededRng) -> Vec<GateOp> {
    (0..rng.random_range(0..3))
        .map(|_| match rng.random_range(0..3) {
            0 if n > 1 => {
                let c = rng.random_range(0..n);
                let t = (c + rng.random_range(1..n)) % n;
                GateOp::cnot(c, t)
            }
            1 => GateOp::h(rng.random_range(0..n)),
            _ => GateOp::rotation(random_axis(rng), rng.random_range(0..n), rng.random_range(-3.0..3.0)),
        })
        .collect()
}

pub fn random_case(n: usize, d: usize, seed: u64) -> Result<RandomCase> {
    let mut rng = rng_from_seed(seed);
    let prefix = (0..n).map(GateOp::h).collect();
    let slots = (0..d)
        .map(|_| Slot {
            axis: random_axis(&mut rng),
            qubit: rng.random_range(0..n),
            fixed: random_fixed(n, &mut rng),
        })
        .collect();
    let circuit = ParamCircuit::new(n, prefix, slots)?;
    let terms = (0..rng.random_range(1..=3))
        .map(|_| {
            let letters: String = (0..n).map(|_| ['I', 'X', 'Y', 'Z'][rng.random_range(0..4)]).collect();
            PauliTerm::parse(rng.random_range(-1.0..1.0), &letters)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RandomCase {
        circuit,
        theta: (0..d).map(|_| rng.random_range(-3.2..3.2)).collect(),
        v: gaussian_direction(d, rng.random()),
        observable: ObservableExpr::from_terms(terms),
    })
}

fn small_case(k: u64, seed: u64) -> Result<RandomCase> {
    let mut rng = rng_from_seed(derive_seed(seed, k));
    let n = rng.random_range(1..=4);
    let d = rng.random_range(1..=6);
    random_case(n, d, rng.random())
}

struct Tally {
    cases: usize,
    failures: usize,
    worst: f64,
}

impl Tally {
    fn new() -> Self {
        Self {
            cases: 0,
            failures: 0,
            worst: 0.0,
        }
    }

    fn check(&mut self, err: f64, tol: f64) {
        self.cases += 1;
        self.worst = self.worst.max(err);
        if !(err <= tol) {
            self.failures += 1;
        }
    }

    fn report(self, name: &'static str, detail: String) -> SuiteReport {
        SuiteReport {
            name,
            cases: self.cases,
            failures: self.failures,
            worst: self.worst,
            detail,
        }
    }
}

const CASES: u64 = 20;

fn suite_psr(seed: u64) -> Result<SuiteReport> {
    let mut tally = Tally::new();
    let n0 = ExecutionCounter::new();
    let h = 1e-5;
    for k in 0..CASES {
        let c = small_case(k, seed)?;
        for i in 0..c.theta.len() {
            let psr = psr_partial(&c.circuit, &c.theta, &c.observable, i, Shots::Exact, 0, &n0)?;
            let mut tp = c.theta.clone();
            let mut tm = c.theta.clone();
            tp[i] += h;
            tm[i] -= h;
            let fd = (eval_f(&c.circuit, &tp, &c.observable, Shots::Exact, 0, &n0)?
                - eval_f(&c.circuit, &tm, &c.observable, Shots::Exact, 0, &n0)?)
                / (2.0 * h);
            tally.check((psr - fd).abs(), 1e-6);
        }
    }
    Ok(tally.report("psr", "parameter shift vs central difference, tol 1e-6".into()))
}

fn suite_ipc_oracle(seed: u64, fault: Fault) -> Result<SuiteReport> {
    let mut tally = Tally::new();
    let n0 = ExecutionCounter::new();
    for k in 0..CASES {
        let c = small_case(k, seed)?;
        let d = c.theta.len();
        let (plus_ref, minus_ref) = shifted_sums(&c.circuit, &c.theta, &c.v, &c.observable, &n0)?;
        let mut halves = [0.0; 2];
        for (slot, (sign, reference)) in [(ShiftSign::Plus, plus_ref), (ShiftSign::Minus, minus_ref)].into_iter().enumerate() {
            let (ipc, obs) = build_ipc(&c.circuit, &c.v, sign, &c.observable)?;
            halves[slot] = estimate_half_shadow(&ipc, &obs, &c.theta, Shots::Exact, 0, &n0)?;
            tally.check((halves[slot] - reference / d as f64).abs(), 1e-9);
        }
        let combined = match fault {
            Fault::None => combine_halves(d, halves[0], halves[1]),
            Fault::SignFlip => -combine_halves(d, halves[0], halves[1]),
        };
        let g = psr_gradient(&c.circuit, &c.theta, &c.observable, Shots::Exact, 0, &n0)?;
        tally.check((combined - g.dot(&c.v)).abs(), 1e-9);
    }
    Ok(tally.report("ipc-oracle", "half shadows vs shifted sums, shadow vs <grad, v>, tol 1e-9".into()))
}

fn suite_fused(seed: u64) -> Result<SuiteReport> {
    let mut tally = Tally::new();
    let mut miscounts = 0;
    for k in 0..CASES {
        let c = small_case(k, seed)?;
        let (two, one) = (ExecutionCounter::new(), ExecutionCounter::new());
        let a = estimate_shadow(&c.circuit, &c.theta, &c.v, &c.observable, Shots::Exact, 0, &two)?;
        let b = estimate_shadow_fused(&c.circuit, &c.theta, &c.v, &c.observable, Shots::Exact, 0, &one)?;
        if two.count() != 2 || one.count() != 1 {
            miscounts += 1;
        }
        tally.check((a.value - b.value).abs(), 1e-9);
    }
    tally.failures += miscounts;
    Ok(tally.report("fused", format!("fused vs two-call, tol 1e-9; execution miscounts {miscounts}")))
}

fn suite_unbiased(seed: u64) -> Result<SuiteReport> {
    let c = random_case(3, 4, derive_seed(seed, 0x9201))?;
    let n0 = ExecutionCounter::new();
    let g = psr_gradient(&c.circuit, &c.theta, &c.observable, Shots::Exact, 0, &n0)?.values;
    let draws = 4000;
    let d = g.len();
    let (mut sum, mut sum_sq) = (vec![0.0; d], vec![0.0; d]);
    for k in 0..draws {
        let v = gaussian_direction(d, derive_seed(seed, 1_000 + k));
        let dv = estimate_shadow(&c.circuit, &c.theta, &v, &c.observable, Shots::Exact, 0, &n0)?.value;
        for i in 0..d {
            let x = dv * v[i];
            sum[i] += x;
            sum_sq[i] += x * x;
        }
    }
    let mut tally = Tally::new();
    let nf = draws as f64;
    for i in 0..d {
        let mean = sum[i] / nf;
        let var = (sum_sq[i] / nf - mean * mean) * nf / (nf - 1.0);
        let se = (var / nf).sqrt().max(1e-12);
        tally.check((mean - g[i]).abs() / se, 4.0);
    }
    Ok(tally.report("unbiased", format!("mean of D_v v over {draws} draws vs gradient, within 4 SE")))
}

fn suite_counting(seed: u64) -> Result<SuiteReport> {
    let circuit = build_basic_entangler(4, 2)?;
    let problem = Problem::single(circuit, ObservableExpr::z(4, 0))?;
    let theta0 = vec![0.3; 8];
    let steps = 5;
    let mut tally = Tally::new();
    let mut run = |f: &dyn Fn(&mut OptimizerState) -> Result<()>, want: u64| -> Result<()> {
        let mut s = OptimizerState::new(theta0.clone(), StepSchedule::Constant(0.1), seed)?;
        for _ in 0..steps {
            f(&mut s)?;
        }
        tally.check(s.executions.abs_diff(want) as f64, 0.0);
        Ok(())
    };
    run(&|s| ssd_step(s, &problem, ShadowMode::TwoCall, Shots::Exact).map(drop), 2 * steps)?;
    run(&|s| ssd_step(s, &problem, ShadowMode::Fused, Shots::Exact).map(drop), steps)?;
    run(&|s| sgd_step(s, &problem, Shots::Exact).map(drop), 2 * 8 * steps)?;
    Ok(tally.report("counting", "ssd 2T, ssd-fused T, sgd 2dT at d = 8".into()))
}

type Suite<'a> = Box<dyn Fn() -> Result<SuiteReport> + 'a>;

/// Runs every suite; a suite that errors is reported as failed.
pub fn run_verify(seed: u64, fault: Fault) -> Vec<SuiteReport> {
    let failed = |name: &'static str, e: Error| SuiteReport {
        name,
        cases: 1,
        failures: 1,
        worst: f64::NAN,
        detail: format!("error: {e}"),
    };
    let suites: [(&'static str, Suite<'_>); 5] = [
        ("psr", Box::new(|| suite_psr(seed))),
        ("ipc-oracle", Box::new(|| suite_ipc_oracle(seed, fault))),
        ("fused", Box::new(|| suite_fused(seed))),
        ("unbiased", Box::new(|| suite_unbiased(seed))),
        ("counting", Box::new(|| suite_counting(seed))),
    ];
    suites
        .into_iter()
        .map(|(name, f)| f().unwrap_or_else(|e| failed(name, e)))
        .collect()
}
