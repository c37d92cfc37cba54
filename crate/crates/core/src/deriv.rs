//! Classical derivative estimators built from plain circuit evaluations:
//! parameter-shift gradients, the 2d-execution directional-derivative
//! reference, and the forward/central-difference zeroth-order estimators.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::circuit::{eval_f, ExecutionCounter, ParamCircuit, Shots};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};
use crate::sim::ObservableExpr;

#[derive(Clone, Debug, PartialEq)]
pub struct GradientVector {
    pub values: Vec<f64>,
    pub executions_used: u64,
}

impl GradientVector {
    pub fn dot(&self, v: &[f64]) -> f64 {
        self.values.iter().zip(v).map(|(g, x)| g * x).sum()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|g| g * g).sum()
    }
}

/// A directional-derivative sample `value ≈ ⟨∇f(θ), v⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectionalSample {
    pub v: Vec<f64>,
    pub value: f64,
    /// Perturbation scale; 0 for shift-rule based estimates.
    pub mu: f64,
    pub executions_used: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpsaEstimate {
    pub delta: Vec<f64>,
    pub c: f64,
    pub gradient: GradientVector,
}

/// Standard normal direction drawn from `seed`.
pub fn gaussian_direction(d: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

/// Uniform ±1 direction drawn from `seed`.
pub fn rademacher_direction(d: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    (0..d)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect()
}

fn shifted(theta: &[f64], i: usize, delta: f64) -> Vec<f64> {
    let mut t = theta.to_vec();
    t[i] += delta;
    t
}

fn check_direction(circ: &ParamCircuit, v: &[f64]) -> Result<()> {
    if v.len() != circ.num_params() {
        return Err(Error::mismatch("direction vector", circ.num_params(), v.len()));
    }
    Ok(())
}

/// `∂_i f = ½(f(θ + π/2·e_i) − f(θ − π/2·e_i))`; `i` is zero-based.
pub fn psr_partial(
    circ: &ParamCircuit,
    theta: &[f64],
    obs: &ObservableExpr,
    i: usize,
    shots: Shots,
    seed: u64,
    counter: &ExecutionCounter,
) -> Result<f64> {
    circ.check_params(theta)?;
    if i >= circ.num_params() {
        return Err(Error::InvalidArgument(format!(
            "parameter index {i} out of range for d = {}",
            circ.num_params()
        )));
    }
    let plus = eval_f(circ, &shifted(theta, i, FRAC_PI_2), obs, shots, derive_seed(seed, 0), counter)?;
    let minus = eval_f(circ, &shifted(theta, i, -FRAC_PI_2), obs, shots, derive_seed(seed, 1), counter)?;
    Ok(0.5 * (plus - minus))
}

/// Full parameter-shift gradient; uses exactly `2d` executions.
pub fn psr_gradient(
    circ: &ParamCircuit,
    theta: &[f64],
    obs: &ObservableExpr,
    shots: Shots,
    seed: u64,
    counter: &ExecutionCounter,
) -> Result<GradientVector> {
    circ.check_params(theta)?;
    let local = ExecutionCounter::new();
    let values = (0..circ.num_params())
        .into_par_iter()
        .map(|i| psr_partial(circ, theta, obs, i, shots, derive_seed(seed, i as u64), &local))
        .collect::<Result<Vec<_>>>()?;
    let used = local.count();
    counter.record(used);
    Ok(GradientVector {
        values,
        executions_used: used,
    })
}

/// Reference `D_v(θ) = (d/2)(D⁺ − D⁻)` with `D^s = (1/d)Σ_i f(θ + s·π/2·e_i)·v_i`,
/// summed term by term from `2d` exact evaluations.
pub fn directional_oracle(
    circ: &ParamCircuit,
    theta: &[f64],
    v: &[f64],
    obs: &ObservableExpr,
    counter: &ExecutionCounter,
) -> Result<DirectionalSample> {
    circ.check_params(theta)?;
    check_direction(circ, v)?;
    let d = circ.num_params();
    let (plus, minus) = shifted_sums(circ, theta, v, obs, counter)?;
    let df = d as f64;
    Ok(DirectionalSample {
        v: v.to_vec(),
        value: df / 2.0 * (plus / df - minus / df),
        mu: 0.0,
        executions_used: 2 * d as u64,
    })
}

/// `(Σ_i f(θ + π/2·e_i)·v_i, Σ_i f(θ − π/2·e_i)·v_i)` from `2d` exact evaluations.
pub fn shifted_sums(
    circ: &ParamCircuit,
    theta: &[f64],
    v: &[f64],
    obs: &ObservableExpr,
    counter: &ExecutionCounter,
) -> Result<(f64, f64)> {
    let terms = (0..circ.num_params())
        .into_par_iter()
        .map(|i| {
            let p = eval_f(circ, &shifted(theta, i, FRAC_PI_2), obs, Shots::Exact, 0, counter)?;
            let m = eval_f(circ, &shifted(theta, i, -FRAC_PI_2), obs, Shots::Exact, 0, counter)?;
            Ok((p * v[i], m * v[i]))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(terms
        .into_iter()
        .fold((0.0, 0.0), |(a, b), (p, m)| (a + p, b + m)))
}

/// Forward difference `(f(θ + μv) − f(θ))/μ` along a Gaussian `v` drawn from `seed`.
#[allow(clippy::too_many_arguments)]
pub fn rsgf_estimate(
    circ: &ParamCircuit,
    theta: &[f64],
    obs: &ObservableExpr,
    mu: f64,
    shots: Shots,
    seed: u64,
    counter: &ExecutionCounter,
) -> Result<DirectionalSample> {
    let v = gaussian_direction(circ.num_params(), derive_seed(seed, 0));
    rsgf_estimate_along(circ, theta, &v, obs, mu, shots, seed, counter)
}

/// Forward difference along a caller-supplied direction.
#[allow(clippy::too_many_arguments)]
pub fn rsgf_estimate_along(
    circ: &ParamCircuit,
    theta: &[f64],
    v: &[f64],
    obs: &ObservableExpr,
    mu: f64,
    shots: Shots,
    seed: u64,
    counter: &ExecutionCounter,
) -> Result<DirectionalSample> {
    if !(mu > 0.0) {
        return Err(Error::InvalidArgument(format!("mu must be positive, got {mu}")));
    }
    circ.check_params(theta)?;
    check_direction(circ, v)?;
    let moved: Vec<f64> = theta.iter().zip(v).map(|(t, x)| t + mu * x).collect();
    let f_moved = eval_f(circ, &moved, obs, shots, derive_seed(seed, 1), counter)?;
    let f_here = eval_f(circ, theta, obs, shots, derive_seed(seed, 2), counter)?;
    Ok(DirectionalSample {
        v: v.to_vec(),
        value: (f_moved - f_here) / mu,
        mu,
        executions_used: 2,
    })
}

/// Simultaneous-perturbation gradient estimate with a Rademacher `Δ` from `seed`:
/// `g_i = (f(θ + cΔ) − f(θ − cΔ)) / (2cΔ_i)`.
#[allow(clippy::too_many_arguments)]
pub fn spsa_estimate(
    circ: &ParamCircuit,
    theta: &[f64],
    obs: &ObservableExpr,
    c: f64,
    shots: Shots,
    seed: u64,
    counter: &ExecutionCounter,
) -> Result<SpsaEstimate> {
    let delta = rademacher_direction(circ.num_params(), derive_seed(seed, 0));
    spsa_estimate_along(circ, theta, &delta, obs, c, shots, seed, counter)
}

#[allow(clippy::too_many_arguments)]
pub fn spsa_estimate_along(
    circ: &ParamCircuit,
    theta: &[f64],
    delta: &[f64],
    obs: &ObservableExpr,
    c: f64,
    shots: Shots,
    seed: u64,
    counter: &ExecutionCounter,
) -> Result<SpsaEstimate> {
    if !(c > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "perturbation c must be positive, got {c}"
        )));
    }
    circ.check_params(theta)?;
    check_direction(circ, delta)?;
    if delta.contains(&0.0) {
        return Err(Error::InvalidArgument("SPSA perturbation has a zero entry".into()));
    }
    let plus: Vec<f64> = theta.iter().zip(delta).map(|(t, x)| t + c * x).collect();
    let minus: Vec<f64> = theta.iter().zip(delta).map(|(t, x)| t - c * x).collect();
    let fp = eval_f(circ, &plus, obs, shots, derive_seed(seed, 1), counter)?;
    let fm = eval_f(circ, &minus, obs, shots, derive_seed(seed, 2), counter)?;
    let diff = fp - fm;
    Ok(SpsaEstimate {
        delta: delta.to_vec(),
        c,
        gradient: GradientVector {
            values: delta.iter().map(|x| diff / (2.0 * c * x)).collect(),
            executions_used: 2,
        },
    })
}
