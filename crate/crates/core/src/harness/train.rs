use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::data::{load_csv, load_iris, make_synthetic, Dataset, DatasetSpec};
use crate::circuit::{AnsatzFamily, AnsatzSpec, CircuitDescription, ParamCircuit, Shots};
use crate::error::{Error, Result};
use crate::optim::{step, Optimizer, OptimizerState, Problem, ProblemTerm, ShadowMode, SpsaGains, StepSchedule};
use crate::rng::{derive_seed, rng_from_seed};
use crate::sim::ObservableExpr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerKind {
    Ssd,
    SsdFused,
    Sgd,
    Rsgf,
    Spsa,
}

impl OptimizerKind {
    pub fn needs_mu(&self) -> bool {
        matches!(self, OptimizerKind::Rsgf | OptimizerKind::Spsa)
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ssd" => Ok(OptimizerKind::Ssd),
            "ssd-fused" => Ok(OptimizerKind::SsdFused),
            "sgd" => Ok(OptimizerKind::Sgd),
            "rsgf" => Ok(OptimizerKind::Rsgf),
            "spsa" => Ok(OptimizerKind::Spsa),
            _ => Err(Error::InvalidConfig(format!("unknown optimizer {s:?}"))),
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OptimizerKind::Ssd => "ssd",
            OptimizerKind::SsdFused => "ssd-fused",
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Rsgf => "rsgf",
            OptimizerKind::Spsa => "spsa",
        })
    }
}

fn default_separation() -> f64 {
    2.0
}

fn default_samples() -> usize {
    100
}

/// One training run. Serialises to the JSON accepted by `ssd run --config`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub optimizer: OptimizerKind,
    pub dataset: DatasetSpec,
    pub ansatz: AnsatzFamily,
    pub layers: usize,
    /// Defaults to the dataset's feature count.
    #[serde(default)]
    pub qubits: Option<usize>,
    pub lr: f64,
    /// Finite-difference scale for RSGF, initial perturbation `c` for SPSA.
    #[serde(default)]
    pub mu: Option<f64>,
    pub shots: Shots,
    pub iters: u64,
    pub seed: u64,
    pub batch: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_separation")]
    pub separation: f64,
    /// Record real elapsed time in `wall_ms` instead of zero.
    #[serde(default)]
    pub wall_clock: bool,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            optimizer: OptimizerKind::Ssd,
            dataset: DatasetSpec::Iris,
            ansatz: AnsatzFamily::BasicEntangler,
            layers: 2,
            qubits: None,
            lr: 0.1,
            mu: None,
            shots: Shots::Exact,
            iters: 100,
            seed: 0,
            batch: 1,
            samples: default_samples(),
            separation: default_separation(),
            wall_clock: false,
            out: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        match (self.optimizer.needs_mu(), self.mu) {
            (true, None) => return bad(format!("optimizer {} requires mu", self.optimizer)),
            (false, Some(_)) => return bad(format!("mu is not used by optimizer {}", self.optimizer)),
            (true, Some(mu)) if !(mu > 0.0 && mu.is_finite()) => return bad(format!("mu must be positive, got {mu}")),
            _ => {}
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("lr must be positive, got {}", self.lr));
        }
        if self.iters == 0 {
            return bad("iters must be at least 1".into());
        }
        if self.batch == 0 {
            return bad("batch must be at least 1".into());
        }
        if self.layers == 0 {
            return bad("layers must be at least 1".into());
        }
        if self.qubits == Some(0) {
            return bad("qubits must be at least 1".into());
        }
        Ok(())
    }

    pub fn load_dataset(&self) -> Result<Dataset> {
        match &self.dataset {
            DatasetSpec::Iris => load_iris(),
            DatasetSpec::Synthetic => make_synthetic(
                self.qubits.unwrap_or(10),
                self.samples,
                self.separation,
                derive_seed(self.seed, 0xDA7A),
            ),
            DatasetSpec::Csv(p) => load_csv(p),
        }
    }

    fn to_optimizer(&self) -> (Optimizer, StepSchedule) {
        let constant = StepSchedule::Constant(self.lr);
        match self.optimizer {
            OptimizerKind::Ssd => (Optimizer::Ssd(ShadowMode::TwoCall), constant),
            OptimizerKind::SsdFused => (Optimizer::Ssd(ShadowMode::Fused), constant),
            OptimizerKind::Sgd => (Optimizer::Sgd, constant),
            OptimizerKind::Rsgf => (Optimizer::Rsgf { mu: self.mu.unwrap_or_default() }, constant),
            OptimizerKind::Spsa => (
                Optimizer::Spsa,
                StepSchedule::SpsaGains(SpsaGains::calibrated(self.lr, self.mu.unwrap_or_default(), self.iters)),
            ),
        }
    }
}

/// One line of the metrics CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub iteration: u64,
    pub loss: f64,
    pub executions: u64,
    pub wall_ms: u64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub rows: Vec<MetricRow>,
    pub num_params: usize,
    pub theta: Vec<f64>,
    pub circuit: CircuitDescription,
}

/// Margin-loss objective `mean_k ½(1 − y_k f(x_k, θ))` over the given examples.
pub fn classifier_problem(base: &ParamCircuit, data: &Dataset, idx: &[usize]) -> Result<Problem> {
    let w = 1.0 / (2.0 * idx.len() as f64);
    let obs = ObservableExpr::z(base.n_qubits(), 0);
    let terms = idx
        .iter()
        .map(|&k| {
            Ok(ProblemTerm {
                circuit: base.clone().with_encoding(&data.x[k])?,
                observable: obs.clone(),
                weight: -data.y[k] * w,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Problem::new(terms, 0.5)
}

/// Starting parameters, uniform on `[0, 2π)`.
pub fn initial_theta(d: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    (0..d).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect()
}

/// Trains the encoded classifier and logs the exact full-set loss after every
/// step. The first row is the starting point.
pub fn train_classifier(config: &ExperimentConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let data = config.load_dataset()?;
    train_on(config, &data)
}

pub fn train_on(config: &ExperimentConfig, data: &Dataset) -> Result<TrainOutcome> {
    config.validate()?;
    let n_qubits = config.qubits.unwrap_or(data.n_features());
    if n_qubits != data.n_features() {
        return Err(Error::mismatch("dataset features vs qubits", n_qubits, data.n_features()));
    }
    if config.batch > data.len() {
        return Err(Error::InvalidConfig(format!(
            "batch {} exceeds dataset size {}",
            config.batch,
            data.len()
        )));
    }
    let spec = AnsatzSpec::new(config.ansatz, n_qubits, config.layers);
    let base = spec.build()?;
    let d = base.num_params();
    let all: Vec<usize> = (0..data.len()).collect();
    let full = classifier_problem(&base, data, &all)?;

    let (optimizer, schedule) = config.to_optimizer();
    let mut state = OptimizerState::new(initial_theta(d, derive_seed(config.seed, 1)), schedule, derive_seed(config.seed, 2))?;
    let mut batch_rng = rng_from_seed(derive_seed(config.seed, 3));
    let start = Instant::now();
    let wall = |start: &Instant| if config.wall_clock { start.elapsed().as_millis() as u64 } else { 0 };

    let mut rows = Vec::with_capacity(config.iters as usize + 1);
    rows.push(MetricRow {
        iteration: 0,
        loss: full.value_exact(&state.theta)?,
        executions: 0,
        wall_ms: wall(&start),
        seed: config.seed,
    });
    for _ in 0..config.iters {
        let mut idx = sample(&mut batch_rng, data.len(), config.batch).into_vec();
        idx.sort_unstable();
        let problem = classifier_problem(&base, data, &idx)?;
        step(&mut state, &optimizer, &problem, config.shots)?;
        rows.push(MetricRow {
            iteration: state.t,
            loss: full.value_exact(&state.theta)?,
            executions: state.executions,
            wall_ms: wall(&start),
            seed: config.seed,
        });
    }
    Ok(TrainOutcome {
        rows,
        num_params: d,
        theta: state.theta,
        circuit: base.description().expect("ansatz circuits carry a description"),
    })
}
