//! Parametrized circuits in alternating `∏ V_j U_j(θ_j)` form.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{
    exact_expectation, init_register, run_circuit, sampled_expectation, Axis, GateOp,
    ObservableExpr, RegisterLayout, StateVector,
};

/// Measurement mode: exact expectation or a finite number of shots.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Shots {
    Exact,
    Finite(u64),
}

impl Shots {
    pub fn is_exact(&self) -> bool {
        matches!(self, Shots::Exact)
    }
}

impl fmt::Display for Shots {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shots::Exact => f.write_str("exact"),
            Shots::Finite(n) => write!(f, "{n}"),
        }
    }
}

impl FromStr for Shots {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("exact") {
            return Ok(Shots::Exact);
        }
        match s.parse::<u64>() {
            Ok(0) | Err(_) => Err(Error::InvalidArgument(format!(
                "shots must be `exact` or a positive integer, got {s:?}"
            ))),
            Ok(n) => Ok(Shots::Finite(n)),
        }
    }
}

impl TryFrom<String> for Shots {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Shots> for String {
    fn from(s: Shots) -> String {
        s.to_string()
    }
}

/// Counts prepare-run-measure cycles. One execution is one cycle regardless
/// of the shot count.
#[derive(Debug, Default)]
pub struct ExecutionCounter(AtomicU64);

impl ExecutionCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&self, n: u64) {
        self.0.fetch_add(n, Ordering::Relaxed);
    }

    pub fn count(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnsatzFamily {
    BasicEntangler,
    StronglyEntangling,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnsatzSpec {
    pub family: AnsatzFamily,
    pub n_qubits: usize,
    pub n_layers: usize,
}

impl AnsatzSpec {
    pub fn new(family: AnsatzFamily, n_qubits: usize, n_layers: usize) -> Self {
        Self {
            family,
            n_qubits,
            n_layers,
        }
    }

    pub fn num_params(&self) -> usize {
        match self.family {
            AnsatzFamily::BasicEntangler => self.n_qubits * self.n_layers,
            AnsatzFamily::StronglyEntangling => 3 * self.n_qubits * self.n_layers,
        }
    }

    /// CNOT-ring range used by each layer (StronglyEntangling only).
    pub fn entangler_ranges(&self) -> Vec<usize> {
        match self.family {
            AnsatzFamily::BasicEntangler => vec![1; self.n_layers],
            AnsatzFamily::StronglyEntangling => (0..self.n_layers)
                .map(|l| l % (self.n_qubits.max(2) - 1) + 1)
                .collect(),
        }
    }

    pub fn build(&self) -> Result<ParamCircuit> {
        match self.family {
            AnsatzFamily::BasicEntangler => build_basic_entangler(self.n_qubits, self.n_layers),
            AnsatzFamily::StronglyEntangling => {
                build_strongly_entangling(self.n_qubits, self.n_layers)
            }
        }
    }
}

/// One trainable rotation `U_j` followed by its fixed block `V_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Slot {
    pub axis: Axis,
    pub qubit: usize,
    pub fixed: Vec<GateOp>,
}

/// Flat gate list element used to build or normalise circuits.
#[derive(Clone, Debug, PartialEq)]
pub enum RawGate {
    Fixed(GateOp),
    Param { axis: Axis, qubit: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamCircuit {
    n_qubits: usize,
    prefix: Vec<GateOp>,
    slots: Vec<Slot>,
    ansatz: Option<AnsatzSpec>,
    encoding: Option<Vec<f64>>,
}

/// JSON-serialisable description sufficient to rebuild an ansatz circuit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitDescription {
    pub family: AnsatzFamily,
    pub n_qubits: usize,
    pub n_layers: usize,
    pub num_params: usize,
    /// Encoder angles of the non-trainable prefix, if any.
    pub prefix_angles: Vec<f64>,
}

impl ParamCircuit {
    pub fn new(n_qubits: usize, prefix: Vec<GateOp>, slots: Vec<Slot>) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::InvalidArgument("circuit needs at least one qubit".into()));
        }
        for g in &prefix {
            g.validate(n_qubits)?;
        }
        for s in &slots {
            if s.qubit >= n_qubits {
                return Err(Error::QubitOutOfRange {
                    index: s.qubit,
                    total: n_qubits,
                });
            }
            for g in &s.fixed {
                g.validate(n_qubits)?;
            }
        }
        Ok(Self {
            n_qubits,
            prefix,
            slots,
            ansatz: None,
            encoding: None,
        })
    }

    /// Builds from a flat gate list: leading fixed gates become the prefix,
    /// every later fixed gate joins the fixed block of the preceding rotation.
    pub fn from_raw(n_qubits: usize, gates: Vec<RawGate>) -> Result<Self> {
        let mut prefix = Vec::new();
        let mut slots: Vec<Slot> = Vec::new();
        for g in gates {
            match g {
                RawGate::Fixed(op) => match slots.last_mut() {
                    Some(s) => s.fixed.push(op),
                    None => prefix.push(op),
                },
                RawGate::Param { axis, qubit } => slots.push(Slot {
                    axis,
                    qubit,
                    fixed: Vec::new(),
                }),
            }
        }
        Self::new(n_qubits, prefix, slots)
    }

    pub fn to_raw(&self) -> Vec<RawGate> {
        let mut out: Vec<RawGate> = self.prefix.iter().cloned().map(RawGate::Fixed).collect();
        for s in &self.slots {
            out.push(RawGate::Param {
                axis: s.axis,
                qubit: s.qubit,
            });
            out.extend(s.fixed.iter().cloned().map(RawGate::Fixed));
        }
        out
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn num_params(&self) -> usize {
        self.slots.len()
    }

    pub fn prefix(&self) -> &[GateOp] {
        &self.prefix
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn ansatz(&self) -> Option<AnsatzSpec> {
        self.ansatz
    }

    /// Replaces the prefix with the angle encoder for `features`.
    pub fn with_encoding(mut self, features: &[f64]) -> Result<Self> {
        self.prefix = build_encoder(features, self.n_qubits)?;
        self.encoding = Some(features.to_vec());
        Ok(self)
    }

    pub fn description(&self) -> Option<CircuitDescription> {
        self.ansatz.map(|a| CircuitDescription {
            family: a.family,
            n_qubits: a.n_qubits,
            n_layers: a.n_layers,
            num_params: self.num_params(),
            prefix_angles: self.encoding.clone().unwrap_or_default(),
        })
    }

    pub fn from_description(desc: &CircuitDescription) -> Result<Self> {
        let circ = AnsatzSpec::new(desc.family, desc.n_qubits, desc.n_layers).build()?;
        if circ.num_params() != desc.num_params {
            return Err(Error::mismatch(
                "parameter count",
                circ.num_params(),
                desc.num_params,
            ));
        }
        if desc.prefix_angles.is_empty() {
            Ok(circ)
        } else {
            circ.with_encoding(&desc.prefix_angles)
        }
    }

    pub fn check_params(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.num_params() {
            return Err(Error::mismatch("parameter vector", self.num_params(), theta.len()));
        }
        Ok(())
    }

    /// Concrete gate sequence for parameters `theta`.
    pub fn bind(&self, theta: &[f64]) -> Result<Vec<GateOp>> {
        self.check_params(theta)?;
        let mut gates = self.prefix.clone();
        for (s, &t) in self.slots.iter().zip(theta) {
            gates.push(GateOp::rotation(s.axis, s.qubit, t));
            gates.extend(s.fixed.iter().cloned());
        }
        Ok(gates)
    }

    /// `|ψ(θ)⟩`. Not counted as an execution; callers that model a device run
    /// go through [`eval_f`].
    pub fn prepare_state(&self, theta: &[f64]) -> Result<StateVector> {
        let gates = self.bind(theta)?;
        run_circuit(init_register(RegisterLayout::plain(self.n_qubits))?, &gates)
    }
}

fn check_ansatz_shape(n_qubits: usize, n_layers: usize) -> Result<()> {
    if n_qubits < 2 {
        return Err(Error::InvalidArgument(format!(
            "entangling ring needs at least 2 qubits, got {n_qubits}"
        )));
    }
    if n_layers < 1 {
        return Err(Error::InvalidArgument("need at least one layer".into()));
    }
    Ok(())
}

fn cnot_ring(n: usize, range: usize) -> Vec<GateOp> {
    (0..n).map(|i| GateOp::cnot(i, (i + range) % n)).collect()
}

/// One RX per qubit followed by a CNOT ring `i → i+1 mod n`, per layer.
pub fn build_basic_entangler(n_qubits: usize, n_layers: usize) -> Result<ParamCircuit> {
    check_ansatz_shape(n_qubits, n_layers)?;
    let mut slots = Vec::with_capacity(n_qubits * n_layers);
    for _ in 0..n_layers {
        for q in 0..n_qubits {
            slots.push(Slot {
                axis: Axis::X,
                qubit: q,
                fixed: Vec::new(),
            });
        }
        slots.last_mut().unwrap().fixed = cnot_ring(n_qubits, 1);
    }
    let mut circ = ParamCircuit::new(n_qubits, Vec::new(), slots)?;
    circ.ansatz = Some(AnsatzSpec::new(AnsatzFamily::BasicEntangler, n_qubits, n_layers));
    Ok(circ)
}

/// Per layer an RZ·RY·RZ rotation on every qubit (three slots each) and a
/// CNOT ring of range `(layer mod (n−1)) + 1`.
pub fn build_strongly_entangling(n_qubits: usize, n_layers: usize) -> Result<ParamCircuit> {
    check_ansatz_shape(n_qubits, n_layers)?;
    let spec = AnsatzSpec::new(AnsatzFamily::StronglyEntangling, n_qubits, n_layers);
    let mut slots = Vec::with_capacity(spec.num_params());
    for range in spec.entangler_ranges() {
        for q in 0..n_qubits {
            for axis in [Axis::Z, Axis::Y, Axis::Z] {
                slots.push(Slot {
                    axis,
                    qubit: q,
                    fixed: Vec::new(),
                });
            }
        }
        slots.last_mut().unwrap().fixed = cnot_ring(n_qubits, range);
    }
    let mut circ = ParamCircuit::new(n_qubits, Vec::new(), slots)?;
    circ.ansatz = Some(spec);
    Ok(circ)
}

/// Hadamard then `RZ(x_i)` on every qubit.
pub fn build_encoder(features: &[f64], n_qubits: usize) -> Result<Vec<GateOp>> {
    if features.len() != n_qubits {
        return Err(Error::mismatch("feature vector", n_qubits, features.len()));
    }
    Ok(features
        .iter()
        .enumerate()
        .flat_map(|(q, &x)| [GateOp::h(q), GateOp::rz(q, x)])
        .collect())
}

/// Re-derives the prefix/slot split from the flat gate order. Idempotent.
pub fn canonical_uv_form(circ: &ParamCircuit) -> ParamCircuit {
    let mut out = ParamCircuit::from_raw(circ.n_qubits, circ.to_raw())
        .expect("gates of a valid circuit stay valid");
    out.ansatz = circ.ansatz;
    out.encoding = circ.encoding.clone();
    out
}

/// Measures `obs` on `state` in the given mode.
pub fn measure(state: &StateVector, obs: &ObservableExpr, shots: Shots, seed: u64) -> Result<f64> {
    match shots {
        Shots::Exact => exact_expectation(state, obs),
        Shots::Finite(n) => sampled_expectation(state, obs, n, seed),
    }
}

/// `f(θ) = ⟨ψ(θ)|H|ψ(θ)⟩`, recording one execution.
pub fn eval_f(
    circ: &ParamCircuit,
    theta: &[f64],
    obs: &ObservableExpr,
    shots: Shots,
    seed: u64,
    counter: &ExecutionCounter,
) -> Result<f64> {
    let state = circ.prepare_state(theta)?;
    let value = measure(&state, obs, shots, seed)?;
    counter.record(1);
    Ok(value)
}
