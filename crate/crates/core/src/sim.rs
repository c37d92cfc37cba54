//! Dense statevector simulation.
//!
//! Basis ordering: qubit 0 is the most significant bit of the basis index.
//! A register is laid out as `[ancillas | flag | main]`, so the ancilla
//! register occupies the most significant block, then the optional flag
//! qubit, then the data qubits.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

pub const DEFAULT_QUBIT_CAP: usize = 24;

/// Environment variable overriding [`DEFAULT_QUBIT_CAP`].
pub const QUBIT_CAP_ENV: &str = "SSD_MAX_QUBITS";

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Qubit cap in effect, honouring [`QUBIT_CAP_ENV`] when it parses.
pub fn qubit_cap() -> usize {
    std::env::var(QUBIT_CAP_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_QUBIT_CAP)
}

/// Number of ancilla qubits needed to index `d` parameters: ⌈log₂ d⌉.
pub fn ancilla_bits_for(d: usize) -> usize {
    if d <= 1 {
        0
    } else {
        (usize::BITS - (d - 1).leading_zeros()) as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RegisterLayout {
    pub n_main: usize,
    pub n_anc: usize,
    pub has_flag: bool,
}

impl RegisterLayout {
    pub fn new(n_main: usize, n_anc: usize, has_flag: bool) -> Self {
        Self {
            n_main,
            n_anc,
            has_flag,
        }
    }

    pub fn plain(n_main: usize) -> Self {
        Self::new(n_main, 0, false)
    }

    /// Layout for an inner-product circuit over `d` parameters.
    pub fn for_parameters(n_main: usize, d: usize, has_flag: bool) -> Self {
        Self::new(n_main, ancilla_bits_for(d), has_flag)
    }

    pub fn total(&self) -> usize {
        self.n_main + self.n_anc + usize::from(self.has_flag)
    }

    pub fn dim(&self) -> usize {
        1usize << self.total()
    }

    pub fn ancilla_qubit(&self, k: usize) -> usize {
        debug_assert!(k < self.n_anc);
        k
    }

    pub fn ancilla_qubits(&self) -> Vec<usize> {
        (0..self.n_anc).collect()
    }

    pub fn flag_qubit(&self) -> Option<usize> {
        self.has_flag.then_some(self.n_anc)
    }

    /// Global index of the first data qubit.
    pub fn main_offset(&self) -> usize {
        self.n_anc + usize::from(self.has_flag)
    }

    pub fn main_qubit(&self, i: usize) -> usize {
        self.main_offset() + i
    }

    /// Bit position of `qubit` inside a basis index.
    pub fn bit(&self, qubit: usize) -> usize {
        self.total() - 1 - qubit
    }

    /// Ancilla register value encoded in basis index `idx`.
    pub fn ancilla_value(&self, idx: usize) -> usize {
        if self.n_anc == 0 {
            0
        } else {
            idx >> (self.total() - self.n_anc)
        }
    }

    /// Human-readable name of a global qubit index.
    pub fn qubit_label(&self, qubit: usize) -> String {
        if qubit < self.n_anc {
            format!("a{qubit}")
        } else if Some(qubit) == self.flag_qubit() {
            "f".to_string()
        } else {
            format!("m{}", qubit - self.main_offset())
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "X",
            Axis::Y => "Y",
            Axis::Z => "Z",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_char(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum GateKind {
    Hadamard,
    /// `exp(-i·angle·σ/2)`.
    Rotation { axis: Axis, angle: f64 },
    /// Targets are `[control, target]`.
    Cnot,
    PauliZ,
}

/// Restricts a gate to the subspace where `qubits` read `value` in the
/// computational basis. `qubits[0]` is the most significant bit of `value`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControlCondition {
    pub qubits: Vec<usize>,
    pub value: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateOp {
    pub kind: GateKind,
    pub targets: Vec<usize>,
    pub control: Option<ControlCondition>,
}

impl GateOp {
    pub fn h(q: usize) -> Self {
        Self::single(GateKind::Hadamard, q)
    }

    pub fn z(q: usize) -> Self {
        Self::single(GateKind::PauliZ, q)
    }

    pub fn rotation(axis: Axis, q: usize, angle: f64) -> Self {
        Self::single(GateKind::Rotation { axis, angle }, q)
    }

    pub fn rx(q: usize, angle: f64) -> Self {
        Self::rotation(Axis::X, q, angle)
    }

    pub fn ry(q: usize, angle: f64) -> Self {
        Self::rotation(Axis::Y, q, angle)
    }

    pub fn rz(q: usize, angle: f64) -> Self {
        Self::rotation(Axis::Z, q, angle)
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Self {
            kind: GateKind::Cnot,
            targets: vec![control, target],
            control: None,
        }
    }

    fn single(kind: GateKind, q: usize) -> Self {
        Self {
            kind,
            targets: vec![q],
            control: None,
        }
    }

    pub fn controlled_on(mut self, qubits: Vec<usize>, value: u64) -> Self {
        self.control = Some(ControlCondition { qubits, value });
        self
    }

    /// Same gate with every qubit index moved by `offset`.
    pub fn shifted(&self, offset: usize) -> Self {
        let mut g = self.clone();
        for t in &mut g.targets {
            *t += offset;
        }
        if let Some(c) = &mut g.control {
            for q in &mut c.qubits {
                *q += offset;
            }
        }
        g
    }

    fn arity(&self) -> usize {
        match self.kind {
            GateKind::Cnot => 2,
            _ => 1,
        }
    }

    /// 2×2 matrix of the single-qubit action (the target action for CNOT).
    pub fn single_qubit_matrix(&self) -> [[Complex64; 2]; 2] {
        match self.kind {
            GateKind::Hadamard => {
                let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
                [[h, h], [h, -h]]
            }
            GateKind::PauliZ => [[ONE, ZERO], [ZERO, -ONE]],
            GateKind::Cnot => [[ZERO, ONE], [ONE, ZERO]],
            GateKind::Rotation { axis, angle } => rotation_matrix(axis, angle),
        }
    }

    /// Dense matrix over the gate's own targets, ignoring any control condition.
    /// Row/column index uses `targets[0]` as the most significant bit.
    pub fn local_matrix(&self) -> Vec<Vec<Complex64>> {
        match self.kind {
            GateKind::Cnot => {
                let mut m = vec![vec![ZERO; 4]; 4];
                m[0][0] = ONE;
                m[1][1] = ONE;
                m[2][3] = ONE;
                m[3][2] = ONE;
                m
            }
            _ => self
                .single_qubit_matrix()
                .iter()
                .map(|r| r.to_vec())
                .collect(),
        }
    }

    pub fn validate(&self, total: usize) -> Result<()> {
        if self.targets.len() != self.arity() {
            return Err(Error::InvalidGate(format!(
                "{:?} expects {} target(s), got {}",
                self.kind,
                self.arity(),
                self.targets.len()
            )));
        }
        for &t in &self.targets {
            if t >= total {
                return Err(Error::QubitOutOfRange { index: t, total });
            }
        }
        if self.arity() == 2 && self.targets[0] == self.targets[1] {
            return Err(Error::ControlOverlap(self.targets[0]));
        }
        if let Some(c) = &self.control {
            if c.qubits.len() < 64 && c.value >> c.qubits.len() != 0 {
                return Err(Error::InvalidGate(format!(
                    "control value {} does not fit in {} qubits",
                    c.value,
                    c.qubits.len()
                )));
            }
            for (k, &q) in c.qubits.iter().enumerate() {
                if q >= total {
                    return Err(Error::QubitOutOfRange { index: q, total });
                }
                if self.targets.contains(&q) || c.qubits[..k].contains(&q) {
                    return Err(Error::ControlOverlap(q));
                }
            }
        }
        Ok(())
    }
}

fn rotation_matrix(axis: Axis, angle: f64) -> [[Complex64; 2]; 2] {
    let (s, c) = (angle / 2.0).sin_cos();
    let cc = Complex64::new(c, 0.0);
    match axis {
        Axis::X => {
            let m = Complex64::new(0.0, -s);
            [[cc, m], [m, cc]]
        }
        Axis::Y => {
            let ss = Complex64::new(s, 0.0);
            [[cc, -ss], [ss, cc]]
        }
        Axis::Z => [[Complex64::new(c, -s), ZERO], [ZERO, Complex64::new(c, s)]],
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
    layout: RegisterLayout,
}

impl StateVector {
    /// Wraps raw amplitudes; the caller is responsible for normalisation.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>, layout: RegisterLayout) -> Result<Self> {
        if amplitudes.len() != layout.dim() {
            return Err(Error::mismatch(
                "amplitude vector",
                layout.dim(),
                amplitudes.len(),
            ));
        }
        Ok(Self { amplitudes, layout })
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn layout(&self) -> RegisterLayout {
        self.layout
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// In-place gate application.
    pub fn apply(&mut self, g: &GateOp) -> Result<()> {
        let total = self.layout.total();
        g.validate(total)?;

        let (mut mask, mut want) = (0usize, 0usize);
        if let Some(c) = &g.control {
            let n = c.qubits.len();
            for (k, &q) in c.qubits.iter().enumerate() {
                let bit = 1usize << self.layout.bit(q);
                mask |= bit;
                if (c.value >> (n - 1 - k)) & 1 == 1 {
                    want |= bit;
                }
            }
        }
        let target = match g.kind {
            GateKind::Cnot => {
                let cbit = 1usize << self.layout.bit(g.targets[0]);
                mask |= cbit;
                want |= cbit;
                g.targets[1]
            }
            _ => g.targets[0],
        };
        let stride = 1usize << self.layout.bit(target);
        let amps = &mut self.amplitudes;

        match g.kind {
            GateKind::Cnot => for_pairs(amps.len(), stride, mask, want, |i, j| amps.swap(i, j)),
            GateKind::PauliZ => for_pairs(amps.len(), stride, mask, want, |_, j| {
                amps[j] = -amps[j];
            }),
            GateKind::Rotation {
                axis: Axis::Z,
                angle,
            } => {
                let (s, c) = (angle / 2.0).sin_cos();
                let p0 = Complex64::new(c, -s);
                let p1 = Complex64::new(c, s);
                for_pairs(amps.len(), stride, mask, want, |i, j| {
                    amps[i] *= p0;
                    amps[j] *= p1;
                })
            }
            _ => {
                let m = g.single_qubit_matrix();
                for_pairs(amps.len(), stride, mask, want, |i, j| {
                    let (a0, a1) = (amps[i], amps[j]);
                    amps[i] = m[0][0] * a0 + m[0][1] * a1;
                    amps[j] = m[1][0] * a0 + m[1][1] * a1;
                })
            }
        }
        Ok(())
    }
}

/// Visits every index pair `(i, i | stride)` with the stride bit clear in `i`
/// and `i & mask == want`.
#[inline]
fn for_pairs(dim: usize, stride: usize, mask: usize, want: usize, mut f: impl FnMut(usize, usize)) {
    let mut base = 0;
    while base < dim {
        for i in base..base + stride {
            if i & mask == want {
                f(i, i | stride);
            }
        }
        base += 2 * stride;
    }
}

/// |0…0⟩ on `layout`, subject to [`qubit_cap`].
pub fn init_register(layout: RegisterLayout) -> Result<StateVector> {
    init_register_with_cap(layout, qubit_cap())
}

pub fn init_register_with_cap(layout: RegisterLayout, cap: usize) -> Result<StateVector> {
    if layout.n_main == 0 {
        return Err(Error::InvalidArgument(
            "register needs at least one main qubit".into(),
        ));
    }
    if layout.total() > cap {
        return Err(Error::QubitCapExceeded {
            requested: layout.total(),
            cap,
        });
    }
    let mut amplitudes = vec![ZERO; layout.dim()];
    amplitudes[0] = ONE;
    Ok(StateVector { amplitudes, layout })
}

pub fn apply_gate(mut state: StateVector, g: &GateOp) -> Result<StateVector> {
    state.apply(g)?;
    Ok(state)
}

pub fn run_circuit<'a>(
    mut state: StateVector,
    gates: impl IntoIterator<Item = &'a GateOp>,
) -> Result<StateVector> {
    for g in gates {
        state.apply(g)?;
    }
    Ok(state)
}

/// Puts the ancilla register into `Σ_{i<d} |i⟩/√d` by direct amplitude
/// assignment. The ancillas must currently be in |0…0⟩.
pub fn set_ancilla_uniform(mut state: StateVector, d: usize) -> Result<StateVector> {
    let layout = state.layout;
    if d == 0 {
        return Err(Error::InvalidArgument(
            "uniform superposition over zero states".into(),
        ));
    }
    if d > 1usize << layout.n_anc {
        return Err(Error::AncillaCapacity {
            needed: d,
            n_anc: layout.n_anc,
        });
    }
    if layout.n_anc == 0 {
        return Ok(state);
    }
    let block = 1usize << (layout.total() - layout.n_anc);
    if state.amplitudes[block..].iter().any(|a| a.norm_sqr() > 0.0) {
        return Err(Error::InvalidArgument(
            "ancilla register is not in |0…0⟩".into(),
        ));
    }
    let scale = 1.0 / (d as f64).sqrt();
    let (head, tail) = state.amplitudes.split_at_mut(block);
    for a in head.iter_mut() {
        *a *= scale;
    }
    for chunk in tail.chunks_mut(block).take(d - 1) {
        chunk.copy_from_slice(head);
    }
    Ok(state)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliTerm {
    pub coeff: f64,
    pub paulis: Vec<Pauli>,
}

impl PauliTerm {
    pub fn new(coeff: f64, paulis: Vec<Pauli>) -> Self {
        Self { coeff, paulis }
    }

    /// Parses a string like `"ZIXY"`; position `i` acts on main qubit `i`.
    pub fn parse(coeff: f64, letters: &str) -> Result<Self> {
        let paulis = letters
            .chars()
            .map(|c| {
                Pauli::from_char(c)
                    .ok_or_else(|| Error::InvalidArgument(format!("bad Pauli letter {c:?}")))
            })
            .collect::<Result<_>>()?;
        Ok(Self { coeff, paulis })
    }
}

/// Hermitian measurement operator `Z_flag ⊗ diag(anc_weights) ⊗ Σ c_k P_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservableExpr {
    pub terms: Vec<PauliTerm>,
    /// Diagonal weights indexed by ancilla register value; length `2^n_anc`.
    pub anc_weights: Option<Vec<f64>>,
    pub flag_z: bool,
}

impl ObservableExpr {
    pub fn from_terms(terms: Vec<PauliTerm>) -> Self {
        Self {
            terms,
            anc_weights: None,
            flag_z: false,
        }
    }

    /// Single Pauli-Z on main qubit `q` of an `n`-qubit register.
    pub fn z(n: usize, q: usize) -> Self {
        let mut paulis = vec![Pauli::I; n];
        paulis[q] = Pauli::Z;
        Self::from_terms(vec![PauliTerm::new(1.0, paulis)])
    }

    pub fn identity(n: usize) -> Self {
        Self::from_terms(vec![PauliTerm::new(1.0, vec![Pauli::I; n])])
    }

    pub fn with_anc_weights(mut self, weights: Vec<f64>) -> Self {
        self.anc_weights = Some(weights);
        self
    }

    pub fn with_flag_z(mut self) -> Self {
        self.flag_z = true;
        self
    }

    /// Upper bound on the operator norm: `Σ|c_k| · max|w|`.
    pub fn norm_bound(&self) -> f64 {
        let w = self
            .anc_weights
            .as_ref()
            .map_or(1.0, |w| w.iter().fold(0.0f64, |m, x| m.max(x.abs())));
        self.terms.iter().map(|t| t.coeff.abs()).sum::<f64>() * w
    }

    pub fn validate(&self, layout: &RegisterLayout) -> Result<()> {
        for t in &self.terms {
            if t.paulis.len() != layout.n_main {
                return Err(Error::IncompatibleObservable(format!(
                    "Pauli string has {} letters for {} main qubits",
                    t.paulis.len(),
                    layout.n_main
                )));
            }
            if !t.coeff.is_finite() {
                return Err(Error::IncompatibleObservable(
                    "non-finite coefficient".into(),
                ));
            }
        }
        if let Some(w) = &self.anc_weights {
            let want = 1usize << layout.n_anc;
            if w.len() != want {
                return Err(Error::IncompatibleObservable(format!(
                    "{} ancilla weights for a {}-qubit ancilla register (need {want})",
                    w.len(),
                    layout.n_anc
                )));
            }
        }
        if self.flag_z && !layout.has_flag {
            return Err(Error::IncompatibleObservable(
                "flag_z set but layout has no flag qubit".into(),
            ));
        }
        Ok(())
    }

    fn diagonal_weight(&self, layout: &RegisterLayout, flag_bit: usize, idx: usize) -> f64 {
        let mut w = match &self.anc_weights {
            Some(ws) => ws[layout.ancilla_value(idx)],
            None => 1.0,
        };
        if self.flag_z && idx & flag_bit != 0 {
            w = -w;
        }
        w
    }
}

struct TermMasks {
    x: usize,
    z: usize,
    n_y: usize,
}

fn term_masks(term: &PauliTerm, layout: &RegisterLayout) -> TermMasks {
    let mut m = TermMasks { x: 0, z: 0, n_y: 0 };
    for (i, p) in term.paulis.iter().enumerate() {
        let bit = 1usize << layout.bit(layout.main_qubit(i));
        match p {
            Pauli::I => {}
            Pauli::X => m.x |= bit,
            Pauli::Z => m.z |= bit,
            Pauli::Y => {
                m.x |= bit;
                m.z |= bit;
                m.n_y += 1;
            }
        }
    }
    m
}

fn flag_bit(layout: &RegisterLayout) -> usize {
    layout.flag_qubit().map_or(0, |q| 1usize << layout.bit(q))
}

/// `⟨ψ|O|ψ⟩` without discarding the imaginary residue.
pub fn exact_expectation_complex(state: &StateVector, obs: &ObservableExpr) -> Result<Complex64> {
    let layout = state.layout;
    obs.validate(&layout)?;
    let fb = flag_bit(&layout);
    let amps = &state.amplitudes;
    let weights: Vec<f64> = if obs.anc_weights.is_some() || obs.flag_z {
        (0..amps.len())
            .map(|i| obs.diagonal_weight(&layout, fb, i))
            .collect()
    } else {
        Vec::new()
    };

    let mut total = ZERO;
    for term in &obs.terms {
        let m = term_masks(term, &layout);
        let i_pow = match m.n_y % 4 {
            0 => ONE,
            1 => Complex64::new(0.0, 1.0),
            2 => -ONE,
            _ => Complex64::new(0.0, -1.0),
        };
        let mut acc = ZERO;
        for (i, &a) in amps.iter().enumerate() {
            if a == ZERO {
                continue;
            }
            let j = i ^ m.x;
            let mut contrib = amps[j].conj() * a;
            if (i & m.z).count_ones() % 2 == 1 {
                contrib = -contrib;
            }
            if !weights.is_empty() {
                contrib *= weights[j];
            }
            acc += contrib;
        }
        total += acc * i_pow * term.coeff;
    }
    Ok(total)
}

/// `⟨ψ|O|ψ⟩` for a Hermitian `O`.
pub fn exact_expectation(state: &StateVector, obs: &ObservableExpr) -> Result<f64> {
    let z = exact_expectation_complex(state, obs)?;
    debug_assert!(z.im.abs() <= 1e-10, "imaginary residue {}", z.im);
    Ok(z.re)
}

/// Shot-sampled estimate of `⟨ψ|O|ψ⟩`.
///
/// Each Pauli term is rotated into the computational basis (X via H, Y via
/// S†·H) and sampled independently with `shots` draws from the final
/// distribution. Each draw contributes the product of the ancilla weight,
/// the flag sign and the Pauli parities. The estimate is unbiased and a pure
/// function of `seed`.
pub fn sampled_expectation(
    state: &StateVector,
    obs: &ObservableExpr,
    shots: u64,
    seed: u64,
) -> Result<f64> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be at least 1".into()));
    }
    let layout = state.layout;
    obs.validate(&layout)?;
    let fb = flag_bit(&layout);

    let mut estimate = 0.0;
    for (k, term) in obs.terms.iter().enumerate() {
        let m = term_masks(term, &layout);
        let rotated;
        let probs = if m.x == 0 {
            state.probabilities()
        } else {
            let mut s = state.clone();
            for (i, p) in term.paulis.iter().enumerate() {
                let q = layout.main_qubit(i);
                match p {
                    Pauli::X => s.apply(&GateOp::h(q))?,
                    Pauli::Y => {
                        s.apply(&GateOp::rz(q, -FRAC_PI_2))?;
                        s.apply(&GateOp::h(q))?;
                    }
                    _ => {}
                }
            }
            rotated = s;
            rotated.probabilities()
        };
        let parity_mask = m.x | m.z;

        let mut cumulative = Vec::with_capacity(probs.len());
        let mut running = 0.0;
        for p in &probs {
            running += p;
            cumulative.push(running);
        }

        let mut rng = rng_from_seed(derive_seed(seed, k as u64));
        let mut sum = 0.0;
        for _ in 0..shots {
            let u: f64 = rng.random::<f64>() * running;
            let idx = cumulative
                .partition_point(|&c| c <= u)
                .min(cumulative.len() - 1);
            let mut eig = obs.diagonal_weight(&layout, fb, idx);
            if (idx & parity_mask).count_ones() % 2 == 1 {
                eig = -eig;
            }
            sum += eig;
        }
        estimate += term.coeff * sum / shots as f64;
    }
    Ok(estimate)
}
