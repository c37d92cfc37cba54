//! Inner-product circuits: ancilla-indexed parameter shifts that return
//! `D^s_v(θ) = (1/d)·Σ_i f(θ + s·π/2·e_i)·v_i` from a single execution, and the
//! flagged variant that returns `½(D⁺_v − D⁻_v)` in one execution.
//!
//! Parameter `j` (zero-based) is selected by ancilla basis state `|j⟩`.
//! Ancilla values `d..2^q` carry weight 0 in the observable.

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use crate::circuit::{measure, ExecutionCounter, ParamCircuit, Shots};
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::sim::{
    init_register, run_circuit, set_ancilla_uniform, Axis, GateKind, GateOp, ObservableExpr,
    RegisterLayout, StateVector,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ShiftSign {
    Plus,
    Minus,
}

impl ShiftSign {
    pub fn value(self) -> f64 {
        match self {
            ShiftSign::Plus => 1.0,
            ShiftSign::Minus => -1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IpcCircuit {
    base: ParamCircuit,
    layout: RegisterLayout,
    /// `None` for the fused circuit, which carries both signs.
    shift: Option<ShiftSign>,
}

/// One directional-derivative estimate `D̂_v(θ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShadowEstimate {
    pub v: Vec<f64>,
    pub value: f64,
    /// `(D̂⁺, D̂⁻)` for the two-execution estimator.
    pub half_values: Option<(f64, f64)>,
    pub shots: Shots,
    pub executions_used: u64,
    pub seed: u64,
}

impl IpcCircuit {
    pub fn base(&self) -> &ParamCircuit {
        &self.base
    }

    pub fn layout(&self) -> RegisterLayout {
        self.layout
    }

    pub fn shift_sign(&self) -> Option<ShiftSign> {
        self.shift
    }

    pub fn is_fused(&self) -> bool {
        self.shift.is_none()
    }

    pub fn num_params(&self) -> usize {
        self.base.num_params()
    }

    /// Controlled rotations added on top of the base circuit.
    pub fn controlled_rotation_count(&self) -> usize {
        if self.is_fused() {
            2 * self.num_params()
        } else {
            self.num_params()
        }
    }

    fn selector(&self, j: usize, flag: Option<u64>) -> (Vec<usize>, u64) {
        let mut qubits = Vec::with_capacity(self.layout.n_anc + 1);
        let mut value = j as u64;
        if let (Some(fq), Some(fv)) = (self.layout.flag_qubit(), flag) {
            qubits.push(fq);
            value |= fv << self.layout.n_anc;
        }
        qubits.extend(self.layout.ancilla_qubits());
        (qubits, value)
    }

    fn shift_gates(&self, j: usize, axis: Axis, q: usize) -> Vec<GateOp> {
        let signs = match self.shift {
            Some(s) => vec![(s.value(), None)],
            None => vec![(1.0, Some(0)), (-1.0, Some(1))],
        };
        signs
            .into_iter()
            .map(|(sign, flag)| {
                let (qs, val) = self.selector(j, flag);
                GateOp::rotation(axis, q, sign * FRAC_PI_2).controlled_on(qs, val)
            })
            .collect()
    }

    /// Gate sequence after ancilla preparation, on the full layout.
    pub fn bind(&self, theta: &[f64]) -> Result<Vec<GateOp>> {
        self.base.check_params(theta)?;
        let off = self.layout.main_offset();
        let mut gates = Vec::new();
        if let Some(fq) = self.layout.flag_qubit() {
            gates.push(GateOp::h(fq));
        }
        gates.extend(self.base.prefix().iter().map(|g| g.shifted(off)));
        for (j, (slot, &t)) in self.base.slots().iter().zip(theta).enumerate() {
            let q = slot.qubit + off;
            gates.push(GateOp::rotation(slot.axis, q, t));
            gates.extend(self.shift_gates(j, slot.axis, q));
            gates.extend(slot.fixed.iter().map(|g| g.shifted(off)));
        }
        Ok(gates)
    }

    /// `|φ(θ)⟩`, not counted as an execution.
    pub fn prepare_state(&self, theta: &[f64]) -> Result<StateVector> {
        let gates = self.bind(theta)?;
        let state = set_ancilla_uniform(init_register(self.layout)?, self.num_params())?;
        run_circuit(state, &gates)
    }
}

impl fmt::Display for IpcCircuit {
    /// θ-independent gate listing, one gate per line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = &self.layout;
        let shift = match self.shift {
            Some(ShiftSign::Plus) => "+1",
            Some(ShiftSign::Minus) => "-1",
            None => "fused",
        };
        writeln!(
            f,
            "# ipc d={} main={} ancillas={} flag={} shift={}",
            self.num_params(),
            l.n_main,
            l.n_anc,
            if l.has_flag { "yes" } else { "no" },
            shift
        )?;
        let anc: Vec<String> = l.ancilla_qubits().iter().map(|&q| l.qubit_label(q)).collect();
        writeln!(f, "prep uniform({}) [{}]", self.num_params(), anc.join(" "))?;

        let off = l.main_offset();
        let line = |f: &mut fmt::Formatter<'_>, g: &GateOp| -> fmt::Result {
            let qs: Vec<String> = g.targets.iter().map(|&q| l.qubit_label(q)).collect();
            match g.kind {
                GateKind::Hadamard => write!(f, "H")?,
                GateKind::PauliZ => write!(f, "Z")?,
                GateKind::Cnot => write!(f, "CNOT")?,
                GateKind::Rotation { axis, angle } if g.control.is_some() => {
                    write!(f, "R{axis}({}pi/2)", if angle > 0.0 { "+" } else { "-" })?
                }
                GateKind::Rotation { axis, angle } => write!(f, "R{axis}({angle:.6})")?,
            }
            write!(f, " {}", qs.join(" "))?;
            if let Some(c) = &g.control {
                let width = c.qubits.len();
                let cq: Vec<String> = c.qubits.iter().map(|&q| l.qubit_label(q)).collect();
                write!(f, " if [{}]=|{:0width$b}>", cq.join(" "), c.value)?;
            }
            writeln!(f)
        };
        if let Some(fq) = l.flag_qubit() {
            line(f, &GateOp::h(fq))?;
        }
        for g in self.base.prefix() {
            line(f, &g.shifted(off))?;
        }
        for (j, slot) in self.base.slots().iter().enumerate() {
            let q = slot.qubit + off;
            writeln!(f, "R{}(theta[{j}]) {}", slot.axis, l.qubit_label(q))?;
            for g in self.shift_gates(j, slot.axis, q) {
                line(f, &g)?;
            }
            for g in &slot.fixed {
                line(f, &g.shifted(off))?;
            }
        }
        Ok(())
    }
}

fn check_inputs(base: &ParamCircuit, v: &[f64], obs: &ObservableExpr) -> Result<()> {
    let d = base.num_params();
    if d == 0 {
        return Err(Error::InvalidArgument(
            "inner-product circuit needs at least one parameter".into(),
        ));
    }
    if v.len() != d {
        return Err(Error::mismatch("direction vector", d, v.len()));
    }
    if obs.anc_weights.is_some() || obs.flag_z {
        return Err(Error::IncompatibleObservable(
            "base observable must act on the main register only".into(),
        ));
    }
    obs.validate(&RegisterLayout::plain(base.n_qubits()))
}

fn weighted(obs: &ObservableExpr, v: &[f64], n_anc: usize) -> ObservableExpr {
    let mut w = vec![0.0; 1usize << n_anc];
    w[..v.len()].copy_from_slice(v);
    obs.clone().with_anc_weights(w)
}

/// Inner-product circuit for shift sign `s` and the joint observable `O_v ⊗ H`.
pub fn build_ipc(
    base: &ParamCircuit,
    v: &[f64],
    s: ShiftSign,
    obs: &ObservableExpr,
) -> Result<(IpcCircuit, ObservableExpr)> {
    check_inputs(base, v, obs)?;
    let layout = RegisterLayout::for_parameters(base.n_qubits(), base.num_params(), false);
    let joint = weighted(obs, v, layout.n_anc);
    Ok((
        IpcCircuit {
            base: base.clone(),
            layout,
            shift: Some(s),
        },
        joint,
    ))
}

/// Flagged circuit carrying both shift signs and the observable `Z_flag ⊗ O_v ⊗ H`.
pub fn build_fused_ipc(
    base: &ParamCircuit,
    v: &[f64],
    obs: &ObservableExpr,
) -> Result<(IpcCircuit, ObservableExpr)> {
    check_inputs(base, v, obs)?;
    let layout = RegisterLayout::for_parameters(base.n_qubits(), base.num_params(), true);
    let joint = weighted(obs, v, layout.n_anc).with_flag_z();
    Ok((
        IpcCircuit {
            base: base.clone(),
            layout,
            shift: None,
        },
        joint,
    ))
}

/// Expectation of the circuit's joint observable; one execution.
pub fn run_ipc(
    ipc: &IpcCircuit,
    obs: &ObservableExpr,
    theta: &[f64],
    shots: Shots,
    seed: u64,
    counter: &ExecutionCounter,
) -> Result<f64> {
    let state = ipc.prepare_state(theta)?;
    let value = measure(&state, obs, shots, seed)?;
    counter.record(1);
    Ok(value)
}

/// `D^s_v(θ)` from one execution of a two-call inner-product circuit.
pub fn estimate_half_shadow(
    ipc: &IpcCircuit,
    obs: &ObservableExpr,
    theta: &[f64],
    shots: Shots,
    seed: u64,
    counter: &ExecutionCounter,
) -> Result<f64> {
    if ipc.is_fused() {
        return Err(Error::InvalidArgument(
            "half shadows come from a signed inner-product circuit".into(),
        ));
    }
    run_ipc(ipc, obs, theta, shots, seed, counter)
}

/// `D_v = (d/2)(D⁺ − D⁻)`.
pub fn combine_halves(d: usize, plus: f64, minus: f64) -> f64 {
    d as f64 / 2.0 * (plus - minus)
}

/// Directional derivative from the two signed circuits; two executions.
pub fn estimate_shadow(
    base: &ParamCircuit,
    theta: &[f64],
    v: &[f64],
    obs: &ObservableExpr,
    shots: Shots,
    seed: u64,
    counter: &ExecutionCounter,
) -> Result<ShadowEstimate> {
    let (plus_ipc, plus_obs) = build_ipc(base, v, ShiftSign::Plus, obs)?;
    let (minus_ipc, minus_obs) = build_ipc(base, v, ShiftSign::Minus, obs)?;
    let (plus, minus) = rayon::join(
        || estimate_half_shadow(&plus_ipc, &plus_obs, theta, shots, derive_seed(seed, 0), counter),
        || estimate_half_shadow(&minus_ipc, &minus_obs, theta, shots, derive_seed(seed, 1), counter),
    );
    let (plus, minus) = (plus?, minus?);
    Ok(ShadowEstimate {
        v: v.to_vec(),
        value: combine_halves(base.num_params(), plus, minus),
        half_values: Some((plus, minus)),
        shots,
        executions_used: 2,
        seed,
    })
}

/// Directional derivative from the flagged circuit; one execution.
pub fn estimate_shadow_fused(
    base: &ParamCircuit,
    theta: &[f64],
    v: &[f64],
    obs: &ObservableExpr,
    shots: Shots,
    seed: u64,
    counter: &ExecutionCounter,
) -> Result<ShadowEstimate> {
    let (ipc, joint) = build_fused_ipc(base, v, obs)?;
    let half_difference = run_ipc(&ipc, &joint, theta, shots, derive_seed(seed, 0), counter)?;
    Ok(ShadowEstimate {
        v: v.to_vec(),
        value: base.num_params() as f64 * half_difference,
        half_values: None,
        shots,
        executions_used: 1,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_basic_entangler, Slot};
    use crate::sim::Axis;
    use std::f64::consts::PI;

    fn rx_pair() -> ParamCircuit {
        let slot = |q| Slot {
            axis: Axis::X,
            qubit: q,
            fixed: vec![],
        };
        ParamCircuit::new(2, vec![], vec![slot(0), slot(1)]).unwrap()
    }

    fn chain(d: usize) -> ParamCircuit {
        let slots = (0..d)
            .map(|j| Slot {
                axis: [Axis::X, Axis::Y, Axis::Z][j % 3],
                qubit: j % 2,
                fixed: vec![GateOp::cnot(j % 2, (j + 1) % 2)],
            })
            .collect();
        ParamCircuit::new(2, vec![GateOp::h(0)], slots).unwrap()
    }

    #[test]
    fn basic_entangler_resources() {
        let c = build_basic_entangler(4, 1).unwrap();
        let (ipc, obs) = build_ipc(&c, &[1.0, 2.0, 3.0, 4.0], ShiftSign::Plus, &ObservableExpr::z(4, 0)).unwrap();
        assert_eq!(ipc.layout().n_anc, 2);
        assert_eq!(ipc.controlled_rotation_count(), 4);
        let gates = ipc.bind(&[0.0; 4]).unwrap();
        assert_eq!(gates.iter().filter(|g| g.control.is_some()).count(), 4);
        assert_eq!(obs.anc_weights.as_deref(), Some(&[1.0, 2.0, 3.0, 4.0][..]));

        let (fused, fobs) = build_fused_ipc(&c, &[0.0; 4], &ObservableExpr::z(4, 0)).unwrap();
        assert_eq!(fused.layout(), RegisterLayout::new(4, 2, true));
        assert_eq!(fused.controlled_rotation_count(), 8);
        assert_eq!(fused.bind(&[0.0; 4]).unwrap().iter().filter(|g| g.control.is_some()).count(), 8);
        assert!(fobs.flag_z);
    }

    #[test]
    fn padding_and_degenerate_sizes() {
        let c = chain(5);
        let (ipc, obs) = build_ipc(&c, &[1.0; 5], ShiftSign::Minus, &ObservableExpr::z(2, 0)).unwrap();
        assert_eq!(ipc.layout().n_anc, 3);
        assert_eq!(obs.anc_weights.unwrap()[5..], [0.0, 0.0, 0.0]);

        let one = chain(1);
        let (ipc, obs) = build_ipc(&one, &[2.5], ShiftSign::Plus, &ObservableExpr::z(2, 0)).unwrap();
        assert_eq!(ipc.layout().n_anc, 0);
        assert_eq!(obs.anc_weights.as_deref(), Some(&[2.5][..]));
        let n = ExecutionCounter::new();
        let got = estimate_half_shadow(&ipc, &obs, &[0.3], Shots::Exact, 0, &n).unwrap();
        let f = crate::circuit::eval_f(&one, &[0.3 + FRAC_PI_2], &ObservableExpr::z(2, 0), Shots::Exact, 0, &n)
            .unwrap();
        assert!((got - 2.5 * f).abs() < 1e-12);

        let (fused, _) = build_fused_ipc(&one, &[1.0], &ObservableExpr::z(2, 0)).unwrap();
        assert_eq!(fused.layout(), RegisterLayout::new(2, 0, true));
    }

    #[test]
    fn build_errors() {
        let c = chain(3);
        let h = ObservableExpr::z(2, 0);
        assert!(build_ipc(&c, &[1.0; 2], ShiftSign::Plus, &h).is_err());
        assert!(build_fused_ipc(&c, &[1.0; 4], &h).is_err());
        let empty = ParamCircuit::new(2, vec![], vec![]).unwrap();
        assert!(build_ipc(&empty, &[], ShiftSign::Plus, &h).is_err());
        assert!(build_ipc(&c, &[1.0; 3], ShiftSign::Plus, &h.clone().with_anc_weights(vec![1.0])).is_err());
    }

    #[test]
    fn two_qubit_closed_forms() {
        let c = rx_pair();
        let h = ObservableExpr::z(2, 0);
        let n = ExecutionCounter::new();
        let theta = [PI / 6.0, 0.77];
        let (ipc, obs) = build_ipc(&c, &[1.0, 1.0], ShiftSign::Plus, &h).unwrap();
        let half = estimate_half_shadow(&ipc, &obs, &theta, Shots::Exact, 0, &n).unwrap();
        assert!((half - 0.183_012_701_892_219_3).abs() < 1e-12);

        let (zipc, zobs) = build_ipc(&c, &[0.0, 0.0], ShiftSign::Plus, &h).unwrap();
        assert_eq!(estimate_half_shadow(&zipc, &zobs, &theta, Shots::Exact, 0, &n).unwrap(), 0.0);

        let est = estimate_shadow(&c, &theta, &[1.0, 1.0], &h, Shots::Exact, 0, &n).unwrap();
        assert!((est.value + 0.5).abs() < 1e-12);
        assert_eq!(est.executions_used, 2);
        let (p, m) = est.half_values.unwrap();
        assert_eq!(est.value, combine_halves(2, p, m));

        let fused = estimate_shadow_fused(&c, &theta, &[1.0, 1.0], &h, Shots::Exact, 0, &n).unwrap();
        assert!((fused.value + 0.5).abs() < 1e-12);
        assert_eq!(fused.executions_used, 1);

        let before = n.count();
        let z = estimate_shadow(&c, &theta, &[0.0, 0.0], &h, Shots::Exact, 0, &n).unwrap();
        assert_eq!(z.value, 0.0);
        assert_eq!(n.count() - before, 2);
        let before = n.count();
        let z = estimate_shadow_fused(&c, &theta, &[0.0, 0.0], &h, Shots::Exact, 0, &n).unwrap();
        assert_eq!(z.value, 0.0);
        assert_eq!(n.count() - before, 1);
    }

    #[test]
    fn fused_output_is_half_difference() {
        let c = chain(4);
        let h = ObservableExpr::z(2, 1);
        let v = [0.3, -1.2, 0.8, 2.0];
        let theta = [0.4, -0.9, 1.7, 0.2];
        let n = ExecutionCounter::new();
        let (pi, po) = build_ipc(&c, &v, ShiftSign::Plus, &h).unwrap();
        let (mi, mo) = build_ipc(&c, &v, ShiftSign::Minus, &h).unwrap();
        let plus = estimate_half_shadow(&pi, &po, &theta, Shots::Exact, 0, &n).unwrap();
        let minus = estimate_half_shadow(&mi, &mo, &theta, Shots::Exact, 0, &n).unwrap();
        let (fi, fo) = build_fused_ipc(&c, &v, &h).unwrap();
        let out = run_ipc(&fi, &fo, &theta, Shots::Exact, 0, &n).unwrap();
        assert!((out - 0.5 * (plus - minus)).abs() < 1e-12);
    }

    #[test]
    fn fused_is_not_a_half_shadow() {
        let c = chain(2);
        let (fi, fo) = build_fused_ipc(&c, &[1.0, 1.0], &ObservableExpr::z(2, 0)).unwrap();
        assert!(estimate_half_shadow(&fi, &fo, &[0.0, 0.0], Shots::Exact, 0, &ExecutionCounter::new()).is_err());
    }
}
