//! Dense-matrix reference implementation used as an independent oracle.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C;

use shadow_descent::circuit::ParamCircuit;
use shadow_descent::sim::{Axis, GateKind, GateOp, ObservableExpr, Pauli};

pub const I: C = C::new(0.0, 1.0);

fn c(re: f64) -> C {
    C::new(re, 0.0)
}

fn bit(b: usize, q: usize, total: usize) -> usize {
    (b >> (total - 1 - q)) & 1
}

fn single(kind: &GateKind) -> [[C; 2]; 2] {
    match *kind {
        GateKind::Hadamard => {
            let s = c(std::f64::consts::FRAC_1_SQRT_2);
            [[s, s], [s, -s]]
        }
        GateKind::PauliZ => [[c(1.0), c(0.0)], [c(0.0), c(-1.0)]],
        GateKind::Rotation { axis, angle } => {
            let (co, si) = ((angle / 2.0).cos(), (angle / 2.0).sin());
            match axis {
                Axis::X => [[c(co), -I * si], [-I * si, c(co)]],
                Axis::Y => [[c(co), c(-si)], [c(si), c(co)]],
                Axis::Z => [[C::from_polar(1.0, -angle / 2.0), c(0.0)], [c(0.0), C::from_polar(1.0, angle / 2.0)]],
            }
        }
        GateKind::Cnot => unreachable!(),
    }
}

/// Full `2^total` unitary of one gate, built column by column.
pub fn gate_matrix(g: &GateOp, total: usize) -> DMatrix<C> {
    let dim = 1usize << total;
    let mut m = DMatrix::<C>::zeros(dim, dim);
    for b in 0..dim {
        let active = g.control.as_ref().is_none_or(|ctl| {
            ctl.qubits.iter().enumerate().all(|(k, &q)| {
                let want = (ctl.value >> (ctl.qubits.len() - 1 - k)) & 1;
                bit(b, q, total) as u64 == want
            })
        });
        if !active {
            m[(b, b)] = c(1.0);
            continue;
        }
        match g.kind {
            GateKind::Cnot => {
                let (ctl, tgt) = (g.targets[0], g.targets[1]);
                let out = if bit(b, ctl, total) == 1 { b ^ (1 << (total - 1 - tgt)) } else { b };
                m[(out, b)] = c(1.0);
            }
            ref kind => {
                let q = g.targets[0];
                let u = single(kind);
                let ib = bit(b, q, total);
                for (o, row) in u.iter().enumerate() {
                    let out = (b & !(1 << (total - 1 - q))) | (o << (total - 1 - q));
                    m[(out, b)] += row[ib];
                }
            }
        }
    }
    m
}

pub fn run_dense(gates: &[GateOp], initial: DVector<C>, total: usize) -> DVector<C> {
    gates.iter().fold(initial, |s, g| gate_matrix(g, total) * s)
}

pub fn zero_state(total: usize) -> DVector<C> {
    let mut s = DVector::<C>::zeros(1 << total);
    s[0] = c(1.0);
    s
}

pub fn circuit_state(circ: &ParamCircuit, theta: &[f64]) -> DVector<C> {
    run_dense(&circ.bind(theta).unwrap(), zero_state(circ.n_qubits()), circ.n_qubits())
}

fn pauli(p: Pauli) -> DMatrix<C> {
    let z = c(0.0);
    let o = c(1.0);
    match p {
        Pauli::I => DMatrix::from_row_slice(2, 2, &[o, z, z, o]),
        Pauli::X => DMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        Pauli::Y => DMatrix::from_row_slice(2, 2, &[z, -I, I, z]),
        Pauli::Z => DMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
    }
}

/// Dense `Z_flag ⊗ diag(w) ⊗ Σ c_k P_k` on `[ancillas | flag | main]`.
pub fn observable_matrix(obs: &ObservableExpr, n_anc: usize, flag: bool) -> DMatrix<C> {
    let n = obs.terms[0].paulis.len();
    let mut h = DMatrix::<C>::zeros(1 << n, 1 << n);
    for t in &obs.terms {
        let k = t.paulis.iter().fold(DMatrix::<C>::identity(1, 1), |acc, &p| acc.kronecker(&pauli(p)));
        h += k * c(t.coeff);
    }
    let flag_m = if flag && obs.flag_z { pauli(Pauli::Z) } else { DMatrix::identity(if flag { 2 } else { 1 }, if flag { 2 } else { 1 }) };
    let w = match &obs.anc_weights {
        Some(w) => DMatrix::from_diagonal(&DVector::from_iterator(1 << n_anc, w.iter().map(|x| c(*x)))),
        None => DMatrix::identity(1 << n_anc, 1 << n_anc),
    };
    w.kronecker(&flag_m).kronecker(&h)
}

pub fn expectation(state: &DVector<C>, h: &DMatrix<C>) -> C {
    (state.adjoint() * h * state)[(0, 0)]
}

/// `f(θ)` computed entirely through dense matrices.
pub fn dense_f(circ: &ParamCircuit, theta: &[f64], obs: &ObservableExpr) -> f64 {
    expectation(&circuit_state(circ, theta), &observable_matrix(obs, 0, false)).re
}

/// Smallest eigenvalue of the observable, a lower bound on `f`.
pub fn min_eigenvalue(obs: &ObservableExpr) -> f64 {
    let h = observable_matrix(obs, 0, false);
    h.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
}

pub fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}
