//! Pauli twirling of two-qubit Clifford gates.
//!
//! Each `CZ`/`CNOT` is dressed with a uniformly random two-qubit Pauli `P`
//! before and its conjugate `Q = G P G^dag` (sign dropped, it is a global
//! phase) after, so the dressed gate still implements `G` exactly while the
//! gate's coherent error gets averaged into a stochastic Pauli channel.
//! Frames are realized as native gates and marked, so the simulator applies
//! them noiselessly and folding skips them.

use std::sync::OnceLock;

use num_complex::Complex64;
use rand::Rng;

use crate::circuits::{Circuit, Gate, GateKind, Pauli};
use crate::error::{Error, Result};
use crate::seeds;

/// A signed two-qubit Pauli `sign * (first @ second)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignedPauliPair {
    pub first: Pauli,
    pub second: Pauli,
    /// +1 or -1.
    pub sign: i8,
}

fn pair_index(a: Pauli, b: Pauli) -> usize {
    let ord = |p: Pauli| p as usize;
    ord(a) * 4 + ord(b)
}

fn kron2(a: &[Complex64; 4], b: &[Complex64; 4]) -> [Complex64; 16] {
    let mut out = [Complex64::default(); 16];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[(2 * i + k) * 4 + (2 * j + l)] = a[i * 2 + j] * b[k * 2 + l];
                }
            }
        }
    }
    out
}

fn mat_mul4(a: &[Complex64; 16], b: &[Complex64; 16]) -> [Complex64; 16] {
    let mut out = [Complex64::default(); 16];
    for i in 0..4 {
        for j in 0..4 {
            let mut s = Complex64::default();
            for k in 0..4 {
                s += a[i * 4 + k] * b[k * 4 + j];
            }
            out[i * 4 + j] = s;
        }
    }
    out
}

fn adjoint4(a: &[Complex64; 16]) -> [Complex64; 16] {
    let mut out = [Complex64::default(); 16];
    for i in 0..4 {
        for j in 0..4 {
            out[i * 4 + j] = a[j * 4 + i].conj();
        }
    }
    out
}

fn gate_matrix16(kind: GateKind) -> [Complex64; 16] {
    let g = match kind {
        GateKind::Cz => Gate::cz(0, 1),
        GateKind::Cnot => Gate::cnot(0, 1),
        _ => unreachable!("only two-qubit kinds have 4x4 matrices"),
    };
    match crate::circuits::gate_unitary(&g) {
        crate::circuits::GateMatrix::Two(m) => m,
        _ => unreachable!(),
    }
}

/// Builds the 16-entry conjugation table for one gate kind by brute force:
/// compute `G (P1 @ P2) G^dag` and search the 32 signed Pauli pairs for the
/// exact match.
fn build_table(kind: GateKind) -> [SignedPauliPair; 16] {
    let g = gate_matrix16(kind);
    let gd = adjoint4(&g);
    let mut table = [SignedPauliPair {
        first: Pauli::I,
        second: Pauli::I,
        sign: 1,
    }; 16];
    for a in Pauli::ALL {
        for b in Pauli::ALL {
            let conj = mat_mul4(&mat_mul4(&g, &kron2(&a.matrix(), &b.matrix())), &gd);
            let mut found = None;
            'search: for qa in Pauli::ALL {
                for qb in Pauli::ALL {
                    let cand = kron2(&qa.matrix(), &qb.matrix());
                    for sign in [1i8, -1] {
                        let ok = conj.iter().zip(&cand).all(|(x, y)| {
                            (x - Complex64::new(sign as f64, 0.0) * y).norm() < 1e-12
                        });
                        if ok {
                            found = Some(SignedPauliPair {
                                first: qa,
                                second: qb,
                                sign,
                            });
                            break 'search;
                        }
                    }
                }
            }
            table[pair_index(a, b)] =
                found.unwrap_or_else(|| panic!("{:?} does not normalize the Pauli group", kind));
        }
    }
    table
}

fn table_for(kind: GateKind) -> Option<&'static [SignedPauliPair; 16]> {
    static CZ: OnceLock<[SignedPauliPair; 16]> = OnceLock::new();
    static CNOT: OnceLock<[SignedPauliPair; 16]> = OnceLock::new();
    match kind {
        GateKind::Cz => Some(CZ.get_or_init(|| build_table(GateKind::Cz))),
        GateKind::Cnot => Some(CNOT.get_or_init(|| build_table(GateKind::Cnot))),
        _ => None,
    }
}

/// `G (first @ second) G^dag` as a signed Pauli pair, for `G` in
/// `{CZ, CNOT}` (control-first convention for `CNOT`).
pub fn conjugate_pauli(kind: GateKind, first: Pauli, second: Pauli) -> Result<SignedPauliPair> {
    table_for(kind)
        .map(|t| t[pair_index(first, second)])
        .ok_or_else(|| Error::InvalidConfig(format!("no conjugation table for {}", kind.name())))
}

/// The native-gate realization of a Pauli frame. Identity frames are kept so
/// every twirled two-qubit gate has the same five-gate layout.
pub fn frame_gate(p: Pauli, qubit: usize) -> Gate {
    use std::f64::consts::{FRAC_PI_2, PI};
    match p {
        Pauli::I => Gate::u3(qubit, 0.0, 0.0, 0.0),
        Pauli::X => Gate::x(qubit),
        // U3(pi, pi/2, pi/2) is exactly [[0, -i], [i, 0]].
        Pauli::Y => Gate::u3(qubit, PI, FRAC_PI_2, FRAC_PI_2),
        Pauli::Z => Gate::phase(qubit, PI),
    }
    .with_twirl_frame()
}

/// Draws one Pauli-twirl instance of the circuit: every two-qubit gate `G`
/// becomes `frame(P) ; G ; frame(Q)` with `P` uniform over the 16 pairs and
/// `Q = G P G^dag` up to sign. Single-qubit gates pass through. The result
/// implements the same unitary as the input (up to global phase) and is
/// deterministic in `seed`.
pub fn twirl_circuit(circuit: &Circuit, seed: u64) -> Result<Circuit> {
    let mut rng = seeds::rng_from(seed);
    let mut out = Circuit::new(circuit.n_qubits, format!("{}|twirled", circuit.label));
    for (index, gate) in circuit.gates.iter().enumerate() {
        if gate.arity() != 2 {
            out.push(gate.clone());
            continue;
        }
        let table = table_for(gate.kind).ok_or_else(|| Error::Twirl {
            index,
            reason: format!("{} has no conjugation rule", gate.kind.name()),
        })?;
        let draw = rng.random_range(0..16usize);
        let (pa, pb) = (Pauli::ALL[draw / 4], Pauli::ALL[draw % 4]);
        let q = table[pair_index(pa, pb)];
        out.push(frame_gate(pa, gate.qubits[0]));
        out.push(frame_gate(pb, gate.qubits[1]));
        out.push(gate.clone());
        out.push(frame_gate(q.first, gate.qubits[0]));
        out.push(frame_gate(q.second, gate.qubits[1]));
    }
    Ok(out)
}
