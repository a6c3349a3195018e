//! Brute-force reference implementations shared by the oracle tests.
//!
//! Everything here is written the slow, obvious way — gates as explicitly
//! constructed matrices embedded into the full register, channels as their
//! textbook operator sums — sharing no code paths with the library, so
//! agreement between the two is evidence rather than tautology.

#![allow(dead_code)]

pub mod oracle_checks;

use dzne_core::circuits::{Circuit, Gate, GateKind};
use dzne_core::sim::NoiseModel;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type CMat = Vec<Vec<Complex64>>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn zeros(dim: usize) -> CMat {
    vec![vec![Complex64::default(); dim]; dim]
}

pub fn identity(dim: usize) -> CMat {
    let mut m = zeros(dim);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = c(1.0, 0.0);
    }
    m
}

pub fn matmul(a: &CMat, b: &CMat) -> CMat {
    let dim = a.len();
    let mut out = zeros(dim);
    for i in 0..dim {
        for k in 0..dim {
            let aik = a[i][k];
            if aik == Complex64::default() {
                continue;
            }
            for j in 0..dim {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

pub fn dagger(a: &CMat) -> CMat {
    let dim = a.len();
    let mut out = zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            out[j][i] = a[i][j].conj();
        }
    }
    out
}

pub fn mat_scale_add(acc: &mut CMat, m: &CMat, s: f64) {
    for (ra, rm) in acc.iter_mut().zip(m) {
        for (a, v) in ra.iter_mut().zip(rm) {
            *a += s * v;
        }
    }
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    let mut worst: f64 = 0.0;
    for (ra, rb) in a.iter().zip(b) {
        for (x, y) in ra.iter().zip(rb) {
            worst = worst.max((x - y).norm());
        }
    }
    worst
}

/// The unitary of one gate in its own 2- or 4-dimensional space, from the
/// textbook definitions. Two-qubit matrices are in the `|q0 q1>` basis with
/// the first listed qubit as the more significant bit.
pub fn gate_matrix(g: &Gate) -> CMat {
    match g.kind {
        GateKind::X => vec![
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(1.0, 0.0), c(0.0, 0.0)],
        ],
        GateKind::U3 => {
            let (t, p, l) = (g.params[0], g.params[1], g.params[2]);
            let (ct, st) = ((t / 2.0).cos(), (t / 2.0).sin());
            vec![
                vec![c(ct, 0.0), -Complex64::from_polar(st, l)],
                vec![
                    Complex64::from_polar(st, p),
                    Complex64::from_polar(ct, p + l),
                ],
            ]
        }
        GateKind::Phase => vec![
            vec![c(1.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), Complex64::from_polar(1.0, g.params[0])],
        ],
        GateKind::Cz => {
            let mut m = identity(4);
            m[3][3] = c(-1.0, 0.0);
            m
        }
        GateKind::Cnot => {
            let mut m = zeros(4);
            m[0][0] = c(1.0, 0.0);
            m[1][1] = c(1.0, 0.0);
            m[2][3] = c(1.0, 0.0);
            m[3][2] = c(1.0, 0.0);
            m
        }
    }
}

/// Embeds a 1- or 2-qubit matrix on the listed qubits into the full
/// `2^n x 2^n` space. Qubit `q` owns bit `n - 1 - q` of the basis index;
/// the first listed qubit is the more significant bit of the small matrix.
pub fn embed(n: usize, qubits: &[usize], u: &CMat) -> CMat {
    let dim = 1usize << n;
    let bits: Vec<usize> = qubits.iter().map(|&q| n - 1 - q).collect();
    let sub = |idx: usize| -> usize {
        let mut s = 0usize;
        for &b in &bits {
            s = (s << 1) | ((idx >> b) & 1);
        }
        s
    };
    let rest_mask: usize = {
        let gate_mask: usize = bits.iter().map(|&b| 1usize << b).sum();
        (dim - 1) & !gate_mask
    };
    let mut out = zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            if i & rest_mask == j & rest_mask {
                out[i][j] = u[sub(i)][sub(j)];
            }
        }
    }
    out
}

/// The full-register unitary of a circuit, as a plain matrix product.
pub fn circuit_unitary(circuit: &Circuit) -> CMat {
    let mut u = identity(1usize << circuit.n_qubits);
    for g in &circuit.gates {
        let qs: Vec<usize> = g.qubits.iter().copied().collect();
        u = matmul(&embed(circuit.n_qubits, &qs, &gate_matrix(g)), &u);
    }
    u
}

/// Applies the circuit to a statevector via full-matrix products.
pub fn apply_to_state(circuit: &Circuit, psi: &[Complex64]) -> Vec<Complex64> {
    let n = circuit.n_qubits;
    let dim = 1usize << n;
    assert_eq!(psi.len(), dim);
    let mut v = psi.to_vec();
    for g in &circuit.gates {
        let qs: Vec<usize> = g.qubits.iter().copied().collect();
        let u = embed(n, &qs, &gate_matrix(g));
        let mut next = vec![Complex64::default(); dim];
        for (i, row) in u.iter().enumerate() {
            let mut s = Complex64::default();
            for (j, e) in row.iter().enumerate() {
                s += e * v[j];
            }
            next[i] = s;
        }
        v = next;
    }
    v
}

/// A random normalized statevector.
pub fn random_state(n: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    let dim = 1usize << n;
    let mut v: Vec<Complex64> = (0..dim)
        .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let norm: f64 = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut v {
        *a /= norm;
    }
    v
}

/// A random circuit over the native gate set.
pub fn random_native_circuit(n: usize, gates: usize, rng: &mut ChaCha8Rng) -> Circuit {
    let mut circ = Circuit::new(n, "random");
    for _ in 0..gates {
        let q = rng.random_range(0..n);
        match rng.random_range(0..5) {
            0 => circ.push(Gate::x(q)),
            1 => circ.push(Gate::u3(
                q,
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
            )),
            2 => circ.push(Gate::phase(q, rng.random_range(-3.0..3.0))),
            kind => {
                if n < 2 {
                    circ.push(Gate::x(q));
                    continue;
                }
                let mut r = rng.random_range(0..n - 1);
                if r >= q {
                    r += 1;
                }
                if kind == 3 {
                    circ.push(Gate::cz(q, r));
                } else {
                    circ.push(Gate::cnot(q, r));
                }
            }
        }
    }
    circ
}

/// A random circuit using only the two-qubit kinds the twirl supports,
/// interleaved with arbitrary single-qubit gates.
pub fn random_twirlable_circuit(n: usize, gates: usize, rng: &mut ChaCha8Rng) -> Circuit {
    random_native_circuit(n, gates, rng)
}

// --- Reference density-matrix simulation ----------------------------------

/// The four Pauli matrices.
pub fn pauli_matrix(which: usize) -> CMat {
    match which {
        0 => identity(2),
        1 => vec![
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(1.0, 0.0), c(0.0, 0.0)],
        ],
        2 => vec![
            vec![c(0.0, 0.0), c(0.0, -1.0)],
            vec![c(0.0, 1.0), c(0.0, 0.0)],
        ],
        3 => vec![
            vec![c(1.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(-1.0, 0.0)],
        ],
        _ => unreachable!(),
    }
}

fn conjugate(rho: &CMat, u: &CMat) -> CMat {
    matmul(u, &matmul(rho, &dagger(u)))
}

/// Depolarizing on 1 or 2 qubits as the literal operator sum: keep the
/// state with probability `1 - p`, otherwise apply one of the `4^k - 1`
/// non-identity Pauli products uniformly.
pub fn ref_depolarizing(rho: &CMat, n: usize, qubits: &[usize], p: f64) -> CMat {
    let k = qubits.len();
    let terms = (1usize << (2 * k)) - 1;
    let mut out = zeros(rho.len());
    mat_scale_add(&mut out, rho, 1.0 - p);
    for t in 1..=terms {
        let u = match k {
            1 => embed(n, qubits, &pauli_matrix(t)),
            2 => {
                let pa = embed(n, &[qubits[0]], &pauli_matrix(t >> 2));
                let pb = embed(n, &[qubits[1]], &pauli_matrix(t & 3));
                matmul(&pa, &pb)
            }
            _ => panic!("depolarizing defined for 1 or 2 qubits"),
        };
        mat_scale_add(&mut out, &conjugate(rho, &u), p / terms as f64);
    }
    out
}

/// `exp(-i eps/2 Z@Z)` on a pair, as an embedded diagonal unitary.
pub fn ref_coherent_zz(rho: &CMat, n: usize, a: usize, b: usize, eps: f64) -> CMat {
    let mut u = zeros(4);
    for (idx, row) in u.iter_mut().enumerate() {
        let parity = if (idx ^ (idx >> 1)) & 1 == 0 { 1.0 } else { -1.0 };
        row[idx] = Complex64::from_polar(1.0, -eps / 2.0 * parity);
    }
    conjugate(rho, &embed(n, &[a, b], &u))
}

/// Reference for the library's `simulate`: ground state, then per gate the
/// unitary, depolarizing on its qubits, and the coherent ZZ error after
/// two-qubit gates. Twirl-frame gates are noiseless.
pub fn ref_simulate(circuit: &Circuit, noise: &NoiseModel) -> CMat {
    let n = circuit.n_qubits;
    let dim = 1usize << n;
    let mut rho = zeros(dim);
    rho[0][0] = c(1.0, 0.0);
    for g in &circuit.gates {
        let qs: Vec<usize> = g.qubits.iter().copied().collect();
        rho = conjugate(&rho, &embed(n, &qs, &gate_matrix(g)));
        if g.is_twirl_frame {
            continue;
        }
        if qs.len() == 2 {
            let p = noise.depol_rate_for_pair(qs[0], qs[1]);
            if p > 0.0 {
                rho = ref_depolarizing(&rho, n, &qs, p);
            }
            if noise.coherent_epsilon != 0.0 {
                rho = ref_coherent_zz(&rho, n, qs[0], qs[1], noise.coherent_epsilon);
            }
        } else if noise.depol_1q > 0.0 {
            rho = ref_depolarizing(&rho, n, &qs, noise.depol_1q);
        }
    }
    rho
}

/// `tr(rho P)` for an unsigned Pauli word given as per-qubit indices
/// (0 = I, 1 = X, 2 = Y, 3 = Z).
pub fn ref_expectation(rho: &CMat, letters: &[usize]) -> Complex64 {
    let n = letters.len();
    let mut p = identity(1usize << n);
    for (q, &w) in letters.iter().enumerate() {
        if w != 0 {
            p = matmul(&p, &embed(n, &[q], &pauli_matrix(w)));
        }
    }
    let prod = matmul(rho, &p);
    (0..prod.len()).map(|i| prod[i][i]).sum()
}
