//! Density-matrix storage and the channel primitives.
//!
//! Qubit `q` maps to bit `n - 1 - q` of a basis index, so qubit 0 is the
//! leftmost character of a bitstring. The state starts as a classical
//! mixture (just the diagonal) and is promoted to a dense matrix only when a
//! gate genuinely creates coherence. Gate matrices are classified first:
//! generalized permutations (every native gate except a generic `U3`) act by
//! moving entries around, which keeps the diagonal representation closed and
//! makes the dense path a single sweep instead of a full conjugation.

use num_complex::Complex64;

use crate::circuits::{gate_unitary, Gate, GateMatrix, Pauli, PauliString};
use crate::error::{Error, Result};
use crate::MAX_QUBITS;

/// Matrix entries below this are treated as structural zeros when
/// classifying a gate. Native gates are either exact about their zeros or,
/// like `U3(pi, ...)`, off by ~1e-16 from a permutation; the approximation
/// error this tolerance admits is far below every test tolerance in the
/// crate.
const STRUCTURE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    /// Row-major `2^n x 2^n` matrix.
    Dense(Vec<Complex64>),
    /// Populations only; valid while the state is diagonal in the
    /// computational basis.
    Diagonal(Vec<f64>),
}

/// An `n`-qubit mixed state.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    repr: Repr,
}

impl DensityMatrix {
    /// `|0...0><0...0|`.
    pub fn ground(n_qubits: usize) -> Result<DensityMatrix> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::InvalidCircuit(format!(
                "register width {n_qubits} outside 1..={MAX_QUBITS}"
            )));
        }
        let mut d = vec![0.0; 1 << n_qubits];
        d[0] = 1.0;
        Ok(DensityMatrix {
            n_qubits,
            repr: Repr::Diagonal(d),
        })
    }

    /// Wraps an explicit dense matrix (row major, length `4^n`). The caller
    /// is responsible for it being a state; use [`DensityMatrix::check_valid`]
    /// to verify.
    pub fn from_dense(n_qubits: usize, data: Vec<Complex64>) -> Result<DensityMatrix> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::InvalidCircuit(format!(
                "register width {n_qubits} outside 1..={MAX_QUBITS}"
            )));
        }
        let dim = 1usize << n_qubits;
        if data.len() != dim * dim {
            return Err(Error::InvalidCircuit(format!(
                "dense state needs {} entries, got {}",
                dim * dim,
                data.len()
            )));
        }
        Ok(DensityMatrix {
            n_qubits,
            repr: Repr::Dense(data),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    /// True while the state is stored as a diagonal. Exposed for tests that
    /// pin down when densification happens.
    pub fn is_diagonal_repr(&self) -> bool {
        matches!(self.repr, Repr::Diagonal(_))
    }

    /// Bit position (from the least significant end) of qubit `q`.
    fn shift(&self, q: usize) -> usize {
        self.n_qubits - 1 - q
    }

    /// The diagonal as real populations.
    pub fn diagonal_probs(&self) -> Vec<f64> {
        match &self.repr {
            Repr::Diagonal(d) => d.clone(),
            Repr::Dense(m) => {
                let dim = self.dim();
                (0..dim).map(|i| m[i * dim + i].re).collect()
            }
        }
    }

    /// Full dense copy, materializing the diagonal if needed.
    pub fn to_dense_vec(&self) -> Vec<Complex64> {
        let dim = self.dim();
        match &self.repr {
            Repr::Dense(m) => m.clone(),
            Repr::Diagonal(d) => {
                let mut m = vec![Complex64::default(); dim * dim];
                for (i, &v) in d.iter().enumerate() {
                    m[i * dim + i] = Complex64::new(v, 0.0);
                }
                m
            }
        }
    }

    pub fn trace(&self) -> f64 {
        match &self.repr {
            Repr::Diagonal(d) => d.iter().sum(),
            Repr::Dense(m) => {
                let dim = self.dim();
                (0..dim).map(|i| m[i * dim + i].re).sum()
            }
        }
    }

    /// Checks trace one, hermiticity, and finiteness within `tol`.
    pub fn check_valid(&self, tol: f64) -> Result<()> {
        let tr = self.trace();
        if !tr.is_finite() || (tr - 1.0).abs() > tol {
            return Err(Error::Numerical(format!("trace {tr} not 1 within {tol}")));
        }
        match &self.repr {
            Repr::Diagonal(d) => {
                for &v in d {
                    if !v.is_finite() || v < -tol {
                        return Err(Error::Numerical(format!("population {v} invalid")));
                    }
                }
            }
            Repr::Dense(m) => {
                let dim = self.dim();
                for i in 0..dim {
                    for j in i..dim {
                        let a = m[i * dim + j];
                        let b = m[j * dim + i];
                        if !a.re.is_finite() || !a.im.is_finite() {
                            return Err(Error::Numerical("non-finite entry".into()));
                        }
                        if (a - b.conj()).norm() > tol {
                            return Err(Error::Numerical(format!(
                                "hermiticity violated at ({i},{j}) by {:.3e}",
                                (a - b.conj()).norm()
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Smallest eigenvalue; a positivity probe for tests. Cheap for diagonal
    /// states, an exact Hermitian eigensolve otherwise.
    pub fn min_eigenvalue(&self) -> f64 {
        match &self.repr {
            Repr::Diagonal(d) => d.iter().cloned().fold(f64::INFINITY, f64::min),
            Repr::Dense(m) => {
                let dim = self.dim();
                let mat = nalgebra::DMatrix::from_fn(dim, dim, |r, c| m[r * dim + c]);
                mat.symmetric_eigen()
                    .eigenvalues
                    .iter()
                    .cloned()
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }

    fn densify(&mut self) {
        if let Repr::Diagonal(d) = &self.repr {
            let dim = self.dim();
            let mut m = vec![Complex64::default(); dim * dim];
            for (i, &v) in d.iter().enumerate() {
                m[i * dim + i] = Complex64::new(v, 0.0);
            }
            self.repr = Repr::Dense(m);
        }
    }

    /// Applies a native gate's unitary (no noise).
    pub fn apply_gate(&mut self, gate: &Gate) {
        match gate_unitary(gate) {
            GateMatrix::One(m) => self.apply_unitary1(gate.qubits[0], &m),
            GateMatrix::Two(m) => self.apply_unitary2(gate.qubits[0], gate.qubits[1], &m),
        }
    }

    /// Conjugates by a one-qubit unitary on `q`.
    pub fn apply_unitary1(&mut self, q: usize, m: &[Complex64; 4]) {
        let p = 1usize << self.shift(q);
        let diag = m[1].norm() < STRUCTURE_TOL && m[2].norm() < STRUCTURE_TOL;
        let anti = m[0].norm() < STRUCTURE_TOL && m[3].norm() < STRUCTURE_TOL;
        if !diag && !anti {
            self.densify();
        }
        match &mut self.repr {
            Repr::Diagonal(d) => {
                if anti {
                    let dim = d.len();
                    for i in 0..dim {
                        if i & p == 0 {
                            d.swap(i, i | p);
                        }
                    }
                }
                // Diagonal phases cancel against their conjugates on
                // populations: nothing to do.
            }
            Repr::Dense(data) => {
                let dim = 1usize << self.n_qubits;
                if diag {
                    dense_perm1(data, dim, p, [0, 1], [m[0], m[3]]);
                } else if anti {
                    dense_perm1(data, dim, p, [1, 0], [m[2], m[1]]);
                } else {
                    dense_general1(data, dim, p, m);
                }
            }
        }
    }

    /// Conjugates by a two-qubit unitary; basis order `|q0 q1>`.
    pub fn apply_unitary2(&mut self, q0: usize, q1: usize, m: &[Complex64; 16]) {
        let p0 = 1usize << self.shift(q0);
        let p1 = 1usize << self.shift(q1);
        let perm = classify_genperm2(m);
        if perm.is_none() {
            self.densify();
        }
        match &mut self.repr {
            Repr::Diagonal(d) => {
                let (perm, _) = perm.unwrap();
                let mask = p0 | p1;
                let dim = d.len();
                for base in 0..dim {
                    if base & mask != 0 {
                        continue;
                    }
                    let idx = local_offsets(base, p0, p1);
                    let vals = [d[idx[0]], d[idx[1]], d[idx[2]], d[idx[3]]];
                    for l in 0..4 {
                        d[idx[perm[l]]] = vals[l];
                    }
                }
            }
            Repr::Dense(data) => {
                let dim = 1usize << self.n_qubits;
                match perm {
                    Some((perm, phases)) => dense_perm2(data, dim, p0, p1, &perm, &phases),
                    None => dense_general2(data, dim, p0, p1, m),
                }
            }
        }
    }

    /// Uniform depolarizing with probability `p` over the non-identity
    /// Paulis on `qubits` (1 or 2 of them): with probability `p` one of the
    /// `4^k - 1` non-identity Paulis is applied, uniformly.
    ///
    /// Implemented through the twirl identity
    /// `sum_P P rho P^dag / 4^k = tr_Q(rho) (x) I/2^k`, which turns the
    /// channel into a two-sweep mix with the marginal state instead of a sum
    /// over Pauli conjugations.
    pub fn apply_depolarizing(&mut self, qubits: &[usize], p: f64) {
        assert!(
            (1..=2).contains(&qubits.len()),
            "depolarizing defined for 1 or 2 qubits"
        );
        let fourk = (1usize << (2 * qubits.len())) as f64;
        let q = p * fourk / (fourk - 1.0);
        let mask: usize = qubits.iter().map(|&q| 1usize << self.shift(q)).sum();
        let cells = 1usize << qubits.len();
        match &mut self.repr {
            Repr::Diagonal(d) => {
                let dim = d.len();
                let mut marg = vec![0.0; dim];
                for i in 0..dim {
                    marg[i & !mask] += d[i];
                }
                let w = q / cells as f64;
                for i in 0..dim {
                    d[i] = (1.0 - q) * d[i] + w * marg[i & !mask];
                }
            }
            Repr::Dense(data) => {
                let dim = 1usize << self.n_qubits;
                let mut marg = vec![Complex64::default(); dim * dim];
                for i in 0..dim {
                    for j in 0..dim {
                        if i & mask == j & mask {
                            marg[(i & !mask) * dim + (j & !mask)] += data[i * dim + j];
                        }
                    }
                }
                let w = q / cells as f64;
                for i in 0..dim {
                    for j in 0..dim {
                        let mut v = (1.0 - q) * data[i * dim + j];
                        if i & mask == j & mask {
                            v += w * marg[(i & !mask) * dim + (j & !mask)];
                        }
                        data[i * dim + j] = v;
                    }
                }
            }
        }
    }

    /// Conjugates by `exp(-i eps/2 Z@Z)` on qubits `a`, `b`. Diagonal states
    /// are untouched (the error commutes with populations); dense states get
    /// a phase on entries whose two ZZ parities differ.
    pub fn apply_coherent_zz(&mut self, a: usize, b: usize, eps: f64) {
        let pa = 1usize << self.shift(a);
        let pb = 1usize << self.shift(b);
        if let Repr::Dense(data) = &mut self.repr {
            let dim = 1usize << self.n_qubits;
            // zz parity of an index: +1 when bits at a and b agree.
            let plus = Complex64::from_polar(1.0, -eps);
            let minus = plus.conj();
            for i in 0..dim {
                let zi = ((i & pa != 0) as u8) ^ ((i & pb != 0) as u8);
                for j in 0..dim {
                    let zj = ((j & pa != 0) as u8) ^ ((j & pb != 0) as u8);
                    if zi != zj {
                        // zz_i - zz_j = +2 when i has even parity, else -2.
                        data[i * dim + j] *= if zi == 0 { plus } else { minus };
                    }
                }
            }
        }
    }

    /// `tr(rho P)` for a signed Pauli string. Errors if the imaginary
    /// residual exceeds 1e-10 (it is discarded otherwise).
    pub fn expectation(&self, obs: &PauliString) -> Result<f64> {
        if obs.n_qubits() != self.n_qubits {
            return Err(Error::InvalidConfig(format!(
                "observable on {} qubits against a {}-qubit state",
                obs.n_qubits(),
                self.n_qubits
            )));
        }
        match &self.repr {
            Repr::Diagonal(d) => {
                if !obs.is_z_diagonal() {
                    // <X> and <Y> vanish exactly for classical mixtures.
                    return Ok(0.0);
                }
                let zmask: usize = obs
                    .support()
                    .iter()
                    .map(|&q| 1usize << self.shift(q))
                    .sum();
                let mut sum = 0.0;
                for (i, &v) in d.iter().enumerate() {
                    if (i & zmask).count_ones().is_multiple_of(2) {
                        sum += v;
                    } else {
                        sum -= v;
                    }
                }
                Ok(obs.sign() * sum)
            }
            Repr::Dense(data) => {
                let dim = self.dim();
                let mut flip = 0usize;
                let mut zmask = 0usize;
                let mut ymask = 0usize;
                for (q, &l) in obs.letters().iter().enumerate() {
                    let bit = 1usize << self.shift(q);
                    match l {
                        Pauli::I => {}
                        Pauli::X => flip |= bit,
                        Pauli::Y => {
                            flip |= bit;
                            ymask |= bit;
                        }
                        Pauli::Z => zmask |= bit,
                    }
                }
                let n_y = ymask.count_ones() as usize;
                let mut sum = Complex64::default();
                for j in 0..dim {
                    // P|j> = phase * |j ^ flip>; tr(rho P) sums
                    // phase(j) * rho[j, j ^ flip].
                    // Z letters: (-1)^bit. Y letters: i on bit 0, -i on bit 1,
                    // i.e. i^{n_y} * (-1)^{ones under ymask}.
                    let mut neg = (j & zmask).count_ones() + (j & ymask).count_ones();
                    neg %= 2;
                    let mut phase = match n_y % 4 {
                        0 => Complex64::new(1.0, 0.0),
                        1 => Complex64::new(0.0, 1.0),
                        2 => Complex64::new(-1.0, 0.0),
                        _ => Complex64::new(0.0, -1.0),
                    };
                    if neg == 1 {
                        phase = -phase;
                    }
                    sum += phase * data[j * dim + (j ^ flip)];
                }
                if sum.im.abs() > 1e-10 {
                    return Err(Error::Numerical(format!(
                        "expectation has imaginary residual {:.3e}",
                        sum.im
                    )));
                }
                Ok(obs.sign() * sum.re)
            }
        }
    }
}

/// Offsets of the four local basis states `|q0 q1>` within a base index
/// that has both moving bits clear. Local index `l = 2*bit(q0) + bit(q1)`.
#[inline]
fn local_offsets(base: usize, p0: usize, p1: usize) -> [usize; 4] {
    [base, base | p1, base | p0, base | p0 | p1]
}

/// Detects a generalized permutation: each column holds exactly one
/// modulus-one entry. Returns the column-to-row map and the phases.
fn classify_genperm2(m: &[Complex64; 16]) -> Option<([usize; 4], [Complex64; 4])> {
    let mut perm = [usize::MAX; 4];
    let mut phases = [Complex64::default(); 4];
    for col in 0..4 {
        let mut hit = usize::MAX;
        for row in 0..4 {
            if m[row * 4 + col].norm() >= STRUCTURE_TOL {
                if hit != usize::MAX {
                    return None;
                }
                hit = row;
            }
        }
        if hit == usize::MAX {
            return None;
        }
        let v = m[hit * 4 + col];
        if (v.norm() - 1.0).abs() > 1e-9 {
            return None;
        }
        perm[col] = hit;
        phases[col] = v;
    }
    let mut seen = [false; 4];
    for &r in &perm {
        if seen[r] {
            return None;
        }
        seen[r] = true;
    }
    Some((perm, phases))
}

/// One-qubit generalized permutation on a dense state:
/// `rho'[perm(a), perm(b)] = u_a conj(u_b) rho[a, b]` tile by tile.
fn dense_perm1(data: &mut [Complex64], dim: usize, p: usize, perm: [usize; 2], u: [Complex64; 2]) {
    for rb in 0..dim {
        if rb & p != 0 {
            continue;
        }
        for cb in 0..dim {
            if cb & p != 0 {
                continue;
            }
            let r = [rb, rb | p];
            let c = [cb, cb | p];
            let mut tile = [Complex64::default(); 4];
            for a in 0..2 {
                for b in 0..2 {
                    tile[a * 2 + b] = data[r[a] * dim + c[b]];
                }
            }
            for a in 0..2 {
                for b in 0..2 {
                    data[r[perm[a]] * dim + c[perm[b]]] = u[a] * u[b].conj() * tile[a * 2 + b];
                }
            }
        }
    }
}

/// Two-qubit generalized permutation, same scheme with 4x4 tiles.
fn dense_perm2(
    data: &mut [Complex64],
    dim: usize,
    p0: usize,
    p1: usize,
    perm: &[usize; 4],
    u: &[Complex64; 4],
) {
    let mask = p0 | p1;
    for rb in 0..dim {
        if rb & mask != 0 {
            continue;
        }
        let ri = local_offsets(rb, p0, p1);
        for cb in 0..dim {
            if cb & mask != 0 {
                continue;
            }
            let ci = local_offsets(cb, p0, p1);
            let mut tile = [Complex64::default(); 16];
            for a in 0..4 {
                for b in 0..4 {
                    tile[a * 4 + b] = data[ri[a] * dim + ci[b]];
                }
            }
            for a in 0..4 {
                for b in 0..4 {
                    data[ri[perm[a]] * dim + ci[perm[b]]] = u[a] * u[b].conj() * tile[a * 4 + b];
                }
            }
        }
    }
}

/// Full conjugation `U rho U^dag` by a one-qubit unitary: a row sweep for
/// the left factor, then a column sweep for the right.
fn dense_general1(data: &mut [Complex64], dim: usize, p: usize, m: &[Complex64; 4]) {
    for r0 in 0..dim {
        if r0 & p != 0 {
            continue;
        }
        let r1 = r0 | p;
        for c in 0..dim {
            let a = data[r0 * dim + c];
            let b = data[r1 * dim + c];
            data[r0 * dim + c] = m[0] * a + m[1] * b;
            data[r1 * dim + c] = m[2] * a + m[3] * b;
        }
    }
    for r in 0..dim {
        let row = r * dim;
        for c0 in 0..dim {
            if c0 & p != 0 {
                continue;
            }
            let c1 = c0 | p;
            let a = data[row + c0];
            let b = data[row + c1];
            data[row + c0] = a * m[0].conj() + b * m[1].conj();
            data[row + c1] = a * m[2].conj() + b * m[3].conj();
        }
    }
}

/// Full conjugation by a two-qubit unitary.
fn dense_general2(data: &mut [Complex64], dim: usize, p0: usize, p1: usize, m: &[Complex64; 16]) {
    let mask = p0 | p1;
    for rb in 0..dim {
        if rb & mask != 0 {
            continue;
        }
        let ri = local_offsets(rb, p0, p1);
        for c in 0..dim {
            let v = [
                data[ri[0] * dim + c],
                data[ri[1] * dim + c],
                data[ri[2] * dim + c],
                data[ri[3] * dim + c],
            ];
            for l in 0..4 {
                data[ri[l] * dim + c] =
                    m[l * 4] * v[0] + m[l * 4 + 1] * v[1] + m[l * 4 + 2] * v[2] + m[l * 4 + 3] * v[3];
            }
        }
    }
    for r in 0..dim {
        let row = r * dim;
        for cb in 0..dim {
            if cb & mask != 0 {
                continue;
            }
            let ci = local_offsets(cb, p0, p1);
            let v = [
                data[row + ci[0]],
                data[row + ci[1]],
                data[row + ci[2]],
                data[row + ci[3]],
            ];
            for l in 0..4 {
                data[row + ci[l]] = v[0] * m[l * 4].conj()
                    + v[1] * m[l * 4 + 1].conj()
                    + v[2] * m[l * 4 + 2].conj()
                    + v[3] * m[l * 4 + 3].conj();
            }
        }
    }
}
