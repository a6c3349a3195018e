//! Shot sampling with readout error and the counts-side estimators.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;

use crate::circuits::{Pauli, PauliString};
use crate::error::{Error, Result};
use crate::seeds;
use crate::sim::{DensityMatrix, ReadoutRates};

/// Measured bitstring histogram. Keys are basis indices with qubit 0 as the
/// most significant bit; the map is ordered so iteration (and everything
/// derived from it) is deterministic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counts {
    n_qubits: usize,
    shots: u64,
    table: BTreeMap<u64, u64>,
}

impl Counts {
    pub fn new(n_qubits: usize, table: BTreeMap<u64, u64>) -> Result<Counts> {
        let dim = 1u64 << n_qubits;
        if table.keys().any(|&k| k >= dim) {
            return Err(Error::InvalidConfig(
                "count key outside the register range".into(),
            ));
        }
        let shots = table.values().sum();
        if shots == 0 {
            return Err(Error::InvalidConfig("empty counts table".into()));
        }
        Ok(Counts {
            n_qubits,
            shots,
            table,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn get(&self, index: u64) -> u64 {
        self.table.get(&index).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.table.iter().map(|(&k, &v)| (k, v))
    }

    /// Renders a basis index with qubit 0 leftmost, e.g. `0b10` on three
    /// qubits is `"010"`.
    pub fn bitstring(&self, index: u64) -> String {
        (0..self.n_qubits)
            .map(|q| {
                if index >> (self.n_qubits - 1 - q) & 1 == 1 {
                    '1'
                } else {
                    '0'
                }
            })
            .collect()
    }
}

/// Measurement-basis rotation for one Pauli letter: `H` diagonalizes `X`,
/// `H S^dag` diagonalizes `Y`, `Z` and `I` need nothing.
fn basis_rotation(letter: Pauli) -> Option<[Complex64; 4]> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    match letter {
        Pauli::I | Pauli::Z => None,
        Pauli::X => Some([
            Complex64::new(s, 0.0),
            Complex64::new(s, 0.0),
            Complex64::new(s, 0.0),
            Complex64::new(-s, 0.0),
        ]),
        Pauli::Y => Some([
            Complex64::new(s, 0.0),
            Complex64::new(0.0, -s),
            Complex64::new(s, 0.0),
            Complex64::new(0.0, s),
        ]),
    }
}

/// Populations of the state in the eigenbasis of `observable`: each qubit
/// is rotated so its letter becomes `Z`, and the diagonal is returned in
/// bitstring order. This is what a measurement samples from, before any
/// readout error.
pub fn measurement_probs(rho: &DensityMatrix, observable: &PauliString) -> Result<Vec<f64>> {
    if observable.n_qubits() != rho.n_qubits() {
        return Err(Error::InvalidConfig(format!(
            "observable on {} qubits against a {}-qubit state",
            observable.n_qubits(),
            rho.n_qubits()
        )));
    }
    Ok(if observable.is_z_diagonal() {
        rho.diagonal_probs()
    } else {
        let mut rotated = rho.clone();
        for (q, &letter) in observable.letters().iter().enumerate() {
            if let Some(m) = basis_rotation(letter) {
                rotated.apply_unitary1(q, &m);
            }
        }
        rotated.diagonal_probs()
    })
}

/// Samples `shots` measurements of the state in the eigenbasis of
/// `observable` (each qubit rotated so its letter becomes `Z`), then flips
/// each readout bit independently per the per-qubit rates. An empty
/// `readout` slice means ideal readout. Deterministic in `seed`.
pub fn sample_counts(
    rho: &DensityMatrix,
    observable: &PauliString,
    shots: u64,
    readout: &[ReadoutRates],
    seed: u64,
) -> Result<Counts> {
    let n = rho.n_qubits();
    if observable.n_qubits() != n {
        return Err(Error::InvalidConfig(format!(
            "observable on {} qubits against a {n}-qubit state",
            observable.n_qubits()
        )));
    }
    if shots == 0 {
        return Err(Error::InvalidConfig("shots must be positive".into()));
    }
    if !readout.is_empty() && readout.len() != n {
        return Err(Error::InvalidNoise(format!(
            "readout rates for {} qubits but the register has {n}",
            readout.len()
        )));
    }

    let probs = measurement_probs(rho, observable)?;

    // Tiny negative populations are numerical residue; clamp and check the
    // mass is still a distribution before building the CDF.
    let mut cdf = Vec::with_capacity(probs.len());
    let mut total = 0.0;
    for &p in &probs {
        if p < -1e-9 {
            return Err(Error::Numerical(format!("population {p} below zero")));
        }
        total += p.max(0.0);
        cdf.push(total);
    }
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::Numerical(format!(
            "population mass {total} is not a distribution"
        )));
    }

    let mut rng = seeds::rng_from(seed);
    let mut table: BTreeMap<u64, u64> = BTreeMap::new();
    for _ in 0..shots {
        let u: f64 = rng.random_range(0.0..total);
        let mut outcome = cdf.partition_point(|&c| c <= u) as u64;
        for (q, r) in readout.iter().enumerate() {
            let bit = 1u64 << (n - 1 - q);
            let flip_prob = if outcome & bit == 0 { r.p10 } else { r.p01 };
            if flip_prob > 0.0 && rng.random_range(0.0..1.0) < flip_prob {
                outcome ^= bit;
            }
        }
        *table.entry(outcome).or_insert(0) += 1;
    }
    Counts::new(n, table)
}

/// Estimates `<observable>` from counts sampled in its eigenbasis: the
/// signed mean of `(-1)^parity` over the support bits, with the binomial
/// standard error `sqrt((1 - mean^2) / shots)`.
pub fn expectation_from_counts(counts: &Counts, observable: &PauliString) -> Result<(f64, f64)> {
    if observable.n_qubits() != counts.n_qubits() {
        return Err(Error::InvalidConfig(format!(
            "observable on {} qubits against {}-qubit counts",
            observable.n_qubits(),
            counts.n_qubits()
        )));
    }
    let shots = counts.shots();
    if shots < 2 {
        return Err(Error::Numerical(
            "need at least 2 shots for a standard error".into(),
        ));
    }
    let n = counts.n_qubits();
    let mask: u64 = observable
        .support()
        .iter()
        .map(|&q| 1u64 << (n - 1 - q))
        .sum();
    let mut acc: i64 = 0;
    for (index, count) in counts.iter() {
        let parity = (index & mask).count_ones() % 2;
        let signed = if parity == 0 {
            count as i64
        } else {
            -(count as i64)
        };
        acc += signed;
    }
    let mean = observable.sign() * acc as f64 / shots as f64;
    let stderr = ((1.0 - mean * mean).max(0.0) / shots as f64).sqrt();
    Ok((mean, stderr))
}
