//! Tensored readout-error mitigation.
//!
//! The readout channel is modeled per qubit by the column-stochastic
//! confusion matrix `A_q = [[1-p10, p01], [p10, 1-p01]]` (columns indexed by
//! the true bit, rows by the read bit). Calibration estimates the rates from
//! two basis states; correction applies `A_q^{-1}` axis by axis to a counts
//! histogram, yielding a quasi-probability distribution whose entries may be
//! negative but still sum to one.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::circuits::{Circuit, Gate, PauliString};
use crate::error::{Error, Result};
use crate::seeds;
use crate::sim::{sample_counts, Counts, DensityMatrix, NoiseModel, ReadoutRates};

/// Determinant below which a per-qubit confusion matrix counts as singular.
const MIN_DET: f64 = 1e-9;

/// Per-qubit confusion rates with their inverses precomputable; the
/// tensored model for a full register.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionModel {
    rates: Vec<ReadoutRates>,
}

impl ConfusionModel {
    pub fn new(rates: Vec<ReadoutRates>) -> Result<ConfusionModel> {
        if rates.is_empty() {
            return Err(Error::Readout("confusion model needs at least one qubit".into()));
        }
        for (q, r) in rates.iter().enumerate() {
            if !(0.0..=1.0).contains(&r.p01) || !(0.0..=1.0).contains(&r.p10) {
                return Err(Error::Readout(format!(
                    "qubit {q}: rates ({}, {}) outside [0, 1]",
                    r.p01, r.p10
                )));
            }
            if 1.0 - r.p01 - r.p10 < MIN_DET {
                return Err(Error::Readout(format!(
                    "qubit {q}: confusion matrix is singular (p01 + p10 = {})",
                    r.p01 + r.p10
                )));
            }
        }
        Ok(ConfusionModel { rates })
    }

    pub fn n_qubits(&self) -> usize {
        self.rates.len()
    }

    pub fn rates(&self) -> &[ReadoutRates] {
        &self.rates
    }

    /// `[[1-p10, p01], [p10, 1-p01]]`, column-stochastic.
    pub fn matrix(&self, qubit: usize) -> [[f64; 2]; 2] {
        let r = self.rates[qubit];
        [[1.0 - r.p10, r.p01], [r.p10, 1.0 - r.p01]]
    }

    /// Inverse confusion matrix; columns still sum to one.
    pub fn inverse(&self, qubit: usize) -> [[f64; 2]; 2] {
        let r = self.rates[qubit];
        let det = 1.0 - r.p01 - r.p10;
        [
            [(1.0 - r.p01) / det, -r.p01 / det],
            [-r.p10 / det, (1.0 - r.p10) / det],
        ]
    }

    /// Determinant of one qubit's confusion matrix.
    pub fn det(&self, qubit: usize) -> f64 {
        1.0 - self.rates[qubit].p01 - self.rates[qubit].p10
    }

    /// `qubit,p01,p10` CSV with a header row; floats in shortest
    /// round-trip form.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("qubit,p01,p10\n");
        for (q, r) in self.rates.iter().enumerate() {
            out.push_str(&format!("{q},{},{}\n", r.p01, r.p10));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<ConfusionModel> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == "qubit,p01,p10" => {}
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    reason: "expected header `qubit,p01,p10`".into(),
                })
            }
        }
        let mut rows: Vec<(usize, ReadoutRates)> = Vec::new();
        for (idx, raw) in lines {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            let parse_err = |reason: String| Error::Parse {
                line: idx + 1,
                reason,
            };
            if fields.len() != 3 {
                return Err(parse_err(format!("expected 3 fields, got {}", fields.len())));
            }
            let q: usize = fields[0]
                .trim()
                .parse()
                .map_err(|_| parse_err(format!("bad qubit index `{}`", fields[0])))?;
            let p01: f64 = fields[1]
                .trim()
                .parse()
                .map_err(|_| parse_err(format!("bad p01 `{}`", fields[1])))?;
            let p10: f64 = fields[2]
                .trim()
                .parse()
                .map_err(|_| parse_err(format!("bad p10 `{}`", fields[2])))?;
            rows.push((q, ReadoutRates::new(p01, p10)));
        }
        rows.sort_by_key(|&(q, _)| q);
        for (want, row) in rows.iter().enumerate() {
            if row.0 != want {
                return Err(Error::Readout(format!(
                    "qubit indices must cover 0..n exactly, missing {want}"
                )));
            }
        }
        ConfusionModel::new(rows.into_iter().map(|(_, r)| r).collect())
    }
}

/// Estimates per-qubit flip rates by preparing `|0...0>` and `|1...1>`
/// (via `X` on every qubit, gate-noiseless) and counting flipped bits
/// through the noise model's readout channel. Deterministic in `seed`.
pub fn estimate_confusion(
    n_qubits: usize,
    noise: &NoiseModel,
    shots_per_circuit: u64,
    seed: u64,
) -> Result<ConfusionModel> {
    if shots_per_circuit < 1 {
        return Err(Error::InvalidConfig(
            "calibration needs at least one shot per circuit".into(),
        ));
    }
    noise.validate(n_qubits)?;
    let obs = PauliString::z_all(n_qubits);

    let zeros = DensityMatrix::ground(n_qubits)?;
    let counts0 = sample_counts(
        &zeros,
        &obs,
        shots_per_circuit,
        &noise.readout,
        seeds::derive_seed(seed, &[0]),
    )?;

    let mut ones_circuit = Circuit::new(n_qubits, "readout-cal-ones");
    for q in 0..n_qubits {
        ones_circuit.push(Gate::x(q));
    }
    // Calibration circuits are treated as ideal apart from readout: the
    // state preparation X gates carry no gate noise here.
    let mut ones = DensityMatrix::ground(n_qubits)?;
    for g in &ones_circuit.gates {
        ones.apply_gate(g);
    }
    let counts1 = sample_counts(
        &ones,
        &obs,
        shots_per_circuit,
        &noise.readout,
        seeds::derive_seed(seed, &[1]),
    )?;

    let mut rates = Vec::with_capacity(n_qubits);
    for q in 0..n_qubits {
        let bit = 1u64 << (n_qubits - 1 - q);
        let flipped0: u64 = counts0
            .iter()
            .filter(|&(idx, _)| idx & bit != 0)
            .map(|(_, c)| c)
            .sum();
        let flipped1: u64 = counts1
            .iter()
            .filter(|&(idx, _)| idx & bit == 0)
            .map(|(_, c)| c)
            .sum();
        rates.push(ReadoutRates::new(
            flipped1 as f64 / shots_per_circuit as f64,
            flipped0 as f64 / shots_per_circuit as f64,
        ));
    }
    ConfusionModel::new(rates)
}

/// A quasi-probability distribution over bitstrings: the image of a counts
/// histogram under the inverse confusion channel. Entries may be negative;
/// they sum to one within 1e-9.
#[derive(Debug, Clone, PartialEq)]
pub struct QuasiDistribution {
    n_qubits: usize,
    shots: u64,
    weights: BTreeMap<u64, f64>,
}

impl QuasiDistribution {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Shots behind the original histogram; carried for error propagation.
    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn weight(&self, index: u64) -> f64 {
        self.weights.get(&index).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.weights.iter().map(|(&k, &v)| (k, v))
    }

    pub fn min_weight(&self) -> f64 {
        self.weights.values().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Applies the tensored forward confusion channel to a probability vector
/// over basis indices (qubit 0 = most significant bit). This is the exact
/// counterpart of what readout flips do to samples; oracle tests and the
/// exact-simulation path use it.
pub fn apply_confusion_channel(probs: &[f64], model: &ConfusionModel) -> Result<Vec<f64>> {
    transform_axes(probs, model, false)
}

fn transform_axes(probs: &[f64], model: &ConfusionModel, invert: bool) -> Result<Vec<f64>> {
    let n = model.n_qubits();
    let dim = 1usize << n;
    if probs.len() != dim {
        return Err(Error::Readout(format!(
            "distribution has {} entries, model expects {dim}",
            probs.len()
        )));
    }
    let mut v = probs.to_vec();
    for q in 0..n {
        let m = if invert { model.inverse(q) } else { model.matrix(q) };
        let bit = 1usize << (n - 1 - q);
        for i in 0..dim {
            if i & bit != 0 {
                continue;
            }
            let a = v[i];
            let b = v[i | bit];
            v[i] = m[0][0] * a + m[0][1] * b;
            v[i | bit] = m[1][0] * a + m[1][1] * b;
        }
    }
    Ok(v)
}

/// Inverts the confusion channel on a counts histogram, qubit by qubit.
pub fn correct_counts(counts: &Counts, model: &ConfusionModel) -> Result<QuasiDistribution> {
    let n = counts.n_qubits();
    if model.n_qubits() != n {
        return Err(Error::Readout(format!(
            "confusion model covers {} qubits, counts have {n}",
            model.n_qubits()
        )));
    }
    let dim = 1usize << n;
    let mut probs = vec![0.0; dim];
    let shots = counts.shots();
    for (idx, c) in counts.iter() {
        probs[idx as usize] = c as f64 / shots as f64;
    }
    let corrected = transform_axes(&probs, model, true)?;
    let total: f64 = corrected.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Numerical(format!(
            "corrected distribution sums to {total}"
        )));
    }
    let weights: BTreeMap<u64, f64> = corrected
        .into_iter()
        .enumerate()
        .filter(|&(_, w)| w != 0.0)
        .map(|(i, w)| (i as u64, w))
        .collect();
    Ok(QuasiDistribution {
        n_qubits: n,
        shots,
        weights,
    })
}

/// Expectation of a Z-diagonal observable under a corrected distribution.
/// The standard error is the binomial shot error amplified by
/// `prod 1/det(A_q)` over the observable's support, the price of the
/// inversion. Requires the observable to be diagonal in the measured basis.
pub fn corrected_expectation(
    quasi: &QuasiDistribution,
    observable: &PauliString,
    model: &ConfusionModel,
) -> Result<(f64, f64)> {
    let n = quasi.n_qubits();
    if observable.n_qubits() != n || model.n_qubits() != n {
        return Err(Error::Readout(
            "observable, distribution, and model must share the register".into(),
        ));
    }
    if quasi.shots() < 2 {
        return Err(Error::Numerical(
            "need at least 2 shots for a standard error".into(),
        ));
    }
    let support = observable.support();
    let mask: u64 = support.iter().map(|&q| 1u64 << (n - 1 - q)).sum();
    let mut mean = 0.0;
    for (idx, w) in quasi.iter() {
        if (idx & mask).count_ones().is_multiple_of(2) {
            mean += w;
        } else {
            mean -= w;
        }
    }
    mean *= observable.sign();
    let amplification: f64 = support.iter().map(|&q| 1.0 / model.det(q).abs()).product();
    // The shot noise lives in the raw counts, so the binomial variance must
    // use the raw parity mean (forward-mapping the quasi-distribution
    // recovers the empirical distribution exactly), then get amplified by
    // the inversion. Using the corrected mean instead would report a
    // near-zero error bar whenever the corrected value sits near +/-1.
    let dim = 1usize << n;
    let mut quasi_dense = vec![0.0; dim];
    for (idx, w) in quasi.iter() {
        quasi_dense[idx as usize] = w;
    }
    let raw = apply_confusion_channel(&quasi_dense, model)?;
    let mut raw_mean = 0.0;
    for (idx, p) in raw.iter().enumerate() {
        if (idx as u64 & mask).count_ones().is_multiple_of(2) {
            raw_mean += p;
        } else {
            raw_mean -= p;
        }
    }
    let stderr =
        amplification * ((1.0 - raw_mean * raw_mean).max(0.0) / quasi.shots() as f64).sqrt();
    Ok((mean, stderr))
}
