//! Exact density-matrix simulation with a small noise model.
//!
//! States live in [`DensityMatrix`], which keeps either a dense `2^n x 2^n`
//! matrix or, while the state remains a classical mixture, just its diagonal.
//! Circuits built from `X`, `CZ`, `CNOT`, `PHASE`, and Pauli frames never
//! leave the diagonal representation, which is what makes the ten-qubit
//! charge-conservation benchmark cheap; a general `U3` densifies on demand.
//!
//! Noise is attached per gate by [`simulate`]: depolarizing on the gate's
//! qubits (separate one- and two-qubit rates, with per-pair overrides) and a
//! coherent `exp(-i eps/2 Z@Z)` after every two-qubit gate. Twirl-frame
//! gates are ideal. Readout error is not part of state evolution; it enters
//! when sampling ([`sample_counts`]) or as an explicit confusion channel in
//! the readout module.

mod density;
mod sampling;

pub use density::DensityMatrix;
pub use sampling::{expectation_from_counts, measurement_probs, sample_counts, Counts};

use serde::{Deserialize, Serialize};

use crate::circuits::{Circuit, PauliString};
use crate::error::{Error, Result};

/// Readout flip probabilities for one qubit: `p01` is the chance a true 1
/// reads as 0, `p10` the chance a true 0 reads as 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadoutRates {
    pub p01: f64,
    pub p10: f64,
}

impl ReadoutRates {
    pub fn new(p01: f64, p10: f64) -> ReadoutRates {
        ReadoutRates { p01, p10 }
    }
}

/// Gate and readout noise attached to a circuit during simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Depolarizing probability after each two-qubit gate.
    pub depol_2q: f64,
    /// Per-pair overrides of `depol_2q`, keyed by unordered qubit pair.
    pub depol_2q_overrides: Vec<(usize, usize, f64)>,
    /// Depolarizing probability after each single-qubit gate.
    pub depol_1q: f64,
    /// Angle of the coherent `exp(-i eps/2 Z@Z)` error after each two-qubit
    /// gate.
    pub coherent_epsilon: f64,
    /// Per-qubit readout flip rates; empty means ideal readout. When
    /// non-empty the length must match the measured register.
    pub readout: Vec<ReadoutRates>,
}

impl NoiseModel {
    pub fn noiseless() -> NoiseModel {
        NoiseModel {
            depol_2q: 0.0,
            depol_2q_overrides: Vec::new(),
            depol_1q: 0.0,
            coherent_epsilon: 0.0,
            readout: Vec::new(),
        }
    }

    pub fn with_depol_2q(mut self, p: f64) -> NoiseModel {
        self.depol_2q = p;
        self
    }

    pub fn with_depol_1q(mut self, p: f64) -> NoiseModel {
        self.depol_1q = p;
        self
    }

    pub fn with_pair_override(mut self, a: usize, b: usize, p: f64) -> NoiseModel {
        self.depol_2q_overrides.push((a, b, p));
        self
    }

    pub fn with_coherent_epsilon(mut self, eps: f64) -> NoiseModel {
        self.coherent_epsilon = eps;
        self
    }

    pub fn with_uniform_readout(mut self, n_qubits: usize, p01: f64, p10: f64) -> NoiseModel {
        self.readout = vec![ReadoutRates::new(p01, p10); n_qubits];
        self
    }

    /// Depolarizing rate for a specific pair, respecting overrides in either
    /// qubit order.
    pub fn depol_rate_for_pair(&self, a: usize, b: usize) -> f64 {
        let key = (a.min(b), a.max(b));
        for &(x, y, p) in &self.depol_2q_overrides {
            if (x.min(y), x.max(y)) == key {
                return p;
            }
        }
        self.depol_2q
    }

    pub fn has_readout_error(&self) -> bool {
        self.readout.iter().any(|r| r.p01 != 0.0 || r.p10 != 0.0)
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        let prob = |name: &str, p: f64| -> Result<()> {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidNoise(format!("{name} = {p} outside [0, 1]")));
            }
            Ok(())
        };
        prob("depol_2q", self.depol_2q)?;
        prob("depol_1q", self.depol_1q)?;
        for &(a, b, p) in &self.depol_2q_overrides {
            prob(&format!("depol override ({a},{b})"), p)?;
            if a == b || a >= n_qubits || b >= n_qubits {
                return Err(Error::InvalidNoise(format!(
                    "depol override pair ({a},{b}) invalid for {n_qubits} qubits"
                )));
            }
        }
        if !self.coherent_epsilon.is_finite() {
            return Err(Error::InvalidNoise("coherent epsilon not finite".into()));
        }
        if !self.readout.is_empty() && self.readout.len() != n_qubits {
            return Err(Error::InvalidNoise(format!(
                "readout rates for {} qubits but the register has {n_qubits}",
                self.readout.len()
            )));
        }
        for (q, r) in self.readout.iter().enumerate() {
            prob(&format!("p01[{q}]"), r.p01)?;
            prob(&format!("p10[{q}]"), r.p10)?;
            if r.p01 + r.p10 > 1.0 {
                return Err(Error::InvalidNoise(format!(
                    "qubit {q}: p01 + p10 = {} exceeds 1",
                    r.p01 + r.p10
                )));
            }
        }
        Ok(())
    }
}

/// Runs a circuit from `|0...0>` under the noise model and returns the final
/// state. Gate order: unitary, then depolarizing on the gate's qubits, then
/// the coherent ZZ error for two-qubit gates. Twirl-frame gates apply only
/// their unitary.
pub fn simulate(circuit: &Circuit, noise: &NoiseModel) -> Result<DensityMatrix> {
    crate::circuits::validate_native(circuit)?;
    noise.validate(circuit.n_qubits)?;
    let mut rho = DensityMatrix::ground(circuit.n_qubits)?;
    for gate in &circuit.gates {
        rho.apply_gate(gate);
        if gate.is_twirl_frame {
            continue;
        }
        if gate.arity() == 2 {
            let (a, b) = (gate.qubits[0], gate.qubits[1]);
            let p = noise.depol_rate_for_pair(a, b);
            if p > 0.0 {
                rho.apply_depolarizing(&[a, b], p);
            }
            if noise.coherent_epsilon != 0.0 {
                rho.apply_coherent_zz(a, b, noise.coherent_epsilon);
            }
        } else if noise.depol_1q > 0.0 {
            rho.apply_depolarizing(&[gate.qubits[0]], noise.depol_1q);
        }
    }
    let drift = (rho.trace() - 1.0).abs();
    if drift > 1e-8 {
        return Err(Error::Numerical(format!(
            "trace drifted by {drift:.3e} during simulation"
        )));
    }
    Ok(rho)
}

/// Expectation value `tr(rho P)` of a signed Pauli observable. The imaginary
/// residual must stay below 1e-10 and is discarded.
pub fn exact_expectation(rho: &DensityMatrix, observable: &PauliString) -> Result<f64> {
    rho.expectation(observable)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::{build_spin_chain_circuit, Gate, SpinChainParams};
    use approx::assert_abs_diff_eq;

    #[test]
    fn noise_model_validation() {
        let n = NoiseModel::noiseless();
        assert!(n.validate(4).is_ok());
        assert!(NoiseModel::noiseless().with_depol_2q(1.5).validate(2).is_err());
        assert!(NoiseModel::noiseless()
            .with_uniform_readout(2, 0.6, 0.6)
            .validate(2)
            .is_err());
        assert!(NoiseModel::noiseless()
            .with_uniform_readout(3, 0.01, 0.01)
            .validate(2)
            .is_err());
        assert!(NoiseModel::noiseless()
            .with_pair_override(0, 0, 0.1)
            .validate(2)
            .is_err());
    }

    #[test]
    fn pair_override_lookup_ignores_order() {
        let n = NoiseModel::noiseless()
            .with_depol_2q(0.01)
            .with_pair_override(2, 1, 0.05);
        assert_eq!(n.depol_rate_for_pair(1, 2), 0.05);
        assert_eq!(n.depol_rate_for_pair(2, 1), 0.05);
        assert_eq!(n.depol_rate_for_pair(0, 1), 0.01);
    }

    #[test]
    fn simulate_noiseless_spin_chain_initial_state() {
        // Zero steps leaves the staggered |010101> product state.
        let c = build_spin_chain_circuit(&SpinChainParams {
            n_qubits: 6,
            steps: 0,
            theta: [0.0; 3],
            disorder_seed: 0,
        })
        .unwrap();
        let rho = simulate(&c, &NoiseModel::noiseless()).unwrap();
        for q in 0..6 {
            let want = if q % 2 == 1 { -1.0 } else { 1.0 };
            let z = exact_expectation(&rho, &crate::circuits::PauliString::single_z(6, q)).unwrap();
            assert_abs_diff_eq!(z, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn twirl_frames_carry_no_noise() {
        // X as a frame vs X as a plain gate under heavy 1q depolarizing.
        let noise = NoiseModel::noiseless().with_depol_1q(0.3);
        let mut plain = Circuit::new(1, "plain");
        plain.push(Gate::x(0));
        let mut framed = Circuit::new(1, "framed");
        framed.push(Gate::x(0).with_twirl_frame());

        let z = PauliString::single_z(1, 0);
        let zp = exact_expectation(&simulate(&plain, &noise).unwrap(), &z).unwrap();
        let zf = exact_expectation(&simulate(&framed, &noise).unwrap(), &z).unwrap();
        assert_abs_diff_eq!(zf, -1.0, epsilon = 1e-12);
        assert!(zp > -1.0 + 0.1);
    }
}
