//! Unitary gate folding: noise amplification by replacing gates `G` with
//! `G (G^dag G)^c`, which is the identity in the noiseless limit but runs
//! the gate's noise channel `1 + 2c` times.
//!
//! A fold is described by a replayable [`FoldingPlan`]. Planning rounds the
//! requested noise factor to what an integer number of folds can realize:
//! with `d` foldable gates, `s_total = round(d (lambda - 1) / 2)` extra
//! folds (half away from zero) spread as evenly as possible, giving the
//! effective factor `lambda_eff = 1 + 2 s_total / d`. Fractional parts are
//! assigned to a seeded uniformly random gate subset under the local
//! strategy, and to the trailing gates under the global strategy.

use serde::{Deserialize, Serialize};

use crate::circuits::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::seeds;

/// Which gates count as foldable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FoldScope {
    /// Only two-qubit gates fold; single-qubit gates pass through. This is
    /// the right scope when two-qubit noise dominates, and keeps
    /// `lambda_eff` tied to the two-qubit gate count.
    TwoQubitOnly,
    /// Every gate folds (twirl frames still excluded).
    AllGates,
}

/// How folds are arranged in the circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FoldStrategy {
    /// Per-gate folding in place: `G -> G (G^dag G)^c` at each gate's own
    /// position. Fractional folds go to a random gate subset.
    Local,
    /// Whole-circuit folding: `C -> C (C^dag C)^k`, with the fractional part
    /// folded as a trailing sub-sequence of the last foldable gates.
    Global,
}

/// A concrete, replayable folding decision for one circuit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldingPlan {
    pub strategy: FoldStrategy,
    pub scope: FoldScope,
    /// The requested noise factor.
    pub lambda_target: f64,
    /// The factor the integer fold counts actually realize.
    pub lambda_eff: f64,
    /// Total number of `G^dag G` insertions.
    pub s_total: usize,
    /// `(gate index, fold count)` for every foldable gate, in circuit
    /// order. Counts take at most two adjacent values `k` and `k + 1` and
    /// sum to `s_total`.
    pub per_gate_folds: Vec<(usize, usize)>,
    /// Gate count of the circuit the plan was built for.
    pub circuit_gate_count: usize,
    /// Fingerprint of that circuit; replay against anything else fails.
    pub circuit_hash: u64,
    /// Seed that chose the fractional-fold subset.
    pub seed: u64,
}

fn foldable(gate: &Gate, scope: FoldScope) -> bool {
    !gate.is_twirl_frame
        && match scope {
            FoldScope::TwoQubitOnly => gate.arity() == 2,
            FoldScope::AllGates => true,
        }
}

/// FNV-1a over the canonical text form; stable across runs and platforms.
fn circuit_hash(circuit: &Circuit) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in circuit.to_text().bytes() {
        h ^= byte as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Builds a folding plan realizing `lambda` as closely as integer folds
/// allow. `lambda = 1` always succeeds (no folds); `lambda > 1` needs at
/// least one foldable gate.
pub fn plan_fold(
    circuit: &Circuit,
    lambda: f64,
    strategy: FoldStrategy,
    scope: FoldScope,
    seed: u64,
) -> Result<FoldingPlan> {
    if !lambda.is_finite() || lambda < 1.0 {
        return Err(Error::Folding(format!(
            "noise factor must be a finite value >= 1, got {lambda}"
        )));
    }
    let foldable_idx: Vec<usize> = circuit
        .gates
        .iter()
        .enumerate()
        .filter(|(_, g)| foldable(g, scope))
        .map(|(i, _)| i)
        .collect();
    let d = foldable_idx.len();

    if d == 0 {
        if lambda == 1.0 {
            return Ok(FoldingPlan {
                strategy,
                scope,
                lambda_target: lambda,
                lambda_eff: 1.0,
                s_total: 0,
                per_gate_folds: Vec::new(),
                circuit_gate_count: circuit.gates.len(),
                circuit_hash: circuit_hash(circuit),
                seed,
            });
        }
        return Err(Error::Folding(format!(
            "cannot amplify to lambda = {lambda}: no foldable gates"
        )));
    }

    // Round half away from zero; f64::round does exactly that.
    let s_total = (d as f64 * (lambda - 1.0) / 2.0).round() as usize;
    let k = s_total / d;
    let m = s_total % d;

    let extra: Vec<usize> = match strategy {
        FoldStrategy::Local => {
            // Uniform m-subset by partial Fisher-Yates.
            let mut order: Vec<usize> = (0..d).collect();
            let mut rng = seeds::rng_from(seed);
            for i in 0..m {
                let j = rand::Rng::random_range(&mut rng, i..d);
                order.swap(i, j);
            }
            let mut chosen = order[..m].to_vec();
            chosen.sort_unstable();
            chosen
        }
        // Global folding closes with a partial fold of the circuit tail, so
        // the extra folds sit on the last m foldable gates.
        FoldStrategy::Global => (d - m..d).collect(),
    };

    let mut per_gate_folds = Vec::with_capacity(d);
    let mut extra_iter = extra.iter().peekable();
    for (pos, &gate_idx) in foldable_idx.iter().enumerate() {
        let mut c = k;
        if extra_iter.peek() == Some(&&pos) {
            c += 1;
            extra_iter.next();
        }
        per_gate_folds.push((gate_idx, c));
    }

    Ok(FoldingPlan {
        strategy,
        scope,
        lambda_target: lambda,
        lambda_eff: 1.0 + 2.0 * s_total as f64 / d as f64,
        s_total,
        per_gate_folds,
        circuit_gate_count: circuit.gates.len(),
        circuit_hash: circuit_hash(circuit),
        seed,
    })
}

/// Applies a plan to the circuit it was built for, producing the folded
/// circuit. The folded circuit is noiseless-equivalent to the original and
/// runs each foldable gate `1 + 2c` times its fold count.
pub fn apply_fold(circuit: &Circuit, plan: &FoldingPlan) -> Result<Circuit> {
    if plan.circuit_gate_count != circuit.gates.len()
        || plan.circuit_hash != circuit_hash(circuit)
    {
        return Err(Error::Folding(
            "plan was built for a different circuit".into(),
        ));
    }
    let total: usize = plan.per_gate_folds.iter().map(|&(_, c)| c).sum();
    if total != plan.s_total {
        return Err(Error::Folding(format!(
            "plan is inconsistent: fold counts sum to {total}, s_total is {}",
            plan.s_total
        )));
    }

    let mut folded = Circuit::new(
        circuit.n_qubits,
        format!("{}|folded(x{:.4})", circuit.label, plan.lambda_eff),
    );
    match plan.strategy {
        FoldStrategy::Local => {
            let mut counts = plan.per_gate_folds.iter().peekable();
            for (idx, gate) in circuit.gates.iter().enumerate() {
                folded.push(gate.clone());
                if counts.peek().map(|&&(i, _)| i) == Some(idx) {
                    let (_, c) = *counts.next().unwrap();
                    for _ in 0..c {
                        folded.push(gate.dagger());
                        folded.push(gate.clone());
                    }
                }
            }
        }
        FoldStrategy::Global => {
            let k = plan.s_total / plan.per_gate_folds.len().max(1);
            for gate in &circuit.gates {
                folded.push(gate.clone());
            }
            let dag = circuit.dagger();
            for _ in 0..k {
                for gate in &dag.gates {
                    folded.push(gate.clone());
                }
                for gate in &circuit.gates {
                    folded.push(gate.clone());
                }
            }
            // Partial fold of the trailing sub-sequence holding the extra
            // folds: append (suffix)^dag then suffix, which cancels as a
            // block.
            let suffix: Vec<&Gate> = plan
                .per_gate_folds
                .iter()
                .filter(|&&(_, c)| c == k + 1)
                .map(|&(i, _)| &circuit.gates[i])
                .collect();
            for gate in suffix.iter().rev() {
                folded.push(gate.dagger());
            }
            for gate in &suffix {
                folded.push((*gate).clone());
            }
        }
    }
    Ok(folded)
}

/// Plans `num_samples` independent folds of the same circuit at the same
/// factor, with seeds derived from `base_seed`. Under the local strategy the
/// samples differ in which gates carry the fractional folds; averaging over
/// them is what the partial-fold studies quantify.
pub fn sample_fold_ensemble(
    circuit: &Circuit,
    lambda: f64,
    strategy: FoldStrategy,
    scope: FoldScope,
    num_samples: usize,
    base_seed: u64,
) -> Result<Vec<FoldingPlan>> {
    if num_samples == 0 {
        return Err(Error::InvalidConfig("num_samples must be positive".into()));
    }
    (0..num_samples)
        .map(|i| {
            plan_fold(
                circuit,
                lambda,
                strategy,
                scope,
                seeds::derive_seed(base_seed, &[i as u64]),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::{build_brickwork_circuit, build_spin_chain_circuit, GateKind, SpinChainParams};
    use approx::assert_abs_diff_eq;

    fn chain(steps: usize) -> Circuit {
        build_spin_chain_circuit(&SpinChainParams {
            n_qubits: 6,
            steps,
            theta: [0.1, 0.2, -0.3],
            disorder_seed: 3,
        })
        .unwrap()
    }

    #[test]
    fn rounding_and_effective_lambda() {
        let c = build_brickwork_circuit(6, 30, GateKind::Cz).unwrap();
        let p = plan_fold(&c, 2.0, FoldStrategy::Local, FoldScope::TwoQubitOnly, 0).unwrap();
        assert_eq!(p.s_total, 15);
        assert_abs_diff_eq!(p.lambda_eff, 2.0);
        let ones = p.per_gate_folds.iter().filter(|&&(_, c)| c == 1).count();
        assert_eq!(ones, 15);

        // d = 30, lambda = 1.1: s = round(1.5) = 2, lambda_eff = 1 + 4/30.
        let p = plan_fold(&c, 1.1, FoldStrategy::Local, FoldScope::TwoQubitOnly, 0).unwrap();
        assert_eq!(p.s_total, 2);
        assert_abs_diff_eq!(p.lambda_eff, 1.0 + 4.0 / 30.0, epsilon = 1e-15);

        // Odd factors hit exactly: lambda = 3 folds every gate once.
        let p = plan_fold(&c, 3.0, FoldStrategy::Local, FoldScope::TwoQubitOnly, 0).unwrap();
        assert_eq!(p.s_total, 30);
        assert!(p.per_gate_folds.iter().all(|&(_, c)| c == 1));
        assert_abs_diff_eq!(p.lambda_eff, 3.0);

        let p = plan_fold(&c, 5.0, FoldStrategy::Local, FoldScope::TwoQubitOnly, 0).unwrap();
        assert!(p.per_gate_folds.iter().all(|&(_, c)| c == 2));
        assert_abs_diff_eq!(p.lambda_eff, 5.0);

        let p = plan_fold(&c, 1.0, FoldStrategy::Local, FoldScope::TwoQubitOnly, 0).unwrap();
        assert_eq!(p.s_total, 0);
        let folded = apply_fold(&c, &p).unwrap();
        assert_eq!(folded.gates, c.gates);
    }

    #[test]
    fn fold_counts_are_balanced() {
        let c = chain(3); // 15 two-qubit gates
        for lambda in [1.4, 2.2, 3.7, 6.0] {
            let p = plan_fold(&c, lambda, FoldStrategy::Local, FoldScope::TwoQubitOnly, 9).unwrap();
            let lo = p.per_gate_folds.iter().map(|&(_, c)| c).min().unwrap();
            let hi = p.per_gate_folds.iter().map(|&(_, c)| c).max().unwrap();
            assert!(hi - lo <= 1, "counts unbalanced at lambda {lambda}");
            let sum: usize = p.per_gate_folds.iter().map(|&(_, c)| c).sum();
            assert_eq!(sum, p.s_total);
        }
    }

    #[test]
    fn folded_gate_count_matches_lambda_eff() {
        let c = chain(4);
        let d = c.two_qubit_gate_count();
        for strategy in [FoldStrategy::Local, FoldStrategy::Global] {
            let p = plan_fold(&c, 2.3, strategy, FoldScope::TwoQubitOnly, 5).unwrap();
            let folded = apply_fold(&c, &p).unwrap();
            assert_eq!(folded.two_qubit_gate_count(), d + 2 * p.s_total);
            assert_abs_diff_eq!(
                folded.two_qubit_gate_count() as f64 / d as f64,
                p.lambda_eff,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn all_gates_scope_folds_single_qubit_gates() {
        let c = chain(1); // 3 X + 5 CZ + 10 U3 + 6 PHASE = 24 gates
        let p = plan_fold(&c, 3.0, FoldStrategy::Local, FoldScope::AllGates, 1).unwrap();
        assert_eq!(p.per_gate_folds.len(), 24);
        let folded = apply_fold(&c, &p).unwrap();
        assert_eq!(folded.gates.len(), 3 * 24);
    }

    #[test]
    fn plan_refuses_mismatched_circuit() {
        let a = chain(2);
        let b = chain(3);
        let p = plan_fold(&a, 3.0, FoldStrategy::Local, FoldScope::TwoQubitOnly, 0).unwrap();
        assert!(apply_fold(&b, &p).is_err());
        // Same gate count, different angles: the hash catches it.
        let mut c = a.clone();
        let idx = c.gates.iter().position(|g| !g.params.is_empty()).unwrap();
        c.gates[idx].params[0] += 1e-9;
        assert!(apply_fold(&c, &p).is_err());
    }

    #[test]
    fn lambda_below_one_and_unfoldable_circuits_error() {
        let c = chain(1);
        assert!(plan_fold(&c, 0.5, FoldStrategy::Local, FoldScope::TwoQubitOnly, 0).is_err());
        assert!(plan_fold(&c, f64::NAN, FoldStrategy::Local, FoldScope::TwoQubitOnly, 0).is_err());

        let empty = Circuit::new(2, "empty");
        assert!(plan_fold(&empty, 3.0, FoldStrategy::Local, FoldScope::TwoQubitOnly, 0).is_err());
        assert!(plan_fold(&empty, 1.0, FoldStrategy::Local, FoldScope::TwoQubitOnly, 0).is_ok());
    }

    #[test]
    fn global_fold_layout() {
        // 5 foldable gates, lambda = 2.2: s = 3, k = 0, m = 3 trailing.
        let c = chain(1);
        let p = plan_fold(&c, 2.2, FoldStrategy::Global, FoldScope::TwoQubitOnly, 0).unwrap();
        assert_eq!(p.s_total, 3);
        let extras: Vec<usize> = p
            .per_gate_folds
            .iter()
            .filter(|&&(_, c)| c == 1)
            .map(|&(i, _)| i)
            .collect();
        // The last three CZ gates of the step.
        let cz_positions: Vec<usize> = c
            .gates
            .iter()
            .enumerate()
            .filter(|(_, g)| g.arity() == 2)
            .map(|(i, _)| i)
            .collect();
        assert_eq!(extras, cz_positions[2..].to_vec());

        // lambda = 3.8 on 5 gates: s = 7 = 1*5 + 2, so one full circuit fold
        // plus a two-gate suffix fold.
        let p = plan_fold(&c, 3.8, FoldStrategy::Global, FoldScope::TwoQubitOnly, 0).unwrap();
        assert_eq!((p.s_total / 5, p.s_total % 5), (1, 2));
        let folded = apply_fold(&c, &p).unwrap();
        assert_eq!(folded.gates.len(), c.gates.len() * 3 + 2 * 2);
    }

    #[test]
    fn ensemble_seeds_differ_and_replay() {
        let c = chain(2);
        let plans =
            sample_fold_ensemble(&c, 1.2, FoldStrategy::Local, FoldScope::TwoQubitOnly, 5, 42)
                .unwrap();
        assert_eq!(plans.len(), 5);
        let distinct: std::collections::BTreeSet<Vec<(usize, usize)>> =
            plans.iter().map(|p| p.per_gate_folds.clone()).collect();
        assert!(distinct.len() > 1, "samples should vary the fold subset");
        for p in &plans {
            // Replay through JSON: the plan is self-describing.
            let json = serde_json::to_string(p).unwrap();
            let back: FoldingPlan = serde_json::from_str(&json).unwrap();
            assert_eq!(&back, p);
            assert_eq!(
                apply_fold(&c, &back).unwrap().gates,
                apply_fold(&c, p).unwrap().gates
            );
        }
    }
}
