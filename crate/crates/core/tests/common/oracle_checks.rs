//! The oracle check bodies, callable both as individual tests and as a
//! timed batch from the acceptance gate. Each function panics on failure.

#![allow(dead_code)]

use std::collections::BTreeMap;

use dzne_core::circuits::{Gate, GateKind, Pauli, PauliString};
use dzne_core::extrapolate::{fit_model, ModelKind, NoisePoint};
use dzne_core::folding::{apply_fold, plan_fold, FoldScope, FoldStrategy};
use dzne_core::readout::{apply_confusion_channel, correct_counts, ConfusionModel};
use dzne_core::seeds;
use dzne_core::sim::{simulate, Counts, NoiseModel, ReadoutRates};
use dzne_core::twirl::{conjugate_pauli, twirl_circuit};
use rand::Rng;

use super::*;

fn pidx(p: Pauli) -> usize {
    match p {
        Pauli::I => 0,
        Pauli::X => 1,
        Pauli::Y => 2,
        Pauli::Z => 3,
    }
}

pub fn check_folding_preserves_unitary(cases: u64) {
    let mut rng = seeds::rng_from(0xF01D);
    let strategies = [FoldStrategy::Local, FoldStrategy::Global];
    let scopes = [FoldScope::TwoQubitOnly, FoldScope::AllGates];
    for case in 0..cases {
        let n = rng.random_range(2..=4);
        let gates = rng.random_range(3..=12);
        let circuit = random_native_circuit(n, gates, &mut rng);
        let lambda = rng.random_range(1.0..4.0);
        let strategy = strategies[rng.random_range(0..2)];
        let scope = scopes[rng.random_range(0..2)];
        let foldable = circuit
            .gates
            .iter()
            .filter(|g| scope == FoldScope::AllGates || g.qubits.len() == 2)
            .count();
        let plan = plan_fold(&circuit, lambda, strategy, scope, case);
        if foldable == 0 {
            // Nothing to fold: a request above 1 must be refused, not
            // silently ignored.
            if lambda > 1.0 {
                assert!(plan.is_err(), "case {case}: unfoldable circuit accepted");
            }
            continue;
        }
        let plan = plan.unwrap();
        let folded = apply_fold(&circuit, &plan).unwrap();
        // Local folds insert G^dag G pairs per foldable gate; a global
        // whole-circuit fold must replay every gate (the circuit inverse
        // includes the unfoldable ones), plus the partial trailing fold.
        let expected = match strategy {
            FoldStrategy::Local => circuit.gates.len() + 2 * plan.s_total,
            FoldStrategy::Global => {
                let k = plan.s_total / foldable;
                let m = plan.s_total % foldable;
                circuit.gates.len() * (1 + 2 * k) + 2 * m
            }
        };
        assert_eq!(folded.gates.len(), expected, "case {case}: folded gate count");
        let folded_foldable = folded
            .gates
            .iter()
            .filter(|g| scope == FoldScope::AllGates || g.qubits.len() == 2)
            .count();
        assert_eq!(
            folded_foldable,
            foldable + 2 * plan.s_total,
            "case {case}: foldable-gate replay count must match s_total"
        );
        let err = max_abs_diff(&circuit_unitary(&folded), &circuit_unitary(&circuit));
        assert!(
            err < 1e-9,
            "case {case} ({strategy:?}, {scope:?}, lambda {lambda:.3}): unitary deviates by {err:e}"
        );
    }
}

pub fn check_twirling_preserves_unitary(cases: u64) {
    let mut rng = seeds::rng_from(0x7817);
    for case in 0..cases {
        let n = rng.random_range(2..=4);
        let gates = rng.random_range(2..=12);
        let circuit = random_twirlable_circuit(n, gates, &mut rng);
        let twirled = twirl_circuit(&circuit, case).unwrap();
        let u = circuit_unitary(&circuit);
        let t = circuit_unitary(&twirled);
        // The twirl may change the global phase (conjugation signs are
        // dropped); normalize on the largest entry before comparing.
        let (mut bi, mut bj, mut best) = (0, 0, 0.0f64);
        for (i, row) in u.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                if e.norm() > best {
                    best = e.norm();
                    bi = i;
                    bj = j;
                }
            }
        }
        let phase = t[bi][bj] / u[bi][bj];
        assert!(
            (phase.norm() - 1.0).abs() < 1e-9,
            "case {case}: phase factor is not unimodular"
        );
        let mut u_phased = u.clone();
        for row in &mut u_phased {
            for e in row {
                *e *= phase;
            }
        }
        let err = max_abs_diff(&t, &u_phased);
        assert!(err < 1e-9, "case {case}: twirled unitary deviates by {err:e}");
    }
}

pub fn check_conjugation_table() {
    // All 16 Pauli pairs through both supported gates: the claimed signed
    // pair must reproduce G (P1 @ P2) G^dag exactly, with matrices built
    // here from scratch.
    for kind in [GateKind::Cz, GateKind::Cnot] {
        let g = match kind {
            GateKind::Cz => gate_matrix(&Gate::cz(0, 1)),
            _ => gate_matrix(&Gate::cnot(0, 1)),
        };
        let gd = dagger(&g);
        for p1 in Pauli::ALL {
            for p2 in Pauli::ALL {
                let pin = matmul(
                    &embed(2, &[0], &pauli_matrix(pidx(p1))),
                    &embed(2, &[1], &pauli_matrix(pidx(p2))),
                );
                let direct = matmul(&g, &matmul(&pin, &gd));
                let claim = conjugate_pauli(kind, p1, p2).unwrap();
                let mut claimed = matmul(
                    &embed(2, &[0], &pauli_matrix(pidx(claim.first))),
                    &embed(2, &[1], &pauli_matrix(pidx(claim.second))),
                );
                for row in &mut claimed {
                    for e in row {
                        *e *= claim.sign as f64;
                    }
                }
                let err = max_abs_diff(&direct, &claimed);
                assert!(
                    err < 1e-12,
                    "{kind:?}: {p1:?}@{p2:?} -> claimed {:?}{:?} sign {} deviates by {err:e}",
                    claim.first,
                    claim.second,
                    claim.sign
                );
            }
        }
    }
}

pub fn check_readout_round_trip(cases: u64) {
    let mut rng = seeds::rng_from(0x2EAD);
    for case in 0..cases {
        let n = rng.random_range(1..=5usize);
        let rates: Vec<ReadoutRates> = (0..n)
            .map(|_| ReadoutRates::new(rng.random_range(0.0..0.2), rng.random_range(0.0..0.2)))
            .collect();
        let model = ConfusionModel::new(rates).unwrap();
        let dim = 1usize << n;

        // Per-qubit matrix times its inverse is the identity.
        for q in 0..n {
            let a = model.matrix(q);
            let inv = model.inverse(q);
            #[allow(clippy::needless_range_loop)] // matrix index arithmetic
            for i in 0..2 {
                for j in 0..2 {
                    let mut s = 0.0;
                    for k in 0..2 {
                        s += a[i][k] * inv[k][j];
                    }
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((s - expect).abs() < 1e-12, "case {case}: A * A^-1 != I");
                }
            }
        }

        // Counts -> quasi-distribution -> forward channel reproduces the
        // empirical frequencies exactly.
        let mut counts = BTreeMap::new();
        let outcomes = rng.random_range(1..=dim);
        for _ in 0..outcomes {
            let idx = rng.random_range(0..dim) as u64;
            *counts.entry(idx).or_insert(0u64) += rng.random_range(1..500u64);
        }
        let counts = Counts::new(n, counts).unwrap();
        let shots = counts.shots();
        let mut freqs = vec![0.0; dim];
        for (idx, c) in counts.iter() {
            freqs[idx as usize] = c as f64 / shots as f64;
        }
        let quasi = correct_counts(&counts, &model).unwrap();
        let mut quasi_dense = vec![0.0; dim];
        let mut total = 0.0;
        for (idx, w) in quasi.iter() {
            quasi_dense[idx as usize] = w;
            total += w;
        }
        assert!(
            (total - 1.0).abs() < 1e-9,
            "case {case}: quasi weights sum to {total}"
        );
        let back = apply_confusion_channel(&quasi_dense, &model).unwrap();
        for (i, (&b, &f)) in back.iter().zip(&freqs).enumerate() {
            assert!(
                (b - f).abs() < 1e-12,
                "case {case}: entry {i} round-trips {f} -> {b}"
            );
        }
    }
}

pub fn check_fitter_recovery(cases: u64) {
    let mut rng = seeds::rng_from(0xF177);
    let lambdas = [1.0, 2.0, 3.0, 4.0, 6.0];
    let exact = |ys: &[f64]| -> Vec<NoisePoint> {
        lambdas
            .iter()
            .zip(ys)
            .map(|(&l, &y)| NoisePoint::new(l, y, 0.0, 0).unwrap())
            .collect()
    };
    for case in 0..cases {
        // Linear.
        let a0 = rng.random_range(-0.8..0.8);
        let a1 = rng.random_range(-0.05..0.05);
        let ys: Vec<f64> = lambdas.iter().map(|&l| a0 + a1 * l).collect();
        let fit = fit_model(&exact(&ys), ModelKind::Linear).unwrap();
        assert!(
            (fit.zero_noise_value - a0).abs() < 1e-6,
            "case {case}: linear intercept {} vs planted {a0}",
            fit.zero_noise_value
        );
        assert!((fit.params[1] - a1).abs() < 1e-6);

        // Quadratic.
        let b0 = rng.random_range(-0.5..0.5);
        let b1 = rng.random_range(-0.04..0.04);
        let b2 = rng.random_range(-0.008..0.008);
        let ys: Vec<f64> = lambdas.iter().map(|&l| b0 + b1 * l + b2 * l * l).collect();
        let fit = fit_model(&exact(&ys), ModelKind::Poly { degree: 2 }).unwrap();
        assert!(
            (fit.zero_noise_value - b0).abs() < 1e-6,
            "case {case}: quadratic intercept {} vs planted {b0}",
            fit.zero_noise_value
        );

        // Exponential, free and fixed shift.
        let s = rng.random_range(-0.3..0.3);
        let a = rng.random_range(0.2..0.7) * if rng.random_range(0..2) == 0 { 1.0 } else { -1.0 };
        let scale = rng.random_range(0.4..4.0);
        let ys: Vec<f64> = lambdas.iter().map(|&l| s + a * (-l / scale).exp()).collect();
        for shift in [None, Some(s)] {
            let fit =
                fit_model(&exact(&ys), ModelKind::Exponential { fixed_shift: shift }).unwrap();
            assert!(
                (fit.zero_noise_value - (s + a)).abs() < 1e-6,
                "case {case} (shift {shift:?}): exponential value {} vs planted {}",
                fit.zero_noise_value,
                s + a
            );
            assert!(
                !fit.flags.degenerate_fit,
                "case {case} (shift {shift:?}): clean exponential flagged degenerate"
            );
        }
    }
}

pub fn check_channel_sanity(cases: u64) {
    let mut rng = seeds::rng_from(0xC4A7);
    for case in 0..cases {
        let n = rng.random_range(1..=3usize);
        let gates = rng.random_range(1..=10);
        let circuit = random_native_circuit(n, gates, &mut rng);
        let mut noise = NoiseModel::noiseless();
        if rng.random_range(0..2) == 0 {
            noise = noise.with_depol_1q(rng.random_range(0.0..0.3));
        }
        if rng.random_range(0..2) == 0 {
            noise = noise.with_depol_2q(rng.random_range(0.0..0.3));
        }
        if n >= 2 && rng.random_range(0..3) == 0 {
            noise = noise.with_pair_override(0, 1, rng.random_range(0.0..0.4));
        }
        if rng.random_range(0..2) == 0 {
            noise = noise.with_coherent_epsilon(rng.random_range(-0.5..0.5));
        }

        let rho = simulate(&circuit, &noise).unwrap();
        assert!(
            (rho.trace() - 1.0).abs() < 1e-9,
            "case {case}: trace {}",
            rho.trace()
        );
        assert!(
            rho.min_eigenvalue() > -1e-9,
            "case {case}: negative eigenvalue {}",
            rho.min_eigenvalue()
        );

        let dim = 1usize << n;
        let lib = rho.to_dense_vec();
        // Hermiticity, entry by entry.
        for i in 0..dim {
            for j in 0..dim {
                let d = (lib[i * dim + j] - lib[j * dim + i].conj()).norm();
                assert!(d < 1e-12, "case {case}: non-Hermitian entry ({i},{j})");
            }
        }
        // Full agreement with the operator-sum reference.
        let reference = ref_simulate(&circuit, &noise);
        let mut worst = 0.0f64;
        for i in 0..dim {
            for j in 0..dim {
                worst = worst.max((lib[i * dim + j] - reference[i][j]).norm());
            }
        }
        assert!(
            worst < 1e-9,
            "case {case}: density matrix deviates from reference by {worst:e}"
        );

        // Spot-check one Pauli expectation against the reference.
        let letters: Vec<Pauli> = (0..n).map(|_| Pauli::ALL[rng.random_range(0..4)]).collect();
        if letters.iter().any(|&p| p != Pauli::I) {
            let obs = PauliString::new(letters.clone(), false).unwrap();
            let lib_e = rho.expectation(&obs).unwrap();
            let ref_e = ref_expectation(
                &reference,
                &letters.iter().map(|&p| pidx(p)).collect::<Vec<_>>(),
            );
            assert!(ref_e.im.abs() < 1e-9);
            assert!(
                (lib_e - ref_e.re).abs() < 1e-9,
                "case {case}: expectation {lib_e} vs reference {}",
                ref_e.re
            );
        }
    }
}
