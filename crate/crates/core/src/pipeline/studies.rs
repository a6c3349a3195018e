//! Experiment harnesses: parameter sweeps that drive the mitigated
//! estimator over circuit families and noise grids, returning plain rows
//! ready for CSV serialization.
//!
//! Every harness derives all of its randomness from one master seed and
//! keys each cell's seeds by the cell coordinates, so results are
//! reproducible and independent of execution order.

use serde::{Deserialize, Serialize};

use crate::circuits::{
    build_brickwork_circuit, build_spin_chain_circuit, Circuit, GateKind, PauliString,
    SpinChainParams,
};
use crate::error::{Error, Result};
use crate::extrapolate::{
    fit_linear, fit_model, select_model, ChoiceLabel, ModelKind, NoisePoint,
    DEFAULT_NF_THRESHOLD, DEFAULT_PREFERENCE_THRESHOLD,
};
use crate::folding::{apply_fold, plan_fold, FoldScope, FoldStrategy};
use crate::pipeline::{run_mitigated_estimator, EstimatorJob, ShotBudget};
use crate::seeds;
use crate::sim::{expectation_from_counts, sample_counts, simulate, NoiseModel};

/// The weakly mixing chain angle used by the sweep circuits.
fn theta_mixing() -> [f64; 3] {
    [0.05 * std::f64::consts::PI, 0.0, 0.0]
}

fn ideal_value(circuit: &Circuit, obs: &PauliString) -> Result<f64> {
    simulate(circuit, &NoiseModel::noiseless())?.expectation(obs)
}

/// `count` log-spaced values from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2 && lo > 0.0 && hi > lo);
    (0..count)
        .map(|i| lo * (hi / lo).powf(i as f64 / (count - 1) as f64))
        .collect()
}

/// Zero-noise estimate for one model over one run's points. When folding
/// could not separate the noise factors (all points share one lambda_eff,
/// e.g. a gate-free circuit) there is nothing to extrapolate and every
/// model agrees on the pooled raw estimate.
fn model_value(points: &[NoisePoint], model: ModelKind) -> Result<f64> {
    let mut ls: Vec<f64> = points.iter().map(|p| p.lambda_eff).collect();
    ls.sort_by(f64::total_cmp);
    ls.dedup();
    if ls.len() < 2 {
        return Ok(points.iter().map(|p| p.mean).sum::<f64>() / points.len() as f64);
    }
    fit_model(points, model).map(|f| f.zero_noise_value)
}

fn sample_std(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
}

fn rmse(errors: &[f64]) -> f64 {
    (errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt()
}

// ---------------------------------------------------------------------------
// Calibration sweep: which extrapolation model should each (depth, error)
// cell use?
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSweepParams {
    pub n_qubits: usize,
    /// Two-qubit depths (even; the chain adds two entangling layers per
    /// step).
    pub depths: Vec<usize>,
    pub error_probs: Vec<f64>,
    pub noise_factors: Vec<f64>,
    pub shots: u64,
    pub repetitions: usize,
    pub seed: u64,
}

impl CalibrationSweepParams {
    /// The default desk-scale sweep: 6 qubits, two-qubit depths 0..=40,
    /// eight log-spaced error probabilities up to 0.04, 8000 shots per
    /// noise factor, five repetitions per cell.
    pub fn defaults(seed: u64) -> CalibrationSweepParams {
        CalibrationSweepParams {
            n_qubits: 6,
            depths: (0..=20).map(|s| 2 * s).collect(),
            error_probs: log_spaced(0.001, 0.04, 8),
            noise_factors: vec![1.0, 3.0, 5.0],
            shots: 8000,
            repetitions: 5,
            seed,
        }
    }
}

/// One cell of the calibration phase diagram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationCell {
    pub depth: usize,
    pub error_prob: f64,
    pub rmse_linear: f64,
    pub rmse_quadratic: f64,
    pub rmse_exponential: f64,
    pub label: ChoiceLabel,
}

/// Sweeps (depth, error probability) cells: each cell runs `repetitions`
/// freshly disordered chains, extrapolates with every model, scores each
/// model by its RMSE against the noiseless ideal across repetitions, and
/// labels the cell with the preferred model (or `NF` when even the best
/// model is off by more than the no-fit threshold).
pub fn run_calibration_sweep(p: &CalibrationSweepParams) -> Result<Vec<CalibrationCell>> {
    if p.repetitions == 0 {
        return Err(Error::InvalidConfig("repetitions must be >= 1".into()));
    }
    let models = [
        (ChoiceLabel::L, ModelKind::Linear),
        (ChoiceLabel::Q, ModelKind::Poly { degree: 2 }),
        (ChoiceLabel::E, ModelKind::Exponential { fixed_shift: None }),
    ];
    let obs = PauliString::z_all(p.n_qubits);
    let mut cells = Vec::with_capacity(p.depths.len() * p.error_probs.len());
    for (di, &depth) in p.depths.iter().enumerate() {
        if depth % 2 != 0 {
            return Err(Error::InvalidConfig(format!(
                "two-qubit depth {depth} is not reachable; the chain adds 2 per step"
            )));
        }
        for (ei, &error_prob) in p.error_probs.iter().enumerate() {
            let noise = NoiseModel::noiseless().with_depol_2q(error_prob);
            // errors[model][rep]
            let mut errors: Vec<Vec<f64>> = vec![Vec::new(); models.len()];
            let mut failed = [false; 3];
            for r in 0..p.repetitions {
                let circuit = build_spin_chain_circuit(&SpinChainParams {
                    n_qubits: p.n_qubits,
                    steps: depth / 2,
                    theta: theta_mixing(),
                    disorder_seed: seeds::derive_seed(
                        p.seed,
                        &[10, di as u64, ei as u64, r as u64],
                    ),
                })?;
                let ideal = ideal_value(&circuit, &obs)?;
                let job = EstimatorJob {
                    circuit,
                    observables: vec![obs.clone()],
                    noise_factors: p.noise_factors.clone(),
                    fold_strategy: FoldStrategy::Global,
                    fold_scope: FoldScope::TwoQubitOnly,
                    fold_samples: 1,
                    num_twirls: 0,
                    readout_mitigation: false,
                    readout_calibration_shots: 0,
                    shots: ShotBudget::PerFactor(p.shots),
                    models: vec![],
                    seed: seeds::derive_seed(p.seed, &[11, di as u64, ei as u64, r as u64]),
                };
                let result = run_mitigated_estimator(&job, &noise)?;
                let points = &result.observables[0].points;
                for (mi, &(_, model)) in models.iter().enumerate() {
                    match model_value(points, model) {
                        Ok(v) => errors[mi].push(v - ideal),
                        // A model that cannot even be fit on this cell's
                        // realized noise factors scores infinitely badly.
                        Err(_) => failed[mi] = true,
                    }
                }
            }
            let rmses: Vec<f64> = (0..models.len())
                .map(|mi| {
                    if failed[mi] || errors[mi].is_empty() {
                        f64::INFINITY
                    } else {
                        rmse(&errors[mi])
                    }
                })
                .collect();
            let best = rmses.iter().cloned().fold(f64::INFINITY, f64::min);
            let candidates: Vec<(ChoiceLabel, f64)> = models
                .iter()
                .zip(&rmses)
                .map(|(&(label, _), &r)| (label, r))
                .collect();
            let label = select_model(
                &candidates,
                DEFAULT_PREFERENCE_THRESHOLD,
                DEFAULT_NF_THRESHOLD,
                best,
            )?;
            cells.push(CalibrationCell {
                depth,
                error_prob,
                rmse_linear: rmses[0],
                rmse_quadratic: rmses[1],
                rmse_exponential: rmses[2],
                label,
            });
        }
    }
    Ok(cells)
}

pub fn calibration_csv(cells: &[CalibrationCell]) -> String {
    let mut out = String::from("depth,error_prob,rmse_L,rmse_Q,rmse_E,label\n");
    for c in cells {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            c.depth, c.error_prob, c.rmse_linear, c.rmse_quadratic, c.rmse_exponential, c.label
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// Partial-fold variance study: does averaging more random fold subsets
// tighten the zero-noise estimate?
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialFoldParams {
    pub n_qubits: usize,
    /// Two-qubit gate counts of the brickwork test circuits.
    pub gate_counts: Vec<usize>,
    /// Per-pair depolarizing probabilities are drawn uniformly from this
    /// range, fresh per repetition.
    pub error_lo: f64,
    pub error_hi: f64,
    pub noise_factors: Vec<f64>,
    /// Fold-sample counts to compare.
    pub sample_counts: Vec<usize>,
    pub repetitions: usize,
    pub shots: ShotBudget,
    pub seed: u64,
}

impl PartialFoldParams {
    pub fn defaults(seed: u64) -> PartialFoldParams {
        PartialFoldParams {
            n_qubits: 6,
            gate_counts: vec![15, 30],
            error_lo: 0.01,
            error_hi: 0.10,
            noise_factors: vec![1.0, 1.1],
            sample_counts: vec![1, 2, 5, 10],
            repetitions: 100,
            shots: ShotBudget::Exact,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialFoldRow {
    pub total_2q: usize,
    pub num_samples: usize,
    /// Ensemble mean of the linear zero-noise value across repetitions.
    pub mean: f64,
    /// Ensemble standard deviation across repetitions.
    pub std: f64,
}

/// Measures, per (gate count, fold-sample count), the ensemble spread of
/// the linear zero-noise estimate across repetitions. Each repetition
/// draws a fresh heterogeneous noise model (per-pair depolarizing
/// probabilities) shared by all fold-sample counts, so the comparison is
/// paired: the only difference along the sample axis is how many random
/// fold subsets are averaged.
pub fn run_partial_fold_variance_study(p: &PartialFoldParams) -> Result<Vec<PartialFoldRow>> {
    if p.repetitions < 2 {
        return Err(Error::InvalidConfig(
            "need at least 2 repetitions to measure a spread".into(),
        ));
    }
    if !(p.error_lo >= 0.0 && p.error_hi > p.error_lo) {
        return Err(Error::InvalidNoise(format!(
            "bad error range [{}, {}]",
            p.error_lo, p.error_hi
        )));
    }
    let obs = PauliString::z_all(p.n_qubits);
    let mut rows = Vec::new();
    for (gi, &gates) in p.gate_counts.iter().enumerate() {
        let circuit = build_brickwork_circuit(p.n_qubits, gates, GateKind::Cz)?;
        // The distinct qubit pairs the circuit touches, in first-seen order.
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        for g in circuit.gates.iter().filter(|g| g.qubits.len() == 2) {
            let pair = (g.qubits[0].min(g.qubits[1]), g.qubits[0].max(g.qubits[1]));
            if !pairs.contains(&pair) {
                pairs.push(pair);
            }
        }
        // values[sample_count][rep]
        let mut values: Vec<Vec<f64>> = vec![Vec::new(); p.sample_counts.len()];
        for r in 0..p.repetitions {
            let mut rng = seeds::rng_from(seeds::derive_seed(p.seed, &[20, gi as u64, r as u64]));
            let mut noise = NoiseModel::noiseless();
            for &(a, b) in &pairs {
                let prob = rand::Rng::random_range(&mut rng, p.error_lo..p.error_hi);
                noise = noise.with_pair_override(a, b, prob);
            }
            for (ki, &k) in p.sample_counts.iter().enumerate() {
                let job = EstimatorJob {
                    circuit: circuit.clone(),
                    observables: vec![obs.clone()],
                    noise_factors: p.noise_factors.clone(),
                    fold_strategy: FoldStrategy::Local,
                    fold_scope: FoldScope::TwoQubitOnly,
                    fold_samples: k,
                    num_twirls: 0,
                    readout_mitigation: false,
                    readout_calibration_shots: 0,
                    shots: p.shots,
                    models: vec![],
                    seed: seeds::derive_seed(p.seed, &[21, gi as u64, ki as u64, r as u64]),
                };
                let result = run_mitigated_estimator(&job, &noise)?;
                let fit = fit_linear(&result.observables[0].points)?;
                values[ki].push(fit.zero_noise_value);
            }
        }
        for (ki, &k) in p.sample_counts.iter().enumerate() {
            rows.push(PartialFoldRow {
                total_2q: gates,
                num_samples: k,
                mean: values[ki].iter().sum::<f64>() / values[ki].len() as f64,
                std: sample_std(&values[ki]),
            });
        }
    }
    Ok(rows)
}

pub fn partial_fold_csv(rows: &[PartialFoldRow]) -> String {
    let mut out = String::from("total_2q,num_samples,mean,std\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.total_2q, r.num_samples, r.mean, r.std
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// Shot-noise scaling study: sigma(zero-noise value) vs shot count.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotScalingParams {
    pub n_qubits: usize,
    pub steps: usize,
    pub error_probs: Vec<f64>,
    pub shot_counts: Vec<u64>,
    pub repetitions: usize,
    pub noise_factors: Vec<f64>,
    pub seed: u64,
}

impl ShotScalingParams {
    pub fn defaults(seed: u64) -> ShotScalingParams {
        ShotScalingParams {
            n_qubits: 6,
            steps: 5,
            error_probs: vec![0.001, 0.01, 0.02],
            shot_counts: vec![1_000, 10_000, 100_000],
            repetitions: 50,
            noise_factors: vec![1.0, 3.0, 5.0],
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotScalingRow {
    pub error_prob: f64,
    pub shots: u64,
    /// Ensemble std of the linear zero-noise value over repetitions.
    pub sigma: f64,
    /// From the per-error-probability power-law fit sigma = a * N^-beta.
    pub fitted_a: f64,
    pub fitted_beta: f64,
}

/// Measures how the spread of the linear zero-noise estimate scales with
/// the shot budget. One fixed disordered chain per study; repetitions
/// differ only in sampling seeds, so the spread is pure shot noise. Each
/// error probability gets a power-law fit `log sigma = log a - beta log N`.
pub fn run_shot_scaling_study(p: &ShotScalingParams) -> Result<Vec<ShotScalingRow>> {
    if p.shot_counts.len() < 3 {
        return Err(Error::InvalidConfig(
            "shot-scaling needs at least 3 shot counts".into(),
        ));
    }
    let lo = *p.shot_counts.iter().min().unwrap();
    let hi = *p.shot_counts.iter().max().unwrap();
    if lo == 0 || hi / lo < 100 {
        return Err(Error::InvalidConfig(
            "shot counts must span at least two decades".into(),
        ));
    }
    if p.repetitions < 2 {
        return Err(Error::InvalidConfig("need repetitions >= 2".into()));
    }
    let obs = PauliString::z_all(p.n_qubits);
    let circuit = build_spin_chain_circuit(&SpinChainParams {
        n_qubits: p.n_qubits,
        steps: p.steps,
        theta: theta_mixing(),
        disorder_seed: seeds::derive_seed(p.seed, &[30]),
    })?;

    // Deterministic folded circuits, shared across the whole study.
    let mut folded = Vec::new();
    for &lambda in &p.noise_factors {
        let plan = plan_fold(&circuit, lambda, FoldStrategy::Global, FoldScope::TwoQubitOnly, 0)?;
        folded.push((plan.lambda_eff, apply_fold(&circuit, &plan)?));
    }

    let mut rows = Vec::new();
    for (ei, &error_prob) in p.error_probs.iter().enumerate() {
        let noise = NoiseModel::noiseless().with_depol_2q(error_prob);
        // One prepared state per noise factor serves every shot count and
        // repetition; only the sampling differs.
        let states: Vec<(f64, crate::sim::DensityMatrix)> = folded
            .iter()
            .map(|(le, c)| simulate(c, &noise).map(|rho| (*le, rho)))
            .collect::<Result<_>>()?;

        let mut sigmas = Vec::with_capacity(p.shot_counts.len());
        for (ni, &shots) in p.shot_counts.iter().enumerate() {
            let mut values = Vec::with_capacity(p.repetitions);
            for r in 0..p.repetitions {
                let mut points = Vec::with_capacity(states.len());
                for (fi, (lambda_eff, rho)) in states.iter().enumerate() {
                    let counts = sample_counts(
                        rho,
                        &obs,
                        shots,
                        &[],
                        seeds::derive_seed(
                            p.seed,
                            &[31, ei as u64, ni as u64, r as u64, fi as u64],
                        ),
                    )?;
                    let (mean, stderr) = expectation_from_counts(&counts, &obs)?;
                    points.push(NoisePoint::new(*lambda_eff, mean, stderr, shots)?);
                }
                values.push(fit_linear(&points)?.zero_noise_value);
            }
            sigmas.push(sample_std(&values));
        }

        // Unweighted least squares on (ln N, ln sigma).
        let xs: Vec<f64> = p.shot_counts.iter().map(|&n| (n as f64).ln()).collect();
        let ys: Vec<f64> = sigmas.iter().map(|&s| s.max(1e-300).ln()).collect();
        let n = xs.len() as f64;
        let xbar = xs.iter().sum::<f64>() / n;
        let ybar = ys.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
        let slope = sxy / sxx;
        let intercept = ybar - slope * xbar;
        let fitted_a = intercept.exp();
        let fitted_beta = -slope;

        for (ni, &shots) in p.shot_counts.iter().enumerate() {
            rows.push(ShotScalingRow {
                error_prob,
                shots,
                sigma: sigmas[ni],
                fitted_a,
                fitted_beta,
            });
        }
    }
    Ok(rows)
}

pub fn shot_scaling_csv(rows: &[ShotScalingRow]) -> String {
    let mut out = String::from("error_prob,shots,sigma,fitted_a,fitted_beta\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.error_prob, r.shots, r.sigma, r.fitted_a, r.fitted_beta
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// Readout-mitigation study: extrapolation with vs without confusion-matrix
// correction under readout error.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutStudyParams {
    pub n_qubits: usize,
    /// Chain steps; each contributes two-qubit depth 2.
    pub steps: Vec<usize>,
    pub depol_2q: f64,
    pub readout_p01: f64,
    pub readout_p10: f64,
    pub shots: u64,
    pub calibration_shots: u64,
    pub repetitions: usize,
    pub noise_factors: Vec<f64>,
    pub seed: u64,
}

impl ReadoutStudyParams {
    pub fn defaults(seed: u64) -> ReadoutStudyParams {
        ReadoutStudyParams {
            n_qubits: 6,
            steps: (1..=10).collect(),
            depol_2q: 0.01,
            readout_p01: 0.02,
            readout_p10: 0.01,
            shots: 8000,
            calibration_shots: 8000,
            repetitions: 5,
            noise_factors: vec![1.0, 3.0, 5.0],
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutStudyRow {
    pub depth_2q: usize,
    /// Mean |linear zero-noise value - ideal| without readout correction.
    pub mean_abs_err_plain: f64,
    /// Same with confusion-matrix correction before extrapolation.
    pub mean_abs_err_mitigated: f64,
}

/// Compares extrapolation accuracy with and without readout mitigation,
/// per circuit depth, under combined gate and readout noise. Both arms of
/// each repetition share seeds, so the uncorrected and corrected runs see
/// identical raw counts.
pub fn run_readout_study(p: &ReadoutStudyParams) -> Result<Vec<ReadoutStudyRow>> {
    if p.repetitions == 0 {
        return Err(Error::InvalidConfig("repetitions must be >= 1".into()));
    }
    let obs = PauliString::z_all(p.n_qubits);
    let noise = NoiseModel::noiseless()
        .with_depol_2q(p.depol_2q)
        .with_uniform_readout(p.n_qubits, p.readout_p01, p.readout_p10);
    let mut rows = Vec::new();
    for (si, &steps) in p.steps.iter().enumerate() {
        let mut plain_errs = Vec::new();
        let mut mitigated_errs = Vec::new();
        for r in 0..p.repetitions {
            let circuit = build_spin_chain_circuit(&SpinChainParams {
                n_qubits: p.n_qubits,
                steps,
                theta: theta_mixing(),
                disorder_seed: seeds::derive_seed(p.seed, &[40, si as u64, r as u64]),
            })?;
            let ideal = ideal_value(&circuit, &obs)?;
            let mut job = EstimatorJob {
                circuit,
                observables: vec![obs.clone()],
                noise_factors: p.noise_factors.clone(),
                fold_strategy: FoldStrategy::Global,
                fold_scope: FoldScope::TwoQubitOnly,
                fold_samples: 1,
                num_twirls: 0,
                readout_mitigation: false,
                readout_calibration_shots: p.calibration_shots,
                shots: ShotBudget::PerFactor(p.shots),
                models: vec![],
                seed: seeds::derive_seed(p.seed, &[41, si as u64, r as u64]),
            };
            let plain = run_mitigated_estimator(&job, &noise)?;
            job.readout_mitigation = true;
            let mitigated = run_mitigated_estimator(&job, &noise)?;
            let vp = fit_linear(&plain.observables[0].points)?.zero_noise_value;
            let vm = fit_linear(&mitigated.observables[0].points)?.zero_noise_value;
            plain_errs.push((vp - ideal).abs());
            mitigated_errs.push((vm - ideal).abs());
        }
        rows.push(ReadoutStudyRow {
            depth_2q: 2 * steps,
            mean_abs_err_plain: plain_errs.iter().sum::<f64>() / plain_errs.len() as f64,
            mean_abs_err_mitigated: mitigated_errs.iter().sum::<f64>()
                / mitigated_errs.len() as f64,
        });
    }
    Ok(rows)
}

pub fn readout_study_csv(rows: &[ReadoutStudyRow]) -> String {
    let mut out = String::from("depth_2q,mean_abs_err_plain,mean_abs_err_mitigated\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{}\n",
            r.depth_2q, r.mean_abs_err_plain, r.mean_abs_err_mitigated
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// Twirling study: extrapolation accuracy vs number of twirled instances
// under combined stochastic and coherent noise.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwirlStudyParams {
    pub n_qubits: usize,
    pub steps: Vec<usize>,
    pub depol_2q: f64,
    /// Coherent ZZ over-rotation after every two-qubit gate, radians.
    pub coherent_epsilon: f64,
    pub twirl_counts: Vec<usize>,
    pub shots: u64,
    pub repetitions: usize,
    pub noise_factors: Vec<f64>,
    pub seed: u64,
}

impl TwirlStudyParams {
    pub fn defaults(seed: u64) -> TwirlStudyParams {
        TwirlStudyParams {
            n_qubits: 6,
            steps: (1..=10).collect(),
            depol_2q: 0.01,
            coherent_epsilon: 0.15,
            twirl_counts: vec![0, 10, 50],
            shots: 8000,
            repetitions: 2,
            noise_factors: vec![1.0, 3.0, 5.0],
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwirlStudyRow {
    pub depth_2q: usize,
    pub num_twirls: usize,
    /// RMSE of the linear zero-noise value vs ideal across repetitions.
    pub rmse: f64,
}

/// Measures extrapolation error with and without Pauli twirling when the
/// noise has a coherent component the folding cannot amplify cleanly.
pub fn run_twirl_study(p: &TwirlStudyParams) -> Result<Vec<TwirlStudyRow>> {
    if p.repetitions == 0 {
        return Err(Error::InvalidConfig("repetitions must be >= 1".into()));
    }
    let obs = PauliString::z_all(p.n_qubits);
    let noise = NoiseModel::noiseless()
        .with_depol_2q(p.depol_2q)
        .with_coherent_epsilon(p.coherent_epsilon);
    let mut rows = Vec::new();
    for (si, &steps) in p.steps.iter().enumerate() {
        let mut errs: Vec<Vec<f64>> = vec![Vec::new(); p.twirl_counts.len()];
        for r in 0..p.repetitions {
            let circuit = build_spin_chain_circuit(&SpinChainParams {
                n_qubits: p.n_qubits,
                steps,
                theta: theta_mixing(),
                disorder_seed: seeds::derive_seed(p.seed, &[50, si as u64, r as u64]),
            })?;
            let ideal = ideal_value(&circuit, &obs)?;
            for (ti, &twirls) in p.twirl_counts.iter().enumerate() {
                let job = EstimatorJob {
                    circuit: circuit.clone(),
                    observables: vec![obs.clone()],
                    noise_factors: p.noise_factors.clone(),
                    fold_strategy: FoldStrategy::Global,
                    fold_scope: FoldScope::TwoQubitOnly,
                    fold_samples: 1,
                    num_twirls: twirls,
                    readout_mitigation: false,
                    readout_calibration_shots: 0,
                    shots: ShotBudget::PerFactor(p.shots),
                    models: vec![],
                    seed: seeds::derive_seed(p.seed, &[51, si as u64, ti as u64, r as u64]),
                };
                let result = run_mitigated_estimator(&job, &noise)?;
                let v = fit_linear(&result.observables[0].points)?.zero_noise_value;
                errs[ti].push(v - ideal);
            }
        }
        for (ti, &twirls) in p.twirl_counts.iter().enumerate() {
            rows.push(TwirlStudyRow {
                depth_2q: 2 * steps,
                num_twirls: twirls,
                rmse: rmse(&errs[ti]),
            });
        }
    }
    Ok(rows)
}

pub fn twirl_study_csv(rows: &[TwirlStudyRow]) -> String {
    let mut out = String::from("depth_2q,num_twirls,rmse\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.depth_2q, r.num_twirls, r.rmse));
    }
    out
}

// ---------------------------------------------------------------------------
// Conserved-charge benchmark: strategy comparison on the theta = 0 chain,
// where every single-qubit Z is conserved and the ideal values are known.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkParams {
    pub n_qubits: usize,
    pub steps: Vec<usize>,
    pub factor_sets: Vec<Vec<f64>>,
    pub depol_2q: f64,
    pub coherent_epsilon: f64,
    pub readout_p01: f64,
    pub readout_p10: f64,
    pub shots: u64,
    pub calibration_shots: u64,
    pub num_twirls: usize,
    pub seed: u64,
}

impl BenchmarkParams {
    pub fn defaults(seed: u64) -> BenchmarkParams {
        BenchmarkParams {
            n_qubits: 10,
            steps: vec![5, 10, 15, 20, 25, 30, 35],
            factor_sets: vec![vec![1.0, 3.0, 5.0], vec![1.0, 1.1, 1.2]],
            depol_2q: 0.01,
            coherent_epsilon: 0.15,
            readout_p01: 0.02,
            readout_p10: 0.01,
            shots: 16384,
            calibration_shots: 16384,
            num_twirls: 16,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub depth_2q: usize,
    /// Comma-joined noise factors behind a ZNE strategy; `-` for
    /// strategies that use none.
    pub factor_set: String,
    /// `no-mit`, `RO+RC`, or `RO+RC+{L,Q,E}`.
    pub strategy: String,
    /// Root-mean-square error over all single-qubit `Z_i` vs their
    /// conserved ideals.
    pub eps_avg: f64,
    /// Shot-noise uncertainty of `eps_avg`, propagated from per-qubit
    /// standard errors.
    pub eps_stderr: f64,
}

fn eps_avg_of(values: &[f64], stderrs: &[f64], ideals: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let sq: f64 = values
        .iter()
        .zip(ideals)
        .map(|(v, i)| (v - i) * (v - i))
        .sum::<f64>()
        / n;
    let eps = sq.sqrt();
    let var_sq: f64 = values
        .iter()
        .zip(ideals)
        .zip(stderrs)
        .map(|((v, i), e)| {
            let d = 2.0 * (v - i) * e / n;
            d * d
        })
        .sum();
    let stderr = if eps > 1e-12 {
        var_sq.sqrt() / (2.0 * eps)
    } else {
        // Degenerate at eps = 0: fall back to the RMS per-qubit error bar.
        (stderrs.iter().map(|e| e * e).sum::<f64>() / n).sqrt()
    };
    (eps, stderr)
}

fn factor_set_name(set: &[f64]) -> String {
    set.iter()
        .map(|f| f.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Runs the mitigation-strategy comparison on the conserved-charge chain:
/// unmitigated, readout correction + twirling, and the same plus
/// zero-noise extrapolation with each model and each noise-factor set.
pub fn run_benchmark(p: &BenchmarkParams) -> Result<Vec<BenchmarkRow>> {
    let n = p.n_qubits;
    let observables: Vec<PauliString> = (0..n).map(|q| PauliString::single_z(n, q)).collect();
    let noise = NoiseModel::noiseless()
        .with_depol_2q(p.depol_2q)
        .with_coherent_epsilon(p.coherent_epsilon)
        .with_uniform_readout(n, p.readout_p01, p.readout_p10);
    let models = [
        ("RO+RC+L", ModelKind::Linear),
        ("RO+RC+Q", ModelKind::Poly { degree: 2 }),
        ("RO+RC+E", ModelKind::Exponential { fixed_shift: None }),
    ];

    let mut rows = Vec::new();
    for (si, &steps) in p.steps.iter().enumerate() {
        let circuit = build_spin_chain_circuit(&SpinChainParams {
            n_qubits: n,
            steps,
            theta: [0.0; 3],
            disorder_seed: seeds::derive_seed(p.seed, &[60, si as u64]),
        })?;
        let depth_2q = circuit.two_qubit_depth();
        let ideal_rho = simulate(&circuit, &NoiseModel::noiseless())?;
        let ideals: Vec<f64> = observables
            .iter()
            .map(|o| ideal_rho.expectation(o))
            .collect::<Result<_>>()?;

        let base = EstimatorJob {
            circuit,
            observables: observables.clone(),
            noise_factors: vec![1.0],
            fold_strategy: FoldStrategy::Global,
            fold_scope: FoldScope::TwoQubitOnly,
            fold_samples: 1,
            num_twirls: 0,
            readout_mitigation: false,
            readout_calibration_shots: p.calibration_shots,
            shots: ShotBudget::PerFactor(p.shots),
            models: vec![],
            seed: 0,
        };

        // Unmitigated baseline.
        let mut job = base.clone();
        job.seed = seeds::derive_seed(p.seed, &[61, si as u64]);
        let result = run_mitigated_estimator(&job, &noise)?;
        let (vals, errs): (Vec<f64>, Vec<f64>) = result
            .observables
            .iter()
            .map(|o| (o.points[0].mean, o.points[0].stderr))
            .unzip();
        let (eps, eps_e) = eps_avg_of(&vals, &errs, &ideals);
        rows.push(BenchmarkRow {
            depth_2q,
            factor_set: "-".into(),
            strategy: "no-mit".into(),
            eps_avg: eps,
            eps_stderr: eps_e,
        });

        // Readout correction + twirling, no extrapolation.
        let mut job = base.clone();
        job.num_twirls = p.num_twirls;
        job.readout_mitigation = true;
        job.seed = seeds::derive_seed(p.seed, &[62, si as u64]);
        let result = run_mitigated_estimator(&job, &noise)?;
        let (vals, errs): (Vec<f64>, Vec<f64>) = result
            .observables
            .iter()
            .map(|o| (o.points[0].mean, o.points[0].stderr))
            .unzip();
        let (eps, eps_e) = eps_avg_of(&vals, &errs, &ideals);
        rows.push(BenchmarkRow {
            depth_2q,
            factor_set: "-".into(),
            strategy: "RO+RC".into(),
            eps_avg: eps,
            eps_stderr: eps_e,
        });

        // Full pipeline: one run per factor set, all three models fit on
        // the same points.
        for (fsi, set) in p.factor_sets.iter().enumerate() {
            let mut job = base.clone();
            job.noise_factors = set.clone();
            job.num_twirls = p.num_twirls;
            job.readout_mitigation = true;
            job.seed = seeds::derive_seed(p.seed, &[63, si as u64, fsi as u64]);
            let result = run_mitigated_estimator(&job, &noise)?;
            for &(label, model) in &models {
                let mut vals = Vec::with_capacity(n);
                let mut errs = Vec::with_capacity(n);
                for o in &result.observables {
                    let fit = fit_model(&o.points, model)?;
                    vals.push(fit.zero_noise_value);
                    errs.push(fit.zero_noise_stderr);
                }
                let (eps, eps_e) = eps_avg_of(&vals, &errs, &ideals);
                rows.push(BenchmarkRow {
                    depth_2q,
                    factor_set: factor_set_name(set),
                    strategy: label.into(),
                    eps_avg: eps,
                    eps_stderr: eps_e,
                });
            }
        }
    }
    Ok(rows)
}

pub fn benchmark_csv(rows: &[BenchmarkRow]) -> String {
    let mut out = String::from("depth_2q,factor_set,strategy,eps_avg,eps_stderr\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.depth_2q, r.factor_set, r.strategy, r.eps_avg, r.eps_stderr
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_spacing_hits_both_ends() {
        let v = log_spaced(0.001, 0.04, 8);
        assert_eq!(v.len(), 8);
        assert!((v[0] - 0.001).abs() < 1e-12);
        assert!((v[7] - 0.04).abs() < 1e-12);
        for w in v.windows(2) {
            assert!(w[0] < w[1]);
        }
    }

    #[test]
    fn calibration_depth_zero_cell_is_linear_labeled() {
        let p = CalibrationSweepParams {
            n_qubits: 4,
            depths: vec![0],
            error_probs: vec![0.01],
            noise_factors: vec![1.0, 3.0, 5.0],
            shots: 400,
            repetitions: 2,
            seed: 5,
        };
        let cells = run_calibration_sweep(&p).unwrap();
        assert_eq!(cells.len(), 1);
        assert_eq!(cells[0].label, ChoiceLabel::L);
        assert!(cells[0].rmse_linear < 1e-9);
    }

    #[test]
    fn calibration_rejects_odd_depths() {
        let mut p = CalibrationSweepParams::defaults(1);
        p.depths = vec![3];
        assert!(run_calibration_sweep(&p).is_err());
    }

    #[test]
    fn calibration_csv_is_deterministic() {
        let p = CalibrationSweepParams {
            n_qubits: 4,
            depths: vec![0, 2],
            error_probs: vec![0.005, 0.02],
            noise_factors: vec![1.0, 3.0, 5.0],
            shots: 400,
            repetitions: 2,
            seed: 9,
        };
        let a = calibration_csv(&run_calibration_sweep(&p).unwrap());
        let b = calibration_csv(&run_calibration_sweep(&p).unwrap());
        assert_eq!(a, b);
        assert!(a.starts_with("depth,error_prob,rmse_L,rmse_Q,rmse_E,label\n"));
        assert_eq!(a.lines().count(), 5);
    }

    #[test]
    fn partial_fold_more_samples_tighten_the_spread() {
        let mut p = PartialFoldParams::defaults(3);
        p.gate_counts = vec![15];
        p.sample_counts = vec![1, 10];
        p.repetitions = 40;
        let rows = run_partial_fold_variance_study(&p).unwrap();
        assert_eq!(rows.len(), 2);
        let at = |k: usize| rows.iter().find(|r| r.num_samples == k).unwrap();
        assert!(
            at(10).std < at(1).std,
            "10-sample std {} should beat 1-sample std {}",
            at(10).std,
            at(1).std
        );
    }

    #[test]
    fn shot_scaling_rejects_narrow_spans() {
        let mut p = ShotScalingParams::defaults(1);
        p.shot_counts = vec![1000, 2000, 4000];
        assert!(run_shot_scaling_study(&p).is_err());
        p.shot_counts = vec![1000, 100_000];
        assert!(run_shot_scaling_study(&p).is_err());
    }

    #[test]
    fn benchmark_ideals_are_conserved_and_strategies_ordered_at_low_depth() {
        let p = BenchmarkParams {
            n_qubits: 4,
            steps: vec![2],
            factor_sets: vec![vec![1.0, 3.0, 5.0]],
            depol_2q: 0.02,
            coherent_epsilon: 0.1,
            readout_p01: 0.04,
            readout_p10: 0.02,
            shots: 4000,
            calibration_shots: 20000,
            num_twirls: 4,
            seed: 17,
        };
        let rows = run_benchmark(&p).unwrap();
        // 1 depth x (no-mit + RO+RC + 3 models x 1 set).
        assert_eq!(rows.len(), 5);
        let get = |s: &str| rows.iter().find(|r| r.strategy == s).unwrap();
        // Readout correction must visibly improve on no mitigation here:
        // gate noise is mild and readout error is strong.
        assert!(get("RO+RC").eps_avg < get("no-mit").eps_avg);
        // Extrapolation improves further.
        assert!(get("RO+RC+L").eps_avg < get("RO+RC").eps_avg);
    }
}
