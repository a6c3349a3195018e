//! The staged mitigated estimator: folds the circuit to several noise
//! factors, twirls each folded instance, executes every variant, corrects
//! readout, averages over twirls and fold samples, and extrapolates to
//! zero noise.
//!
//! Stage layout per run: amplification -> readout calibration -> twirling
//! -> execution (plan order) -> per-variant estimation with optional
//! readout correction -> variant averaging per noise factor ->
//! extrapolation. Everything downstream of the job seed is deterministic;
//! results record enough provenance to replay bit-exactly.

pub mod studies;

use serde::{Deserialize, Serialize};

use crate::circuits::{validate_native, Circuit, PauliString};
use crate::error::{Error, Result};
use crate::extrapolate::{
    fit_model, stability_diagnostics, ExtrapolationFit, ModelKind, NoisePoint,
};
use crate::folding::{apply_fold, plan_fold, FoldScope, FoldStrategy, FoldingPlan};
use crate::readout::{
    apply_confusion_channel, correct_counts, corrected_expectation, estimate_confusion,
    ConfusionModel,
};
use crate::seeds;
use crate::sim::{
    measurement_probs, sample_counts, simulate, DensityMatrix, NoiseModel,
};
use crate::twirl::twirl_circuit;

// Seed-derivation tags; each randomness consumer gets its own namespace so
// toggling one stage never shifts another stage's stream.
const TAG_FOLD: u64 = 1;
const TAG_TWIRL: u64 = 2;
const TAG_SAMPLE: u64 = 3;
const TAG_READOUT_CAL: u64 = 4;

/// Shots per noise factor, or exact (infinite-shot) evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShotBudget {
    /// Compute expectations from the density matrix; no sampling, stderr 0.
    Exact,
    /// Sample this many shots per noise factor, split across variants.
    PerFactor(u64),
}

impl ShotBudget {
    pub fn is_exact(&self) -> bool {
        matches!(self, ShotBudget::Exact)
    }
}

/// Everything one mitigated-estimation run needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorJob {
    pub circuit: Circuit,
    pub observables: Vec<PauliString>,
    /// Requested noise factors, strictly increasing, each >= 1.
    pub noise_factors: Vec<f64>,
    pub fold_strategy: FoldStrategy,
    pub fold_scope: FoldScope,
    /// Independent folding realizations averaged per noise factor.
    pub fold_samples: usize,
    /// Twirled instances per folded circuit; 0 turns twirling off.
    pub num_twirls: usize,
    pub readout_mitigation: bool,
    /// Shots behind the confusion-matrix estimate when mitigation runs.
    pub readout_calibration_shots: u64,
    pub shots: ShotBudget,
    /// Extrapolation models to fit; may be empty to collect points only.
    pub models: Vec<ModelKind>,
    pub seed: u64,
}

impl EstimatorJob {
    /// Variants executed per noise factor.
    pub fn variants_per_factor(&self) -> usize {
        self.fold_samples * self.num_twirls.max(1)
    }

    pub fn validate(&self, noise: &NoiseModel) -> Result<()> {
        validate_native(&self.circuit)?;
        noise.validate(self.circuit.n_qubits)?;
        if self.observables.is_empty() {
            return Err(Error::InvalidConfig("no observables requested".into()));
        }
        for obs in &self.observables {
            if obs.n_qubits() != self.circuit.n_qubits {
                return Err(Error::InvalidConfig(format!(
                    "observable {obs} does not cover the {}-qubit register",
                    self.circuit.n_qubits
                )));
            }
        }
        if self.noise_factors.is_empty() {
            return Err(Error::InvalidConfig("no noise factors requested".into()));
        }
        for pair in self.noise_factors.windows(2) {
            if pair[0].partial_cmp(&pair[1]) != Some(std::cmp::Ordering::Less) {
                return Err(Error::InvalidConfig(format!(
                    "noise factors must be strictly increasing, got {} then {}",
                    pair[0], pair[1]
                )));
            }
        }
        if !self.noise_factors[0].is_finite() || self.noise_factors[0] < 1.0 {
            return Err(Error::InvalidConfig(format!(
                "noise factors start at {}, must be >= 1",
                self.noise_factors[0]
            )));
        }
        if self.fold_samples == 0 {
            return Err(Error::InvalidConfig("fold_samples must be >= 1".into()));
        }
        if let ShotBudget::PerFactor(total) = self.shots {
            let v = self.variants_per_factor() as u64;
            if total < v {
                return Err(Error::InvalidConfig(format!(
                    "{total} shots per factor cannot cover {v} variants"
                )));
            }
            if self.readout_mitigation && noise.has_readout_error()
                && self.readout_calibration_shots == 0
            {
                return Err(Error::InvalidConfig(
                    "readout mitigation needs calibration shots".into(),
                ));
            }
        }
        Ok(())
    }
}

/// One scheduled circuit execution: which fold sample, twirl instance,
/// observable, and noise factor it serves, and the seed its sampler uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedVariant {
    pub fold_sample: usize,
    /// Twirl slot; 0 with twirling off.
    pub twirl: usize,
    pub observable: usize,
    pub factor_index: usize,
    pub lambda_eff: f64,
    /// Sampling seed, derived from (job seed, position in plan).
    pub seed: u64,
}

/// Schedules every circuit variant. The order groups by (fold sample,
/// twirl instance) and, within a group, keeps each observable's full
/// noise-factor sweep contiguous in ascending lambda — the sweep executes
/// back-to-back so slow drift cannot masquerade as a lambda trend.
/// A pure function of the job: identical jobs give identical plans.
///
/// Also returns the folding plans, indexed `[factor][fold_sample]`.
// The nested loops below walk (sample, twirl, observable, factor)
// coordinates that feed seed derivation, not mere element access.
#[allow(clippy::needless_range_loop)]
pub fn build_execution_plan(
    job: &EstimatorJob,
    noise: &NoiseModel,
) -> Result<(Vec<PlannedVariant>, Vec<Vec<FoldingPlan>>)> {
    job.validate(noise)?;

    // A circuit with nothing to fold cannot be amplified: every factor
    // degenerates to lambda_eff = 1 and extrapolation collapses to the
    // raw estimate. Folding itself rejects that, so plan it explicitly.
    let has_foldable = job.circuit.gates.iter().any(|g| {
        !g.is_twirl_frame
            && match job.fold_scope {
                FoldScope::TwoQubitOnly => g.arity() == 2,
                FoldScope::AllGates => true,
            }
    });

    let mut fold_plans: Vec<Vec<FoldingPlan>> = Vec::with_capacity(job.noise_factors.len());
    for (f, &lambda) in job.noise_factors.iter().enumerate() {
        let mut per_sample = Vec::with_capacity(job.fold_samples);
        for s in 0..job.fold_samples {
            let seed = seeds::derive_seed(job.seed, &[TAG_FOLD, f as u64, s as u64]);
            let effective_lambda = if has_foldable { lambda } else { 1.0 };
            let mut plan = plan_fold(
                &job.circuit,
                effective_lambda,
                job.fold_strategy,
                job.fold_scope,
                seed,
            )?;
            // Keep the request visible in provenance even when it could
            // not be realized.
            plan.lambda_target = lambda;
            per_sample.push(plan);
        }
        fold_plans.push(per_sample);
    }

    let twirl_slots = job.num_twirls.max(1);
    let mut plan = Vec::new();
    let mut index = 0u64;
    for s in 0..job.fold_samples {
        for t in 0..twirl_slots {
            for o in 0..job.observables.len() {
                for f in 0..job.noise_factors.len() {
                    plan.push(PlannedVariant {
                        fold_sample: s,
                        twirl: t,
                        observable: o,
                        factor_index: f,
                        lambda_eff: fold_plans[f][s].lambda_eff,
                        seed: seeds::derive_seed(job.seed, &[TAG_SAMPLE, index]),
                    });
                    index += 1;
                }
            }
        }
    }
    Ok((plan, fold_plans))
}

/// Splits a per-factor shot budget across its variants: everyone gets the
/// floor share and the remainder goes to the first variants, so totals are
/// conserved exactly.
pub fn allocate_shots(
    total_per_factor: u64,
    fold_samples: usize,
    num_twirls: usize,
) -> Result<Vec<u64>> {
    let v = (fold_samples * num_twirls.max(1)) as u64;
    if v == 0 {
        return Err(Error::InvalidConfig("no variants to allocate shots to".into()));
    }
    if total_per_factor < v {
        return Err(Error::InvalidConfig(format!(
            "{total_per_factor} shots cannot cover {v} variants"
        )));
    }
    let base = total_per_factor / v;
    let rem = total_per_factor % v;
    Ok((0..v).map(|i| base + u64::from(i < rem)).collect())
}

/// Everything recorded about one observable in a mitigated run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableResult {
    pub observable: String,
    /// One point per noise factor, ascending lambda_eff order.
    pub points: Vec<NoisePoint>,
    /// One fit per requested model, in job order, diagnostics applied.
    pub fits: Vec<ExtrapolationFit>,
    /// Index into `fits` of the preferred fit: the first with no
    /// instability flags, else the first. `None` when no models were
    /// requested.
    pub chosen: Option<usize>,
}

impl ObservableResult {
    /// The preferred zero-noise value, if any model was fit.
    pub fn chosen_value(&self) -> Option<f64> {
        self.chosen.map(|i| self.fits[i].zero_noise_value)
    }

    pub fn chosen_stderr(&self) -> Option<f64> {
        self.chosen.map(|i| self.fits[i].zero_noise_stderr)
    }
}

/// Replay records for a mitigated run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    /// Folding plans, indexed `[factor][fold_sample]`.
    pub fold_plans: Vec<Vec<FoldingPlan>>,
    /// Shots per variant within one factor (empty in exact mode).
    pub shot_allocation: Vec<u64>,
    /// Realized noise factor per requested factor.
    pub lambda_eff: Vec<f64>,
    /// Estimated confusion rates, when readout calibration ran.
    pub confusion: Option<ConfusionModel>,
    /// True when the circuit had no foldable gates and amplification was
    /// skipped (all factors realized lambda_eff = 1).
    pub amplification_unavailable: bool,
}

/// Output of `run_mitigated_estimator`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MitigatedResult {
    pub job: EstimatorJob,
    pub observables: Vec<ObservableResult>,
    pub provenance: Provenance,
}

/// Per-variant estimates grouped per (observable, factor), then averaged.
struct VariantAccumulator {
    means: Vec<f64>,
    stderrs: Vec<f64>,
    shots: Vec<u64>,
}

impl VariantAccumulator {
    fn new() -> VariantAccumulator {
        VariantAccumulator {
            means: Vec::new(),
            stderrs: Vec::new(),
            shots: Vec::new(),
        }
    }

    fn push(&mut self, mean: f64, stderr: f64, shots: u64) {
        self.means.push(mean);
        self.stderrs.push(stderr);
        self.shots.push(shots);
    }

    /// Stage-F averaging: shot-weighted mean, with stderr combining the
    /// propagated shot noise and the between-variant spread of the mean.
    fn aggregate_sampled(&self) -> (f64, f64, u64) {
        let total: u64 = self.shots.iter().sum();
        let tf = total as f64;
        let mean: f64 = self
            .means
            .iter()
            .zip(&self.shots)
            .map(|(m, &s)| m * s as f64 / tf)
            .sum();
        let shot_var: f64 = self
            .stderrs
            .iter()
            .zip(&self.shots)
            .map(|(e, &s)| {
                let w = s as f64 / tf;
                w * w * e * e
            })
            .sum();
        let v = self.means.len();
        let between = if v > 1 {
            let m0: f64 = self.means.iter().sum::<f64>() / v as f64;
            let var: f64 = self.means.iter().map(|m| (m - m0) * (m - m0)).sum::<f64>()
                / (v as f64 - 1.0);
            var / v as f64
        } else {
            0.0
        };
        (mean, (shot_var + between).sqrt(), total)
    }

    fn aggregate_exact(&self) -> f64 {
        self.means.iter().sum::<f64>() / self.means.len() as f64
    }
}

/// Runs the full mitigated estimation pipeline for one job under one noise
/// model. Fit failures propagate as errors; instability flags are recorded
/// on the returned fits, never dropped.
#[allow(clippy::needless_range_loop)] // coordinate loops, as in build_execution_plan
pub fn run_mitigated_estimator(job: &EstimatorJob, noise: &NoiseModel) -> Result<MitigatedResult> {
    let (plan, fold_plans) = build_execution_plan(job, noise)?;
    let n = job.circuit.n_qubits;
    let twirl_slots = job.num_twirls.max(1);
    let exact = job.shots.is_exact();

    // Stage C: readout calibration. Pointless without readout error, and
    // in exact mode the inverse of an exactly known channel cancels the
    // channel itself, so both are skipped.
    let mitigate_readout = job.readout_mitigation && noise.has_readout_error();
    let confusion = if mitigate_readout && !exact {
        Some(estimate_confusion(
            n,
            noise,
            job.readout_calibration_shots,
            seeds::derive_seed(job.seed, &[TAG_READOUT_CAL]),
        )?)
    } else {
        None
    };

    let allocation = match job.shots {
        ShotBudget::Exact => Vec::new(),
        ShotBudget::PerFactor(total) => {
            let alloc = allocate_shots(total, job.fold_samples, job.num_twirls)?;
            if alloc.iter().any(|&s| s < 2) {
                return Err(Error::InvalidConfig(format!(
                    "allocation gives a variant fewer than 2 shots ({total} shots over {} variants)",
                    alloc.len()
                )));
            }
            alloc
        }
    };

    // Execution. The plan fixes seeds and scheduling order; the simulator
    // walks (sample, twirl, factor) instead so each prepared state is
    // built once and serves every observable, which changes nothing
    // downstream because every sample draw uses its plan-assigned seed.
    let mut acc: Vec<Vec<VariantAccumulator>> = (0..job.observables.len())
        .map(|_| (0..job.noise_factors.len()).map(|_| VariantAccumulator::new()).collect())
        .collect();

    // Plan seeds indexed by (sample, twirl, observable, factor).
    let seed_of = |s: usize, t: usize, o: usize, f: usize| {
        let per_t = job.observables.len() * job.noise_factors.len();
        let idx = ((s * twirl_slots + t) * per_t)
            + o * job.noise_factors.len()
            + f;
        plan[idx].seed
    };

    for s in 0..job.fold_samples {
        for t in 0..twirl_slots {
            for f in 0..job.noise_factors.len() {
                let folded = apply_fold(&job.circuit, &fold_plans[f][s])?;
                let prepared = if job.num_twirls > 0 {
                    twirl_circuit(
                        &folded,
                        seeds::derive_seed(
                            job.seed,
                            &[TAG_TWIRL, f as u64, s as u64, t as u64],
                        ),
                    )?
                } else {
                    folded
                };
                let rho = simulate(&prepared, noise)?;
                for (o, obs) in job.observables.iter().enumerate() {
                    let (mean, stderr, shots) = estimate_one(
                        &rho,
                        obs,
                        noise,
                        confusion.as_ref(),
                        mitigate_readout,
                        &allocation,
                        s,
                        t,
                        twirl_slots,
                        seed_of(s, t, o, f),
                        exact,
                    )?;
                    acc[o][f].push(mean, stderr, shots);
                }
            }
        }
    }

    // Stages F-I: average variants into noise points, then extrapolate.
    // Points carry the realized lambda_eff from the folding plans; the
    // requested factors never reach the fitters.
    let mut observables = Vec::with_capacity(job.observables.len());
    for (o, obs) in job.observables.iter().enumerate() {
        let mut points = Vec::with_capacity(job.noise_factors.len());
        for f in 0..job.noise_factors.len() {
            let lambda_eff = fold_plans[f][0].lambda_eff;
            let point = if exact {
                NoisePoint::new(lambda_eff, acc[o][f].aggregate_exact(), 0.0, 0)?
            } else {
                let (mean, stderr, shots) = acc[o][f].aggregate_sampled();
                NoisePoint::new(lambda_eff, mean, stderr, shots)?
            };
            points.push(point);
        }
        points.sort_by(|a, b| f64::total_cmp(&a.lambda_eff, &b.lambda_eff));

        let mut fits = Vec::with_capacity(job.models.len());
        for &model in &job.models {
            let mut fit = fit_model(&points, model)?;
            fit.flags = stability_diagnostics(&points, &fit);
            fits.push(fit);
        }
        let chosen = if fits.is_empty() {
            None
        } else {
            Some(fits.iter().position(|f| !f.flags.any()).unwrap_or(0))
        };
        observables.push(ObservableResult {
            observable: obs.to_string(),
            points,
            fits,
            chosen,
        });
    }

    let amplification_unavailable =
        job.noise_factors.iter().any(|&l| l > 1.0) && fold_plans.iter().all(|ps| ps[0].s_total == 0);
    let lambda_eff = fold_plans.iter().map(|ps| ps[0].lambda_eff).collect();
    Ok(MitigatedResult {
        job: job.clone(),
        observables,
        provenance: Provenance {
            seed: job.seed,
            fold_plans,
            shot_allocation: allocation,
            lambda_eff,
            confusion,
            amplification_unavailable,
        },
    })
}

/// One variant's estimate of one observable: sampled or exact, with or
/// without readout error and its correction.
#[allow(clippy::too_many_arguments)]
fn estimate_one(
    rho: &DensityMatrix,
    obs: &PauliString,
    noise: &NoiseModel,
    confusion: Option<&ConfusionModel>,
    mitigate_readout: bool,
    allocation: &[u64],
    s: usize,
    t: usize,
    twirl_slots: usize,
    sample_seed: u64,
    exact: bool,
) -> Result<(f64, f64, u64)> {
    if exact {
        // Infinite shots. Readout mitigation cancels an exactly known
        // channel, so only the unmitigated channel needs modeling.
        let mean = if noise.has_readout_error() && !mitigate_readout {
            let probs = measurement_probs(rho, obs)?;
            let model = ConfusionModel::new(noise.readout.clone())?;
            let confused = apply_confusion_channel(&probs, &model)?;
            signed_parity_mean(&confused, obs)
        } else {
            rho.expectation(obs)?
        };
        return Ok((mean, 0.0, 0));
    }

    let shots = allocation[s * twirl_slots + t];
    let counts = sample_counts(rho, obs, shots, &noise.readout, sample_seed)?;
    if let Some(model) = confusion.filter(|_| mitigate_readout) {
        let quasi = correct_counts(&counts, model)?;
        corrected_expectation(&quasi, obs, model)
    } else {
        crate::sim::expectation_from_counts(&counts, obs)
    }
    .map(|(m, e)| (m, e, shots))
}

/// Mean of the signed eigenvalue over a distribution in bitstring order.
fn signed_parity_mean(probs: &[f64], obs: &PauliString) -> f64 {
    let n = obs.n_qubits();
    let mask: u64 = obs.support().iter().map(|&q| 1u64 << (n - 1 - q)).sum();
    let mut mean = 0.0;
    for (idx, &p) in probs.iter().enumerate() {
        if (idx as u64 & mask).count_ones().is_multiple_of(2) {
            mean += p;
        } else {
            mean -= p;
        }
    }
    mean * obs.sign()
}
