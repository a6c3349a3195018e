//! TOML run configuration.
//!
//! One file can hold a section per subcommand; every field is optional and
//! falls back to the built-in defaults, and every command-line flag
//! overrides the file. Unknown keys are rejected so typos surface as
//! config errors instead of silently running defaults.

use std::path::Path;

use dzne_core::extrapolate::ModelKind;
use dzne_core::folding::{FoldScope, FoldStrategy};
use dzne_core::pipeline::ShotBudget;
use dzne_core::sim::ReadoutRates;
use dzne_core::{Error, Result};
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub estimate: Option<EstimateSection>,
    pub noise: Option<NoiseSection>,
    pub calibrate: Option<CalibrateSection>,
    pub study_partial_fold: Option<PartialFoldSection>,
    pub study_shots: Option<ShotsSection>,
    pub study_readout: Option<ReadoutSection>,
    pub study_twirl: Option<TwirlSection>,
    pub benchmark: Option<BenchmarkSection>,
}

/// Loads and parses the file when a path was given; an absent path is an
/// empty configuration.
pub fn load(path: Option<&Path>) -> Result<ConfigFile> {
    let Some(path) = path else {
        return Ok(ConfigFile::default());
    };
    let text = std::fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| {
        Error::InvalidConfig(format!("{}: {e}", path.display()))
    })
}

/// Mirrors `EstimatorJob`, minus the noise model (the `[noise]` section).
/// The circuit comes from exactly one of `circuit_file`, `circuit`
/// (inline text), or `chain` (the built-in disordered-chain family).
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateSection {
    pub circuit_file: Option<String>,
    pub circuit: Option<String>,
    pub chain: Option<ChainSection>,
    pub observables: Option<Vec<String>>,
    pub noise_factors: Option<Vec<f64>>,
    /// `"local"` or `"global"`.
    pub fold_strategy: Option<String>,
    /// `"two-qubit-only"` or `"all-gates"`.
    pub fold_scope: Option<String>,
    pub fold_samples: Option<usize>,
    pub num_twirls: Option<usize>,
    pub readout_mitigation: Option<bool>,
    pub readout_calibration_shots: Option<u64>,
    /// Shot budget per noise factor: an integer, or `"exact"` for
    /// infinite-shot density-matrix evaluation.
    pub shots: Option<ShotsSpec>,
    /// Any of `"linear"`, `"quadratic"`, `"exponential"`.
    pub models: Option<Vec<String>>,
    pub seed: Option<u64>,
}

/// Built-in disordered spin-chain circuit.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSection {
    pub n_qubits: usize,
    pub steps: usize,
    /// `U3` angles after every entangler; defaults to the weakly mixing
    /// `[0.05*pi, 0, 0]`.
    pub theta: Option<[f64; 3]>,
    /// Seed of the per-qubit disorder phases (not the sampling seed).
    pub disorder_seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub depol_2q: Option<f64>,
    pub depol_1q: Option<f64>,
    /// Per-pair overrides of `depol_2q` as `[qubit_a, qubit_b, prob]`
    /// entries.
    pub depol_2q_overrides: Option<Vec<(usize, usize, f64)>>,
    pub coherent_epsilon: Option<f64>,
    /// Uniform readout flip rates, applied to every qubit.
    pub readout_p01: Option<f64>,
    pub readout_p10: Option<f64>,
    /// Per-qubit readout rates; overrides the uniform fields.
    pub readout: Option<Vec<ReadoutRates>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateSection {
    pub n_qubits: Option<usize>,
    pub depths: Option<Vec<usize>>,
    pub error_probs: Option<Vec<f64>>,
    pub noise_factors: Option<Vec<f64>>,
    pub shots: Option<u64>,
    pub repetitions: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialFoldSection {
    pub n_qubits: Option<usize>,
    pub gate_counts: Option<Vec<usize>>,
    pub error_lo: Option<f64>,
    pub error_hi: Option<f64>,
    pub noise_factors: Option<Vec<f64>>,
    pub sample_counts: Option<Vec<usize>>,
    pub repetitions: Option<usize>,
    pub shots: Option<ShotsSpec>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShotsSection {
    pub n_qubits: Option<usize>,
    pub steps: Option<usize>,
    pub error_probs: Option<Vec<f64>>,
    pub shot_counts: Option<Vec<u64>>,
    pub repetitions: Option<usize>,
    pub noise_factors: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadoutSection {
    pub n_qubits: Option<usize>,
    pub steps: Option<Vec<usize>>,
    pub depol_2q: Option<f64>,
    pub readout_p01: Option<f64>,
    pub readout_p10: Option<f64>,
    pub shots: Option<u64>,
    pub calibration_shots: Option<u64>,
    pub repetitions: Option<usize>,
    pub noise_factors: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwirlSection {
    pub n_qubits: Option<usize>,
    pub steps: Option<Vec<usize>>,
    pub depol_2q: Option<f64>,
    pub coherent_epsilon: Option<f64>,
    pub twirl_counts: Option<Vec<usize>>,
    pub shots: Option<u64>,
    pub repetitions: Option<usize>,
    pub noise_factors: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkSection {
    pub n_qubits: Option<usize>,
    pub steps: Option<Vec<usize>>,
    pub factor_sets: Option<Vec<Vec<f64>>>,
    pub depol_2q: Option<f64>,
    pub coherent_epsilon: Option<f64>,
    pub readout_p01: Option<f64>,
    pub readout_p10: Option<f64>,
    pub shots: Option<u64>,
    pub calibration_shots: Option<u64>,
    pub num_twirls: Option<usize>,
}

/// `8000` or `"exact"` in TOML; also the parse target of `--shots`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ShotsSpec {
    Count(u64),
    Word(String),
}

impl ShotsSpec {
    pub fn to_budget(&self) -> Result<ShotBudget> {
        match self {
            ShotsSpec::Count(n) => Ok(ShotBudget::PerFactor(*n)),
            ShotsSpec::Word(w) if w.eq_ignore_ascii_case("exact") => Ok(ShotBudget::Exact),
            ShotsSpec::Word(w) => match w.parse::<u64>() {
                Ok(n) => Ok(ShotBudget::PerFactor(n)),
                Err(_) => Err(Error::InvalidConfig(format!(
                    "shots must be a count or `exact`, got `{w}`"
                ))),
            },
        }
    }
}

impl std::str::FromStr for ShotsSpec {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<ShotsSpec, String> {
        let spec = ShotsSpec::Word(s.to_string());
        spec.to_budget().map_err(|e| e.to_string())?;
        Ok(spec)
    }
}

pub fn parse_strategy(s: &str) -> Result<FoldStrategy> {
    match s.to_ascii_lowercase().as_str() {
        "local" => Ok(FoldStrategy::Local),
        "global" => Ok(FoldStrategy::Global),
        other => Err(Error::InvalidConfig(format!(
            "fold strategy must be `local` or `global`, got `{other}`"
        ))),
    }
}

pub fn parse_scope(s: &str) -> Result<FoldScope> {
    match s.to_ascii_lowercase().as_str() {
        "two-qubit-only" | "2q" => Ok(FoldScope::TwoQubitOnly),
        "all-gates" | "all" => Ok(FoldScope::AllGates),
        other => Err(Error::InvalidConfig(format!(
            "fold scope must be `two-qubit-only` or `all-gates`, got `{other}`"
        ))),
    }
}

pub fn parse_model(s: &str) -> Result<ModelKind> {
    match s.to_ascii_lowercase().as_str() {
        "linear" | "l" => Ok(ModelKind::Linear),
        "quadratic" | "q" => Ok(ModelKind::Poly { degree: 2 }),
        "exponential" | "e" => Ok(ModelKind::Exponential { fixed_shift: None }),
        other => Err(Error::InvalidConfig(format!(
            "model must be `linear`, `quadratic`, or `exponential`, got `{other}`"
        ))),
    }
}

pub fn parse_models(names: &[String]) -> Result<Vec<ModelKind>> {
    names.iter().map(|n| parse_model(n)).collect()
}
