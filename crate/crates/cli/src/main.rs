//! `dzne` — digital zero-noise extrapolation from the command line.
//!
//! One subcommand per workflow: a single mitigated estimation job, plus the
//! six study harnesses (calibration sweep, partial-fold variance, shot
//! scaling, readout mitigation, twirling, and the conserved-charge
//! benchmark). Every run writes a CSV of results and a JSON provenance
//! file (full resolved parameters, seed, tool version) so any output can
//! be regenerated byte for byte.
//!
//! Exit codes: 0 success, 2 bad configuration or input, 3 numerical
//! failure during a run.

mod config;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use dzne_core::circuits::{build_spin_chain_circuit, Circuit, PauliString, SpinChainParams};
use dzne_core::pipeline::studies::{
    benchmark_csv, calibration_csv, partial_fold_csv, readout_study_csv, run_benchmark,
    run_calibration_sweep, run_partial_fold_variance_study, run_readout_study,
    run_shot_scaling_study, run_twirl_study, shot_scaling_csv, twirl_study_csv, BenchmarkParams,
    CalibrationSweepParams, PartialFoldParams, ReadoutStudyParams, ShotScalingParams,
    TwirlStudyParams,
};
use dzne_core::pipeline::{run_mitigated_estimator, EstimatorJob, MitigatedResult, ShotBudget};
use dzne_core::sim::NoiseModel;
use dzne_core::{Error, Result};
use serde::Serialize;

use config::{load, parse_models, parse_scope, parse_strategy, ShotsSpec};

#[derive(Parser)]
#[command(
    name = "dzne",
    version,
    about = "Digital zero-noise extrapolation: noisy-circuit simulation, gate folding, \
             readout correction, Pauli twirling, and extrapolation studies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one mitigated estimation job and write its points, fits, and
    /// provenance
    Estimate(EstimateArgs),
    /// Sweep (depth, error) cells and label each with its preferred
    /// extrapolation model
    Calibrate(CalibrateArgs),
    /// Measure how averaging random partial-fold subsets tightens the
    /// zero-noise estimate
    StudyPartialFold(PartialFoldArgs),
    /// Measure how the zero-noise estimate's spread scales with the shot
    /// budget
    StudyShots(ShotsArgs),
    /// Compare extrapolation accuracy with and without readout correction
    StudyReadout(ReadoutArgs),
    /// Compare extrapolation accuracy across Pauli-twirl counts under
    /// coherent noise
    StudyTwirl(TwirlArgs),
    /// Run the conserved-charge mitigation-strategy benchmark
    Benchmark(BenchmarkArgs),
}

#[derive(Args)]
struct Common {
    /// TOML configuration file; every flag overrides its values
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Directory for the CSV and provenance outputs
    #[arg(long, value_name = "DIR", default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    common: Common,
    /// Circuit text file (`qubits N` header, one gate per line)
    #[arg(long, value_name = "FILE")]
    circuit: Option<PathBuf>,
    /// Pauli-string observables, comma separated (e.g. ZZIIII,-IZIIII)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    observables: Option<Vec<String>>,
    /// Noise factors, comma separated, strictly increasing from >= 1
    #[arg(long, value_delimiter = ',')]
    noise_factors: Option<Vec<f64>>,
    /// Fold placement: local | global
    #[arg(long)]
    fold_strategy: Option<String>,
    /// Which gates fold: two-qubit-only | all-gates
    #[arg(long)]
    fold_scope: Option<String>,
    /// Independent fold realizations averaged per noise factor
    #[arg(long)]
    fold_samples: Option<usize>,
    /// Twirled instances per folded circuit (0 = off)
    #[arg(long)]
    num_twirls: Option<usize>,
    /// Confusion-matrix readout correction: true | false
    #[arg(long, value_name = "BOOL")]
    readout_mitigation: Option<bool>,
    /// Shots behind the confusion-matrix estimate
    #[arg(long)]
    readout_calibration_shots: Option<u64>,
    /// Shots per noise factor, or `exact`
    #[arg(long)]
    shots: Option<ShotsSpec>,
    /// Extrapolation models, comma separated: linear,quadratic,exponential
    #[arg(long, value_delimiter = ',')]
    models: Option<Vec<String>>,
    /// Sampling seed (default 0, or the config value)
    #[arg(long)]
    seed: Option<u64>,
    /// Two-qubit depolarizing probability
    #[arg(long)]
    depol_2q: Option<f64>,
    /// One-qubit depolarizing probability
    #[arg(long)]
    depol_1q: Option<f64>,
    /// Coherent ZZ over-rotation after two-qubit gates, radians
    #[arg(long)]
    coherent_epsilon: Option<f64>,
    /// Uniform probability of reading 0 for a true 1
    #[arg(long)]
    readout_p01: Option<f64>,
    /// Uniform probability of reading 1 for a true 0
    #[arg(long)]
    readout_p10: Option<f64>,
}

#[derive(Args)]
struct CalibrateArgs {
    #[command(flatten)]
    common: Common,
    /// Master seed; every cell derives its own seeds from it
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    n_qubits: Option<usize>,
    /// Two-qubit depths, comma separated (even values)
    #[arg(long, value_delimiter = ',')]
    depths: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    error_probs: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    noise_factors: Option<Vec<f64>>,
    /// Shots per noise factor
    #[arg(long)]
    shots: Option<u64>,
    /// Fresh random circuits per cell
    #[arg(long)]
    repetitions: Option<usize>,
}

#[derive(Args)]
struct PartialFoldArgs {
    #[command(flatten)]
    common: Common,
    /// Master seed; every cell derives its own seeds from it
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    n_qubits: Option<usize>,
    /// Brickwork two-qubit gate counts, comma separated
    #[arg(long, value_delimiter = ',')]
    gate_counts: Option<Vec<usize>>,
    /// Lower end of the per-pair error range
    #[arg(long)]
    error_lo: Option<f64>,
    /// Upper end of the per-pair error range
    #[arg(long)]
    error_hi: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    noise_factors: Option<Vec<f64>>,
    /// Fold-sample counts to compare, comma separated
    #[arg(long, value_delimiter = ',')]
    sample_counts: Option<Vec<usize>>,
    #[arg(long)]
    repetitions: Option<usize>,
    /// Shots per noise factor, or `exact`
    #[arg(long)]
    shots: Option<ShotsSpec>,
}

#[derive(Args)]
struct ShotsArgs {
    #[command(flatten)]
    common: Common,
    /// Master seed; every cell derives its own seeds from it
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    n_qubits: Option<usize>,
    /// Chain steps of the fixed test circuit
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    error_probs: Option<Vec<f64>>,
    /// Shot budgets, comma separated, spanning at least two decades
    #[arg(long, value_delimiter = ',')]
    shot_counts: Option<Vec<u64>>,
    #[arg(long)]
    repetitions: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    noise_factors: Option<Vec<f64>>,
}

#[derive(Args)]
struct ReadoutArgs {
    #[command(flatten)]
    common: Common,
    /// Master seed; every cell derives its own seeds from it
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    n_qubits: Option<usize>,
    /// Chain step counts, comma separated
    #[arg(long, value_delimiter = ',')]
    steps: Option<Vec<usize>>,
    #[arg(long)]
    depol_2q: Option<f64>,
    /// Probability of reading 0 for a true 1
    #[arg(long)]
    readout_p01: Option<f64>,
    /// Probability of reading 1 for a true 0
    #[arg(long)]
    readout_p10: Option<f64>,
    #[arg(long)]
    shots: Option<u64>,
    /// Shots behind the confusion-matrix estimate
    #[arg(long)]
    calibration_shots: Option<u64>,
    #[arg(long)]
    repetitions: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    noise_factors: Option<Vec<f64>>,
}

#[derive(Args)]
struct TwirlArgs {
    #[command(flatten)]
    common: Common,
    /// Master seed; every cell derives its own seeds from it
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    n_qubits: Option<usize>,
    /// Chain step counts, comma separated
    #[arg(long, value_delimiter = ',')]
    steps: Option<Vec<usize>>,
    #[arg(long)]
    depol_2q: Option<f64>,
    /// Coherent ZZ over-rotation after two-qubit gates, radians
    #[arg(long)]
    coherent_epsilon: Option<f64>,
    /// Twirl counts to compare, comma separated (0 = untwirled)
    #[arg(long, value_delimiter = ',')]
    twirl_counts: Option<Vec<usize>>,
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    repetitions: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    noise_factors: Option<Vec<f64>>,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[command(flatten)]
    common: Common,
    /// Master seed; every cell derives its own seeds from it
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    n_qubits: Option<usize>,
    /// Chain step counts, comma separated
    #[arg(long, value_delimiter = ',')]
    steps: Option<Vec<usize>>,
    #[arg(long)]
    depol_2q: Option<f64>,
    #[arg(long)]
    coherent_epsilon: Option<f64>,
    #[arg(long)]
    readout_p01: Option<f64>,
    #[arg(long)]
    readout_p10: Option<f64>,
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    calibration_shots: Option<u64>,
    /// Twirled instances per circuit in the mitigated strategies
    #[arg(long)]
    num_twirls: Option<usize>,
    // factor_sets is a list of lists; configure it via the TOML file.
}

/// `merge!(target.field, file_value, flag_value)` applies each `Some` in
/// order, so later sources (flags) override earlier ones (file).
macro_rules! merge {
    ($target:expr, $($src:expr),+ $(,)?) => {
        $( if let Some(v) = $src { $target = v; } )+
    };
}

#[derive(Serialize)]
struct Provenance<P: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    params: P,
}

fn provenance<P: Serialize>(command: &'static str, params: P) -> Provenance<P> {
    Provenance {
        tool: "dzne",
        version: env!("CARGO_PKG_VERSION"),
        command,
        params,
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Numerical(format!("serializing output: {e}")))?;
    text.push('\n');
    Ok(text)
}

/// Writes `<name>.csv` and `<name>_provenance.json` into the output
/// directory and reports both paths on stdout.
fn write_run_outputs<P: Serialize>(
    dir: &Path,
    name: &str,
    rows: usize,
    csv: &str,
    prov: &Provenance<P>,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("{name}.csv"));
    std::fs::write(&csv_path, csv)?;
    let prov_path = dir.join(format!("{name}_provenance.json"));
    std::fs::write(&prov_path, to_json(prov)?)?;
    println!(
        "{}: {rows} rows -> {} (provenance: {})",
        prov.command,
        csv_path.display(),
        prov_path.display()
    );
    Ok(())
}

fn run_estimate(args: EstimateArgs) -> Result<()> {
    let file = load(args.common.config.as_deref())?;
    let sect = file.estimate.unwrap_or_default();
    let noise_sect = file.noise.unwrap_or_default();

    // The circuit: the --circuit flag wins; otherwise exactly one config
    // source must be present.
    let circuit = if let Some(path) = args.circuit {
        Circuit::from_text(&std::fs::read_to_string(path)?)?
    } else {
        let sources = usize::from(sect.circuit_file.is_some())
            + usize::from(sect.circuit.is_some())
            + usize::from(sect.chain.is_some());
        if sources > 1 {
            return Err(Error::InvalidConfig(
                "set only one of circuit_file, circuit, chain in [estimate]".into(),
            ));
        }
        if let Some(path) = sect.circuit_file {
            Circuit::from_text(&std::fs::read_to_string(path)?)?
        } else if let Some(text) = sect.circuit {
            Circuit::from_text(&text)?
        } else if let Some(chain) = sect.chain {
            build_spin_chain_circuit(&SpinChainParams {
                n_qubits: chain.n_qubits,
                steps: chain.steps,
                theta: chain
                    .theta
                    .unwrap_or([0.05 * std::f64::consts::PI, 0.0, 0.0]),
                disorder_seed: chain.disorder_seed.unwrap_or(0),
            })?
        } else {
            return Err(Error::InvalidConfig(
                "no circuit: pass --circuit FILE or set circuit_file, circuit, or chain \
                 in [estimate]"
                    .into(),
            ));
        }
    };
    let n = circuit.n_qubits;

    let observables: Vec<PauliString> = match args.observables.or(sect.observables) {
        Some(names) => names
            .iter()
            .map(|s| s.parse())
            .collect::<Result<Vec<_>>>()?,
        None => vec![PauliString::z_all(n)],
    };

    let mut job = EstimatorJob {
        circuit,
        observables,
        noise_factors: vec![1.0, 3.0, 5.0],
        fold_strategy: dzne_core::folding::FoldStrategy::Global,
        fold_scope: dzne_core::folding::FoldScope::TwoQubitOnly,
        fold_samples: 1,
        num_twirls: 0,
        readout_mitigation: false,
        readout_calibration_shots: 8000,
        shots: ShotBudget::PerFactor(8000),
        models: parse_models(&[
            "linear".into(),
            "quadratic".into(),
            "exponential".into(),
        ])?,
        seed: 0,
    };
    merge!(job.noise_factors, sect.noise_factors, args.noise_factors);
    if let Some(s) = sect.fold_strategy.as_deref() {
        job.fold_strategy = parse_strategy(s)?;
    }
    if let Some(s) = args.fold_strategy.as_deref() {
        job.fold_strategy = parse_strategy(s)?;
    }
    if let Some(s) = sect.fold_scope.as_deref() {
        job.fold_scope = parse_scope(s)?;
    }
    if let Some(s) = args.fold_scope.as_deref() {
        job.fold_scope = parse_scope(s)?;
    }
    merge!(job.fold_samples, sect.fold_samples, args.fold_samples);
    merge!(job.num_twirls, sect.num_twirls, args.num_twirls);
    merge!(
        job.readout_mitigation,
        sect.readout_mitigation,
        args.readout_mitigation
    );
    merge!(
        job.readout_calibration_shots,
        sect.readout_calibration_shots,
        args.readout_calibration_shots
    );
    if let Some(spec) = args.shots.as_ref().or(sect.shots.as_ref()) {
        job.shots = spec.to_budget()?;
    }
    if let Some(names) = sect.models.as_ref() {
        job.models = parse_models(names)?;
    }
    if let Some(names) = args.models.as_ref() {
        job.models = parse_models(names)?;
    }
    merge!(job.seed, sect.seed, args.seed);

    let mut noise = NoiseModel::noiseless();
    merge!(noise.depol_2q, noise_sect.depol_2q, args.depol_2q);
    merge!(noise.depol_1q, noise_sect.depol_1q, args.depol_1q);
    if let Some(pairs) = noise_sect.depol_2q_overrides {
        noise.depol_2q_overrides = pairs;
    }
    merge!(
        noise.coherent_epsilon,
        noise_sect.coherent_epsilon,
        args.coherent_epsilon
    );
    let p01 = args.readout_p01.or(noise_sect.readout_p01);
    let p10 = args.readout_p10.or(noise_sect.readout_p10);
    if let Some(rates) = noise_sect.readout {
        noise.readout = rates;
    } else if p01.is_some() || p10.is_some() {
        noise = noise.with_uniform_readout(n, p01.unwrap_or(0.0), p10.unwrap_or(0.0));
    }

    let result = run_mitigated_estimator(&job, &noise)?;
    write_estimate_outputs(&args.common.out_dir, &job, &noise, &result)
}

fn write_estimate_outputs(
    dir: &Path,
    job: &EstimatorJob,
    noise: &NoiseModel,
    result: &MitigatedResult,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;

    let mut csv = String::from("observable,lambda_eff,mean,stderr,shots\n");
    for obs in &result.observables {
        for p in &obs.points {
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                obs.observable, p.lambda_eff, p.mean, p.stderr, p.shots
            ));
        }
    }
    let csv_path = dir.join("estimate_points.csv");
    std::fs::write(&csv_path, &csv)?;

    let result_path = dir.join("estimate_result.json");
    std::fs::write(&result_path, to_json(result)?)?;

    #[derive(Serialize)]
    struct EstimateParams<'a> {
        job: &'a EstimatorJob,
        noise: &'a NoiseModel,
    }
    let prov = provenance("estimate", EstimateParams { job, noise });
    let prov_path = dir.join("estimate_provenance.json");
    std::fs::write(&prov_path, to_json(&prov)?)?;

    for obs in &result.observables {
        println!("observable {}:", obs.observable);
        for p in &obs.points {
            println!(
                "  lambda_eff {:<7} mean {:+.6} +/- {:.6}",
                p.lambda_eff, p.mean, p.stderr
            );
        }
        for (i, fit) in obs.fits.iter().enumerate() {
            let marker = if obs.chosen == Some(i) { " (chosen)" } else { "" };
            println!(
                "  {:<12} zero-noise {:+.6} +/- {:.6}  flags {}{marker}",
                fit.model.to_string(),
                fit.zero_noise_value,
                fit.zero_noise_stderr,
                fit.flags
            );
        }
    }
    if result.provenance.amplification_unavailable {
        println!("note: circuit had no foldable gates; all factors ran at lambda_eff = 1");
    }
    println!(
        "estimate: {} observables -> {} (full result: {}, provenance: {})",
        result.observables.len(),
        csv_path.display(),
        result_path.display(),
        prov_path.display()
    );
    Ok(())
}

fn run_calibrate(args: CalibrateArgs) -> Result<()> {
    let sect = load(args.common.config.as_deref())?
        .calibrate
        .unwrap_or_default();
    let mut p = CalibrationSweepParams::defaults(args.seed);
    merge!(p.n_qubits, sect.n_qubits, args.n_qubits);
    merge!(p.depths, sect.depths, args.depths);
    merge!(p.error_probs, sect.error_probs, args.error_probs);
    merge!(p.noise_factors, sect.noise_factors, args.noise_factors);
    merge!(p.shots, sect.shots, args.shots);
    merge!(p.repetitions, sect.repetitions, args.repetitions);
    let cells = run_calibration_sweep(&p)?;
    write_run_outputs(
        &args.common.out_dir,
        "calibration",
        cells.len(),
        &calibration_csv(&cells),
        &provenance("calibrate", &p),
    )
}

fn run_partial_fold(args: PartialFoldArgs) -> Result<()> {
    let sect = load(args.common.config.as_deref())?
        .study_partial_fold
        .unwrap_or_default();
    let mut p = PartialFoldParams::defaults(args.seed);
    merge!(p.n_qubits, sect.n_qubits, args.n_qubits);
    merge!(p.gate_counts, sect.gate_counts, args.gate_counts);
    merge!(p.error_lo, sect.error_lo, args.error_lo);
    merge!(p.error_hi, sect.error_hi, args.error_hi);
    merge!(p.noise_factors, sect.noise_factors, args.noise_factors);
    merge!(p.sample_counts, sect.sample_counts, args.sample_counts);
    merge!(p.repetitions, sect.repetitions, args.repetitions);
    if let Some(spec) = args.shots.as_ref().or(sect.shots.as_ref()) {
        p.shots = spec.to_budget()?;
    }
    let rows = run_partial_fold_variance_study(&p)?;
    write_run_outputs(
        &args.common.out_dir,
        "partial_fold",
        rows.len(),
        &partial_fold_csv(&rows),
        &provenance("study-partial-fold", &p),
    )
}

fn run_shots(args: ShotsArgs) -> Result<()> {
    let sect = load(args.common.config.as_deref())?
        .study_shots
        .unwrap_or_default();
    let mut p = ShotScalingParams::defaults(args.seed);
    merge!(p.n_qubits, sect.n_qubits, args.n_qubits);
    merge!(p.steps, sect.steps, args.steps);
    merge!(p.error_probs, sect.error_probs, args.error_probs);
    merge!(p.shot_counts, sect.shot_counts, args.shot_counts);
    merge!(p.repetitions, sect.repetitions, args.repetitions);
    merge!(p.noise_factors, sect.noise_factors, args.noise_factors);
    let rows = run_shot_scaling_study(&p)?;
    write_run_outputs(
        &args.common.out_dir,
        "shot_scaling",
        rows.len(),
        &shot_scaling_csv(&rows),
        &provenance("study-shots", &p),
    )
}

fn run_readout(args: ReadoutArgs) -> Result<()> {
    let sect = load(args.common.config.as_deref())?
        .study_readout
        .unwrap_or_default();
    let mut p = ReadoutStudyParams::defaults(args.seed);
    merge!(p.n_qubits, sect.n_qubits, args.n_qubits);
    merge!(p.steps, sect.steps, args.steps);
    merge!(p.depol_2q, sect.depol_2q, args.depol_2q);
    merge!(p.readout_p01, sect.readout_p01, args.readout_p01);
    merge!(p.readout_p10, sect.readout_p10, args.readout_p10);
    merge!(p.shots, sect.shots, args.shots);
    merge!(
        p.calibration_shots,
        sect.calibration_shots,
        args.calibration_shots
    );
    merge!(p.repetitions, sect.repetitions, args.repetitions);
    merge!(p.noise_factors, sect.noise_factors, args.noise_factors);
    let rows = run_readout_study(&p)?;
    write_run_outputs(
        &args.common.out_dir,
        "readout_study",
        rows.len(),
        &readout_study_csv(&rows),
        &provenance("study-readout", &p),
    )
}

fn run_twirl(args: TwirlArgs) -> Result<()> {
    let sect = load(args.common.config.as_deref())?
        .study_twirl
        .unwrap_or_default();
    let mut p = TwirlStudyParams::defaults(args.seed);
    merge!(p.n_qubits, sect.n_qubits, args.n_qubits);
    merge!(p.steps, sect.steps, args.steps);
    merge!(p.depol_2q, sect.depol_2q, args.depol_2q);
    merge!(
        p.coherent_epsilon,
        sect.coherent_epsilon,
        args.coherent_epsilon
    );
    merge!(p.twirl_counts, sect.twirl_counts, args.twirl_counts);
    merge!(p.shots, sect.shots, args.shots);
    merge!(p.repetitions, sect.repetitions, args.repetitions);
    merge!(p.noise_factors, sect.noise_factors, args.noise_factors);
    let rows = run_twirl_study(&p)?;
    write_run_outputs(
        &args.common.out_dir,
        "twirl_study",
        rows.len(),
        &twirl_study_csv(&rows),
        &provenance("study-twirl", &p),
    )
}

fn run_benchmark_cmd(args: BenchmarkArgs) -> Result<()> {
    let sect = load(args.common.config.as_deref())?
        .benchmark
        .unwrap_or_default();
    let mut p = BenchmarkParams::defaults(args.seed);
    merge!(p.n_qubits, sect.n_qubits, args.n_qubits);
    merge!(p.steps, sect.steps, args.steps);
    if let Some(sets) = sect.factor_sets {
        p.factor_sets = sets;
    }
    merge!(p.depol_2q, sect.depol_2q, args.depol_2q);
    merge!(
        p.coherent_epsilon,
        sect.coherent_epsilon,
        args.coherent_epsilon
    );
    merge!(p.readout_p01, sect.readout_p01, args.readout_p01);
    merge!(p.readout_p10, sect.readout_p10, args.readout_p10);
    merge!(p.shots, sect.shots, args.shots);
    merge!(
        p.calibration_shots,
        sect.calibration_shots,
        args.calibration_shots
    );
    merge!(p.num_twirls, sect.num_twirls, args.num_twirls);
    let rows = run_benchmark(&p)?;
    write_run_outputs(
        &args.common.out_dir,
        "benchmark",
        rows.len(),
        &benchmark_csv(&rows),
        &provenance("benchmark", &p),
    )
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Estimate(a) => run_estimate(a),
        Command::Calibrate(a) => run_calibrate(a),
        Command::StudyPartialFold(a) => run_partial_fold(a),
        Command::StudyShots(a) => run_shots(a),
        Command::StudyReadout(a) => run_readout(a),
        Command::StudyTwirl(a) => run_twirl(a),
        Command::Benchmark(a) => run_benchmark_cmd(a),
    }
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(if e.is_config_error() { 2 } else { 3 });
        }
    }
}
