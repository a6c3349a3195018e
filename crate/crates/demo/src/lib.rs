//! Browser bindings for the zero-noise extrapolation toolkit.
//!
//! Three operations back the demo page, each taking a JSON request string
//! and returning a JSON response string so the JavaScript side stays a
//! thin render layer:
//!
//! * [`extrapolate_points`] — fit user-edited (noise factor, mean, stderr)
//!   points with the chosen models and report zero-noise values, flags,
//!   and which fit the toolkit would trust.
//! * [`inspect_fold`] — parse a circuit in the text format and show, for
//!   each requested noise factor, which gates fold and the factor the
//!   folds actually realize.
//! * [`calibration_grid`] — run a small depth-by-error calibration sweep
//!   and return the labeled phase diagram.
//!
//! Errors come back as `{"error": "..."}` rather than exceptions. The
//! inner `run_*` functions are plain Rust and are unit-tested natively;
//! the `#[wasm_bindgen]` exports are one-line wrappers.

use dzne_core::circuits::Circuit;
use dzne_core::extrapolate::{
    fit_model, stability_diagnostics, ExtrapolationFit, ModelKind, NoisePoint,
};
use dzne_core::folding::{apply_fold, plan_fold, FoldScope, FoldStrategy, FoldingPlan};
use dzne_core::pipeline::studies::{run_calibration_sweep, CalibrationSweepParams};
use dzne_core::{Error, Result};
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::wasm_bindgen;

/// Hard ceilings keeping every request comfortably interactive in a
/// single-threaded browser tab.
const MAX_POINTS: usize = 64;
const MAX_QUBITS: usize = 8;
const MAX_GATES: usize = 256;
const MAX_FACTORS: usize = 8;
const MAX_LAMBDA: f64 = 25.0;
const MAX_GRID_CELLS: usize = 64;
const MAX_GRID_REPS: usize = 5;
const MAX_GRID_SHOTS: u64 = 20_000;
const MAX_GRID_QUBITS: usize = 6;
const MAX_GRID_DEPTH: usize = 40;

fn parse_req<'a, T: Deserialize<'a>>(input: &'a str) -> Result<T> {
    serde_json::from_str(input).map_err(|e| Error::InvalidConfig(format!("bad request: {e}")))
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string(value).map_err(|e| Error::Numerical(format!("serializing reply: {e}")))
}

fn parse_model(name: &str) -> Result<ModelKind> {
    match name.to_ascii_lowercase().as_str() {
        "linear" => Ok(ModelKind::Linear),
        "quadratic" => Ok(ModelKind::Poly { degree: 2 }),
        "exponential" => Ok(ModelKind::Exponential { fixed_shift: None }),
        other => Err(Error::InvalidConfig(format!(
            "model must be `linear`, `quadratic`, or `exponential`, got `{other}`"
        ))),
    }
}

fn parse_strategy(name: &str) -> Result<FoldStrategy> {
    match name.to_ascii_lowercase().as_str() {
        "local" => Ok(FoldStrategy::Local),
        "global" => Ok(FoldStrategy::Global),
        other => Err(Error::InvalidConfig(format!(
            "strategy must be `local` or `global`, got `{other}`"
        ))),
    }
}

fn parse_scope(name: &str) -> Result<FoldScope> {
    match name.to_ascii_lowercase().as_str() {
        "two-qubit-only" => Ok(FoldScope::TwoQubitOnly),
        "all-gates" => Ok(FoldScope::AllGates),
        other => Err(Error::InvalidConfig(format!(
            "scope must be `two-qubit-only` or `all-gates`, got `{other}`"
        ))),
    }
}

// ---------------------------------------------------------------------
// Extrapolation explorer
// ---------------------------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PointReq {
    lambda: f64,
    mean: f64,
    #[serde(default)]
    stderr: f64,
    #[serde(default)]
    shots: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExtrapolateReq {
    points: Vec<PointReq>,
    /// Model names; all three when omitted.
    models: Option<Vec<String>>,
}

/// One model's outcome: the full fit, or why it failed. `model_name` is
/// the short display form ("linear", "poly2", "exponential") alongside
/// the structured `model` field inside the fit.
#[derive(Serialize)]
#[serde(untagged)]
enum FitReply {
    Ok {
        model_name: String,
        #[serde(flatten)]
        fit: ExtrapolationFit,
    },
    Failed {
        model_name: String,
        error: String,
    },
}

#[derive(Serialize)]
struct ExtrapolateReply {
    fits: Vec<FitReply>,
    /// Index into `fits` of the fit the toolkit would report: the first
    /// one with no stability flags, else the first that succeeded.
    chosen: Option<usize>,
}

fn run_extrapolate(input: &str) -> Result<String> {
    let req: ExtrapolateReq = parse_req(input)?;
    if req.points.len() > MAX_POINTS {
        return Err(Error::InvalidConfig(format!(
            "at most {MAX_POINTS} points, got {}",
            req.points.len()
        )));
    }
    let mut points = req
        .points
        .iter()
        .map(|p| NoisePoint::new(p.lambda, p.mean, p.stderr, p.shots))
        .collect::<Result<Vec<_>>>()?;
    points.sort_by(|a, b| f64::total_cmp(&a.lambda_eff, &b.lambda_eff));

    let names = req.models.unwrap_or_else(|| {
        vec!["linear".into(), "quadratic".into(), "exponential".into()]
    });
    let models = names
        .iter()
        .map(|n| parse_model(n))
        .collect::<Result<Vec<_>>>()?;

    let mut fits = Vec::with_capacity(models.len());
    let mut first_ok = None;
    let mut first_clean = None;
    for (i, &model) in models.iter().enumerate() {
        match fit_model(&points, model) {
            Ok(mut fit) => {
                fit.flags = stability_diagnostics(&points, &fit);
                if first_ok.is_none() {
                    first_ok = Some(i);
                }
                if first_clean.is_none() && !fit.flags.any() {
                    first_clean = Some(i);
                }
                fits.push(FitReply::Ok {
                    model_name: model.to_string(),
                    fit,
                });
            }
            Err(e) => fits.push(FitReply::Failed {
                model_name: model.to_string(),
                error: e.to_string(),
            }),
        }
    }
    to_json(&ExtrapolateReply {
        fits,
        chosen: first_clean.or(first_ok),
    })
}

// ---------------------------------------------------------------------
// Fold inspector
// ---------------------------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FoldReq {
    /// Circuit in the text format (`qubits N` header, one gate per line).
    circuit: String,
    /// Noise factors to plan; `[1, 2, 3]` when omitted.
    noise_factors: Option<Vec<f64>>,
    /// `local` (default) or `global`.
    strategy: Option<String>,
    /// `two-qubit-only` (default) or `all-gates`.
    scope: Option<String>,
    #[serde(default)]
    seed: u64,
}

#[derive(Serialize)]
struct FoldEntry {
    plan: FoldingPlan,
    folded_gate_count: usize,
    /// The folded circuit, rendered back into the text format.
    folded_text: String,
}

#[derive(Serialize)]
struct FoldReply {
    n_qubits: usize,
    original_gate_count: usize,
    entries: Vec<FoldEntry>,
}

fn run_inspect_fold(input: &str) -> Result<String> {
    let req: FoldReq = parse_req(input)?;
    let circuit = Circuit::from_text(&req.circuit)?;
    if circuit.n_qubits > MAX_QUBITS {
        return Err(Error::InvalidConfig(format!(
            "demo circuits are capped at {MAX_QUBITS} qubits, got {}",
            circuit.n_qubits
        )));
    }
    if circuit.gates.len() > MAX_GATES {
        return Err(Error::InvalidConfig(format!(
            "demo circuits are capped at {MAX_GATES} gates, got {}",
            circuit.gates.len()
        )));
    }
    let factors = req.noise_factors.unwrap_or_else(|| vec![1.0, 2.0, 3.0]);
    if factors.len() > MAX_FACTORS {
        return Err(Error::InvalidConfig(format!(
            "at most {MAX_FACTORS} noise factors, got {}",
            factors.len()
        )));
    }
    for &l in &factors {
        if !(1.0..=MAX_LAMBDA).contains(&l) {
            return Err(Error::InvalidConfig(format!(
                "noise factors must lie in [1, {MAX_LAMBDA}], got {l}"
            )));
        }
    }
    let strategy = parse_strategy(req.strategy.as_deref().unwrap_or("local"))?;
    let scope = parse_scope(req.scope.as_deref().unwrap_or("two-qubit-only"))?;

    let mut entries = Vec::with_capacity(factors.len());
    for &lambda in &factors {
        let plan = plan_fold(&circuit, lambda, strategy, scope, req.seed)?;
        let folded = apply_fold(&circuit, &plan)?;
        entries.push(FoldEntry {
            folded_gate_count: folded.gates.len(),
            folded_text: folded.to_text(),
            plan,
        });
    }
    to_json(&FoldReply {
        n_qubits: circuit.n_qubits,
        original_gate_count: circuit.gates.len(),
        entries,
    })
}

// ---------------------------------------------------------------------
// Calibration grid
// ---------------------------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GridReq {
    n_qubits: Option<usize>,
    depths: Option<Vec<usize>>,
    error_probs: Option<Vec<f64>>,
    noise_factors: Option<Vec<f64>>,
    shots: Option<u64>,
    repetitions: Option<usize>,
    #[serde(default)]
    seed: u64,
}

#[derive(Serialize)]
struct GridReply {
    params: CalibrationSweepParams,
    cells: Vec<dzne_core::pipeline::studies::CalibrationCell>,
}

fn run_calibration_grid(input: &str) -> Result<String> {
    let req: GridReq = parse_req(input)?;
    let params = CalibrationSweepParams {
        n_qubits: req.n_qubits.unwrap_or(4),
        depths: req.depths.unwrap_or_else(|| vec![0, 2, 4, 8, 14, 20]),
        error_probs: req
            .error_probs
            .unwrap_or_else(|| vec![0.002, 0.008, 0.02, 0.05]),
        noise_factors: req.noise_factors.unwrap_or_else(|| vec![1.0, 2.0, 3.0]),
        shots: req.shots.unwrap_or(2000),
        repetitions: req.repetitions.unwrap_or(2),
        seed: req.seed,
    };
    if params.n_qubits > MAX_GRID_QUBITS {
        return Err(Error::InvalidConfig(format!(
            "demo sweeps are capped at {MAX_GRID_QUBITS} qubits, got {}",
            params.n_qubits
        )));
    }
    if params.depths.len() * params.error_probs.len() > MAX_GRID_CELLS {
        return Err(Error::InvalidConfig(format!(
            "demo sweeps are capped at {MAX_GRID_CELLS} cells, got {}",
            params.depths.len() * params.error_probs.len()
        )));
    }
    if params.depths.iter().any(|&d| d > MAX_GRID_DEPTH) {
        return Err(Error::InvalidConfig(format!(
            "demo sweeps are capped at two-qubit depth {MAX_GRID_DEPTH}"
        )));
    }
    if params.repetitions > MAX_GRID_REPS {
        return Err(Error::InvalidConfig(format!(
            "demo sweeps are capped at {MAX_GRID_REPS} repetitions, got {}",
            params.repetitions
        )));
    }
    if params.shots > MAX_GRID_SHOTS {
        return Err(Error::InvalidConfig(format!(
            "demo sweeps are capped at {MAX_GRID_SHOTS} shots, got {}",
            params.shots
        )));
    }
    let cells = run_calibration_sweep(&params)?;
    to_json(&GridReply { params, cells })
}

// ---------------------------------------------------------------------
// wasm exports
// ---------------------------------------------------------------------

fn reply(result: Result<String>) -> String {
    match result {
        Ok(json) => json,
        Err(e) => serde_json::json!({ "error": e.to_string() }).to_string(),
    }
}

/// Fits noise points and reports zero-noise estimates per model.
#[wasm_bindgen]
pub fn extrapolate_points(request: &str) -> String {
    reply(run_extrapolate(request))
}

/// Plans folds for a circuit at each requested noise factor.
#[wasm_bindgen]
pub fn inspect_fold(request: &str) -> String {
    reply(run_inspect_fold(request))
}

/// Runs a small calibration sweep and returns the labeled phase diagram.
#[wasm_bindgen]
pub fn calibration_grid(request: &str) -> String {
    reply(run_calibration_grid(request))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    fn parse(json: &str) -> Value {
        serde_json::from_str(json).unwrap()
    }

    #[test]
    fn extrapolation_fits_and_chooses() {
        let reply = run_extrapolate(
            r#"{"points": [
                {"lambda": 1.0, "mean": 0.90, "stderr": 0.01, "shots": 1000},
                {"lambda": 2.0, "mean": 0.80, "stderr": 0.01, "shots": 1000},
                {"lambda": 3.0, "mean": 0.70, "stderr": 0.01, "shots": 1000}
            ]}"#,
        )
        .unwrap();
        let v = parse(&reply);
        let fits = v["fits"].as_array().unwrap();
        assert_eq!(fits.len(), 3);
        // Perfectly linear data: the linear fit lands on 1.0 and is chosen.
        assert_eq!(fits[0]["model_name"], "linear");
        assert!((fits[0]["zero_noise_value"].as_f64().unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(v["chosen"], 0);
    }

    #[test]
    fn extrapolation_reports_per_model_failures() {
        // Two points cannot support a quadratic; the other models still fit.
        let reply = run_extrapolate(
            r#"{"points": [
                {"lambda": 1.0, "mean": 0.9},
                {"lambda": 3.0, "mean": 0.7}
            ], "models": ["linear", "quadratic"]}"#,
        )
        .unwrap();
        let v = parse(&reply);
        assert_eq!(v["fits"][0]["model_name"], "linear");
        assert!(v["fits"][1]["error"].as_str().unwrap().contains("distinct"));
        assert_eq!(v["chosen"], 0);
    }

    #[test]
    fn extrapolation_rejects_malformed_requests() {
        assert!(run_extrapolate("not json").is_err());
        assert!(run_extrapolate(r#"{"points": [], "bogus": 1}"#).is_err());
        // lambda below 1 violates the point contract.
        assert!(run_extrapolate(r#"{"points": [{"lambda": 0.5, "mean": 0.0}]}"#).is_err());
    }

    #[test]
    fn fold_inspection_reports_realized_factors() {
        let reply = run_inspect_fold(
            r#"{"circuit": "qubits 2\nx 0\ncnot 0 1\ncz 0 1\n",
                "noise_factors": [1.0, 3.0],
                "strategy": "global", "scope": "two-qubit-only"}"#,
        )
        .unwrap();
        let v = parse(&reply);
        assert_eq!(v["original_gate_count"], 3);
        let entries = v["entries"].as_array().unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[0]["plan"]["lambda_eff"], 1.0);
        assert_eq!(entries[0]["folded_gate_count"], 3);
        // lambda 3 over two foldable gates gives s = 2 = one full pass,
        // and a global fold replays the whole 3-gate circuit twice.
        assert_eq!(entries[1]["plan"]["lambda_eff"], 3.0);
        assert_eq!(entries[1]["folded_gate_count"], 9);
        let folded: &str = entries[1]["folded_text"].as_str().unwrap();
        assert!(folded.starts_with("qubits 2"));
    }

    #[test]
    fn fold_inspection_enforces_caps() {
        let big = format!("qubits 9\n{}", "x 0\n".repeat(3));
        let err = run_inspect_fold(&serde_json::json!({ "circuit": big }).to_string())
            .unwrap_err();
        assert!(err.to_string().contains("capped"), "{err}");

        let err = run_inspect_fold(
            r#"{"circuit": "qubits 1\nx 0\n", "noise_factors": [30.0]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("[1, 25]"), "{err}");
    }

    #[test]
    fn calibration_grid_labels_every_cell() {
        let reply = run_calibration_grid(
            r#"{"n_qubits": 4, "depths": [0, 4], "error_probs": [0.005, 0.05],
                "shots": 1500, "repetitions": 2, "seed": 9}"#,
        )
        .unwrap();
        let v = parse(&reply);
        let cells = v["cells"].as_array().unwrap();
        assert_eq!(cells.len(), 4);
        for cell in cells {
            let label = cell["label"].as_str().unwrap();
            assert!(matches!(label, "L" | "Q" | "E" | "NF"), "label {label}");
        }
        assert_eq!(v["params"]["seed"], 9);
    }

    #[test]
    fn calibration_grid_enforces_caps() {
        let err = run_calibration_grid(r#"{"repetitions": 50}"#).unwrap_err();
        assert!(err.to_string().contains("repetitions"), "{err}");
        let err = run_calibration_grid(r#"{"shots": 1000000}"#).unwrap_err();
        assert!(err.to_string().contains("shots"), "{err}");
    }

    #[test]
    fn wasm_wrappers_fold_errors_into_json() {
        let v = parse(&extrapolate_points("not json"));
        assert!(v["error"].as_str().unwrap().contains("bad request"));
        let v = parse(&inspect_fold(r#"{"circuit": "qubits 1\nnope 0\n"}"#));
        assert!(v["error"].as_str().unwrap().contains("unknown gate"));
    }

    #[test]
    fn identical_requests_reproduce_identical_replies() {
        let req = r#"{"n_qubits": 4, "depths": [0, 2], "error_probs": [0.01],
                      "repetitions": 2, "seed": 3}"#;
        assert_eq!(
            run_calibration_grid(req).unwrap(),
            run_calibration_grid(req).unwrap()
        );
    }
}
