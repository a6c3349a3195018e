//! Zero-noise extrapolation: fit expectation-vs-noise-factor data with
//! linear, polynomial, or mono-exponential models, evaluate at zero noise,
//! and diagnose unstable fits.
//!
//! The mono-exponential model is `y(lambda) = S + A*exp(-lambda/L)`, fit by
//! variable projection: the decay rate `gamma = 1/L` is the only nonlinear
//! parameter, so we scan a log-spaced gamma grid, solve the linear
//! subproblem for `(S, A)` at each grid point, and polish the best gamma by
//! golden-section search. Deterministic, no iterative-solver tuning, and
//! robust down to three-point fits.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// RMSE improvement a more complex model must deliver before it is
/// preferred during calibration.
pub const DEFAULT_PREFERENCE_THRESHOLD: f64 = 0.001;
/// Best-model error beyond which a calibration cell is labeled `NF`.
pub const DEFAULT_NF_THRESHOLD: f64 = 0.4;

/// Gamma-grid bounds for the exponential fit: from "no visible decay over
/// lambda in [1, 5]" down to "fully decayed by lambda = 1".
const GAMMA_LO: f64 = 1e-3;
const GAMMA_HI: f64 = 10.0;
const GAMMA_GRID: usize = 60;
/// A refined gamma within 20% of a grid boundary counts as pinned, and the
/// fit is flagged degenerate: the data does not constrain the decay rate.
const GAMMA_PIN_FACTOR: f64 = 1.2;
/// Relative tolerance of the golden-section gamma refinement.
const GAMMA_REL_TOL: f64 = 1e-6;
/// Relative flatness of the rss-vs-gamma profile that marks a degenerate
/// exponential fit.
const FLAT_RSS_REL: f64 = 1e-10;
/// Condition-number ceiling for the delta-method covariance solve.
const MAX_CONDITION: f64 = 1e10;

/// One measured expectation value at one effective noise factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoisePoint {
    /// The noise factor the folds actually realized (never the requested
    /// one).
    pub lambda_eff: f64,
    pub mean: f64,
    pub stderr: f64,
    /// Shots behind the estimate; 0 in exact-simulation mode.
    pub shots: u64,
}

impl NoisePoint {
    pub fn new(lambda_eff: f64, mean: f64, stderr: f64, shots: u64) -> Result<NoisePoint> {
        if !lambda_eff.is_finite() || lambda_eff < 1.0 {
            return Err(Error::Fit(format!(
                "lambda_eff must be finite and >= 1, got {lambda_eff}"
            )));
        }
        if !mean.is_finite() || !(-1.5..=1.5).contains(&mean) {
            return Err(Error::Fit(format!(
                "mean {mean} outside [-1.5, 1.5]; not a Pauli expectation"
            )));
        }
        if !stderr.is_finite() || stderr < 0.0 {
            return Err(Error::Fit(format!("stderr must be >= 0, got {stderr}")));
        }
        Ok(NoisePoint {
            lambda_eff,
            mean,
            stderr,
            shots,
        })
    }
}

/// The fit family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ModelKind {
    Linear,
    Poly { degree: usize },
    /// `y = S + A*exp(-lambda/L)`; `fixed_shift` pins `S` instead of
    /// fitting it.
    Exponential { fixed_shift: Option<f64> },
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelKind::Linear => write!(f, "linear"),
            ModelKind::Poly { degree } => write!(f, "poly{degree}"),
            ModelKind::Exponential { fixed_shift: None } => write!(f, "exponential"),
            ModelKind::Exponential {
                fixed_shift: Some(s),
            } => write!(f, "exponential(S={s})"),
        }
    }
}

/// Instability diagnostics; all false means a clean fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FitFlags {
    /// The data is constant within error; extrapolation adds no information.
    pub lambda_independent: bool,
    /// The zero-noise value left the physically allowed range.
    pub out_of_range: bool,
    /// The optimizer could not identify the model parameters.
    pub degenerate_fit: bool,
}

impl FitFlags {
    pub fn any(&self) -> bool {
        self.lambda_independent || self.out_of_range || self.degenerate_fit
    }

    pub fn union(self, other: FitFlags) -> FitFlags {
        FitFlags {
            lambda_independent: self.lambda_independent || other.lambda_independent,
            out_of_range: self.out_of_range || other.out_of_range,
            degenerate_fit: self.degenerate_fit || other.degenerate_fit,
        }
    }
}

impl std::fmt::Display for FitFlags {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut names = Vec::new();
        if self.lambda_independent {
            names.push("lambda_independent");
        }
        if self.out_of_range {
            names.push("out_of_range");
        }
        if self.degenerate_fit {
            names.push("degenerate_fit");
        }
        if names.is_empty() {
            write!(f, "-")
        } else {
            write!(f, "{}", names.join("+"))
        }
    }
}

/// A fitted extrapolation with its zero-noise evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationFit {
    pub model: ModelKind,
    /// Linear/poly: ascending-power coefficients. Exponential: `[S, A, L]`.
    pub params: Vec<f64>,
    /// The model evaluated at lambda = 0.
    pub zero_noise_value: f64,
    pub zero_noise_stderr: f64,
    /// Weighted residual sum of squares at the optimum (plain rss under
    /// unit weights).
    pub rss: f64,
    pub flags: FitFlags,
}

impl ExtrapolationFit {
    /// Evaluates the fitted model at an arbitrary noise factor.
    pub fn evaluate(&self, lambda: f64) -> f64 {
        match self.model {
            ModelKind::Linear | ModelKind::Poly { .. } => {
                let mut acc = 0.0;
                for &c in self.params.iter().rev() {
                    acc = acc * lambda + c;
                }
                acc
            }
            ModelKind::Exponential { .. } => {
                let (s, a, l) = (self.params[0], self.params[1], self.params[2]);
                s + a * (-lambda / l).exp()
            }
        }
    }
}

/// Per-point weights: `1/stderr^2`, or all-unit when any stderr is zero
/// (exact-simulation data), which would otherwise put infinite weight on
/// one point. Returns `(weights, unit_mode)`.
fn weights(points: &[NoisePoint]) -> (Vec<f64>, bool) {
    let unit = points.iter().any(|p| p.stderr <= 0.0);
    let w = points
        .iter()
        .map(|p| if unit { 1.0 } else { 1.0 / (p.stderr * p.stderr) })
        .collect();
    (w, unit)
}

fn distinct_lambdas(points: &[NoisePoint]) -> usize {
    let mut ls: Vec<f64> = points.iter().map(|p| p.lambda_eff).collect();
    ls.sort_by(f64::total_cmp);
    ls.dedup();
    ls.len()
}

fn validate_points(points: &[NoisePoint]) -> Result<()> {
    for p in points {
        // Re-check the type invariants; points may arrive from
        // deserialization without passing through `new`.
        NoisePoint::new(p.lambda_eff, p.mean, p.stderr, p.shots)?;
    }
    Ok(())
}

/// Weighted straight-line fit; the zero-noise value is the intercept.
pub fn fit_linear(points: &[NoisePoint]) -> Result<ExtrapolationFit> {
    fit_poly_as(points, 1, ModelKind::Linear)
}

/// Weighted polynomial fit of the given degree via QR of the weighted
/// design matrix (no explicit normal-equation inversion).
pub fn fit_poly(points: &[NoisePoint], degree: usize) -> Result<ExtrapolationFit> {
    fit_poly_as(points, degree, ModelKind::Poly { degree })
}

fn fit_poly_as(points: &[NoisePoint], degree: usize, model: ModelKind) -> Result<ExtrapolationFit> {
    validate_points(points)?;
    let n = points.len();
    let p = degree + 1;
    let distinct = distinct_lambdas(points);
    if distinct < p {
        return Err(Error::Fit(format!(
            "degree-{degree} fit needs {p} distinct noise factors, got {distinct}"
        )));
    }
    let (w, unit_mode) = weights(points);

    // Weighted design: rows scaled by sqrt(w).
    let mut xw = DMatrix::<f64>::zeros(n, p);
    let mut yw = DVector::<f64>::zeros(n);
    for (i, pt) in points.iter().enumerate() {
        let sw = w[i].sqrt();
        let mut pow = 1.0;
        for j in 0..p {
            xw[(i, j)] = sw * pow;
            pow *= pt.lambda_eff;
        }
        yw[i] = sw * pt.mean;
    }

    let qr = xw.clone().qr();
    let r = qr.r();
    let q = qr.q();
    let r_inv = r
        .try_inverse()
        .ok_or_else(|| Error::Numerical("singular design matrix in polynomial fit".into()))?;
    let beta = &r_inv * (q.transpose() * yw);

    let mut rss = 0.0;
    for (i, pt) in points.iter().enumerate() {
        let mut fit = 0.0;
        let mut pow = 1.0;
        for j in 0..p {
            fit += beta[j] * pow;
            pow *= pt.lambda_eff;
        }
        let r = pt.mean - fit;
        rss += w[i] * r * r;
    }

    // cov(beta) = (Xw^T Xw)^-1 = R^-1 R^-T. Under known per-point variances
    // this is the full covariance; under unit weights it is scaled by the
    // residual variance estimate s^2 = rss/(n-p) (zero when the fit
    // interpolates exactly, n == p).
    let mut cov = &r_inv * r_inv.transpose();
    if unit_mode {
        let s2 = if n > p { rss / (n - p) as f64 } else { 0.0 };
        cov *= s2;
    }
    let zero_noise_stderr = cov[(0, 0)].max(0.0).sqrt();

    Ok(ExtrapolationFit {
        model,
        params: beta.iter().cloned().collect(),
        zero_noise_value: beta[0],
        zero_noise_stderr,
        rss,
        flags: FitFlags::default(),
    })
}

/// Linear subproblem of the exponential fit: best `(S, A)` (or `A` alone
/// when the shift is pinned) at a fixed decay rate. Returns
/// `(s, a, weighted rss)`.
fn exp_linear_solve(
    points: &[NoisePoint],
    w: &[f64],
    gamma: f64,
    fixed_shift: Option<f64>,
) -> (f64, f64, f64) {
    match fixed_shift {
        Some(s0) => {
            // Single-column least squares for A on y - s0.
            let mut num = 0.0;
            let mut den = 0.0;
            for (i, pt) in points.iter().enumerate() {
                let e = (-gamma * pt.lambda_eff).exp();
                num += w[i] * e * (pt.mean - s0);
                den += w[i] * e * e;
            }
            let a = if den > 0.0 { num / den } else { 0.0 };
            let mut rss = 0.0;
            for (i, pt) in points.iter().enumerate() {
                let r = pt.mean - s0 - a * (-gamma * pt.lambda_eff).exp();
                rss += w[i] * r * r;
            }
            (s0, a, rss)
        }
        None => {
            // 2x2 weighted normal equations for (S, A).
            let (mut sw, mut se, mut see, mut sy, mut sey) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for (i, pt) in points.iter().enumerate() {
                let e = (-gamma * pt.lambda_eff).exp();
                sw += w[i];
                se += w[i] * e;
                see += w[i] * e * e;
                sy += w[i] * pt.mean;
                sey += w[i] * e * pt.mean;
            }
            let det = sw * see - se * se;
            let (s, a) = if det.abs() > 1e-300 {
                ((see * sy - se * sey) / det, (sw * sey - se * sy) / det)
            } else {
                // All exponentials numerically identical: fall back to a
                // constant fit, with A unidentifiable.
                (sy / sw, 0.0)
            };
            let mut rss = 0.0;
            for (i, pt) in points.iter().enumerate() {
                let r = pt.mean - s - a * (-gamma * pt.lambda_eff).exp();
                rss += w[i] * r * r;
            }
            (s, a, rss)
        }
    }
}

/// Mono-exponential fit `y = S + A*exp(-lambda/L)` by variable projection
/// over the decay rate. Flags (rather than fails) fits where the decay
/// rate is unidentifiable: flat rss profile, rate pinned at the search
/// boundary, or an ill-conditioned curvature matrix.
pub fn fit_exponential(
    points: &[NoisePoint],
    fixed_shift: Option<f64>,
) -> Result<ExtrapolationFit> {
    validate_points(points)?;
    let n = points.len();
    let n_params = if fixed_shift.is_some() { 2 } else { 3 };
    let min_distinct = if fixed_shift.is_some() { 2 } else { 3 };
    let distinct = distinct_lambdas(points);
    if distinct < min_distinct {
        return Err(Error::Fit(format!(
            "exponential fit needs {min_distinct} distinct noise factors, got {distinct}"
        )));
    }
    let (w, unit_mode) = weights(points);

    // Log-spaced gamma grid.
    let ln_lo = GAMMA_LO.ln();
    let ln_hi = GAMMA_HI.ln();
    let mut best_i = 0;
    let mut rss_grid = Vec::with_capacity(GAMMA_GRID);
    for i in 0..GAMMA_GRID {
        let g = (ln_lo + (ln_hi - ln_lo) * i as f64 / (GAMMA_GRID - 1) as f64).exp();
        let (_, _, rss) = exp_linear_solve(points, &w, g, fixed_shift);
        rss_grid.push(rss);
        if rss < rss_grid[best_i] {
            best_i = i;
        }
    }

    let rss_min_grid = rss_grid.iter().cloned().fold(f64::INFINITY, f64::min);
    let rss_max_grid = rss_grid.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut flat = (rss_max_grid - rss_min_grid) <= FLAT_RSS_REL * rss_max_grid.abs().max(1e-30);
    if !unit_mode {
        // With real error bars the weighted rss is a chi-square, so the
        // drop it gains from tuning the one nonlinear parameter can be
        // judged statistically: a drop below the 95th percentile of
        // chi-square(1) means every decay rate fits the data equally well
        // and gamma is unidentifiable.
        let chi2_1 = ChiSquared::new(1.0).expect("positive dof").inverse_cdf(0.95);
        if rss_max_grid - rss_min_grid < chi2_1 {
            flat = true;
        }
    }

    // Golden-section refinement on ln(gamma) around the best grid point.
    let grid_gamma =
        |i: usize| (ln_lo + (ln_hi - ln_lo) * i as f64 / (GAMMA_GRID - 1) as f64).exp();
    let mut lo = grid_gamma(best_i.saturating_sub(1)).ln();
    let mut hi = grid_gamma((best_i + 1).min(GAMMA_GRID - 1)).ln();
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let eval = |ln_g: f64| exp_linear_solve(points, &w, ln_g.exp(), fixed_shift).2;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = eval(x1);
    let mut f2 = eval(x2);
    while hi - lo > GAMMA_REL_TOL {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = eval(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = eval(x2);
        }
    }
    let gamma = ((lo + hi) / 2.0).exp();
    let (s, a, rss) = exp_linear_solve(points, &w, gamma, fixed_shift);
    let l = 1.0 / gamma;

    let pinned = !(GAMMA_LO * GAMMA_PIN_FACTOR..=GAMMA_HI / GAMMA_PIN_FACTOR).contains(&gamma);
    let mut flags = FitFlags {
        degenerate_fit: flat || pinned,
        ..FitFlags::default()
    };

    // Delta-method standard error of S + A at the optimum. Jacobian
    // columns: d/dS = 1, d/dA = exp(-lambda/L), d/dL = A*exp(-lambda/L)*lambda/L^2.
    let mut j = DMatrix::<f64>::zeros(n, n_params);
    for (i, pt) in points.iter().enumerate() {
        let e = (-pt.lambda_eff / l).exp();
        let d_l = a * e * pt.lambda_eff / (l * l);
        if fixed_shift.is_some() {
            j[(i, 0)] = e;
            j[(i, 1)] = d_l;
        } else {
            j[(i, 0)] = 1.0;
            j[(i, 1)] = e;
            j[(i, 2)] = d_l;
        }
    }
    let mut m = DMatrix::<f64>::zeros(n_params, n_params);
    for r in 0..n_params {
        for c in 0..n_params {
            let mut acc = 0.0;
            for i in 0..n {
                acc += w[i] * j[(i, r)] * j[(i, c)];
            }
            m[(r, c)] = acc;
        }
    }
    let svals = m.clone().svd(false, false).singular_values;
    let smax = svals.iter().cloned().fold(0.0, f64::max);
    let smin = svals.iter().cloned().fold(f64::INFINITY, f64::min);
    if smin <= 0.0 || smax / smin > MAX_CONDITION {
        flags.degenerate_fit = true;
    }
    let scale = if unit_mode {
        if n > n_params {
            rss / (n - n_params) as f64
        } else {
            0.0
        }
    } else {
        1.0
    };
    // g = gradient of (S + A) in the free parameters.
    let g: Vec<f64> = if fixed_shift.is_some() {
        vec![1.0, 0.0]
    } else {
        vec![1.0, 1.0, 0.0]
    };
    let var = match m.clone().try_inverse() {
        Some(minv) => {
            let mut acc = 0.0;
            for r in 0..n_params {
                for c in 0..n_params {
                    acc += g[r] * minv[(r, c)] * g[c];
                }
            }
            scale * acc
        }
        None => match m.svd(true, true).pseudo_inverse(1e-12) {
            Ok(minv) => {
                let mut acc = 0.0;
                for r in 0..n_params {
                    for c in 0..n_params {
                        acc += g[r] * minv[(r, c)] * g[c];
                    }
                }
                scale * acc
            }
            Err(_) => f64::INFINITY,
        },
    };
    let zero_noise_stderr = if var.is_finite() { var.max(0.0).sqrt() } else { f64::INFINITY };

    Ok(ExtrapolationFit {
        model: ModelKind::Exponential { fixed_shift },
        params: vec![s, a, l],
        zero_noise_value: s + a,
        zero_noise_stderr,
        rss,
        flags,
    })
}

/// Dispatches to the fitter matching `model`.
pub fn fit_model(points: &[NoisePoint], model: ModelKind) -> Result<ExtrapolationFit> {
    match model {
        ModelKind::Linear => fit_linear(points),
        ModelKind::Poly { degree } => fit_poly(points, degree),
        ModelKind::Exponential { fixed_shift } => fit_exponential(points, fixed_shift),
    }
}

/// Post-fit instability checks, returned as the union with the fit's own
/// flags.
///
/// `lambda_independent`: the weighted chi-square of a constant-only fit
/// stays below the 95th-percentile threshold for N-1 degrees of freedom —
/// the data cannot distinguish itself from flat, so any extrapolated trend
/// is noise. With exact (zero-stderr) data the chi-square is undefined and
/// the flag reduces to exact constancy.
///
/// `out_of_range`: |zero-noise value| exceeds 1 + 3*stderr, impossible for
/// a +/-1-bounded Pauli observable by more than benign fit slack.
pub fn stability_diagnostics(points: &[NoisePoint], fit: &ExtrapolationFit) -> FitFlags {
    let mut flags = fit.flags;
    let n = points.len();
    if n >= 2 {
        let exact = points.iter().any(|p| p.stderr <= 0.0);
        if exact {
            let lo = points.iter().map(|p| p.mean).fold(f64::INFINITY, f64::min);
            let hi = points.iter().map(|p| p.mean).fold(f64::NEG_INFINITY, f64::max);
            if hi - lo < 1e-12 {
                flags.lambda_independent = true;
            }
        } else {
            let (w, _) = weights(points);
            let wsum: f64 = w.iter().sum();
            let c: f64 = points
                .iter()
                .zip(&w)
                .map(|(p, wi)| wi * p.mean)
                .sum::<f64>()
                / wsum;
            let chi2: f64 = points
                .iter()
                .zip(&w)
                .map(|(p, wi)| wi * (p.mean - c) * (p.mean - c))
                .sum();
            let dist = ChiSquared::new((n - 1) as f64).expect("positive dof");
            if chi2 < dist.inverse_cdf(0.95) {
                flags.lambda_independent = true;
            }
        }
    }
    if fit.zero_noise_value.abs() > 1.0 + 3.0 * fit.zero_noise_stderr {
        flags.out_of_range = true;
    }
    flags
}

/// Calibration label for a cell of the phase diagram.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChoiceLabel {
    L,
    Q,
    E,
    NF,
}

impl std::fmt::Display for ChoiceLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ChoiceLabel::L => write!(f, "L"),
            ChoiceLabel::Q => write!(f, "Q"),
            ChoiceLabel::E => write!(f, "E"),
            ChoiceLabel::NF => write!(f, "NF"),
        }
    }
}

impl std::str::FromStr for ChoiceLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<ChoiceLabel> {
        match s {
            "L" => Ok(ChoiceLabel::L),
            "Q" => Ok(ChoiceLabel::Q),
            "E" => Ok(ChoiceLabel::E),
            "NF" => Ok(ChoiceLabel::NF),
            other => Err(Error::InvalidConfig(format!("unknown model label `{other}`"))),
        }
    }
}

/// Picks the model a calibration cell should use. `candidates` are
/// `(label, rmse vs ideal)` ordered from simplest to most complex; a more
/// complex model wins only by improving RMSE by strictly more than
/// `preference_threshold` over the currently selected one. If even the
/// best model misses the ideal by more than `nf_threshold`, no fit is
/// trustworthy and the cell is `NF`.
pub fn select_model(
    candidates: &[(ChoiceLabel, f64)],
    preference_threshold: f64,
    nf_threshold: f64,
    best_abs_error: f64,
) -> Result<ChoiceLabel> {
    if candidates.is_empty() {
        return Err(Error::Fit("no candidate models to select from".into()));
    }
    if best_abs_error > nf_threshold {
        return Ok(ChoiceLabel::NF);
    }
    let norm = |x: f64| if x.is_nan() { f64::INFINITY } else { x };
    let mut selected = 0;
    for i in 1..candidates.len() {
        if norm(candidates[selected].1) - norm(candidates[i].1) > preference_threshold {
            selected = i;
        }
    }
    Ok(candidates[selected].0)
}
