use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::linearity_score;

pub const DEFAULT_LAMBDA: f64 = 1e-2;
pub const DEFAULT_SOLVER_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_MAX_SOLVER_ITERATIONS: usize = 5000;

/// Regularization and solver settings for a fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FitConfigRepr")]
pub struct FitConfig {
    lambda: f64,
    solver_tolerance: f64,
    max_solver_iterations: usize,
}

#[derive(Deserialize)]
struct FitConfigRepr {
    lambda: f64,
    solver_tolerance: f64,
    max_solver_iterations: usize,
}

impl TryFrom<FitConfigRepr> for FitConfig {
    type Error = Error;

    fn try_from(r: FitConfigRepr) -> Result<Self> {
        FitConfig::new(r.lambda, r.solver_tolerance, r.max_solver_iterations)
    }
}

impl FitConfig {
    pub fn new(lambda: f64, solver_tolerance: f64, max_solver_iterations: usize) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::domain("lambda must be positive"));
        }
        if !(solver_tolerance > 0.0 && solver_tolerance <= 1e-6) {
            return Err(Error::domain(format!(
                "solver tolerance must lie in (0, 1e-6], got {solver_tolerance}"
            )));
        }
        if max_solver_iterations < 1 {
            return Err(Error::domain("max solver iterations must be at least 1"));
        }
        Ok(FitConfig {
            lambda,
            solver_tolerance,
            max_solver_iterations,
        })
    }

    pub fn with_lambda(lambda: f64) -> Result<Self> {
        Self::new(lambda, DEFAULT_SOLVER_TOLERANCE, DEFAULT_MAX_SOLVER_ITERATIONS)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn solver_tolerance(&self) -> f64 {
        self.solver_tolerance
    }

    pub fn max_solver_iterations(&self) -> usize {
        self.max_solver_iterations
    }
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            lambda: DEFAULT_LAMBDA,
            solver_tolerance: DEFAULT_SOLVER_TOLERANCE,
            max_solver_iterations: DEFAULT_MAX_SOLVER_ITERATIONS,
        }
    }
}

/// Graph settings recorded alongside a fitted curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub window: usize,
    pub sigma: Option<f64>,
    pub power: f64,
    pub source_tag: String,
}

/// Normalized, nondecreasing progress samples pinned to 0 and 1 at the ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProgressCurve(Vec<f64>);

impl ProgressCurve {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::domain("a progress curve needs at least 2 samples"));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0) {
            return Err(Error::domain("progress values must lie in [0, 1]"));
        }
        if values[0] != 0.0 || values[values.len() - 1] != 1.0 {
            return Err(Error::domain("progress curve must start at 0 and end at 1"));
        }
        if let Some(k) = values.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::domain(format!(
                "progress curve decreases between samples {k} and {}",
                k + 1
            )));
        }
        Ok(ProgressCurve(values))
    }

    /// The identity progress `k / (T - 1)`.
    pub fn linear(frame_count: usize) -> Result<Self> {
        if frame_count < 2 {
            return Err(Error::domain("a progress curve needs at least 2 samples"));
        }
        let last = (frame_count - 1) as f64;
        Self::new((0..frame_count).map(|k| k as f64 / last).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// Piecewise-linear evaluation at a fractional frame coordinate, clamped to the range.
    pub fn eval(&self, t: f64) -> f64 {
        crate::interp::sample(&self.0, t)
    }
}

impl TryFrom<Vec<f64>> for ProgressCurve {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        ProgressCurve::new(v)
    }
}

impl From<ProgressCurve> for Vec<f64> {
    fn from(c: ProgressCurve) -> Self {
        c.0
    }
}

/// A fitted semantic progress function with its normalized form and score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpfCurveRepr")]
pub struct SpfCurve {
    raw: Vec<f64>,
    normalized: ProgressCurve,
    fit_config: FitConfig,
    graph: GraphSummary,
    linearity_score: f64,
}

#[derive(Deserialize)]
struct SpfCurveRepr {
    raw: Vec<f64>,
    normalized: ProgressCurve,
    fit_config: FitConfig,
    graph: GraphSummary,
    linearity_score: f64,
}

impl TryFrom<SpfCurveRepr> for SpfCurve {
    type Error = Error;

    fn try_from(r: SpfCurveRepr) -> Result<Self> {
        let curve = SpfCurve::new(r.raw, r.normalized, r.fit_config, r.graph)?;
        if (curve.linearity_score - r.linearity_score).abs() > 1e-9 {
            return Err(Error::domain(format!(
                "stored linearity score {} disagrees with the curve ({})",
                r.linearity_score, curve.linearity_score
            )));
        }
        Ok(SpfCurve {
            linearity_score: r.linearity_score,
            ..curve
        })
    }
}

/// Relative bound on `|sum(S)|` for a raw regularized fit.
pub const GAUGE_TOLERANCE: f64 = 1e-8;

pub fn gauge_ok(raw: &[f64]) -> bool {
    let sum: f64 = raw.iter().sum();
    let l1: f64 = raw.iter().map(|v| v.abs()).sum();
    sum.abs() <= GAUGE_TOLERANCE * l1.max(1.0)
}

impl SpfCurve {
    pub fn new(
        raw: Vec<f64>,
        normalized: ProgressCurve,
        fit_config: FitConfig,
        graph: GraphSummary,
    ) -> Result<Self> {
        if raw.len() != normalized.len() {
            return Err(Error::domain(format!(
                "raw curve has {} samples but normalized has {}",
                raw.len(),
                normalized.len()
            )));
        }
        if raw.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("raw curve contains non-finite values"));
        }
        if !gauge_ok(&raw) {
            return Err(Error::domain("raw curve violates the zero-sum gauge"));
        }
        let linearity_score = linearity_score(&normalized);
        Ok(SpfCurve {
            raw,
            normalized,
            fit_config,
            graph,
            linearity_score,
        })
    }

    pub fn frame_count(&self) -> usize {
        self.raw.len()
    }

    pub fn raw(&self) -> &[f64] {
        &self.raw
    }

    pub fn normalized(&self) -> &ProgressCurve {
        &self.normalized
    }

    pub fn fit_config(&self) -> &FitConfig {
        &self.fit_config
    }

    pub fn graph(&self) -> &GraphSummary {
        &self.graph
    }

    pub fn linearity_score(&self) -> f64 {
        self.linearity_score
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_config_validation() {
        assert!(FitConfig::with_lambda(0.0).is_err());
        assert!(FitConfig::with_lambda(-1.0).is_err());
        assert!(FitConfig::new(1e-2, 1e-5, 10).is_err());
        assert!(FitConfig::new(1e-2, 1e-10, 0).is_err());
        assert!(FitConfig::new(1e-2, 1e-6, 1).is_ok());
    }

    #[test]
    fn progress_curve_validation() {
        assert!(ProgressCurve::new(vec![0.0, 1.0]).is_ok());
        assert!(ProgressCurve::new(vec![0.0, 0.5, 0.4, 1.0]).is_err());
        assert!(ProgressCurve::new(vec![0.1, 1.0]).is_err());
        assert!(ProgressCurve::new(vec![0.0, 0.9]).is_err());
        assert!(ProgressCurve::new(vec![0.0]).is_err());
    }

    #[test]
    fn spf_curve_rejects_gauge_violation() {
        let graph = GraphSummary {
            window: 1,
            sigma: Some(10.0),
            power: 1.0,
            source_tag: String::new(),
        };
        let prog = ProgressCurve::linear(2).unwrap();
        assert!(SpfCurve::new(vec![1.0, 1.0], prog.clone(), FitConfig::default(), graph.clone()).is_err());
        assert!(SpfCurve::new(vec![-0.5, 0.5], prog, FitConfig::default(), graph).is_ok());
    }
}
