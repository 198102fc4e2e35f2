//! Windowed angular distance constraints between frame embeddings.

use crate::error::{Error, Result};
use crate::model::{
    gaussian_weight, row_norm, DistanceGraph, EmbeddingSequence, PairConstraint,
    UNIT_NORM_TOLERANCE,
};

pub const DEFAULT_WINDOW: usize = 30;
pub const DEFAULT_SIGMA: f64 = 10.0;
pub const DEFAULT_POWER: f64 = 1.0;

/// Window, locality scale and distance power used to build a graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphConfig {
    pub window: usize,
    pub sigma: f64,
    pub power: f64,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            window: DEFAULT_WINDOW,
            sigma: DEFAULT_SIGMA,
            power: DEFAULT_POWER,
        }
    }
}

impl GraphConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window < 1 {
            return Err(Error::domain("window must be at least 1"));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::domain("sigma must be positive"));
        }
        if !(self.power.is_finite() && self.power > 0.0) {
            return Err(Error::domain("power must be positive"));
        }
        Ok(())
    }
}

/// Scales every row to unit length. Idempotent on normalized input.
pub fn normalize_embeddings(seq: &EmbeddingSequence) -> Result<EmbeddingSequence> {
    let mut data = Vec::with_capacity(seq.as_flat().len());
    for (i, row) in seq.rows().enumerate() {
        let norm = row_norm(row);
        if norm == 0.0 {
            return Err(Error::domain(format!("row {i} is the zero vector")));
        }
        data.extend(row.iter().map(|v| v / norm));
    }
    Ok(seq.with_normalized_data(data))
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

fn arccos_clamped(cos: f64) -> f64 {
    cos.clamp(-1.0, 1.0).acos()
}

/// Angle between two unit vectors, in `[0, pi]`.
///
/// Dot products that overshoot ±1 through rounding are clamped.
pub fn angular_distance(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::domain(format!(
            "vectors have different lengths ({} and {})",
            u.len(),
            v.len()
        )));
    }
    for (name, x) in [("first", u), ("second", v)] {
        let norm = row_norm(x);
        if (norm - 1.0).abs() > UNIT_NORM_TOLERANCE {
            return Err(Error::domain(format!("{name} vector has norm {norm}, expected 1")));
        }
    }
    Ok(arccos_clamped(dot(u, v)))
}

/// Number of pairs `(i, j)` with `0 < i - j <= window` over `frame_count` frames.
pub fn expected_pair_count(frame_count: usize, window: usize) -> usize {
    (1..=window.min(frame_count.saturating_sub(1)))
        .map(|k| frame_count - k)
        .sum()
}

/// Builds the windowed constraint set, ordered by `i` then `j`.
///
/// Each pair carries `arccos(z_i · z_j)^power` and the Gaussian weight of
/// its temporal gap.
pub fn build_pair_graph(seq: &EmbeddingSequence, cfg: &GraphConfig) -> Result<DistanceGraph> {
    cfg.validate()?;
    if !seq.is_normalized() {
        return Err(Error::domain("embeddings must be normalized before building the graph"));
    }
    let t = seq.frame_count();
    let reach = cfg.window.min(t - 1);
    let weights: Vec<f64> = (0..=reach).map(|gap| gaussian_weight(gap, cfg.sigma)).collect();

    let mut pairs = Vec::with_capacity(expected_pair_count(t, cfg.window));
    for i in 1..t {
        let zi = seq.row(i);
        for j in i.saturating_sub(reach)..i {
            let angle = arccos_clamped(dot(zi, seq.row(j)));
            let distance = if cfg.power == 1.0 { angle } else { angle.powf(cfg.power) };
            pairs.push(PairConstraint::new(i, j, distance, weights[i - j])?);
        }
    }
    DistanceGraph::from_pairs(t, cfg.window, Some(cfg.sigma), cfg.power, seq.source_tag(), pairs)
}
