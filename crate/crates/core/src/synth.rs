//! Synthetic rotations with known pacing, an ideal warp-following
//! generator, and recovery metrics.
//!
//! Frame `k` embeds the angle `θ_k` as `(cos θ_k, sin θ_k, 0, ..)`, so the
//! angular distance between two frames is exactly `|θ_i - θ_j|` while the
//! total rotation stays within `π`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_embeddings, linearity_score};
use crate::graph::GraphConfig;
use crate::interp;
use crate::model::{BandSchedule, EmbeddingSequence, FitConfig, Profile, SyntheticTruth};
use crate::warp::refine_positions;

pub const DEFAULT_TOTAL_ANGLE: f64 = FRAC_PI_2;
pub const DEFAULT_RATE: f64 = 3.0;

const SOURCE_TAG: &str = "synthetic-rotation";

/// Angles `Θ · profile(k / (T-1))` for `k = 0..T`, with exact endpoints.
pub fn profile_angles(frame_count: usize, profile: Profile, total_angle: f64) -> Result<Vec<f64>> {
    if frame_count < 2 {
        return Err(Error::domain("a rotation needs at least 2 frames"));
    }
    if !(total_angle > 0.0 && total_angle <= PI) {
        return Err(Error::domain(format!(
            "total angle must lie in (0, pi], got {total_angle}"
        )));
    }
    profile.validate()?;
    let last = (frame_count - 1) as f64;
    let mut theta: Vec<f64> = (0..frame_count)
        .map(|k| total_angle * profile.fraction(k as f64 / last))
        .collect();
    theta[0] = 0.0;
    theta[frame_count - 1] = total_angle;
    Ok(theta)
}

/// Places each angle on the first coordinate plane of `R^dim`.
pub fn embed_angles(theta: &[f64], dim: usize) -> Result<EmbeddingSequence> {
    if dim < 2 {
        return Err(Error::domain("synthetic embeddings need at least 2 dimensions"));
    }
    let mut data = vec![0.0; theta.len() * dim];
    for (row, t) in data.chunks_exact_mut(dim).zip(theta) {
        row[0] = t.cos();
        row[1] = t.sin();
    }
    EmbeddingSequence::from_flat(theta.len(), dim, data, None, SOURCE_TAG)?.assume_normalized()
}

pub fn generate_rotation(
    frame_count: usize,
    dim: usize,
    profile: Profile,
    total_angle: f64,
) -> Result<(EmbeddingSequence, SyntheticTruth)> {
    let theta = profile_angles(frame_count, profile, total_angle)?;
    let seq = embed_angles(&theta, dim)?;
    Ok((seq, SyntheticTruth::new(theta, Some(profile))?))
}

/// Adds seeded isotropic Gaussian noise to every component, then renormalizes.
pub fn add_noise(seq: &EmbeddingSequence, std_dev: f64, seed: u64) -> Result<EmbeddingSequence> {
    if !(std_dev.is_finite() && std_dev >= 0.0) {
        return Err(Error::domain(format!("noise level must be nonnegative, got {std_dev}")));
    }
    let normal = Normal::new(0.0, std_dev).map_err(|e| Error::domain(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = seq.as_flat().iter().map(|v| v + normal.sample(&mut rng)).collect();
    let noisy =
        EmbeddingSequence::from_flat(seq.frame_count(), seq.dim(), data, seq.fps(), seq.source_tag())?;
    crate::graph::normalize_embeddings(&noisy)
}

/// Ideal generator: shows the truth's content at the warped times.
///
/// `gain` in `(0, 1]` models partial compliance, following
/// `(1 - gain)·k + gain·τ_k` instead of `τ_k`.
pub fn simulate_generator(
    truth: &SyntheticTruth,
    tau: &[f64],
    gain: f64,
    dim: usize,
) -> Result<EmbeddingSequence> {
    let t = truth.frame_count();
    if tau.len() != t {
        return Err(Error::domain(format!(
            "warp has {} positions for {t} frames",
            tau.len()
        )));
    }
    if !(0.0..=1.0).contains(&gain) {
        return Err(Error::domain(format!("response gain must lie in [0, 1], got {gain}")));
    }
    let last = (t - 1) as f64;
    if let Some(k) = tau.iter().position(|v| !(0.0..=last).contains(v)) {
        return Err(Error::domain(format!(
            "warp position {} at frame {k} outside [0, {last}]",
            tau[k]
        )));
    }
    if tau.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::domain("warp positions must be nondecreasing"));
    }
    let theta: Vec<f64> = tau
        .iter()
        .enumerate()
        .map(|(k, &p)| interp::sample(truth.theta(), (1.0 - gain) * k as f64 + gain * p))
        .collect();
    embed_angles(&theta, dim)
}

/// Agreement between a fitted curve and the normalized ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Recovery {
    pub rmse: f64,
    pub pearson: f64,
}

pub fn evaluate_recovery(curve: &[f64], truth: &SyntheticTruth) -> Result<Recovery> {
    if curve.len() != truth.frame_count() {
        return Err(Error::domain(format!(
            "curve has {} frames, truth has {}",
            curve.len(),
            truth.frame_count()
        )));
    }
    let reference = truth
        .normalized()
        .ok_or_else(|| Error::domain("ground truth is constant"))?;
    let n = curve.len() as f64;
    let rmse = (curve
        .iter()
        .zip(&reference)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(Recovery {
        rmse,
        pearson: pearson(curve, &reference)?,
    })
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::domain("correlation is undefined for a constant series"));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Settings for the simulated measure-and-retime loop.
#[derive(Debug, Clone, PartialEq)]
pub struct RefineConfig {
    pub iterations: usize,
    pub gain: f64,
    pub strength: f64,
    pub dim: usize,
    pub graph: GraphConfig,
    pub fit: FitConfig,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig {
            iterations: crate::warp::DEFAULT_REFINE_ITERATIONS,
            gain: 1.0,
            strength: 1.0,
            dim: 8,
            graph: GraphConfig::default(),
            fit: FitConfig::default(),
        }
    }
}

/// Linearity score after each pass of the loop; entry 0 is the unwarped input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineTrace {
    pub gain: f64,
    pub strength: f64,
    pub linearity_scores: Vec<f64>,
    pub final_positions: Vec<f64>,
}

/// Repeats fit → correct warp → regenerate, starting from the identity warp.
///
/// Each correction moves the warp by `strength · δ`, where `δ_k` is how far
/// the measured curve's inverse at `k / (T-1)` sits from `k`.
pub fn refine_loop(truth: &SyntheticTruth, cfg: &RefineConfig) -> Result<RefineTrace> {
    let bands = BandSchedule::single(cfg.strength)?;
    let t = truth.frame_count();
    let mut positions = vec![(0..t).map(|k| k as f64).collect::<Vec<f64>>()];
    let mut scores = Vec::with_capacity(cfg.iterations + 1);
    for pass in 0..=cfg.iterations {
        let seq = simulate_generator(truth, &positions[0], cfg.gain, cfg.dim)?;
        let curve = fit_embeddings(&seq, &cfg.graph, &cfg.fit)?;
        scores.push(linearity_score(curve.normalized()));
        if pass < cfg.iterations {
            positions = refine_positions(&positions, curve.normalized(), &bands)?;
        }
    }
    Ok(RefineTrace {
        gain: cfg.gain,
        strength: cfg.strength,
        linearity_scores: scores,
        final_positions: positions.swap_remove(0),
    })
}

#[derive(Serialize, Deserialize)]
struct TruthRow {
    k: usize,
    theta: f64,
}

/// Writes the angles as a `k,theta` CSV table.
pub fn write_truth_csv(truth: &SyntheticTruth, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for (k, &theta) in truth.theta().iter().enumerate() {
        w.serialize(TruthRow { k, theta })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_truth_csv(path: impl AsRef<Path>) -> Result<SyntheticTruth> {
    let mut r = csv::Reader::from_path(path)?;
    let mut theta = Vec::new();
    for (expected, row) in r.deserialize::<TruthRow>().enumerate() {
        let row = row?;
        if row.k != expected {
            return Err(Error::format(format!(
                "truth table row {expected} has index {}",
                row.k
            )));
        }
        theta.push(row.theta);
    }
    SyntheticTruth::new(theta, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::angular_distance;

    #[test]
    fn constant_three_frames() {
        let (seq, truth) = generate_rotation(3, 4, Profile::Constant, FRAC_PI_2).unwrap();
        assert_eq!(truth.theta()[1], FRAC_PI_2 / 2.0);
        let d = angular_distance(seq.row(0), seq.row(2)).unwrap();
        assert!((d - FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn exp_rise_midpoint_and_ends() {
        let theta = profile_angles(3, Profile::ExpRise { rate: 3.0 }, 1.0).unwrap();
        assert_eq!(theta[0], 0.0);
        assert_eq!(theta[2], 1.0);
        assert!((theta[1] - 0.18242).abs() < 1e-5);
        let fall = profile_angles(3, Profile::ExpFall { rate: 3.0 }, 1.0).unwrap();
        let expected = (1.0 - (-1.5f64).exp()) / (1.0 - (-3.0f64).exp());
        assert!((fall[1] - expected).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_rotation() {
        assert!(generate_rotation(10, 2, Profile::Constant, 3.2).is_err());
        assert!(generate_rotation(10, 2, Profile::Constant, 0.0).is_err());
        assert!(generate_rotation(10, 1, Profile::Constant, 1.0).is_err());
        assert!(generate_rotation(1, 2, Profile::Constant, 1.0).is_err());
        assert!(generate_rotation(10, 2, Profile::ExpRise { rate: -1.0 }, 1.0).is_err());
    }

    #[test]
    fn identity_and_zero_gain_reproduce_input() {
        let (seq, truth) = generate_rotation(20, 3, Profile::ExpRise { rate: 3.0 }, 1.2).unwrap();
        let id: Vec<f64> = (0..20).map(|k| k as f64).collect();
        assert_eq!(simulate_generator(&truth, &id, 1.0, 3).unwrap(), seq);
        let warped: Vec<f64> = (0..20).map(|k| (k as f64).powi(2) / 19.0).collect();
        assert_eq!(simulate_generator(&truth, &warped, 0.0, 3).unwrap(), seq);
    }

    #[test]
    fn simulate_rejects_bad_warp() {
        let (_, truth) = generate_rotation(5, 2, Profile::Constant, 1.0).unwrap();
        assert!(simulate_generator(&truth, &[0.0, 1.0, 2.0, 3.0, 4.5], 1.0, 2).is_err());
        assert!(simulate_generator(&truth, &[0.0, 2.0, 1.0, 3.0, 4.0], 1.0, 2).is_err());
        assert!(simulate_generator(&truth, &[0.0, 4.0], 1.0, 2).is_err());
    }

    #[test]
    fn recovery_metrics() {
        let (_, truth) = generate_rotation(11, 2, Profile::ExpFall { rate: 2.0 }, 1.0).unwrap();
        let norm = truth.normalized().unwrap();
        let r = evaluate_recovery(&norm, &truth).unwrap();
        assert_eq!(r.rmse, 0.0);
        assert!((r.pearson - 1.0).abs() < 1e-12);
        let reversed: Vec<f64> = norm.iter().map(|v| 1.0 - v).collect();
        assert!((evaluate_recovery(&reversed, &truth).unwrap().pearson + 1.0).abs() < 1e-12);
        let flat = SyntheticTruth::new(vec![0.5; 11], None).unwrap();
        assert!(evaluate_recovery(&norm, &flat).is_err());
    }

    #[test]
    fn noise_is_seeded() {
        let (seq, _) = generate_rotation(10, 4, Profile::Constant, 1.0).unwrap();
        let a = add_noise(&seq, 0.01, 7).unwrap();
        assert_eq!(a, add_noise(&seq, 0.01, 7).unwrap());
        assert_ne!(a, add_noise(&seq, 0.01, 8).unwrap());
        assert!(a.is_normalized());
        assert!(add_noise(&seq, -1.0, 0).is_err());
    }

    #[test]
    fn truth_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("truth.csv");
        let (_, truth) = generate_rotation(7, 2, Profile::ExpRise { rate: 3.0 }, 1.0).unwrap();
        write_truth_csv(&truth, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("k,theta\n0,0"));
        let back = read_truth_csv(&path).unwrap();
        assert_eq!(back.theta(), truth.theta());
    }
}
