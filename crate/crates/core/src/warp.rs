//! Warped temporal positions and their per-band, per-timestep expansion.
//!
//! Frame indices are 0-based. A warp `τ` says which source time each output
//! frame should show; a band's positions blend the identity ramp with `τ`
//! by that band's strength times the timestep decay.

use crate::error::{Error, Result};
use crate::fit::{invert_spf, monotone_project};
use crate::interp;
use crate::model::{
    BandSchedule, LatentSchedule, PacingTarget, ProgressCurve, StepPositions, WarpSchedule,
};

pub const DEFAULT_COMPRESSION: usize = 4;
pub const DEFAULT_REFINE_ITERATIONS: usize = 3;

/// Warped positions `τ_k = Ŝ⁻¹(g(k / (T-1)))`.
///
/// The ends are pinned to `0` and `T-1`; the left-edge inversion rule would
/// otherwise stop short of the last frame when the curve ends on a plateau.
pub fn compute_tau(curve: &ProgressCurve, target: &PacingTarget) -> Result<Vec<f64>> {
    let t = curve.len();
    let last = (t - 1) as f64;
    let mut tau = Vec::with_capacity(t);
    for k in 0..t {
        let u = target.eval(k as f64 / last);
        tau.push(invert_spf(curve, u)?);
    }
    tau[0] = 0.0;
    tau[t - 1] = last;
    Ok(tau)
}

pub fn band_strengths(
    band_count: usize,
    alpha_low: f64,
    alpha_high: f64,
    kappa: f64,
) -> Result<BandSchedule> {
    BandSchedule::new(band_count, alpha_low, alpha_high, kappa)
}

/// `γ(t̃) = (e^{3t̃} - 1) / (e³ - 1)`, with `t̃ = 1` at maximum noise.
pub fn timestep_decay(t_norm: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t_norm) {
        return Err(Error::domain(format!(
            "normalized timestep {t_norm} outside [0, 1]"
        )));
    }
    Ok((3.0 * t_norm).exp_m1() / 3.0_f64.exp_m1())
}

fn blend(tau: &[f64], strength: f64) -> Vec<f64> {
    let last = (tau.len() - 1) as f64;
    let mut p: Vec<f64> = tau
        .iter()
        .enumerate()
        .map(|(t, &target)| ((1.0 - strength) * t as f64 + strength * target).clamp(0.0, last))
        .collect();
    let n = p.len();
    p[n - 1] = last;
    p
}

/// Per-band positions `p_t = (1 - α_b γ) t + α_b γ τ_t` at one timestep.
pub fn blend_positions(tau: &[f64], bands: &BandSchedule, t_norm: f64) -> Result<Vec<Vec<f64>>> {
    check_warp(tau)?;
    let gamma = timestep_decay(t_norm)?;
    Ok(bands
        .strengths()
        .iter()
        .map(|alpha| blend(tau, alpha * gamma))
        .collect())
}

fn check_warp(tau: &[f64]) -> Result<()> {
    if tau.len() < 2 {
        return Err(Error::domain("a warp needs at least 2 frames"));
    }
    let last = (tau.len() - 1) as f64;
    if tau.iter().any(|v| !v.is_finite() || *v < 0.0 || *v > last) {
        return Err(Error::domain("warp positions must lie in [0, T-1]"));
    }
    if tau.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::domain("warp positions must be nondecreasing"));
    }
    Ok(())
}

/// Temporal correction `δ_k = Ŝ⁻¹(k / (T-1)) - k` from a re-measured curve.
pub fn refinement_delta(measured: &ProgressCurve) -> Result<Vec<f64>> {
    let t = measured.len();
    let last = (t - 1) as f64;
    let mut delta = Vec::with_capacity(t);
    for k in 0..t {
        delta.push(invert_spf(measured, k as f64 / last)? - k as f64);
    }
    delta[t - 1] = 0.0;
    Ok(delta)
}

/// One refinement step: `τ_k^(b) += α_b δ_k` for every band.
///
/// A step can overshoot when the generator only partly follows its warp,
/// so each updated warp is projected back onto valid positions:
/// nondecreasing (pool-adjacent-violators) and clamped to `[0, T-1]`.
pub fn refine_positions(
    current: &[Vec<f64>],
    measured: &ProgressCurve,
    bands: &BandSchedule,
) -> Result<Vec<Vec<f64>>> {
    if current.len() != bands.band_count() {
        return Err(Error::domain(format!(
            "{} band warps given for {} bands",
            current.len(),
            bands.band_count()
        )));
    }
    for tau in current {
        if tau.len() != measured.len() {
            return Err(Error::domain("band warp length differs from the measured curve"));
        }
        check_warp(tau)?;
    }
    let delta = refinement_delta(measured)?;
    let last = (measured.len() - 1) as f64;
    Ok(current
        .iter()
        .zip(bands.strengths())
        .map(|(tau, &alpha)| {
            let stepped: Vec<f64> = tau.iter().zip(&delta).map(|(t, d)| t + alpha * d).collect();
            monotone_project(&stepped)
                .into_iter()
                .map(|v| v.clamp(0.0, last))
                .collect()
        })
        .collect())
}

/// Number of latent steps for `frame_count` frames, if the count is compatible.
pub fn latent_length(frame_count: usize, compression: usize) -> Result<usize> {
    if compression == 0 {
        return Err(Error::domain("compression must be at least 1"));
    }
    if frame_count < 2 || (frame_count - 1) % compression != 0 {
        return Err(Error::domain(format!(
            "{frame_count} frames cannot be compressed by {compression} \
             (need T = 1 mod {compression})"
        )));
    }
    Ok((frame_count - 1) / compression + 1)
}

/// 0-based frame coordinate sampled by each latent step.
///
/// The first latent holds frame 0 alone. In 1-based terms latent `i >= 2`
/// sits at the center of frames `[c(i-1)+1, c·i]`, i.e. `c·i - (c-1)/2`,
/// which is `c(j+1) - (c+1)/2` for the 0-based latent `j = i - 1`.
pub fn latent_centers(frame_count: usize, compression: usize) -> Result<Vec<f64>> {
    let len = latent_length(frame_count, compression)?;
    let c = compression as f64;
    Ok((0..len)
        .map(|j| if j == 0 { 0.0 } else { c * (j + 1) as f64 - (c + 1.0) / 2.0 })
        .collect())
}

/// Resamples frame-level positions at the latent centers, clamped to the frame range.
pub fn map_to_latent(positions: &[f64], compression: usize) -> Result<Vec<f64>> {
    let centers = latent_centers(positions.len(), compression)?;
    Ok(centers.iter().map(|&x| interp::sample(positions, x)).collect())
}

/// Settings for expanding a warp into a full schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleConfig {
    pub band_count: usize,
    pub alpha_low: f64,
    pub alpha_high: f64,
    pub kappa: f64,
    pub timesteps: Vec<f64>,
    pub compression: Option<usize>,
}

pub fn build_schedule(
    curve: &ProgressCurve,
    target: &PacingTarget,
    cfg: &ScheduleConfig,
) -> Result<WarpSchedule> {
    let bands = band_strengths(cfg.band_count, cfg.alpha_low, cfg.alpha_high, cfg.kappa)?;
    let tau = compute_tau(curve, target)?;
    assemble_schedule(tau, bands, target.clone(), &cfg.timesteps, cfg.compression)
}

pub(crate) fn assemble_schedule(
    tau: Vec<f64>,
    bands: BandSchedule,
    target: PacingTarget,
    timesteps: &[f64],
    compression: Option<usize>,
) -> Result<WarpSchedule> {
    check_warp(&tau)?;
    if tau[0] != 0.0 || tau[tau.len() - 1] != (tau.len() - 1) as f64 {
        return Err(Error::domain("warp must start at 0 and end at T-1"));
    }
    if timesteps.is_empty() {
        return Err(Error::domain("at least one diffusion timestep is required"));
    }
    let steps = timesteps
        .iter()
        .map(|&t_norm| {
            Ok(StepPositions {
                t_norm,
                positions: blend_positions(&tau, &bands, t_norm)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let latent = match compression {
        None => None,
        Some(c) => {
            let centers = latent_centers(tau.len(), c)?;
            let steps = steps
                .iter()
                .map(|s| {
                    Ok(StepPositions {
                        t_norm: s.t_norm,
                        positions: s
                            .positions
                            .iter()
                            .map(|p| map_to_latent(p, c))
                            .collect::<Result<_>>()?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Some(LatentSchedule {
                compression: c,
                centers,
                steps,
            })
        }
    };
    Ok(WarpSchedule {
        tau,
        bands,
        steps,
        latent,
        target,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn squared(t: usize) -> ProgressCurve {
        let last = (t - 1) as f64;
        ProgressCurve::new((0..t).map(|k| (k as f64 / last).powi(2)).collect()).unwrap()
    }

    #[test]
    fn identity_warp() {
        let tau = compute_tau(&ProgressCurve::linear(7).unwrap(), &PacingTarget::Linear).unwrap();
        for (k, v) in tau.iter().enumerate() {
            assert_eq!(*v, k as f64);
        }
    }

    #[test]
    fn squared_curve_inverse_at_knot() {
        let tau = compute_tau(&squared(5), &PacingTarget::Linear).unwrap();
        assert_eq!(tau[1], 2.0);
    }

    #[test]
    fn squared_target_on_linear_curve() {
        let g = PacingTarget::table(
            (0..=100).map(|i| (i as f64 / 100.0, (i as f64 / 100.0).powi(2))).collect(),
        )
        .unwrap();
        let tau = compute_tau(&ProgressCurve::linear(5).unwrap(), &g).unwrap();
        assert!((tau[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn plateau_at_end_still_pinned() {
        let c = ProgressCurve::new(vec![0.0, 1.0, 1.0]).unwrap();
        let tau = compute_tau(&c, &PacingTarget::Linear).unwrap();
        assert_eq!(tau, vec![0.0, 0.5, 2.0]);
    }

    #[test]
    fn band_strength_values() {
        let s = band_strengths(8, 0.77, 0.20, 4.0).unwrap();
        assert_eq!(s.alpha(0), 0.77);
        let top = 0.20 + 0.57 * (-4.0f64).exp();
        assert!((s.alpha(7) - top).abs() < 1e-15);
        assert!((s.alpha(7) - 0.21044).abs() < 1e-5);
        let flat = band_strengths(5, 0.77, 0.20, 0.0).unwrap();
        assert!(flat.strengths().iter().all(|&a| a == 0.77));
        assert!(band_strengths(0, 0.77, 0.2, 4.0).is_err());
    }

    #[test]
    fn decay_values() {
        assert_eq!(timestep_decay(0.0).unwrap(), 0.0);
        assert_eq!(timestep_decay(1.0).unwrap(), 1.0);
        let mid = (1.5f64.exp() - 1.0) / (3.0f64.exp() - 1.0);
        assert!((timestep_decay(0.5).unwrap() - mid).abs() < 1e-15);
        assert!((timestep_decay(0.5).unwrap() - 0.18242).abs() < 1e-5);
        assert!(timestep_decay(1.1).is_err());
        assert!(timestep_decay(-0.1).is_err());
    }

    #[test]
    fn blend_extremes() {
        let tau: Vec<f64> = vec![0.0, 0.2, 0.4, 3.0];
        assert_eq!(blend(&tau, 0.0), vec![0.0, 1.0, 2.0, 3.0]);
        assert_eq!(blend(&tau, 1.0), tau);
    }

    #[test]
    fn blend_midpoint_value() {
        // t = 10, τ = 16, α = 0.5, γ = 0.5 => 0.75 * 10 + 0.25 * 16
        let mut tau: Vec<f64> = (0..21).map(|k| k as f64).collect();
        tau[10] = 16.0;
        for v in tau.iter_mut().skip(11).take(6) {
            *v = 16.0;
        }
        assert_eq!(blend(&tau, 0.5 * 0.5)[10], 11.5);
    }

    #[test]
    fn refinement_fixed_point_and_delta() {
        let bands = BandSchedule::new(3, 0.9, 0.0, 20.0).unwrap();
        let current: Vec<Vec<f64>> = (0..3).map(|_| vec![0.0, 0.7, 2.5, 3.1, 4.0]).collect();
        let same = refine_positions(&current, &ProgressCurve::linear(5).unwrap(), &bands).unwrap();
        assert_eq!(same, current);
        let delta = refinement_delta(&squared(5)).unwrap();
        assert_eq!(delta[1], 1.0);
    }

    #[test]
    fn refinement_stays_in_range() {
        let bands = BandSchedule::single(1.0).unwrap();
        let current = vec![vec![0.0, 3.5, 3.9, 4.0, 4.0]];
        let next = refine_positions(&current, &squared(5), &bands).unwrap();
        assert!(next[0].iter().all(|&v| (0.0..=4.0).contains(&v)));
        assert!(next[0].windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn zero_strength_band_never_moves() {
        let bands = BandSchedule::new(2, 1.0, 0.0, 1e6).unwrap();
        assert_eq!(bands.alpha(1), 0.0);
        let start: Vec<f64> = (0..5).map(|k| k as f64).collect();
        let mut current = vec![start.clone(), start.clone()];
        for _ in 0..3 {
            current = refine_positions(&current, &squared(5), &bands).unwrap();
        }
        assert_eq!(current[1], start);
        assert_ne!(current[0], start);
    }

    #[test]
    fn latent_identity_t9() {
        let ramp: Vec<f64> = (0..9).map(|k| k as f64).collect();
        assert_eq!(latent_centers(9, 4).unwrap(), vec![0.0, 5.5, 9.5]);
        assert_eq!(map_to_latent(&ramp, 4).unwrap(), vec![0.0, 5.5, 8.0]);
    }

    #[test]
    fn latent_lengths() {
        assert_eq!(latent_length(81, 4).unwrap(), 21);
        assert!(latent_length(80, 4).is_err());
        assert!(latent_length(81, 0).is_err());
        let c = latent_centers(81, 4).unwrap();
        for (j, x) in c.iter().enumerate().skip(1) {
            let one_based_latent = (j + 1) as f64;
            assert_eq!(x + 1.0, 4.0 * one_based_latent - 1.5);
        }
    }

    #[test]
    fn latent_constant() {
        let v = vec![3.25; 13];
        assert!(map_to_latent(&v, 4).unwrap().iter().all(|&x| x == 3.25));
    }

    #[test]
    fn schedule_identity_for_linear_curve() {
        let cfg = ScheduleConfig {
            band_count: 4,
            alpha_low: 0.77,
            alpha_high: 0.2,
            kappa: 4.0,
            timesteps: vec![1.0, 0.5, 0.0],
            compression: Some(4),
        };
        let s = build_schedule(&ProgressCurve::linear(9).unwrap(), &PacingTarget::Linear, &cfg)
            .unwrap();
        for step in s.steps() {
            for p in &step.positions {
                for (k, v) in p.iter().enumerate() {
                    assert_eq!(*v, k as f64);
                }
            }
        }
        assert_eq!(s.latent().unwrap().steps().len(), 3);
    }

    #[test]
    fn zero_timestep_is_identity_for_any_curve() {
        let cfg = ScheduleConfig {
            band_count: 3,
            alpha_low: 0.77,
            alpha_high: 0.2,
            kappa: 4.0,
            timesteps: vec![0.0],
            compression: None,
        };
        let s = build_schedule(&squared(9), &PacingTarget::Linear, &cfg).unwrap();
        for p in &s.steps()[0].positions {
            for (k, v) in p.iter().enumerate() {
                assert_eq!(*v, k as f64);
            }
        }
    }
}
