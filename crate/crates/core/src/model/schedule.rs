use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::warp;

/// Desired cumulative progress over normalized output time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", try_from = "PacingTargetRepr")]
pub enum PacingTarget {
    Linear,
    ExpRise { rate: f64 },
    ExpFall { rate: f64 },
    Table { knots: Vec<(f64, f64)> },
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum PacingTargetRepr {
    Linear,
    ExpRise { rate: f64 },
    ExpFall { rate: f64 },
    Table { knots: Vec<(f64, f64)> },
}

impl TryFrom<PacingTargetRepr> for PacingTarget {
    type Error = Error;

    fn try_from(r: PacingTargetRepr) -> Result<Self> {
        match r {
            PacingTargetRepr::Linear => Ok(PacingTarget::Linear),
            PacingTargetRepr::ExpRise { rate } => PacingTarget::exp_rise(rate),
            PacingTargetRepr::ExpFall { rate } => PacingTarget::exp_fall(rate),
            PacingTargetRepr::Table { knots } => PacingTarget::table(knots),
        }
    }
}

fn check_rate(rate: f64) -> Result<()> {
    if rate.is_finite() && rate > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("exponential rate must be positive, got {rate}")))
    }
}

impl PacingTarget {
    pub fn exp_rise(rate: f64) -> Result<Self> {
        check_rate(rate)?;
        Ok(PacingTarget::ExpRise { rate })
    }

    pub fn exp_fall(rate: f64) -> Result<Self> {
        check_rate(rate)?;
        Ok(PacingTarget::ExpFall { rate })
    }

    /// Tabulated target. Knots are sorted by `u`; exact duplicates are
    /// dropped, and the table must contain `(0, 0)` and `(1, 1)`.
    pub fn table(mut knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.iter().any(|(u, v)| !u.is_finite() || !v.is_finite()) {
            return Err(Error::domain("pacing table contains non-finite values"));
        }
        knots.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        knots.dedup();
        if knots.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::domain("pacing table has conflicting values for one input"));
        }
        if knots.first() != Some(&(0.0, 0.0)) || knots.last() != Some(&(1.0, 1.0)) {
            return Err(Error::domain("pacing table must start at (0, 0) and end at (1, 1)"));
        }
        if knots.windows(2).any(|w| w[1].1 < w[0].1) {
            return Err(Error::domain("pacing table must be nondecreasing"));
        }
        Ok(PacingTarget::Table { knots })
    }

    /// Loads a tabulated target from a CSV file with `u,v` columns.
    pub fn read_table(path: impl AsRef<Path>) -> Result<Self> {
        #[derive(Deserialize)]
        struct Knot {
            u: f64,
            v: f64,
        }
        let mut reader = csv::Reader::from_path(path)?;
        let knots = reader
            .deserialize::<Knot>()
            .map(|k| k.map(|k| (k.u, k.v)))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        PacingTarget::table(knots)
    }

    /// Evaluates the target at `u`, clamped to `[0, 1]`.
    pub fn eval(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let v = match self {
            PacingTarget::Linear => u,
            PacingTarget::ExpRise { rate } => (rate * u).exp_m1() / rate.exp_m1(),
            PacingTarget::ExpFall { rate } => (-rate * u).exp_m1() / (-rate).exp_m1(),
            PacingTarget::Table { knots } => {
                let k = knots.partition_point(|&(ku, _)| ku <= u);
                if k >= knots.len() {
                    knots[knots.len() - 1].1
                } else {
                    let (u0, v0) = knots[k - 1];
                    let (u1, v1) = knots[k];
                    v0 + (u - u0) / (u1 - u0) * (v1 - v0)
                }
            }
        };
        v.clamp(0.0, 1.0)
    }
}

pub const DEFAULT_ALPHA_LOW: f64 = 0.77;
pub const DEFAULT_ALPHA_HIGH: f64 = 0.20;
pub const DEFAULT_KAPPA: f64 = 4.0;

/// Per-band warp strengths, band 0 being the lowest frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct BandSchedule {
    alpha_low: f64,
    alpha_high: f64,
    kappa: f64,
    strengths: Vec<f64>,
}

impl BandSchedule {
    /// `alpha_b = alpha_high + (alpha_low - alpha_high) * exp(-kappa * b / (B - 1))`.
    pub fn new(band_count: usize, alpha_low: f64, alpha_high: f64, kappa: f64) -> Result<Self> {
        if band_count == 0 {
            return Err(Error::domain("band count must be at least 1"));
        }
        for (name, a) in [("alpha_low", alpha_low), ("alpha_high", alpha_high)] {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::domain(format!("{name} must lie in [0, 1], got {a}")));
            }
        }
        if !(kappa.is_finite() && kappa >= 0.0) {
            return Err(Error::domain(format!("kappa must be nonnegative, got {kappa}")));
        }
        let strengths = if band_count == 1 {
            vec![alpha_low]
        } else {
            let denom = (band_count - 1) as f64;
            (0..band_count)
                .map(|b| {
                    let decay = (-kappa * b as f64 / denom).exp();
                    alpha_high + (alpha_low - alpha_high) * decay
                })
                .collect()
        };
        Ok(BandSchedule {
            alpha_low,
            alpha_high,
            kappa,
            strengths,
        })
    }

    /// A single band warped at full strength.
    pub fn single(alpha: f64) -> Result<Self> {
        Self::new(1, alpha, alpha, 0.0)
    }

    pub fn band_count(&self) -> usize {
        self.strengths.len()
    }

    pub fn alpha_low(&self) -> f64 {
        self.alpha_low
    }

    pub fn alpha_high(&self) -> f64 {
        self.alpha_high
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn strengths(&self) -> &[f64] {
        &self.strengths
    }

    pub fn alpha(&self, band: usize) -> f64 {
        self.strengths[band]
    }
}

/// Per-band positions for one diffusion timestep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepPositions {
    pub t_norm: f64,
    pub positions: Vec<Vec<f64>>,
}

/// Warped positions resampled onto a temporally compressed latent grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentSchedule {
    pub(crate) compression: usize,
    pub(crate) centers: Vec<f64>,
    pub(crate) steps: Vec<StepPositions>,
}

impl LatentSchedule {
    pub fn compression(&self) -> usize {
        self.compression
    }

    /// 0-based frame coordinates each latent samples, before clamping.
    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn steps(&self) -> &[StepPositions] {
        &self.steps
    }
}

/// Frame-level warp plus its band- and timestep-expanded position schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpSchedule {
    pub(crate) tau: Vec<f64>,
    pub(crate) bands: BandSchedule,
    pub(crate) steps: Vec<StepPositions>,
    pub(crate) latent: Option<LatentSchedule>,
    pub(crate) target: PacingTarget,
}

impl WarpSchedule {
    pub fn frame_count(&self) -> usize {
        self.tau.len()
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    pub fn bands(&self) -> &BandSchedule {
        &self.bands
    }

    pub fn steps(&self) -> &[StepPositions] {
        &self.steps
    }

    pub fn latent(&self) -> Option<&LatentSchedule> {
        self.latent.as_ref()
    }

    pub fn target(&self) -> &PacingTarget {
        &self.target
    }
}

#[derive(Serialize, Deserialize)]
struct BandEntry {
    band: usize,
    alpha: f64,
}

#[derive(Serialize, Deserialize)]
struct ScheduleConfigRepr {
    frame_count: usize,
    band_count: usize,
    alpha_low: f64,
    alpha_high: f64,
    kappa: f64,
    compression: Option<usize>,
    latent_centers: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct WarpScheduleOut<'a> {
    tau: &'a [f64],
    bands: Vec<BandEntry>,
    steps: &'a [StepPositions],
    latent: Option<&'a [StepPositions]>,
    target: &'a PacingTarget,
    config: ScheduleConfigRepr,
}

#[derive(Deserialize)]
struct WarpScheduleIn {
    tau: Vec<f64>,
    bands: Vec<BandEntry>,
    steps: Vec<StepPositions>,
    latent: Option<Vec<StepPositions>>,
    target: PacingTarget,
    config: ScheduleConfigRepr,
}

impl Serialize for WarpSchedule {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        WarpScheduleOut {
            tau: &self.tau,
            bands: self
                .bands
                .strengths
                .iter()
                .enumerate()
                .map(|(band, &alpha)| BandEntry { band, alpha })
                .collect(),
            steps: &self.steps,
            latent: self.latent.as_ref().map(|l| l.steps.as_slice()),
            target: &self.target,
            config: ScheduleConfigRepr {
                frame_count: self.tau.len(),
                band_count: self.bands.band_count(),
                alpha_low: self.bands.alpha_low,
                alpha_high: self.bands.alpha_high,
                kappa: self.bands.kappa,
                compression: self.latent.as_ref().map(|l| l.compression),
                latent_centers: self.latent.as_ref().map(|l| l.centers.clone()),
            },
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for WarpSchedule {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = WarpScheduleIn::deserialize(d)?;
        WarpSchedule::try_from(raw).map_err(serde::de::Error::custom)
    }
}

/// Positions must match the recomputed schedule this closely.
const REBUILD_TOLERANCE: f64 = 1e-9;

fn close(a: &[StepPositions], b: &[StepPositions]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| {
            x.t_norm == y.t_norm
                && x.positions.len() == y.positions.len()
                && x.positions.iter().zip(&y.positions).all(|(p, q)| {
                    p.len() == q.len()
                        && p.iter().zip(q).all(|(u, v)| (u - v).abs() <= REBUILD_TOLERANCE)
                })
        })
}

impl TryFrom<WarpScheduleIn> for WarpSchedule {
    type Error = Error;

    fn try_from(r: WarpScheduleIn) -> Result<Self> {
        let cfg = &r.config;
        if cfg.frame_count != r.tau.len() {
            return Err(Error::domain("config frame_count disagrees with tau"));
        }
        let bands = BandSchedule::new(cfg.band_count, cfg.alpha_low, cfg.alpha_high, cfg.kappa)?;
        let listed_ok = r.bands.len() == bands.band_count()
            && r.bands.iter().enumerate().all(|(b, e)| {
                e.band == b && (e.alpha - bands.alpha(b)).abs() <= REBUILD_TOLERANCE
            });
        if !listed_ok {
            return Err(Error::domain("band strengths disagree with the band configuration"));
        }
        let t_norms: Vec<f64> = r.steps.iter().map(|s| s.t_norm).collect();
        let rebuilt = warp::assemble_schedule(r.tau, bands, r.target, &t_norms, cfg.compression)?;
        if !close(&rebuilt.steps, &r.steps) {
            return Err(Error::domain("step positions disagree with tau and band strengths"));
        }
        match (&rebuilt.latent, &r.latent) {
            (None, None) => {}
            (Some(l), Some(stored)) if close(&l.steps, stored) => {}
            _ => return Err(Error::domain("latent positions disagree with the frame schedule")),
        }
        Ok(rebuilt)
    }
}
