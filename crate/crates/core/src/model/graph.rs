use std::collections::HashSet;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// A single difference constraint `S[i] - S[j] ≈ distance`, with `i > j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairConstraint {
    i: usize,
    j: usize,
    distance: f64,
    weight: f64,
}

impl PairConstraint {
    pub fn new(i: usize, j: usize, distance: f64, weight: f64) -> Result<Self> {
        if j >= i {
            return Err(Error::domain(format!(
                "pair ({i}, {j}) must satisfy j < i"
            )));
        }
        if !(distance.is_finite() && distance >= 0.0) {
            return Err(Error::domain(format!(
                "pair ({i}, {j}) has invalid distance {distance}"
            )));
        }
        if !(weight > 0.0 && weight <= 1.0) {
            return Err(Error::domain(format!(
                "pair ({i}, {j}) has weight {weight} outside (0, 1]"
            )));
        }
        Ok(PairConstraint { i, j, distance, weight })
    }

    pub fn i(&self) -> usize {
        self.i
    }

    pub fn j(&self) -> usize {
        self.j
    }

    pub fn gap(&self) -> usize {
        self.i - self.j
    }

    pub fn distance(&self) -> f64 {
        self.distance
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }
}

/// Gaussian locality weight for a temporal gap.
///
/// Floored at the smallest normal float so far pairs under a narrow sigma
/// keep a positive, if negligible, weight instead of underflowing to zero.
pub fn gaussian_weight(gap: usize, sigma: f64) -> f64 {
    let g = gap as f64;
    (-(g * g) / (2.0 * sigma * sigma)).exp().max(f64::MIN_POSITIVE)
}

/// Windowed set of difference constraints over `frame_count` frames.
///
/// `sigma` is `None` for hand-assembled graphs whose weights do not follow
/// the Gaussian locality profile.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceGraph {
    frame_count: usize,
    window: usize,
    sigma: Option<f64>,
    power: f64,
    source_tag: String,
    pairs: Vec<PairConstraint>,
}

impl DistanceGraph {
    /// Assembles a graph from explicit constraints.
    ///
    /// Checks the window, uniqueness and distance bound. Weights are only
    /// checked against the Gaussian profile when `sigma` is given.
    pub fn from_pairs(
        frame_count: usize,
        window: usize,
        sigma: Option<f64>,
        power: f64,
        source_tag: impl Into<String>,
        pairs: Vec<PairConstraint>,
    ) -> Result<Self> {
        if frame_count < 2 {
            return Err(Error::domain(format!(
                "a distance graph needs at least 2 frames, got {frame_count}"
            )));
        }
        if window < 1 {
            return Err(Error::domain("window must be at least 1"));
        }
        if !(power.is_finite() && power > 0.0) {
            return Err(Error::domain(format!("power must be positive, got {power}")));
        }
        if let Some(s) = sigma {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::domain(format!("sigma must be positive, got {s}")));
            }
        }
        let max_distance = PI.powf(power);
        let mut seen = HashSet::with_capacity(pairs.len());
        for p in &pairs {
            if p.i >= frame_count {
                return Err(Error::domain(format!(
                    "pair ({}, {}) references a frame beyond {frame_count}",
                    p.i, p.j
                )));
            }
            if p.gap() > window {
                return Err(Error::domain(format!(
                    "pair ({}, {}) exceeds window {window}",
                    p.i, p.j
                )));
            }
            // small slack for the power of a rounded arccos
            if p.distance > max_distance * (1.0 + 1e-12) {
                return Err(Error::domain(format!(
                    "pair ({}, {}) distance {} exceeds pi^p",
                    p.i, p.j, p.distance
                )));
            }
            if let Some(s) = sigma {
                let expected = gaussian_weight(p.gap(), s);
                if (p.weight - expected).abs() > 1e-12 {
                    return Err(Error::domain(format!(
                        "pair ({}, {}) weight {} does not match sigma {s}",
                        p.i, p.j, p.weight
                    )));
                }
            }
            if !seen.insert((p.i, p.j)) {
                return Err(Error::domain(format!("duplicate pair ({}, {})", p.i, p.j)));
            }
        }
        Ok(DistanceGraph {
            frame_count,
            window,
            sigma,
            power,
            source_tag: source_tag.into(),
            pairs,
        })
    }

    pub fn frame_count(&self) -> usize {
        self.frame_count
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn sigma(&self) -> Option<f64> {
        self.sigma
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn source_tag(&self) -> &str {
        &self.source_tag
    }

    pub fn pairs(&self) -> &[PairConstraint] {
        &self.pairs
    }

    /// Largest temporal gap actually present, which bounds the system bandwidth.
    pub fn bandwidth(&self) -> usize {
        self.pairs.iter().map(PairConstraint::gap).max().unwrap_or(0)
    }
}
