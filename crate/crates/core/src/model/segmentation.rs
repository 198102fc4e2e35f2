use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One line fit over the closed frame range `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
    pub slope: f64,
    pub intercept: f64,
    pub sse: f64,
}

impl Segment {
    /// Fitted value at frame `k`; the intercept is in absolute frame coordinates.
    pub fn value_at(&self, k: f64) -> f64 {
        self.slope * k + self.intercept
    }
}

/// Tight partition of `[0, T-1]` into independently fitted line segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SegmentationRepr")]
pub struct SegmentationResult {
    frame_count: usize,
    penalty: f64,
    segments: Vec<Segment>,
}

#[derive(Deserialize)]
struct SegmentationRepr {
    frame_count: usize,
    penalty: f64,
    segments: Vec<Segment>,
}

impl TryFrom<SegmentationRepr> for SegmentationResult {
    type Error = Error;

    fn try_from(r: SegmentationRepr) -> Result<Self> {
        SegmentationResult::new(r.frame_count, r.penalty, r.segments)
    }
}

impl SegmentationResult {
    pub fn new(frame_count: usize, penalty: f64, segments: Vec<Segment>) -> Result<Self> {
        if frame_count < 2 {
            return Err(Error::domain("segmentation needs at least 2 frames"));
        }
        if !(penalty >= 0.0 && penalty.is_finite()) {
            return Err(Error::domain(format!("penalty must be nonnegative, got {penalty}")));
        }
        let (first, last) = match (segments.first(), segments.last()) {
            (Some(f), Some(l)) => (f, l),
            _ => return Err(Error::domain("segmentation has no segments")),
        };
        if first.start != 0 || last.end != frame_count - 1 {
            return Err(Error::domain("segments must cover the whole timeline"));
        }
        if segments.iter().any(|s| s.end <= s.start) {
            return Err(Error::domain("every segment must span at least two frames"));
        }
        if segments.windows(2).any(|w| w[0].end != w[1].start) {
            return Err(Error::domain("consecutive segments must share their breakpoint"));
        }
        if segments
            .iter()
            .any(|s| !s.slope.is_finite() || !s.intercept.is_finite() || !(s.sse >= 0.0))
        {
            return Err(Error::domain("segment fits must be finite"));
        }
        Ok(SegmentationResult {
            frame_count,
            penalty,
            segments,
        })
    }

    pub fn frame_count(&self) -> usize {
        self.frame_count
    }

    pub fn penalty(&self) -> f64 {
        self.penalty
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn segment_count(&self) -> usize {
        self.segments.len()
    }

    /// Boundary frames `a_1, b_1, .., b_K`.
    pub fn boundaries(&self) -> Vec<usize> {
        std::iter::once(self.segments[0].start)
            .chain(self.segments.iter().map(|s| s.end))
            .collect()
    }

    /// Total SSE plus `penalty * K`.
    pub fn objective(&self) -> f64 {
        self.segments.iter().map(|s| s.sse).sum::<f64>() + self.penalty * self.segments.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanMode {
    Keyframes,
    Clips,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Keyframe {
    pub source_frame: usize,
    pub target_time: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clip {
    pub start_frame: usize,
    pub end_frame: usize,
    pub length: usize,
}

/// Regeneration plan for keyframe-conditioned or first-last-frame generators.
///
/// Only the list matching `mode` is populated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RegenPlanRepr")]
pub struct RegenPlan {
    mode: PlanMode,
    total_length: usize,
    keyframes: Vec<Keyframe>,
    clips: Vec<Clip>,
}

#[derive(Deserialize)]
struct RegenPlanRepr {
    mode: PlanMode,
    total_length: usize,
    keyframes: Vec<Keyframe>,
    clips: Vec<Clip>,
}

impl TryFrom<RegenPlanRepr> for RegenPlan {
    type Error = Error;

    fn try_from(r: RegenPlanRepr) -> Result<Self> {
        match r.mode {
            PlanMode::Keyframes if r.clips.is_empty() => {
                RegenPlan::from_keyframes(r.total_length, r.keyframes)
            }
            PlanMode::Clips if r.keyframes.is_empty() => RegenPlan::from_clips(r.total_length, r.clips),
            _ => Err(Error::domain("plan lists entries for the wrong mode")),
        }
    }
}

impl RegenPlan {
    pub fn from_keyframes(total_length: usize, keyframes: Vec<Keyframe>) -> Result<Self> {
        if keyframes.len() < 2 {
            return Err(Error::domain("a keyframe plan needs at least two keyframes"));
        }
        if keyframes[0].target_time != 0 {
            return Err(Error::domain("the first keyframe must target time 0"));
        }
        if keyframes.windows(2).any(|w| {
            w[1].target_time <= w[0].target_time || w[1].source_frame <= w[0].source_frame
        }) {
            return Err(Error::domain("keyframes must be strictly increasing"));
        }
        if keyframes.last().is_some_and(|k| k.target_time >= total_length) {
            return Err(Error::domain("keyframe target beyond the output length"));
        }
        Ok(RegenPlan {
            mode: PlanMode::Keyframes,
            total_length,
            keyframes,
            clips: Vec::new(),
        })
    }

    pub fn from_clips(total_length: usize, clips: Vec<Clip>) -> Result<Self> {
        if clips.is_empty() {
            return Err(Error::domain("a clip plan needs at least one clip"));
        }
        if clips.windows(2).any(|w| w[0].end_frame != w[1].start_frame) {
            return Err(Error::domain("clip endpoints must chain"));
        }
        if clips.iter().any(|c| c.end_frame <= c.start_frame || c.length < 2) {
            return Err(Error::domain("every clip must span distinct frames and last at least 2 frames"));
        }
        let sum: usize = clips.iter().map(|c| c.length).sum();
        if sum != total_length {
            return Err(Error::domain(format!(
                "clip lengths sum to {sum}, expected {total_length}"
            )));
        }
        Ok(RegenPlan {
            mode: PlanMode::Clips,
            total_length,
            keyframes: Vec::new(),
            clips,
        })
    }

    pub fn mode(&self) -> PlanMode {
        self.mode
    }

    pub fn total_length(&self) -> usize {
        self.total_length
    }

    pub fn keyframes(&self) -> &[Keyframe] {
        &self.keyframes
    }

    pub fn clips(&self) -> &[Clip] {
        &self.clips
    }
}
