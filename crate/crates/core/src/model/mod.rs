//! Domain types shared across the pipeline.
//!
//! Every type validates its invariants on construction, including when it
//! is parsed back from a JSON artifact.

mod curve;
mod embedding;
mod graph;
mod schedule;
mod segmentation;
mod synthetic;

pub use curve::{
    gauge_ok, FitConfig, GraphSummary, ProgressCurve, SpfCurve, DEFAULT_LAMBDA,
    DEFAULT_MAX_SOLVER_ITERATIONS, DEFAULT_SOLVER_TOLERANCE, GAUGE_TOLERANCE,
};
pub use embedding::{EmbeddingSequence, UNIT_NORM_TOLERANCE};
pub(crate) use embedding::row_norm;
pub use graph::{gaussian_weight, DistanceGraph, PairConstraint};
pub use schedule::{
    BandSchedule, LatentSchedule, PacingTarget, StepPositions, WarpSchedule, DEFAULT_ALPHA_HIGH,
    DEFAULT_ALPHA_LOW, DEFAULT_KAPPA,
};
pub use segmentation::{Clip, Keyframe, PlanMode, RegenPlan, Segment, SegmentationResult};
pub use synthetic::{Profile, SyntheticTruth};
