//! Fitting the semantic progress function and deriving its normalized form.
//!
//! The raw fit minimizes
//!
//! ```text
//! (A S - b)ᵀ W (A S - b) + λ SᵀS
//! ```
//!
//! where each row of `A` is `+1` at `i` and `-1` at `j` for one constraint,
//! `b` holds the distances and `W` the weights. The normal matrix
//! `AᵀWA + λI` is banded with bandwidth equal to the largest gap in the
//! graph, so it is assembled and factored in band storage.
//!
//! The fitted curve then goes through a fixed pipeline: isotonic projection,
//! min-max normalization, and scoring.

mod banded;
mod isotonic;

pub use isotonic::monotone_project;

use crate::error::{Error, Result};
use crate::graph::{build_pair_graph, normalize_embeddings, GraphConfig};
use crate::model::{
    DistanceGraph, EmbeddingSequence, FitConfig, GraphSummary, ProgressCurve, SpfCurve,
};
use banded::BandedSpd;

/// Sequences longer than this are solved with preconditioned CG instead of
/// a banded factorization.
pub const DIRECT_SOLVE_LIMIT: usize = 100_000;

/// Minimum raw progress range accepted by [`normalize_spf`].
pub const FLAT_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum SolveMethod {
    Direct,
    ConjugateGradient,
}

fn assemble(graph: &DistanceGraph, lambda: f64) -> (BandedSpd, Vec<f64>) {
    let n = graph.frame_count();
    let mut normal = BandedSpd::zeros(n, graph.bandwidth());
    let mut rhs = vec![0.0; n];
    for i in 0..n {
        normal.add(i, i, lambda);
    }
    for p in graph.pairs() {
        let (i, j, w) = (p.i(), p.j(), p.weight());
        normal.add(i, i, w);
        normal.add(j, j, w);
        normal.add(i, j, -w);
        rhs[i] += w * p.distance();
        rhs[j] -= w * p.distance();
    }
    (normal, rhs)
}

pub(crate) fn fit_spf_with(
    graph: &DistanceGraph,
    cfg: &FitConfig,
    method: SolveMethod,
) -> Result<Vec<f64>> {
    let (normal, rhs) = assemble(graph, cfg.lambda());
    match method {
        SolveMethod::Direct => banded::solve_direct(
            &normal,
            &rhs,
            cfg.solver_tolerance(),
            cfg.max_solver_iterations(),
        ),
        SolveMethod::ConjugateGradient => banded::solve_pcg(
            &normal,
            &rhs,
            cfg.solver_tolerance(),
            cfg.max_solver_iterations(),
        ),
    }
}

/// Solves `(AᵀWA + λI) S = AᵀWb` for the raw progress values.
pub fn fit_spf(graph: &DistanceGraph, cfg: &FitConfig) -> Result<Vec<f64>> {
    let method = if graph.frame_count() <= DIRECT_SOLVE_LIMIT {
        SolveMethod::Direct
    } else {
        SolveMethod::ConjugateGradient
    };
    fit_spf_with(graph, cfg, method)
}

/// Value of the regularized weighted least-squares objective at `values`.
pub fn fit_objective(graph: &DistanceGraph, lambda: f64, values: &[f64]) -> f64 {
    let data: f64 = graph
        .pairs()
        .iter()
        .map(|p| {
            let r = values[p.i()] - values[p.j()] - p.distance();
            p.weight() * r * r
        })
        .sum();
    data + lambda * values.iter().map(|v| v * v).sum::<f64>()
}

/// Min-max scales a nondecreasing curve onto `[0, 1]`.
pub fn normalize_spf(values: &[f64]) -> Result<ProgressCurve> {
    if values.len() < 2 {
        return Err(Error::domain("a progress curve needs at least 2 samples"));
    }
    if values.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::domain("normalization expects a nondecreasing curve"));
    }
    let first = values[0];
    let range = values[values.len() - 1] - first;
    if !(range >= FLAT_EPSILON) {
        return Err(Error::DegenerateCurve { range });
    }
    let scaled = values.iter().map(|v| ((v - first) / range).min(1.0)).collect();
    ProgressCurve::new(scaled)
}

/// Smallest time `t` in `[0, T-1]` at which the piecewise-linear curve
/// reaches progress `u`. Flat stretches resolve to their left edge.
pub fn invert_spf(curve: &ProgressCurve, u: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::domain(format!("progress {u} outside [0, 1]")));
    }
    let v = curve.values();
    let k = v.partition_point(|&x| x < u);
    // v[T-1] == 1 >= u, so k is in range
    if v[k] == u || k == 0 {
        return Ok(k as f64);
    }
    let (lo, hi) = (v[k - 1], v[k]);
    Ok((k - 1) as f64 + (u - lo) / (hi - lo))
}

/// `max(0, 1 - 2 · mean_k |Ŝ[k] - k/(T-1)|)`: 1 for an exactly linear curve,
/// near 0 for a single step at the end.
pub fn linearity_score(curve: &ProgressCurve) -> f64 {
    let v = curve.values();
    let last = (v.len() - 1) as f64;
    let mean_dev = v
        .iter()
        .enumerate()
        .map(|(k, s)| (s - k as f64 / last).abs())
        .sum::<f64>()
        / v.len() as f64;
    (1.0 - 2.0 * mean_dev).max(0.0)
}

/// Full pipeline: solve, project to monotone, normalize, score.
pub fn fit_curve(graph: &DistanceGraph, cfg: &FitConfig) -> Result<SpfCurve> {
    let raw = fit_spf(graph, cfg)?;
    let normalized = normalize_spf(&monotone_project(&raw))?;
    SpfCurve::new(
        raw,
        normalized,
        *cfg,
        GraphSummary {
            window: graph.window(),
            sigma: graph.sigma(),
            power: graph.power(),
            source_tag: graph.source_tag().to_owned(),
        },
    )
}

/// Embeddings to curve: normalizes rows if needed, builds the graph, fits.
pub fn fit_embeddings(
    seq: &EmbeddingSequence,
    graph_cfg: &GraphConfig,
    fit_cfg: &FitConfig,
) -> Result<SpfCurve> {
    let graph = if seq.is_normalized() {
        build_pair_graph(seq, graph_cfg)?
    } else {
        build_pair_graph(&normalize_embeddings(seq)?, graph_cfg)?
    };
    fit_curve(&graph, fit_cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PairConstraint;

    fn two_frame(distance: f64) -> DistanceGraph {
        DistanceGraph::from_pairs(
            2,
            1,
            None,
            1.0,
            "",
            vec![PairConstraint::new(1, 0, distance, 1.0).unwrap()],
        )
        .unwrap()
    }

    #[test]
    fn two_frame_closed_form() {
        // 2x2 normal equations: [[1+λ, -1], [-1, 1+λ]] S = [-d, d]
        // => S = (-s, s) with s = d / (2 + λ)
        let cfg = FitConfig::with_lambda(0.01).unwrap();
        let s = fit_spf(&two_frame(1.0), &cfg).unwrap();
        assert!((s[1] - s[0] - 2.0 / 2.01).abs() < 1e-12);
        assert!((s[1] - 1.0 / 2.01).abs() < 1e-14);
        assert!((s[0] + 1.0 / 2.01).abs() < 1e-14);
    }

    #[test]
    fn zero_distances_give_zero() {
        let s = fit_spf(&two_frame(0.0), &FitConfig::default()).unwrap();
        assert_eq!(s, vec![0.0, 0.0]);
    }

    #[test]
    fn methods_agree() {
        let pairs = (1usize..12)
            .flat_map(|i| {
                (i.saturating_sub(3)..i).map(move |j| {
                    let d = ((i * 31 + j * 17) % 13) as f64 / 10.0;
                    PairConstraint::new(i, j, d, 1.0 / (i - j) as f64).unwrap()
                })
            })
            .collect();
        let g = DistanceGraph::from_pairs(12, 3, None, 1.0, "", pairs).unwrap();
        let cfg = FitConfig::default();
        let a = fit_spf_with(&g, &cfg, SolveMethod::Direct).unwrap();
        let b = fit_spf_with(&g, &cfg, SolveMethod::ConjugateGradient).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn normalize_affine() {
        let c = normalize_spf(&[2.0, 3.0, 5.0]).unwrap();
        assert_eq!(c.values()[0], 0.0);
        assert!((c.values()[1] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(c.values()[2], 1.0);
    }

    #[test]
    fn normalize_flat_is_degenerate() {
        assert!(matches!(normalize_spf(&[1.0, 1.0, 1.0]), Err(Error::DegenerateCurve { .. })));
        assert!(normalize_spf(&[0.0, 2.0, 1.0]).is_err());
    }

    #[test]
    fn invert_examples() {
        let c = ProgressCurve::new(vec![0.0, 0.5, 1.0]).unwrap();
        assert_eq!(invert_spf(&c, 0.25).unwrap(), 0.5);
        let plateau = ProgressCurve::new(vec![0.0, 0.0, 1.0]).unwrap();
        assert_eq!(invert_spf(&plateau, 0.0).unwrap(), 0.0);
        let sq = ProgressCurve::new((0..5).map(|k| (k as f64 / 4.0).powi(2)).collect()).unwrap();
        assert_eq!(invert_spf(&sq, 0.25).unwrap(), 2.0);
        assert!(invert_spf(&c, 1.5).is_err());
        assert!(invert_spf(&c, -0.1).is_err());
    }

    #[test]
    fn invert_interior_plateau_left_edge() {
        let c = ProgressCurve::new(vec![0.0, 0.4, 0.4, 0.4, 1.0]).unwrap();
        assert_eq!(invert_spf(&c, 0.4).unwrap(), 1.0);
        assert_eq!(invert_spf(&c, 1.0).unwrap(), 4.0);
    }

    #[test]
    fn linearity_examples() {
        assert_eq!(linearity_score(&ProgressCurve::linear(9).unwrap()), 1.0);
        assert_eq!(linearity_score(&ProgressCurve::new(vec![0.0, 0.5, 1.0]).unwrap()), 1.0);
        let mut step = vec![0.0; 11];
        step[10] = 1.0;
        let ls = linearity_score(&ProgressCurve::new(step).unwrap());
        // mean deviation (1/11) * sum_{k=0..9} k/10 = 4.5/11
        assert!((ls - (1.0 - 9.0 / 11.0)).abs() < 1e-15);
        assert!((ls - 0.1818).abs() < 1e-4);
    }
}
