//! Piecewise-linear segmentation of a progress curve and the regeneration
//! plans derived from it.
//!
//! Segments are closed index ranges `[a, b]` with `b > a`; consecutive
//! segments share their breakpoint. Each segment gets its own least-squares
//! line, with no continuity constraint across breakpoints.

use crate::error::{Error, Result};
use crate::model::{Clip, Keyframe, ProgressCurve, RegenPlan, Segment, SegmentationResult};

/// Prefix sums of `k`, `S_k`, `k²`, `k·S_k` and `S_k²` for O(1) range fits.
struct RangeSums {
    k: Vec<f64>,
    s: Vec<f64>,
    kk: Vec<f64>,
    ks: Vec<f64>,
    ss: Vec<f64>,
}

impl RangeSums {
    fn new(values: &[f64]) -> Self {
        let n = values.len();
        let mut sums = RangeSums {
            k: vec![0.0; n + 1],
            s: vec![0.0; n + 1],
            kk: vec![0.0; n + 1],
            ks: vec![0.0; n + 1],
            ss: vec![0.0; n + 1],
        };
        for (i, &v) in values.iter().enumerate() {
            let k = i as f64;
            sums.k[i + 1] = sums.k[i] + k;
            sums.s[i + 1] = sums.s[i] + v;
            sums.kk[i + 1] = sums.kk[i] + k * k;
            sums.ks[i + 1] = sums.ks[i] + k * v;
            sums.ss[i + 1] = sums.ss[i] + v * v;
        }
        sums
    }

    /// Residual sum of squares of the best line through `S[a..=b]`.
    fn sse(&self, a: usize, b: usize) -> f64 {
        let n = (b - a + 1) as f64;
        let range = |p: &[f64]| p[b + 1] - p[a];
        let (sk, ss) = (range(&self.k), range(&self.s));
        let sxx = range(&self.kk) - sk * sk / n;
        let sxy = range(&self.ks) - sk * ss / n;
        let syy = range(&self.ss) - ss * ss / n;
        (syy - sxy * sxy / sxx).max(0.0)
    }
}

/// Least-squares line through `S[a..=b]`, computed directly from the samples.
pub fn fit_line(values: &[f64], a: usize, b: usize) -> Segment {
    let xs = a..=b;
    let n = (b - a + 1) as f64;
    let k_mean = (a + b) as f64 / 2.0;
    let s_mean = values[a..=b].iter().sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for k in xs.clone() {
        let dk = k as f64 - k_mean;
        sxx += dk * dk;
        sxy += dk * (values[k] - s_mean);
    }
    let slope = sxy / sxx;
    let intercept = s_mean - slope * k_mean;
    let sse = xs
        .map(|k| {
            let r = values[k] - (slope * k as f64 + intercept);
            r * r
        })
        .sum();
    Segment {
        start: a,
        end: b,
        slope,
        intercept,
        sse,
    }
}

fn tie_margin(cost: f64) -> f64 {
    1e-12 * (1.0 + cost.abs())
}

/// Exact dynamic program over tight partitions minimizing `Σ SSE + C·K`.
///
/// Among partitions whose objectives agree to within rounding, the one with
/// fewest segments wins, then the one whose last breakpoint is earliest.
pub fn segmented_least_squares(values: &[f64], penalty: f64) -> Result<SegmentationResult> {
    let t = values.len();
    if t < 2 {
        return Err(Error::domain("segmentation needs at least 2 frames"));
    }
    if !(penalty >= 0.0) {
        return Err(Error::domain(format!("penalty must be nonnegative, got {penalty}")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("curve values must be finite"));
    }
    let sums = RangeSums::new(values);

    // best[b] = (objective, segment count, previous breakpoint) for [0, b]
    let mut best: Vec<(f64, usize, usize)> = vec![(f64::INFINITY, 0, 0); t];
    best[0] = (0.0, 0, 0);
    for b in 1..t {
        let mut choice = (f64::INFINITY, usize::MAX, 0);
        for a in 0..b {
            let (prev_cost, prev_count, _) = best[a];
            let cost = prev_cost + sums.sse(a, b) + penalty;
            let count = prev_count + 1;
            let margin = tie_margin(choice.0.min(cost));
            let better = if cost < choice.0 - margin {
                true
            } else if cost <= choice.0 + margin {
                // tied: fewer segments first; equal counts keep the earlier `a`
                count < choice.1
            } else {
                false
            };
            if better {
                choice = (cost, count, a);
            }
        }
        best[b] = choice;
    }

    let mut cuts = vec![t - 1];
    let mut b = t - 1;
    while b > 0 {
        b = best[b].2;
        cuts.push(b);
    }
    cuts.reverse();
    let segments = cuts.windows(2).map(|w| fit_line(values, w[0], w[1])).collect();
    SegmentationResult::new(t, penalty, segments)
}

/// Default penalty: twice the (population) variance of the first differences.
pub fn auto_penalty(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::domain("penalty estimation needs at least 2 samples"));
    }
    let diffs: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n;
    Ok(2.0 * var)
}

fn check_pair(curve: &ProgressCurve, seg: &SegmentationResult) -> Result<()> {
    if curve.len() != seg.frame_count() {
        return Err(Error::domain(format!(
            "curve has {} frames but the segmentation covers {}",
            curve.len(),
            seg.frame_count()
        )));
    }
    Ok(())
}

/// One keyframe per breakpoint, targeted at `floor(T_out · Ŝ[boundary])`.
///
/// Collisions after flooring are pushed forward one frame at a time, then
/// capped so every keyframe still fits before `T_out`.
pub fn plan_keyframes(
    curve: &ProgressCurve,
    seg: &SegmentationResult,
    total_length: usize,
) -> Result<RegenPlan> {
    check_pair(curve, seg)?;
    let boundaries = seg.boundaries();
    let n = boundaries.len();
    if n > total_length {
        return Err(Error::Planning(format!(
            "{n} keyframes do not fit in {total_length} output frames; \
             use a larger penalty or a longer output"
        )));
    }
    let last = total_length - 1;
    let mut targets: Vec<usize> = boundaries
        .iter()
        .map(|&b| ((total_length as f64 * curve.values()[b]).floor() as usize).min(last))
        .collect();
    for i in 1..n {
        targets[i] = targets[i].max(targets[i - 1] + 1);
    }
    for (i, t) in targets.iter_mut().enumerate() {
        *t = (*t).min(last - (n - 1 - i));
    }
    let keyframes = boundaries
        .into_iter()
        .zip(targets)
        .map(|(source_frame, target_time)| Keyframe {
            source_frame,
            target_time,
        })
        .collect();
    RegenPlan::from_keyframes(total_length, keyframes)
}

/// Splits `total` into integer parts proportional to `shares` (which should
/// sum to one) by the largest-remainder method; ties favor earlier parts.
pub fn apportion(shares: &[f64], total: usize) -> Vec<usize> {
    let raw: Vec<f64> = shares.iter().map(|s| s * total as f64).collect();
    // the small nudge keeps exact products such as 30.0 - 1ulp from flooring down
    let mut parts: Vec<usize> = raw.iter().map(|r| (r + 1e-9).floor().max(0.0) as usize).collect();
    let remainder: Vec<f64> = raw.iter().zip(&parts).map(|(r, p)| r - *p as f64).collect();
    let mut order: Vec<usize> = (0..parts.len()).collect();
    // stable sort keeps index order among equal remainders
    order.sort_by(|&i, &j| remainder[j].total_cmp(&remainder[i]));
    let assigned: usize = parts.iter().sum();
    if assigned < total {
        for &i in order.iter().cycle().take(total - assigned) {
            parts[i] += 1;
        }
    } else {
        let mut excess = assigned - total;
        for &i in order.iter().rev().cycle() {
            if excess == 0 {
                break;
            }
            if parts[i] > 0 {
                parts[i] -= 1;
                excess -= 1;
            }
        }
    }
    parts
}

/// One clip per segment, with length proportional to the segment's progress.
pub fn plan_clips(
    curve: &ProgressCurve,
    seg: &SegmentationResult,
    total_length: usize,
) -> Result<RegenPlan> {
    check_pair(curve, seg)?;
    let v = curve.values();
    let shares: Vec<f64> = seg.segments().iter().map(|s| v[s.end] - v[s.start]).collect();
    let lengths = apportion(&shares, total_length);
    if let Some(k) = lengths.iter().position(|&l| l < 2) {
        return Err(Error::Planning(format!(
            "segment {k} would get a {}-frame clip (minimum 2); \
             use a larger penalty or a longer output",
            lengths[k]
        )));
    }
    let clips = seg
        .segments()
        .iter()
        .zip(lengths)
        .map(|(s, length)| Clip {
            start_frame: s.start,
            end_frame: s.end,
            length,
        })
        .collect();
    RegenPlan::from_clips(total_length, clips)
}
