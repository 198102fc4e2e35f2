//! Piecewise-linear helpers over uniformly spaced samples.

/// Evaluates the piecewise-linear interpolant of `values` (knots at 0, 1, ..)
/// at `t`, clamping `t` to `[0, len - 1]`.
pub fn sample(values: &[f64], t: f64) -> f64 {
    let last = values.len() - 1;
    if last == 0 || t <= 0.0 {
        return values[0];
    }
    if t >= last as f64 {
        return values[last];
    }
    let k = t.floor() as usize;
    let frac = t - k as f64;
    if frac == 0.0 {
        return values[k];
    }
    values[k] + frac * (values[k + 1] - values[k])
}
