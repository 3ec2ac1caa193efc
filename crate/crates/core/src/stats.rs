//! Small numeric helpers shared by the learner and the evaluation code.

/// Percentile with linear interpolation between order statistics (inclusive
/// method): position `(n - 1) * q` in the sorted sample. `q` is a fraction in
/// `[0, 1]`. Returns `None` for an empty slice.
///
/// Non-finite inputs are not filtered; callers guarantee finiteness.
pub fn percentile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Some(percentile_sorted(&sorted, q))
}

/// Same as [`percentile`] for an already ascending slice.
pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let q = q.clamp(0.0, 1.0);
    let pos = (sorted.len() - 1) as f64 * q;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi || frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

/// Arithmetic mean, computed relative to the first element so that a
/// constant vector yields exactly that constant.
pub fn mean(values: &[f64]) -> Option<f64> {
    let first = *values.first()?;
    let shift: f64 = values.iter().map(|v| v - first).sum();
    Some(first + shift / values.len() as f64)
}
