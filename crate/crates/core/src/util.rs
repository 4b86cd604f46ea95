/// Index of the largest value; ties (and NaN comparisons) resolve to the
/// lowest index. Returns 0 for an empty iterator.
pub(crate) fn argmax_first(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (i, v) in values.into_iter().enumerate() {
        if v > best_val {
            best = i;
            best_val = v;
        }
    }
    best
}

pub(crate) fn stack(x: &[f64], z: &[f64]) -> Vec<f64> {
    let mut u = Vec::with_capacity(x.len() + z.len());
    u.extend_from_slice(x);
    u.extend_from_slice(z);
    u
}
