use alloc::vec;

use crate::{Error, Result};

/// Dynamic time warping with absolute-difference local cost, steps
/// {match, insert, delete} and no window constraint.
///
/// Symmetric and zero on identical inputs, but not a metric: the triangle
/// inequality does not hold in general.
pub fn dtw_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySeries);
    }
    let m = b.len();
    let mut prev = vec![f64::INFINITY; m + 1];
    let mut curr = vec![f64::INFINITY; m + 1];
    prev[0] = 0.0;
    for &x in a {
        curr[0] = f64::INFINITY;
        for (j, &y) in b.iter().enumerate() {
            let best = prev[j].min(prev[j + 1]).min(curr[j]);
            curr[j + 1] = (x - y).abs() + best;
        }
        core::mem::swap(&mut prev, &mut curr);
    }
    Ok(prev[m])
}
