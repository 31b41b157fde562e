//! Functional boxplot: central region of the deepest half of the sample and
//! fences obtained by inflating it, for magnitude outliers.

use serde::{Deserialize, Serialize};

use crate::depth::{self, BandRule};
use crate::sample::FunctionalSample;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalBoxplotResult {
    pub central_lower: Vec<f64>,
    pub central_upper: Vec<f64>,
    pub fence_lower: Vec<f64>,
    pub fence_upper: Vec<f64>,
    /// Deepest curve (smallest index among ties).
    pub median_index: usize,
    /// Indices of the `ceil(n/2)` deepest curves, deepest first.
    pub central_set: Vec<usize>,
    pub magnitude_outliers: Vec<usize>,
}

/// Ranks curves by MBD; the envelope of the `ceil(n/2)` deepest is widened by
/// `factor` times its pointwise width on both sides. A curve is an outlier
/// when it leaves the fences strictly at one grid point or more.
pub fn functional_boxplot(
    sample: &FunctionalSample,
    factor: f64,
    rule: BandRule,
) -> FunctionalBoxplotResult {
    let mbd = depth::mbd_all_fast(sample, rule);
    let mut order: Vec<usize> = (0..sample.n()).collect();
    order.sort_by(|&a, &b| mbd[b].total_cmp(&mbd[a]).then(a.cmp(&b)));
    let central_set: Vec<usize> = order[..sample.n().div_ceil(2)].to_vec();

    let p = sample.p();
    let mut central_lower = vec![f64::INFINITY; p];
    let mut central_upper = vec![f64::NEG_INFINITY; p];
    for &i in &central_set {
        for (t, &v) in sample.curve(i).iter().enumerate() {
            central_lower[t] = central_lower[t].min(v);
            central_upper[t] = central_upper[t].max(v);
        }
    }
    let (fence_lower, fence_upper): (Vec<f64>, Vec<f64>) = central_lower
        .iter()
        .zip(&central_upper)
        .map(|(&lo, &hi)| {
            let width = hi - lo;
            (lo - factor * width, hi + factor * width)
        })
        .unzip();

    let magnitude_outliers = (0..sample.n())
        .filter(|&i| {
            sample
                .curve(i)
                .iter()
                .enumerate()
                .any(|(t, &v)| v < fence_lower[t] || v > fence_upper[t])
        })
        .collect();

    FunctionalBoxplotResult {
        central_lower,
        central_upper,
        fence_lower,
        fence_upper,
        median_index: order[0],
        central_set,
        magnitude_outliers,
    }
}
