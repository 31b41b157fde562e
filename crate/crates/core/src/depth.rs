//! Modified band depth (MBD), modified epigraph index (MEI) and the quadratic
//! relation between them.
//!
//! Both indices are time averages under the grid measure of
//! [`TimeGrid::weights`](crate::TimeGrid::weights). MEI counts every curve
//! with `x_i(t) >= x(t)`, the curve itself included. In MBD every pair that
//! contains the curve itself covers it for the whole interval.
//!
//! Ties between distinct curves are resolved by [`BandRule`]. Under the
//! default [`BandRule::HalfOpen`] a band covers `x(t)` when
//! `min(x_i, x_j)(t) < x(t) <= max(x_i, x_j)(t)`, i.e. exactly one of the two
//! curves lies in the epigraph set `{x_i >= x}`. With that rule
//!
//! ```text
//! MBD(x) = a0 + a1 * MEI(x) + a2 * cross_term(x)
//! ```
//!
//! holds exactly on every sample, tied or not, and therefore so does the
//! parabola bound `MBD <= a0 + a1 MEI + a2 n^2 MEI^2`. The classical closed
//! band ([`BandRule::Closed`]) agrees with it whenever no two curves share a
//! value at a grid point.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sample::FunctionalSample;

/// Band membership rule for values tied with the curve being scored.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandRule {
    /// `min < x <= max`; tied curves count as lying above.
    #[default]
    HalfOpen,
    /// `min <= x <= max`.
    Closed,
}

/// Coefficients of the MBD/MEI relation for a sample of size `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParabolaCoefficients {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub n: usize,
}

impl ParabolaCoefficients {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "parabola needs n >= 2, got {n}");
        let nf = n as f64;
        let a0 = -2.0 / (nf * (nf - 1.0));
        Self {
            a0,
            a1: 2.0 * (nf + 1.0) / (nf - 1.0),
            a2: a0,
            n,
        }
    }

    /// `a0 + a1 * mei + a2 * n^2 * mei^2`.
    pub fn value(&self, mei: f64) -> f64 {
        let n = self.n as f64;
        self.a0 + self.a1 * mei + self.a2 * n * n * mei * mei
    }
}

pub fn parabola_value(coeffs: &ParabolaCoefficients, mei: f64) -> f64 {
    coeffs.value(mei)
}

/// MBD, MEI and cross term of every curve, from one sorting pass.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthProfile {
    pub mbd: Vec<f64>,
    pub mei: Vec<f64>,
    pub cross: Vec<f64>,
}

/// Per-time-point counts for one curve against the rest of a sample.
#[derive(Debug, Clone, Copy)]
struct PointCounts {
    below: usize,
    ge_others: usize,
    gt_others: usize,
}

impl PointCounts {
    fn covering_pairs(&self, n: usize, rule: BandRule) -> usize {
        let above = match rule {
            BandRule::HalfOpen => self.ge_others,
            BandRule::Closed => self.gt_others,
        };
        choose2(n) - choose2(above) - choose2(self.below)
    }
}

fn choose2(k: usize) -> usize {
    k * k.saturating_sub(1) / 2
}

/// Each grid column of a sample, sorted ascending.
#[derive(Debug, Clone)]
pub(crate) struct SortedColumns {
    columns: Vec<Vec<f64>>,
    n: usize,
}

impl SortedColumns {
    pub(crate) fn new(sample: &FunctionalSample) -> Self {
        let n = sample.n();
        let columns = (0..sample.p())
            .into_par_iter()
            .map(|t| {
                let mut col: Vec<f64> = sample.curves().map(|c| c[t]).collect();
                col.sort_by(f64::total_cmp);
                col
            })
            .collect();
        Self { columns, n }
    }

    /// Counts for a value that is itself one of the column entries.
    fn member(&self, t: usize, v: f64) -> PointCounts {
        let col = &self.columns[t];
        let below = col.partition_point(|&u| u < v);
        let not_above = col.partition_point(|&u| u <= v);
        PointCounts {
            below,
            ge_others: self.n - below - 1,
            gt_others: self.n - not_above,
        }
    }

    /// Counts for `v` placed in the column in place of `replaced`.
    fn substitute(&self, t: usize, v: f64, replaced: f64) -> PointCounts {
        let col = &self.columns[t];
        let below = col.partition_point(|&u| u < v);
        let not_above = col.partition_point(|&u| u <= v);
        PointCounts {
            below: below - usize::from(replaced < v),
            ge_others: self.n - below - usize::from(replaced >= v),
            gt_others: self.n - not_above - usize::from(replaced > v),
        }
    }
}

fn accumulate(
    n: usize,
    weights: &[f64],
    rule: BandRule,
    counts: impl Iterator<Item = PointCounts>,
) -> (f64, f64, f64) {
    let pairs = choose2(n) as f64;
    let (mut mbd, mut mei, mut cross) = (0.0, 0.0, 0.0);
    for (w, c) in weights.iter().zip(counts) {
        let ge = (c.ge_others + 1) as f64;
        mbd += w * c.covering_pairs(n, rule) as f64 / pairs;
        mei += w * ge / n as f64;
        cross += w * ge * ge;
    }
    (mbd, mei, cross)
}

/// MBD, MEI and cross term of every curve in O(n p log n).
///
/// At each grid point the curves strictly below and those above (per `rule`)
/// are counted from the sorted column; the pairs that miss the curve are the
/// ones lying entirely on one side, so the covering count is
/// `C(n,2) - C(above,2) - C(below,2)`.
pub fn depth_profile(sample: &FunctionalSample, rule: BandRule) -> DepthProfile {
    let sorted = SortedColumns::new(sample);
    let weights = sample.grid().weights();
    let n = sample.n();
    let per_curve: Vec<(f64, f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let curve = sample.curve(i);
            let counts = curve.iter().enumerate().map(|(t, &v)| sorted.member(t, v));
            accumulate(n, weights, rule, counts)
        })
        .collect();
    let mut profile = DepthProfile {
        mbd: Vec::with_capacity(n),
        mei: Vec::with_capacity(n),
        cross: Vec::with_capacity(n),
    };
    for (mbd, mei, cross) in per_curve {
        profile.mbd.push(mbd);
        profile.mei.push(mei);
        profile.cross.push(cross);
    }
    profile
}

/// MBD and MEI of `curve` in the sample obtained by substituting it for
/// curve `index`, without rebuilding the sample.
pub(crate) fn substituted_depth(
    sample: &FunctionalSample,
    sorted: &SortedColumns,
    index: usize,
    curve: &[f64],
    rule: BandRule,
) -> (f64, f64) {
    let original = sample.curve(index);
    let counts = curve
        .iter()
        .zip(original)
        .enumerate()
        .map(|(t, (&v, &old))| sorted.substitute(t, v, old));
    let (mbd, mei, _) = accumulate(sample.n(), sample.grid().weights(), rule, counts);
    (mbd, mei)
}

/// MBD of every curve by the counting decomposition.
pub fn mbd_all_fast(sample: &FunctionalSample, rule: BandRule) -> Vec<f64> {
    depth_profile(sample, rule).mbd
}

/// MBD of every curve by enumerating all `C(n,2)` bands. O(n^3 p); meant as
/// a reference for testing.
pub fn mbd_all_oracle(sample: &FunctionalSample, rule: BandRule) -> Vec<f64> {
    let n = sample.n();
    let weights = sample.grid().weights();
    let pairs = choose2(n) as f64;
    (0..n)
        .map(|x| {
            let cx = sample.curve(x);
            let mut total = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    if i == x || j == x {
                        total += 1.0;
                        continue;
                    }
                    let (ci, cj) = (sample.curve(i), sample.curve(j));
                    let mut inside = 0.0;
                    for t in 0..cx.len() {
                        let lo = ci[t].min(cj[t]);
                        let hi = ci[t].max(cj[t]);
                        let covered = match rule {
                            BandRule::HalfOpen => lo < cx[t] && cx[t] <= hi,
                            BandRule::Closed => lo <= cx[t] && cx[t] <= hi,
                        };
                        if covered {
                            inside += weights[t];
                        }
                    }
                    total += inside;
                }
            }
            total / pairs
        })
        .collect()
}

/// MEI of every curve straight from the definition. O(n^2 p).
pub fn mei_all(sample: &FunctionalSample) -> Vec<f64> {
    let n = sample.n();
    let weights = sample.grid().weights();
    sample
        .curves()
        .map(|x| {
            let mut total = 0.0;
            for other in sample.curves() {
                for (t, w) in weights.iter().enumerate() {
                    if other[t] >= x[t] {
                        total += w;
                    }
                }
            }
            total / n as f64
        })
        .collect()
}

/// `sum_i sum_j λ(E_i ∩ E_j) / λ(I)` for `E_i = {t : x_i(t) >= x(t)}`, which
/// is the time average of `a_x(t)^2` where `a_x(t)` counts the curves at or
/// above `x` (itself included).
pub fn cross_term(sample: &FunctionalSample, index: usize) -> Result<f64> {
    if index >= sample.n() {
        return Err(Error::IndexOutOfRange {
            index,
            n: sample.n(),
        });
    }
    let x = sample.curve(index);
    let weights = sample.grid().weights();
    Ok(weights
        .iter()
        .enumerate()
        .map(|(t, w)| {
            let at_or_above = sample.curves().filter(|c| c[t] >= x[t]).count() as f64;
            w * at_or_above * at_or_above
        })
        .sum())
}
