//! Shape outlier detection on the MEI/MBD plane.
//!
//! Each curve gets the vertical distance `d_i = P(me_i) - mb_i` from its
//! (MEI, MBD) point up to the parabola. Curves whose distance reaches the
//! boundary threshold are shape outliers. Curves that poke out of the
//! envelope of the other curves are then shifted vertically until they touch
//! that envelope and re-scored against the *same* threshold; a curve of
//! typical shape gains depth when moved inward, an atypical one does not.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adjusted::{self, Calibration, CalibrationConfig};
use crate::depth::{self, BandRule, ParabolaCoefficients, SortedColumns};
use crate::error::Result;
use crate::fbplot::{self, FunctionalBoxplotResult};
use crate::sample::FunctionalSample;
use crate::stats;

/// Smallest threshold a boundary may report. Distances of curves that sit on
/// the parabola are zero up to rounding, so a zero threshold would flag them.
pub const MIN_THRESHOLD: f64 = 1e-9;

/// Depth summary of one curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthRecord {
    pub mbd: f64,
    pub mei: f64,
    pub parabola: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    /// `d >= Q3 + F * IQR`.
    Standard,
    /// `d >= F * Q1` with `F` calibrated on simulated clean samples.
    Adjusted,
}

/// Detection boundary on the distances to the parabola.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Boundary {
    pub kind: BoundaryKind,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
    pub factor: f64,
}

impl Boundary {
    /// Boxplot rule on `distances`.
    pub fn standard(distances: &[f64], factor: f64) -> Result<Self> {
        let (q1, q3, iqr) = quartiles(distances)?;
        Ok(Self {
            kind: BoundaryKind::Standard,
            q1,
            q3,
            iqr,
            factor,
        })
    }

    pub fn adjusted(distances: &[f64], factor: f64) -> Result<Self> {
        Ok(Self {
            kind: BoundaryKind::Adjusted,
            ..Self::standard(distances, factor)?
        })
    }

    pub fn threshold(&self) -> f64 {
        let raw = match self.kind {
            BoundaryKind::Standard => self.q3 + self.factor * self.iqr,
            BoundaryKind::Adjusted => self.factor * self.q1,
        };
        raw.max(MIN_THRESHOLD)
    }

    /// Whether a curve at `distance` from the parabola is outlying.
    pub fn is_outlying(&self, distance: f64) -> bool {
        distance >= self.threshold()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Direct,
    ShiftedUp,
    ShiftedDown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeOutlier {
    pub index: usize,
    pub stage: Stage,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shifted_mei: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shifted_mbd: Option<f64>,
}

/// A vertically translated copy of a curve.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftedCurve {
    pub stage: Stage,
    pub values: Vec<f64>,
}

/// Everything the detector found, plus the data behind the plot.
#[derive(Debug, Clone, PartialEq)]
pub struct OutlierReport {
    pub shape_outliers: Vec<ShapeOutlier>,
    pub magnitude_outliers: Vec<usize>,
    pub boundary: Boundary,
    pub records: Vec<DepthRecord>,
    pub calibration: Option<Calibration>,
    pub fbplot: Option<FunctionalBoxplotResult>,
}

impl OutlierReport {
    pub fn shape_outlier_indices(&self) -> Vec<usize> {
        self.shape_outliers.iter().map(|o| o.index).collect()
    }

    pub fn threshold(&self) -> f64 {
        self.boundary.threshold()
    }
}

#[derive(Debug, Clone)]
pub struct OutliergramOptions {
    pub boundary: BoundaryKind,
    /// Boxplot factor for the standard boundary.
    pub factor: f64,
    pub rule: BandRule,
    /// Run the vertical-shift pass.
    pub shift_pass: bool,
    /// Used when `boundary` is [`BoundaryKind::Adjusted`].
    pub calibration: CalibrationConfig,
    /// Also run the functional boxplot and report magnitude outliers.
    pub with_fbplot: bool,
    pub fbplot_factor: f64,
}

impl Default for OutliergramOptions {
    fn default() -> Self {
        Self {
            boundary: BoundaryKind::Standard,
            factor: 1.5,
            rule: BandRule::default(),
            shift_pass: true,
            calibration: CalibrationConfig::default(),
            with_fbplot: false,
            fbplot_factor: 1.5,
        }
    }
}

impl OutliergramOptions {
    pub fn adjusted(seed: u64) -> Self {
        Self {
            boundary: BoundaryKind::Adjusted,
            calibration: CalibrationConfig {
                seed,
                ..CalibrationConfig::default()
            },
            ..Self::default()
        }
    }
}

pub fn compute_records(sample: &FunctionalSample, rule: BandRule) -> Vec<DepthRecord> {
    let profile = depth::depth_profile(sample, rule);
    let coeffs = ParabolaCoefficients::new(sample.n());
    profile
        .mbd
        .iter()
        .zip(&profile.mei)
        .map(|(&mbd, &mei)| {
            let parabola = coeffs.value(mei);
            DepthRecord {
                mbd,
                mei,
                parabola,
                distance: parabola - mbd,
            }
        })
        .collect()
}

pub fn distances(records: &[DepthRecord]) -> Vec<f64> {
    records.iter().map(|r| r.distance).collect()
}

/// `(q1, q3, iqr)` with linear interpolation between order statistics.
pub fn quartiles(values: &[f64]) -> Result<(f64, f64, f64)> {
    stats::quartiles(values)
}

pub fn detect_direct(records: &[DepthRecord], boundary: &Boundary) -> Vec<usize> {
    records
        .iter()
        .enumerate()
        .filter(|(_, r)| boundary.is_outlying(r.distance))
        .map(|(i, _)| i)
        .collect()
}

/// Pointwise extremes of a sample, keeping the runner-up so that the
/// envelope of "all curves but one" is available in O(1).
struct Envelope {
    lowest: Vec<(f64, usize)>,
    second_lowest: Vec<f64>,
    highest: Vec<(f64, usize)>,
    second_highest: Vec<f64>,
}

impl Envelope {
    fn new(sample: &FunctionalSample) -> Self {
        let p = sample.p();
        let mut env = Self {
            lowest: vec![(f64::INFINITY, usize::MAX); p],
            second_lowest: vec![f64::INFINITY; p],
            highest: vec![(f64::NEG_INFINITY, usize::MAX); p],
            second_highest: vec![f64::NEG_INFINITY; p],
        };
        for (i, curve) in sample.curves().enumerate() {
            for (t, &v) in curve.iter().enumerate() {
                if v < env.lowest[t].0 {
                    env.second_lowest[t] = env.lowest[t].0;
                    env.lowest[t] = (v, i);
                } else if v < env.second_lowest[t] {
                    env.second_lowest[t] = v;
                }
                if v > env.highest[t].0 {
                    env.second_highest[t] = env.highest[t].0;
                    env.highest[t] = (v, i);
                } else if v > env.second_highest[t] {
                    env.second_highest[t] = v;
                }
            }
        }
        env
    }

    fn min_without(&self, t: usize, i: usize) -> f64 {
        if self.lowest[t].1 == i {
            self.second_lowest[t]
        } else {
            self.lowest[t].0
        }
    }

    fn max_without(&self, t: usize, i: usize) -> f64 {
        if self.highest[t].1 == i {
            self.second_highest[t]
        } else {
            self.highest[t].0
        }
    }

    fn candidates(&self, curve: &[f64], i: usize) -> Vec<ShiftedCurve> {
        let mut gap_low = f64::INFINITY;
        let mut gap_high = f64::NEG_INFINITY;
        for (t, &v) in curve.iter().enumerate() {
            gap_low = gap_low.min(v - self.min_without(t, i));
            gap_high = gap_high.max(v - self.max_without(t, i));
        }
        let mut out = Vec::new();
        if gap_low < 0.0 {
            out.push(ShiftedCurve {
                stage: Stage::ShiftedUp,
                values: curve.iter().map(|v| v - gap_low).collect(),
            });
        }
        if gap_high > 0.0 {
            out.push(ShiftedCurve {
                stage: Stage::ShiftedDown,
                values: curve.iter().map(|v| v - gap_high).collect(),
            });
        }
        out
    }
}

/// Shifted versions of curve `index`: upward if it dips below every other
/// curve somewhere, downward if it rises above every other curve somewhere.
/// Each shift makes the curve touch the corresponding envelope of the others.
pub fn shift_candidates(sample: &FunctionalSample, index: usize) -> Vec<ShiftedCurve> {
    Envelope::new(sample).candidates(sample.curve(index), index)
}

/// Second pass: re-scores shifted copies of the non-flagged extreme curves
/// against the threshold already fixed by `boundary`.
pub fn detect_shifted(
    sample: &FunctionalSample,
    boundary: &Boundary,
    direct: &[usize],
    rule: BandRule,
) -> Vec<ShapeOutlier> {
    let envelope = Envelope::new(sample);
    let sorted = SortedColumns::new(sample);
    let coeffs = ParabolaCoefficients::new(sample.n());
    (0..sample.n())
        .into_par_iter()
        .filter(|i| direct.binary_search(i).is_err())
        .filter_map(|i| {
            envelope
                .candidates(sample.curve(i), i)
                .into_iter()
                .find_map(|shifted| {
                    let (mbd, mei) =
                        depth::substituted_depth(sample, &sorted, i, &shifted.values, rule);
                    boundary
                        .is_outlying(coeffs.value(mei) - mbd)
                        .then_some(ShapeOutlier {
                            index: i,
                            stage: shifted.stage,
                            shifted_mei: Some(mei),
                            shifted_mbd: Some(mbd),
                        })
                })
        })
        .collect()
}

/// Full detector: records, boundary, direct rule, shift pass and optionally
/// the functional boxplot.
pub fn run_outliergram(
    sample: &FunctionalSample,
    options: &OutliergramOptions,
) -> Result<OutlierReport> {
    let records = compute_records(sample, options.rule);
    let d = distances(&records);
    let (boundary, calibration) = match options.boundary {
        BoundaryKind::Standard => (Boundary::standard(&d, options.factor)?, None),
        BoundaryKind::Adjusted => {
            let cal = adjusted::calibrate_with_distances(
                sample,
                &d,
                &options.calibration,
                options.rule,
            )?;
            (cal.boundary, Some(cal))
        }
    };

    let direct = detect_direct(&records, &boundary);
    let mut shape_outliers: Vec<ShapeOutlier> = direct
        .iter()
        .map(|&index| ShapeOutlier {
            index,
            stage: Stage::Direct,
            shifted_mei: None,
            shifted_mbd: None,
        })
        .collect();
    if options.shift_pass {
        shape_outliers.extend(detect_shifted(sample, &boundary, &direct, options.rule));
        shape_outliers.sort_by_key(|o| o.index);
    }

    let fbplot = options
        .with_fbplot
        .then(|| fbplot::functional_boxplot(sample, options.fbplot_factor, options.rule));
    let magnitude_outliers = fbplot
        .as_ref()
        .map(|f| f.magnitude_outliers.clone())
        .unwrap_or_default();

    Ok(OutlierReport {
        shape_outliers,
        magnitude_outliers,
        boundary,
        records,
        calibration,
        fbplot,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::TimeGrid;
    use crate::simulation;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn sample(rows: Vec<Vec<f64>>) -> FunctionalSample {
        let p = rows[0].len();
        FunctionalSample::from_rows(TimeGrid::unit(p).unwrap(), rows).unwrap()
    }

    fn record(distance: f64) -> DepthRecord {
        DepthRecord {
            mbd: 0.5,
            mei: 0.5,
            parabola: 0.5 + distance,
            distance,
        }
    }

    /// Noise-free sines with level offsets: they cross nowhere.
    fn stacked_sines(n: usize, p: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| {
                (0..p)
                    .map(|k| (4.0 * PI * k as f64 / (p - 1) as f64).sin() + 0.1 * i as f64)
                    .collect()
            })
            .collect()
    }

    #[test]
    fn non_crossing_curves_have_zero_distance() {
        let s = sample(vec![vec![1.0; 5], vec![2.0; 5], vec![3.0; 5]]);
        for r in compute_records(&s, BandRule::HalfOpen) {
            assert!(r.distance.abs() < 1e-10);
            assert!((r.distance - (r.parabola - r.mbd)).abs() < 1e-12);
        }
    }

    #[test]
    fn figure1_outliers_have_largest_distances() {
        let s = simulation::figure1_sample(100);
        let records = compute_records(&s, BandRule::HalfOpen);
        let mut order: Vec<usize> = (0..s.n()).collect();
        order.sort_by(|&a, &b| records[b].distance.total_cmp(&records[a].distance));
        let mut top = [order[0], order[1]];
        top.sort();
        assert_eq!(top, [15, 16]);
    }

    #[test]
    fn zero_distances_flag_nothing() {
        let records: Vec<_> = (0..10).map(|_| record(0.0)).collect();
        let b = Boundary::standard(&distances(&records), 1.5).unwrap();
        assert!(b.threshold() > 0.0);
        assert!(detect_direct(&records, &b).is_empty());
    }

    #[test]
    fn far_distance_is_flagged() {
        let mut d: Vec<f64> = (0..20).map(|k| 0.001 * k as f64).collect();
        d[7] = 1.0;
        let records: Vec<_> = d.iter().map(|&x| record(x)).collect();
        let b = Boundary::standard(&d, 1.5).unwrap();
        assert_eq!(detect_direct(&records, &b), vec![7]);
    }

    #[test]
    fn boundary_inequality_is_inclusive() {
        let b = Boundary {
            kind: BoundaryKind::Adjusted,
            q1: 0.25,
            q3: 1.0,
            iqr: 0.75,
            factor: 2.0,
        };
        assert_eq!(b.threshold(), 0.5);
        assert!(b.is_outlying(0.5));
        assert!(!b.is_outlying(0.5 - 1e-12));
    }

    #[test]
    fn no_shift_for_interior_curve() {
        let s = sample(vec![vec![0.0; 4], vec![0.5, 0.2, 0.8, 0.5], vec![1.0; 4]]);
        assert!(shift_candidates(&s, 1).is_empty());
    }

    #[test]
    fn low_constant_curve_is_lifted_onto_envelope() {
        let mut rows = stacked_sines(6, 20);
        rows.push(vec![-10.0; 20]);
        let s = sample(rows);
        let cands = shift_candidates(&s, 6);
        assert_eq!(cands.len(), 1);
        assert_eq!(cands[0].stage, Stage::ShiftedUp);
        let gap = (0..20)
            .map(|t| {
                let lower = (0..6).map(|j| s.curve(j)[t]).fold(f64::INFINITY, f64::min);
                cands[0].values[t] - lower
            })
            .fold(f64::INFINITY, f64::min);
        assert!(gap.abs() < 1e-12);
    }

    #[test]
    fn curve_escaping_both_sides_gives_two_candidates() {
        let p = 11;
        let mut rows: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64 * 0.25; p]).collect();
        rows.push((0..p).map(|k| if k <= 5 { -1.0 } else { 2.0 }).collect());
        let s = sample(rows);
        let cands = shift_candidates(&s, 4);
        let stages: Vec<_> = cands.iter().map(|c| c.stage).collect();
        assert_eq!(stages, vec![Stage::ShiftedUp, Stage::ShiftedDown]);
    }

    #[test]
    fn shifted_pure_level_shift_is_not_flagged() {
        let p = 30;
        let mut rows = stacked_sines(20, p);
        // deepest curve of the stack, lifted far above the rest
        let lifted: Vec<f64> = rows[10].iter().map(|v| v + 5.0).collect();
        rows.push(lifted);
        let s = sample(rows);
        let records = compute_records(&s, BandRule::HalfOpen);
        let b = Boundary::standard(&distances(&records), 1.5).unwrap();
        let direct = detect_direct(&records, &b);
        assert!(!direct.contains(&20));
        let shifted = detect_shifted(&s, &b, &direct, BandRule::HalfOpen);
        assert!(shifted.iter().all(|o| o.index != 20));
    }

    #[test]
    fn nothing_outside_envelope_means_no_shift_stage() {
        let mut rows = vec![vec![-1.0; 8], vec![1.0; 8]];
        rows.extend((0..5).map(|i| (0..8).map(|t| ((i + t) % 3) as f64 * 0.1).collect()));
        let s = sample(rows);
        let b = Boundary {
            kind: BoundaryKind::Standard,
            q1: 0.0,
            q3: 0.0,
            iqr: 0.0,
            factor: 1.5,
        };
        let shifted = detect_shifted(&s, &b, &[0, 1], BandRule::HalfOpen);
        assert!(shifted.is_empty());
    }

    #[test]
    fn stacked_curves_report_nothing() {
        let s = sample(vec![vec![1.0; 6], vec![2.0; 6], vec![3.0; 6], vec![4.0; 6]]);
        let report = run_outliergram(&s, &OutliergramOptions::default()).unwrap();
        assert!(report.shape_outliers.is_empty());
    }

    #[test]
    fn figure3_planted_curves_are_found() {
        let s = simulation::figure3_sample(simulation::FIGURE3_SEED);
        let report = run_outliergram(&s, &OutliergramOptions::default()).unwrap();
        let found = report.shape_outlier_indices();
        for planted in simulation::FIGURE3_SHAPE_OUTLIERS {
            assert!(found.contains(&planted), "{planted} missing from {found:?}");
        }
        assert!(report
            .shape_outliers
            .iter()
            .any(|o| o.index == 53 && o.stage != Stage::Direct));
    }

    #[test]
    fn stages_are_disjoint() {
        let s = simulation::figure3_sample(simulation::FIGURE3_SEED);
        let report = run_outliergram(&s, &OutliergramOptions::default()).unwrap();
        let mut idx = report.shape_outlier_indices();
        let len = idx.len();
        idx.dedup();
        assert_eq!(idx.len(), len);
        for o in &report.shape_outliers {
            let direct = report.boundary.is_outlying(report.records[o.index].distance);
            assert_eq!(direct, o.stage == Stage::Direct);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn detected_set_invariant_under_shift_and_scale(
            seed in any::<u64>(),
            scale in 0.2f64..5.0,
            offset in -3.0f64..3.0,
        ) {
            let spec = simulation::ModelSpec::new(simulation::Model::M3, 40, 0.1, seed);
            let (s, _) = simulation::generate(&spec);
            let moved = s.map_values(|t, v| scale * v + offset * (t as f64 * 0.3).cos()).unwrap();
            let a = run_outliergram(&s, &OutliergramOptions::default()).unwrap();
            let b = run_outliergram(&moved, &OutliergramOptions::default()).unwrap();
            prop_assert_eq!(a.shape_outlier_indices(), b.shape_outlier_indices());
            for (ra, rb) in a.records.iter().zip(&b.records) {
                prop_assert!((ra.distance - rb.distance).abs() < 1e-12);
            }
        }

        #[test]
        fn larger_factor_never_adds_direct_outliers(
            seed in any::<u64>(),
            f1 in 0.5f64..3.0,
            df in 0.0f64..3.0,
        ) {
            let spec = simulation::ModelSpec::new(simulation::Model::M1, 50, 0.1, seed);
            let (s, _) = simulation::generate(&spec);
            let records = compute_records(&s, BandRule::HalfOpen);
            let d = distances(&records);
            let small = detect_direct(&records, &Boundary::standard(&d, f1).unwrap());
            let large = detect_direct(&records, &Boundary::standard(&d, f1 + df).unwrap());
            prop_assert!(large.iter().all(|i| small.contains(i)));
        }

        #[test]
        fn records_respect_parabola_bound(seed in any::<u64>()) {
            let spec = simulation::ModelSpec::new(simulation::Model::M2, 30, 0.1, seed);
            let (s, _) = simulation::generate(&spec);
            for r in compute_records(&s, BandRule::HalfOpen) {
                prop_assert!(r.distance >= -1e-9);
            }
        }
    }

    #[test]
    fn deterministic_reports() {
        let s = simulation::figure3_sample(3);
        let a = run_outliergram(&s, &OutliergramOptions::default()).unwrap();
        let b = run_outliergram(&s, &OutliergramOptions::default()).unwrap();
        assert_eq!(a, b);
    }
}
