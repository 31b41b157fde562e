//! Simulation models with contamination, the p_c / p_f evaluation harness,
//! and the illustrative samples used in the documentation figures.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adjusted::{CalibrationConfig, CovarianceEstimate};
use crate::depth::BandRule;
use crate::error::{Error, Result};
use crate::fbplot;
use crate::outliergram::{self, OutliergramOptions};
use crate::rng::{derive_seed, stream_rng, StreamRng, RNG_ALGORITHM};
use crate::sample::{FunctionalSample, TimeGrid};
use crate::stats;

/// Gaussian process discretized on a grid.
#[derive(Debug, Clone)]
pub struct GaussianProcess {
    mean: Vec<f64>,
    cov: CovarianceEstimate,
}

impl GaussianProcess {
    pub fn new(
        grid: &TimeGrid,
        mean_fn: impl Fn(f64) -> f64,
        cov_fn: impl Fn(f64, f64) -> f64,
    ) -> Self {
        let t = grid.points();
        let p = t.len();
        let sigma = DMatrix::from_fn(p, p, |k, l| cov_fn(t[k], t[l]));
        Self {
            mean: t.iter().map(|&s| mean_fn(s)).collect(),
            cov: CovarianceEstimate::from_matrix(sigma),
        }
    }

    pub fn covariance(&self) -> &CovarianceEstimate {
        &self.cov
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let eps = self.cov.draw(rng);
        self.mean.iter().zip(eps.iter()).map(|(m, e)| m + e).collect()
    }
}

/// `count` draws of the process with the given mean and covariance
/// functions, one per row.
pub fn gp_sample<R: Rng + ?Sized>(
    mean_fn: impl Fn(f64) -> f64,
    cov_fn: impl Fn(f64, f64) -> f64,
    grid: &TimeGrid,
    count: usize,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    let gp = GaussianProcess::new(grid, mean_fn, cov_fn);
    (0..count).map(|_| gp.draw(rng)).collect()
}

pub fn exponential_kernel(variance: f64, rate: f64) -> impl Fn(f64, f64) -> f64 {
    move |s, t| variance * (-rate * (s - t).abs()).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Model {
    /// `30 t (1-t)^{3/2}` contaminated by `30 t^{3/2} (1-t)`.
    M1,
    /// `4t` contaminated by a level jump of ±1.8 plus a Gaussian bump.
    M2,
    /// `4t` contaminated by `2 sin(4π(t + θ))`.
    M3,
}

impl Model {
    pub fn from_id(id: u8) -> Result<Self> {
        match id {
            1 => Ok(Self::M1),
            2 => Ok(Self::M2),
            3 => Ok(Self::M3),
            other => Err(Error::InvalidConfig(format!("unknown model {other}, expected 1, 2 or 3"))),
        }
    }

    pub fn main_mean(self, t: f64) -> f64 {
        match self {
            Self::M1 => 30.0 * t * (1.0 - t).powf(1.5),
            Self::M2 | Self::M3 => 4.0 * t,
        }
    }

    fn noise_kernel(self) -> impl Fn(f64, f64) -> f64 {
        match self {
            Self::M1 => exponential_kernel(0.3, 1.0 / 0.3),
            Self::M2 | Self::M3 => exponential_kernel(1.0, 1.0),
        }
    }

    /// Random parameters of one contaminated curve.
    fn draw_contamination<R: Rng + ?Sized>(self, rng: &mut R) -> Contamination {
        match self {
            Self::M1 => Contamination::M1,
            Self::M2 => Contamination::M2 {
                negative: rng.random_bool(0.5),
                mu: rng.random_range(0.25..=0.75),
            },
            Self::M3 => Contamination::M3 {
                theta: rng.random_range(0.25..=0.75),
            },
        }
    }
}

/// Parameters drawn for a single contaminated curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Contamination {
    M1,
    M2 { negative: bool, mu: f64 },
    M3 { theta: f64 },
}

impl Contamination {
    /// Mean function of the contaminated curve at `t`.
    pub fn mean(&self, t: f64) -> f64 {
        match *self {
            Self::M1 => 30.0 * t.powf(1.5) * (1.0 - t),
            Self::M2 { negative, mu } => {
                let jump = if negative { -1.8 } else { 1.8 };
                let bump = (-(t - mu).powi(2) / 0.02).exp() / (2.0 * PI * 0.01).sqrt();
                4.0 * t + jump + bump
            }
            Self::M3 { theta } => 4.0 * t + 2.0 * (4.0 * (t + theta) * PI).sin(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub model: Model,
    pub n: usize,
    /// Contamination rate in `[0, 1)`.
    pub c: f64,
    /// Number of equidistant grid points on `[0, 1]`.
    pub p: usize,
    pub seed: u64,
}

impl ModelSpec {
    pub fn new(model: Model, n: usize, c: f64, seed: u64) -> Self {
        Self {
            model,
            n,
            c,
            p: 50,
            seed,
        }
    }

    /// `ceil(c * n)`.
    pub fn n_contaminated(&self) -> usize {
        // the slack absorbs rounding in products such as 0.15 * 100
        (self.c * self.n as f64 - 1e-9).ceil().max(0.0) as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.c) {
            return Err(Error::InvalidConfig(format!(
                "contamination rate must lie in [0, 1), got {}",
                self.c
            )));
        }
        if self.n < FunctionalSample::MIN_CURVES {
            return Err(Error::TooFewCurves {
                required: FunctionalSample::MIN_CURVES,
                actual: self.n,
            });
        }
        if self.p < 2 {
            return Err(Error::GridTooShort(self.p));
        }
        Ok(())
    }
}

/// Draws samples for one [`ModelSpec`], reusing the noise factorization.
#[derive(Debug, Clone)]
pub struct ModelSampler {
    spec: ModelSpec,
    grid: TimeGrid,
    noise: GaussianProcess,
}

impl ModelSampler {
    pub fn new(spec: &ModelSpec) -> Result<Self> {
        spec.validate()?;
        let grid = TimeGrid::unit(spec.p)?;
        let noise = GaussianProcess::new(&grid, |_| 0.0, spec.model.noise_kernel());
        Ok(Self {
            spec: spec.clone(),
            grid,
            noise,
        })
    }

    /// Main-model curves first, then the `ceil(c n)` contaminated ones; the
    /// second element lists the contaminated indices.
    pub fn draw(&self, rng: &mut StreamRng) -> (FunctionalSample, Vec<usize>) {
        let n = self.spec.n;
        let first_bad = n - self.spec.n_contaminated();
        let t = self.grid.points();
        let mut values = Vec::with_capacity(n * t.len());
        for i in 0..n {
            let eps = self.noise.draw(rng);
            if i < first_bad {
                values.extend(t.iter().zip(&eps).map(|(&s, e)| self.spec.model.main_mean(s) + e));
            } else {
                let cont = self.spec.model.draw_contamination(rng);
                values.extend(t.iter().zip(&eps).map(|(&s, e)| cont.mean(s) + e));
            }
        }
        let sample = FunctionalSample::from_flat(self.grid.clone(), values, vec![None; n])
            .expect("model curves are finite");
        (sample, (first_bad..n).collect())
    }
}

/// One sample from `spec`, drawn from stream 0 of `spec.seed`.
pub fn generate(spec: &ModelSpec) -> (FunctionalSample, Vec<usize>) {
    ModelSampler::new(spec)
        .expect("invalid model spec")
        .draw(&mut stream_rng(spec.seed, 0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Outliergram,
    AdjustedOutliergram,
    Fbplot,
}

impl Method {
    pub fn detect(
        self,
        sample: &FunctionalSample,
        calibration: &CalibrationConfig,
    ) -> Result<Vec<usize>> {
        match self {
            Self::Outliergram => Ok(outliergram::run_outliergram(sample, &OutliergramOptions::default())?
                .shape_outlier_indices()),
            Self::AdjustedOutliergram => {
                let options = OutliergramOptions {
                    calibration: calibration.clone(),
                    ..OutliergramOptions::adjusted(calibration.seed)
                };
                Ok(outliergram::run_outliergram(sample, &options)?.shape_outlier_indices())
            }
            Self::Fbplot => Ok(fbplot::functional_boxplot(sample, 1.5, BandRule::default())
                .magnitude_outliers),
        }
    }
}

/// Mean and standard deviation of p_c and p_f over replicated runs. p_c is
/// `None` when no run had outliers to find.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub method: Method,
    pub spec: ModelSpec,
    pub runs: usize,
    pub pc_mean: Option<f64>,
    pub pc_sd: Option<f64>,
    pub pf_mean: f64,
    pub pf_sd: f64,
    pub rng: String,
}

/// Detection rates of one run: `(p_c, p_f)`.
pub fn detection_rates(detected: &[usize], truth: &[usize], n: usize) -> (Option<f64>, f64) {
    let hits = detected.iter().filter(|i| truth.contains(i)).count();
    let false_hits = detected.len() - hits;
    let pc = (!truth.is_empty()).then(|| hits as f64 / truth.len() as f64);
    (pc, false_hits as f64 / (n - truth.len()) as f64)
}

pub fn evaluate(method: Method, spec: &ModelSpec, runs: usize) -> Result<SimulationResult> {
    evaluate_with(method, spec, runs, &CalibrationConfig::default())
}

/// Like [`evaluate`], with an explicit template for the adjusted method's
/// calibration. Its seed is replaced by a per-run derived seed.
pub fn evaluate_with(
    method: Method,
    spec: &ModelSpec,
    runs: usize,
    calibration: &CalibrationConfig,
) -> Result<SimulationResult> {
    if runs == 0 {
        return Err(Error::InvalidConfig("runs must be at least 1".into()));
    }
    let sampler = ModelSampler::new(spec)?;
    let per_run: Vec<Result<(Option<f64>, f64)>> = (0..runs)
        .into_par_iter()
        .map(|r| {
            let (sample, truth) = sampler.draw(&mut stream_rng(spec.seed, r as u64));
            let cal = CalibrationConfig {
                seed: derive_seed(spec.seed, r as u64),
                ..calibration.clone()
            };
            let detected = method.detect(&sample, &cal)?;
            Ok(detection_rates(&detected, &truth, spec.n))
        })
        .collect();

    let mut pcs = Vec::new();
    let mut pfs = Vec::with_capacity(runs);
    for outcome in per_run {
        let (pc, pf) = outcome?;
        pcs.extend(pc);
        pfs.push(pf);
    }
    let (pc_mean, pc_sd) = if pcs.is_empty() {
        (None, None)
    } else {
        let (m, s) = stats::mean_sd(&pcs);
        (Some(m), Some(s))
    };
    let (pf_mean, pf_sd) = stats::mean_sd(&pfs);
    Ok(SimulationResult {
        method,
        spec: spec.clone(),
        runs,
        pc_mean,
        pc_sd,
        pf_mean,
        pf_sd,
        rng: RNG_ALGORITHM.to_owned(),
    })
}

/// Fifteen level-shifted sines `sin(4πt) + (-1)^i i/10`, the zero curve and
/// `cos(4πt)`, on `p` equidistant points of `[0, 1]`.
pub fn figure1_sample(p: usize) -> FunctionalSample {
    let grid = TimeGrid::unit(p).expect("p >= 2");
    let t = grid.points().to_vec();
    let mut rows: Vec<Vec<f64>> = (1..=15)
        .map(|i| {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            t.iter().map(|&s| (4.0 * PI * s).sin() + sign * i as f64 / 10.0).collect()
        })
        .collect();
    rows.push(vec![0.0; p]);
    rows.push(t.iter().map(|&s| (4.0 * PI * s).cos()).collect());
    FunctionalSample::from_rows(grid, rows).expect("finite curves")
}

pub const FIGURE3_SEED: u64 = 2014;

/// Planted curves with atypical shape in [`figure3_sample`] (0-based).
pub const FIGURE3_SHAPE_OUTLIERS: [usize; 3] = [50, 51, 53];

/// Planted curves lying above the bulk of [`figure3_sample`] (0-based).
pub const FIGURE3_MAGNITUDE_OUTLIERS: [usize; 2] = [52, 53];

/// Fifty curves `sin(4πt) + ε(t)` with `ε` a centered Gaussian process of
/// covariance `0.2 exp(-0.8 |s - t|)`, followed by four planted curves
/// (same noise process) on 50 equidistant points:
///
/// - 50: `cos(4πt)`, shifted phase, inside the bulk;
/// - 51: `0.8 sin(8πt)`, doubled frequency, inside the bulk;
/// - 52: `sin(4πt) + 3`, typical shape at an atypical level;
/// - 53: `3 - sin(4πt)`, reversed phase at an atypical level.
pub fn figure3_sample(seed: u64) -> FunctionalSample {
    let grid = TimeGrid::unit(50).expect("valid grid");
    let noise = GaussianProcess::new(&grid, |_| 0.0, exponential_kernel(0.2, 0.8));
    let mut rng = stream_rng(seed, 0);
    let means: [fn(f64) -> f64; 5] = [
        |t| (4.0 * PI * t).sin(),
        |t| (4.0 * PI * t).cos(),
        |t| 0.8 * (8.0 * PI * t).sin(),
        |t| (4.0 * PI * t).sin() + 3.0,
        |t| 3.0 - (4.0 * PI * t).sin(),
    ];
    let rows: Vec<Vec<f64>> = (0..54usize)
        .map(|i| {
            let mean = means[i.saturating_sub(49)];
            let eps = noise.draw(&mut rng);
            grid.points().iter().zip(eps).map(|(&t, e)| mean(t) + e).collect()
        })
        .collect();
    let labels = (1..=54).map(|i| Some(i.to_string())).collect();
    FunctionalSample::with_labels(grid, rows, labels).expect("finite curves")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_kernel_reproduces_mean() {
        let grid = TimeGrid::unit(10).unwrap();
        let rows = gp_sample(|t| 2.0 * t, |_, _| 0.0, &grid, 5, &mut stream_rng(1, 0));
        for row in rows {
            for (v, t) in row.iter().zip(grid.points()) {
                assert!((v - 2.0 * t).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn exponential_kernel_variance() {
        let grid = TimeGrid::unit(20).unwrap();
        let rows = gp_sample(|_| 0.0, exponential_kernel(1.0, 1.0), &grid, 2000, &mut stream_rng(2, 0));
        for t in 0..20 {
            let col: Vec<f64> = rows.iter().map(|r| r[t]).collect();
            let (_, sd) = stats::mean_sd(&col);
            assert!((sd * sd - 1.0).abs() < 0.1, "t = {t}: var {}", sd * sd);
        }
    }

    #[test]
    fn gp_sample_is_reproducible() {
        let grid = TimeGrid::unit(8).unwrap();
        let k = exponential_kernel(0.3, 1.0 / 0.3);
        let a = gp_sample(|_| 0.0, &k, &grid, 3, &mut stream_rng(9, 0));
        let b = gp_sample(|_| 0.0, &k, &grid, 3, &mut stream_rng(9, 0));
        assert_eq!(a, b);
    }

    #[test]
    fn contamination_counts() {
        assert_eq!(ModelSpec::new(Model::M1, 100, 0.1, 0).n_contaminated(), 10);
        assert_eq!(ModelSpec::new(Model::M1, 100, 0.15, 0).n_contaminated(), 15);
        assert_eq!(ModelSpec::new(Model::M1, 30, 0.05, 0).n_contaminated(), 2);
        assert_eq!(ModelSpec::new(Model::M1, 100, 0.0, 0).n_contaminated(), 0);
        let (s, truth) = generate(&ModelSpec::new(Model::M1, 100, 0.1, 3));
        assert_eq!(s.n(), 100);
        assert_eq!(s.p(), 50);
        assert_eq!(truth, (90..100).collect::<Vec<_>>());
        let (_, none) = generate(&ModelSpec::new(Model::M2, 100, 0.0, 3));
        assert!(none.is_empty());
    }

    #[test]
    fn default_grid_is_fifty_equidistant_points() {
        let (s, _) = generate(&ModelSpec::new(Model::M3, 10, 0.0, 1));
        assert_eq!(s.grid().points(), TimeGrid::unit(50).unwrap().points());
    }

    #[test]
    fn m2_bump_height_at_peak() {
        let peak = 1.0 / (2.0 * PI * 0.01).sqrt();
        assert!((peak - 3.989).abs() < 1e-3);
        for negative in [false, true] {
            let c = Contamination::M2 { negative, mu: 0.4 };
            let jump = if negative { -1.8 } else { 1.8 };
            assert!((c.mean(0.4) - Model::M2.main_mean(0.4) - (jump + peak)).abs() < 1e-12);
        }
    }

    #[test]
    fn contamination_means() {
        assert!((Contamination::M1.mean(0.25) - 30.0 * 0.125 * 0.75).abs() < 1e-12);
        assert!((Model::M1.main_mean(0.75) - 30.0 * 0.75 * 0.125).abs() < 1e-12);
        let c = Contamination::M3 { theta: 0.25 };
        assert!((c.mean(0.0) - 2.0 * PI.sin()).abs() < 1e-12);
    }

    #[test]
    fn bernoulli_sign_is_balanced() {
        let mut rng = stream_rng(77, 0);
        let draws = 1000;
        let negatives = (0..draws)
            .filter(|_| matches!(Model::M2.draw_contamination(&mut rng), Contamination::M2 { negative: true, .. }))
            .count() as f64;
        let sigma = (draws as f64 * 0.25).sqrt();
        assert!((negatives - 500.0).abs() <= 3.0 * sigma);
    }

    #[test]
    fn uniform_parameters_in_range() {
        let mut rng = stream_rng(78, 0);
        for _ in 0..200 {
            match Model::M3.draw_contamination(&mut rng) {
                Contamination::M3 { theta } => assert!((0.25..=0.75).contains(&theta)),
                other => panic!("unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn rates_of_one_run() {
        assert_eq!(detection_rates(&[1, 8, 9], &[8, 9], 10), (Some(1.0), 0.125));
        assert_eq!(detection_rates(&[3], &[], 10), (None, 0.1));
    }

    #[test]
    fn clean_runs_leave_pc_undefined() {
        let spec = ModelSpec::new(Model::M3, 30, 0.0, 4);
        let r = evaluate(Method::Outliergram, &spec, 3).unwrap();
        assert_eq!(r.pc_mean, None);
        assert!((0.0..=1.0).contains(&r.pf_mean));
        assert!(r.pf_sd >= 0.0);
    }

    #[test]
    fn evaluation_is_deterministic() {
        let spec = ModelSpec::new(Model::M1, 40, 0.1, 5);
        let a = evaluate(Method::Outliergram, &spec, 4).unwrap();
        let b = evaluate(Method::Outliergram, &spec, 4).unwrap();
        assert_eq!(a, b);
        assert!(evaluate(Method::Fbplot, &spec, 0).is_err());
    }

    #[test]
    fn placement_of_contaminated_curves_is_immaterial() {
        let (s, truth) = generate(&ModelSpec::new(Model::M3, 60, 0.1, 6));
        let order: Vec<usize> = (0..60).rev().collect();
        let reversed = s.permute(&order).unwrap();
        let cal = CalibrationConfig::default();
        let mut a = Method::Outliergram.detect(&s, &cal).unwrap();
        let b = Method::Outliergram.detect(&reversed, &cal).unwrap();
        let mut b: Vec<usize> = b.into_iter().map(|k| order[k]).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
        assert!(truth.iter().all(|i| a.contains(i)));
    }

    #[test]
    fn figure1_layout() {
        let s = figure1_sample(50);
        assert_eq!(s.n(), 17);
        assert!((s.curve(0)[0] + 0.1).abs() < 1e-15);
        assert!((s.curve(1)[0] - 0.2).abs() < 1e-15);
        assert!(s.curve(15).iter().all(|&v| v == 0.0));
        assert!((s.curve(16)[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn figure3_layout() {
        let s = figure3_sample(FIGURE3_SEED);
        assert_eq!((s.n(), s.p()), (54, 50));
        assert_eq!(s.label(50), Some("51"));
        assert_eq!(s, figure3_sample(FIGURE3_SEED));
    }
}
