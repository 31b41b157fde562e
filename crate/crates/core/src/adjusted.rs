//! Calibrated boundary `d >= F * Q1` for the outliergram.
//!
//! The covariance of the observed curves is estimated robustly with the
//! orthogonalized Gnanadesikan-Kettenring (OGK) estimator. Outlier-free
//! samples are then drawn from a centered Gaussian process with that
//! covariance, and `F` is chosen on a grid so that the mean fraction of
//! flagged curves in those samples is as close as possible to the target
//! false-detection rate. Each simulated sample uses its own `Q1` of the
//! distances.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::depth::BandRule;
use crate::error::{Error, Result};
use crate::outliergram::{self, Boundary, MIN_THRESHOLD};
use crate::rng::{stream_rng, RNG_ALGORITHM};
use crate::sample::{FunctionalSample, TimeGrid};
use crate::stats::{self, CompensatedSum};

/// Relative eigenvalue floor applied before factorizing a covariance.
pub const EIGENVALUE_FLOOR: f64 = 1e-10;

/// Below this first quartile of the distances the ratio rule is undefined.
pub const MIN_Q1: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorKind {
    /// Lower-triangular Cholesky factor.
    Cholesky,
    /// `V * sqrt(Λ)` from the eigen-decomposition.
    EigenSqrt,
}

/// A covariance matrix made positive definite, with a square-root factor
/// `L` such that `L L^T` reproduces it.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate {
    /// Symmetrized estimate before repair.
    pub raw: DMatrix<f64>,
    /// Matrix actually used for simulation.
    pub matrix: DMatrix<f64>,
    pub factor: DMatrix<f64>,
    pub factor_kind: FactorKind,
    /// Whether any eigenvalue had to be raised to the floor.
    pub repaired: bool,
}

impl CovarianceEstimate {
    /// Clips eigenvalues of `raw` below `EIGENVALUE_FLOOR * λ_max` (or
    /// `EIGENVALUE_FLOOR` when no eigenvalue is positive) and factorizes.
    pub fn from_matrix(raw: DMatrix<f64>) -> Self {
        let raw = symmetrize(&raw);
        let eigen = SymmetricEigen::new(raw.clone());
        let largest = eigen.eigenvalues.max();
        let floor = EIGENVALUE_FLOOR * if largest > 0.0 { largest } else { 1.0 };
        let repaired = eigen.eigenvalues.iter().any(|&l| l < floor);
        let clipped = eigen.eigenvalues.map(|l| l.max(floor));
        let matrix = if repaired {
            let v = &eigen.eigenvectors;
            symmetrize(&(v * DMatrix::from_diagonal(&clipped) * v.transpose()))
        } else {
            raw.clone()
        };
        let (factor, factor_kind) = match matrix.clone().cholesky() {
            Some(chol) => (chol.l(), FactorKind::Cholesky),
            None => {
                let roots = clipped.map(f64::sqrt);
                (
                    &eigen.eigenvectors * DMatrix::from_diagonal(&roots),
                    FactorKind::EigenSqrt,
                )
            }
        };
        Self {
            raw,
            matrix,
            factor,
            factor_kind,
            repaired,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// One draw `L z` with `z` standard normal.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let z = DVector::from_fn(self.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
        &self.factor * z
    }
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Robust scale: normalized MAD.
fn scale(values: &[f64]) -> f64 {
    stats::mad(values)
}

/// OGK covariance of the curves, treating grid points as variables.
///
/// Columns are standardized by median and MAD; pairwise covariances come
/// from the Gnanadesikan-Kettenring identity
/// `cov(y_j, y_k) = (s(y_j + y_k)^2 - s(y_j - y_k)^2) / 4`; the resulting
/// matrix is orthogonalized once by re-estimating robust variances along
/// its eigenvectors. A column with zero MAD gets zero variance and is left
/// to the eigenvalue floor.
pub fn ogk_covariance(sample: &FunctionalSample) -> CovarianceEstimate {
    let (n, p) = (sample.n(), sample.p());
    let mut y = DMatrix::<f64>::zeros(n, p);
    let mut scales = DVector::<f64>::zeros(p);
    for j in 0..p {
        let column: Vec<f64> = sample.curves().map(|c| c[j]).collect();
        let center = stats::median(&column);
        let s = scale(&column);
        if s > f64::EPSILON * (1.0 + center.abs()) {
            scales[j] = s;
            for (i, v) in column.iter().enumerate() {
                y[(i, j)] = (v - center) / s;
            }
        }
    }

    let cols: Vec<Vec<f64>> = (0..p).map(|j| y.column(j).iter().copied().collect()).collect();
    let pairs: Vec<(usize, usize)> = (0..p).flat_map(|j| (j..p).map(move |k| (j, k))).collect();
    let entries: Vec<f64> = pairs
        .par_iter()
        .map(|&(j, k)| {
            if j == k {
                let s = scale(&cols[j]);
                return s * s;
            }
            let sum: Vec<f64> = cols[j].iter().zip(&cols[k]).map(|(a, b)| a + b).collect();
            let diff: Vec<f64> = cols[j].iter().zip(&cols[k]).map(|(a, b)| a - b).collect();
            let (sp, sm) = (scale(&sum), scale(&diff));
            (sp * sp - sm * sm) / 4.0
        })
        .collect();
    let mut u = DMatrix::<f64>::zeros(p, p);
    for (&(j, k), &v) in pairs.iter().zip(&entries) {
        u[(j, k)] = v;
        u[(k, j)] = v;
    }

    let eigen = SymmetricEigen::new(u);
    let projected = &y * &eigen.eigenvectors;
    let variances = DVector::from_fn(p, |l, _| {
        let z: Vec<f64> = projected.column(l).iter().copied().collect();
        let s = scale(&z);
        s * s
    });
    let cov_y = &eigen.eigenvectors * DMatrix::from_diagonal(&variances) * eigen.eigenvectors.transpose();
    let d = DMatrix::from_diagonal(&scales);
    CovarianceEstimate::from_matrix(&d * cov_y * &d)
}

/// `n` curves from the centered Gaussian process with covariance `cov`.
pub fn simulate_null<R: Rng + ?Sized>(
    cov: &CovarianceEstimate,
    n: usize,
    grid: &TimeGrid,
    rng: &mut R,
) -> Result<FunctionalSample> {
    if cov.dim() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            actual: cov.dim(),
        });
    }
    let mut values = Vec::with_capacity(n * grid.len());
    for _ in 0..n {
        values.extend(cov.draw(rng).iter());
    }
    FunctionalSample::from_flat(grid.clone(), values, vec![None; n])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub n_null_datasets: usize,
    pub target_rate: f64,
    pub grid_size: usize,
    /// `c` in the candidate interval `[Q3/Q1, c * max(d) / Q1]`.
    pub interval_scale_c: f64,
    pub seed: u64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            n_null_datasets: 200,
            target_rate: 0.007,
            grid_size: 10,
            interval_scale_c: 1.5,
            seed: 0,
        }
    }
}

impl CalibrationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_null_datasets == 0 {
            return Err(Error::InvalidConfig("n_null_datasets must be positive".into()));
        }
        if !(self.target_rate > 0.0 && self.target_rate < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "target_rate must lie in (0, 1), got {}",
                self.target_rate
            )));
        }
        if self.grid_size < 2 {
            return Err(Error::InvalidConfig(format!(
                "grid_size must be at least 2, got {}",
                self.grid_size
            )));
        }
        if self.interval_scale_c.is_nan() || self.interval_scale_c <= 1.0 {
            return Err(Error::InvalidConfig(format!(
                "interval_scale_c must exceed 1, got {}",
                self.interval_scale_c
            )));
        }
        Ok(())
    }
}

/// Outcome of the factor search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub boundary: Boundary,
    /// Candidate factors, ascending.
    pub candidates: Vec<f64>,
    /// Mean flagged fraction in the simulated samples, per candidate.
    pub null_rates: Vec<f64>,
    /// `Q1` of the distances was degenerate; the standard boundary is used.
    pub fallback: bool,
    pub seed: u64,
    pub rng: String,
}

pub fn calibrate_factor(sample: &FunctionalSample, config: &CalibrationConfig) -> Result<Calibration> {
    let rule = BandRule::default();
    let d = outliergram::distances(&outliergram::compute_records(sample, rule));
    calibrate_with_distances(sample, &d, config, rule)
}

pub(crate) fn calibrate_with_distances(
    sample: &FunctionalSample,
    distances: &[f64],
    config: &CalibrationConfig,
    rule: BandRule,
) -> Result<Calibration> {
    config.validate()?;
    let (q1, q3, _) = outliergram::quartiles(distances)?;
    if q1 <= MIN_Q1 {
        return Ok(Calibration {
            boundary: Boundary::standard(distances, 1.5)?,
            candidates: Vec::new(),
            null_rates: Vec::new(),
            fallback: true,
            seed: config.seed,
            rng: RNG_ALGORITHM.to_owned(),
        });
    }
    let max_d = distances.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = q3 / q1;
    let hi = config.interval_scale_c * max_d / q1;
    let step = (hi - lo) / (config.grid_size - 1) as f64;
    let candidates: Vec<f64> = (0..config.grid_size)
        .map(|k| if k + 1 == config.grid_size { hi } else { lo + step * k as f64 })
        .collect();

    let cov = ogk_covariance(sample);
    let n = sample.n();
    let per_dataset: Vec<Result<Vec<f64>>> = (0..config.n_null_datasets)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(config.seed, k as u64);
            let null = simulate_null(&cov, n, sample.grid(), &mut rng)?;
            let d = outliergram::distances(&outliergram::compute_records(&null, rule));
            let (q1_null, _, _) = outliergram::quartiles(&d)?;
            Ok(candidates
                .iter()
                .map(|f| {
                    let threshold = (f * q1_null).max(MIN_THRESHOLD);
                    d.iter().filter(|&&x| x >= threshold).count() as f64 / n as f64
                })
                .collect())
        })
        .collect();

    let mut sums = vec![CompensatedSum::default(); candidates.len()];
    for rates in per_dataset {
        for (acc, r) in sums.iter_mut().zip(rates?) {
            acc.add(r);
        }
    }
    let null_rates: Vec<f64> = sums
        .iter()
        .map(|s| s.value() / config.n_null_datasets as f64)
        .collect();

    let mut best = 0;
    for (k, rate) in null_rates.iter().enumerate() {
        if (rate - config.target_rate).abs() < (null_rates[best] - config.target_rate).abs() {
            best = k;
        }
    }

    Ok(Calibration {
        boundary: Boundary::adjusted(distances, candidates[best])?,
        candidates,
        null_rates,
        fallback: false,
        seed: config.seed,
        rng: RNG_ALGORITHM.to_owned(),
    })
}
