//! Shape outlier detection for samples of discretely observed curves.
//!
//! The central object is the *outliergram*: every curve of a
//! [`FunctionalSample`] is mapped to the point (MEI, MBD), where MEI is the
//! modified epigraph index and MBD the modified band depth. All points lie on
//! or below the parabola
//!
//! ```text
//! MBD <= a0 + a1 * MEI + a2 * n^2 * MEI^2
//! ```
//!
//! with equality when no two curves cross. Curves whose vertical gap to the
//! parabola is large under a boxplot rule are flagged as shape outliers; a
//! second pass shifts extreme curves towards the centre of the sample so that
//! curves with atypical shape are not hidden at the edges.
//!
//! Besides the detector this crate provides
//! - a calibrated ("adjusted") boundary based on a robust OGK covariance
//!   estimate and simulated outlier-free samples ([`adjusted`]),
//! - the functional boxplot for magnitude outliers ([`fbplot`]),
//! - simulation models and a p_c / p_f evaluation harness ([`simulation`]),
//! - JSON reports and deterministic SVG rendering ([`report`], [`render`]).
//!
//! ```
//! use outliergram::{run_outliergram, OutliergramOptions, simulation};
//!
//! let sample = simulation::figure1_sample(100);
//! let report = run_outliergram(&sample, &OutliergramOptions::default()).unwrap();
//! let flagged: Vec<usize> = report.shape_outlier_indices();
//! assert!(flagged.contains(&16));
//! ```

pub mod adjusted;
pub mod depth;
mod error;
pub mod fbplot;
pub mod outliergram;
pub mod render;
pub mod report;
pub mod rng;
pub mod sample;
pub mod simulation;
mod stats;

pub use adjusted::{calibrate_factor, ogk_covariance, CalibrationConfig, CovarianceEstimate};
pub use depth::{BandRule, DepthProfile, ParabolaCoefficients};
pub use error::{Error, Result};
pub use fbplot::{functional_boxplot, FunctionalBoxplotResult};
pub use outliergram::{
    run_outliergram, Boundary, BoundaryKind, DepthRecord, OutlierReport, OutliergramOptions,
    ShapeOutlier, Stage,
};
pub use sample::{FunctionalSample, TimeGrid};
