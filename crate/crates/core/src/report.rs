//! Versioned JSON serialization of an [`OutlierReport`].

use serde::{Deserialize, Serialize};

use crate::adjusted::Calibration;
use crate::error::{Error, Result};
use crate::fbplot::FunctionalBoxplotResult;
use crate::outliergram::{BoundaryKind, OutlierReport, ShapeOutlier};
use crate::sample::FunctionalSample;

pub const SCHEMA: &str = "outliergram/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryJson {
    pub kind: BoundaryKind,
    pub factor: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordJson {
    pub index: usize,
    pub label: Option<String>,
    pub mbd: f64,
    pub mei: f64,
    pub parabola: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportJson {
    pub schema: String,
    pub n: usize,
    pub p: usize,
    pub boundary: BoundaryJson,
    pub records: Vec<RecordJson>,
    pub shape_outliers: Vec<ShapeOutlier>,
    pub magnitude_outliers: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<Calibration>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fbplot: Option<FunctionalBoxplotResult>,
}

impl ReportJson {
    pub fn new(sample: &FunctionalSample, report: &OutlierReport, seed: Option<u64>) -> Self {
        let b = &report.boundary;
        Self {
            schema: SCHEMA.to_owned(),
            n: sample.n(),
            p: sample.p(),
            boundary: BoundaryJson {
                kind: b.kind,
                factor: b.factor,
                q1: b.q1,
                q3: b.q3,
                iqr: b.iqr,
                threshold: b.threshold(),
            },
            records: report
                .records
                .iter()
                .enumerate()
                .map(|(index, r)| RecordJson {
                    index,
                    label: sample.label(index).map(str::to_owned),
                    mbd: r.mbd,
                    mei: r.mei,
                    parabola: r.parabola,
                    distance: r.distance,
                })
                .collect(),
            shape_outliers: report.shape_outliers.clone(),
            magnitude_outliers: report.magnitude_outliers.clone(),
            seed,
            calibration: report.calibration.clone(),
            fbplot: report.fbplot.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let parsed: Self = serde_json::from_str(text)
            .map_err(|e| Error::InvalidConfig(format!("malformed report: {e}")))?;
        if parsed.schema != SCHEMA {
            return Err(Error::InvalidConfig(format!(
                "unsupported report schema {:?}",
                parsed.schema
            )));
        }
        Ok(parsed)
    }
}

/// Pretty-printed report; byte-identical for identical inputs.
pub fn to_json(sample: &FunctionalSample, report: &OutlierReport, seed: Option<u64>) -> String {
    ReportJson::new(sample, report, seed).to_json()
}
