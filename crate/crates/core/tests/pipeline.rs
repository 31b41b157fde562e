use approx::assert_relative_eq;
use outliergram::depth::{self, BandRule};
use outliergram::report::{self, ReportJson};
use outliergram::sample::{load_csv, write_csv, CsvOptions};
use outliergram::simulation::{self, Method, Model, ModelSpec};
use outliergram::{
    functional_boxplot, run_outliergram, BoundaryKind, OutliergramOptions, ParabolaCoefficients, Stage,
};

#[test]
fn csv_file_round_trip_preserves_detection() {
    let sample = simulation::figure3_sample(simulation::FIGURE3_SEED);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("curves.csv");
    write_csv(&sample, &path).unwrap();
    let loaded = load_csv(&path, &CsvOptions::default()).unwrap();
    assert_eq!(loaded, sample);

    let a = run_outliergram(&sample, &OutliergramOptions::default()).unwrap();
    let b = run_outliergram(&loaded, &OutliergramOptions::default()).unwrap();
    assert_eq!(report::to_json(&sample, &a, None), report::to_json(&loaded, &b, None));
}

#[test]
fn profile_satisfies_parabola_identity() {
    let (sample, _) = simulation::generate(&ModelSpec::new(Model::M1, 60, 0.1, 21));
    let profile = depth::depth_profile(&sample, BandRule::HalfOpen);
    let c = ParabolaCoefficients::new(sample.n());
    for i in 0..sample.n() {
        let rhs = c.a0 + c.a1 * profile.mei[i] + c.a2 * profile.cross[i];
        assert_relative_eq!(profile.mbd[i], rhs, epsilon = 1e-10);
        assert!(profile.mbd[i] <= c.value(profile.mei[i]) + 1e-9);
    }
}

#[test]
fn figure3_end_to_end() {
    let sample = simulation::figure3_sample(simulation::FIGURE3_SEED);
    let options = OutliergramOptions {
        with_fbplot: true,
        ..OutliergramOptions::default()
    };
    let report = run_outliergram(&sample, &options).unwrap();
    let flagged = report.shape_outlier_indices();
    for i in simulation::FIGURE3_SHAPE_OUTLIERS {
        assert!(flagged.contains(&i), "curve {i} missed: {flagged:?}");
    }
    assert!(!flagged.contains(&52), "pure level shift flagged");
    assert!(report.shape_outliers.iter().any(|o| o.stage != Stage::Direct));
    let fb = report.fbplot.as_ref().unwrap();
    assert_eq!(report.magnitude_outliers, fb.magnitude_outliers);
    for i in simulation::FIGURE3_MAGNITUDE_OUTLIERS {
        assert!(report.magnitude_outliers.contains(&i));
    }
}

#[test]
fn adjusted_report_carries_calibration() {
    let (sample, _) = simulation::generate(&ModelSpec::new(Model::M3, 50, 0.1, 8));
    let mut options = OutliergramOptions::adjusted(99);
    options.calibration.n_null_datasets = 20;
    let report = run_outliergram(&sample, &options).unwrap();
    assert_eq!(report.boundary.kind, BoundaryKind::Adjusted);
    let json = ReportJson::from_json(&report::to_json(&sample, &report, Some(99))).unwrap();
    let cal = json.calibration.unwrap();
    assert_eq!(cal.seed, 99);
    assert_eq!(cal.candidates.len(), cal.null_rates.len());
}

#[test]
fn fbplot_is_conservative_on_clean_data() {
    let (sample, _) = simulation::generate(&ModelSpec::new(Model::M2, 100, 0.0, 13));
    let fb = functional_boxplot(&sample, 1.5, BandRule::HalfOpen);
    assert!(fb.magnitude_outliers.len() <= 2);
}

#[test]
fn evaluation_reports_rates() {
    let spec = ModelSpec::new(Model::M3, 60, 0.1, 3);
    let r = simulation::evaluate(Method::Outliergram, &spec, 5).unwrap();
    assert_eq!(r.runs, 5);
    let pc = r.pc_mean.unwrap();
    assert!((0.0..=1.0).contains(&pc));
    assert!((0.0..=1.0).contains(&r.pf_mean));
}
