use beamfd::config::{preset, Config};
use beamfd::study::{rate, run_study, spatial_error, temporal_error, Axis, ConvergenceReport};
use beamfd::{Grid, ProblemSpec, SolverConfig};

fn within(value: f64, expected: f64, rel: f64) -> bool {
    (value - expected).abs() <= rel * expected
}

#[test]
fn temporal_error_examples() {
    let cfg = SolverConfig::default();
    let e = temporal_error(&ProblemSpec::example1(1.2, 1.0, 0.5).unwrap(), &Grid::new(32).unwrap(), 256, &cfg).unwrap();
    assert!(within(e, 4.9532e-3, 0.10), "{e}");
    let e = temporal_error(&ProblemSpec::example2(1.5, 0.5).unwrap(), &Grid::new(64).unwrap(), 1024, &cfg).unwrap();
    assert!(within(e, 2.5027e-4, 0.10), "{e}");
    assert!(temporal_error(&ProblemSpec::example2(1.5, 0.5).unwrap(), &Grid::new(8).unwrap(), 7, &cfg).is_err());
}

#[test]
fn spatial_error_examples() {
    let cfg = SolverConfig::default();
    let e = spatial_error(&ProblemSpec::example1(2.0, 0.0, 0.5).unwrap(), &Grid::new(64).unwrap(), 64, &cfg).unwrap();
    assert!(within(e, 6.7104e-6, 0.10), "{e}");
    let e = spatial_error(&ProblemSpec::example2(1.5, 0.3).unwrap(), &Grid::new(128).unwrap(), 64, &cfg).unwrap();
    assert!(within(e, 1.8266e-6, 0.10), "{e}");
    assert!(spatial_error(&ProblemSpec::example2(1.5, 0.3).unwrap(), &Grid::new(6).unwrap(), 8, &cfg).is_err());
}

#[test]
fn rate_examples() {
    assert_eq!(rate(4.0, 1.0), Some(2.0));
    assert_eq!(rate(1.0, 0.0), None);
    assert!((rate(9.8847e-3, 4.9532e-3).unwrap() - 1.00).abs() < 0.005);
    assert!((rate(7.4072e-6, 1.7679e-6).unwrap() - 2.07).abs() < 0.005);
}

fn report(name: &str) -> ConvergenceReport {
    let v = preset(name).unwrap();
    let cfg = Config::from_value(v.clone()).unwrap();
    run_study(&cfg.study_spec().unwrap(), v).unwrap()
}

#[test]
fn final_rates_approach_the_scheme_orders() {
    for (name, lo, hi) in [
        ("example1-temporal", 0.85, 1.10),
        ("example2-temporal", 0.85, 1.10),
        ("example1-spatial", 1.90, 2.15),
        ("example2-spatial", 1.90, 2.15),
    ] {
        let r = report(name);
        for cell in &r.cells {
            assert!(cell.failure.is_none());
            let last = cell.rows.last().unwrap().rate.unwrap();
            assert!((lo..=hi).contains(&last), "{name} {}: {last}", cell.label);
        }
    }
}

#[test]
fn table_shapes() {
    let r = report("example1-temporal");
    assert_eq!(r.axis, Axis::Temporal);
    assert_eq!(r.cells.iter().map(|c| c.label.as_str()).collect::<Vec<_>>(), ["gamma=0", "gamma=0.5", "gamma=1"]);
    let params: Vec<usize> = r.cells[0].rows.iter().map(|row| row.parameter).collect();
    assert_eq!(params, [16, 32, 64, 128, 256]);
    assert!(r.cells[0].rows[0].rate.is_none());
    let r = report("example2-spatial");
    assert_eq!(r.cells.len(), 4);
    let params: Vec<usize> = r.cells[0].rows.iter().map(|row| row.parameter).collect();
    assert_eq!(params, [16, 32, 64, 128]);
}

#[test]
fn reports_are_deterministic_apart_from_the_timestamp() {
    let mut a = report("example2-spatial");
    let mut b = report("example2-spatial");
    a.metadata.generated_at_unix = 0;
    b.metadata.generated_at_unix = 0;
    assert_eq!(a, b);
    let (mut ca, mut cb) = (Vec::new(), Vec::new());
    a.write_csv(&mut ca).unwrap();
    b.write_csv(&mut cb).unwrap();
    assert_eq!(ca, cb);
    let mut json = Vec::new();
    a.write_json(&mut json).unwrap();
    let v: serde_json::Value = serde_json::from_slice(&json).unwrap();
    assert_eq!(v["axis"], "spatial");
    assert_eq!(v["parameter"], "J");
    assert!(v["metadata"]["config"]["study"].is_object());
}
