use dspstab_wasm::{decay_json, green_json, profile_json};
use serde_json::Value;

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn profile_mass_tracks_delta() {
    let v = parse(&profile_json(0.5, 0.8, 0.25).unwrap());
    assert!((v["mass"].as_f64().unwrap() - 0.25).abs() < 1e-8);
    assert_eq!(v["j"].as_array().unwrap().len(), v["u"].as_array().unwrap().len());
    assert!(profile_json(0.5, 0.8, 500.0).is_err());
}

#[test]
fn green_column_has_unit_mass() {
    let v = parse(&green_json(0.5, 0.8, 40, 100).unwrap());
    assert!((v["mass"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    let lead: f64 = v["leading"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).sum();
    assert!(lead > 0.5);
}

#[test]
fn decay_reports_slopes() {
    let v = parse(&decay_json(1, 1.0, 20, 200).unwrap());
    assert_eq!(v["n"].as_array().unwrap().len(), 201);
    assert!(v["slope_l1"].as_f64().unwrap() < -0.5);
    assert!(decay_json(2, 0.3, 10, 100).unwrap_err().contains("choice 2"));
}
