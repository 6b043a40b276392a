//! Spec-file loading: bundled specs parse, bad specs are rejected with the
//! right rule, and parse -> serialize -> parse is the identity.

use std::path::PathBuf;

use discflow::schema::{parse_spec, validate, ProblemSpec, SpecError};

fn spec_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("specs")
        .join(name)
}

#[test]
fn bundled_specs_parse() {
    for name in [
        "example_1_4.json",
        "example_1_4_stop.json",
        "branching.json",
        "cantor.json",
        "cantor_free.json",
    ] {
        let spec = parse_spec(&spec_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(spec.f.validate().is_valid(), "{name}");
    }
}

#[test]
fn example_has_expected_data() {
    let spec = parse_spec(&spec_path("example_1_4.json")).unwrap();
    assert_eq!(spec.waiting.len(), 1);
    assert_eq!(spec.waiting[0].x, 0.0);
    assert_eq!(spec.waiting[0].rate, 1.0);
    assert!((spec.f.eval(0.25) - 1.0).abs() < 1e-15); // 2 sqrt(1/4)
}

#[test]
fn jamming_spec_rejected_with_rule() {
    let err = parse_spec(&spec_path("invalid_jamming.json")).unwrap_err();
    assert!(
        err.0.iter().any(|e| matches!(
            e,
            SpecError::Semantic { rule, .. } if rule == "no-jamming"
        )),
        "{err}"
    );
}

#[test]
fn accumulation_spec_rejected_as_not_regulated() {
    let err = parse_spec(&spec_path("invalid_accumulation.json")).unwrap_err();
    assert!(
        err.0.iter().any(|e| matches!(
            e,
            SpecError::Semantic { rule, .. } if rule == "not-regulated"
        )),
        "{err}"
    );
}

#[test]
fn stop_point_off_the_zero_set_is_semantic_error() {
    let mut raw: ProblemSpec =
        serde_json::from_str(&std::fs::read_to_string(spec_path("example_1_4.json")).unwrap())
            .unwrap();
    raw.stop_set = vec![3.0];
    let err = validate(raw).unwrap_err();
    assert!(
        err.0.iter().any(|e| matches!(
            e,
            SpecError::Semantic { rule, .. } if rule == "stop-point-not-zero"
        )),
        "{err}"
    );
}

#[test]
fn theta_out_of_range_is_schema_error() {
    let mut raw: ProblemSpec =
        serde_json::from_str(&std::fs::read_to_string(spec_path("branching.json")).unwrap())
            .unwrap();
    raw.branching.as_mut().unwrap().theta = Some(vec![1.5]);
    let err = validate(raw).unwrap_err();
    assert!(
        err.0.iter().any(|e| matches!(
            e,
            SpecError::Schema { key, .. } if key.contains("theta")
        )),
        "{err}"
    );
}

#[test]
fn uncovered_branch_point_is_rejected() {
    let mut raw: ProblemSpec =
        serde_json::from_str(&std::fs::read_to_string(spec_path("branching.json")).unwrap())
            .unwrap();
    raw.branching = None;
    let err = validate(raw).unwrap_err();
    assert!(
        err.0.iter().any(|e| matches!(
            e,
            SpecError::Semantic { rule, .. } if rule == "branch-point-uncovered"
        )),
        "{err}"
    );
}

#[test]
fn measure_off_the_zero_set_is_rejected() {
    let mut raw: ProblemSpec =
        serde_json::from_str(&std::fs::read_to_string(spec_path("cantor.json")).unwrap()).unwrap();
    raw.measure.as_mut().unwrap().ifs[0].support = [0.2, 0.8];
    let err = validate(raw).unwrap_err();
    assert!(
        err.0.iter().any(|e| matches!(
            e,
            SpecError::Semantic { rule, .. } if rule == "measure-not-on-zero-set"
        )),
        "{err}"
    );
}

#[test]
fn ac_measure_on_a_flat_interval_is_accepted() {
    // f vanishes identically on [0, 1] and escapes to the right of 1
    let text = r#"{
        "function": {
            "breakpoints": [0.0, 1.0, 401.0],
            "pieces": [
                {"form": "constant", "params": {"value": 0.0}},
                {"form": "constant", "params": {"value": 0.0}},
                {"form": "power_law", "params": {"anchor": 1.0, "coeff": 2.0, "exponent": 0.5, "sign": 1}},
                {"form": "constant", "params": {"value": 40.0}}
            ],
            "values": [0.0, 0.0, 40.0],
            "bound": 40.0
        },
        "measure": {
            "ac": [{"interval": [0.0, 1.0], "density": {"form": "polynomial", "params": {"coeffs": [0.0, 2.0]}}}]
        }
    }"#;
    let raw: ProblemSpec = serde_json::from_str(text).unwrap();
    let spec = validate(raw).unwrap();
    assert!((spec.mu.mass(0.0, 1.0, 1e-12) - 1.0).abs() < 1e-12);
    let flow = spec.det_flow().unwrap();
    // from inside the flat nothing moves
    assert_eq!(flow.flow(0.5, 3.0).unwrap(), 0.5);
    // right of the flat the motion is the usual square-root law
    assert!((flow.flow(1.0, 1.0).unwrap() - 2.0).abs() < 1e-8);
}

#[test]
fn oversized_breakpoint_lists_are_rejected() {
    let n = 1500usize;
    let bps: Vec<f64> = (0..n).map(|k| k as f64).collect();
    let spec = serde_json::json!({
        "function": {
            "breakpoints": bps,
            "pieces": (0..=n).map(|_| serde_json::json!({"form": "constant", "params": {"value": 1.0}})).collect::<Vec<_>>(),
            "values": vec![0.0; n],
            "bound": 1.0
        }
    });
    let raw: ProblemSpec = serde_json::from_value(spec).unwrap();
    let err = validate(raw).unwrap_err();
    assert!(format!("{err}").contains("cap"), "{err}");
}

#[test]
fn round_trip_is_identity() {
    for name in ["example_1_4.json", "branching.json", "cantor.json"] {
        let spec = parse_spec(&spec_path(name)).unwrap();
        let json = serde_json::to_string_pretty(&spec.raw).unwrap();
        let reparsed: ProblemSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(spec.raw, reparsed, "{name}");
        // and the re-emitted text is stable
        let again = serde_json::to_string_pretty(&reparsed).unwrap();
        assert_eq!(json, again, "{name}");
    }
}
