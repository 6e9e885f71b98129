use sketchbound::bounds::{CheckName, ExponentSet};
use sketchbound::harness::ExperimentConfig;
use sketchbound::Error;

const MINIMAL: &str = r#"{
  "master_seed": 9,
  "problem": { "dim": 1, "bounds": [[-1.0, 1.0]], "nodes_per_dim": 16, "quadrature_rule": "gauss_legendre" },
  "prior": { "kind": "uniform" },
  "forward": { "out_dim": 1, "model": { "kind": "affine", "matrix": [[1.0]], "offset": [0.0] } },
  "noise": { "gamma": [[1.0]] },
  "data": { "y": [0.5] },
  "family": { "kind": "sketched_quadratic", "sketch": { "kind": "rademacher" } },
  "sweep": { "ns": [1, 2, 4], "m": 8 },
  "checks": ["thm1"],
  "output": { "directory": "out" }
}"#;

fn with(key: &str, value: serde_json::Value) -> String {
    let mut v: serde_json::Value = serde_json::from_str(MINIMAL).unwrap();
    v[key] = value;
    v.to_string()
}

fn config_key(e: Error) -> String {
    match e {
        Error::Config { key, .. } => key,
        other => panic!("expected a config error, got {other}"),
    }
}

#[test]
fn defaults_applied() {
    let cfg = ExperimentConfig::from_json(MINIMAL).unwrap();
    assert_eq!(cfg.exponents, ExponentSet::default());
    assert_eq!(cfg.exponents.as_array(), [2.0, 2.0, 2.0, 2.0, 2.0, 3.0]);
    assert_eq!(cfg.checks, vec![CheckName::Thm1]);
    assert_eq!(cfg.output.formats.len(), 2);
}

#[test]
fn hash_ignores_key_order_and_whitespace() {
    let a = ExperimentConfig::from_json(MINIMAL).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(MINIMAL).unwrap();
    // Rebuild the top-level object in reverse key order.
    let obj = v.as_object_mut().unwrap();
    let mut pairs: Vec<_> = std::mem::take(obj).into_iter().collect();
    pairs.reverse();
    let reordered = format!(
        "{{{}}}",
        pairs
            .iter()
            .map(|(k, v)| format!("\"{k}\":{v}"))
            .collect::<Vec<_>>()
            .join(",")
    );
    let b = ExperimentConfig::from_json(&reordered).unwrap();
    assert_eq!(a.hash(), b.hash());
    assert_eq!(a.hash(), ExperimentConfig::from_json(MINIMAL).unwrap().hash());
    assert_eq!(a.hash().len(), 64);
}

#[test]
fn hash_changes_with_seed() {
    let a = ExperimentConfig::from_json(MINIMAL).unwrap();
    let b = ExperimentConfig::from_json(&with("master_seed", 10.into())).unwrap();
    assert_ne!(a.hash(), b.hash());
}

#[test]
fn missing_key_rejected() {
    let mut v: serde_json::Value = serde_json::from_str(MINIMAL).unwrap();
    v.as_object_mut().unwrap().remove("sweep");
    let e = ExperimentConfig::from_json(&v.to_string()).unwrap_err();
    assert!(e.to_string().contains("sweep"), "{e}");
}

#[test]
fn unknown_key_rejected() {
    let e = ExperimentConfig::from_json(&with("verbose", true.into())).unwrap_err();
    assert!(e.to_string().contains("verbose"), "{e}");
}

#[test]
fn malformed_json_rejected() {
    assert!(ExperimentConfig::from_json("{ \"master_seed\": ").is_err());
}

#[test]
fn gamma_not_spd_names_key() {
    let e = ExperimentConfig::from_json(&with("noise", serde_json::json!({ "gamma": [[-1.0]] }))).unwrap_err();
    assert_eq!(config_key(e), "noise.gamma");
}

#[test]
fn dimension_inconsistencies_name_key() {
    let e = ExperimentConfig::from_json(&with("data", serde_json::json!({ "y": [0.5, 1.0] }))).unwrap_err();
    assert_eq!(config_key(e), "data.y");

    let fwd = serde_json::json!({ "out_dim": 2, "model": { "kind": "affine", "matrix": [[1.0]], "offset": [0.0] } });
    let e = ExperimentConfig::from_json(&with("forward", fwd)).unwrap_err();
    assert_eq!(config_key(e), "forward.out_dim");

    let problem = serde_json::json!({ "dim": 2, "bounds": [[-1.0, 1.0]], "nodes_per_dim": 4, "quadrature_rule": "trapezoid" });
    let e = ExperimentConfig::from_json(&with("problem", problem)).unwrap_err();
    assert_eq!(config_key(e), "problem.bounds");
}

#[test]
fn sweep_must_ascend_and_have_two_realizations() {
    let e = ExperimentConfig::from_json(&with("sweep", serde_json::json!({ "ns": [4, 2], "m": 8 }))).unwrap_err();
    assert_eq!(config_key(e), "sweep");
    let e = ExperimentConfig::from_json(&with("sweep", serde_json::json!({ "ns": [1, 2], "m": 1 }))).unwrap_err();
    assert_eq!(config_key(e), "sweep");
}

#[test]
fn forward_check_needs_forward_family() {
    let e = ExperimentConfig::from_json(&with("checks", serde_json::json!(["forward"]))).unwrap_err();
    assert_eq!(config_key(e), "checks");
}

#[test]
fn shipped_configs_parse() {
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["tp2_sketched.json", "tp2_forward.json"] {
        let cfg = ExperimentConfig::from_path(&root.join(name)).unwrap();
        let exp = cfg.build().unwrap();
        let y = sketchbound::problems::tp2_data();
        for (a, b) in cfg.data.y.iter().zip(&y) {
            assert!((a - b).abs() < 1e-15);
        }
        // Adaptive quadrature of ½·exp(−Φ) over [−1, 1].
        assert!((exp.problem.z() - 0.6698726009776839).abs() < 1e-12);
    }
}
