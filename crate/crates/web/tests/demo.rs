use contact_slam_web::{contact_point_json, explore_json, push_json, DemoError};
use serde_json::Value;

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn exploration_returns_scene_and_report() {
    let v = parse(&explore_json("socket_two_pin", 1, 1.0).unwrap());
    assert!(v["scene"]["env"].as_array().unwrap().len() > 4);
    assert_eq!(v["scene"]["goal"], serde_json::json!([0.0, 0.0]));
    assert_eq!(v["report"]["success"], true);
    assert!(v["report"]["final_error_mm"].as_f64().unwrap() < 5.0);
    let truth = v["scene"]["truth"].as_array().unwrap();
    assert!(truth.iter().all(|c| c.as_f64().unwrap().abs() < 40.0));
}

#[test]
fn contact_point_is_recovered() {
    let v = parse(&contact_point_json("socket_two_pin", 3, 0.0, 12.0, 2.0, -8.0, 1.0).unwrap());
    assert!(v["error_mm"].as_f64().unwrap() < 1e-6, "{v}");
    let v = parse(&contact_point_json("socket_two_pin", 3, 1.0, 12.0, 2.0, -8.0, 1.0).unwrap());
    assert!(v["error_mm"].as_f64().unwrap() < 0.5, "{v}");
}

#[test]
fn pushing_returns_scene_and_report() {
    let v = parse(&push_json("push_block", 2, 1.0).unwrap());
    assert_eq!(v["scene"]["block"].as_array().unwrap().len(), 4);
    assert_eq!(v["report"]["block_in_target"], true);
}

#[test]
fn wrong_kind_and_unknown_scenarios_are_errors() {
    assert!(matches!(explore_json("push_block", 1, 1.0), Err(DemoError::Input(_))));
    assert!(matches!(push_json("socket_two_pin", 1, 1.0), Err(DemoError::Input(_))));
    assert!(matches!(explore_json("nowhere", 1, 1.0), Err(DemoError::Scenario(_))));
}
