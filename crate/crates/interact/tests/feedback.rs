use proptest::prelude::*;
use sightwalk_core::ActionLabel;
use sightwalk_interact::{instruction_to_feedback, volume_for_distance, Volume, V_MIN};
use sightwalk_nets::InstructionResult;

fn result(action: ActionLabel) -> InstructionResult {
    let mut probabilities = [0.2; 3];
    probabilities[action.ordinal()] = 0.6;
    InstructionResult { action, probabilities }
}

#[test]
fn only_turns_are_spoken() {
    let left = instruction_to_feedback(&result(ActionLabel::TurnLeft)).unwrap();
    assert_eq!((left.text.as_str(), left.volume), ("turn left", Volume::MAX));
    let right = instruction_to_feedback(&result(ActionLabel::TurnRight)).unwrap();
    assert_eq!((right.text.as_str(), right.volume.as_f64()), ("turn right", 1.0));
    assert_eq!(instruction_to_feedback(&result(ActionLabel::GoStraight)), None);
}

#[test]
fn volume_endpoints_and_midpoint() {
    assert_eq!(volume_for_distance(Some(0.5), 0.5, 5.0).unwrap(), 1.0);
    assert_eq!(volume_for_distance(Some(5.0), 0.5, 5.0).unwrap(), 0.1);
    assert_eq!(volume_for_distance(Some(12.0), 0.5, 5.0).unwrap(), 0.1);
    assert_eq!(volume_for_distance(Some(0.0), 0.5, 5.0).unwrap(), 1.0);
    assert_eq!(volume_for_distance(None, 0.5, 5.0).unwrap(), V_MIN);
    let v = volume_for_distance(Some(1.0), 0.5, 5.0).unwrap();
    assert!((v - 4.0 / 4.5).abs() < 1e-15, "{v}");
    assert_eq!(Volume::from_f64(v).unwrap().to_string(), "0.889");
}

#[test]
fn bad_volume_arguments() {
    assert!(volume_for_distance(Some(1.0), 5.0, 5.0).is_err());
    assert!(volume_for_distance(Some(1.0), 6.0, 5.0).is_err());
    assert!(volume_for_distance(Some(-0.1), 0.5, 5.0).is_err());
    assert!(volume_for_distance(Some(f64::NAN), 0.5, 5.0).is_err());
    assert!(Volume::from_f64(1.01).is_err());
    assert!(Volume::from_thousandths(1001).is_err());
}

proptest! {
    #[test]
    fn volume_is_bounded_and_non_increasing(a in 0.0f64..20.0, b in 0.0f64..20.0, near in 0.0f64..3.0, span in 0.01f64..10.0) {
        let far = near + span;
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let vl = volume_for_distance(Some(lo), near, far).unwrap();
        let vh = volume_for_distance(Some(hi), near, far).unwrap();
        prop_assert!((V_MIN..=1.0).contains(&vl) && (V_MIN..=1.0).contains(&vh));
        prop_assert!(vh <= vl);
    }
}
