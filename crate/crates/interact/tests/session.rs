use proptest::prelude::*;
use sightwalk_interact::session::{touch_pixel, window_median_depth};
use sightwalk_interact::{start_session, Error, SessionOptions, SessionState, Snapshot};

const CLASSES: [&str; 5] = ["floor", "wall", "person", "bin", "sky"];

fn snapshot(width: usize, height: usize, labels: Vec<u8>, depth_mm: Vec<u16>) -> Snapshot {
    Snapshot {
        classes: CLASSES.iter().map(|s| s.to_string()).collect(),
        labels,
        depth_mm,
        width,
        height,
        near_mm: 500,
        far_mm: 5000,
    }
}

/// 8×6: floor in the bottom half, a person at columns 2..4 of the top half
/// standing 1 m away, wall elsewhere at 3 m.
fn scene() -> Snapshot {
    let (w, h) = (8, 6);
    let mut labels = vec![0u8; w * h];
    let mut depth = vec![2000u16; w * h];
    for r in 0..3 {
        for c in 0..w {
            let person = (2..4).contains(&c);
            labels[r * w + c] = if person { 2 } else { 1 };
            depth[r * w + c] = if person { 1000 } else { 3000 };
        }
    }
    snapshot(w, h, labels, depth)
}

#[test]
fn entering_a_person_region_speaks_its_name() {
    // a 12×12 person patch so the 5×5 window is all person depth
    let (w, h) = (12, 12);
    let s = snapshot(w, h, vec![2; w * h], vec![1000; w * h]);
    let (mut sess, cue) = start_session("a", s, SessionOptions::default()).unwrap();
    assert!(cue);
    assert_eq!(sess.state(), SessionState::Ready);
    let u = sess.touch(0.5, 0.5).unwrap().unwrap();
    assert_eq!(u.text, "person");
    assert_eq!(u.volume.to_string(), "0.889");
    assert_eq!(sess.state(), SessionState::Active);
    assert_eq!(sess.touch(0.52, 0.48).unwrap(), None);
}

#[test]
fn touches_outside_the_unit_square_are_rejected() {
    let (mut sess, _) = start_session("a", scene(), SessionOptions::default()).unwrap();
    assert!(matches!(sess.touch(1.5, 0.2), Err(Error::Coordinates { .. })));
    assert!(sess.touch(-0.01, 0.2).is_err());
    assert!(sess.touch(0.2, f64::NAN).is_err());
    // the corners are inside
    assert!(sess.touch(1.0, 1.0).unwrap().is_some());
    assert!(sess.touch(0.0, 0.0).unwrap().is_some());
}

#[test]
fn ended_sessions_refuse_touches_and_a_second_end() {
    let (mut sess, _) = start_session("a", scene(), SessionOptions::default()).unwrap();
    sess.touch(0.1, 0.9).unwrap();
    sess.end().unwrap();
    assert_eq!(sess.state(), SessionState::Ended);
    assert!(matches!(sess.touch(0.1, 0.9), Err(Error::Session(_))));
    assert!(sess.end().is_err());
}

#[test]
fn malformed_snapshots_do_not_start() {
    let mut s = scene();
    s.labels.pop();
    assert!(start_session("a", s, SessionOptions::default()).is_err());
    let mut s = scene();
    s.labels[0] = 9;
    assert!(start_session("a", s, SessionOptions::default()).is_err());
    let mut s = scene();
    s.far_mm = s.near_mm;
    assert!(start_session("a", s, SessionOptions::default()).is_err());
    let mut s = scene();
    s.classes[0] = "wall2".into();
    assert!(start_session("a", s, SessionOptions::default()).is_err());
}

#[test]
fn missing_depth_at_the_touch_gives_the_quietest_volume() {
    let (w, h) = (10, 10);
    let s = snapshot(w, h, vec![3; w * h], vec![0; w * h]);
    let (mut sess, _) = start_session("a", s, SessionOptions::default()).unwrap();
    assert_eq!(sess.touch(0.5, 0.5).unwrap().unwrap().volume.to_string(), "0.100");
}

#[test]
fn crossing_the_same_class_twice_is_two_regions_only_with_components() {
    // wall | person | wall | person, one row
    let labels = vec![1, 2, 1, 2];
    let mk = || snapshot(4, 1, labels.clone(), vec![2000; 4]);
    let path = [0.1, 0.3, 0.6, 0.9];
    let count = |opts| {
        let (mut s, _) = start_session("a", mk(), opts).unwrap();
        path.iter().filter(|&&x| s.touch(x, 0.5).unwrap().is_some()).count()
    };
    assert_eq!(count(SessionOptions::default()), 4);
    // same-class neighbours merge: floor, floor, wall → two regions
    let (mut s, _) = start_session("b", snapshot(3, 1, vec![0, 0, 1], vec![1000; 3]), SessionOptions {
        regions_by_component: true,
    })
    .unwrap();
    let spoken: Vec<_> = [0.1, 0.5, 0.9].iter().filter_map(|&x| s.touch(x, 0.0).unwrap()).map(|u| u.text).collect();
    assert_eq!(spoken, ["floor", "wall"]);
    // two persons separated by wall: class mode sees person, wall, person
    let (mut s, _) = start_session("c", snapshot(3, 1, vec![2, 1, 2], vec![1000; 3]), SessionOptions {
        regions_by_component: true,
    })
    .unwrap();
    assert_eq!([0.1, 0.9].iter().filter(|&&x| s.touch(x, 0.0).unwrap().is_some()).count(), 2);
    let (mut s, _) = start_session("d", snapshot(3, 1, vec![2, 2, 2], vec![1000; 3]), SessionOptions {
        regions_by_component: true,
    })
    .unwrap();
    assert_eq!([0.1, 0.9].iter().filter(|&&x| s.touch(x, 0.0).unwrap().is_some()).count(), 1);
}

fn brute_median(depth: &[u16], w: usize, h: usize, row: usize, col: usize) -> Option<f64> {
    let mut v = Vec::new();
    for r in 0..h {
        for c in 0..w {
            if r.abs_diff(row) <= 2 && c.abs_diff(col) <= 2 && depth[r * w + c] != 0 {
                v.push(f64::from(depth[r * w + c]) / 1000.0);
            }
        }
    }
    v.sort_by(f64::total_cmp);
    match v.len() {
        0 => None,
        n if n % 2 == 1 => Some(v[n / 2]),
        n => Some((v[n / 2 - 1] + v[n / 2]) / 2.0),
    }
}

fn grid() -> impl Strategy<Value = (usize, usize, Vec<u8>, Vec<u16>)> {
    (1usize..12, 1usize..12).prop_flat_map(|(w, h)| {
        (
            Just(w),
            Just(h),
            prop::collection::vec(0u8..5, w * h),
            prop::collection::vec(prop_oneof![Just(0u16), 100u16..9000], w * h),
        )
    })
}

proptest! {
    #[test]
    fn window_median_matches_a_full_scan((w, h, _labels, depth) in grid(), r in 0usize..12, c in 0usize..12) {
        let (row, col) = (r % h, c % w);
        let (got, want) = (window_median_depth(&depth, w, h, row, col), brute_median(&depth, w, h, row, col));
        prop_assert_eq!(got.is_some(), want.is_some());
        if let (Some(a), Some(b)) = (got, want) {
            prop_assert!((a - b).abs() < 1e-12, "{} vs {}", a, b);
        }
    }

    /// Along any path, utterances are emitted exactly at region entries:
    /// the first touch plus every change of class between consecutive touches.
    #[test]
    fn one_utterance_per_region_entry((w, h, labels, depth) in grid(), path in prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 1..40)) {
        let (mut s, _) = start_session("p", snapshot(w, h, labels.clone(), depth), SessionOptions::default()).unwrap();
        let mut spoken = Vec::new();
        for &(x, y) in &path {
            if let Some(u) = s.touch(x, y).unwrap() {
                spoken.push(u.text);
            }
        }
        let classes: Vec<u8> = path
            .iter()
            .map(|&(x, y)| {
                let col = ((x * w as f64).floor() as usize).min(w - 1);
                let row = ((y * h as f64).floor() as usize).min(h - 1);
                labels[row * w + col]
            })
            .collect();
        let mut expected = vec![CLASSES[classes[0] as usize].to_string()];
        for pair in classes.windows(2) {
            if pair[0] != pair[1] {
                expected.push(CLASSES[pair[1] as usize].to_string());
            }
        }
        prop_assert_eq!(spoken, expected);
    }

    #[test]
    fn touch_pixel_stays_in_the_grid(x in 0.0f64..=1.0, y in 0.0f64..=1.0, w in 1usize..700, h in 1usize..500) {
        let (r, c) = touch_pixel(x, y, w, h);
        prop_assert!(r < h && c < w);
    }
}
