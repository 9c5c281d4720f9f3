use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sightwalk_core::ActionLabel;
use sightwalk_nets::{depth_t_instruction, Error};

/// Independent block scan: 4 row bands by pixel-centre rows, 3 columns by
/// pixel-centre columns, all tested in integer arithmetic.
fn brute_force(depth: &[f32], w: usize, h: usize) -> Option<(ActionLabel, [f64; 3])> {
    let mut sums = [[0.0f64; 3]; 4];
    let mut counts = [[0usize; 3]; 4];
    for k in 0..4 {
        for r in 0..h {
            // centre of row r is (r + ½)/h; in band k when k/4 ≤ centre < (k+1)/4
            if !(2 * k * h <= 8 * r + 4 && 8 * r + 4 < 2 * (k + 1) * h) {
                continue;
            }
            for c in 0..w {
                let col = if 6 * c + 3 < 2 * w {
                    0
                } else if 6 * c + 3 > 4 * w {
                    2
                } else {
                    1
                };
                let d = depth[r * w + c];
                if d != 0.0 {
                    sums[k][col] += f64::from(d);
                    counts[k][col] += 1;
                }
            }
        }
    }
    let mut means = [0.0; 3];
    let mut any = false;
    for col in 0..3 {
        let s: f64 = (1..4).map(|k| sums[k][col]).sum();
        let n: usize = (1..4).map(|k| counts[k][col]).sum();
        if n > 0 {
            means[col] = s / n as f64;
            any = true;
        }
    }
    if !any {
        return None;
    }
    let total: f64 = means.iter().sum();
    let probs = means.map(|m| m / total);
    let best = probs.iter().cloned().fold(f64::MIN, f64::max);
    let action = if probs[1] == best {
        ActionLabel::GoStraight
    } else if probs[0] == best {
        ActionLabel::TurnLeft
    } else {
        ActionLabel::TurnRight
    };
    Some((action, probs))
}

fn random_grid(rng: &mut ChaCha8Rng) -> (Vec<f32>, usize, usize) {
    let w = rng.random_range(1..48);
    let h = rng.random_range(1..40);
    // coarse values make exact ties between columns reasonably common
    let coarse = rng.random_bool(0.3);
    let mut depth: Vec<f32> = (0..w * h)
        .map(|_| {
            if coarse {
                rng.random_range(1..4) as f32
            } else {
                rng.random_range(0.2f32..10.0)
            }
        })
        .collect();
    for _ in 0..rng.random_range(0..4) {
        let (r0, c0) = (rng.random_range(0..h), rng.random_range(0..w));
        let (r1, c1) = (rng.random_range(r0..h) + 1, rng.random_range(c0..w) + 1);
        for r in r0..r1 {
            depth[r * w + c0..r * w + c1].fill(0.0);
        }
    }
    if rng.random_bool(0.05) {
        depth.fill(0.0);
    }
    (depth, w, h)
}

#[test]
fn matches_brute_force_on_a_thousand_masked_grids() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut missing = 0;
    for i in 0..1000 {
        let (depth, w, h) = random_grid(&mut rng);
        match (depth_t_instruction(&depth, w, h), brute_force(&depth, w, h)) {
            (Ok(got), Some((action, probs))) => {
                assert_eq!(got.action, action, "grid {i} ({w}x{h})");
                assert_eq!(got.probabilities, probs, "grid {i} ({w}x{h})");
            }
            (Err(Error::NoValidDepth), None) => missing += 1,
            (got, want) => panic!("grid {i}: {got:?} vs {want:?}"),
        }
    }
    assert!(missing > 0 && missing < 200);
}

#[test]
fn uniform_depth_is_a_tie_and_goes_straight() {
    let r = depth_t_instruction(&[3.0; 12 * 8], 12, 8).unwrap();
    assert_eq!(r.action, ActionLabel::GoStraight);
    assert_eq!(r.probabilities, [1.0 / 3.0; 3]);
}

#[test]
fn deepest_right_column_turns_right() {
    let (w, h) = (9, 8);
    let depth: Vec<f32> = (0..w * h).map(|i| if i % w >= 6 { 5.0 } else { 2.0 }).collect();
    let r = depth_t_instruction(&depth, w, h).unwrap();
    assert_eq!(r.action, ActionLabel::TurnRight);
    assert_eq!(r.probabilities, [2.0 / 9.0, 2.0 / 9.0, 5.0 / 9.0]);
}

#[test]
fn top_band_is_ignored() {
    let (w, h) = (9, 8);
    let depth: Vec<f32> = (0..w * h)
        .map(|i| if i / w < 2 && i % w < 3 { 9.0 } else { 2.0 })
        .collect();
    assert_eq!(depth_t_instruction(&depth, w, h).unwrap().action, ActionLabel::GoStraight);
}

#[test]
fn all_missing_is_an_error() {
    let err = depth_t_instruction(&[0.0; 30], 6, 5).unwrap_err();
    assert!(matches!(err, Error::NoValidDepth));
    assert_eq!(err.to_string(), "no valid depth");
}

#[test]
fn flipping_swaps_turns() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut checked = 0;
    while checked < 300 {
        let (depth, w, h) = random_grid(&mut rng);
        let Ok(a) = depth_t_instruction(&depth, w, h) else { continue };
        let p = a.probabilities;
        if p[0] == p[1] || p[1] == p[2] || p[0] == p[2] {
            continue;
        }
        let flipped: Vec<f32> = (0..w * h).map(|i| depth[(i / w) * w + (w - 1 - i % w)]).collect();
        let b = depth_t_instruction(&flipped, w, h).unwrap();
        assert_eq!(b.action, a.action.mirrored());
        checked += 1;
    }
}
