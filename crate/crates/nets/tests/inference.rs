use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sightwalk_core::{
    resize_frame_nearest, ActionLabel, Bucket, ClassTable, Provenance, RgbdFrame, SemanticMap,
};
use sightwalk_nets::navnet::{encode_sample, NavArch, NavMode, NavModel};
use sightwalk_nets::segnet::{argmax_labels, seg_forward, upsample_labels, SegArch, SegInput, SegModel};
use sightwalk_nets::{predict_instruction, segment, InstructionResult};
use sightwalk_synth::{generate_scene, render};

fn random_frame(seed: u64, w: usize, h: usize) -> RgbdFrame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rgb = (0..w * h * 3).map(|_| rng.random()).collect();
    let depth = (0..w * h)
        .map(|_| if rng.random_bool(0.1) { 0.0 } else { rng.random_range(0.3..8.0) })
        .collect();
    RgbdFrame::new("f", w, h, rgb, depth).unwrap()
}

fn tiny_seg(seed: u64) -> SegModel {
    let classes = ClassTable::default();
    let arch = SegArch::new(vec![3, 4], classes.len()).unwrap();
    let mut params = arch.init_params(&mut ChaCha8Rng::seed_from_u64(seed));
    // non-zero biases so the argmax is not dominated by ties
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
    let last = params.arrays().len() - 1;
    for v in params.array_mut(last) {
        *v = rng.random_range(-0.5..0.5);
    }
    SegModel {
        arch,
        params,
        classes,
        metadata: serde_json::Value::Null,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn upsample_takes_the_floor_half_pixel(lw in 1usize..20, lh in 1usize..20, odd_w: bool, odd_h: bool, seed: u64) {
        let w = 2 * lw - usize::from(odd_w);
        let h = 2 * lh - usize::from(odd_h);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let low: Vec<u8> = (0..lw * lh).map(|_| rng.random_range(0..10)).collect();
        let out = upsample_labels(&low, lw, lh, w, h).unwrap();
        for i in 0..h {
            for j in 0..w {
                prop_assert_eq!(out[i * w + j], low[(i / 2) * lw + j / 2]);
            }
        }
    }
}

#[test]
fn single_distinct_pixel_becomes_a_two_by_two_block() {
    let (lw, lh) = (7, 5);
    for (r, c) in [(0, 0), (2, 3), (4, 6)] {
        let mut low = vec![1u8; lw * lh];
        low[r * lw + c] = 4;
        let out = upsample_labels(&low, lw, lh, 2 * lw, 2 * lh).unwrap();
        for i in 0..2 * lh {
            for j in 0..2 * lw {
                let inside = i / 2 == r && j / 2 == c;
                assert_eq!(out[i * 2 * lw + j] == 4, inside, "({i},{j})");
            }
        }
    }
}

#[test]
fn full_resolution_input_runs_at_half_resolution() {
    let model = tiny_seg(3);
    let frame = random_frame(11, 640, 480);
    let map = segment(&model, &frame).unwrap();
    assert_eq!((map.width(), map.height()), (640, 480));
    assert_eq!(map.provenance(), Provenance::Predicted);
    let low = resize_frame_nearest(&frame, 320, 240).unwrap();
    let fwd = seg_forward(&model.arch, &model.params, &SegInput::from_frames(&[&low]).unwrap(), None).unwrap();
    assert_eq!((fwd.logits.w, fwd.logits.h), (320, 240));
    let labels = argmax_labels(&fwd.logits, 0);
    assert_eq!(map.labels(), upsample_labels(&labels, 320, 240, 640, 480).unwrap().as_slice());
    // the test is only meaningful if the map is not constant
    assert!(map.labels().iter().any(|&l| l != map.labels()[0]));
}

#[test]
fn odd_sizes_are_supported() {
    let model = tiny_seg(4);
    let frame = random_frame(12, 37, 21);
    let map = segment(&model, &frame).unwrap();
    assert_eq!((map.width(), map.height()), (37, 21));
    assert!(segment(&model, &random_frame(1, 1, 5)).is_err());
}

#[test]
fn dominant_head_bias_gives_a_constant_map() {
    let mut model = tiny_seg(5);
    let n = model.params.arrays().len();
    model.params.array_mut(n - 2).fill(0.0);
    let bias = model.params.array_mut(n - 1);
    bias.fill(0.0);
    bias[3] = 1.0;
    let map = segment(&model, &random_frame(2, 64, 48)).unwrap();
    assert!(map.labels().iter().all(|&l| l == 3));
}

#[test]
fn tie_rule_prefers_straight_then_left() {
    let t = |p| InstructionResult::from_probabilities(p).action;
    assert_eq!(t([1.0 / 3.0; 3]), ActionLabel::GoStraight);
    assert_eq!(t([0.4, 0.4, 0.2]), ActionLabel::GoStraight);
    assert_eq!(t([0.4, 0.2, 0.4]), ActionLabel::TurnLeft);
    assert_eq!(t([0.2, 0.3, 0.5]), ActionLabel::TurnRight);
    assert_eq!(t([0.5, 0.3, 0.2]), ActionLabel::TurnLeft);
}

fn nav(mode: NavMode, seed: u64) -> NavModel {
    let arch = NavArch {
        widths: vec![4, 6, 8, 8],
        ..NavArch::new(mode, 64, 10)
    };
    let mut params = arch.init_params(&mut ChaCha8Rng::seed_from_u64(seed));
    params.scale(2.0);
    NavModel {
        arch,
        params,
        metadata: serde_json::Value::Null,
    }
}

fn scene(seed: u64) -> (RgbdFrame, SemanticMap) {
    let plan = generate_scene(Bucket::ALL[seed as usize % 6], seed);
    render(&plan, plan.start).unwrap()
}

#[test]
fn unread_planes_never_change_the_output() {
    let rgb = nav(NavMode::Rgb, 1);
    let rgbd = nav(NavMode::Rgbd, 2);
    for seed in 0..6 {
        let (frame, sem) = scene(seed);
        let (other_frame, other_sem) = scene(seed + 100);
        // same colours, different depth
        let swapped = RgbdFrame::new("x", frame.width(), frame.height(), frame.rgb().to_vec(), other_frame.depth().to_vec())
            .unwrap();
        let a = predict_instruction(&rgb, &frame, Some(&sem)).unwrap();
        assert_eq!(a, predict_instruction(&rgb, &swapped, Some(&other_sem)).unwrap());
        assert_eq!(a, predict_instruction(&rgb, &frame, None).unwrap());
        let b = predict_instruction(&rgbd, &frame, Some(&sem)).unwrap();
        assert_eq!(b, predict_instruction(&rgbd, &frame, Some(&other_sem)).unwrap());
        assert_eq!(b, predict_instruction(&rgbd, &frame, None).unwrap());
    }
}

#[test]
fn rgbds_needs_semantics() {
    let model = nav(NavMode::Rgbds, 3);
    let (frame, sem) = scene(1);
    assert!(predict_instruction(&model, &frame, None).is_err());
    let r = predict_instruction(&model, &frame, Some(&sem)).unwrap();
    assert!((r.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-6);
    assert_eq!(encode_sample(&model.arch, &frame, Some(&sem)).unwrap().len(), 5 * 64 * 64);
}

#[test]
fn checkpoints_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let seg = tiny_seg(9);
    let p = dir.path().join("seg.ckpt");
    seg.save(&p).unwrap();
    let back = SegModel::load(&p).unwrap();
    assert_eq!(back, seg);
    let q = dir.path().join("seg2.ckpt");
    back.save(&q).unwrap();
    assert_eq!(std::fs::read(&p).unwrap(), std::fs::read(&q).unwrap());

    let model = nav(NavMode::Rgbd, 4);
    let p = dir.path().join("nav.ckpt");
    model.save(&p).unwrap();
    let back = NavModel::load(&p).unwrap();
    assert_eq!(back, model);
    assert!(SegModel::load(&p).is_err());
}
