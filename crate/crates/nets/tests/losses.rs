use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sightwalk_core::{ActionLabel, ModelParams};
use sightwalk_nets::navnet::{nav_loss, nav_probabilities, NavArch, NavMode, NavModel};
use sightwalk_nets::nn::Tensor;
use sightwalk_nets::segnet::{seg_loss, seg_loss_parts, seg_probabilities, SegArch, SegBatch, SegInput, SegModel};

fn seg_batch(seed: u64, n: usize, h: usize, w: usize, k: usize) -> SegBatch {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rgb = Tensor::from_vec(n, 3, h, w, (0..n * 3 * h * w).map(|_| rng.random()).collect());
    let depth = Tensor::from_vec(n, 1, h, w, (0..n * h * w).map(|_| rng.random()).collect());
    let labels = (0..n * h * w).map(|_| rng.random_range(0..k)).collect();
    SegBatch::new(SegInput { rgb, depth }, labels).unwrap()
}

fn seg_setup(seed: u64) -> (SegArch, ModelParams) {
    let arch = SegArch::new(vec![3, 4], 4).unwrap();
    let params = arch.init_params(&mut ChaCha8Rng::seed_from_u64(seed));
    (arch, params)
}

fn nav_arch(mode: NavMode) -> NavArch {
    NavArch {
        mode,
        widths: vec![3, 4, 4, 5],
        pool_rows: 2,
        pool_cols: 2,
        input_side: 32,
        semantic_classes: 10,
    }
}

fn nav_input(seed: u64, n: usize, c: usize) -> Tensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Tensor::from_vec(n, c, 32, 32, (0..n * c * 1024).map(|_| rng.random()).collect())
}

fn labels(seed: u64, n: usize) -> Vec<ActionLabel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| ActionLabel::ALL[rng.random_range(0..3)]).collect()
}

#[test]
fn zero_lambda_leaves_only_the_norm() {
    let (arch, params) = seg_setup(1);
    let half_norm = 0.5 * params.squared_norm();
    for seed in 0..3 {
        let (loss, _) = seg_loss(&arch, &params, &seg_batch(seed, 2, 8, 8, 4), 0.0, None).unwrap();
        assert_eq!(loss, half_norm);
    }
    let arch = nav_arch(NavMode::Rgbds);
    let params = arch.init_params(&mut ChaCha8Rng::seed_from_u64(2));
    for seed in 0..3 {
        let (loss, _) = nav_loss(&arch, &params, &nav_input(seed, 3, 5), &labels(seed, 3), 0.0, None).unwrap();
        assert_eq!(loss, 0.5 * params.squared_norm());
    }
}

#[test]
fn zero_parameters_give_log_k_per_pixel() {
    let (arch, params) = seg_setup(1);
    let zero = params.zeros_like();
    let (loss, ce, _) = seg_loss_parts(&arch, &zero, &seg_batch(4, 2, 6, 10, 4), 1.0, None).unwrap();
    assert!((ce - 4f64.ln()).abs() < 1e-12, "{ce}");
    assert!((loss - 4f64.ln()).abs() < 1e-12);
}

#[test]
fn zero_final_layer_gives_log_3() {
    let arch = nav_arch(NavMode::Rgbd);
    let mut params = arch.init_params(&mut ChaCha8Rng::seed_from_u64(3));
    let last = params.arrays().len();
    params.array_mut(last - 2).fill(0.0);
    params.array_mut(last - 1).fill(0.0);
    let lambda = 2.0;
    let (loss, _) = nav_loss(&arch, &params, &nav_input(5, 4, 4), &labels(5, 4), lambda, None).unwrap();
    let expect = 0.5 * params.squared_norm() + lambda * 3f64.ln();
    assert!((loss - expect).abs() < 1e-12);
    let model = NavModel {
        arch,
        params,
        metadata: serde_json::Value::Null,
    };
    for p in nav_probabilities(&model, &nav_input(6, 3, 4)).unwrap() {
        assert_eq!(p, [1.0 / 3.0; 3]);
    }
}

#[test]
fn doubling_lambda_increases_the_loss() {
    let (arch, params) = seg_setup(7);
    let batch = seg_batch(8, 1, 8, 8, 4);
    let a = seg_loss(&arch, &params, &batch, 1.0, None).unwrap().0;
    let b = seg_loss(&arch, &params, &batch, 2.0, None).unwrap().0;
    assert!(b > a);
    let arch = nav_arch(NavMode::Rgb);
    let params = arch.init_params(&mut ChaCha8Rng::seed_from_u64(9));
    let x = nav_input(1, 2, 3);
    let y = labels(1, 2);
    let a = nav_loss(&arch, &params, &x, &y, 0.5, None).unwrap().0;
    let b = nav_loss(&arch, &params, &x, &y, 1.0, None).unwrap().0;
    assert!(b > a);
}

#[test]
fn labels_out_of_range_are_rejected() {
    let (arch, params) = seg_setup(1);
    let mut batch = seg_batch(1, 1, 4, 4, 4);
    batch.labels[3] = 4;
    assert!(matches!(
        seg_loss(&arch, &params, &batch, 1.0, None),
        Err(sightwalk_nets::Error::LabelOutOfRange { label: 4, classes: 4 })
    ));
}

#[test]
fn channel_mismatch_is_rejected() {
    let arch = nav_arch(NavMode::Rgbds);
    let params = arch.init_params(&mut ChaCha8Rng::seed_from_u64(1));
    assert!(matches!(
        nav_loss(&arch, &params, &nav_input(1, 1, 4), &labels(1, 1), 1.0, None),
        Err(sightwalk_nets::Error::ChannelMismatch { expected: 5, actual: 4 })
    ));
}

fn permute_seg(batch: &SegBatch, perm: &[usize]) -> SegBatch {
    let pick = |t: &Tensor| {
        let per = t.c * t.plane();
        let data = perm.iter().flat_map(|&i| t.data[i * per..(i + 1) * per].iter().copied()).collect();
        Tensor::from_vec(t.n, t.c, t.h, t.w, data)
    };
    let p = batch.input.rgb.plane();
    let labels = perm.iter().flat_map(|&i| batch.labels[i * p..(i + 1) * p].iter().copied()).collect();
    SegBatch::new(
        SegInput {
            rgb: pick(&batch.input.rgb),
            depth: pick(&batch.input.depth),
        },
        labels,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn seg_loss_ignores_sample_order(seed in 0u64..1000, perm in Just(vec![0usize, 1, 2, 3]).prop_shuffle()) {
        let (arch, params) = seg_setup(seed);
        let batch = seg_batch(seed, 4, 6, 6, 4);
        let a = seg_loss(&arch, &params, &batch, 1.5, None).unwrap();
        let b = seg_loss(&arch, &params, &permute_seg(&batch, &perm), 1.5, None).unwrap();
        prop_assert!((a.0 - b.0).abs() <= 1e-12 * a.0.abs());
        let diff = {
            let mut d = a.1.clone();
            d.axpy(-1.0, &b.1);
            d.squared_norm().sqrt()
        };
        prop_assert!(diff <= 1e-10 * a.1.squared_norm().sqrt());
    }

    #[test]
    fn nav_loss_ignores_sample_order(seed in 0u64..1000, perm in Just(vec![0usize, 1, 2, 3, 4]).prop_shuffle()) {
        let arch = nav_arch(NavMode::Rgbds);
        let params = arch.init_params(&mut ChaCha8Rng::seed_from_u64(seed));
        let x = nav_input(seed, 5, 5);
        let y = labels(seed, 5);
        let per = 5 * 1024;
        let xp = Tensor::from_vec(5, 5, 32, 32, perm.iter().flat_map(|&i| x.data[i * per..(i + 1) * per].iter().copied()).collect());
        let yp: Vec<_> = perm.iter().map(|&i| y[i]).collect();
        let a = nav_loss(&arch, &params, &x, &y, 2.0, None).unwrap().0;
        let b = nav_loss(&arch, &params, &xp, &yp, 2.0, None).unwrap().0;
        prop_assert!((a - b).abs() <= 1e-12 * a.abs());
    }

    #[test]
    fn seg_probabilities_sum_to_one(seed in 0u64..10_000, h in 3usize..12, w in 3usize..12) {
        let (arch, mut params) = seg_setup(seed);
        params.scale(3.0);
        let classes = sightwalk_core::ClassTable::from_names(&["floor", "wall", "bin", "sky"]).unwrap();
        let model = SegModel { arch, params, classes, metadata: serde_json::Value::Null };
        let batch = seg_batch(seed, 2, h, w, 4);
        let probs = seg_probabilities(&model, &batch.input).unwrap();
        prop_assert_eq!((probs.h, probs.w), (h, w));
        let p = probs.plane();
        for b in 0..2 {
            for j in 0..p {
                let s: f64 = (0..4).map(|c| probs.data[(b * 4 + c) * p + j]).sum();
                prop_assert!((s - 1.0).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn nav_probabilities_sum_to_one(seed in 0u64..10_000, scale in 0.1f64..20.0) {
        let arch = nav_arch(NavMode::Rgb);
        let mut params = arch.init_params(&mut ChaCha8Rng::seed_from_u64(seed));
        params.scale(scale);
        let model = NavModel { arch, params, metadata: serde_json::Value::Null };
        for p in nav_probabilities(&model, &nav_input(seed, 2, 3)).unwrap() {
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-6);
        }
    }
}
