//! Analytic gradients against central finite differences on tiny models.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sightwalk_core::{ActionLabel, ModelParams};
use sightwalk_nets::navnet::{nav_loss, NavArch, NavMode};
use sightwalk_nets::nn::Tensor;
use sightwalk_nets::segnet::{seg_loss, SegArch, SegBatch, SegInput};

fn randomize(params: &mut ModelParams, rng: &mut ChaCha8Rng, scale: f64) {
    for i in 0..params.len() {
        params.set_flat(i, rng.random_range(-scale..scale));
    }
}

/// Largest per-coordinate relative error, with a floor so that gradients
/// that are zero on both sides do not blow up the ratio.
fn check(params: &ModelParams, analytic: &ModelParams, mut f: impl FnMut(&ModelParams) -> f64) -> f64 {
    let eps = 1e-6;
    assert!(analytic.squared_norm() > 0.0);
    let mut worst: f64 = 0.0;
    let mut p = params.clone();
    for i in 0..params.len() {
        let x = params.get_flat(i);
        p.set_flat(i, x + eps);
        let up = f(&p);
        p.set_flat(i, x - eps);
        let down = f(&p);
        p.set_flat(i, x);
        let numeric = (up - down) / (2.0 * eps);
        let a = analytic.get_flat(i);
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-4);
        worst = worst.max(rel);
    }
    worst
}

fn tiny_seg_batch(rng: &mut ChaCha8Rng, n: usize, h: usize, w: usize, k: usize) -> SegBatch {
    let rgb = Tensor::from_vec(n, 3, h, w, (0..n * 3 * h * w).map(|_| rng.random()).collect());
    let depth = Tensor::from_vec(n, 1, h, w, (0..n * h * w).map(|_| rng.random()).collect());
    let labels = (0..n * h * w).map(|_| rng.random_range(0..k)).collect();
    SegBatch::new(SegInput { rgb, depth }, labels).unwrap()
}

#[test]
fn segmentation_gradient_matches_finite_differences() {
    let arch = SegArch::new(vec![2, 3], 3).unwrap();
    for seed in 0..3 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = arch.init_params(&mut rng);
        assert!(params.len() <= 500, "{} parameters", params.len());
        randomize(&mut params, &mut rng, 0.5);
        // 7×6 forces the pad-to-multiple-of-4 and crop path.
        let batch = tiny_seg_batch(&mut rng, 2, 7, 6, 3);
        let lambda = 2.5;
        let (_, grads) = seg_loss(&arch, &params, &batch, lambda, None).unwrap();
        let err = check(&params, &grads, |p| seg_loss(&arch, p, &batch, lambda, None).unwrap().0);
        assert!(err <= 1e-4, "seed {seed}: relative error {err:e}");
    }
}

#[test]
fn segmentation_gradient_with_fixed_dropout_mask() {
    let arch = SegArch::new(vec![2, 3], 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut params = arch.init_params(&mut rng);
    randomize(&mut params, &mut rng, 0.5);
    let batch = tiny_seg_batch(&mut rng, 1, 8, 8, 3);
    let loss = |p: &ModelParams| {
        let mut mask_rng = ChaCha8Rng::seed_from_u64(77);
        seg_loss(&arch, p, &batch, 1.0, Some((0.3, &mut mask_rng)))
    };
    let (_, grads) = loss(&params).unwrap();
    let err = check(&params, &grads, |p| loss(p).unwrap().0);
    assert!(err <= 1e-4, "relative error {err:e}");
}

fn tiny_nav(mode: NavMode) -> NavArch {
    NavArch {
        mode,
        widths: vec![2, 2, 3, 3],
        pool_rows: 2,
        pool_cols: 2,
        input_side: 32,
        semantic_classes: 10,
    }
}

#[test]
fn navigation_gradient_matches_finite_differences() {
    for (seed, mode) in NavMode::ALL.into_iter().enumerate() {
        let arch = tiny_nav(mode);
        let mut rng = ChaCha8Rng::seed_from_u64(seed as u64 + 100);
        let mut params = arch.init_params(&mut rng);
        assert!(params.len() <= 500, "{} parameters", params.len());
        randomize(&mut params, &mut rng, 0.4);
        let n = 3;
        let c = mode.planes();
        let x = Tensor::from_vec(n, c, 32, 32, (0..n * c * 1024).map(|_| rng.random()).collect());
        let labels = [ActionLabel::TurnLeft, ActionLabel::GoStraight, ActionLabel::TurnRight];
        let (_, grads) = nav_loss(&arch, &params, &x, &labels, 3.0, None).unwrap();
        let err = check(&params, &grads, |p| nav_loss(&arch, p, &x, &labels, 3.0, None).unwrap().0);
        assert!(err <= 1e-4, "{mode}: relative error {err:e}");
    }
}

#[test]
fn navigation_gradient_with_fixed_dropout_mask() {
    let arch = tiny_nav(NavMode::Rgbds);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut params = arch.init_params(&mut rng);
    randomize(&mut params, &mut rng, 0.4);
    let x = Tensor::from_vec(2, 5, 32, 32, (0..2 * 5 * 1024).map(|_| rng.random()).collect());
    let labels = [ActionLabel::TurnRight, ActionLabel::TurnLeft];
    let loss = |p: &ModelParams| {
        let mut mask_rng = ChaCha8Rng::seed_from_u64(3);
        nav_loss(&arch, p, &x, &labels, 1.0, Some((0.2, &mut mask_rng)))
    };
    let (_, grads) = loss(&params).unwrap();
    let err = check(&params, &grads, |p| loss(p).unwrap().0);
    assert!(err <= 1e-4, "relative error {err:e}");
}
