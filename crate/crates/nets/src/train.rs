//! Minibatch SGD shared by both networks, plus the dataset-facing trainers.

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use sightwalk_core::{learning_rate, ActionLabel, Dataset, ModelParams, SemanticMap, Split, TrainConfig};

use crate::navnet::{encode_sample, nav_loss, stack, NavArch, NavModel};
use crate::nn::Tensor;
use crate::segnet::{segment, seg_loss, training_pair, SegArch, SegBatch, SegInput, SegModel};
use crate::{Error, Result};

fn mix(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs `config.epochs` epochs of plain SGD over `n` samples.
///
/// `batch_loss(indices, params, dropout_rng)` returns the loss and gradient
/// for one minibatch. Every epoch is a fresh seeded permutation; the last
/// partial batch is kept. Returns the mean batch loss of each epoch.
pub fn sgd<F>(params: &mut ModelParams, n: usize, config: &TrainConfig, mut batch_loss: F) -> Result<Vec<f64>>
where
    F: FnMut(&[usize], &ModelParams, &mut dyn RngCore) -> Result<(f64, ModelParams)>,
{
    config.validate()?;
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let per_epoch = n.div_ceil(config.batch_size);
    let total = (per_epoch * config.epochs) as u64;
    let mut order: Vec<usize> = (0..n).collect();
    let mut losses = Vec::with_capacity(config.epochs);
    let mut it = 0u64;
    for epoch in 0..config.epochs {
        let mut shuffle = ChaCha8Rng::seed_from_u64(mix(config.seed, epoch as u64, 0));
        order.sort_unstable();
        order.shuffle(&mut shuffle);
        let mut sum = 0.0;
        for (b, idx) in order.chunks(config.batch_size).enumerate() {
            let lr = learning_rate(it, total, config.lr0)?;
            let mut drop_rng = ChaCha8Rng::seed_from_u64(mix(config.seed, epoch as u64, b as u64 + 1));
            let (loss, grads) = match batch_loss(idx, params, &mut drop_rng) {
                Ok(v) => v,
                Err(Error::NonFinite(_)) => {
                    return Err(Error::Diverged {
                        epoch,
                        batch: b,
                        loss: f64::NAN,
                        lr,
                    })
                }
                Err(e) => return Err(e),
            };
            if !loss.is_finite() || !grads.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    batch: b,
                    loss,
                    lr,
                });
            }
            params.axpy(-lr, &grads);
            sum += loss;
            it += 1;
        }
        let mean = sum / per_epoch as f64;
        log::info!("epoch {}/{}: loss {mean:.6}", epoch + 1, config.epochs);
        losses.push(mean);
    }
    Ok(losses)
}

fn require_train(ds: &Dataset) -> Result<()> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if ds.manifest.split != Split::Train {
        return Err(Error::Input("training needs the train split".into()));
    }
    Ok(())
}

/// Trains the segmentation network on half-resolution copies of the dataset
/// frames against their ground-truth label maps.
pub fn train_segmentation(ds: &Dataset, arch: &SegArch, config: &TrainConfig) -> Result<SegModel> {
    require_train(ds)?;
    arch.validate()?;
    if arch.classes != ds.classes().len() {
        return Err(Error::Architecture(format!(
            "segnet has {} classes, dataset table has {}",
            arch.classes,
            ds.classes().len()
        )));
    }
    let pairs = ds
        .samples
        .iter()
        .map(|s| training_pair(&s.frame, &s.semantic_gt))
        .collect::<Result<Vec<_>>>()?;
    let mut params = arch.init_params(&mut ChaCha8Rng::seed_from_u64(mix(config.seed, u64::MAX, 0)));
    let losses = sgd(&mut params, pairs.len(), config, |idx, p, rng| {
        let frames: Vec<_> = idx.iter().map(|&i| &pairs[i].0).collect();
        let labels = idx.iter().flat_map(|&i| pairs[i].1.iter().copied()).collect();
        let batch = SegBatch::new(SegInput::from_frames(&frames)?, labels)?;
        seg_loss(arch, p, &batch, config.lambda_reg, Some((config.dropout_p, rng)))
    })?;
    Ok(SegModel {
        arch: arch.clone(),
        params,
        classes: ds.classes().clone(),
        metadata: json!({ "config": config, "epoch_losses": losses, "samples": ds.len() }),
    })
}

/// Where RGBDS training and inference get the semantic plane from.
#[derive(Debug, Clone, Copy)]
pub enum SemanticSource<'a> {
    GroundTruth,
    Model(&'a SegModel),
}

impl SemanticSource<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            SemanticSource::GroundTruth => "ground_truth",
            SemanticSource::Model(_) => "segnet",
        }
    }
}

/// Encoded network inputs for every sample of a dataset.
pub fn encode_dataset(ds: &Dataset, arch: &NavArch, source: SemanticSource) -> Result<Vec<Vec<f64>>> {
    ds.samples
        .iter()
        .map(|s| {
            let predicted;
            let sem: Option<&SemanticMap> = match (arch.mode.needs_semantics(), source) {
                (false, _) => None,
                (true, SemanticSource::GroundTruth) => Some(&s.semantic_gt),
                (true, SemanticSource::Model(m)) => {
                    predicted = segment(m, &s.frame)?;
                    Some(&predicted)
                }
            };
            encode_sample(arch, &s.frame, sem)
        })
        .collect()
}

/// Trains a navigation model on pre-encoded inputs.
pub fn train_navigation_inputs(
    arch: &NavArch,
    inputs: &[Vec<f64>],
    labels: &[ActionLabel],
    config: &TrainConfig,
) -> Result<(ModelParams, Vec<f64>)> {
    arch.validate()?;
    if inputs.len() != labels.len() {
        return Err(Error::Input(format!("{} inputs but {} labels", inputs.len(), labels.len())));
    }
    if arch.input_side != config.input_side {
        return Err(Error::Architecture(format!(
            "navnet input side {} differs from config input_side {}",
            arch.input_side, config.input_side
        )));
    }
    let mut params = arch.init_params(&mut ChaCha8Rng::seed_from_u64(mix(config.seed, u64::MAX, 1)));
    let losses = sgd(&mut params, inputs.len(), config, |idx, p, rng| {
        let xs: Vec<&[f64]> = idx.iter().map(|&i| inputs[i].as_slice()).collect();
        let ys: Vec<ActionLabel> = idx.iter().map(|&i| labels[i]).collect();
        let x: Tensor = stack(arch, &xs)?;
        nav_loss(arch, p, &x, &ys, config.lambda_reg, Some((config.dropout_p, rng)))
    })?;
    Ok((params, losses))
}

pub fn train_navigation(ds: &Dataset, source: SemanticSource, arch: &NavArch, config: &TrainConfig) -> Result<NavModel> {
    require_train(ds)?;
    if arch.mode.needs_semantics() && arch.semantic_classes != ds.classes().len() {
        return Err(Error::Architecture(format!(
            "navnet scales semantics for {} classes, dataset table has {}",
            arch.semantic_classes,
            ds.classes().len()
        )));
    }
    let inputs = encode_dataset(ds, arch, source)?;
    let labels: Vec<ActionLabel> = ds.samples.iter().map(|s| s.action).collect();
    let (params, losses) = train_navigation_inputs(arch, &inputs, &labels, config)?;
    Ok(NavModel {
        arch: arch.clone(),
        params,
        metadata: json!({
            "config": config,
            "semantic_source": source.name(),
            "epoch_losses": losses,
            "samples": ds.len(),
        }),
    })
}
