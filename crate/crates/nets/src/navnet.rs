//! Three-way walk-instruction classifier.
//!
//! Backbone: four `conv3×3 stride 2 + ReLU` stages, then a max-pool over a
//! coarse grid, dropout and a fully connected layer with three outputs.
//! The channel mode picks which leading planes of the 5-plane encoding the
//! network reads; the rest are never touched.

use rand::Rng;
use serde::{Deserialize, Serialize};
use sightwalk_core::{
    encode_channels, ActionLabel, ModelParams, ParamArray, Provenance, RgbdFrame, SemanticMap,
};

use crate::init::he_init;
use crate::nn::*;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NavMode {
    Rgb,
    Rgbd,
    Rgbds,
}

impl NavMode {
    pub const ALL: [NavMode; 3] = [NavMode::Rgb, NavMode::Rgbd, NavMode::Rgbds];

    pub fn planes(self) -> usize {
        match self {
            NavMode::Rgb => 3,
            NavMode::Rgbd => 4,
            NavMode::Rgbds => 5,
        }
    }

    pub fn needs_semantics(self) -> bool {
        self == NavMode::Rgbds
    }

    /// Method name as it appears in reports.
    pub fn method_name(self) -> &'static str {
        match self {
            NavMode::Rgb => "RGB-C",
            NavMode::Rgbd => "RGBD-C",
            NavMode::Rgbds => "RGBDS",
        }
    }
}

impl std::fmt::Display for NavMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NavMode::Rgb => "rgb",
            NavMode::Rgbd => "rgbd",
            NavMode::Rgbds => "rgbds",
        })
    }
}

impl std::str::FromStr for NavMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rgb" | "rgb-c" => Ok(NavMode::Rgb),
            "rgbd" | "rgbd-c" => Ok(NavMode::Rgbd),
            "rgbds" => Ok(NavMode::Rgbds),
            other => Err(Error::Input(format!("unknown channel mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NavArch {
    pub mode: NavMode,
    /// Conv stage widths; every stage halves the spatial size.
    pub widths: Vec<usize>,
    /// Max-pool grid applied to the last feature map.
    pub pool_rows: usize,
    pub pool_cols: usize,
    pub input_side: usize,
    /// Class count used to scale the semantic plane.
    pub semantic_classes: usize,
}

pub const ACTIONS: usize = 3;

/// Every input plane lives in [0, 1]; the network sees it shifted to [−½, ½].
pub const INPUT_CENTER: f64 = 0.5;

impl NavArch {
    pub fn new(mode: NavMode, input_side: usize, semantic_classes: usize) -> Self {
        Self {
            mode,
            widths: vec![16, 32, 64, 64],
            pool_rows: 2,
            pool_cols: 2,
            input_side,
            semantic_classes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.widths.is_empty() || self.widths.contains(&0) {
            return Err(Error::Architecture("navnet needs non-zero stage widths".into()));
        }
        if self.semantic_classes < 2 {
            return Err(Error::Architecture("semantic_classes must be at least 2".into()));
        }
        let (h, w) = self.feature_dims();
        if self.pool_rows == 0 || self.pool_cols == 0 || self.pool_rows > h || self.pool_cols > w {
            return Err(Error::Architecture(format!(
                "pool grid {}x{} does not fit the {h}x{w} feature map",
                self.pool_rows, self.pool_cols
            )));
        }
        Ok(())
    }

    fn conv(&self, s: usize) -> ConvSpec {
        let cin = if s == 0 { self.mode.planes() } else { self.widths[s - 1] };
        ConvSpec::strided(cin, self.widths[s], 3, 2)
    }

    /// Spatial size of the last conv output.
    pub fn feature_dims(&self) -> (usize, usize) {
        let mut hw = (self.input_side, self.input_side);
        for s in 0..self.widths.len() {
            hw = self.conv(s).out_dims(hw.0, hw.1);
        }
        hw
    }

    fn fc_in(&self) -> usize {
        self.widths[self.widths.len() - 1] * self.pool_rows * self.pool_cols
    }

    /// Array order: per stage (w, b), then fc (w, b).
    pub fn init_params(&self, rng: &mut impl Rng) -> ModelParams {
        let mut arrays = Vec::new();
        for s in 0..self.widths.len() {
            let spec = self.conv(s);
            let shape = spec.weight_shape();
            arrays.push(ParamArray {
                name: format!("conv{s}.w"),
                shape: shape.to_vec(),
                data: he_init(shape.iter().product(), spec.fan_in(), rng),
            });
            arrays.push(ParamArray::zeros(format!("conv{s}.b"), &[spec.cout]));
        }
        let fin = self.fc_in();
        arrays.push(ParamArray {
            name: "fc.w".into(),
            shape: vec![ACTIONS, fin],
            data: he_init(ACTIONS * fin, fin, rng),
        });
        arrays.push(ParamArray::zeros("fc.b", &[ACTIONS]));
        ModelParams::new(arrays).expect("shapes match data")
    }

    pub fn check_layout(&self, params: &ModelParams) -> Result<()> {
        let arrays = params.arrays();
        let stages = self.widths.len();
        if arrays.len() != 2 * stages + 2 {
            return Err(Error::Architecture(format!(
                "navnet expects {} parameter arrays, got {}",
                2 * stages + 2,
                arrays.len()
            )));
        }
        let mut want: Vec<Vec<usize>> = Vec::new();
        for s in 0..stages {
            let spec = self.conv(s);
            want.push(spec.weight_shape().to_vec());
            want.push(vec![spec.cout]);
        }
        want.push(vec![ACTIONS, self.fc_in()]);
        want.push(vec![ACTIONS]);
        for (a, w) in arrays.iter().zip(&want) {
            if &a.shape != w {
                return Err(Error::Architecture(format!(
                    "parameter {} has shape {:?}, expected {w:?}",
                    a.name, a.shape
                )));
            }
        }
        Ok(())
    }
}

/// Builds the `planes × side × side` network input for one sample.
pub fn encode_sample(arch: &NavArch, frame: &RgbdFrame, semantic: Option<&SemanticMap>) -> Result<Vec<f64>> {
    let zero;
    let semantic = match semantic {
        Some(s) => s,
        None if arch.mode.needs_semantics() => {
            return Err(Error::Input("RGBDS mode needs a semantic map".into()))
        }
        None => {
            zero = SemanticMap::filled(frame.width(), frame.height(), 0, Provenance::Predicted);
            &zero
        }
    };
    let enc = encode_channels(frame, semantic, arch.semantic_classes, arch.input_side)?;
    Ok(enc.planes(arch.mode.planes()).iter().map(|&v| f64::from(v)).collect())
}

/// Stacks per-sample inputs (each `planes × side²`) into a batch tensor.
pub fn stack(arch: &NavArch, samples: &[&[f64]]) -> Result<Tensor> {
    let side = arch.input_side;
    let per = arch.mode.planes() * side * side;
    let mut data = Vec::with_capacity(samples.len() * per);
    for s in samples {
        if s.len() != per {
            return Err(Error::ChannelMismatch {
                expected: arch.mode.planes(),
                actual: s.len() / (side * side),
            });
        }
        data.extend_from_slice(s);
    }
    Ok(Tensor::from_vec(samples.len(), arch.mode.planes(), side, side, data))
}

pub struct NavForward {
    /// `n × 3` scores.
    pub logits: Vec<f64>,
    convs: Vec<(ConvCache, Tensor)>,
    pooled: Vec<f64>,
    pool_idx: Vec<usize>,
    feat_shape: (usize, usize, usize, usize),
    drop_mask: Option<Vec<f64>>,
}

pub fn nav_forward(
    arch: &NavArch,
    params: &ModelParams,
    input: &Tensor,
    dropout: Option<(f64, &mut dyn rand::RngCore)>,
) -> Result<NavForward> {
    arch.check_layout(params)?;
    if input.c != arch.mode.planes() {
        return Err(Error::ChannelMismatch {
            expected: arch.mode.planes(),
            actual: input.c,
        });
    }
    if input.h != arch.input_side || input.w != arch.input_side {
        return Err(Error::Input(format!(
            "input is {}x{}, model expects {}x{}",
            input.w, input.h, arch.input_side, arch.input_side
        )));
    }
    if !input.is_finite() {
        return Err(Error::NonFinite("navnet input"));
    }
    let mut x = input.clone();
    for v in &mut x.data {
        *v -= INPUT_CENTER;
    }
    let mut convs = Vec::with_capacity(arch.widths.len());
    for s in 0..arch.widths.len() {
        let (mut y, cache) = conv_forward(&x, &arch.conv(s), params.array(2 * s), params.array(2 * s + 1));
        relu(&mut y);
        convs.push((cache, y.clone()));
        x = y;
    }
    let feat_shape = (x.n, x.c, x.h, x.w);
    let (mut pooled, pool_idx) = grid_max_pool(&x, arch.pool_rows, arch.pool_cols);
    let drop_mask = match dropout {
        Some((p, rng)) if p > 0.0 => Some(crate::nn::dropout(&mut pooled, p, &mut DynRng(rng))),
        _ => None,
    };
    let k = 2 * arch.widths.len();
    let logits = linear_forward(&pooled.data, x.n, arch.fc_in(), ACTIONS, params.array(k), params.array(k + 1));
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("navnet activations"));
    }
    Ok(NavForward {
        logits,
        convs,
        pooled: pooled.data,
        pool_idx,
        feat_shape,
        drop_mask,
    })
}

pub(crate) struct DynRng<'a>(pub &'a mut dyn rand::RngCore);

impl rand::RngCore for DynRng<'_> {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}

pub fn nav_backward(arch: &NavArch, params: &ModelParams, input: &Tensor, fwd: &NavForward, dlogits: &[f64]) -> ModelParams {
    let mut grads = params.zeros_like();
    let n = input.n;
    let k = 2 * arch.widths.len();
    let mut dw = grads.array(k).to_vec();
    let mut db = grads.array(k + 1).to_vec();
    let dpooled = linear_backward(dlogits, &fwd.pooled, n, arch.fc_in(), ACTIONS, params.array(k), &mut dw, &mut db);
    grads.array_mut(k).copy_from_slice(&dw);
    grads.array_mut(k + 1).copy_from_slice(&db);
    let (_, c, _, _) = fwd.feat_shape;
    let mut dp = Tensor::from_vec(n, c, arch.pool_rows, arch.pool_cols, dpooled);
    if let Some(mask) = &fwd.drop_mask {
        apply_mask(&mut dp, mask);
    }
    let mut dx = pool_backward(&dp, &fwd.pool_idx, fwd.feat_shape);
    for s in (0..arch.widths.len()).rev() {
        let (cache, out) = &fwd.convs[s];
        relu_backward(&mut dx, out);
        let mut dw = grads.array(2 * s).to_vec();
        let mut db = grads.array(2 * s + 1).to_vec();
        let next = conv_backward(&dx, cache, &arch.conv(s), params.array(2 * s), &mut dw, &mut db, s > 0);
        grads.array_mut(2 * s).copy_from_slice(&dw);
        grads.array_mut(2 * s + 1).copy_from_slice(&db);
        if let Some(t) = next {
            dx = t;
        }
    }
    grads
}

/// `½‖C‖² + λ/m · Σ −log p(y_i|x_i)` with a 3-way softmax, and its gradient.
pub fn nav_loss(
    arch: &NavArch,
    params: &ModelParams,
    input: &Tensor,
    labels: &[ActionLabel],
    lambda: f64,
    dropout: Option<(f64, &mut dyn rand::RngCore)>,
) -> Result<(f64, ModelParams)> {
    let m = input.n;
    if m == 0 {
        return Err(Error::EmptyBatch);
    }
    if labels.len() != m {
        return Err(Error::Input(format!("{} labels for a batch of {m}", labels.len())));
    }
    let fwd = nav_forward(arch, params, input, dropout)?;
    let y: Vec<usize> = labels.iter().map(|l| l.ordinal()).collect();
    let (ce, mut dlog) = softmax_cross_entropy(&fwd.logits, m, ACTIONS, 1, &y);
    let loss = 0.5 * params.squared_norm() + lambda * ce / m as f64;
    if !loss.is_finite() {
        return Err(Error::NonFinite("navigation loss"));
    }
    let scale = lambda / m as f64;
    for g in &mut dlog {
        *g *= scale;
    }
    let mut grads = nav_backward(arch, params, input, &fwd, &dlog);
    grads.axpy(1.0, params);
    Ok((loss, grads))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstructionResult {
    pub action: ActionLabel,
    /// Indexed by action ordinal (TurnLeft, GoStraight, TurnRight).
    pub probabilities: [f64; 3],
}

impl InstructionResult {
    /// Argmax with ties resolved toward GoStraight, then TurnLeft.
    pub fn from_probabilities(probabilities: [f64; 3]) -> Self {
        let mut action = ActionLabel::GoStraight;
        for cand in [ActionLabel::TurnLeft, ActionLabel::TurnRight] {
            if probabilities[cand.ordinal()] > probabilities[action.ordinal()] {
                action = cand;
            }
        }
        Self { action, probabilities }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NavModel {
    pub arch: NavArch,
    pub params: ModelParams,
    pub metadata: serde_json::Value,
}

/// Softmax probabilities for every sample of a batch.
pub fn nav_probabilities(model: &NavModel, input: &Tensor) -> Result<Vec<[f64; 3]>> {
    let fwd = nav_forward(&model.arch, &model.params, input, None)?;
    Ok(fwd
        .logits
        .chunks(ACTIONS)
        .map(|row| {
            let p = softmax(row);
            [p[0], p[1], p[2]]
        })
        .collect())
}

pub fn predict_instruction(model: &NavModel, frame: &RgbdFrame, semantic: Option<&SemanticMap>) -> Result<InstructionResult> {
    let x = encode_sample(&model.arch, frame, semantic)?;
    let input = stack(&model.arch, &[&x])?;
    let p = nav_probabilities(model, &input)?[0];
    Ok(InstructionResult::from_probabilities(p))
}
