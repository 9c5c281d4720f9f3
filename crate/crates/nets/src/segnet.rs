//! Two-branch (RGB + depth) encoder-decoder with additive fusion.
//!
//! Encoder stage `s`: `conv3×3 + ReLU` on each branch, the depth activation is
//! added into the RGB activation, then both branches are 2×2 max-pooled.
//! Dropout follows the deepest stage. The decoder mirrors the encoder with
//! nearest ×2 upsampling followed by `conv3×3 + ReLU`, and a 1×1 convolution
//! produces the K class scores.

use rand::Rng;
use serde::{Deserialize, Serialize};
use sightwalk_core::{
    encode_depth, resize_frame_nearest, resize_labels_nearest, ClassTable, ModelParams, ParamArray,
    Provenance, RgbdFrame, SemanticMap,
};

use crate::init::he_init;
use crate::nn::*;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegArch {
    /// Encoder widths, one per down stage; the decoder runs them in reverse.
    pub widths: Vec<usize>,
    pub classes: usize,
}

impl SegArch {
    pub fn new(widths: Vec<usize>, classes: usize) -> Result<Self> {
        let a = Self { widths, classes };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<()> {
        if self.widths.is_empty() || self.widths.contains(&0) {
            return Err(Error::Architecture("segnet needs at least one non-zero stage width".into()));
        }
        if self.classes < 2 {
            return Err(Error::Architecture("segnet needs at least 2 classes".into()));
        }
        Ok(())
    }

    pub fn stages(&self) -> usize {
        self.widths.len()
    }

    /// Spatial multiple the network input must have.
    pub fn granularity(&self) -> usize {
        1 << self.stages()
    }

    fn enc_rgb(&self, s: usize) -> ConvSpec {
        let cin = if s == 0 { 3 } else { self.widths[s - 1] };
        ConvSpec::same(cin, self.widths[s], 3)
    }

    fn enc_depth(&self, s: usize) -> ConvSpec {
        let cin = if s == 0 { 1 } else { self.widths[s - 1] };
        ConvSpec::same(cin, self.widths[s], 3)
    }

    /// Decoder stage `u` runs from the deepest width back to `widths[0]`.
    fn dec(&self, u: usize) -> ConvSpec {
        let n = self.stages();
        let cin = self.widths[n - 1 - u];
        let cout = self.widths[(n - 1 - u).saturating_sub(1)];
        ConvSpec::same(cin, cout, 3)
    }

    fn head(&self) -> ConvSpec {
        ConvSpec::same(self.widths[0], self.classes, 1)
    }

    /// Array order: per encoder stage (rgb w, rgb b, depth w, depth b), per
    /// decoder stage (w, b), head (w, b).
    pub fn init_params(&self, rng: &mut impl Rng) -> ModelParams {
        let mut arrays = Vec::new();
        let mut push = |name: String, spec: ConvSpec, rng: &mut dyn rand::RngCore| {
            let shape = spec.weight_shape();
            arrays.push(ParamArray {
                name: format!("{name}.w"),
                shape: shape.to_vec(),
                data: he_init(shape.iter().product(), spec.fan_in(), rng),
            });
            arrays.push(ParamArray::zeros(format!("{name}.b"), &[spec.cout]));
        };
        for s in 0..self.stages() {
            push(format!("enc{s}.rgb"), self.enc_rgb(s), rng);
            push(format!("enc{s}.depth"), self.enc_depth(s), rng);
        }
        for u in 0..self.stages() {
            push(format!("dec{u}"), self.dec(u), rng);
        }
        push("head".into(), self.head(), rng);
        ModelParams::new(arrays).expect("shapes match data")
    }

    pub fn check_layout(&self, params: &ModelParams) -> Result<()> {
        let want = 4 * self.stages() + 2 * self.stages() + 2;
        let arrays = params.arrays();
        if arrays.len() != want {
            return Err(Error::Architecture(format!(
                "segnet expects {want} parameter arrays, got {}",
                arrays.len()
            )));
        }
        let mut i = 0;
        let mut check = |spec: ConvSpec| -> Result<()> {
            if arrays[i].shape != spec.weight_shape() || arrays[i + 1].shape != [spec.cout] {
                return Err(Error::Architecture(format!(
                    "parameter {} has shape {:?}, expected {:?}",
                    arrays[i].name,
                    arrays[i].shape,
                    spec.weight_shape()
                )));
            }
            i += 2;
            Ok(())
        };
        for s in 0..self.stages() {
            check(self.enc_rgb(s))?;
            check(self.enc_depth(s))?;
        }
        for u in 0..self.stages() {
            check(self.dec(u))?;
        }
        check(self.head())
    }
}

/// Network input at the resolution the network runs on.
#[derive(Debug, Clone, PartialEq)]
pub struct SegInput {
    pub rgb: Tensor,
    pub depth: Tensor,
}

impl SegInput {
    /// Stacks frames (all the same size) into a batch: rgb/255 and encoded depth.
    pub fn from_frames(frames: &[&RgbdFrame]) -> Result<Self> {
        let first = frames.first().ok_or(Error::EmptyBatch)?;
        let (h, w) = (first.height(), first.width());
        let n = frames.len();
        let mut rgb = Tensor::zeros(n, 3, h, w);
        let mut depth = Tensor::zeros(n, 1, h, w);
        let p = h * w;
        for (b, f) in frames.iter().enumerate() {
            if (f.height(), f.width()) != (h, w) {
                return Err(Error::Input("frames in a batch must share dimensions".into()));
            }
            if f.depth().iter().any(|d| !d.is_finite()) {
                return Err(Error::Input("non-finite depth".into()));
            }
            for i in 0..p {
                for k in 0..3 {
                    rgb.data[(b * 3 + k) * p + i] = f64::from(f.rgb()[i * 3 + k]) / 255.0;
                }
                depth.data[b * p + i] = f64::from(encode_depth(f.depth()[i]));
            }
        }
        Ok(Self { rgb, depth })
    }

    pub fn batch(&self) -> usize {
        self.rgb.n
    }

    fn padded(&self, g: usize) -> SegInput {
        let (h, w) = (self.rgb.h.div_ceil(g) * g, self.rgb.w.div_ceil(g) * g);
        if (h, w) == (self.rgb.h, self.rgb.w) {
            return self.clone();
        }
        let pad = |t: &Tensor| {
            let mut out = Tensor::zeros(t.n, t.c, h, w);
            for plane in 0..t.n * t.c {
                for r in 0..t.h {
                    let src = &t.data[plane * t.plane() + r * t.w..plane * t.plane() + (r + 1) * t.w];
                    out.data[plane * h * w + r * w..plane * h * w + r * w + t.w].copy_from_slice(src);
                }
            }
            out
        };
        SegInput {
            rgb: pad(&self.rgb),
            depth: pad(&self.depth),
        }
    }
}

struct EncCache {
    rgb_conv: ConvCache,
    depth_conv: ConvCache,
    rgb_act: Tensor,
    depth_act: Tensor,
    fused_shape: (usize, usize, usize, usize),
    rgb_pool: Vec<usize>,
    depth_pool: Option<Vec<usize>>,
}

struct DecCache {
    conv: ConvCache,
    act: Tensor,
}

pub struct SegForward {
    /// Class scores `n × K × h × w` at the (unpadded) input resolution.
    pub logits: Tensor,
    enc: Vec<EncCache>,
    drop_mask: Option<Vec<f64>>,
    drop_shape: (usize, usize, usize, usize),
    dec: Vec<DecCache>,
    head: ConvCache,
    padded_hw: (usize, usize),
}

fn shape(t: &Tensor) -> (usize, usize, usize, usize) {
    (t.n, t.c, t.h, t.w)
}

fn add_into(dst: &mut Tensor, src: &Tensor) {
    for (a, b) in dst.data.iter_mut().zip(&src.data) {
        *a += b;
    }
}

fn crop(t: &Tensor, h: usize, w: usize) -> Tensor {
    if (t.h, t.w) == (h, w) {
        return t.clone();
    }
    let mut out = Tensor::zeros(t.n, t.c, h, w);
    for plane in 0..t.n * t.c {
        for r in 0..h {
            let src = &t.data[plane * t.plane() + r * t.w..plane * t.plane() + r * t.w + w];
            out.data[plane * h * w + r * w..plane * h * w + (r + 1) * w].copy_from_slice(src);
        }
    }
    out
}

fn uncrop(t: &Tensor, h: usize, w: usize) -> Tensor {
    let mut out = Tensor::zeros(t.n, t.c, h, w);
    for plane in 0..t.n * t.c {
        for r in 0..t.h {
            let src = &t.data[plane * t.plane() + r * t.w..plane * t.plane() + (r + 1) * t.w];
            out.data[plane * h * w + r * w..plane * h * w + r * w + t.w].copy_from_slice(src);
        }
    }
    out
}

/// Forward pass. `dropout` is `Some((p, rng))` while training.
pub fn seg_forward(
    arch: &SegArch,
    params: &ModelParams,
    input: &SegInput,
    dropout: Option<(f64, &mut dyn rand::RngCore)>,
) -> Result<SegForward> {
    arch.check_layout(params)?;
    let (h0, w0) = (input.rgb.h, input.rgb.w);
    let x = input.padded(arch.granularity());
    let padded_hw = (x.rgb.h, x.rgb.w);
    let mut r = x.rgb;
    let mut d = x.depth;
    let mut enc = Vec::with_capacity(arch.stages());
    let mut pi = 0;
    for s in 0..arch.stages() {
        let (mut ra, rc) = conv_forward(&r, &arch.enc_rgb(s), params.array(pi), params.array(pi + 1));
        let (mut da, dc) = conv_forward(&d, &arch.enc_depth(s), params.array(pi + 2), params.array(pi + 3));
        pi += 4;
        relu(&mut ra);
        relu(&mut da);
        let mut fused = ra.clone();
        add_into(&mut fused, &da);
        let (rp, ridx) = max_pool2(&fused);
        let last = s + 1 == arch.stages();
        let dpool = if last {
            None
        } else {
            let (dp, didx) = max_pool2(&da);
            d = dp;
            Some(didx)
        };
        enc.push(EncCache {
            rgb_conv: rc,
            depth_conv: dc,
            fused_shape: shape(&fused),
            rgb_act: ra,
            depth_act: da,
            rgb_pool: ridx,
            depth_pool: dpool,
        });
        r = rp;
    }
    let drop_shape = shape(&r);
    let drop_mask = match dropout {
        Some((p, rng)) if p > 0.0 => Some(crate::nn::dropout(&mut r, p, &mut RngRef(rng))),
        _ => None,
    };
    let mut x = r;
    let mut dec = Vec::with_capacity(arch.stages());
    for u in 0..arch.stages() {
        let up = upsample2(&x);
        let (mut a, c) = conv_forward(&up, &arch.dec(u), params.array(pi), params.array(pi + 1));
        pi += 2;
        relu(&mut a);
        dec.push(DecCache {
            conv: c,
            act: a.clone(),
        });
        x = a;
    }
    let (logits, head) = conv_forward(&x, &arch.head(), params.array(pi), params.array(pi + 1));
    if !logits.is_finite() {
        return Err(Error::NonFinite("segnet activations"));
    }
    Ok(SegForward {
        logits: crop(&logits, h0, w0),
        enc,
        drop_mask,
        drop_shape,
        dec,
        head,
        padded_hw,
    })
}

/// Adapts a `dyn RngCore` to the generic `Rng` helpers.
struct RngRef<'a>(&'a mut dyn rand::RngCore);

impl rand::RngCore for RngRef<'_> {
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

/// Backpropagates `dlogits` (same shape as `fwd.logits`) into parameter gradients.
pub fn seg_backward(arch: &SegArch, params: &ModelParams, fwd: &SegForward, dlogits: &Tensor) -> ModelParams {
    let mut grads = params.zeros_like();
    let (ph, pw) = fwd.padded_hw;
    let dl = uncrop(dlogits, ph, pw);
    let mut pi = 4 * arch.stages() + 2 * arch.stages();
    let (mut dw, mut db) = take2(&mut grads, pi);
    let mut dx = conv_backward(&dl, &fwd.head, &arch.head(), params.array(pi), &mut dw, &mut db, true).unwrap();
    put2(&mut grads, pi, dw, db);
    for u in (0..arch.stages()).rev() {
        pi -= 2;
        relu_backward(&mut dx, &fwd.dec[u].act);
        let (mut dw, mut db) = take2(&mut grads, pi);
        let dup = conv_backward(&dx, &fwd.dec[u].conv, &arch.dec(u), params.array(pi), &mut dw, &mut db, true)
            .unwrap();
        put2(&mut grads, pi, dw, db);
        dx = upsample2_backward(&dup);
    }
    if let Some(mask) = &fwd.drop_mask {
        apply_mask(&mut dx, mask);
    }
    debug_assert_eq!(shape(&dx), fwd.drop_shape);
    let mut d_r = dx;
    let mut d_d: Option<Tensor> = None;
    for s in (0..arch.stages()).rev() {
        pi -= 4;
        let e = &fwd.enc[s];
        let d_fused = pool_backward(&d_r, &e.rgb_pool, e.fused_shape);
        let mut d_ra = d_fused.clone();
        let mut d_da = d_fused;
        if let (Some(idx), Some(dd)) = (&e.depth_pool, &d_d) {
            add_into(&mut d_da, &pool_backward(dd, idx, shape(&e.depth_act)));
        }
        relu_backward(&mut d_ra, &e.rgb_act);
        relu_backward(&mut d_da, &e.depth_act);
        let need = s > 0;
        let (mut dw, mut db) = take2(&mut grads, pi);
        let dr_in = conv_backward(&d_ra, &e.rgb_conv, &arch.enc_rgb(s), params.array(pi), &mut dw, &mut db, need);
        put2(&mut grads, pi, dw, db);
        let (mut dw, mut db) = take2(&mut grads, pi + 2);
        let dd_in = conv_backward(
            &d_da,
            &e.depth_conv,
            &arch.enc_depth(s),
            params.array(pi + 2),
            &mut dw,
            &mut db,
            need,
        );
        put2(&mut grads, pi + 2, dw, db);
        if let (Some(a), Some(b)) = (dr_in, dd_in) {
            d_r = a;
            d_d = Some(b);
        }
    }
    grads
}

fn take2(g: &mut ModelParams, i: usize) -> (Vec<f64>, Vec<f64>) {
    (g.array(i).to_vec(), g.array(i + 1).to_vec())
}

fn put2(g: &mut ModelParams, i: usize, w: Vec<f64>, b: Vec<f64>) {
    g.array_mut(i).copy_from_slice(&w);
    g.array_mut(i + 1).copy_from_slice(&b);
}

/// A batch for the segmentation loss: inputs plus one label per pixel.
pub struct SegBatch {
    pub input: SegInput,
    /// `n × h × w` class indices.
    pub labels: Vec<usize>,
}

impl SegBatch {
    pub fn new(input: SegInput, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != input.rgb.n * input.rgb.plane() {
            return Err(Error::Input("label count does not match the batch".into()));
        }
        Ok(Self { input, labels })
    }
}

/// `½‖C‖² + λ/(m·h·w) · Σ −log p(y|x)` and its gradient.
pub fn seg_loss(
    arch: &SegArch,
    params: &ModelParams,
    batch: &SegBatch,
    lambda: f64,
    dropout: Option<(f64, &mut dyn rand::RngCore)>,
) -> Result<(f64, ModelParams)> {
    let (loss, _, grads) = seg_loss_parts(arch, params, batch, lambda, dropout)?;
    Ok((loss, grads))
}

/// Like [`seg_loss`] but also returns the mean cross-entropy on its own.
pub fn seg_loss_parts(
    arch: &SegArch,
    params: &ModelParams,
    batch: &SegBatch,
    lambda: f64,
    dropout: Option<(f64, &mut dyn rand::RngCore)>,
) -> Result<(f64, f64, ModelParams)> {
    let n = batch.input.batch();
    if n == 0 {
        return Err(Error::EmptyBatch);
    }
    if let Some(&bad) = batch.labels.iter().find(|&&y| y >= arch.classes) {
        return Err(Error::LabelOutOfRange {
            label: bad,
            classes: arch.classes,
        });
    }
    let fwd = seg_forward(arch, params, &batch.input, dropout)?;
    let p = fwd.logits.plane();
    let (ce_sum, mut dlog) = softmax_cross_entropy(&fwd.logits.data, n, arch.classes, p, &batch.labels);
    let scale = lambda / (n * p) as f64;
    let ce_mean = ce_sum / (n * p) as f64;
    let loss = 0.5 * params.squared_norm() + lambda * ce_mean;
    if !loss.is_finite() {
        return Err(Error::NonFinite("segmentation loss"));
    }
    for g in &mut dlog {
        *g *= scale;
    }
    let dlogits = Tensor::from_vec(n, arch.classes, fwd.logits.h, fwd.logits.w, dlog);
    let mut grads = seg_backward(arch, params, &fwd, &dlogits);
    grads.axpy(1.0, params);
    Ok((loss, ce_mean, grads))
}

/// Trained segmentation network with its class table.
#[derive(Debug, Clone, PartialEq)]
pub struct SegModel {
    pub arch: SegArch,
    pub params: ModelParams,
    pub classes: ClassTable,
    pub metadata: serde_json::Value,
}

/// Half-resolution dimensions used for inference on a `w × h` frame.
pub fn half_dims(w: usize, h: usize) -> (usize, usize) {
    (w.div_ceil(2), h.div_ceil(2))
}

/// Per-pixel class probabilities at the network resolution, `n × K × h × w`.
pub fn seg_probabilities(model: &SegModel, input: &SegInput) -> Result<Tensor> {
    let fwd = seg_forward(&model.arch, &model.params, input, None)?;
    let mut probs = fwd.logits.clone();
    let (k, p) = (probs.c, probs.plane());
    let mut scores = vec![0.0; k];
    for b in 0..probs.n {
        for j in 0..p {
            for (c, s) in scores.iter_mut().enumerate() {
                *s = probs.data[(b * k + c) * p + j];
            }
            for (c, v) in softmax(&scores).into_iter().enumerate() {
                probs.data[(b * k + c) * p + j] = v;
            }
        }
    }
    Ok(probs)
}

/// Label grid with a single value per pixel: lowest class index among maxima.
pub fn argmax_labels(scores: &Tensor, b: usize) -> Vec<u8> {
    let (k, p) = (scores.c, scores.plane());
    (0..p)
        .map(|j| {
            let mut best = 0;
            for c in 1..k {
                if scores.data[(b * k + c) * p + j] > scores.data[(b * k + best) * p + j] {
                    best = c;
                }
            }
            best as u8
        })
        .collect()
}

/// Nearest-neighbour upsample of a low-resolution label grid to `w × h`:
/// output `(i, j)` takes low-res `(⌊i/2⌋, ⌊j/2⌋)`.
pub fn upsample_labels(low: &[u8], lw: usize, lh: usize, w: usize, h: usize) -> Result<Vec<u8>> {
    if low.len() != lw * lh || lw != w.div_ceil(2) || lh != h.div_ceil(2) {
        return Err(Error::Input(format!(
            "cannot upsample {lw}x{lh} labels to {w}x{h}"
        )));
    }
    let mut out = vec![0u8; w * h];
    for i in 0..h {
        for j in 0..w {
            out[i * w + j] = low[(i / 2) * lw + j / 2];
        }
    }
    Ok(out)
}

/// Segments a frame: nearest downsample to half resolution, forward pass,
/// per-pixel argmax, nearest upsample back to the frame size.
pub fn segment(model: &SegModel, frame: &RgbdFrame) -> Result<SemanticMap> {
    let (w, h) = (frame.width(), frame.height());
    if w < 2 || h < 2 {
        return Err(Error::Input(format!("frame {w}x{h} is below the 2x2 minimum")));
    }
    if frame.depth().iter().any(|d| !d.is_finite()) {
        return Err(Error::NonFinite("frame depth"));
    }
    let (lw, lh) = half_dims(w, h);
    let low = resize_frame_nearest(frame, lw, lh)?;
    let input = SegInput::from_frames(&[&low])?;
    let fwd = seg_forward(&model.arch, &model.params, &input, None)?;
    let labels = argmax_labels(&fwd.logits, 0);
    let full = upsample_labels(&labels, lw, lh, w, h)?;
    Ok(SemanticMap::new(w, h, full, Provenance::Predicted)?)
}

/// Half-resolution training pair for one sample.
pub fn training_pair(frame: &RgbdFrame, labels: &SemanticMap) -> Result<(RgbdFrame, Vec<usize>)> {
    let (lw, lh) = half_dims(frame.width(), frame.height());
    let low = resize_frame_nearest(frame, lw, lh)?;
    let low_labels = resize_labels_nearest(labels, lw, lh)?;
    Ok((low, low_labels.labels().iter().map(|&l| l as usize).collect()))
}
