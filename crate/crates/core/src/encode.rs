//! Five-plane network input: R, G, B, depth, semantic index.

use crate::{Error, Result, RgbdFrame, SemanticMap};

/// Depth clamp used by the depth plane.
pub const DEPTH_MAX_M: f32 = 10.0;

/// Number of planes produced by [`encode_channels`].
pub const PLANES: usize = 5;

/// A `side × side × 5` input stored plane-major (plane, row, col).
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedInput {
    side: usize,
    data: Vec<f32>,
}

impl EncodedInput {
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    /// The first `n` planes, contiguous.
    pub fn planes(&self, n: usize) -> &[f32] {
        assert!(n <= PLANES);
        &self.data[..n * self.side * self.side]
    }

    pub fn plane(&self, p: usize) -> &[f32] {
        let s = self.side * self.side;
        &self.data[p * s..(p + 1) * s]
    }

    pub fn at(&self, plane: usize, row: usize, col: usize) -> f32 {
        self.data[(plane * self.side + row) * self.side + col]
    }
}

/// Maps a metric depth onto the depth plane: missing → 0, valid → [0.1, 1].
pub fn encode_depth(d: f32) -> f32 {
    if d == 0.0 {
        0.0
    } else {
        let d = f64::from(d.min(DEPTH_MAX_M));
        (0.1 + 0.9 * d / f64::from(DEPTH_MAX_M)) as f32
    }
}

/// Source index for destination index `dst` under nearest-neighbour resampling
/// of a `src_len` axis onto `dst_len` samples (pixel-centre aligned).
pub fn nearest_index(dst: usize, dst_len: usize, src_len: usize) -> usize {
    ((2 * dst + 1) * src_len) / (2 * dst_len)
}

/// Builds the 5-plane input at `side × side`, resampling by nearest neighbour.
pub fn encode_channels(
    frame: &RgbdFrame,
    semantic: &SemanticMap,
    classes: usize,
    side: usize,
) -> Result<EncodedInput> {
    if !semantic.matches(frame) {
        return Err(Error::DimensionMismatch(format!(
            "frame is {}x{}, semantic map is {}x{}",
            frame.width(),
            frame.height(),
            semantic.width(),
            semantic.height()
        )));
    }
    if classes < 2 {
        return Err(Error::Invalid(format!("need at least 2 classes, got {classes}")));
    }
    if side == 0 {
        return Err(Error::Invalid("side must be positive".into()));
    }
    semantic.validate(classes)?;
    if frame.depth().iter().any(|d| !d.is_finite()) {
        return Err(Error::NonFinite("depth"));
    }

    let plane = side * side;
    let mut data = vec![0.0f32; PLANES * plane];
    let rows: Vec<usize> = (0..side)
        .map(|r| nearest_index(r, side, frame.height()))
        .collect();
    let cols: Vec<usize> = (0..side)
        .map(|c| nearest_index(c, side, frame.width()))
        .collect();
    let sem_scale = 1.0 / (classes - 1) as f64;
    for (r, &sr) in rows.iter().enumerate() {
        for (c, &sc) in cols.iter().enumerate() {
            let i = r * side + c;
            let rgb = frame.rgb_at(sr, sc);
            for k in 0..3 {
                data[k * plane + i] = f32::from(rgb[k]) / 255.0;
            }
            data[3 * plane + i] = encode_depth(frame.depth_at(sr, sc));
            data[4 * plane + i] = (f64::from(semantic.at(sr, sc)) * sem_scale) as f32;
        }
    }
    Ok(EncodedInput { side, data })
}

/// Nearest-neighbour resize of a frame and its label map to `width × height`.
pub fn resize_nearest(
    frame: &RgbdFrame,
    semantic: &SemanticMap,
    width: usize,
    height: usize,
) -> Result<(RgbdFrame, SemanticMap)> {
    if !semantic.matches(frame) {
        return Err(Error::DimensionMismatch(
            "frame and semantic map differ in size".into(),
        ));
    }
    let frame2 = resize_frame_nearest(frame, width, height)?;
    let sem2 = resize_labels_nearest(semantic, width, height)?;
    Ok((frame2, sem2))
}

/// Nearest-neighbour resize of a frame alone.
pub fn resize_frame_nearest(frame: &RgbdFrame, width: usize, height: usize) -> Result<RgbdFrame> {
    let mut rgb = Vec::with_capacity(width * height * 3);
    let mut depth = Vec::with_capacity(width * height);
    for r in 0..height {
        let sr = nearest_index(r, height, frame.height());
        for c in 0..width {
            let sc = nearest_index(c, width, frame.width());
            rgb.extend_from_slice(&frame.rgb_at(sr, sc));
            depth.push(frame.depth_at(sr, sc));
        }
    }
    RgbdFrame::new(frame.frame_id(), width, height, rgb, depth)
}

/// Nearest-neighbour resize of a label map alone.
pub fn resize_labels_nearest(map: &SemanticMap, width: usize, height: usize) -> Result<SemanticMap> {
    let mut labels = Vec::with_capacity(width * height);
    for r in 0..height {
        let sr = nearest_index(r, height, map.height());
        for c in 0..width {
            labels.push(map.at(sr, nearest_index(c, width, map.width())));
        }
    }
    SemanticMap::new(width, height, labels, map.provenance())
}

/// Square nearest-neighbour resample, the same sampling [`encode_channels`] uses.
pub fn resample_nearest(
    frame: &RgbdFrame,
    semantic: &SemanticMap,
    side: usize,
) -> Result<(RgbdFrame, SemanticMap)> {
    resize_nearest(frame, semantic, side, side)
}
