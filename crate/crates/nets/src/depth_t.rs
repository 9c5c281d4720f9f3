//! Depth-T: the traditional block heuristic. Walk toward the most distant
//! column of depth blocks.
//!
//! The grid is cut into 3 columns × 4 row bands; the top band is skipped
//! (sky or ceiling). Each column's score is the mean of its valid (non-zero)
//! depths over the lower three bands. Pixel `(r, c)` belongs to the band
//! and column containing its centre.

use sightwalk_core::{column_third, ActionLabel, Third};

use crate::navnet::InstructionResult;
use crate::{Error, Result};

pub const ROW_BANDS: usize = 4;

/// Band index of row `r` in a grid of height `h`.
pub fn row_band(r: usize, h: usize) -> usize {
    (ROW_BANDS * r + ROW_BANDS / 2) / h
}

/// Per-column mean valid depth (left, centre, right); `None` for columns
/// without valid pixels.
pub fn column_means(depth: &[f32], width: usize, height: usize) -> Result<[Option<f64>; 3]> {
    if width == 0 || height == 0 || depth.len() != width * height {
        return Err(Error::Input(format!(
            "depth grid has {} values, expected {width}x{height}",
            depth.len()
        )));
    }
    let mut sum = [0.0f64; 3];
    let mut count = [0usize; 3];
    for r in 0..height {
        if row_band(r, height) == 0 {
            continue;
        }
        for c in 0..width {
            let d = depth[r * width + c];
            if !d.is_finite() {
                return Err(Error::NonFinite("depth grid"));
            }
            if d > 0.0 {
                let k = third_index(column_third(c, width));
                sum[k] += f64::from(d);
                count[k] += 1;
            }
        }
    }
    Ok([0, 1, 2].map(|k| (count[k] > 0).then(|| sum[k] / count[k] as f64)))
}

fn third_index(t: Third) -> usize {
    match t {
        Third::Left => 0,
        Third::Center => 1,
        Third::Right => 2,
    }
}

/// Instruction toward the most distant column; probabilities are the column
/// means normalised to sum to one (columns without valid depth count as 0).
pub fn depth_t_instruction(depth: &[f32], width: usize, height: usize) -> Result<InstructionResult> {
    let means = column_means(depth, width, height)?;
    if means.iter().all(Option::is_none) {
        return Err(Error::NoValidDepth);
    }
    let m = means.map(|v| v.unwrap_or(0.0));
    let total: f64 = m.iter().sum();
    // Column order matches action ordinals: left, straight, right.
    let probabilities = [
        m[ActionLabel::TurnLeft.ordinal()] / total,
        m[ActionLabel::GoStraight.ordinal()] / total,
        m[ActionLabel::TurnRight.ordinal()] / total,
    ];
    Ok(InstructionResult::from_probabilities(probabilities))
}
