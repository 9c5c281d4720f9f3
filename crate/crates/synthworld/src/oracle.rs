//! The pilot rule that labels frames with walk actions.

use serde::{Deserialize, Serialize};
use sightwalk_core::{column_third, ActionLabel, Third};

use crate::geometry::Pose;
use crate::plan::ScenePlan;
use crate::render::{render_full, RenderOutput};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    /// Horizontal range within which a non-floor surface is a threat.
    pub lookahead_m: f64,
    /// Minimum threat fraction that triggers a turn.
    pub tau: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            lookahead_m: 2.0,
            tau: 0.02,
        }
    }
}

/// Fractions of below-horizon pixels per image third that are nearby obstacles.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Occupancy {
    pub left: f64,
    pub center: f64,
    pub right: f64,
}

impl Occupancy {
    pub fn threat_left(&self) -> f64 {
        self.left + self.center
    }

    pub fn threat_right(&self) -> f64 {
        self.right + self.center
    }
}

pub fn occupancy(out: &RenderOutput, floor_class: u8, cfg: &OracleConfig) -> Occupancy {
    let (w, h) = (out.frame.width(), out.frame.height());
    let mut hits = [0usize; 3];
    let mut totals = [0usize; 3];
    let labels = out.semantic.labels();
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            if !out.below_horizon[i] {
                continue;
            }
            let k = match column_third(c, w) {
                Third::Left => 0,
                Third::Center => 1,
                Third::Right => 2,
            };
            totals[k] += 1;
            if labels[i] != floor_class && out.ground_range[i] <= cfg.lookahead_m {
                hits[k] += 1;
            }
        }
    }
    let frac = |k: usize| {
        if totals[k] == 0 {
            0.0
        } else {
            hits[k] as f64 / totals[k] as f64
        }
    };
    Occupancy {
        left: frac(0),
        center: frac(1),
        right: frac(2),
    }
}

/// Threat rule: go straight when neither side is threatened, otherwise turn
/// away from the more threatened side; ties turn left.
pub fn decide(occ: &Occupancy, tau: f64) -> ActionLabel {
    let (tl, tr) = (occ.threat_left(), occ.threat_right());
    if tl < tau && tr < tau {
        ActionLabel::GoStraight
    } else if tr >= tl {
        ActionLabel::TurnLeft
    } else {
        ActionLabel::TurnRight
    }
}

pub fn label_render(out: &RenderOutput, plan: &ScenePlan, cfg: &OracleConfig) -> ActionLabel {
    decide(&occupancy(out, plan.surfaces.floor, cfg), cfg.tau)
}

pub fn pilot_oracle(plan: &ScenePlan, pose: Pose) -> Result<ActionLabel> {
    pilot_oracle_with(plan, pose, &OracleConfig::default())
}

pub fn pilot_oracle_with(plan: &ScenePlan, pose: Pose, cfg: &OracleConfig) -> Result<ActionLabel> {
    let out = render_full(plan, pose)?;
    Ok(label_render(&out, plan, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decision_table() {
        let occ = |left, center, right| Occupancy {
            left,
            center,
            right,
        };
        assert_eq!(decide(&occ(0.0, 0.0, 0.0), 0.02), ActionLabel::GoStraight);
        assert_eq!(decide(&occ(0.01, 0.0, 0.019), 0.02), ActionLabel::GoStraight);
        assert_eq!(decide(&occ(0.0, 0.0, 0.3), 0.02), ActionLabel::TurnLeft);
        assert_eq!(decide(&occ(0.3, 0.0, 0.0), 0.02), ActionLabel::TurnRight);
        assert_eq!(decide(&occ(0.0, 0.5, 0.0), 0.02), ActionLabel::TurnLeft);
        assert_eq!(decide(&occ(0.1, 0.2, 0.1), 0.02), ActionLabel::TurnLeft);
    }
}
