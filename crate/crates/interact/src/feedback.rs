//! What reaches the earphone: turn instructions only, and class names at a
//! volume that grows as the object gets nearer.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sightwalk_core::ActionLabel;
use sightwalk_nets::InstructionResult;

use crate::{Error, Result};

/// Quietest volume; used at or beyond the far clip and for missing depth.
pub const V_MIN: f64 = 0.1;

/// Volume in [0, 1] held as thousandths, the precision carried on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Volume(u16);

impl Volume {
    pub const MAX: Volume = Volume(1000);

    pub fn from_thousandths(t: u16) -> Result<Self> {
        if t > 1000 {
            return Err(Error::Input(format!("volume {t}/1000 exceeds 1")));
        }
        Ok(Self(t))
    }

    /// Rounds to the nearest thousandth.
    pub fn from_f64(v: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Input(format!("volume {v} outside [0, 1]")));
        }
        Ok(Self((v * 1000.0).round() as u16))
    }

    pub fn thousandths(self) -> u16 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.0) / 1000.0
    }
}

impl fmt::Display for Volume {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3}", self.as_f64())
    }
}

impl Serialize for Volume {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.as_f64())
    }
}

impl<'de> Deserialize<'de> for Volume {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        Volume::from_f64(v).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Utterance {
    pub text: String,
    pub volume: Volume,
}

/// Only turns are spoken; going straight is the silent default.
pub fn instruction_to_feedback(result: &InstructionResult) -> Option<Utterance> {
    let text = match result.action {
        ActionLabel::TurnLeft => "turn left",
        ActionLabel::TurnRight => "turn right",
        ActionLabel::GoStraight => return None,
    };
    Some(Utterance {
        text: text.into(),
        volume: Volume::MAX,
    })
}

/// Linear, decreasing in distance: 1 at `near`, [`V_MIN`] from `far` on.
/// Missing depth (`None`) also maps to [`V_MIN`].
pub fn volume_for_distance(d: Option<f64>, near: f64, far: f64) -> Result<f64> {
    if !(near < far) || !near.is_finite() || !far.is_finite() {
        return Err(Error::Input(format!("near {near} must be below far {far}")));
    }
    let Some(d) = d else { return Ok(V_MIN) };
    if !(d >= 0.0) {
        return Err(Error::Input(format!("distance {d} must be non-negative")));
    }
    Ok(((far - d) / (far - near)).clamp(V_MIN, 1.0))
}
