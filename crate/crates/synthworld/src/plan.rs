//! Scene description consumed by the renderer, the oracle and the simulator.

use serde::{Deserialize, Serialize};
use sightwalk_core::Bucket;

use crate::geometry::{Pose, Vec2};
use crate::{Error, Result};

pub const MIN_CAMERA_HEIGHT: f64 = 1.4;
pub const MAX_CAMERA_HEIGHT: f64 = 1.8;
pub const MAX_LOW_HEIGHT: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObstacleKind {
    Normal,
    Low,
    Glass,
    Moving,
}

/// Back-and-forth motion along `direction` between offsets 0 and `span` metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Motion {
    pub direction: Vec2,
    pub span: f64,
    /// Distance travelled so far along the triangle-wave path.
    pub phase: f64,
}

impl Motion {
    pub fn offset(&self) -> Vec2 {
        if self.span <= 0.0 {
            return Vec2::default();
        }
        let period = 2.0 * self.span;
        let p = self.phase.rem_euclid(period);
        let along = if p <= self.span { p } else { period - p };
        self.direction.scale(along)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    /// Convex footprint on the floor.
    pub footprint: Vec<Vec2>,
    pub height: f64,
    pub class: u8,
    pub kind: ObstacleKind,
    pub color: [u8; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub motion: Option<Motion>,
}

impl Obstacle {
    /// Footprint at the current motion phase.
    pub fn current_footprint(&self) -> Vec<Vec2> {
        match &self.motion {
            Some(m) => {
                let o = m.offset();
                self.footprint.iter().map(|p| p.add(o)).collect()
            }
            None => self.footprint.clone(),
        }
    }
}

/// Vertical wall segment standing on the floor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Wall {
    pub a: Vec2,
    pub b: Vec2,
    pub height: f64,
}

/// Flat coloured patch on the floor; renders as floor class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decal {
    pub footprint: Vec<Vec2>,
    pub color: [u8; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LightingKind {
    Day,
    Night,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lighting {
    pub kind: LightingKind,
    /// Multiplier applied to every shaded colour.
    pub brightness: f64,
    /// Standard deviation of additive pixel noise, in [0, 1] intensity units.
    pub noise_sigma: f64,
    pub noise_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum Environment {
    Indoor { ceiling_height: f64 },
    Outdoor,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Palette {
    pub floor: [u8; 3],
    pub wall: [u8; 3],
    pub ceiling: [u8; 3],
    pub sky: [u8; 3],
}

/// Head-mounted camera: height above the floor, pitch (negative looks down)
/// and yaw relative to the walking direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraRig {
    pub height: f64,
    pub pitch: f64,
    pub yaw: f64,
}

/// Half-widths of the uniform per-frame jitter added to the rig.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraJitter {
    pub height: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl Default for CameraJitter {
    fn default() -> Self {
        Self {
            height: 0.04,
            pitch: 2f64.to_radians(),
            yaw: 2f64.to_radians(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenderSettings {
    pub width: usize,
    pub height: usize,
    /// Horizontal field of view in radians.
    pub hfov: f64,
}

impl Default for RenderSettings {
    fn default() -> Self {
        Self {
            width: 128,
            height: 96,
            hfov: 80f64.to_radians(),
        }
    }
}

/// Sensor dropout beyond glass: random blobs until `min_fraction` of the
/// depth grid is missing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthDropout {
    pub min_fraction: f64,
    pub seed: u64,
}

/// Class indices the generator assigns to surfaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurfaceClasses {
    pub floor: u8,
    pub wall: u8,
    pub ceiling: u8,
    pub sky: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenePlan {
    pub seed: u64,
    pub bucket: Bucket,
    pub environment: Environment,
    pub walls: Vec<Wall>,
    pub obstacles: Vec<Obstacle>,
    pub decals: Vec<Decal>,
    pub palette: Palette,
    pub surfaces: SurfaceClasses,
    pub lighting: Lighting,
    pub camera: CameraRig,
    pub jitter: CameraJitter,
    pub render: RenderSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth_dropout: Option<DepthDropout>,
    pub start: Pose,
    /// The walk succeeds once the agent's x coordinate reaches this line.
    pub goal_x: f64,
    /// Set on plans produced by [`ScenePlan::mirrored`]; the renderer then
    /// reads noise and dropout patterns column-reversed.
    #[serde(default)]
    pub mirrored: bool,
}

impl ScenePlan {
    /// Reflection about the corridor axis (y → −y). Rendering the result
    /// gives the column-reversed images of the original.
    pub fn mirrored(&self) -> ScenePlan {
        let flip = |ps: &[Vec2]| ps.iter().map(|p| p.mirrored()).collect::<Vec<_>>();
        ScenePlan {
            walls: self
                .walls
                .iter()
                .map(|w| Wall {
                    a: w.a.mirrored(),
                    b: w.b.mirrored(),
                    height: w.height,
                })
                .collect(),
            obstacles: self
                .obstacles
                .iter()
                .map(|o| Obstacle {
                    footprint: flip(&o.footprint),
                    motion: o.motion.map(|m| Motion {
                        direction: m.direction.mirrored(),
                        ..m
                    }),
                    ..o.clone()
                })
                .collect(),
            decals: self
                .decals
                .iter()
                .map(|d| Decal {
                    footprint: flip(&d.footprint),
                    color: d.color,
                })
                .collect(),
            camera: CameraRig {
                yaw: -self.camera.yaw,
                ..self.camera
            },
            start: self.start.mirrored(),
            mirrored: !self.mirrored,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(MIN_CAMERA_HEIGHT..=MAX_CAMERA_HEIGHT).contains(&self.camera.height) {
            return Err(Error::InvalidPlan(format!(
                "camera height {} outside [{MIN_CAMERA_HEIGHT}, {MAX_CAMERA_HEIGHT}]",
                self.camera.height
            )));
        }
        if self.render.width == 0 || self.render.height == 0 || self.render.width % 2 != 0 {
            return Err(Error::InvalidPlan("render width must be even and non-zero".into()));
        }
        if !(self.render.hfov > 0.0 && self.render.hfov < std::f64::consts::PI) {
            return Err(Error::InvalidPlan("hfov must be in (0, pi)".into()));
        }
        for o in &self.obstacles {
            if o.footprint.len() < 3 {
                return Err(Error::InvalidPlan("obstacle footprint needs 3+ vertices".into()));
            }
            if o.kind == ObstacleKind::Low && o.height > MAX_LOW_HEIGHT {
                return Err(Error::InvalidPlan(format!(
                    "low obstacle is {} m tall (max {MAX_LOW_HEIGHT})",
                    o.height
                )));
            }
            if !(o.height > 0.0) {
                return Err(Error::InvalidPlan("obstacle height must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| Error::Plan(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let plan: Self = serde_json::from_str(text).map_err(|e| Error::Plan(e.to_string()))?;
        plan.validate()?;
        Ok(plan)
    }
}
