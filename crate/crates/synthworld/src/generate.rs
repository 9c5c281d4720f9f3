//! Random scene plans for each evaluation bucket and for walk corridors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sightwalk_core::{Bucket, ClassTable};

use crate::geometry::{convex_overlap, oriented_rect, Pose, Vec2};
use crate::plan::*;
use crate::{Error, Result};

/// Class indices used by the generator, looked up by name in a class table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneClasses {
    pub floor: u8,
    pub wall: u8,
    pub ceiling: u8,
    pub sky: u8,
    pub person: u8,
    pub furniture: u8,
    pub bin: u8,
    pub curb: u8,
    pub glass: u8,
    pub pole: u8,
}

pub const REQUIRED_CLASSES: [&str; 10] = [
    "floor",
    "wall",
    "ceiling",
    "sky",
    "person",
    "furniture",
    "bin",
    "curb",
    "glass",
    "pole",
];

impl SceneClasses {
    pub fn from_table(table: &ClassTable) -> Result<Self> {
        let idx = |name: &str| -> Result<u8> {
            table
                .index_of(name)
                .map(|i| i as u8)
                .ok_or_else(|| Error::MissingClass(name.to_string()))
        };
        Ok(Self {
            floor: idx("floor")?,
            wall: idx("wall")?,
            ceiling: idx("ceiling")?,
            sky: idx("sky")?,
            person: idx("person")?,
            furniture: idx("furniture")?,
            bin: idx("bin")?,
            curb: idx("curb")?,
            glass: idx("glass")?,
            pole: idx("pole")?,
        })
    }

    fn surfaces(&self) -> SurfaceClasses {
        SurfaceClasses {
            floor: self.floor,
            wall: self.wall,
            ceiling: self.ceiling,
            sky: self.sky,
        }
    }
}

impl Default for SceneClasses {
    fn default() -> Self {
        Self::from_table(&ClassTable::default()).expect("default table has every class")
    }
}

/// Largest allowed depth deviation of a low obstacle from the floor plane.
pub const LOW_DEPTH_TOLERANCE_M: f64 = 0.03;

#[derive(Debug, Clone, Copy)]
enum Prop {
    Furniture,
    Bin,
    Person,
    Pole,
    Glass,
    Low,
}

fn mix(seed: u64, salt: u64) -> u64 {
    // splitmix64 finaliser
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn bucket_salt(b: Bucket) -> u64 {
    Bucket::ALL.iter().position(|x| *x == b).unwrap() as u64 + 1
}

fn grey(rng: &mut ChaCha8Rng, lo: f64, hi: f64, tint: f64) -> [u8; 3] {
    let g = rng.random_range(lo..hi);
    std::array::from_fn(|_| (g + rng.random_range(-tint..=tint)).clamp(0.0, 255.0) as u8)
}

/// Colour for floor patches and low obstacles: a lighter or darker shade of the floor.
fn patch_color(rng: &mut ChaCha8Rng, floor: [u8; 3]) -> [u8; 3] {
    let shift = rng.random_range(-45.0..45.0);
    std::array::from_fn(|k| {
        (floor[k] as f64 + shift + rng.random_range(-10.0..10.0)).clamp(0.0, 255.0) as u8
    })
}

struct Builder<'a> {
    rng: ChaCha8Rng,
    classes: &'a SceneClasses,
    length: f64,
    width: f64,
    obstacles: Vec<Obstacle>,
    decals: Vec<Decal>,
    floor: [u8; 3],
}

impl Builder<'_> {
    fn inside_corridor(&self, fp: &[Vec2], margin: f64) -> bool {
        fp.iter().all(|p| {
            p.x >= margin && p.x <= self.length - margin && p.y.abs() <= self.width / 2.0 - margin
        })
    }

    fn free(&self, fp: &[Vec2]) -> bool {
        !self.obstacles.iter().any(|o| convex_overlap(&o.footprint, fp))
    }

    fn shape(&mut self, prop: Prop, center: Vec2, facing: f64) -> Obstacle {
        let c = *self.classes;
        let rng = &mut self.rng;
        let angle = rng.random_range(0.0..std::f64::consts::PI);
        let (w, d, h, class, kind, color, ang) = match prop {
            Prop::Furniture => (
                rng.random_range(0.5..1.2),
                rng.random_range(0.4..0.8),
                rng.random_range(0.45..1.1),
                c.furniture,
                ObstacleKind::Normal,
                [
                    rng.random_range(90..190),
                    rng.random_range(50..130),
                    rng.random_range(20..90),
                ],
                angle,
            ),
            Prop::Bin => {
                let s = rng.random_range(0.3..0.5);
                (
                    s,
                    s,
                    rng.random_range(0.5..0.9),
                    c.bin,
                    ObstacleKind::Normal,
                    [
                        rng.random_range(20..120),
                        rng.random_range(60..170),
                        rng.random_range(20..160),
                    ],
                    angle,
                )
            }
            Prop::Person => (
                rng.random_range(0.45..0.55),
                rng.random_range(0.25..0.35),
                rng.random_range(1.55..1.9),
                c.person,
                ObstacleKind::Normal,
                std::array::from_fn(|_| rng.random_range(30..220)),
                angle,
            ),
            Prop::Pole => {
                let s = rng.random_range(0.12..0.25);
                (
                    s,
                    s,
                    rng.random_range(2.5..4.0),
                    c.pole,
                    ObstacleKind::Normal,
                    grey(rng, 50.0, 110.0, 6.0),
                    angle,
                )
            }
            Prop::Glass => (
                rng.random_range(0.8..2.0),
                0.04,
                rng.random_range(1.9..2.4),
                c.glass,
                ObstacleKind::Glass,
                [
                    rng.random_range(155..185),
                    rng.random_range(185..215),
                    rng.random_range(195..225),
                ],
                facing + rng.random_range(-0.4..0.4),
            ),
            Prop::Low => (
                rng.random_range(0.35..0.8),
                rng.random_range(0.25..0.5),
                0.0,
                c.curb,
                ObstacleKind::Low,
                patch_color(rng, self.floor),
                angle,
            ),
        };
        Obstacle {
            footprint: oriented_rect(center, w, d, ang),
            height: h,
            class,
            kind,
            color,
            motion: None,
        }
    }

    /// Tries to put `prop` in view of `pose`, between `near` and `far` metres ahead.
    fn place(&mut self, prop: Prop, pose: Pose, cam_h: f64, near: f64, far: f64, lateral: f64) -> bool {
        for _ in 0..60 {
            let ahead = self.rng.random_range(near..far);
            let left = self.rng.random_range(-lateral..lateral);
            let center = pose.local_to_world(ahead, left);
            let mut ob = self.shape(prop, center, pose.heading);
            let pos = pose.position();
            let clear = ob
                .footprint
                .iter()
                .map(|p| p.sub(pos).norm())
                .fold(f64::INFINITY, f64::min);
            if clear < 0.5 || !self.inside_corridor(&ob.footprint, 0.05) || !self.free(&ob.footprint) {
                continue;
            }
            if ob.kind == ObstacleKind::Low {
                let far = ob
                    .footprint
                    .iter()
                    .map(|p| p.sub(pos).norm())
                    .fold(0.0, f64::max);
                ob.height = low_height(cam_h, far + 0.3);
            }
            self.obstacles.push(ob);
            return true;
        }
        false
    }

    fn place_decal(&mut self, pose: Pose, near: f64, far: f64) {
        let ahead = self.rng.random_range(near..far);
        let left = self.rng.random_range(-1.8..1.8);
        let center = pose.local_to_world(ahead, left);
        let w = self.rng.random_range(0.35..0.8);
        let d = self.rng.random_range(0.25..0.5);
        let angle = self.rng.random_range(0.0..std::f64::consts::PI);
        let color = patch_color(&mut self.rng, self.floor);
        self.decals.push(Decal {
            footprint: oriented_rect(center, w, d, angle),
            color,
        });
    }
}

/// Height that keeps a low obstacle's depth within tolerance of the floor
/// when seen from at most `range` metres (horizontal) away.
pub fn low_height(camera_height: f64, range: f64) -> f64 {
    let ray = (range * range + camera_height * camera_height).sqrt();
    (0.8 * LOW_DEPTH_TOLERANCE_M * camera_height / ray).min(MAX_LOW_HEIGHT)
}

fn corridor(length: f64, width: f64, wall_height: f64) -> Vec<Wall> {
    let (hw, l) = (width / 2.0, length);
    let p = |x, y| Vec2::new(x, y);
    [
        (p(0.0, hw), p(l, hw)),
        (p(0.0, -hw), p(l, -hw)),
        (p(l, -hw), p(l, hw)),
        (p(0.0, -hw), p(0.0, hw)),
    ]
    .into_iter()
    .map(|(a, b)| Wall {
        a,
        b,
        height: wall_height,
    })
    .collect()
}

struct Setting {
    environment: Environment,
    wall_height: f64,
    width: f64,
    palette: Palette,
    lighting: Lighting,
}

fn setting(rng: &mut ChaCha8Rng, indoor: bool, day: bool) -> Setting {
    let (environment, wall_height, width) = if indoor {
        let ch = rng.random_range(2.6..3.0);
        (Environment::Indoor { ceiling_height: ch }, ch, rng.random_range(3.5..5.5))
    } else {
        (Environment::Outdoor, rng.random_range(4.0..10.0), rng.random_range(4.0..6.5))
    };
    let floor = if indoor {
        grey(rng, 110.0, 180.0, 15.0)
    } else {
        grey(rng, 80.0, 140.0, 8.0)
    };
    let palette = Palette {
        floor,
        wall: grey(rng, 140.0, 220.0, 25.0),
        ceiling: grey(rng, 200.0, 240.0, 5.0),
        sky: if day {
            [
                rng.random_range(120..150),
                rng.random_range(170..200),
                rng.random_range(220..250),
            ]
        } else {
            [20, 25, 45]
        },
    };
    let lighting = if day {
        Lighting {
            kind: LightingKind::Day,
            brightness: rng.random_range(0.85..1.15),
            noise_sigma: 3.0 / 255.0,
            noise_seed: rng.random(),
        }
    } else {
        Lighting {
            kind: LightingKind::Night,
            brightness: rng.random_range(0.1..0.3),
            noise_sigma: 8.0 / 255.0,
            noise_seed: rng.random(),
        }
    };
    Setting {
        environment,
        wall_height,
        width,
        palette,
        lighting,
    }
}

fn rig(rng: &mut ChaCha8Rng) -> CameraRig {
    CameraRig {
        height: rng.random_range(MIN_CAMERA_HEIGHT..=MAX_CAMERA_HEIGHT),
        pitch: (-28.0f64 + rng.random_range(-4.0..4.0)).to_radians(),
        yaw: rng.random_range(-4.0f64..4.0).to_radians(),
    }
}

pub fn generate_scene(bucket: Bucket, seed: u64) -> ScenePlan {
    generate_scene_with(bucket, seed, &SceneClasses::default(), &RenderSettings::default())
}

/// Builds a single-frame scene for `bucket`: a corridor or street segment,
/// a start pose and props placed in view of it.
pub fn generate_scene_with(
    bucket: Bucket,
    seed: u64,
    classes: &SceneClasses,
    render: &RenderSettings,
) -> ScenePlan {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, bucket_salt(bucket)));
    let (indoor, day) = match bucket {
        Bucket::IndoorDay => (true, true),
        Bucket::IndoorNight => (true, false),
        Bucket::OutdoorDay => (false, true),
        Bucket::OutdoorNight => (false, false),
        Bucket::PoorDepth => (rng.random_bool(0.7), rng.random_bool(0.8)),
        Bucket::LowObstacle => (rng.random_bool(0.5), rng.random_bool(0.8)),
    };
    let s = setting(&mut rng, indoor, day);
    let camera = rig(&mut rng);
    let length = 30.0;
    let margin = 0.6;
    let start = Pose::new(
        rng.random_range(2.0..20.0),
        rng.random_range(-(s.width / 2.0 - margin)..(s.width / 2.0 - margin)),
        rng.random_range(-30.0f64..30.0).to_radians(),
    );
    let view = Pose {
        heading: start.heading + camera.yaw,
        ..start
    };
    let mut b = Builder {
        rng,
        classes,
        length,
        width: s.width,
        obstacles: Vec::new(),
        decals: Vec::new(),
        floor: s.palette.floor,
    };
    let normal_props: &[Prop] = if indoor {
        &[Prop::Furniture, Prop::Bin, Prop::Person]
    } else {
        &[Prop::Pole, Prop::Person, Prop::Bin, Prop::Furniture]
    };
    let pick = |b: &mut Builder| normal_props[b.rng.random_range(0..normal_props.len())];
    let mut dropout = None;
    match bucket {
        Bucket::PoorDepth => {
            let n = b.rng.random_range(1..=2);
            for _ in 0..n {
                b.place(Prop::Glass, view, camera.height, 1.0, 4.0, 1.5);
            }
            for _ in 0..b.rng.random_range(0..=1) {
                let p = pick(&mut b);
                b.place(p, view, camera.height, 0.8, 5.0, 1.8);
            }
            dropout = Some(DepthDropout {
                min_fraction: 0.15,
                seed: b.rng.random(),
            });
        }
        Bucket::LowObstacle => {
            // narrow the lateral range when a nearby wall crowds the view
            for lateral in [1.4, 1.0, 0.6, 0.3, 0.1] {
                if b.place(Prop::Low, view, camera.height, 1.2, 3.2, lateral) {
                    break;
                }
            }
            if b.rng.random_bool(0.3) {
                b.place(Prop::Low, view, camera.height, 1.2, 3.2, 1.4);
            }
            if b.rng.random_bool(0.3) {
                let p = pick(&mut b);
                b.place(p, view, camera.height, 3.0, 6.0, 1.8);
            }
        }
        _ => {
            for _ in 0..b.rng.random_range(0..=3) {
                let p = pick(&mut b);
                b.place(p, view, camera.height, 0.8, 5.0, 1.8);
            }
        }
    }
    let decals = match bucket {
        Bucket::LowObstacle => b.rng.random_range(1..=3),
        _ => b.rng.random_range(0..=2),
    };
    for _ in 0..decals {
        b.place_decal(view, 1.0, 4.0);
    }
    ScenePlan {
        seed,
        bucket,
        environment: s.environment,
        walls: corridor(length, s.width, s.wall_height),
        obstacles: b.obstacles,
        decals: b.decals,
        palette: s.palette,
        surfaces: classes.surfaces(),
        lighting: s.lighting,
        camera,
        jitter: CameraJitter::default(),
        render: *render,
        depth_dropout: dropout,
        start,
        goal_x: length - 1.5,
        mirrored: false,
    }
}

/// Parameters of a walk corridor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorridorConfig {
    pub length: f64,
    pub width: f64,
    pub obstacles: usize,
    /// Largest lateral offset of an obstacle centre from the corridor axis.
    pub lateral: f64,
    /// Allow people that walk back and forth.
    pub moving: bool,
    /// Allow low obstacles.
    pub low: bool,
}

impl Default for CorridorConfig {
    fn default() -> Self {
        Self {
            length: 24.0,
            width: 5.5,
            obstacles: 3,
            lateral: 0.6,
            moving: true,
            low: true,
        }
    }
}

/// A straight corridor with obstacles spread along its axis; the walk
/// starts at x = 1 facing +x and ends at `length - 1.5`.
pub fn generate_corridor(seed: u64, cfg: &CorridorConfig, classes: &SceneClasses) -> ScenePlan {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, 0xC0));
    let indoor = rng.random_bool(0.5);
    let day = rng.random_bool(0.75);
    let mut s = setting(&mut rng, indoor, day);
    s.width = cfg.width;
    let camera = rig(&mut rng);
    let start = Pose::new(1.0, 0.0, 0.0);
    let goal_x = cfg.length - 1.5;
    let mut b = Builder {
        rng,
        classes,
        length: cfg.length,
        width: cfg.width,
        obstacles: Vec::new(),
        decals: Vec::new(),
        floor: s.palette.floor,
    };
    let mut props = vec![Prop::Furniture, Prop::Bin, Prop::Person];
    if !indoor {
        props.push(Prop::Pole);
    }
    if cfg.low {
        props.push(Prop::Low);
    }
    let first = 5.0;
    let spacing = if cfg.obstacles > 1 {
        (goal_x - 2.0 - first) / (cfg.obstacles - 1) as f64
    } else {
        0.0
    };
    for k in 0..cfg.obstacles {
        let prop = props[b.rng.random_range(0..props.len())];
        let x = first + spacing * k as f64 + b.rng.random_range(-0.5..0.5);
        let y = b.rng.random_range(-cfg.lateral..=cfg.lateral);
        let mut ob = b.shape(prop, Vec2::new(x, y), 0.0);
        if ob.kind == ObstacleKind::Low {
            ob.height = low_height(camera.height, 4.0);
        }
        if matches!(prop, Prop::Person) && cfg.moving && b.rng.random_bool(0.5) {
            // walks across part of the corridor and back
            let span = b.rng.random_range(0.4..1.0);
            let dir = if y > 0.0 { -1.0 } else { 1.0 };
            ob.kind = ObstacleKind::Moving;
            ob.motion = Some(Motion {
                direction: Vec2::new(0.0, dir),
                span,
                phase: 0.0,
            });
        }
        b.obstacles.push(ob);
    }
    for _ in 0..b.rng.random_range(0..=3) {
        let x = b.rng.random_range(3.0..goal_x);
        let y = b.rng.random_range(-1.5..1.5);
        let w = b.rng.random_range(0.35..0.8);
        let d = b.rng.random_range(0.25..0.5);
        let angle = b.rng.random_range(0.0..std::f64::consts::PI);
        let color = patch_color(&mut b.rng, b.floor);
        b.decals.push(Decal {
            footprint: oriented_rect(Vec2::new(x, y), w, d, angle),
            color,
        });
    }
    ScenePlan {
        seed,
        bucket: if indoor {
            if day {
                Bucket::IndoorDay
            } else {
                Bucket::IndoorNight
            }
        } else if day {
            Bucket::OutdoorDay
        } else {
            Bucket::OutdoorNight
        },
        environment: s.environment,
        walls: corridor(cfg.length, cfg.width, s.wall_height),
        obstacles: b.obstacles,
        decals: b.decals,
        palette: s.palette,
        surfaces: classes.surfaces(),
        lighting: s.lighting,
        camera,
        jitter: CameraJitter::default(),
        render: RenderSettings::default(),
        depth_dropout: None,
        start,
        goal_x,
        mirrored: false,
    }
}

/// Empty straight corridor used for calibration walks.
pub fn empty_corridor(length: f64, width: f64) -> ScenePlan {
    let mut plan = generate_corridor(
        0,
        &CorridorConfig {
            length,
            width,
            obstacles: 0,
            ..CorridorConfig::default()
        },
        &SceneClasses::default(),
    );
    plan.decals.clear();
    plan
}
