//! Flat-shaded ray casting of a [`ScenePlan`] from a pose.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use sightwalk_core::{Provenance, RgbdFrame, SemanticMap};

use crate::geometry::{convex_contains, ray_segment, sin_cos_odd, Pose, Vec2};
use crate::plan::{Environment, ObstacleKind, ScenePlan};
use crate::{Error, Result};

/// Everything the renderer knows about one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderOutput {
    pub frame: RgbdFrame,
    pub semantic: SemanticMap,
    /// Euclidean distance to the first surface hit (glass included); infinite for sky.
    pub true_depth: Vec<f64>,
    /// Horizontal distance from the camera to the first hit point.
    pub ground_range: Vec<f64>,
    /// Whether the pixel's ray points below the horizon.
    pub below_horizon: Vec<bool>,
}

/// Camera origin and unit ray direction through the centre of pixel `(row, col)`.
#[derive(Debug, Clone, Copy)]
pub struct Ray {
    pub origin: [f64; 3],
    pub dir: [f64; 3],
}

pub struct Camera {
    origin: [f64; 3],
    forward: [f64; 3],
    left: [f64; 3],
    up: [f64; 3],
    focal: f64,
    width: usize,
    height: usize,
}

impl Camera {
    pub fn new(plan: &ScenePlan, pose: Pose) -> Self {
        let psi = pose.heading + plan.camera.yaw;
        let (s_psi, c_psi) = sin_cos_odd(psi);
        let (s_p, c_p) = plan.camera.pitch.sin_cos();
        let w = plan.render.width;
        Self {
            origin: [pose.x, pose.y, plan.camera.height],
            forward: [c_p * c_psi, c_p * s_psi, s_p],
            left: [-s_psi, c_psi, 0.0],
            up: [-s_p * c_psi, -s_p * s_psi, c_p],
            focal: (w as f64 / 2.0) / (plan.render.hfov / 2.0).tan(),
            width: w,
            height: plan.render.height,
        }
    }

    pub fn ray(&self, row: usize, col: usize) -> Ray {
        let a = -((col as f64 + 0.5) - self.width as f64 / 2.0) / self.focal;
        let b = -((row as f64 + 0.5) - self.height as f64 / 2.0) / self.focal;
        let mut d = [0.0; 3];
        for (k, dk) in d.iter_mut().enumerate() {
            *dk = self.forward[k] + a * self.left[k] + b * self.up[k];
        }
        let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        Ray {
            origin: self.origin,
            dir: [d[0] / n, d[1] / n, d[2] / n],
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Hit {
    t: f64,
    class: u8,
    color: [u8; 3],
    shade: f64,
    glass: bool,
    sky: bool,
}

fn vertical_shade(a: Vec2, b: Vec2) -> f64 {
    let e = b.sub(a);
    0.65 + 0.3 * e.y.abs() / e.norm()
}

struct World<'a> {
    plan: &'a ScenePlan,
    footprints: Vec<Vec<Vec2>>,
}

impl World<'_> {
    fn trace(&self, ray: &Ray) -> Hit {
        let plan = self.plan;
        let [ox, oy, oz] = ray.origin;
        let [dx, dy, dz] = ray.dir;
        let o2 = Vec2::new(ox, oy);
        let d2 = Vec2::new(dx, dy);
        let mut best = Hit {
            t: f64::INFINITY,
            class: plan.surfaces.sky,
            color: plan.palette.sky,
            shade: 1.0,
            glass: false,
            sky: true,
        };
        let mut consider = |t: f64, h: Hit| {
            if t > 1e-9 && t < best.t {
                best = Hit { t, ..h };
            }
        };
        if dz < 0.0 {
            let t = -oz / dz;
            let p = Vec2::new(ox + t * dx, oy + t * dy);
            let color = plan
                .decals
                .iter()
                .rev()
                .find(|d| convex_contains(&d.footprint, p))
                .map_or(plan.palette.floor, |d| d.color);
            consider(
                t,
                Hit {
                    t,
                    class: plan.surfaces.floor,
                    color,
                    shade: 1.0,
                    glass: false,
                    sky: false,
                },
            );
        }
        if let Environment::Indoor { ceiling_height } = plan.environment {
            if dz > 0.0 {
                let t = (ceiling_height - oz) / dz;
                consider(
                    t,
                    Hit {
                        t,
                        class: plan.surfaces.ceiling,
                        color: plan.palette.ceiling,
                        shade: 0.85,
                        glass: false,
                        sky: false,
                    },
                );
            }
        }
        for w in &plan.walls {
            if let Some(t) = ray_segment(o2, d2, w.a, w.b) {
                let z = oz + t * dz;
                if (0.0..=w.height).contains(&z) {
                    consider(
                        t,
                        Hit {
                            t,
                            class: plan.surfaces.wall,
                            color: plan.palette.wall,
                            shade: vertical_shade(w.a, w.b),
                            glass: false,
                            sky: false,
                        },
                    );
                }
            }
        }
        for (o, fp) in plan.obstacles.iter().zip(&self.footprints) {
            let glass = o.kind == ObstacleKind::Glass;
            for i in 0..fp.len() {
                let (a, b) = (fp[i], fp[(i + 1) % fp.len()]);
                if let Some(t) = ray_segment(o2, d2, a, b) {
                    let z = oz + t * dz;
                    if (0.0..=o.height).contains(&z) {
                        consider(
                            t,
                            Hit {
                                t,
                                class: o.class,
                                color: o.color,
                                shade: vertical_shade(a, b),
                                glass,
                                sky: false,
                            },
                        );
                    }
                }
            }
            if dz < 0.0 && oz > o.height {
                let t = (o.height - oz) / dz;
                let p = Vec2::new(ox + t * dx, oy + t * dy);
                if convex_contains(fp, p) {
                    consider(
                        t,
                        Hit {
                            t,
                            class: o.class,
                            color: o.color,
                            shade: 0.95,
                            glass,
                            sky: false,
                        },
                    );
                }
            }
        }
        best
    }
}

/// Renders RGB-D and ground-truth semantics.
pub fn render(plan: &ScenePlan, pose: Pose) -> Result<(RgbdFrame, SemanticMap)> {
    let out = render_full(plan, pose)?;
    Ok((out.frame, out.semantic))
}

pub fn render_full(plan: &ScenePlan, pose: Pose) -> Result<RenderOutput> {
    render_with_id(plan, pose, format!("scene{}", plan.seed))
}

pub fn render_with_id(plan: &ScenePlan, pose: Pose, frame_id: impl Into<String>) -> Result<RenderOutput> {
    plan.validate()?;
    let footprints: Vec<_> = plan.obstacles.iter().map(|o| o.current_footprint()).collect();
    if footprints
        .iter()
        .any(|fp| convex_contains(fp, pose.position()))
    {
        return Err(Error::PoseInsideObstacle {
            x: pose.x,
            y: pose.y,
        });
    }
    let world = World { plan, footprints };
    let cam = Camera::new(plan, pose);
    let (w, h) = (plan.render.width, plan.render.height);
    let n = w * h;
    let mut rgb = vec![0u8; n * 3];
    let mut depth = vec![0f32; n];
    let mut labels = vec![0u8; n];
    let mut true_depth = vec![f64::INFINITY; n];
    let mut ground_range = vec![f64::INFINITY; n];
    let mut below = vec![false; n];
    let noise = noise_field(plan);
    let l = &plan.lighting;
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            let ray = cam.ray(r, c);
            let hit = world.trace(&ray);
            below[i] = ray.dir[2] < 0.0;
            labels[i] = hit.class;
            true_depth[i] = hit.t;
            if !hit.sky {
                let hx = hit.t * ray.dir[0];
                let hy = hit.t * ray.dir[1];
                ground_range[i] = (hx * hx + hy * hy).sqrt();
                if !hit.glass {
                    depth[i] = hit.t as f32;
                }
            }
            let atten = if hit.sky { 1.0 } else { 1.0 / (1.0 + 0.03 * hit.t) };
            let nc = if plan.mirrored { w - 1 - c } else { c };
            let ni = (r * w + nc) * 3;
            for k in 0..3 {
                let v = hit.color[k] as f64 * hit.shade * atten * l.brightness + noise[ni + k] * 255.0;
                rgb[i * 3 + k] = v.round().clamp(0.0, 255.0) as u8;
            }
        }
    }
    if let Some(drop) = plan.depth_dropout {
        apply_dropout(&mut depth, w, h, drop.min_fraction, drop.seed, plan.mirrored);
    }
    let frame = RgbdFrame::new(frame_id, w, h, rgb, depth)?;
    let semantic = SemanticMap::new(w, h, labels, Provenance::GroundTruth)?;
    Ok(RenderOutput {
        frame,
        semantic,
        true_depth,
        ground_range,
        below_horizon: below,
    })
}

/// Per-pixel additive noise in canonical (unmirrored) layout.
fn noise_field(plan: &ScenePlan) -> Vec<f64> {
    let n = plan.render.width * plan.render.height * 3;
    let sigma = plan.lighting.noise_sigma;
    if sigma <= 0.0 {
        return vec![0.0; n];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(plan.lighting.noise_seed);
    let dist = Normal::new(0.0, sigma).expect("sigma is positive");
    (0..n).map(|_| dist.sample(&mut rng)).collect()
}

/// Knocks out rectangular blobs of depth until at least `min_fraction` is missing.
fn apply_dropout(depth: &mut [f32], w: usize, h: usize, min_fraction: f64, seed: u64, mirrored: bool) {
    let need = (min_fraction * (w * h) as f64).ceil() as usize;
    let mut missing = depth.iter().filter(|d| **d == 0.0).count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while missing < need {
        let rh = rng.random_range(3..=h / 6 + 3);
        let rw = rng.random_range(4..=w / 5 + 4);
        let r0 = rng.random_range(0..h);
        let c0 = rng.random_range(0..w);
        for r in r0.saturating_sub(rh)..(r0 + rh).min(h) {
            for c in c0.saturating_sub(rw)..(c0 + rw).min(w) {
                let cc = if mirrored { w - 1 - c } else { c };
                let d = &mut depth[r * w + cc];
                if *d != 0.0 {
                    *d = 0.0;
                    missing += 1;
                }
            }
        }
    }
}
