//! Disc-agent walks through a scene under a frame-to-action policy.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sightwalk_core::ActionLabel;

use crate::geometry::{closest_on_polygon, closest_on_segment, convex_contains, Pose, Vec2};
use crate::plan::{CameraRig, ScenePlan, MAX_CAMERA_HEIGHT, MIN_CAMERA_HEIGHT};
use crate::render::{render_with_id, RenderOutput};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WalkConfig {
    pub max_steps: usize,
    pub step_m: f64,
    pub turn_deg: f64,
    pub agent_radius: f64,
    pub moving_speed: f64,
    /// Seeds camera jitter and sensor noise; replaying with the same seed is exact.
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        Self {
            max_steps: 300,
            step_m: 0.25,
            turn_deg: 15.0,
            agent_radius: 0.3,
            moving_speed: 0.1,
            seed: 0,
        }
    }
}

/// What a policy sees at one step.
pub struct StepView<'a> {
    pub step: usize,
    /// The plan as rendered this step: jittered camera, moved obstacles.
    pub scene: &'a ScenePlan,
    pub pose: Pose,
    pub render: &'a RenderOutput,
}

pub trait Policy {
    fn act(&mut self, view: &StepView<'_>) -> Result<ActionLabel>;
}

impl<F> Policy for F
where
    F: FnMut(&StepView<'_>) -> Result<ActionLabel>,
{
    fn act(&mut self, view: &StepView<'_>) -> Result<ActionLabel> {
        self(view)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// Start pose followed by the pose after every step.
    pub poses: Vec<Pose>,
    /// Whether each step ended in contact; the start pose has no flag.
    pub collision_flags: Vec<bool>,
    pub actions: Vec<ActionLabel>,
    pub collisions: usize,
    pub steps: usize,
    pub reached_goal: bool,
}

impl Trajectory {
    /// CSV with one row per pose: `x,y,heading,collision_flag`.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "x,y,heading,collision_flag")?;
        for (i, p) in self.poses.iter().enumerate() {
            let flag = i > 0 && self.collision_flags[i - 1];
            writeln!(out, "{},{},{},{}", p.x, p.y, p.heading, u8::from(flag))?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii")
    }
}

enum Shape<'a> {
    Segment(Vec2, Vec2),
    Polygon(&'a [Vec2]),
}

fn closest(shape: &Shape<'_>, p: Vec2) -> (Vec2, bool) {
    match shape {
        Shape::Segment(a, b) => (closest_on_segment(p, *a, *b), false),
        Shape::Polygon(poly) => (closest_on_polygon(poly, p), convex_contains(poly, p)),
    }
}

/// The nearest penetrated shape, if the disc at `p` touches anything.
fn contact(shapes: &[Shape<'_>], p: Vec2, r: f64) -> Option<(Vec2, bool)> {
    let mut best: Option<(f64, Vec2, bool)> = None;
    for s in shapes {
        let (q, inside) = closest(s, p);
        let d = q.sub(p).norm();
        if inside || d < r {
            let key = if inside { -d } else { d };
            if best.map_or(true, |(k, _, _)| key < k) {
                best = Some((key, q, inside));
            }
        }
    }
    best.map(|(_, q, inside)| (q, inside))
}

fn shapes_of<'a>(plan: &'a ScenePlan, footprints: &'a [Vec<Vec2>]) -> Vec<Shape<'a>> {
    plan.walls
        .iter()
        .map(|w| Shape::Segment(w.a, w.b))
        .chain(footprints.iter().map(|f| Shape::Polygon(f)))
        .collect()
}

/// Moves from `from` by `delta`; on contact, keeps only the component of the
/// motion tangential to the contact and takes it if that is free.
fn resolve_move(shapes: &[Shape<'_>], from: Vec2, delta: Vec2, r: f64) -> (Vec2, bool) {
    let to = from.add(delta);
    let Some((q, inside)) = contact(shapes, to, r) else {
        return (to, false);
    };
    let mut n = to.sub(q);
    if inside || n.norm() == 0.0 {
        n = from.sub(q);
    }
    let len = n.norm();
    if len == 0.0 {
        return (from, true);
    }
    let n = n.scale(1.0 / len);
    let slide = delta.sub(n.scale(delta.dot(n)));
    let cand = from.add(slide);
    if contact(shapes, cand, r).is_none() {
        (cand, true)
    } else {
        (from, true)
    }
}

fn jittered(plan: &ScenePlan, rng: &mut ChaCha8Rng) -> CameraRig {
    let j = plan.jitter;
    let mut u = |h: f64| if h > 0.0 { rng.random_range(-h..=h) } else { 0.0 };
    let (dh, dp, dy) = (u(j.height), u(j.pitch), u(j.yaw));
    CameraRig {
        height: (plan.camera.height + dh).clamp(MIN_CAMERA_HEIGHT, MAX_CAMERA_HEIGHT),
        pitch: plan.camera.pitch + dp,
        yaw: plan.camera.yaw + dy,
    }
}

/// Walks from `plan.start` until the goal line or `cfg.max_steps`.
pub fn simulate_walk(plan: &ScenePlan, policy: &mut dyn Policy, cfg: &WalkConfig) -> Result<Trajectory> {
    if cfg.max_steps == 0 {
        return Err(Error::InvalidWalk("max_steps must be at least 1".into()));
    }
    plan.validate()?;
    let r = cfg.agent_radius;
    let mut scene = plan.clone();
    let mut pose = plan.start;
    {
        let fps: Vec<_> = scene.obstacles.iter().map(|o| o.current_footprint()).collect();
        if contact(&shapes_of(&scene, &fps), pose.position(), r).is_some() {
            return Err(Error::InvalidWalk("start pose is not in free space".into()));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let turn = cfg.turn_deg.to_radians();
    let mut traj = Trajectory {
        poses: vec![pose],
        collision_flags: Vec::new(),
        actions: Vec::new(),
        collisions: 0,
        steps: 0,
        reached_goal: pose.x >= plan.goal_x,
    };
    while !traj.reached_goal && traj.steps < cfg.max_steps {
        let step = traj.steps;
        let mut view_plan = scene.clone();
        view_plan.camera = jittered(plan, &mut rng);
        view_plan.lighting.noise_seed = rng.random();
        if let Some(d) = &mut view_plan.depth_dropout {
            d.seed = rng.random();
        }
        let out = render_with_id(&view_plan, pose, format!("step{step:05}"))?;
        let action = policy.act(&StepView {
            step,
            scene: &view_plan,
            pose,
            render: &out,
        })?;
        pose.heading += match action {
            ActionLabel::TurnLeft => turn,
            ActionLabel::TurnRight => -turn,
            ActionLabel::GoStraight => 0.0,
        };
        let fps: Vec<_> = scene.obstacles.iter().map(|o| o.current_footprint()).collect();
        let shapes = shapes_of(&scene, &fps);
        let delta = Vec2::from_angle(pose.heading).scale(cfg.step_m);
        let (pos, hit) = resolve_move(&shapes, pose.position(), delta, r);
        pose.x = pos.x;
        pose.y = pos.y;
        // moving obstacles advance unless that would run into the agent
        for ob in &mut scene.obstacles {
            if let Some(m) = &mut ob.motion {
                let before = m.phase;
                m.phase += cfg.moving_speed;
                let fp = ob.current_footprint();
                if contact(&[Shape::Polygon(&fp)], pose.position(), r).is_some() {
                    ob.motion.as_mut().unwrap().phase = before;
                }
            }
        }
        traj.steps += 1;
        traj.poses.push(pose);
        traj.collision_flags.push(hit);
        traj.actions.push(action);
        traj.collisions += usize::from(hit);
        traj.reached_goal = pose.x >= plan.goal_x;
    }
    Ok(traj)
}

/// Whether the disc at `pose` overlaps any wall or obstacle of `plan`.
pub fn in_collision(plan: &ScenePlan, pose: Pose, radius: f64) -> bool {
    let fps: Vec<_> = plan.obstacles.iter().map(|o| o.current_footprint()).collect();
    contact(&shapes_of(plan, &fps), pose.position(), radius).is_some()
}

/// Policy that always returns the same action.
pub struct ConstantPolicy(pub ActionLabel);

impl Policy for ConstantPolicy {
    fn act(&mut self, _: &StepView<'_>) -> Result<ActionLabel> {
        Ok(self.0)
    }
}

/// Uniformly random actions from a seeded stream.
pub struct RandomPolicy(ChaCha8Rng);

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }
}

impl Policy for RandomPolicy {
    fn act(&mut self, _: &StepView<'_>) -> Result<ActionLabel> {
        Ok(ActionLabel::ALL[self.0.random_range(0..3)])
    }
}

/// The pilot rule applied to the rendered frame.
pub struct OraclePolicy(pub crate::oracle::OracleConfig);

impl Default for OraclePolicy {
    fn default() -> Self {
        Self(crate::oracle::OracleConfig::default())
    }
}

impl Policy for OraclePolicy {
    fn act(&mut self, view: &StepView<'_>) -> Result<ActionLabel> {
        Ok(crate::oracle::label_render(view.render, view.scene, &self.0))
    }
}
