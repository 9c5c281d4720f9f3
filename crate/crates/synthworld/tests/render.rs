use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sightwalk_core::Bucket;
use sightwalk_synth::generate::{empty_corridor, low_height};
use sightwalk_synth::geometry::{oriented_rect, Vec2};
use sightwalk_synth::plan::{Environment, Obstacle, ObstacleKind, ScenePlan};
use sightwalk_synth::{generate_scene, render, render_full, Error, Pose};

/// Independent solid-occupancy test for ray marching.
fn solid(plan: &ScenePlan, p: [f64; 3]) -> bool {
    if p[2] <= 0.0 {
        return true;
    }
    if let Environment::Indoor { ceiling_height } = plan.environment {
        if p[2] >= ceiling_height {
            return true;
        }
    }
    // walls form an axis-aligned box; standing outside it below wall height is solid
    let xs: Vec<f64> = plan.walls.iter().flat_map(|w| [w.a.x, w.b.x]).collect();
    let ys: Vec<f64> = plan.walls.iter().flat_map(|w| [w.a.y, w.b.y]).collect();
    let (x0, x1) = (xs.iter().cloned().fold(f64::MAX, f64::min), xs.iter().cloned().fold(f64::MIN, f64::max));
    let (y0, y1) = (ys.iter().cloned().fold(f64::MAX, f64::min), ys.iter().cloned().fold(f64::MIN, f64::max));
    let wall_h = plan.walls[0].height;
    if (p[0] < x0 || p[0] > x1 || p[1] < y0 || p[1] > y1) && p[2] <= wall_h {
        return true;
    }
    plan.obstacles.iter().any(|o| p[2] <= o.height && winding_inside(&o.footprint, p[0], p[1]))
}

fn winding_inside(poly: &[Vec2], x: f64, y: f64) -> bool {
    // crossing-number test
    let mut inside = false;
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + n - 1) % n]);
        if (a.y > y) != (b.y > y) && x < (b.x - a.x) * (y - a.y) / (b.y - a.y) + a.x {
            inside = !inside;
        }
    }
    inside
}

/// Ray direction built from explicit yaw and pitch rotations of the
/// camera-frame vector (1, a, b).
fn independent_ray(plan: &ScenePlan, pose: Pose, row: usize, col: usize) -> [f64; 3] {
    let (w, h) = (plan.render.width as f64, plan.render.height as f64);
    let f = (w / 2.0) / (plan.render.hfov / 2.0).tan();
    let v = [1.0, (w / 2.0 - (col as f64 + 0.5)) / f, (h / 2.0 - (row as f64 + 0.5)) / f];
    let p = plan.camera.pitch;
    // rotate about the left axis so forward tilts by pitch
    let v = [v[0] * p.cos() - v[2] * p.sin(), v[1], v[0] * p.sin() + v[2] * p.cos()];
    let y = pose.heading + plan.camera.yaw;
    let v = [v[0] * y.cos() - v[1] * y.sin(), v[0] * y.sin() + v[1] * y.cos(), v[2]];
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

fn march(plan: &ScenePlan, origin: [f64; 3], d: [f64; 3]) -> Option<f64> {
    let at = |t: f64| [origin[0] + t * d[0], origin[1] + t * d[1], origin[2] + t * d[2]];
    let step = 0.004;
    let mut t = 0.0;
    while t < 60.0 {
        let next = t + step;
        if solid(plan, at(next)) {
            let (mut lo, mut hi) = (t, next);
            for _ in 0..40 {
                let mid = 0.5 * (lo + hi);
                if solid(plan, at(mid)) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Some(hi);
        }
        t = next;
    }
    None
}

#[test]
fn depth_matches_independent_ray_march() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut checked = 0;
    let mut seed = 0;
    while checked < 100 {
        let bucket = Bucket::ALL[seed as usize % 6];
        let plan = generate_scene(bucket, 1000 + seed);
        seed += 1;
        let (frame, _) = render(&plan, plan.start).unwrap();
        for _ in 0..10 {
            let (r, c) = (rng.random_range(0..frame.height()), rng.random_range(0..frame.width()));
            let d = frame.depth_at(r, c) as f64;
            if d == 0.0 {
                continue;
            }
            let origin = [plan.start.x, plan.start.y, plan.camera.height];
            let dir = independent_ray(&plan, plan.start, r, c);
            let t = march(&plan, origin, dir).expect("valid depth means a surface was hit");
            assert!(
                (d - t).abs() <= 0.01 * t,
                "scene {seed} pixel ({r},{c}): rendered {d}, marched {t}"
            );
            checked += 1;
        }
    }
}

#[test]
fn facing_a_wall_at_three_metres() {
    let mut plan = empty_corridor(12.0, 5.5);
    plan.camera.pitch = 0.0;
    plan.camera.yaw = 0.0;
    let pose = Pose::new(9.0, 0.0, 0.0);
    let (frame, sem) = render(&plan, pose).unwrap();
    let (r, c) = (frame.height() / 2, frame.width() / 2);
    // the centre pixel is half a pixel off axis
    let f = 64.0 / 40f64.to_radians().tan();
    let half_px = (1.0 + 2.0 * (0.5 / f) * (0.5 / f)).sqrt() * 3.0;
    assert!((frame.depth_at(r, c) as f64 - 3.0).abs() <= half_px - 3.0 + 1e-4);
    assert_eq!(sem.at(r, c), plan.surfaces.wall);
}

#[test]
fn glass_has_class_but_no_depth() {
    let mut seen = 0;
    for seed in 0..40 {
        let plan = generate_scene(Bucket::PoorDepth, seed);
        let glass = plan
            .obstacles
            .iter()
            .find(|o| o.kind == ObstacleKind::Glass)
            .map(|o| o.class);
        let Some(glass) = glass else { continue };
        let (frame, sem) = render(&plan, plan.start).unwrap();
        for r in 0..frame.height() {
            for c in 0..frame.width() {
                if sem.at(r, c) == glass {
                    assert_eq!(frame.depth_at(r, c), 0.0);
                    seen += 1;
                }
            }
        }
    }
    assert!(seen > 1000, "too few glass pixels rendered: {seen}");
}

#[test]
fn mirrored_plan_renders_column_reversed_grids() {
    for seed in 0..60u64 {
        let bucket = Bucket::ALL[seed as usize % 6];
        let plan = generate_scene(bucket, seed);
        let m = plan.mirrored();
        let a = render_full(&plan, plan.start).unwrap();
        let b = render_full(&m, m.start).unwrap();
        let (w, h) = (a.frame.width(), a.frame.height());
        for r in 0..h {
            for c in 0..w {
                let mc = w - 1 - c;
                assert_eq!(a.frame.rgb_at(r, c), b.frame.rgb_at(r, mc), "rgb {bucket:?} {seed} ({r},{c})");
                assert_eq!(
                    a.frame.depth_at(r, c).to_bits(),
                    b.frame.depth_at(r, mc).to_bits(),
                    "depth {bucket:?} {seed}"
                );
                assert_eq!(a.semantic.at(r, c), b.semantic.at(r, mc));
            }
        }
        assert_eq!(m.mirrored(), plan);
    }
}

#[test]
fn low_obstacles_hide_in_the_floor_plane() {
    let mut pixels = 0;
    for seed in 0..150 {
        let plan = generate_scene(Bucket::LowObstacle, seed);
        assert!(plan.obstacles.iter().any(|o| o.kind == ObstacleKind::Low), "seed {seed}");
        for o in &plan.obstacles {
            if o.kind == ObstacleKind::Low {
                assert!(o.height <= 0.15);
            }
        }
        let low: Vec<u8> = plan
            .obstacles
            .iter()
            .filter(|o| o.kind == ObstacleKind::Low)
            .map(|o| o.class)
            .collect();
        let (frame, sem) = render(&plan, plan.start).unwrap();
        for r in 0..frame.height() {
            for c in 0..frame.width() {
                let d = frame.depth_at(r, c) as f64;
                if !low.contains(&sem.at(r, c)) || d == 0.0 {
                    continue;
                }
                let dir = independent_ray(&plan, plan.start, r, c);
                assert!(dir[2] < 0.0);
                let floor = -plan.camera.height / dir[2];
                if floor * (1.0 - dir[2] * dir[2]).sqrt() < 1.5 {
                    continue;
                }
                assert!((d - floor).abs() <= 0.03, "seed {seed}: depth {d} vs floor {floor}");
                pixels += 1;
            }
        }
    }
    assert!(pixels > 500, "only {pixels} low-obstacle pixels checked");
}

#[test]
fn poor_depth_frames_miss_at_least_fifteen_percent() {
    for seed in 0..150 {
        let plan = generate_scene(Bucket::PoorDepth, seed);
        let (frame, _) = render(&plan, plan.start).unwrap();
        assert!(frame.missing_depth_fraction() >= 0.15, "seed {seed}");
    }
}

#[test]
fn night_scenes_are_dim_and_noisy() {
    for seed in 0..50 {
        for b in [Bucket::IndoorNight, Bucket::OutdoorNight] {
            let plan = generate_scene(b, seed);
            assert!((0.1..=0.3).contains(&plan.lighting.brightness));
            assert_eq!(plan.lighting.noise_sigma, 8.0 / 255.0);
        }
        let day = render(&generate_scene(Bucket::IndoorDay, seed), generate_scene(Bucket::IndoorDay, seed).start)
            .unwrap()
            .0;
        let night_plan = generate_scene(Bucket::IndoorNight, seed);
        let night = render(&night_plan, night_plan.start).unwrap().0;
        let mean = |f: &sightwalk_core::RgbdFrame| f.rgb().iter().map(|&v| v as f64).sum::<f64>() / f.rgb().len() as f64;
        assert!(mean(&night) < 0.5 * mean(&day));
    }
}

#[test]
fn generation_is_deterministic_and_heights_in_range() {
    for seed in 0..200 {
        let b = Bucket::ALL[seed as usize % 6];
        let a = generate_scene(b, seed);
        assert_eq!(a, generate_scene(b, seed));
        assert!((1.4..=1.8).contains(&a.camera.height));
        a.validate().unwrap();
    }
    assert_ne!(generate_scene(Bucket::IndoorDay, 1), generate_scene(Bucket::IndoorDay, 2));
}

#[test]
fn plan_text_round_trips_exactly() {
    for seed in 0..30 {
        let plan = generate_scene(Bucket::ALL[seed as usize % 6], seed);
        let text = plan.to_json().unwrap();
        let back = ScenePlan::from_json(&text).unwrap();
        assert_eq!(back, plan);
        assert_eq!(back.to_json().unwrap(), text);
    }
    assert!(ScenePlan::from_json("{\"seed\": 1}").is_err());
}

#[test]
fn pose_inside_obstacle_is_rejected() {
    let mut plan = empty_corridor(12.0, 5.5);
    plan.obstacles.push(Obstacle {
        footprint: oriented_rect(Vec2::new(5.0, 0.0), 1.0, 1.0, 0.0),
        height: 1.0,
        class: 5,
        kind: ObstacleKind::Normal,
        color: [100, 100, 100],
        motion: None,
    });
    assert!(matches!(
        render(&plan, Pose::new(5.1, 0.1, 0.0)),
        Err(Error::PoseInsideObstacle { .. })
    ));
    render(&plan, Pose::new(3.0, 0.0, 0.0)).unwrap();
}

#[test]
fn low_obstacle_height_bound_is_conservative() {
    for range in [1.0, 2.0, 3.5, 6.0] {
        for cam in [1.4, 1.6, 1.8] {
            let h = low_height(cam, range);
            let ray = (range * range + cam * cam).sqrt();
            assert!(h * ray / cam <= 0.03 && h > 0.0 && h <= 0.15);
        }
    }
}
