//! Planar geometry on the ground plane (x forward along the corridor, y left).

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }

    pub fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }

    pub fn scale(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn mirrored(self) -> Vec2 {
        Vec2::new(self.x, -self.y)
    }

    pub fn from_angle(theta: f64) -> Vec2 {
        let (s, c) = sin_cos_odd(theta);
        Vec2::new(c, s)
    }
}

/// `sin_cos` that is exactly odd in its argument, so mirrored scenes stay
/// bit-identical under reflection.
pub fn sin_cos_odd(theta: f64) -> (f64, f64) {
    let (s, c) = theta.abs().sin_cos();
    (if theta < 0.0 { -s } else { s }, c)
}

/// Agent pose: ground position and heading (radians, counter-clockwise from +x).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self { x, y, heading }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn mirrored(&self) -> Pose {
        Pose::new(self.x, -self.y, -self.heading)
    }

    /// Point `ahead` metres forward and `left` metres to the left of the pose.
    pub fn local_to_world(&self, ahead: f64, left: f64) -> Vec2 {
        let f = Vec2::from_angle(self.heading);
        let l = Vec2::new(-f.y, f.x);
        self.position().add(f.scale(ahead)).add(l.scale(left))
    }
}

/// Ray parameter where the 2-D ray `o + t·d` crosses segment `a..b`, if it does.
///
/// `d` need not be unit length; `t` is in units of `d`.
pub fn ray_segment(o: Vec2, d: Vec2, a: Vec2, b: Vec2) -> Option<f64> {
    let e = b.sub(a);
    let denom = d.cross(e);
    if denom == 0.0 {
        return None;
    }
    let ao = a.sub(o);
    let t = ao.cross(e) / denom;
    let s = ao.cross(d) / denom;
    if (0.0..=1.0).contains(&s) && t > 0.0 {
        Some(t)
    } else {
        None
    }
}

/// Containment test for a convex polygon of either orientation (boundary counts as inside).
pub fn convex_contains(poly: &[Vec2], p: Vec2) -> bool {
    let mut pos = false;
    let mut neg = false;
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let c = b.sub(a).cross(p.sub(a));
        if c > 0.0 {
            pos = true;
        } else if c < 0.0 {
            neg = true;
        }
        if pos && neg {
            return false;
        }
    }
    true
}

/// Closest point on segment `a..b` to `p`.
pub fn closest_on_segment(p: Vec2, a: Vec2, b: Vec2) -> Vec2 {
    let e = b.sub(a);
    let len2 = e.dot(e);
    if len2 == 0.0 {
        return a;
    }
    let t = (p.sub(a).dot(e) / len2).clamp(0.0, 1.0);
    a.add(e.scale(t))
}

/// Closest boundary point of a polygon to `p`.
pub fn closest_on_polygon(poly: &[Vec2], p: Vec2) -> Vec2 {
    let mut best = poly[0];
    let mut best_d = f64::INFINITY;
    for i in 0..poly.len() {
        let q = closest_on_segment(p, poly[i], poly[(i + 1) % poly.len()]);
        let d = q.sub(p).norm();
        if d < best_d {
            best_d = d;
            best = q;
        }
    }
    best
}

/// Axis-aligned rectangle rotated by `angle` about its centre.
pub fn oriented_rect(center: Vec2, width: f64, depth: f64, angle: f64) -> Vec<Vec2> {
    let u = Vec2::from_angle(angle);
    let v = Vec2::new(-u.y, u.x);
    let (hw, hd) = (width / 2.0, depth / 2.0);
    // CCW when angle = 0: depth along u (x), width along v (y)
    [(-hd, -hw), (hd, -hw), (hd, hw), (-hd, hw)]
        .iter()
        .map(|&(a, b)| center.add(u.scale(a)).add(v.scale(b)))
        .collect()
}

pub fn polygon_centroid(poly: &[Vec2]) -> Vec2 {
    let n = poly.len() as f64;
    let s = poly.iter().fold(Vec2::default(), |acc, p| acc.add(*p));
    s.scale(1.0 / n)
}

/// Whether two convex polygons overlap (separating-axis test).
pub fn convex_overlap(a: &[Vec2], b: &[Vec2]) -> bool {
    for poly in [a, b] {
        for i in 0..poly.len() {
            let e = poly[(i + 1) % poly.len()].sub(poly[i]);
            let axis = Vec2::new(-e.y, e.x);
            let (amin, amax) = project(a, axis);
            let (bmin, bmax) = project(b, axis);
            if amax < bmin || bmax < amin {
                return false;
            }
        }
    }
    true
}

fn project(poly: &[Vec2], axis: Vec2) -> (f64, f64) {
    poly.iter()
        .map(|p| p.dot(axis))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ray_hits_segment() {
        let t = ray_segment(
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(3.0, -1.0),
            Vec2::new(3.0, 1.0),
        );
        assert_eq!(t, Some(3.0));
        assert_eq!(
            ray_segment(
                Vec2::new(0.0, 0.0),
                Vec2::new(-1.0, 0.0),
                Vec2::new(3.0, -1.0),
                Vec2::new(3.0, 1.0)
            ),
            None
        );
    }

    #[test]
    fn containment_either_orientation() {
        let sq = oriented_rect(Vec2::new(1.0, 1.0), 2.0, 2.0, 0.3);
        assert!(convex_contains(&sq, Vec2::new(1.0, 1.0)));
        assert!(!convex_contains(&sq, Vec2::new(3.0, 1.0)));
        let rev: Vec<_> = sq.iter().rev().copied().collect();
        assert!(convex_contains(&rev, Vec2::new(1.2, 0.9)));
    }

    #[test]
    fn overlap() {
        let a = oriented_rect(Vec2::new(0.0, 0.0), 1.0, 1.0, 0.0);
        let b = oriented_rect(Vec2::new(0.9, 0.0), 1.0, 1.0, 0.7);
        let c = oriented_rect(Vec2::new(3.0, 0.0), 1.0, 1.0, 0.0);
        assert!(convex_overlap(&a, &b));
        assert!(!convex_overlap(&a, &c));
    }

    #[test]
    fn odd_trig() {
        for t in [0.1, 0.7, 2.5, 1e-9] {
            let (s1, c1) = sin_cos_odd(t);
            let (s2, c2) = sin_cos_odd(-t);
            assert_eq!(s1, -s2);
            assert_eq!(c1, c2);
        }
    }

    #[test]
    fn local_frame() {
        let p = Pose::new(1.0, 2.0, std::f64::consts::FRAC_PI_2);
        let q = p.local_to_world(1.0, 0.5);
        assert!((q.x - 0.5).abs() < 1e-12 && (q.y - 3.0).abs() < 1e-12);
    }
}
