use super::{Ray, Vec3};

/// Barycentric slack for containment.
pub const BARY_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RayHit {
    pub t: f64,
    /// Weight of `b`.
    pub u: f64,
    /// Weight of `c`.
    pub v: f64,
}

/// Möller–Trumbore ray/triangle test. Hits with `t < 0` are misses; rays
/// parallel to the triangle plane never hit.
pub fn ray_triangle_intersect(ray: &Ray, a: &Vec3, b: &Vec3, c: &Vec3) -> Option<RayHit> {
    let e1 = b - a;
    let e2 = c - a;
    let dir = ray.direction();
    let p = dir.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() <= 1e-14 * e1.norm() * e2.norm() {
        return None;
    }
    let inv = 1.0 / det;
    let s = ray.origin - a;
    let u = s.dot(&p) * inv;
    if !(-BARY_EPS..=1.0 + BARY_EPS).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let v = dir.dot(&q) * inv;
    if v < -BARY_EPS || u + v > 1.0 + BARY_EPS {
        return None;
    }
    let t = e2.dot(&q) * inv;
    (t >= 0.0).then_some(RayHit { t, u, v })
}
