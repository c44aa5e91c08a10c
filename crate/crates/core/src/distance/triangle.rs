use crate::geom::Vec3;

/// Closest feature of a triangle `(a, b, c)`. Edge `k` joins corner `k` and
/// corner `(k + 1) % 3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Feature {
    Vertex(u8),
    Edge(u8),
    Face,
}

/// Closest point on triangle `abc` to `p` with the feature it lies on
/// (Voronoi-region walk).
pub fn closest_point_on_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> (Vec3, Feature) {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return (*a, Feature::Vertex(0));
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return (*b, Feature::Vertex(1));
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (a + ab * v, Feature::Edge(0));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return (*c, Feature::Vertex(2));
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (a + ac * w, Feature::Edge(2));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (b + (c - b) * w, Feature::Edge(1));
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (a + ab * v + ac * w, Feature::Face)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn regions() {
        let (a, b, c) = (Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0));
        let q = |x, y, z| closest_point_on_triangle(&Vec3::new(x, y, z), &a, &b, &c);
        assert_eq!(q(-1.0, -1.0, 0.5).1, Feature::Vertex(0));
        assert_eq!(q(2.0, -0.1, 0.0).1, Feature::Vertex(1));
        assert_eq!(q(-0.1, 3.0, 0.0).1, Feature::Vertex(2));
        assert_eq!(q(0.5, -1.0, 0.0), (Vec3::new(0.5, 0.0, 0.0), Feature::Edge(0)));
        assert_eq!(q(1.0, 1.0, 0.0).1, Feature::Edge(1));
        assert_eq!(q(-1.0, 0.5, 0.0).1, Feature::Edge(2));
        let (p, f) = q(0.2, 0.2, 5.0);
        assert_eq!(f, Feature::Face);
        assert!((p - Vec3::new(0.2, 0.2, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn no_sampled_point_is_closer() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut r = || Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        for _ in 0..300 {
            let (a, b, c, p) = (r(), r(), r(), r());
            let (cp, _) = closest_point_on_triangle(&p, &a, &b, &c);
            let best = (p - cp).norm();
            for i in 0..=20 {
                for j in 0..=(20 - i) {
                    let (u, v) = (i as f64 / 20.0, j as f64 / 20.0);
                    let s = a + (b - a) * u + (c - a) * v;
                    assert!((p - s).norm() >= best - 1e-12);
                }
            }
        }
    }
}
