use rayon::prelude::*;

use crate::geom::{ray_triangle_intersect, Ray, TriMesh, Vec3};

/// Triangles per parallel work unit.
const SCAN_RANGE: usize = 1024;

fn better(a: Option<(f64, usize)>, b: Option<(f64, usize)>) -> Option<(f64, usize)> {
    match (a, b) {
        (Some(x), Some(y)) => Some(if (y.0, y.1) < (x.0, x.1) { y } else { x }),
        (x, None) => x,
        (None, y) => y,
    }
}

fn scan(ray: &Ray, mesh: &TriMesh, range: std::ops::Range<usize>) -> Option<(f64, usize)> {
    let mut best = None;
    for t in range {
        let [a, b, c] = mesh.corners(t);
        if let Some(hit) = ray_triangle_intersect(ray, &a, &b, &c) {
            if hit.t >= 0.0 {
                best = better(best, Some((hit.t, t)));
            }
        }
    }
    best
}

/// First triangle hit by the ray from `point` along `normal`, ties going to
/// the lower index. Scans fixed triangle ranges in parallel.
pub fn resolve_triangle(point: &Vec3, normal: &Vec3, surface: &TriMesh) -> Option<usize> {
    let ray = Ray::new(*point, *normal).ok()?;
    let n = surface.triangle_count();
    (0..n.div_ceil(SCAN_RANGE))
        .into_par_iter()
        .map(|r| scan(&ray, surface, r * SCAN_RANGE..((r + 1) * SCAN_RANGE).min(n)))
        .reduce(|| None, better)
        .map(|(_, t)| t)
}

/// Single-threaded reference for [`resolve_triangle`].
pub fn resolve_triangle_serial(point: &Vec3, normal: &Vec3, surface: &TriMesh) -> Option<usize> {
    let ray = Ray::new(*point, *normal).ok()?;
    scan(&ray, surface, 0..surface.triangle_count()).map(|(_, t)| t)
}
