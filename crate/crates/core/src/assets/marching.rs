use std::collections::HashMap;

use crate::error::Result;
use crate::geom::{Aabb, TriMesh, Vec3};

/// Kuhn decomposition of the unit cube: six tets sharing the main diagonal.
/// Corner `c` is at offset `(c & 1, (c >> 1) & 1, (c >> 2) & 1)`.
const KUHN: [[usize; 4]; 6] = [
    [0, 1, 3, 7],
    [0, 1, 5, 7],
    [0, 2, 3, 7],
    [0, 2, 6, 7],
    [0, 4, 5, 7],
    [0, 4, 6, 7],
];

/// Marching tetrahedra over a regular grid with cell size `h` covering
/// `bounds`. `field` is negative inside. Produces a closed, outward-wound
/// manifold surface as long as the zero set stays inside `bounds`.
pub fn polygonize(field: impl Fn(&Vec3) -> f64, bounds: &Aabb, h: f64) -> Result<TriMesh> {
    let dims = bounds.extent().map(|e| (e / h).ceil() as usize + 1);
    let (nx, ny, nz) = (dims.x + 1, dims.y + 1, dims.z + 1);
    let id = |i: usize, j: usize, k: usize| (k * ny + j) * nx + i;
    let pos = |i: usize, j: usize, k: usize| bounds.min + Vec3::new(i as f64, j as f64, k as f64) * h;
    let mut values = vec![0.0; nx * ny * nz];
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let mut v = field(&pos(i, j, k));
                if v.abs() < 1e-9 * h {
                    v = 1e-9 * h;
                }
                values[id(i, j, k)] = v;
            }
        }
    }

    let mut vertices = Vec::new();
    let mut edge_vertex: HashMap<(usize, usize), u32> = HashMap::new();
    let mut triangles: Vec<[u32; 3]> = Vec::new();
    let mut crossing = |a: (usize, Vec3), b: (usize, Vec3), vertices: &mut Vec<Vec3>| -> u32 {
        let key = (a.0.min(b.0), a.0.max(b.0));
        *edge_vertex.entry(key).or_insert_with(|| {
            let (fa, fb) = (values[a.0], values[b.0]);
            let t = (fa / (fa - fb)).clamp(1e-3, 1.0 - 1e-3);
            vertices.push(a.1 + (b.1 - a.1) * t);
            (vertices.len() - 1) as u32
        })
    };

    for k in 0..nz - 1 {
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                let corner = |c: usize| {
                    let (di, dj, dk) = (c & 1, (c >> 1) & 1, (c >> 2) & 1);
                    (id(i + di, j + dj, k + dk), pos(i + di, j + dj, k + dk))
                };
                for tet in KUHN {
                    let nodes = tet.map(corner);
                    let inside: Vec<_> = nodes.iter().copied().filter(|n| values[n.0] < 0.0).collect();
                    let outside: Vec<_> = nodes.iter().copied().filter(|n| values[n.0] >= 0.0).collect();
                    let polygon: Vec<u32> = match inside.len() {
                        1 | 3 => {
                            let (lone, others) = if inside.len() == 1 {
                                (inside[0], &outside)
                            } else {
                                (outside[0], &inside)
                            };
                            others.iter().map(|&o| crossing(lone, o, &mut vertices)).collect()
                        }
                        2 => vec![
                            crossing(inside[0], outside[0], &mut vertices),
                            crossing(inside[0], outside[1], &mut vertices),
                            crossing(inside[1], outside[1], &mut vertices),
                            crossing(inside[1], outside[0], &mut vertices),
                        ],
                        _ => continue,
                    };
                    let cin = inside.iter().map(|n| n.1).sum::<Vec3>() / inside.len() as f64;
                    let cout = outside.iter().map(|n| n.1).sum::<Vec3>() / outside.len() as f64;
                    let outward = cout - cin;
                    let mut emit = |a: u32, b: u32, c: u32| {
                        let (pa, pb, pc) = (vertices[a as usize], vertices[b as usize], vertices[c as usize]);
                        if (pb - pa).cross(&(pc - pa)).dot(&outward) >= 0.0 {
                            triangles.push([a, b, c]);
                        } else {
                            triangles.push([a, c, b]);
                        }
                    };
                    emit(polygon[0], polygon[1], polygon[2]);
                    if polygon.len() == 4 {
                        emit(polygon[0], polygon[2], polygon[3]);
                    }
                }
            }
        }
    }
    TriMesh::new(vertices, triangles)
}
