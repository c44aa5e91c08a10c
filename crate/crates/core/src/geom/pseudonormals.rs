use std::collections::HashMap;

use super::{TriMesh, Vec3};
use crate::error::{Error, Result};

/// Angle-weighted pseudonormals for sign determination of closest-feature
/// distance queries.
///
/// Edge `k` of triangle `t` runs from corner `k` to corner `(k + 1) % 3`.
#[derive(Clone, Debug)]
pub struct Pseudonormals {
    face: Vec<Vec3>,
    edge: Vec<[Vec3; 3]>,
    vertex: Vec<Vec3>,
}

fn corner_angle(p: &Vec3, q: &Vec3, r: &Vec3) -> f64 {
    let (e1, e2) = (q - p, r - p);
    e1.cross(&e2).norm().atan2(e1.dot(&e2))
}

impl Pseudonormals {
    /// Requires a closed, consistently oriented mesh: every edge must be shared
    /// by exactly two triangles.
    pub fn new(mesh: &TriMesh) -> Result<Self> {
        let tris = mesh.triangles();
        let verts = mesh.vertices();
        let face: Vec<Vec3> = (0..tris.len()).map(|t| mesh.face_normal(t)).collect();

        let mut incident: HashMap<(u32, u32), Vec<(usize, usize)>> = HashMap::with_capacity(tris.len() * 2);
        for (t, tri) in tris.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                incident.entry((a.min(b), a.max(b))).or_default().push((t, k));
            }
        }
        let mut edge = vec![[Vec3::zeros(); 3]; tris.len()];
        let mut keys: Vec<_> = incident.keys().copied().collect();
        keys.sort_unstable();
        for key in keys {
            let uses = &incident[&key];
            if uses.len() != 2 {
                return Err(Error::NonManifoldEdge {
                    a: key.0,
                    b: key.1,
                    count: uses.len(),
                });
            }
            let n = (face[uses[0].0] + face[uses[1].0]).normalize();
            for &(t, k) in uses {
                edge[t][k] = n;
            }
        }

        let mut vertex = vec![Vec3::zeros(); verts.len()];
        for (t, tri) in tris.iter().enumerate() {
            let p = tri.map(|i| verts[i as usize]);
            for k in 0..3 {
                let angle = corner_angle(&p[k], &p[(k + 1) % 3], &p[(k + 2) % 3]);
                vertex[tri[k] as usize] += face[t] * angle;
            }
        }
        for n in &mut vertex {
            let len = n.norm();
            if len > 0.0 {
                *n /= len;
            }
        }
        Ok(Self { face, edge, vertex })
    }

    pub fn face(&self, tri: usize) -> &Vec3 {
        &self.face[tri]
    }

    pub fn edge(&self, tri: usize, local: usize) -> &Vec3 {
        &self.edge[tri][local]
    }

    /// Zero for vertices not referenced by any triangle.
    pub fn vertex(&self, v: usize) -> &Vec3 {
        &self.vertex[v]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assets;

    #[test]
    fn cube_corner_is_diagonal() {
        let cube = assets::cube(1.0);
        let pn = Pseudonormals::new(&cube).unwrap();
        let corner = cube
            .vertices()
            .iter()
            .position(|v| v.x > 0.0 && v.y > 0.0 && v.z > 0.0)
            .unwrap();
        let want = Vec3::new(1.0, 1.0, 1.0) / 3f64.sqrt();
        assert!((pn.vertex(corner) - want).norm() < 1e-12);
    }

    #[test]
    fn face_pseudonormal_is_geometric_normal() {
        let s = assets::icosphere(1.0, 2);
        let pn = Pseudonormals::new(&s).unwrap();
        for t in 0..s.triangle_count() {
            assert_eq!(*pn.face(t), s.face_normal(t));
        }
    }

    #[test]
    fn icosphere_vertex_normals_are_radial() {
        let s = assets::icosphere(1.0, 3);
        let pn = Pseudonormals::new(&s).unwrap();
        for (i, v) in s.vertices().iter().enumerate() {
            assert!((pn.vertex(i) - v.normalize()).norm() < 1e-2);
        }
    }

    #[test]
    fn open_mesh_names_boundary_edge() {
        let m = TriMesh::new(
            vec![Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)],
            vec![[0, 1, 2]],
        )
        .unwrap();
        assert!(matches!(
            Pseudonormals::new(&m),
            Err(Error::NonManifoldEdge { a: 0, b: 1, count: 1 })
        ));
    }
}
