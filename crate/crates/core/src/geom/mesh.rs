use std::collections::HashMap;

use super::{Aabb, Vec3};
use crate::error::{Error, Result};

/// Triangle surface mesh with counter-clockwise (outward) winding.
///
/// Meshes are immutable once built. A deformed pose is a new vertex array
/// sharing the same triangle list, see [`TriMesh::with_vertices`].
#[derive(Clone, Debug, PartialEq)]
pub struct TriMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[u32; 3]>,
}

impl TriMesh {
    /// Validates indices, rejects zero-area triangles and repeated directed
    /// edges (which signal inconsistent winding or non-manifold topology).
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[u32; 3]>) -> Result<Self> {
        let n = vertices.len();
        let mut directed: HashMap<(u32, u32), usize> = HashMap::with_capacity(triangles.len() * 3);
        for (ti, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v as usize >= n {
                    return Err(Error::IndexOutOfRange {
                        element: ti,
                        index: v as usize,
                        len: n,
                    });
                }
            }
            let [a, b, c] = tri.map(|i| vertices[i as usize]);
            let longest = (b - a).norm().max((c - b).norm()).max((a - c).norm());
            if (b - a).cross(&(c - a)).norm() <= 1e-12 * longest * longest {
                return Err(Error::DegenerateTriangle { index: ti });
            }
            for k in 0..3 {
                let e = (tri[k], tri[(k + 1) % 3]);
                if directed.insert(e, ti).is_some() {
                    return Err(Error::Orientation { a: e.0, b: e.1 });
                }
            }
        }
        Ok(Self {
            vertices,
            triangles,
        })
    }

    /// Same topology, new vertex positions (a deformed pose). Only the vertex
    /// count is checked.
    pub fn with_vertices(&self, vertices: Vec<Vec3>) -> Result<Self> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::DimensionMismatch {
                what: "pose vertex count",
                expected: self.vertices.len(),
                found: vertices.len(),
            });
        }
        Ok(Self {
            vertices,
            triangles: self.triangles.clone(),
        })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn corners(&self, tri: usize) -> [Vec3; 3] {
        self.triangles[tri].map(|i| self.vertices[i as usize])
    }

    /// Unit geometric normal.
    pub fn face_normal(&self, tri: usize) -> Vec3 {
        let [a, b, c] = self.corners(tri);
        (b - a).cross(&(c - a)).normalize()
    }

    pub fn area(&self, tri: usize) -> f64 {
        let [a, b, c] = self.corners(tri);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    /// Bounding box of the referenced vertices.
    pub fn bounds(&self) -> Aabb {
        let mut b = Aabb::empty();
        for tri in &self.triangles {
            for &v in tri {
                b.grow(&self.vertices[v as usize]);
            }
        }
        b
    }

    pub fn mean_edge_length(&self) -> f64 {
        if self.triangles.is_empty() {
            return 0.0;
        }
        let total: f64 = (0..self.triangles.len())
            .map(|t| {
                let [a, b, c] = self.corners(t);
                (b - a).norm() + (c - b).norm() + (a - c).norm()
            })
            .sum();
        total / (3 * self.triangles.len()) as f64
    }

    /// Enclosed volume (divergence theorem); positive for outward winding.
    pub fn signed_volume(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| {
                let [a, b, c] = self.corners(t);
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }
}

/// Tetrahedral mesh with positively oriented elements.
#[derive(Clone, Debug, PartialEq)]
pub struct TetMesh {
    vertices: Vec<Vec3>,
    tets: Vec<[u32; 4]>,
}

pub(crate) fn signed_tet_volume(a: &Vec3, b: &Vec3, c: &Vec3, d: &Vec3) -> f64 {
    (b - a).cross(&(c - a)).dot(&(d - a)) / 6.0
}

impl TetMesh {
    /// Validates indices, rejects zero-volume elements and flips negatively
    /// oriented ones.
    pub fn new(vertices: Vec<Vec3>, mut tets: Vec<[u32; 4]>) -> Result<Self> {
        let n = vertices.len();
        for (ti, tet) in tets.iter_mut().enumerate() {
            for &v in tet.iter() {
                if v as usize >= n {
                    return Err(Error::IndexOutOfRange {
                        element: ti,
                        index: v as usize,
                        len: n,
                    });
                }
            }
            let p = tet.map(|i| vertices[i as usize]);
            let mut longest: f64 = 0.0;
            for i in 0..4 {
                for j in i + 1..4 {
                    longest = longest.max((p[i] - p[j]).norm());
                }
            }
            let vol = signed_tet_volume(&p[0], &p[1], &p[2], &p[3]);
            if vol.abs() <= 1e-12 * longest.powi(3) {
                return Err(Error::DegenerateTet { index: ti });
            }
            if vol < 0.0 {
                tet.swap(2, 3);
            }
        }
        Ok(Self { vertices, tets })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn tets(&self) -> &[[u32; 4]] {
        &self.tets
    }

    pub fn volume(&self, tet: usize) -> f64 {
        let [a, b, c, d] = self.tets[tet].map(|i| self.vertices[i as usize]);
        signed_tet_volume(&a, &b, &c, &d)
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.tets.len()).map(|t| self.volume(t)).sum()
    }

    /// Number of elements with non-positive volume when the vertices are
    /// replaced by `pose`.
    pub fn inverted_count(&self, pose: &[Vec3]) -> usize {
        self.tets
            .iter()
            .filter(|t| {
                let [a, b, c, d] = t.map(|i| pose[i as usize]);
                signed_tet_volume(&a, &b, &c, &d) <= 0.0
            })
            .count()
    }
}

/// Outward faces of a positively oriented tet `(a, b, c, d)`.
fn outward_faces(t: &[u32; 4]) -> [[u32; 3]; 4] {
    let [a, b, c, d] = *t;
    [[b, c, d], [a, d, c], [a, b, d], [a, c, b]]
}

/// Boundary of a tet mesh: faces used by exactly one element, wound outward.
///
/// The result shares the tet mesh's vertex array (interior vertices are kept
/// but unreferenced), so a deformed tet pose maps directly onto the surface.
pub fn surface_of(mesh: &TetMesh) -> Result<TriMesh> {
    let mut counts: HashMap<[u32; 3], u32> = HashMap::with_capacity(mesh.tets.len() * 4);
    for tet in &mesh.tets {
        for f in outward_faces(tet) {
            let mut key = f;
            key.sort_unstable();
            *counts.entry(key).or_insert(0) += 1;
        }
    }
    let mut triangles = Vec::new();
    for tet in &mesh.tets {
        for f in outward_faces(tet) {
            let mut key = f;
            key.sort_unstable();
            if counts[&key] == 1 {
                triangles.push(f);
            }
        }
    }
    TriMesh::new(mesh.vertices.clone(), triangles)
}
