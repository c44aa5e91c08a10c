//! Exact signed distance to a closed triangle mesh: a brute-force oracle and
//! an AABB-tree accelerated query that returns the same answer.
//!
//! Closest-triangle ties are broken by the smaller triangle index in both
//! paths, so tree and brute force agree bit for bit.

mod tree;
mod triangle;

pub use tree::{build_aabb_tree, tree_signed_distance, AabbTree, Node, DEFAULT_LEAF_SIZE};
pub use triangle::{closest_point_on_triangle, Feature};

use crate::error::Result;
use crate::geom::{Pseudonormals, TriMesh, Vec3};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignedDistanceResult {
    /// Negative inside.
    pub distance: f64,
    pub closest_point: Vec3,
    pub triangle: usize,
    pub feature: Feature,
}

impl SignedDistanceResult {
    /// Unit gradient of the distance field, `None` on the surface.
    pub fn gradient(&self, q: &Vec3) -> Option<Vec3> {
        let d = q - self.closest_point;
        let n = d.norm();
        (n > 0.0).then(|| d / n * self.distance.signum())
    }
}

/// Closest-triangle candidate before signing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Closest {
    pub dist2: f64,
    pub point: Vec3,
    pub triangle: usize,
    pub feature: Feature,
}

impl Closest {
    pub(crate) const NONE: Closest = Closest {
        dist2: f64::INFINITY,
        point: Vec3::new(0.0, 0.0, 0.0),
        triangle: usize::MAX,
        feature: Feature::Face,
    };

    #[inline]
    pub(crate) fn offer(&mut self, mesh: &TriMesh, tri: usize, q: &Vec3) {
        let [a, b, c] = mesh.corners(tri);
        let (point, feature) = closest_point_on_triangle(q, &a, &b, &c);
        let dist2 = (q - point).norm_squared();
        if dist2 < self.dist2 || (dist2 == self.dist2 && tri < self.triangle) {
            *self = Closest {
                dist2,
                point,
                triangle: tri,
                feature,
            };
        }
    }

    pub(crate) fn signed(self, mesh: &TriMesh, pn: &Pseudonormals, q: &Vec3) -> SignedDistanceResult {
        let normal = match self.feature {
            Feature::Face => pn.face(self.triangle),
            Feature::Edge(k) => pn.edge(self.triangle, k as usize),
            Feature::Vertex(k) => pn.vertex(mesh.triangles()[self.triangle][k as usize] as usize),
        };
        let offset = q - self.point;
        let magnitude = offset.norm();
        let distance = if offset.dot(normal) < 0.0 { -magnitude } else { magnitude };
        SignedDistanceResult {
            distance,
            closest_point: self.point,
            triangle: self.triangle,
            feature: self.feature,
        }
    }
}

/// Linear scan over every triangle; the reference the tree is checked against.
pub fn brute_force_signed_distance(mesh: &TriMesh, pn: &Pseudonormals, q: &Vec3) -> SignedDistanceResult {
    let mut best = Closest::NONE;
    for t in 0..mesh.triangle_count() {
        best.offer(mesh, t, q);
    }
    best.signed(mesh, pn, q)
}

/// A mesh snapshot with its pseudonormals and AABB tree: everything needed to
/// answer signed distance queries for one pose.
#[derive(Clone, Debug)]
pub struct MeshSdf {
    tree: AabbTree,
    pseudonormals: Pseudonormals,
}

impl MeshSdf {
    pub fn new(mesh: &TriMesh) -> Result<Self> {
        let pseudonormals = Pseudonormals::new(mesh)?;
        let tree = build_aabb_tree(mesh)?;
        Ok(Self { tree, pseudonormals })
    }

    pub fn mesh(&self) -> &TriMesh {
        self.tree.mesh()
    }

    pub fn tree(&self) -> &AabbTree {
        &self.tree
    }

    pub fn pseudonormals(&self) -> &Pseudonormals {
        &self.pseudonormals
    }

    pub fn signed_distance(&self, q: &Vec3) -> SignedDistanceResult {
        tree_signed_distance(&self.tree, &self.pseudonormals, q)
    }

    pub fn brute_force(&self, q: &Vec3) -> SignedDistanceResult {
        brute_force_signed_distance(self.tree.mesh(), &self.pseudonormals, q)
    }
}
