//! Runtime queries: encode the current pose, evaluate the batched network,
//! and return world-space distances, normals and, for FEM, triangle IDs.

mod triangle;

pub use triangle::{resolve_triangle, resolve_triangle_serial};

use crate::distance::MeshSdf;
use crate::error::{Error, Result};
use crate::geom::{RigidTransform, TriMesh, Vec3};
use crate::modes::{encode_fem, ModalBasis};
use crate::net::{Checkpoint, Mlp};
use crate::dataset::Normalization;
use crate::skin::{encode_skin, AngleCodeMap, Skeleton};

/// Normalized code entries beyond this magnitude trigger a warning.
pub const CODE_WARN_LIMIT: f64 = 1.5;
/// Input gradients shorter than this give no normal.
pub const DEGENERATE_GRADIENT: f64 = 1e-8;

#[derive(Clone, Debug)]
pub enum ColliderEncoder {
    Fem { basis: ModalBasis, rest: Vec<Vec3>, surface: TriMesh },
    Skin { map: AngleCodeMap, skeleton: Skeleton },
    /// Codes are passed in directly.
    Generic,
}

/// The current pose, in the form the collider's encoder expects.
#[derive(Clone, Copy, Debug)]
pub enum PoseRef<'a> {
    Fem(&'a [Vec3]),
    Skin { angles: &'a [f64], root_world: RigidTransform },
    Code(&'a [f64]),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CollisionFlags {
    pub colliding: bool,
    pub degenerate_normal: bool,
    pub no_triangle_hit: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CollisionResult {
    /// World units, negative when penetrating.
    pub distance: f64,
    /// Unit outward direction in the world frame.
    pub normal: Option<Vec3>,
    pub triangle: Option<usize>,
    pub flags: CollisionFlags,
}

/// A pose reduced to what the network needs: the normalized code, the
/// world-to-model transform and, for FEM, the current aligned surface.
struct Prepared {
    code: Vec<f32>,
    to_model: RigidTransform,
    surface: Option<TriMesh>,
}

#[derive(Clone, Debug)]
pub struct NeuralCollider {
    net: Mlp<f32>,
    normalization: Normalization,
    encoder: ColliderEncoder,
    /// Falls back to the nearest triangle by exact distance when the ray misses.
    pub triangle_fallback: bool,
}

impl NeuralCollider {
    pub fn new(checkpoint: Checkpoint, encoder: ColliderEncoder) -> Result<Self> {
        let m = checkpoint.code_dim();
        match &encoder {
            ColliderEncoder::Fem { basis, rest, surface } => {
                checkpoint.expect_code_dim(basis.mode_count())?;
                if basis.vertex_count() != rest.len() || surface.vertices().len() != rest.len() {
                    return Err(Error::DimensionMismatch {
                        what: "rest vertex count",
                        expected: basis.vertex_count(),
                        found: rest.len(),
                    });
                }
            }
            ColliderEncoder::Skin { map, skeleton } => {
                checkpoint.expect_code_dim(map.code_dim())?;
                if map.dof_count != skeleton.dof_count() {
                    return Err(Error::DimensionMismatch {
                        what: "skeleton DOF count",
                        expected: map.dof_count,
                        found: skeleton.dof_count(),
                    });
                }
            }
            ColliderEncoder::Generic => {}
        }
        log::debug!("collider with {m}-dimensional code");
        Ok(Self {
            net: checkpoint.net,
            normalization: checkpoint.normalization,
            encoder,
            triangle_fallback: false,
        })
    }

    pub fn net(&self) -> &Mlp<f32> {
        &self.net
    }

    pub fn normalization(&self) -> &Normalization {
        &self.normalization
    }

    pub fn encoder(&self) -> &ColliderEncoder {
        &self.encoder
    }

    fn prepare(&self, pose: PoseRef<'_>, want_surface: bool) -> Result<Prepared> {
        let (raw, to_model, surface) = match (&self.encoder, pose) {
            (ColliderEncoder::Fem { basis, rest, surface }, PoseRef::Fem(x)) => {
                let (z, align) = encode_fem(x, rest, basis)?;
                let current = if want_surface {
                    Some(surface.with_vertices(x.iter().map(|p| align.apply_point(p)).collect())?)
                } else {
                    None
                };
                (z, align, current)
            }
            (ColliderEncoder::Skin { map, skeleton }, PoseRef::Skin { angles, root_world }) => {
                skeleton.check_angles(angles)?;
                (encode_skin(angles, map)?.z, root_world.inverse(), None)
            }
            (ColliderEncoder::Generic, PoseRef::Code(z)) => (z.to_vec(), RigidTransform::identity(), None),
            _ => return Err(Error::InvalidArgument("pose kind does not match the collider's encoder".into())),
        };
        let zn = self.normalization.normalize_code(&raw)?;
        let outside = zn.iter().filter(|v| v.abs() > CODE_WARN_LIMIT).count();
        if outside > 0 {
            log::warn!("{outside} normalized code entries outside ±{CODE_WARN_LIMIT}; extrapolating");
        }
        Ok(Prepared {
            code: zn.iter().map(|&v| v as f32).collect(),
            to_model,
            surface,
        })
    }

    fn batch(&self, prep: &Prepared, points: &[Vec3]) -> Vec<f32> {
        let n = points.len();
        let dim = 3 + prep.code.len();
        let mut x = vec![0.0f32; dim * n];
        for (j, p) in points.iter().enumerate() {
            let q = self.normalization.normalize_point(&prep.to_model.apply_point(p));
            x[j] = q.x as f32;
            x[n + j] = q.y as f32;
            x[2 * n + j] = q.z as f32;
        }
        for (k, &z) in prep.code.iter().enumerate() {
            x[(3 + k) * n..(4 + k) * n].fill(z);
        }
        x
    }

    /// Query points in the network's normalized input frame for this pose.
    pub fn normalized_points(&self, pose: PoseRef<'_>, points: &[Vec3]) -> Result<Vec<Vec3>> {
        let prep = self.prepare(pose, false)?;
        Ok(points
            .iter()
            .map(|p| self.normalization.normalize_point(&prep.to_model.apply_point(p)))
            .collect())
    }

    /// Distances only: encode plus one batched forward pass.
    pub fn distances(&self, pose: PoseRef<'_>, points: &[Vec3]) -> Result<Vec<f64>> {
        let prep = self.prepare(pose, false)?;
        let out = self.net.forward_batch(&self.batch(&prep, points), points.len())?;
        Ok(out.iter().map(|&d| self.normalization.denormalize_distance(d as f64)).collect())
    }

    /// Full query with normals and, when asked and the encoder is FEM,
    /// triangle IDs resolved on the current aligned surface.
    pub fn query(&self, pose: PoseRef<'_>, points: &[Vec3], want_triangles: bool) -> Result<Vec<CollisionResult>> {
        let want_triangles = want_triangles && matches!(self.encoder, ColliderEncoder::Fem { .. });
        let prep = self.prepare(pose, want_triangles)?;
        let n = points.len();
        let (out, grad) = self.net.input_gradient_batch(&self.batch(&prep, points), n)?;
        let oracle = match (&prep.surface, self.triangle_fallback) {
            (Some(s), true) => Some(MeshSdf::new(s)?),
            _ => None,
        };
        let back = prep.to_model.inverse();
        Ok((0..n)
            .map(|j| {
                let distance = self.normalization.denormalize_distance(out[j] as f64);
                let g = Vec3::new(grad[j] as f64, grad[n + j] as f64, grad[2 * n + j] as f64);
                let len = g.norm();
                let local = (len >= DEGENERATE_GRADIENT).then(|| g / len);
                let mut flags = CollisionFlags {
                    colliding: distance < 0.0,
                    degenerate_normal: local.is_none(),
                    no_triangle_hit: false,
                };
                let mut triangle = None;
                if let (Some(surface), Some(nl)) = (&prep.surface, local) {
                    let q = prep.to_model.apply_point(&points[j]);
                    triangle = resolve_triangle(&q, &nl, surface);
                    if triangle.is_none() {
                        flags.no_triangle_hit = true;
                        triangle = oracle.as_ref().map(|o| o.signed_distance(&q).triangle);
                    }
                }
                CollisionResult {
                    distance,
                    normal: local.map(|v| back.apply_vector(&v)),
                    triangle,
                    flags,
                }
            })
            .collect())
    }

    pub fn query_fem(&self, x: &[Vec3], points: &[Vec3], want_triangles: bool) -> Result<Vec<CollisionResult>> {
        self.query(PoseRef::Fem(x), points, want_triangles)
    }

    pub fn query_skin(&self, angles: &[f64], root_world: &RigidTransform, points: &[Vec3]) -> Result<Vec<CollisionResult>> {
        self.query(
            PoseRef::Skin {
                angles,
                root_world: *root_world,
            },
            points,
            false,
        )
    }
}
