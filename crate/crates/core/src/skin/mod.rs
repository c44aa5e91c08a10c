//! Linear blend skinning, joint-angle codes and the root-frame transform.

mod format;

pub use format::{load_skin_file, parse_skin, write_skin, SkinAsset, SKIN_FORMAT_VERSION};

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geom::{axis_rotation, RigidTransform, TriMesh, Vec3};

/// Constant-DOF detection threshold (radians).
pub const DEFAULT_CONST_EPS: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c.to_ascii_lowercase() {
            'x' => Some(Axis::X),
            'y' => Some(Axis::Y),
            'z' => Some(Axis::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        ['x', 'y', 'z'][self.index()]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Joint {
    pub name: String,
    pub parent: Option<usize>,
    /// Transform relative to the parent at zero angles.
    pub rest: RigidTransform,
    /// Ordered Euler axes, applied left to right in the joint frame.
    pub axes: Vec<Axis>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Skeleton {
    joints: Vec<Joint>,
    dof_offsets: Vec<usize>,
    dof_count: usize,
}

impl Skeleton {
    pub fn new(joints: Vec<Joint>) -> Result<Self> {
        if joints.is_empty() {
            return Err(Error::Empty("skeleton"));
        }
        let mut roots = 0;
        for (i, j) in joints.iter().enumerate() {
            match j.parent {
                None => roots += 1,
                Some(p) if p >= i => {
                    return Err(Error::InvalidArgument(format!(
                        "joint `{}` appears before its parent",
                        j.name
                    )))
                }
                _ => {}
            }
            if j.axes.len() > 3 {
                return Err(Error::InvalidArgument(format!("joint `{}` has more than 3 axes", j.name)));
            }
            RigidTransform::new(j.rest.rotation, j.rest.translation)?;
            if joints[..i].iter().any(|o| o.name == j.name) {
                return Err(Error::InvalidArgument(format!("duplicate joint name `{}`", j.name)));
            }
        }
        if roots != 1 {
            return Err(Error::InvalidArgument(format!("skeleton must have exactly one root, found {roots}")));
        }
        let mut dof_offsets = Vec::with_capacity(joints.len());
        let mut dof_count = 0;
        for j in &joints {
            dof_offsets.push(dof_count);
            dof_count += j.axes.len();
        }
        Ok(Self {
            joints,
            dof_offsets,
            dof_count,
        })
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn dof_count(&self) -> usize {
        self.dof_count
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.joints.iter().position(|j| j.name == name)
    }

    /// `(joint, axis slot)` for a flat DOF index.
    pub fn dof_owner(&self, dof: usize) -> (usize, usize) {
        let j = self.dof_offsets.partition_point(|&o| o <= dof) - 1;
        (j, dof - self.dof_offsets[j])
    }

    pub fn dof_name(&self, dof: usize) -> String {
        let (j, slot) = self.dof_owner(dof);
        format!("{}.{}", self.joints[j].name, self.joints[j].axes[slot].as_char())
    }

    pub(crate) fn check_angles(&self, angles: &[f64]) -> Result<()> {
        if angles.len() != self.dof_count {
            return Err(Error::DimensionMismatch {
                what: "joint angle vector",
                expected: self.dof_count,
                found: angles.len(),
            });
        }
        Ok(())
    }

    /// Forward kinematics: world (root-frame) transform of every joint.
    pub fn world_transforms(&self, angles: &[f64]) -> Result<Vec<RigidTransform>> {
        self.check_angles(angles)?;
        let mut world: Vec<RigidTransform> = Vec::with_capacity(self.joints.len());
        for (i, j) in self.joints.iter().enumerate() {
            let mut local = j.rest;
            for (slot, axis) in j.axes.iter().enumerate() {
                let r = axis_rotation(axis.index(), angles[self.dof_offsets[i] + slot]);
                local.rotation *= r;
            }
            let w = match j.parent {
                Some(p) => world[p].compose(&local),
                None => local,
            };
            world.push(w);
        }
        Ok(world)
    }

    /// Per-joint skinning transforms `W_j(θ) ∘ W_j(0)⁻¹`.
    pub fn skinning_transforms(&self, angles: &[f64]) -> Result<Vec<RigidTransform>> {
        let rest = self.world_transforms(&vec![0.0; self.dof_count])?;
        let posed = self.world_transforms(angles)?;
        Ok(posed.iter().zip(&rest).map(|(p, r)| p.compose(&r.inverse())).collect())
    }
}

/// Up to four `(joint, weight)` influences per vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct SkinWeights {
    influences: Vec<Vec<(u32, f64)>>,
}

impl SkinWeights {
    pub fn new(influences: Vec<Vec<(u32, f64)>>, joint_count: usize) -> Result<Self> {
        for (v, inf) in influences.iter().enumerate() {
            if inf.is_empty() || inf.len() > 4 {
                return Err(Error::InvalidArgument(format!(
                    "vertex {v} has {} influences (1 to 4 allowed)",
                    inf.len()
                )));
            }
            let mut sum = 0.0;
            for &(j, w) in inf {
                if j as usize >= joint_count || !(w >= 0.0) {
                    return Err(Error::InvalidArgument(format!("vertex {v}: bad influence ({j}, {w})")));
                }
                sum += w;
            }
            if (sum - 1.0).abs() > 1e-6 {
                return Err(Error::InvalidArgument(format!("vertex {v}: weights sum to {sum}")));
            }
        }
        Ok(Self { influences })
    }

    pub fn influences(&self) -> &[Vec<(u32, f64)>] {
        &self.influences
    }

    pub fn len(&self) -> usize {
        self.influences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.influences.is_empty()
    }
}

/// `v' = Σ_j w_j · S_j · v` with `S_j` the skinning transform of joint `j`.
pub fn lbs_deform(rest: &TriMesh, weights: &SkinWeights, skel: &Skeleton, angles: &[f64]) -> Result<TriMesh> {
    if weights.len() != rest.vertices().len() {
        return Err(Error::DimensionMismatch {
            what: "skin weight count",
            expected: rest.vertices().len(),
            found: weights.len(),
        });
    }
    let xf = skel.skinning_transforms(angles)?;
    let posed = rest
        .vertices()
        .iter()
        .zip(weights.influences())
        .map(|(v, inf)| {
            inf.iter()
                .fold(Vec3::zeros(), |acc, &(j, w)| acc + xf[j as usize].apply_point(v) * w)
        })
        .collect();
    rest.with_vertices(posed)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnimationClip {
    pub name: String,
    pub frame_rate: f64,
    frames: Vec<Vec<f64>>,
}

impl AnimationClip {
    pub fn new(name: impl Into<String>, frame_rate: f64, frames: Vec<Vec<f64>>) -> Result<Self> {
        let name = name.into();
        if let Some(first) = frames.first() {
            for (i, f) in frames.iter().enumerate() {
                if f.len() != first.len() {
                    return Err(Error::DimensionMismatch {
                        what: "clip frame",
                        expected: first.len(),
                        found: f.len(),
                    });
                }
                if f.iter().any(|a| !a.is_finite()) {
                    return Err(Error::InvalidArgument(format!("clip `{name}` frame {i} has non-finite angles")));
                }
            }
        }
        Ok(Self {
            name,
            frame_rate,
            frames,
        })
    }

    pub fn frames(&self) -> &[Vec<f64>] {
        &self.frames
    }
}

/// Which joint-angle DOFs enter the network code.
#[derive(Clone, Debug, PartialEq)]
pub struct AngleCodeMap {
    /// Flat DOF indices of the code entries, ascending.
    pub kept: Vec<usize>,
    /// `(joint, axis slot)` for each kept DOF.
    pub kept_dofs: Vec<(usize, usize)>,
    pub excluded_joints: Vec<String>,
    /// Dropped DOFs and their value in the first frame.
    pub constant_values: Vec<(usize, f64)>,
    pub dof_count: usize,
}

impl AngleCodeMap {
    pub fn code_dim(&self) -> usize {
        self.kept.len()
    }
}

/// Drops DOFs of excluded joints and DOFs whose range over the union of all
/// frames is at most `eps`.
pub fn build_angle_code_map(
    skel: &Skeleton,
    clips: &[AnimationClip],
    excluded: &[&str],
    eps: f64,
) -> Result<AngleCodeMap> {
    let frames: Vec<&Vec<f64>> = clips.iter().flat_map(|c| c.frames()).collect();
    if frames.is_empty() {
        return Err(Error::Empty("animation frames"));
    }
    for f in &frames {
        skel.check_angles(f)?;
    }
    let mut excluded_idx = Vec::new();
    for name in excluded {
        excluded_idx.push(
            skel.joint_index(name)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown joint `{name}`")))?,
        );
    }
    let mut kept = Vec::new();
    let mut constant_values = Vec::new();
    for dof in 0..skel.dof_count() {
        let (joint, _) = skel.dof_owner(dof);
        let (lo, hi) = frames
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), f| (lo.min(f[dof]), hi.max(f[dof])));
        if excluded_idx.contains(&joint) || hi - lo <= eps {
            constant_values.push((dof, frames[0][dof]));
        } else {
            kept.push(dof);
        }
    }
    if kept.is_empty() {
        return Err(Error::InvalidArgument("every DOF is constant or excluded: empty code".into()));
    }
    Ok(AngleCodeMap {
        kept_dofs: kept.iter().map(|&d| skel.dof_owner(d)).collect(),
        kept,
        excluded_joints: excluded.iter().map(|s| s.to_string()).collect(),
        constant_values,
        dof_count: skel.dof_count(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SkinCode {
    pub z: Vec<f64>,
    /// Code entries outside `[-1, 1]`.
    pub out_of_range: Vec<usize>,
}

/// Kept angles scaled by `1/π`.
pub fn encode_skin(angles: &[f64], map: &AngleCodeMap) -> Result<SkinCode> {
    if angles.len() != map.dof_count {
        return Err(Error::DimensionMismatch {
            what: "joint angle vector",
            expected: map.dof_count,
            found: angles.len(),
        });
    }
    let z: Vec<f64> = map.kept.iter().map(|&d| angles[d] / PI).collect();
    let out_of_range: Vec<usize> = z
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > 1.0)
        .map(|(i, _)| i)
        .collect();
    if !out_of_range.is_empty() {
        log::warn!("{} joint-angle code entries outside [-1, 1]", out_of_range.len());
    }
    Ok(SkinCode { z, out_of_range })
}

pub fn world_to_root(points: &[Vec3], root_world: &RigidTransform) -> Vec<Vec3> {
    let inv = root_world.inverse();
    points.iter().map(|p| inv.apply_point(p)).collect()
}

pub fn root_to_world(points: &[Vec3], root_world: &RigidTransform) -> Vec<Vec3> {
    points.iter().map(|p| root_world.apply_point(p)).collect()
}

/// Normals only rotate.
pub fn root_normals_to_world(normals: &[Vec3], root_world: &RigidTransform) -> Vec<Vec3> {
    normals.iter().map(|n| root_world.apply_vector(n)).collect()
}
