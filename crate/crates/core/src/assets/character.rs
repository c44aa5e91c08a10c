use std::f64::consts::PI;

use super::polygonize;
use crate::error::Result;
use crate::geom::{Aabb, RigidTransform, TriMesh, Vec3};
use crate::skin::{AnimationClip, Axis, Joint, Skeleton, SkinWeights};

/// Skinned capsule-chain biped in its root (pelvis) frame.
#[derive(Clone, Debug)]
pub struct CharacterAsset {
    pub mesh: TriMesh,
    pub skeleton: Skeleton,
    pub weights: SkinWeights,
}

/// Joints that carry no cloth contact and are excluded from the code.
pub const EXCLUDED_JOINTS: [&str; 5] = ["head", "hand_l", "hand_r", "foot_l", "foot_r"];

struct Part {
    name: String,
    parent: Option<String>,
    /// Joint origin in the rest root frame.
    origin: Vec3,
    axes: &'static [Axis],
    /// Bone segment end and capsule radius.
    tip: Vec3,
    radius: f64,
}

fn parts() -> Vec<Part> {
    use Axis::*;
    let p = |name: &str, parent: Option<&str>, origin: [f64; 3], axes, tip: [f64; 3], radius| Part {
        name: name.to_string(),
        parent: parent.map(str::to_string),
        origin: Vec3::from(origin),
        axes,
        tip: Vec3::from(tip),
        radius,
    };
    let mut v = vec![
        p("pelvis", None, [0.0, 0.0, 0.0], &[][..], [0.0, 0.12, 0.0], 0.15),
        p("spine", Some("pelvis"), [0.0, 0.12, 0.0], &[X, Y, Z][..], [0.0, 0.5, 0.0], 0.16),
        p("head", Some("spine"), [0.0, 0.55, 0.0], &[X, Y][..], [0.0, 0.72, 0.0], 0.11),
    ];
    for (s, side) in [("l", 1.0), ("r", -1.0)] {
        let name = |n: &str| format!("{n}_{s}");
        v.push(p(&name("shoulder"), Some("spine"), [0.2 * side, 0.42, 0.0], &[X, Y, Z][..], [0.48 * side, 0.42, 0.0], 0.075));
        v.push(p(&name("elbow"), Some(name("shoulder").as_str()), [0.48 * side, 0.42, 0.0], &[Y, Z][..], [0.74 * side, 0.42, 0.0], 0.068));
        v.push(p(&name("hand"), Some(name("elbow").as_str()), [0.74 * side, 0.42, 0.0], &[X, Z][..], [0.82 * side, 0.42, 0.0], 0.06));
        v.push(p(&name("hip"), Some("pelvis"), [0.12 * side, -0.05, 0.0], &[X, Y, Z][..], [0.12 * side, -0.46, 0.0], 0.095));
        v.push(p(&name("knee"), Some(name("hip").as_str()), [0.12 * side, -0.46, 0.0], &[X][..], [0.12 * side, -0.84, 0.0], 0.085));
        v.push(p(&name("foot"), Some(name("knee").as_str()), [0.12 * side, -0.84, 0.0], &[X][..], [0.12 * side, -0.88, 0.08], 0.065));
    }
    v
}

fn segment_distance(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Polynomial smooth minimum.
fn smin(a: f64, b: f64, k: f64) -> f64 {
    let h = (0.5 + 0.5 * (b - a) / k).clamp(0.0, 1.0);
    b + (a - b) * h - k * h * (1.0 - h)
}

/// Builds the character with marching-tetrahedra cell size `cell`
/// (0.03 gives about 24,000 triangles).
pub fn capsule_character(cell: f64) -> Result<CharacterAsset> {
    let parts = parts();
    let mut joints: Vec<Joint> = Vec::new();
    for part in &parts {
        let parent = part.parent.as_ref().map(|n| joints.iter().position(|j| &j.name == n).expect("parent listed first"));
        let parent_origin = parent.map_or(Vec3::zeros(), |p| parts[p].origin);
        joints.push(Joint {
            name: part.name.clone(),
            parent,
            rest: RigidTransform::from_translation(part.origin - parent_origin),
            axes: part.axes.to_vec(),
        });
    }
    let skeleton = Skeleton::new(joints)?;

    let field = |q: &Vec3| {
        parts
            .iter()
            .map(|p| segment_distance(q, &p.origin, &p.tip) - p.radius)
            .fold(f64::INFINITY, |acc, d| if acc.is_infinite() { d } else { smin(acc, d, 0.04) })
    };
    let bounds = Aabb::from_points(&[Vec3::new(-0.95, -1.0, -0.25), Vec3::new(0.95, 0.9, 0.25)]);
    let mesh = polygonize(field, &bounds, cell)?;

    let influences = mesh
        .vertices()
        .iter()
        .map(|v| {
            let mut w: Vec<(u32, f64)> = parts
                .iter()
                .enumerate()
                .map(|(j, p)| {
                    let d = (segment_distance(v, &p.origin, &p.tip) - p.radius).max(0.0) + 0.02;
                    (j as u32, d.powi(-4))
                })
                .collect();
            w.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            w.truncate(4);
            let total: f64 = w.iter().map(|x| x.1).sum();
            for x in &mut w {
                x.1 /= total;
            }
            w
        })
        .collect();
    let weights = SkinWeights::new(influences, parts.len())?;
    Ok(CharacterAsset {
        mesh,
        skeleton,
        weights,
    })
}

/// Two deterministic clips ("walk" and "reach"). Some DOFs never move
/// (`shoulder_*.y`, `hip_*.z`) so constant-DOF pruning has work to do.
pub fn synthetic_clips(skel: &Skeleton) -> Vec<AnimationClip> {
    let dof = |name: &str| (0..skel.dof_count()).find(|&d| skel.dof_name(d) == name).expect("known dof");
    let set = |f: &mut Vec<f64>, name: &str, v: f64| f[dof(name)] = v;
    let walk = (0..48)
        .map(|i| {
            let ph = 2.0 * PI * i as f64 / 48.0;
            let mut f = vec![0.0; skel.dof_count()];
            set(&mut f, "hip_l.x", 0.45 * ph.sin());
            set(&mut f, "hip_r.x", -0.45 * ph.sin());
            set(&mut f, "knee_l.x", 0.5 * (1.0 - ph.cos()) * 0.5);
            set(&mut f, "knee_r.x", 0.5 * (1.0 + ph.cos()) * 0.5);
            set(&mut f, "hip_l.y", 0.1 * (2.0 * ph).sin());
            set(&mut f, "hip_r.y", -0.1 * (2.0 * ph).sin());
            set(&mut f, "shoulder_l.z", -0.9 + 0.15 * ph.sin());
            set(&mut f, "shoulder_r.z", 0.9 + 0.15 * ph.sin());
            set(&mut f, "shoulder_l.x", -0.3 * ph.sin());
            set(&mut f, "shoulder_r.x", 0.3 * ph.sin());
            set(&mut f, "elbow_l.y", 0.25 + 0.15 * ph.cos());
            set(&mut f, "elbow_r.y", -0.25 - 0.15 * ph.cos());
            set(&mut f, "spine.y", 0.12 * ph.sin());
            set(&mut f, "spine.x", 0.05 * (2.0 * ph).cos());
            set(&mut f, "head.x", 0.1 * ph.cos());
            set(&mut f, "foot_l.x", 0.2 * ph.sin());
            set(&mut f, "foot_r.x", -0.2 * ph.sin());
            f
        })
        .collect();
    let reach = (0..32)
        .map(|i| {
            let s = (PI * i as f64 / 31.0).sin();
            let mut f = vec![0.0; skel.dof_count()];
            set(&mut f, "shoulder_l.z", 0.6 * s);
            set(&mut f, "shoulder_r.z", -0.2 * s);
            set(&mut f, "shoulder_l.x", -0.5 * s);
            set(&mut f, "elbow_l.z", 0.6 * s);
            set(&mut f, "elbow_r.z", -0.3 * s);
            set(&mut f, "spine.z", -0.15 * s);
            set(&mut f, "spine.x", 0.2 * s);
            set(&mut f, "hip_l.x", -0.2 * s);
            set(&mut f, "knee_l.x", 0.3 * s);
            set(&mut f, "hand_l.x", 0.8 * s);
            set(&mut f, "hand_r.z", 0.4 * s);
            set(&mut f, "head.y", 0.3 * s);
            f
        })
        .collect();
    vec![
        AnimationClip::new("walk", 30.0, walk).expect("valid clip"),
        AnimationClip::new("reach", 30.0, reach).expect("valid clip"),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Pseudonormals;
    use crate::skin::{build_angle_code_map, lbs_deform, DEFAULT_CONST_EPS};

    #[test]
    fn character_is_closed_and_codes_are_desk_scale() {
        let c = capsule_character(0.04).unwrap();
        Pseudonormals::new(&c.mesh).unwrap();
        assert!(c.mesh.signed_volume() > 0.0);
        let clips = synthetic_clips(&c.skeleton);
        let map = build_angle_code_map(&c.skeleton, &clips, &EXCLUDED_JOINTS, DEFAULT_CONST_EPS).unwrap();
        assert!((14..=20).contains(&map.code_dim()), "{}", map.code_dim());
        for f in clips.iter().flat_map(|c| c.frames()).step_by(7) {
            let posed = lbs_deform(&c.mesh, &c.weights, &c.skeleton, f).unwrap();
            Pseudonormals::new(&posed).unwrap();
        }
        // partition of unity from the generator
        for inf in c.weights.influences() {
            assert!((inf.iter().map(|x| x.1).sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
