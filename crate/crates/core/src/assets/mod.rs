//! Procedural fixtures so the whole pipeline runs without external assets:
//! cubes, icospheres, a layered tetrahedral ball with surface bumps, and a
//! skinned capsule-chain character with synthetic animation clips.

mod character;
mod marching;

pub use character::{capsule_character, synthetic_clips, CharacterAsset, EXCLUDED_JOINTS};
pub use marching::polygonize;

use std::collections::HashMap;

use crate::dataset::PoseSample;
use crate::geom::{TetMesh, TriMesh, Vec3};

/// Axis-aligned cube `[-h, h]^3`, 8 vertices and 12 outward triangles.
pub fn cube(half: f64) -> TriMesh {
    let v: Vec<Vec3> = (0..8)
        .map(|i| {
            Vec3::new(
                if i & 1 == 1 { half } else { -half },
                if i & 2 == 2 { half } else { -half },
                if i & 4 == 4 { half } else { -half },
            )
        })
        .collect();
    let t = vec![
        [0, 2, 3],
        [0, 3, 1],
        [4, 5, 7],
        [4, 7, 6],
        [0, 1, 5],
        [0, 5, 4],
        [1, 3, 7],
        [1, 7, 5],
        [3, 2, 6],
        [3, 6, 7],
        [2, 0, 4],
        [2, 4, 6],
    ];
    TriMesh::new(v, t).expect("cube fixture is valid")
}

/// The unit cube split into five tetrahedra (one central, four corners).
pub fn five_tet_cube() -> TetMesh {
    let v: Vec<Vec3> = (0..8)
        .map(|i| Vec3::new((i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64))
        .collect();
    let tets = vec![[1, 2, 4, 7], [0, 1, 2, 4], [3, 1, 2, 7], [5, 1, 4, 7], [6, 2, 4, 7]];
    TetMesh::new(v, tets).expect("five-tet cube is valid")
}

fn icosphere_directions(subdivisions: u32) -> (Vec<Vec3>, Vec<[u32; 3]>) {
    let g = (1.0 + 5f64.sqrt()) / 2.0;
    let mut v: Vec<Vec3> = [
        (-1.0, g, 0.0),
        (1.0, g, 0.0),
        (-1.0, -g, 0.0),
        (1.0, -g, 0.0),
        (0.0, -1.0, g),
        (0.0, 1.0, g),
        (0.0, -1.0, -g),
        (0.0, 1.0, -g),
        (g, 0.0, -1.0),
        (g, 0.0, 1.0),
        (-g, 0.0, -1.0),
        (-g, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
    let mut f: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut mid: HashMap<(u32, u32), u32> = HashMap::new();
        let mut midpoint = |a: u32, b: u32, v: &mut Vec<Vec3>| -> u32 {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                v.push(((v[a as usize] + v[b as usize]) * 0.5).normalize());
                (v.len() - 1) as u32
            })
        };
        let mut next = Vec::with_capacity(f.len() * 4);
        for &[a, b, c] in &f {
            let ab = midpoint(a, b, &mut v);
            let bc = midpoint(b, c, &mut v);
            let ca = midpoint(c, a, &mut v);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        f = next;
    }
    (v, f)
}

/// Icosphere with vertices on the sphere of `radius` (inscribed polyhedron).
pub fn icosphere(radius: f64, subdivisions: u32) -> TriMesh {
    let (v, f) = icosphere_directions(subdivisions);
    TriMesh::new(v.into_iter().map(|d| d * radius).collect(), f).expect("icosphere is valid")
}

/// Origin-centred icospheres coded by their radius: the toy shape family.
pub fn sphere_family(radii: &[f64], subdivisions: u32) -> Vec<PoseSample> {
    radii
        .iter()
        .map(|&r| PoseSample {
            surface: icosphere(r, subdivisions),
            code: vec![r],
        })
        .collect()
}

/// Smooth radial bump profile used by the FEM fixtures: a unit sphere with
/// `bumps` raised caps of relative height `height`.
#[derive(Clone, Debug)]
pub struct BumpProfile {
    pub radius: f64,
    pub centers: Vec<Vec3>,
    pub height: f64,
    pub width: f64,
}

impl BumpProfile {
    pub fn new(radius: f64, bumps: usize, height: f64) -> Self {
        // Fibonacci-sphere placement gives well spread, deterministic caps.
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        let centers = (0..bumps)
            .map(|i| {
                let y = 1.0 - 2.0 * (i as f64 + 0.5) / bumps as f64;
                let r = (1.0 - y * y).sqrt();
                let th = golden * i as f64;
                Vec3::new(r * th.cos(), y, r * th.sin())
            })
            .collect();
        Self {
            radius,
            centers,
            height,
            width: 0.35,
        }
    }

    pub fn radius_along(&self, dir: &Vec3) -> f64 {
        let bump: f64 = self
            .centers
            .iter()
            .map(|c| {
                let ang = dir.dot(c).clamp(-1.0, 1.0).acos();
                (-(ang / self.width).powi(2)).exp()
            })
            .sum();
        self.radius * (1.0 + self.height * bump)
    }
}

/// Star-shaped tetrahedral ball: concentric shells over an icosphere
/// triangulation, center pyramids plus prisms split into three tets with a
/// global-index diagonal rule so neighbouring prisms conform.
///
/// Node count is `1 + layers * V` where `V` is the icosphere vertex count
/// (162, 642, 2562 for 2, 3, 4 subdivisions).
pub fn tet_ball(profile: &BumpProfile, subdivisions: u32, layers: usize) -> TetMesh {
    assert!(layers >= 1);
    let (dirs, faces) = icosphere_directions(subdivisions);
    let nv = dirs.len() as u32;
    let mut vertices = vec![Vec3::zeros()];
    // Shell spacing is biased outward so the surface layer is not too thin.
    for l in 1..=layers {
        let frac = (l as f64 / layers as f64).powf(0.75);
        for d in &dirs {
            vertices.push(d * profile.radius_along(d) * frac);
        }
    }
    let node = |layer: usize, v: u32| -> u32 { 1 + (layer as u32 - 1) * nv + v };
    let mut tets = Vec::with_capacity(faces.len() * (1 + 3 * (layers - 1)));
    for f in &faces {
        tets.push([0, node(1, f[0]), node(1, f[1]), node(1, f[2])]);
    }
    for l in 1..layers {
        for f in &faces {
            let mut s = *f;
            s.sort_unstable();
            let b = s.map(|v| node(l, v));
            let t = s.map(|v| node(l + 1, v));
            tets.push([b[0], b[1], b[2], t[2]]);
            tets.push([b[0], b[1], t[1], t[2]]);
            tets.push([b[0], t[0], t[1], t[2]]);
        }
    }
    TetMesh::new(vertices, tets).expect("tet ball is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{surface_of, Pseudonormals};

    #[test]
    fn cube_and_icosphere_are_closed_and_outward() {
        let c = cube(1.0);
        assert!((c.signed_volume() - 8.0).abs() < 1e-12);
        Pseudonormals::new(&c).unwrap();
        let s = icosphere(1.0, 3);
        assert_eq!(s.triangle_count(), 1280);
        assert!(s.signed_volume() > 4.0 && s.signed_volume() < 4.0 * std::f64::consts::PI / 3.0);
        Pseudonormals::new(&s).unwrap();
    }

    #[test]
    fn five_tet_cube_boundary_by_face_hashing() {
        let m = five_tet_cube();
        assert!((m.total_volume() - 1.0).abs() < 1e-14);
        // brute force: count each sorted face over all tets, keep singletons
        let mut faces: Vec<[u32; 3]> = Vec::new();
        for t in m.tets() {
            for skip in 0..4 {
                let mut f: Vec<u32> = (0..4).filter(|&i| i != skip).map(|i| t[i]).collect();
                f.sort_unstable();
                faces.push([f[0], f[1], f[2]]);
            }
        }
        let singles = faces.iter().filter(|f| faces.iter().filter(|g| g == f).count() == 1).count();
        assert_eq!(singles, 12);
        let s = surface_of(&m).unwrap();
        assert_eq!(s.triangle_count(), 12);
        assert!((s.signed_volume() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn tet_ball_surface_matches_shell() {
        let p = BumpProfile::new(1.0, 6, 0.15);
        let m = tet_ball(&p, 2, 3);
        assert_eq!(m.vertices().len(), 1 + 3 * 162);
        let s = surface_of(&m).unwrap();
        assert_eq!(s.triangle_count(), 320);
        Pseudonormals::new(&s).unwrap();
        assert!((s.signed_volume() - m.total_volume()).abs() < 1e-10);
    }
}
