use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::distance::MeshSdf;
use crate::error::{Error, Result};
use crate::geom::{Aabb, TriMesh, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleKind {
    Surface,
    Near,
    Uniform,
}

/// Relative weights of surface, near and uniform samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SampleRatio {
    pub surface: u32,
    pub near: u32,
    pub uniform: u32,
}

impl Default for SampleRatio {
    fn default() -> Self {
        Self {
            surface: 2,
            near: 2,
            uniform: 1,
        }
    }
}

impl SampleRatio {
    pub fn new(surface: u32, near: u32, uniform: u32) -> Result<Self> {
        if surface + near + uniform == 0 {
            return Err(Error::InvalidArgument("sample ratio is all zero".into()));
        }
        Ok(Self { surface, near, uniform })
    }

    /// Largest-remainder split of `k`, ties going to the earlier kind.
    pub fn split(&self, k: usize) -> [usize; 3] {
        let w = [self.surface as usize, self.near as usize, self.uniform as usize];
        let total: usize = w.iter().sum();
        let mut counts = w.map(|wi| k * wi / total);
        let mut rest = k - counts.iter().sum::<usize>();
        let mut order = [0usize, 1, 2];
        order.sort_by_key(|&i| std::cmp::Reverse(k * w[i] % total));
        for &i in order.iter().cycle() {
            if rest == 0 {
                break;
            }
            if w[i] > 0 {
                counts[i] += 1;
                rest -= 1;
            }
        }
        counts
    }
}

/// A sample position before labeling.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplePoint {
    pub q: Vec3,
    pub kind: SampleKind,
    /// Signed offset along the face normal for near samples, else 0.
    pub offset: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RawSample {
    pub q: Vec3,
    pub d: f64,
    pub kind: SampleKind,
}

/// Area-weighted triangle picker.
pub(crate) struct AreaTable {
    cumulative: Vec<f64>,
}

impl AreaTable {
    pub(crate) fn new(mesh: &TriMesh) -> Self {
        let mut acc = 0.0;
        let cumulative = (0..mesh.triangle_count())
            .map(|t| {
                acc += mesh.area(t);
                acc
            })
            .collect();
        Self { cumulative }
    }

    fn pick(&self, rng: &mut impl Rng) -> usize {
        let total = *self.cumulative.last().expect("non-empty mesh");
        let x = rng.random::<f64>() * total;
        self.cumulative.partition_point(|&c| c <= x).min(self.cumulative.len() - 1)
    }
}

pub(crate) fn surface_point(mesh: &TriMesh, table: &AreaTable, rng: &mut impl Rng) -> (Vec3, usize) {
    let t = table.pick(rng);
    let [a, b, c] = mesh.corners(t);
    let r1: f64 = rng.random::<f64>().sqrt();
    let r2: f64 = rng.random();
    (a * (1.0 - r1) + b * (r1 * (1.0 - r2)) + c * (r1 * r2), t)
}

/// Draws `k` positions split by `ratio`, ordered surface, near, uniform.
/// Near offsets are redrawn until the point falls inside `bbox`.
pub fn draw_sample_points(
    mesh: &TriMesh,
    k: usize,
    ratio: SampleRatio,
    sigma_near: f64,
    bbox: &Aabb,
    rng: &mut impl Rng,
) -> Result<Vec<SamplePoint>> {
    if mesh.triangle_count() == 0 {
        return Err(Error::Empty("surface mesh"));
    }
    if !(sigma_near > 0.0) {
        return Err(Error::InvalidArgument(format!("near-sample sigma must be positive, got {sigma_near}")));
    }
    let table = AreaTable::new(mesh);
    let normal = Normal::new(0.0, sigma_near).expect("positive sigma");
    let [ns, nn, nu] = ratio.split(k);
    let mut out = Vec::with_capacity(k);
    for _ in 0..ns {
        let (q, _) = surface_point(mesh, &table, rng);
        out.push(SamplePoint {
            q,
            kind: SampleKind::Surface,
            offset: 0.0,
        });
    }
    for _ in 0..nn {
        let (p, t) = surface_point(mesh, &table, rng);
        let n = mesh.face_normal(t);
        let mut offset = normal.sample(rng);
        for _ in 0..64 {
            if bbox.contains(&(p + n * offset)) {
                break;
            }
            offset = normal.sample(rng);
        }
        if !bbox.contains(&(p + n * offset)) {
            offset = 0.0;
        }
        out.push(SamplePoint {
            q: p + n * offset,
            kind: SampleKind::Near,
            offset,
        });
    }
    for _ in 0..nu {
        let u = Vec3::new(rng.random(), rng.random(), rng.random());
        out.push(SamplePoint {
            q: bbox.min + bbox.extent().component_mul(&u),
            kind: SampleKind::Uniform,
            offset: 0.0,
        });
    }
    Ok(out)
}

/// Draws and labels `k` samples for one pose with the tree oracle.
pub fn sample_pose_sdf(
    sdf: &MeshSdf,
    k: usize,
    ratio: SampleRatio,
    sigma_near: f64,
    bbox: &Aabb,
    rng: &mut impl Rng,
) -> Result<Vec<RawSample>> {
    if k < 5 {
        return Err(Error::InvalidArgument(format!("need at least 5 samples per pose, got {k}")));
    }
    Ok(draw_sample_points(sdf.mesh(), k, ratio, sigma_near, bbox, rng)?
        .into_iter()
        .map(|p| RawSample {
            q: p.q,
            d: sdf.signed_distance(&p.q).distance,
            kind: p.kind,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assets::cube;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ratio_split_examples() {
        let r = SampleRatio::default();
        assert_eq!(r.split(10_000), [4000, 4000, 2000]);
        assert_eq!(r.split(5), [2, 2, 1]);
        assert_eq!(r.split(7), [3, 3, 1]);
        assert_eq!(r.split(8), [3, 3, 2]);
        for k in 5..200 {
            let c = r.split(k);
            assert_eq!(c.iter().sum::<usize>(), k);
            let exact = [0.4 * k as f64, 0.4 * k as f64, 0.2 * k as f64];
            for i in 0..3 {
                assert!((c[i] as f64 - exact[i]).abs() < 1.0);
            }
        }
        assert_eq!(SampleRatio::new(1, 0, 0).unwrap().split(9), [9, 0, 0]);
    }

    #[test]
    fn surface_samples_lie_on_mesh() {
        let sdf = MeshSdf::new(&cube(1.0)).unwrap();
        let bbox = sdf.mesh().bounds().padded(0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = sample_pose_sdf(&sdf, 1000, SampleRatio::default(), 0.02, &bbox, &mut rng).unwrap();
        assert_eq!(s.len(), 1000);
        for x in s.iter().filter(|x| x.kind == SampleKind::Surface) {
            assert!(x.d.abs() <= 1e-6);
        }
        assert!(s.iter().all(|x| bbox.contains(&x.q)));
    }

    #[test]
    fn near_offsets_match_plate_distance() {
        let h = 1.0;
        let sdf = MeshSdf::new(&cube(h)).unwrap();
        let bbox = sdf.mesh().bounds().padded(0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let sigma = 0.01;
        let pts = draw_sample_points(sdf.mesh(), 5000, SampleRatio::new(0, 1, 0).unwrap(), sigma, &bbox, &mut rng).unwrap();
        let mut checked = 0;
        for p in pts {
            // recover the face the point was offset from
            let interior = (0..3).any(|axis| {
                [-1.0, 1.0].iter().any(|&sign| {
                    let on_face = p.q - Vec3::ith(axis, sign * p.offset);
                    (on_face[axis] - sign * h).abs() < 1e-9
                        && (0..3).filter(|&i| i != axis).all(|i| on_face[i].abs() <= h - p.offset.abs())
                })
            });
            if interior {
                let d = sdf.signed_distance(&p.q).distance;
                assert!((d - p.offset).abs() <= 1e-6, "{d} vs {}", p.offset);
                checked += 1;
            }
        }
        assert!(checked > 4500);
    }

    #[test]
    fn too_few_samples_rejected() {
        let sdf = MeshSdf::new(&cube(1.0)).unwrap();
        let bbox = sdf.mesh().bounds();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sample_pose_sdf(&sdf, 4, SampleRatio::default(), 0.01, &bbox, &mut rng).is_err());
    }
}
