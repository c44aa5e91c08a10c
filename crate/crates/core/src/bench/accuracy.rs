use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::sampling::{surface_point, AreaTable};
use crate::distance::MeshSdf;
use crate::error::{Error, Result};
use crate::geom::{TriMesh, Vec3};

#[derive(Clone, Debug, PartialEq)]
pub struct AccuracyReport {
    /// Evaluation points kept inside the band.
    pub count: usize,
    pub mae: f64,
    /// Fraction in `[0, 1]`.
    pub sign_agreement: f64,
    /// Degrees; over points where both normals exist.
    pub mean_angle: f64,
    pub p95_angle: f64,
    pub normal_count: usize,
}

/// Predicted distance and optional unit normal for each point.
pub type Prediction = (f64, Option<Vec3>);

/// Near-surface evaluation points: area-weighted surface points pushed along
/// the face normal by `U(−band, band)`, kept when the oracle `|d| ≤ band`.
pub fn near_surface_points(sdf: &MeshSdf, band: f64, count: usize, rng: &mut ChaCha8Rng) -> Vec<(Vec3, f64, Option<Vec3>)> {
    let mesh = sdf.mesh();
    let table = AreaTable::new(mesh);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let (p, t) = surface_point(mesh, &table, rng);
        let q = p + mesh.face_normal(t) * rng.random_range(-band..=band);
        let r = sdf.signed_distance(&q);
        if r.distance.abs() <= band {
            out.push((q, r.distance, r.gradient(&q)));
        }
    }
    out
}

/// Compares `predict(pose, points)` with the exact distance to each pose's
/// world-space surface over near-surface points.
pub fn evaluate_accuracy<F>(surfaces: &[TriMesh], mut predict: F, band: f64, points_per_pose: usize, seed: u64) -> Result<AccuracyReport>
where
    F: FnMut(usize, &[Vec3]) -> Result<Vec<Prediction>>,
{
    if !(band > 0.0) {
        return Err(Error::InvalidArgument("band must be positive".into()));
    }
    let (mut count, mut abs_sum, mut agree) = (0usize, 0.0, 0usize);
    let mut angles = Vec::new();
    for (i, surface) in surfaces.iter().enumerate() {
        let sdf = MeshSdf::new(surface)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let pts = near_surface_points(&sdf, band, points_per_pose, &mut rng);
        let q: Vec<Vec3> = pts.iter().map(|p| p.0).collect();
        let pred = predict(i, &q)?;
        if pred.len() != q.len() {
            return Err(Error::DimensionMismatch {
                what: "prediction count",
                expected: q.len(),
                found: pred.len(),
            });
        }
        for ((_, d, g), (pd, pn)) in pts.iter().zip(&pred) {
            count += 1;
            abs_sum += (pd - d).abs();
            if (*pd < 0.0) == (*d < 0.0) {
                agree += 1;
            }
            if let (Some(g), Some(n)) = (g, pn) {
                angles.push(g.dot(n).clamp(-1.0, 1.0).acos().to_degrees());
            }
        }
    }
    if count == 0 {
        return Err(Error::Empty("near-surface evaluation points"));
    }
    angles.sort_by(f64::total_cmp);
    let (mean_angle, p95_angle) = if angles.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        let idx = ((0.95 * angles.len() as f64).ceil() as usize).clamp(1, angles.len()) - 1;
        (angles.iter().sum::<f64>() / angles.len() as f64, angles[idx])
    };
    Ok(AccuracyReport {
        count,
        mae: abs_sum / count as f64,
        sign_agreement: agree as f64 / count as f64,
        mean_angle,
        p95_angle,
        normal_count: angles.len(),
    })
}
