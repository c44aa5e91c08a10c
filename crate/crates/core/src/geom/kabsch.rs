use nalgebra::{Matrix3, SVD};

use super::{RigidTransform, Vec3};
use crate::error::{Error, Result};

fn centroid(points: &[Vec3], weights: Option<&[f64]>) -> Vec3 {
    match weights {
        None => points.iter().sum::<Vec3>() / points.len() as f64,
        Some(w) => points.iter().zip(w).map(|(p, w)| p * *w).sum::<Vec3>() / w.iter().sum::<f64>(),
    }
}

/// Least-squares proper rigid transform taking `moving` onto `target`:
/// minimizes `Σ ‖R·moving_j + t − target_j‖²` with `det R = +1`.
pub fn kabsch_align(moving: &[Vec3], target: &[Vec3]) -> Result<RigidTransform> {
    align(moving, target, None)
}

/// [`kabsch_align`] minimizing `Σ w_j ‖R·moving_j + t − target_j‖²`.
///
/// With lumped vertex masses as weights, a displacement that is
/// mass-orthogonal to the rigid modes yields exactly the identity.
pub fn kabsch_align_weighted(moving: &[Vec3], target: &[Vec3], weights: &[f64]) -> Result<RigidTransform> {
    if weights.len() != target.len() {
        return Err(Error::DimensionMismatch {
            what: "weight count",
            expected: target.len(),
            found: weights.len(),
        });
    }
    if weights.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::InvalidArgument("alignment weights must be positive".into()));
    }
    align(moving, target, Some(weights))
}

fn align(moving: &[Vec3], target: &[Vec3], weights: Option<&[f64]>) -> Result<RigidTransform> {
    if moving.len() != target.len() {
        return Err(Error::DimensionMismatch {
            what: "point set size",
            expected: target.len(),
            found: moving.len(),
        });
    }
    if moving.len() < 3 {
        return Err(Error::DegenerateAlignment);
    }
    let cm = centroid(moving, weights);
    let ct = centroid(target, weights);
    let mut h = Matrix3::zeros();
    for (j, (m, t)) in moving.iter().zip(target).enumerate() {
        let w = weights.map_or(1.0, |w| w[j]);
        h += (m - cm) * (t - ct).transpose() * w;
    }
    let svd = SVD::new(h, true, true);
    let s = svd.singular_values;
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::DegenerateAlignment),
    };
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    if !(s[order[0]] > 0.0) || s[order[1]] <= 1e-12 * s[order[0]] {
        return Err(Error::DegenerateAlignment);
    }
    let v = v_t.transpose();
    let mut d = Matrix3::identity();
    if (v * u.transpose()).determinant() < 0.0 {
        d[(order[2], order[2])] = -1.0;
    }
    let rotation = v * d * u.transpose();
    Ok(RigidTransform {
        rotation,
        translation: ct - rotation * cm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cloud() -> Vec<Vec3> {
        vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.2, 0.0),
            Vec3::new(0.1, 1.3, 0.4),
            Vec3::new(-0.5, 0.3, 1.1),
            Vec3::new(0.7, -0.8, 0.6),
            Vec3::new(0.3, 0.9, -1.2),
        ]
    }

    fn residual(x: &RigidTransform, moving: &[Vec3], target: &[Vec3]) -> f64 {
        moving
            .iter()
            .zip(target)
            .map(|(m, t)| (x.apply_point(m) - t).norm_squared())
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn identity_for_equal_sets() {
        let p = cloud();
        let x = kabsch_align(&p, &p).unwrap();
        assert!((x.rotation - Matrix3::identity()).abs().max() < 1e-12);
        assert!(x.translation.norm() < 1e-12);
    }

    #[test]
    fn recovers_rotation_about_z() {
        let target = cloud();
        let m = RigidTransform::from_axis_angle(Vec3::z(), 30f64.to_radians(), Vec3::new(1.0, 2.0, 3.0));
        let moving: Vec<_> = target.iter().map(|p| m.apply_point(p)).collect();
        let x = kabsch_align(&moving, &target).unwrap();
        assert!(residual(&x, &moving, &target) <= 1e-9);
    }

    #[test]
    fn mirrored_input_still_gives_proper_rotation() {
        let target = cloud();
        let mirrored: Vec<_> = target.iter().map(|p| Vec3::new(-p.x, p.y, p.z)).collect();
        let x = kabsch_align(&mirrored, &target).unwrap();
        assert!((x.rotation.determinant() - 1.0).abs() < 1e-9);
        assert!(residual(&x, &mirrored, &target) > 1e-3);
    }

    #[test]
    fn collinear_points_rejected() {
        let line: Vec<_> = (0..5).map(|i| Vec3::new(i as f64, 2.0 * i as f64, 0.0)).collect();
        assert!(matches!(kabsch_align(&line, &line), Err(Error::DegenerateAlignment)));
        assert!(kabsch_align(&line[..2], &line[..2]).is_err());
    }

    #[test]
    fn weighted_ignores_mass_orthogonal_displacement() {
        let target = cloud();
        let w = [1.0, 2.0, 0.5, 3.0, 1.5, 0.7];
        let total: f64 = w.iter().sum();
        let c = centroid(&target, Some(&w));
        // remove the weighted translation and infinitesimal rotation parts
        let raw: Vec<Vec3> = target.iter().map(|p| Vec3::new(0.03 * p.y * p.y, -0.02 * p.x, 0.05 * p.z * p.x)).collect();
        let mean = raw.iter().zip(&w).map(|(d, w)| d * *w).sum::<Vec3>() / total;
        let mut inertia = Matrix3::zeros();
        let mut torque = Vec3::zeros();
        for ((p, d), w) in target.iter().zip(&raw).zip(&w) {
            let r = p - c;
            inertia += (Matrix3::identity() * r.norm_squared() - r * r.transpose()) * *w;
            torque += r.cross(&(d - mean)) * *w;
        }
        let omega = inertia.try_inverse().unwrap() * torque;
        let moving: Vec<Vec3> = target
            .iter()
            .zip(&raw)
            .map(|(p, d)| p + d - mean - omega.cross(&(p - c)))
            .collect();
        let x = kabsch_align_weighted(&moving, &target, &w).unwrap();
        assert!((x.rotation - Matrix3::identity()).abs().max() < 1e-12);
        assert!(x.translation.norm() < 1e-12);
        assert!(kabsch_align(&moving, &target).unwrap().rotation != Matrix3::identity());
    }

    proptest! {
        #[test]
        fn recovers_random_rigid_motion(
            ax in -1.0f64..1.0, ay in -1.0f64..1.0, az in -1.0f64..1.0,
            angle in -3.1f64..3.1,
            tx in -10.0f64..10.0, ty in -10.0f64..10.0, tz in -10.0f64..10.0,
        ) {
            prop_assume!(ax * ax + ay * ay + az * az > 1e-2);
            let target = cloud();
            let m = RigidTransform::from_axis_angle(Vec3::new(ax, ay, az), angle, Vec3::new(tx, ty, tz));
            let moving: Vec<_> = target.iter().map(|p| m.apply_point(p)).collect();
            let x = kabsch_align(&moving, &target).unwrap();
            prop_assert!(residual(&x, &moving, &target) <= 1e-9);
            let inv = m.inverse();
            prop_assert!((x.rotation - inv.rotation).abs().max() <= 1e-9);
            prop_assert!((x.translation - inv.translation).norm() <= 1e-9);
        }
    }
}
