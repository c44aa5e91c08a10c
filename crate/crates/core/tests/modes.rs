use nalgebra::{DMatrix, Matrix3};
use ncd_core::assets::{tet_ball, BumpProfile};
use ncd_core::geom::{RigidTransform, TetMesh, Vec3};
use ncd_core::modes::{
    assemble_fem_system, compute_linear_modes_with, encode_fem, EigenMethod, MaterialParams, ModalBasis,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;

fn fixture() -> &'static (TetMesh, ModalBasis) {
    static F: OnceLock<(TetMesh, ModalBasis)> = OnceLock::new();
    F.get_or_init(|| {
        let mesh = tet_ball(&BumpProfile::new(1.0, 8, 0.15), 2, 2);
        let sys = assemble_fem_system(&mesh, &MaterialParams::default()).unwrap();
        let basis = compute_linear_modes_with(&sys, 32, EigenMethod::Lanczos).unwrap().basis;
        (mesh, basis)
    })
}

fn random_rotation(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
    let axis = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    RigidTransform::from_axis_angle(axis, rng.random_range(-3.0..3.0), Vec3::zeros()).rotation
}

fn displaced(rest: &[Vec3], basis: &ModalBasis, c: &[f64]) -> Vec<Vec3> {
    let d = basis.reconstruct(c).unwrap();
    rest.iter().zip(d).map(|(r, d)| r + d).collect()
}

/// Coefficients scaled so the largest vertex displacement is `frac` of the bbox diagonal.
fn scaled_code(rng: &mut ChaCha8Rng, mesh: &TetMesh, basis: &ModalBasis, frac: f64) -> Vec<f64> {
    let c: Vec<f64> = (0..basis.mode_count()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let d = basis.reconstruct(&c).unwrap();
    let max = d.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let diag = ncd_core::geom::Aabb::from_points(mesh.vertices()).diagonal();
    c.iter().map(|v| v * frac * diag / max).collect()
}

#[test]
fn rest_pose_encodes_to_zero() {
    let (mesh, basis) = fixture();
    let (z, align) = encode_fem(mesh.vertices(), mesh.vertices(), basis).unwrap();
    assert!(z.iter().all(|v| v.abs() < 1e-12));
    assert!((align.rotation - Matrix3::identity()).abs().max() < 1e-12);
    assert!(align.translation.norm() < 1e-12);
}

#[test]
fn pure_rigid_motion_has_no_code() {
    let (mesh, basis) = fixture();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rest = mesh.vertices();
    let scale = rest.iter().map(|v| v.norm_squared()).sum::<f64>().sqrt();
    for _ in 0..5 {
        let t = RigidTransform::new(random_rotation(&mut rng), Vec3::new(0.3, -2.0, 1.0)).unwrap();
        let x: Vec<Vec3> = rest.iter().map(|p| t.apply_point(p)).collect();
        let (z, _) = encode_fem(&x, rest, basis).unwrap();
        assert!(z.iter().map(|v| v * v).sum::<f64>().sqrt() <= 1e-8 * scale);
    }
}

#[test]
fn modal_round_trip() {
    let (mesh, basis) = fixture();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..5 {
        let c = scaled_code(&mut rng, mesh, basis, 0.01);
        let (z, _) = encode_fem(&displaced(mesh.vertices(), basis, &c), mesh.vertices(), basis).unwrap();
        let err = z.iter().zip(&c).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let cn = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(err <= 1e-8 * cn, "{err} vs {cn}");
    }
}

#[test]
fn reconstruction_error_shrinks_with_mode_count() {
    let (mesh, basis) = fixture();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let rest = mesh.vertices();
    let x: Vec<Vec3> = rest
        .iter()
        .map(|p| p + Vec3::new((2.0 * p.y).sin(), 0.5 * p.x * p.z, (p.x + p.z).cos()) * 0.02)
        .map(|p| p + Vec3::new(rng.random_range(-1e-3..1e-3), 0.0, 0.0))
        .collect();
    let mut last = f64::INFINITY;
    for m in [8, 16, 32] {
        let b = basis.truncated(m).unwrap();
        let (z, align) = encode_fem(&x, rest, &b).unwrap();
        let rec = b.reconstruct(&z).unwrap();
        let err: f64 = x
            .iter()
            .zip(rest)
            .zip(&rec)
            .map(|((p, r), u)| (align.apply_point(p) - r - u).norm_squared())
            .sum::<f64>()
            .sqrt();
        assert!(err <= last + 1e-12);
        last = err;
    }
}

#[test]
fn basis_file_round_trip_and_corruption() {
    let (_, basis) = fixture();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("basis.bin");
    basis.save(&path).unwrap();
    let back = ModalBasis::load(&path).unwrap();
    assert_eq!(&back, basis);
    let bytes = basis.to_bytes();
    assert!(ModalBasis::from_bytes(&bytes[..bytes.len() - 3]).is_err());
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(ModalBasis::from_bytes(&bad).is_err());
    let mut long = bytes;
    long.push(0);
    assert!(ModalBasis::from_bytes(&long).is_err());
}

#[test]
fn columns_are_orthonormal() {
    let (_, basis) = fixture();
    let m = basis.mode_count();
    let gram = basis.u().transpose() * basis.u();
    assert!((gram - DMatrix::identity(m, m)).abs().max() <= 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn encoding_is_rigid_invariant(seed in any::<u64>(), tx in -5.0..5.0f64, ty in -5.0..5.0f64, tz in -5.0..5.0f64) {
        let (mesh, basis) = fixture();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = scaled_code(&mut rng, mesh, basis, 0.05);
        let x = displaced(mesh.vertices(), basis, &c);
        let t = RigidTransform::new(random_rotation(&mut rng), Vec3::new(tx, ty, tz)).unwrap();
        let moved: Vec<Vec3> = x.iter().map(|p| t.apply_point(p)).collect();
        let (z0, _) = encode_fem(&x, mesh.vertices(), basis).unwrap();
        let (z1, _) = encode_fem(&moved, mesh.vertices(), basis).unwrap();
        for (a, b) in z0.iter().zip(&z1) {
            prop_assert!((a - b).abs() <= 1e-8, "{} vs {}", a, b);
        }
    }
}

