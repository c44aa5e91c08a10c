use ncd_core::assets::{capsule_character, synthetic_clips, tet_ball, BumpProfile};
use ncd_core::bench::{
    evaluate_accuracy, levelset_slice, records_from_csv, records_to_csv, run_benchmark, BenchConfig, BenchMethod,
    FemPoseSource, PoseSource, SkinPoseSource, SlicePlane,
};
use ncd_core::collide::{ColliderEncoder, NeuralCollider, PoseRef};
use ncd_core::dataset::{fit_normalization, CodeKind, EncoderInfo};
use ncd_core::distance::MeshSdf;
use ncd_core::geom::{surface_of, Aabb, TriMesh, Vec3};
use ncd_core::modes::{assemble_fem_system, compute_linear_modes, MaterialParams, ModalBasis};
use ncd_core::net::{mlp_init, Checkpoint};
use ncd_core::skin::lbs_deform;

struct Fixture {
    collider: NeuralCollider,
    rest: Vec<Vec3>,
    surface: TriMesh,
    basis: ModalBasis,
}

fn fixture() -> Fixture {
    let tets = tet_ball(&BumpProfile::new(1.0, 6, 0.15), 1, 2);
    let sys = assemble_fem_system(&tets, &MaterialParams::default()).unwrap();
    let basis = compute_linear_modes(&sys, 3).unwrap();
    let surface = surface_of(&tets).unwrap();
    let rest = tets.vertices().to_vec();
    let bbox = Aabb::from_points(&rest).padded(0.05);
    let norm = fit_normalization(&bbox, &[vec![-1.0; 3], vec![1.0; 3]], CodeKind::Affine).unwrap();
    let enc = EncoderInfo::Fem {
        vertex_count: rest.len(),
        mode_count: 3,
        basis_path: String::new(),
    };
    let ck = Checkpoint::new(mlp_init::<f32>(6, 8, 2, 1).unwrap(), norm, enc, 0.1).unwrap();
    let collider = NeuralCollider::new(
        ck,
        ColliderEncoder::Fem {
            basis: basis.clone(),
            rest: rest.clone(),
            surface: surface.clone(),
        },
    )
    .unwrap();
    Fixture {
        collider,
        rest,
        surface,
        basis,
    }
}

#[test]
fn slice_matches_pointwise_queries() {
    let f = fixture();
    let plane = SlicePlane {
        axis: 2,
        offset: 0.1,
        lo: [-0.8, -0.6],
        hi: [0.8, 0.6],
    };
    let pose = PoseRef::Fem(&f.rest);
    let grid = levelset_slice(&f.collider, pose, plane, 9).unwrap();
    assert_eq!(grid.values.len(), 81);
    assert_eq!(grid.extrapolated, 0);
    let pts: Vec<Vec3> = (0..9).flat_map(|j| (0..9).map(move |i| plane.point(9, i, j))).collect();
    let q = f.collider.query(pose, &pts, false).unwrap();
    for (k, r) in q.iter().enumerate() {
        assert_eq!(grid.values[k].to_bits(), r.distance.to_bits());
    }
    assert_eq!(grid.to_csv().lines().count(), 82);
    assert_eq!(grid.to_pgm(0.5).unwrap().len(), "P5\n9 9\n255\n".len() + 81);
}

#[test]
fn slice_counts_points_outside_training_box() {
    let f = fixture();
    let plane = SlicePlane {
        axis: 0,
        offset: 0.0,
        lo: [-3.0, -3.0],
        hi: [3.0, 3.0],
    };
    let grid = levelset_slice(&f.collider, PoseRef::Fem(&f.rest), plane, 7).unwrap();
    // normalized half-width of the box is 1, the slice reaches about 2.6
    let s = f.collider.normalization().scale;
    let t = f.collider.normalization().translation;
    let expect = (0..7)
        .flat_map(|j| (0..7).map(move |i| (i, j)))
        .filter(|&(i, j)| ((plane.point(7, i, j) - t) * s).amax() > 1.0)
        .count();
    assert!(expect > 0);
    assert_eq!(grid.extrapolated, expect);
    assert!(levelset_slice(&f.collider, PoseRef::Fem(&f.rest), plane, 1).is_err());
}

#[test]
fn small_benchmark_produces_full_grid() {
    let f = fixture();
    let src = FemPoseSource {
        surface: f.surface.clone(),
        rest: f.rest.clone(),
        basis: f.basis.clone(),
        amplitude: 0.05,
        seed: 4,
    };
    let cfg = BenchConfig {
        ns: vec![1, 8, 32],
        reps: 5,
        warmup: 1,
        methods: vec![BenchMethod::Bvh, BenchMethod::Neural, BenchMethod::NeuralFull],
        threads: 1,
        seed: 2,
    };
    let report = run_benchmark(&src, &f.collider, &cfg).unwrap();
    assert_eq!(report.records.len(), 9);
    assert!(report.records.iter().all(|r| r.ns > 0 && r.pose_set == "fem-85v"));
    let agree = report.sign_agreement.unwrap();
    assert!((0.0..=1.0).contains(&agree));
    assert_eq!(records_from_csv(&records_to_csv(&report.records)).unwrap(), report.records);

    let few = BenchConfig { reps: 4, ..cfg.clone() };
    assert!(run_benchmark(&src, &f.collider, &few).is_err());
    let zero = BenchConfig { ns: vec![0], ..cfg };
    assert!(run_benchmark(&src, &f.collider, &zero).is_err());
}

#[test]
fn fem_pose_source_is_deterministic_and_deformed() {
    let f = fixture();
    let src = FemPoseSource {
        surface: f.surface.clone(),
        rest: f.rest.clone(),
        basis: f.basis.clone(),
        amplitude: 0.05,
        seed: 4,
    };
    let a = src.pose(3).unwrap();
    let b = src.pose(3).unwrap();
    let c = src.pose(4).unwrap();
    assert_eq!(a.surface.vertices(), b.surface.vertices());
    assert_ne!(a.surface.vertices(), c.surface.vertices());
    assert_ne!(a.surface.vertices(), f.surface.vertices());
}

#[test]
fn skin_pose_source_poses_in_root_frame() {
    let ch = capsule_character(0.12).unwrap();
    let frames: Vec<Vec<f64>> = synthetic_clips(&ch.skeleton)
        .iter()
        .flat_map(|c| c.frames().to_vec())
        .take(5)
        .collect();
    let src = SkinPoseSource {
        rest: ch.mesh.clone(),
        skeleton: ch.skeleton.clone(),
        weights: ch.weights.clone(),
        frames: frames.clone(),
    };
    let p = src.pose(7).unwrap();
    let angles = &frames[7 % 5];
    let world = lbs_deform(&ch.mesh, &ch.weights, &ch.skeleton, angles).unwrap();
    let root = ch.skeleton.world_transforms(angles).unwrap()[0];
    for (a, b) in p.surface.vertices().iter().zip(world.vertices()) {
        assert!((root.apply_point(a) - b).norm() < 1e-12);
    }
}

#[test]
fn exact_predictor_scores_perfectly() {
    let f = fixture();
    let sdfs = [MeshSdf::new(&f.surface).unwrap()];
    let report = evaluate_accuracy(
        std::slice::from_ref(&f.surface),
        |k, pts| {
            Ok(pts
                .iter()
                .map(|p| {
                    let s = sdfs[k].signed_distance(p);
                    (s.distance, s.gradient(p))
                })
                .collect())
        },
        0.05,
        300,
        9,
    )
    .unwrap();
    assert!(report.count > 250);
    assert_eq!(report.sign_agreement, 1.0);
    assert!(report.mae < 1e-12);
    assert!(report.mean_angle < 1e-3);
}
