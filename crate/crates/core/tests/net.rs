use ncd_core::dataset::{CodeNormalization, Dataset, DatasetMeta, EncoderInfo, Normalization, SampleRatio};
use ncd_core::geom::Vec3;
use ncd_core::net::{
    backward_params, clamped_l1_loss, mlp_init, split_indices, train, Checkpoint, Mlp, TrainConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DELTA: f64 = 0.1;

fn random_batch(rng: &mut ChaCha8Rng, dim: usize, n: usize) -> Vec<f64> {
    (0..dim * n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Finite-difference check that avoids ReLU and clamp kinks by rejecting
/// perturbations that change the activation pattern.
fn loss_at(net: &Mlp<f64>, x: &[f64], n: usize, t: &[f64]) -> f64 {
    let pred = net.forward_batch(x, n).unwrap();
    clamped_l1_loss(&pred, t, DELTA)
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

#[test]
fn parameter_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut checked = 0;
    for trial in 0..20 {
        let (dim, width, layers) = if trial % 2 == 0 { (2, 8, 1) } else { (5, 6, 3) };
        let mut net: Mlp<f64> = mlp_init(dim, width, layers, trial).unwrap();
        // nonzero biases keep pre-activations off the ReLU kink
        for p in net.params_mut().iter_mut().filter(|p| **p == 0.0) {
            *p = rng.random_range(-0.5..0.5);
        }
        // shrink the output layer so predictions sit inside the clamp
        let count = net.param_count();
        for p in &mut net.params_mut()[count - width - 1..] {
            *p *= 0.02;
        }
        let n = 6;
        let scaled = random_batch(&mut rng, dim, n);
        let pred = net.forward_batch(&scaled, n).unwrap();
        // the loss is differentiable only with every prediction inside the clamp
        assert!(pred.iter().all(|p| p.abs() < 0.5 * DELTA));
        let t: Vec<f64> = pred.iter().map(|p| (p + rng.random_range(-0.05..0.05)).clamp(-0.09, 0.09)).collect();
        let (_, grad) = backward_params(&net, &scaled, n, &t, DELTA).unwrap();
        let h = 1e-6;
        for _ in 0..10 {
            let i = rng.random_range(0..net.param_count());
            let mut plus = net.clone();
            plus.params_mut()[i] += h;
            let mut minus = net.clone();
            minus.params_mut()[i] -= h;
            let mid = loss_at(&net, &scaled, n, &t);
            let up = loss_at(&plus, &scaled, n, &t);
            let down = loss_at(&minus, &scaled, n, &t);
            let fd = (up - down) / (2.0 * h);
            // one-sided slopes disagree across a ReLU or clamp kink
            let smooth = relative((up - mid) / h, (mid - down) / h) <= 1e-5;
            if smooth && (fd.abs() > 1e-8 || grad[i].abs() > 1e-8) {
                assert!(relative(fd, grad[i]) <= 1e-4, "param {i}: fd {fd} vs {}", grad[i]);
                checked += 1;
            }
        }
    }
    assert!(checked >= 20, "only {checked} checks");
}

#[test]
fn input_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for trial in 0..20 {
        let mut net: Mlp<f64> = mlp_init(3 + 4, 16, 3, 100 + trial).unwrap();
        for p in net.params_mut().iter_mut().filter(|p| **p == 0.0) {
            *p = rng.random_range(-0.5..0.5);
        }
        let x: Vec<f64> = (0..7).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g = net.input_gradient([x[0], x[1], x[2]], &x[3..]).unwrap();
        let h = 1e-6;
        for k in 0..3 {
            let mut p = x.clone();
            p[k] += h;
            let mut m = x.clone();
            m[k] -= h;
            let fd = (net.forward_point(&p).unwrap() - net.forward_point(&m).unwrap()) / (2.0 * h);
            assert!(relative(fd, g[k]) <= 1e-4 || (fd - g[k]).abs() < 1e-9, "fd {fd} vs {}", g[k]);
        }
    }
}

#[test]
fn single_layer_gradient_is_weight_row() {
    let mut net: Mlp<f64> = mlp_init(3, 1, 1, 0).unwrap();
    // hidden unit h = relu(w·x + 1) kept positive, output tanh(v h)
    let p = net.params_mut();
    p[..3].copy_from_slice(&[0.2, -0.3, 0.4]);
    p[3] = 1.0;
    p[4] = 0.5;
    p[5] = 0.0;
    let x = [0.1, 0.2, 0.3];
    let g = net.input_gradient(x, &[]).unwrap();
    let pre: f64 = 0.5 * (1.0 + 0.2 * 0.1 - 0.3 * 0.2 + 0.4 * 0.3);
    let s = 1.0 - pre.tanh().powi(2);
    for (gi, wi) in g.iter().zip([0.2, -0.3, 0.4]) {
        assert!((gi - s * 0.5 * wi).abs() < 1e-14);
    }
}

#[test]
fn batching_is_bit_exact() {
    let net: Mlp<f32> = mlp_init(3 + 5, 32, 4, 9).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 700;
    let x: Vec<f32> = (0..8 * n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let out = net.forward_batch(&x, n).unwrap();
    let (out2, grads) = net.input_gradient_batch(&x, n).unwrap();
    assert_eq!(out, out2);
    for j in 0..n {
        let col: Vec<f32> = (0..8).map(|k| x[k * n + j]).collect();
        assert_eq!(net.forward_point(&col).unwrap().to_bits(), out[j].to_bits());
        let g = net.input_gradient([col[0], col[1], col[2]], &col[3..]).unwrap();
        for k in 0..3 {
            assert_eq!(g[k].to_bits(), grads[k * n + j].to_bits());
        }
        assert!(out[j].abs() < 1.0);
    }
    let same: Vec<f32> = (0..8).flat_map(|k| std::iter::repeat_n(x[k * n], 3)).collect();
    let o = net.forward_batch(&same, 3).unwrap();
    assert!(o[0] == o[1] && o[1] == o[2]);
    assert!(net.forward_batch(&[], 0).unwrap().is_empty());
    assert!(net.forward_batch(&x[..7], 1).is_err());
}

#[test]
fn init_is_deterministic_with_default_shape() {
    let a: Mlp<f32> = mlp_init(3 + 128, 128, 8, 5).unwrap();
    let b: Mlp<f32> = mlp_init(3 + 128, 128, 8, 5).unwrap();
    assert_eq!(a, b);
    let mut dims = vec![131];
    dims.extend([128; 8]);
    dims.push(1);
    assert_eq!(a.dims(), &dims[..]);
    assert_ne!(a, mlp_init::<f32>(131, 128, 8, 6).unwrap());
}

#[test]
fn loss_examples() {
    assert_eq!(clamped_l1_loss(&[0.3f64, -0.2], &[0.3, -0.2], 0.1), 0.0);
    assert!((clamped_l1_loss(&[0.5f64], &[0.0], 0.1) - 0.1).abs() < 1e-15);
    assert_eq!(clamped_l1_loss(&[0.5f64], &[0.3], 0.1), 0.0);
}

#[test]
fn fully_clamped_loss_has_zero_gradient_and_duplication_is_neutral() {
    let net: Mlp<f64> = mlp_init(4, 8, 2, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x = random_batch(&mut rng, 4, 5);
    let pred = net.forward_batch(&x, 5).unwrap();
    // push targets beyond the clamp on the prediction's side when it is clamped
    let t: Vec<f64> = pred.iter().map(|p| if p.abs() >= DELTA { p.signum() * 0.9 } else { 0.0 }).collect();
    let mut tiny: Mlp<f64> = net.clone();
    // force the output layer bias large so every prediction clamps to +δ
    let last = tiny.param_count() - 1;
    tiny.params_mut()[last] = 5.0;
    let (loss, grad) = backward_params(&tiny, &x, 5, &vec![0.5; 5], DELTA).unwrap();
    assert_eq!(loss, 0.0);
    assert!(grad.iter().all(|&g| g == 0.0));

    let (_, g1) = backward_params(&net, &x, 5, &t, DELTA).unwrap();
    let mut x2 = Vec::new();
    for row in x.chunks(5) {
        x2.extend_from_slice(row);
        x2.extend_from_slice(row);
    }
    let t2: Vec<f64> = t.iter().chain(&t).copied().collect();
    let (_, g2) = backward_params(&net, &x2, 10, &t2, DELTA).unwrap();
    for (a, b) in g1.iter().zip(&g2) {
        assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
    }
}

/// Unit-scale sphere family: `d = |q| − r`, code is the radius.
fn sphere_dataset(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let norm = Normalization {
        scale: 1.0,
        translation: Vec3::zeros(),
        code: CodeNormalization::Affine { lo: vec![0.3], hi: vec![0.7] },
    };
    let mut rows = Vec::with_capacity(n * 5);
    for _ in 0..n {
        let r: f64 = rng.random_range(0.3..0.7);
        let q = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        rows.extend([q.x as f32, q.y as f32, q.z as f32]);
        rows.push(norm.normalize_code(&[r]).unwrap()[0] as f32);
        rows.push((q.norm() - r) as f32);
    }
    let meta = DatasetMeta {
        pose_count: n,
        samples_per_pose: 1,
        code_dim: 1,
        ratio: SampleRatio::new(0, 0, 1).unwrap(),
        kind_counts: [0, 0, n as u64],
        seed,
        encoder: EncoderInfo::Generic,
    };
    Dataset::new(norm, meta, rows).unwrap()
}

fn toy_config() -> TrainConfig {
    TrainConfig {
        learning_rate: 3e-3,
        epochs: 2000,
        batch_size: 100,
        validation_fraction: 0.0,
        hidden_layers: 3,
        hidden_width: 32,
        seed: 7,
        ..TrainConfig::default()
    }
}

#[test]
fn toy_sphere_overfits() {
    let ds = sphere_dataset(100, 1);
    let (_, report) = train(&ds, &toy_config()).unwrap();
    let last = *report.train_loss.last().unwrap();
    assert!(last < 0.005, "final train loss {last}");
}

#[test]
fn training_is_deterministic_and_split_is_disjoint() {
    let ds = sphere_dataset(300, 2);
    let cfg = TrainConfig {
        epochs: 5,
        validation_fraction: 0.2,
        ..toy_config()
    };
    let (a, ra) = train(&ds, &cfg).unwrap();
    let (b, rb) = train(&ds, &cfg).unwrap();
    assert_eq!(ra, rb);
    assert_eq!(a, b);
    let mut seen = vec![false; 300];
    for &i in ra.train_indices.iter().chain(&ra.val_indices) {
        assert!(!seen[i]);
        seen[i] = true;
    }
    assert!(seen.iter().all(|&s| s));
    assert_eq!(ra.val_indices.len(), 60);
    let (t, v) = split_indices(10, 0.0, 1);
    assert_eq!((t.len(), v.len()), (10, 0));
}

#[test]
fn checkpoint_round_trip_and_errors() {
    let ds = sphere_dataset(50, 3);
    let net: Mlp<f32> = mlp_init(4, 16, 2, 1).unwrap();
    let ck = Checkpoint::new(net, ds.normalization.clone(), EncoderInfo::Generic, DELTA).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("net.ncnn");
    ck.save(&path).unwrap();
    let back = Checkpoint::load(&path).unwrap();
    assert_eq!(back, ck);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x: Vec<f32> = (0..4 * 64).map(|_| rng.random_range(-1.0..1.0)).collect();
    let a = ck.net.forward_batch(&x, 64).unwrap();
    let b = back.net.forward_batch(&x, 64).unwrap();
    assert!(a.iter().zip(&b).all(|(p, q)| p.to_bits() == q.to_bits()));

    let bytes = ck.to_bytes();
    assert!(Checkpoint::from_bytes(&bytes[..bytes.len() / 2]).is_err());
    let mut bad = bytes.clone();
    bad[0] = 0;
    assert!(Checkpoint::from_bytes(&bad).unwrap_err().to_string().contains("magic"));
    assert!(back.expect_code_dim(1).is_ok());
    assert!(back.expect_code_dim(2).is_err());
    let wrong: Mlp<f32> = mlp_init(6, 16, 2, 1).unwrap();
    assert!(Checkpoint::new(wrong, ds.normalization.clone(), EncoderInfo::Generic, DELTA).is_err());
}



#[test]
fn code_input_scaling_touches_only_code_columns() {
    let net: Mlp<f64> = mlp_init(3 + 4, 5, 2, 3).unwrap();
    let mut scaled = net.clone();
    scaled.scale_code_inputs(0.25);
    for (i, (a, b)) in net.params().iter().zip(scaled.params()).enumerate() {
        let in_first_w = i < 5 * 7;
        if in_first_w && i % 7 >= 3 {
            assert_eq!(*b, a * 0.25);
        } else {
            assert_eq!(a, b);
        }
    }
}
