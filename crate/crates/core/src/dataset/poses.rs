use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geom::{Aabb, TetMesh, Vec3};
use crate::modes::ModalBasis;

const NOISE_WAVES: usize = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct PoseConfig {
    pub count: usize,
    /// `c_j ~ U(-a/√λ_j, a/√λ_j)`.
    pub amplitude: f64,
    /// Smooth noise amplitude as a fraction of the rest bbox diagonal.
    pub noise: f64,
    /// Inverted-element fraction above which a warning is logged.
    pub max_inverted_fraction: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FemPose {
    pub vertices: Vec<Vec3>,
    pub coefficients: Vec<f64>,
    pub inverted: usize,
}

/// Amplitude giving an expected per-vertex RMS displacement of
/// `fraction` × the rest bbox diagonal under uniform coefficient sampling.
pub fn amplitude_for_displacement(rest: &[Vec3], basis: &ModalBasis, fraction: f64) -> f64 {
    let diag = Aabb::from_points(rest).diagonal();
    let inv_sum: f64 = basis.eigenvalues().iter().map(|l| 1.0 / l).sum();
    // E‖Uc‖² = Σ a²/(3λ_j) for orthonormal U
    fraction * diag * (3.0 * rest.len() as f64 / inv_sum).sqrt()
}

fn smooth_noise(rng: &mut ChaCha8Rng, rest: &[Vec3], magnitude: f64, diag: f64) -> Vec<Vec3> {
    let unit = |rng: &mut ChaCha8Rng| loop {
        let v = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    };
    let waves: Vec<(Vec3, Vec3, f64, f64)> = (0..NOISE_WAVES)
        .map(|_| {
            let k = unit(rng);
            let p = unit(rng);
            let freq = TAU / diag * rng.random_range(0.5..1.5);
            (k, p, freq, rng.random_range(0.0..TAU))
        })
        .collect();
    let gain = magnitude * diag / (NOISE_WAVES as f64).sqrt();
    rest.iter()
        .map(|x| {
            waves
                .iter()
                .map(|(k, p, f, phase)| p * (f * k.dot(x) + phase).sin())
                .sum::<Vec3>()
                * gain
        })
        .collect()
}

/// Random modal deformations `X + U c` plus optional smooth noise. Pose `i`
/// draws from its own stream of the seeded generator.
pub fn generate_fem_poses(mesh: &TetMesh, basis: &ModalBasis, cfg: &PoseConfig) -> Result<Vec<FemPose>> {
    let rest = mesh.vertices();
    if basis.vertex_count() != rest.len() {
        return Err(Error::DimensionMismatch {
            what: "basis vertex count",
            expected: rest.len(),
            found: basis.vertex_count(),
        });
    }
    if !(cfg.amplitude >= 0.0) || !(cfg.noise >= 0.0) {
        return Err(Error::InvalidArgument("pose amplitude and noise must be non-negative".into()));
    }
    let diag = Aabb::from_points(rest).diagonal();
    let mut poses = Vec::with_capacity(cfg.count);
    for i in 0..cfg.count {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(i as u64);
        let coefficients: Vec<f64> = basis
            .eigenvalues()
            .iter()
            .map(|l| {
                let r = cfg.amplitude / l.sqrt();
                if r > 0.0 {
                    rng.random_range(-r..r)
                } else {
                    0.0
                }
            })
            .collect();
        let disp = basis.reconstruct(&coefficients)?;
        let mut vertices: Vec<Vec3> = rest.iter().zip(&disp).map(|(x, d)| x + d).collect();
        if cfg.noise > 0.0 {
            let noise = smooth_noise(&mut rng, rest, cfg.noise, diag);
            vertices.iter_mut().zip(noise).for_each(|(v, n)| *v += n);
        }
        let inverted = mesh.inverted_count(&vertices);
        if inverted as f64 > cfg.max_inverted_fraction * mesh.tets().len() as f64 {
            log::warn!("pose {i}: {inverted} of {} elements inverted", mesh.tets().len());
        }
        poses.push(FemPose {
            vertices,
            coefficients,
            inverted,
        });
    }
    Ok(poses)
}
