//! Browser demo. [`DemoState`] holds the logic and runs natively; [`Demo`]
//! is its JavaScript face.
//!
//! Three interactions: a signed-distance slice of a bumpy ball deformed along
//! one linear mode, picking the surface triangle nearest a clicked slice
//! point, and training a small network on a family of spheres.

use ncd_core::assets::{sphere_family, tet_ball, BumpProfile};
use ncd_core::collide::{resolve_triangle, ColliderEncoder, NeuralCollider, PoseRef};
use ncd_core::dataset::{build_dataset, CodeKind, EncoderInfo, SamplingConfig};
use ncd_core::distance::MeshSdf;
use ncd_core::geom::{surface_of, TriMesh, Vec3};
use ncd_core::modes::{assemble_fem_system, compute_linear_modes, MaterialParams, ModalBasis};
use ncd_core::net::{train, Checkpoint, TrainConfig};
use wasm_bindgen::prelude::*;

pub const MODES: usize = 6;
pub const SPHERE_RADII: [f64; 6] = [0.3, 0.4, 0.5, 0.6, 0.7, 0.8];

/// What a click on the slice found.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pick {
    pub distance: f64,
    /// Closest triangle from the exact distance query.
    pub closest_triangle: usize,
    pub closest_point: Vec3,
    /// First triangle hit walking from the point towards the surface.
    pub ray_triangle: Option<usize>,
}

pub struct DemoState {
    rest: Vec<Vec3>,
    surface: TriMesh,
    basis: ModalBasis,
    amplitudes: Vec<f64>,
    sdf: MeshSdf,
    sphere: Option<NeuralCollider>,
}

/// Row-major `res × res` grid over `[-half, half]^2` in the `z = 0` plane,
/// row 0 at the top.
pub fn slice_points(res: usize, half: f64) -> Vec<Vec3> {
    let step = |k: usize| -half + 2.0 * half * k as f64 / (res.max(2) - 1) as f64;
    (0..res)
        .flat_map(|j| (0..res).map(move |i| Vec3::new(step(i), -step(j), 0.0)))
        .collect()
}

impl DemoState {
    pub fn new() -> ncd_core::Result<Self> {
        let tets = tet_ball(&BumpProfile::new(1.0, 6, 0.15), 2, 2);
        let sys = assemble_fem_system(&tets, &MaterialParams::default())?;
        let basis = compute_linear_modes(&sys, MODES)?;
        let surface = surface_of(&tets)?;
        let sdf = MeshSdf::new(&surface)?;
        Ok(Self {
            rest: tets.vertices().to_vec(),
            surface,
            basis,
            amplitudes: vec![0.0; MODES],
            sdf,
            sphere: None,
        })
    }

    pub fn triangle_count(&self) -> usize {
        self.surface.triangle_count()
    }

    /// Sets mode `k`'s coefficient and re-poses the surface.
    pub fn set_amplitude(&mut self, k: usize, value: f64) -> ncd_core::Result<()> {
        if k >= MODES {
            return Err(ncd_core::Error::InvalidArgument(format!("mode {k} is not below {MODES}")));
        }
        self.amplitudes[k] = value;
        let u = self.basis.reconstruct(&self.amplitudes)?;
        let x = self.rest.iter().zip(&u).map(|(p, d)| p + d).collect();
        self.sdf = MeshSdf::new(&self.surface.with_vertices(x)?)?;
        Ok(())
    }

    pub fn oracle_slice(&self, res: usize, half: f64) -> Vec<f64> {
        slice_points(res, half)
            .iter()
            .map(|q| self.sdf.signed_distance(q).distance)
            .collect()
    }

    pub fn pick(&self, x: f64, y: f64) -> Pick {
        let q = Vec3::new(x, y, 0.0);
        let r = self.sdf.signed_distance(&q);
        let ray_triangle = r.gradient(&q).and_then(|g| {
            let towards = if r.distance < 0.0 { g } else { -g };
            resolve_triangle(&q, &towards, self.sdf.mesh())
        });
        Pick {
            distance: r.distance,
            closest_triangle: r.triangle,
            closest_point: r.closest_point,
            ray_triangle,
        }
    }

    /// Trains the sphere network and returns its final validation loss.
    pub fn train_sphere(&mut self, epochs: usize, samples_per_pose: usize) -> ncd_core::Result<f64> {
        let poses = sphere_family(&SPHERE_RADII, 2);
        let sampling = SamplingConfig {
            samples_per_pose,
            ..SamplingConfig::default()
        };
        let ds = build_dataset(&poses, CodeKind::Affine, EncoderInfo::Generic, &sampling)?;
        let cfg = TrainConfig {
            learning_rate: 3e-3,
            epochs,
            batch_size: 256,
            hidden_layers: 3,
            hidden_width: 32,
            final_lr_fraction: 0.1,
            ..TrainConfig::default()
        };
        let (net, report) = train(&ds, &cfg)?;
        let ck = Checkpoint::new(net, ds.normalization.clone(), EncoderInfo::Generic, cfg.delta)?;
        self.sphere = Some(NeuralCollider::new(ck, ColliderEncoder::Generic)?);
        Ok(report.val_loss.last().copied().unwrap_or(f64::NAN))
    }

    pub fn sphere_slice(&self, radius: f64, res: usize, half: f64) -> ncd_core::Result<Vec<f64>> {
        let net = self
            .sphere
            .as_ref()
            .ok_or_else(|| ncd_core::Error::InvalidArgument("train the sphere network first".into()))?;
        net.distances(PoseRef::Code(&[radius]), &slice_points(res, half))
    }
}

fn js(e: ncd_core::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub struct Demo(DemoState);

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new() -> Result<Demo, JsError> {
        DemoState::new().map(Demo).map_err(js)
    }

    #[wasm_bindgen(js_name = modeCount)]
    pub fn mode_count(&self) -> usize {
        MODES
    }

    #[wasm_bindgen(js_name = triangleCount)]
    pub fn triangle_count(&self) -> usize {
        self.0.triangle_count()
    }

    #[wasm_bindgen(js_name = setAmplitude)]
    pub fn set_amplitude(&mut self, mode: usize, value: f64) -> Result<(), JsError> {
        self.0.set_amplitude(mode, value).map_err(js)
    }

    #[wasm_bindgen(js_name = oracleSlice)]
    pub fn oracle_slice(&self, res: usize, half: f64) -> Vec<f32> {
        self.0.oracle_slice(res, half).into_iter().map(|d| d as f32).collect()
    }

    /// `[distance, closest triangle, ray triangle or −1, closest x, y, z]`.
    pub fn pick(&self, x: f64, y: f64) -> Vec<f64> {
        let p = self.0.pick(x, y);
        vec![
            p.distance,
            p.closest_triangle as f64,
            p.ray_triangle.map_or(-1.0, |t| t as f64),
            p.closest_point.x,
            p.closest_point.y,
            p.closest_point.z,
        ]
    }

    #[wasm_bindgen(js_name = trainSphere)]
    pub fn train_sphere(&mut self, epochs: usize, samples_per_pose: usize) -> Result<f64, JsError> {
        self.0.train_sphere(epochs, samples_per_pose).map_err(js)
    }

    #[wasm_bindgen(js_name = sphereSlice)]
    pub fn sphere_slice(&self, radius: f64, res: usize, half: f64) -> Result<Vec<f32>, JsError> {
        self.0
            .sphere_slice(radius, res, half)
            .map(|v| v.into_iter().map(|d| d as f32).collect())
            .map_err(js)
    }
}
