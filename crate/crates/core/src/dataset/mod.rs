//! Training poses, signed-distance samples and their normalization.
//!
//! Each pose contributes `k` samples in surface, near, uniform order. Rows
//! are stored flat as `f32` `[q (3), z (m), d (1)]`, already normalized.

mod io;
mod normalize;
mod poses;
pub(crate) mod sampling;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use io::{dataset_from_bytes, dataset_to_bytes, read_dataset, write_dataset, DATASET_FORMAT_VERSION};
pub(crate) use io::{read_encoder, read_normalization, write_encoder, write_normalization};
pub use normalize::{fit_normalization, CodeKind, CodeNormalization, Normalization};
pub use poses::{amplitude_for_displacement, generate_fem_poses, FemPose, PoseConfig};
pub use sampling::{draw_sample_points, sample_pose_sdf, RawSample, SampleKind, SamplePoint, SampleRatio};

use crate::distance::MeshSdf;
use crate::error::{Error, Result};
use crate::geom::{Aabb, TetMesh, TriMesh, Vec3};
use crate::modes::{encode_fem, ModalBasis};
use crate::skin::{encode_skin, lbs_deform, world_to_root, AngleCodeMap, Skeleton, SkinWeights};

/// What produced the codes, so a query can re-encode a new pose.
#[derive(Clone, Debug, PartialEq)]
pub enum EncoderInfo {
    /// Codes supplied directly by the caller.
    Generic,
    Fem {
        vertex_count: usize,
        mode_count: usize,
        basis_path: String,
    },
    Skin(AngleCodeMap),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetMeta {
    pub pose_count: usize,
    pub samples_per_pose: usize,
    pub code_dim: usize,
    pub ratio: SampleRatio,
    /// Totals of surface, near and uniform samples.
    pub kind_counts: [u64; 3],
    pub seed: u64,
    pub encoder: EncoderInfo,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub normalization: Normalization,
    pub meta: DatasetMeta,
    samples: Vec<f32>,
}

/// One borrowed row.
#[derive(Clone, Copy, Debug)]
pub struct SampleRef<'a> {
    pub q: [f32; 3],
    pub z: &'a [f32],
    pub d: f32,
}

impl Dataset {
    pub fn new(normalization: Normalization, meta: DatasetMeta, samples: Vec<f32>) -> Result<Self> {
        if normalization.code_dim() != meta.code_dim {
            return Err(Error::DimensionMismatch {
                what: "normalization code dimension",
                expected: meta.code_dim,
                found: normalization.code_dim(),
            });
        }
        let rows = meta.pose_count * meta.samples_per_pose;
        if samples.len() != rows * (meta.code_dim + 4) {
            return Err(Error::DimensionMismatch {
                what: "sample array length",
                expected: rows * (meta.code_dim + 4),
                found: samples.len(),
            });
        }
        if meta.kind_counts.iter().sum::<u64>() != rows as u64 {
            return Err(Error::Format("sample kind counts do not add up".into()));
        }
        Ok(Self {
            normalization,
            meta,
            samples,
        })
    }

    pub fn stride(&self) -> usize {
        self.meta.code_dim + 4
    }

    pub fn len(&self) -> usize {
        self.meta.pose_count * self.meta.samples_per_pose
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn raw(&self) -> &[f32] {
        &self.samples
    }

    pub fn sample(&self, i: usize) -> SampleRef<'_> {
        let row = &self.samples[i * self.stride()..(i + 1) * self.stride()];
        let m = self.meta.code_dim;
        SampleRef {
            q: [row[0], row[1], row[2]],
            z: &row[3..3 + m],
            d: row[3 + m],
        }
    }

    /// Kind of row `i` from its position within its pose.
    pub fn kind(&self, i: usize) -> SampleKind {
        let [ns, nn, _] = self.meta.ratio.split(self.meta.samples_per_pose);
        match i % self.meta.samples_per_pose {
            j if j < ns => SampleKind::Surface,
            j if j < ns + nn => SampleKind::Near,
            _ => SampleKind::Uniform,
        }
    }
}

/// A pose ready for sampling: its surface in the code's reference frame
/// (rigid motion removed) and its raw code.
#[derive(Clone, Debug)]
pub struct PoseSample {
    pub surface: TriMesh,
    pub code: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplingConfig {
    pub samples_per_pose: usize,
    pub ratio: SampleRatio,
    /// Near-sample standard deviation as a fraction of the pose bbox diagonal.
    pub sigma_near: f64,
    /// Padding of the global bbox as a fraction of its diagonal.
    pub bbox_padding: f64,
    pub seed: u64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            samples_per_pose: 10_000,
            ratio: SampleRatio::default(),
            sigma_near: 0.01,
            bbox_padding: 0.05,
            seed: 0,
        }
    }
}

/// Padded box containing every pose surface.
pub fn global_bbox(poses: &[PoseSample], padding: f64) -> Aabb {
    poses
        .iter()
        .fold(Aabb::empty(), |b, p| b.union(&p.surface.bounds()))
        .padded(padding)
}

/// Samples every pose against a normalization fitted to all of them.
pub fn build_dataset(poses: &[PoseSample], kind: CodeKind, encoder: EncoderInfo, cfg: &SamplingConfig) -> Result<Dataset> {
    if poses.is_empty() {
        return Err(Error::Empty("training poses"));
    }
    let bbox = global_bbox(poses, cfg.bbox_padding);
    let codes: Vec<Vec<f64>> = poses.iter().map(|p| p.code.clone()).collect();
    let normalization = fit_normalization(&bbox, &codes, kind)?;
    let sigma = cfg.sigma_near * global_bbox(poses, 0.0).diagonal();
    sample_with(poses, &normalization, &bbox, sigma, encoder, cfg)
}

/// Samples with a fixed normalization and box, as for held-out poses.
pub fn sample_with(
    poses: &[PoseSample],
    normalization: &Normalization,
    bbox: &Aabb,
    sigma_near: f64,
    encoder: EncoderInfo,
    cfg: &SamplingConfig,
) -> Result<Dataset> {
    let m = normalization.code_dim();
    let k = cfg.samples_per_pose;
    let rows: Vec<Vec<f32>> = poses
        .par_iter()
        .enumerate()
        .map(|(i, pose)| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i as u64);
            let sdf = MeshSdf::new(&pose.surface)?;
            let z: Vec<f32> = normalization.normalize_code(&pose.code)?.iter().map(|&v| v as f32).collect();
            let points = draw_sample_points(&pose.surface, k, cfg.ratio, sigma_near, bbox, &mut rng)?;
            let mut out = Vec::with_capacity(k * (m + 4));
            for p in points {
                // label the point exactly as stored
                let qn = normalization.normalize_point(&p.q).map(|v| v as f32);
                let q = normalization.denormalize_point(&qn.map(f64::from));
                let d = sdf.signed_distance(&q).distance;
                out.extend_from_slice(qn.as_slice());
                out.extend_from_slice(&z);
                out.push(normalization.normalize_distance(d) as f32);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let split = cfg.ratio.split(k);
    let n = poses.len() as u64;
    let meta = DatasetMeta {
        pose_count: poses.len(),
        samples_per_pose: k,
        code_dim: m,
        ratio: cfg.ratio,
        kind_counts: split.map(|c| c as u64 * n),
        seed: cfg.seed,
        encoder,
    };
    Dataset::new(normalization.clone(), meta, rows.concat())
}

/// Aligns each pose to the rest shape and encodes it.
pub fn fem_training_poses(rest: &TetMesh, surface: &TriMesh, basis: &ModalBasis, poses: &[Vec<Vec3>]) -> Result<Vec<PoseSample>> {
    poses
        .iter()
        .map(|x| {
            let (code, align) = encode_fem(x, rest.vertices(), basis)?;
            let aligned: Vec<Vec3> = x.iter().map(|p| align.apply_point(p)).collect();
            Ok(PoseSample {
                surface: surface.with_vertices(aligned)?,
                code,
            })
        })
        .collect()
}

/// Skins each frame and expresses it in the root joint's frame.
pub fn skin_training_poses(
    rest: &TriMesh,
    skeleton: &Skeleton,
    weights: &SkinWeights,
    map: &AngleCodeMap,
    frames: &[Vec<f64>],
) -> Result<Vec<PoseSample>> {
    frames
        .iter()
        .map(|angles| {
            let world = lbs_deform(rest, weights, skeleton, angles)?;
            let root = skeleton.world_transforms(angles)?[0];
            let local = world_to_root(world.vertices(), &root);
            Ok(PoseSample {
                surface: rest.with_vertices(local)?,
                code: encode_skin(angles, map)?.z,
            })
        })
        .collect()
}
