use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::collide::{NeuralCollider, PoseRef};
use crate::distance::MeshSdf;
use crate::error::{Error, Result};
use crate::geom::{Aabb, RigidTransform, TriMesh, Vec3};
use crate::modes::ModalBasis;
use crate::skin::{lbs_deform, Skeleton, SkinWeights};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BenchMethod {
    /// Tree build on the deformed pose plus `N` exact queries.
    Bvh,
    /// Encode plus one batched forward pass.
    Neural,
    /// Encode, forward, input gradients and triangle scan.
    NeuralFull,
}

impl BenchMethod {
    pub fn name(self) -> &'static str {
        match self {
            BenchMethod::Bvh => "bvh",
            BenchMethod::Neural => "neural-cpu",
            BenchMethod::NeuralFull => "neural-cpu-full",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [BenchMethod::Bvh, BenchMethod::Neural, BenchMethod::NeuralFull]
            .into_iter()
            .find(|m| m.name() == s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRecord {
    pub method: BenchMethod,
    pub n: usize,
    /// Median wall time in nanoseconds.
    pub ns: u64,
    pub pose_set: String,
}

/// A pose in a form the collider can consume.
#[derive(Clone, Debug, PartialEq)]
pub enum OwnedPose {
    Fem(Vec<Vec3>),
    Skin { angles: Vec<f64>, root_world: RigidTransform },
    Code(Vec<f64>),
}

impl OwnedPose {
    pub fn as_pose_ref(&self) -> PoseRef<'_> {
        match self {
            OwnedPose::Fem(x) => PoseRef::Fem(x),
            OwnedPose::Skin { angles, root_world } => PoseRef::Skin {
                angles,
                root_world: *root_world,
            },
            OwnedPose::Code(z) => PoseRef::Code(z),
        }
    }
}

/// One deformed pose: its world-space surface for the tree and the same
/// pose as collider input.
#[derive(Clone, Debug)]
pub struct BenchPose {
    pub surface: TriMesh,
    pub pose: OwnedPose,
}

pub trait PoseSource: Sync {
    fn name(&self) -> String;
    /// A deterministic pose for trial `i`.
    fn pose(&self, i: usize) -> Result<BenchPose>;
}

/// Random modal deformations `x = X + U c`, `c ~ U(-a, a)` per mode.
pub struct FemPoseSource {
    pub surface: TriMesh,
    pub rest: Vec<Vec3>,
    pub basis: ModalBasis,
    pub amplitude: f64,
    pub seed: u64,
}

impl PoseSource for FemPoseSource {
    fn name(&self) -> String {
        format!("fem-{}v", self.rest.len())
    }

    fn pose(&self, i: usize) -> Result<BenchPose> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(i as u64);
        let c: Vec<f64> = (0..self.basis.mode_count())
            .map(|_| rng.random_range(-self.amplitude..=self.amplitude))
            .collect();
        let disp = self.basis.reconstruct(&c)?;
        let x: Vec<Vec3> = self.rest.iter().zip(&disp).map(|(p, u)| p + u).collect();
        Ok(BenchPose {
            surface: self.surface.with_vertices(x.clone())?,
            pose: OwnedPose::Fem(x),
        })
    }
}

/// Cycles through animation frames with an identity root.
pub struct SkinPoseSource {
    pub rest: TriMesh,
    pub skeleton: Skeleton,
    pub weights: SkinWeights,
    pub frames: Vec<Vec<f64>>,
}

impl PoseSource for SkinPoseSource {
    fn name(&self) -> String {
        format!("skin-{}f", self.frames.len())
    }

    fn pose(&self, i: usize) -> Result<BenchPose> {
        if self.frames.is_empty() {
            return Err(Error::Empty("benchmark frames"));
        }
        let angles = self.frames[i % self.frames.len()].clone();
        // meshes are posed in the root frame; an identity root keeps it world
        let root = self.skeleton.world_transforms(&angles)?[0];
        let posed = lbs_deform(&self.rest, &self.weights, &self.skeleton, &angles)?;
        let inv = root.inverse();
        let surface = posed.with_vertices(posed.vertices().iter().map(|p| inv.apply_point(p)).collect())?;
        Ok(BenchPose {
            surface,
            pose: OwnedPose::Skin {
                angles,
                root_world: RigidTransform::identity(),
            },
        })
    }
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub ns: Vec<usize>,
    pub reps: usize,
    pub warmup: usize,
    pub methods: Vec<BenchMethod>,
    /// Worker threads for the timed region.
    pub threads: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            ns: (0..=16).map(|e| 1usize << e).collect(),
            reps: 9,
            warmup: 1,
            methods: vec![BenchMethod::Bvh, BenchMethod::Neural],
            threads: 1,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BenchReport {
    pub records: Vec<BenchRecord>,
    /// Fraction of benchmark points where tree and network signs match.
    pub sign_agreement: Option<f64>,
}

fn uniform_points(bbox: &Aabb, n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec3> {
    (0..n)
        .map(|_| {
            Vec3::new(
                rng.random_range(bbox.min.x..=bbox.max.x),
                rng.random_range(bbox.min.y..=bbox.max.y),
                rng.random_range(bbox.min.z..=bbox.max.z),
            )
        })
        .collect()
}

fn median(mut v: Vec<u64>) -> u64 {
    v.sort_unstable();
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2
    }
}

fn elapsed_ns(start: Instant) -> u64 {
    (start.elapsed().as_nanos() as u64).max(1)
}

/// Times each method at each `N` on fresh poses, the same points fed to
/// every method, reporting the median of `reps` after `warmup` discarded
/// runs.
pub fn run_benchmark(source: &dyn PoseSource, collider: &NeuralCollider, cfg: &BenchConfig) -> Result<BenchReport> {
    if cfg.reps < 5 {
        return Err(Error::InvalidArgument(format!("need at least 5 repetitions, got {}", cfg.reps)));
    }
    if cfg.ns.is_empty() || cfg.ns.contains(&0) {
        return Err(Error::InvalidArgument("query counts must be positive".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    pool.install(|| {
        let mut records = Vec::new();
        let (mut agree, mut total) = (0usize, 0usize);
        let mut trial = 0usize;
        for &n in &cfg.ns {
            let mut times: Vec<Vec<u64>> = vec![Vec::new(); cfg.methods.len()];
            for rep in 0..cfg.warmup + cfg.reps {
                let pose = source.pose(trial)?;
                trial += 1;
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(trial as u64);
                let points = uniform_points(&pose.surface.bounds(), n, &mut rng);
                let mut bvh_d = None;
                let mut net_d = None;
                for (k, &m) in cfg.methods.iter().enumerate() {
                    let start = Instant::now();
                    let ns = match m {
                        BenchMethod::Bvh => {
                            let sdf = MeshSdf::new(&pose.surface)?;
                            let d: Vec<f64> = points.iter().map(|q| sdf.signed_distance(q).distance).collect();
                            let ns = elapsed_ns(start);
                            bvh_d = Some(d);
                            ns
                        }
                        BenchMethod::Neural => {
                            let d = collider.distances(pose.pose.as_pose_ref(), &points)?;
                            let ns = elapsed_ns(start);
                            net_d = Some(d);
                            ns
                        }
                        BenchMethod::NeuralFull => {
                            let r = collider.query(pose.pose.as_pose_ref(), &points, true)?;
                            let ns = elapsed_ns(start);
                            std::hint::black_box(r);
                            ns
                        }
                    };
                    if rep >= cfg.warmup {
                        times[k].push(ns);
                    }
                }
                if let (Some(a), Some(b)) = (&bvh_d, &net_d) {
                    agree += a.iter().zip(b).filter(|(x, y)| (**x < 0.0) == (**y < 0.0)).count();
                    total += a.len();
                }
            }
            for (k, &m) in cfg.methods.iter().enumerate() {
                records.push(BenchRecord {
                    method: m,
                    n,
                    ns: median(std::mem::take(&mut times[k])),
                    pose_set: source.name(),
                });
            }
        }
        Ok(BenchReport {
            records,
            sign_agreement: (total > 0).then(|| agree as f64 / total as f64),
        })
    })
}

pub fn records_to_csv(records: &[BenchRecord]) -> String {
    let mut s = String::from("method,N,ns,pose_set\n");
    for r in records {
        let _ = writeln!(s, "{},{},{},{}", r.method.name(), r.n, r.ns, r.pose_set);
    }
    s
}

pub fn records_from_csv(text: &str) -> Result<Vec<BenchRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "method,N,ns,pose_set" => {}
        _ => return Err(Error::parse("bench csv", 1, "expected header `method,N,ns,pose_set`")),
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let f: Vec<&str> = l.trim().split(',').collect();
            let bad = |what: &str| Error::parse("bench csv", i + 1, format!("bad {what}"));
            if f.len() != 4 {
                return Err(bad("field count"));
            }
            Ok(BenchRecord {
                method: BenchMethod::parse(f[0]).ok_or_else(|| bad("method"))?,
                n: f[1].parse().map_err(|_| bad("N"))?,
                ns: f[2].parse().map_err(|_| bad("ns"))?,
                pose_set: f[3].to_string(),
            })
        })
        .collect()
}

fn series(records: &[BenchRecord], method: BenchMethod) -> Vec<(usize, f64)> {
    let mut s: Vec<(usize, f64)> = records
        .iter()
        .filter(|r| r.method == method)
        .map(|r| (r.n, r.ns as f64))
        .collect();
    s.sort_by_key(|p| p.0);
    s
}

/// Smallest `N` where the tree is no slower than the network, linearly
/// interpolating the time difference in `log N` between grid points.
pub fn crossover(records: &[BenchRecord]) -> Result<Option<f64>> {
    let bvh = series(records, BenchMethod::Bvh);
    let net = series(records, BenchMethod::Neural);
    if bvh.is_empty() || bvh.len() != net.len() || bvh.iter().zip(&net).any(|(a, b)| a.0 != b.0) {
        return Err(Error::InvalidArgument("bvh and neural records must share one N grid".into()));
    }
    let diff: Vec<f64> = bvh.iter().zip(&net).map(|(a, b)| a.1 - b.1).collect();
    let Some(i) = diff.iter().position(|&d| d <= 0.0) else {
        return Ok(None);
    };
    if i == 0 {
        return Ok(Some(bvh[0].0 as f64));
    }
    let (l0, l1) = ((bvh[i - 1].0 as f64).ln(), (bvh[i].0 as f64).ln());
    let t = diff[i - 1] / (diff[i - 1] - diff[i]);
    Ok(Some((l0 + t * (l1 - l0)).exp()))
}

/// Least-squares slope of `log ns` against `log N` over the top decade of
/// the grid.
pub fn loglog_slope(records: &[BenchRecord], method: BenchMethod) -> Option<f64> {
    let s = series(records, method);
    let top = s.last()?.0 as f64;
    let pts: Vec<(f64, f64)> = s
        .iter()
        .filter(|p| p.0 as f64 >= top / 10.0)
        .map(|p| ((p.0 as f64).ln(), p.1.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}
