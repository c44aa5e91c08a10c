use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use log::info;

use ncd_core::assets::{capsule_character, synthetic_clips, tet_ball, BumpProfile, EXCLUDED_JOINTS};
use ncd_core::bench::{
    crossover, evaluate_accuracy, levelset_slice, loglog_slope, records_to_csv, run_benchmark, BenchConfig,
    BenchMethod, FemPoseSource, PoseSource, SkinPoseSource, SlicePlane,
};
use ncd_core::collide::{ColliderEncoder, NeuralCollider, PoseRef};
use ncd_core::dataset::{
    amplitude_for_displacement, build_dataset, fem_training_poses, generate_fem_poses, read_dataset,
    skin_training_poses, write_dataset, CodeKind, EncoderInfo, PoseConfig, SampleRatio, SamplingConfig,
};
use ncd_core::geom::{load_obj, load_tetgen, surface_of, write_obj, write_tetgen, Aabb, RigidTransform, TetMesh, TriMesh, Vec3};
use ncd_core::modes::{assemble_fem_system, compute_linear_modes_with, EigenMethod, MaterialParams, ModalBasis};
use ncd_core::net::{self, Checkpoint, TrainConfig};
use ncd_core::skin::{build_angle_code_map, load_skin_file, write_skin, SkinAsset};

use crate::config::Settings;
use crate::manifest::write_manifest;
use crate::{Cli, Command, UsageError};

type Results = Vec<(String, String)>;

pub fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.common.threads {
        if n == 0 {
            bail!(UsageError("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| anyhow!("thread pool: {e}"))?;
    }
    let mut s = Settings::new(cli.common.config.as_deref())?;
    let (name, results) = match cli.command {
        Command::GenAssets(a) => ("gen-assets", gen_assets(&mut s, a)?),
        Command::Modes(a) => ("modes", modes(&mut s, a)?),
        Command::Sample(a) => ("sample", sample(&mut s, a)?),
        Command::Train(a) => ("train", train(&mut s, a)?),
        Command::Query(a) => ("query", query(&mut s, a)?),
        Command::Bench(a) => ("bench", bench(&mut s, a)?),
        Command::Slice(a) => ("slice", slice(&mut s, a)?),
        Command::Eval(a) => ("eval", eval(&mut s, a)?),
    };
    let path = write_manifest(&cli.common.run_dir, name, s.resolved(), &results)?;
    for (k, v) in &results {
        println!("{k}: {v}");
    }
    info!("manifest written to {}", path.display());
    Ok(())
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow!(UsageError(msg.into()))
}

fn result(out: &mut Results, key: &str, value: impl ToString) {
    out.push((key.to_string(), value.to_string()));
}

/// Whitespace-separated numbers, `#` comments allowed.
fn read_numbers(path: &str) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        for tok in line.split('#').next().unwrap_or("").split_whitespace() {
            out.push(tok.parse().map_err(|_| {
                anyhow!(ncd_core::Error::Format(format!("{path}:{}: bad number `{tok}`", i + 1)))
            })?);
        }
    }
    Ok(out)
}

/// `x y z` rows.
fn read_points(path: &str) -> Result<Vec<Vec3>> {
    let v = read_numbers(path)?;
    if v.len() % 3 != 0 {
        bail!(ncd_core::Error::Format(format!("{path}: point count is not a multiple of 3")));
    }
    Ok(v.chunks(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_tets(tet: &str, ele: Option<String>) -> Result<TetMesh> {
    let node = PathBuf::from(tet);
    let ele = ele.map(PathBuf::from).unwrap_or_else(|| node.with_extension("ele"));
    Ok(load_tetgen(&node, &ele)?)
}

/// Frames across all clips in file order; frame `i` is held out when
/// `every > 0` and `i % every == every / 2`.
fn split_frames(asset: &SkinAsset, every: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut train = Vec::new();
    let mut held = Vec::new();
    for (i, f) in asset.clips.iter().flat_map(|c| c.frames()).enumerate() {
        if every > 0 && i % every == every / 2 {
            held.push(f.clone());
        } else {
            train.push(f.clone());
        }
    }
    (train, held)
}

fn parse_method(s: &str) -> Result<EigenMethod> {
    match s {
        "auto" => Ok(EigenMethod::Auto),
        "dense" => Ok(EigenMethod::Dense),
        "lanczos" => Ok(EigenMethod::Lanczos),
        _ => Err(usage(format!("unknown eigen method `{s}` (auto, dense, lanczos)"))),
    }
}

#[derive(Args, Debug)]
pub struct GenAssetsArgs {
    #[arg(long)]
    out_dir: Option<String>,
    /// Icosphere subdivisions of the tet ball.
    #[arg(long)]
    subdiv: Option<u32>,
    /// Concentric shells of the tet ball.
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    bumps: Option<usize>,
    #[arg(long)]
    bump_height: Option<f64>,
    /// Marching-cubes cell size of the character surface.
    #[arg(long)]
    cell: Option<f64>,
}

fn gen_assets(s: &mut Settings, a: GenAssetsArgs) -> Result<Results> {
    let dir = PathBuf::from(s.get("out-dir", a.out_dir, "assets".to_string())?);
    let subdiv = s.get("subdiv", a.subdiv, 3)?;
    let layers = s.get("layers", a.layers, 2)?;
    let bumps = s.get("bumps", a.bumps, 6)?;
    let height = s.get("bump-height", a.bump_height, 0.15)?;
    let cell = s.get("cell", a.cell, 0.03)?;
    s.finish()?;
    if layers == 0 || subdiv > 6 {
        bail!(usage("need layers ≥ 1 and subdiv ≤ 6"));
    }
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let ball = tet_ball(&BumpProfile::new(1.0, bumps, height), subdiv, layers);
    let (node, ele) = write_tetgen(&ball, &dir.join("ball"))?;
    let surface = surface_of(&ball)?;
    write_obj(&surface, &dir.join("ball_surface.obj"))?;
    let ch = capsule_character(cell)?;
    write_obj(&ch.mesh, &dir.join("character.obj"))?;
    let asset = SkinAsset {
        clips: synthetic_clips(&ch.skeleton),
        skeleton: ch.skeleton,
        weights: ch.weights,
    };
    write_skin(&asset, &dir.join("character.skin"))?;
    let mut r = Results::new();
    result(&mut r, "ball.node", node.display());
    result(&mut r, "ball.ele", ele.display());
    result(&mut r, "ball.nodes", ball.vertices().len());
    result(&mut r, "ball.tets", ball.tets().len());
    result(&mut r, "ball.surface_triangles", surface.triangle_count());
    result(&mut r, "character.triangles", ch.mesh.triangle_count());
    result(&mut r, "character.dofs", asset.skeleton.dof_count());
    Ok(r)
}

#[derive(Args, Debug)]
pub struct ModesArgs {
    /// TetGen `.node` file.
    #[arg(long)]
    tet: Option<String>,
    /// TetGen `.ele` file (default: `.node` with the extension swapped).
    #[arg(long)]
    ele: Option<String>,
    /// Non-rigid modes to keep.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    young: Option<f64>,
    #[arg(long)]
    poisson: Option<f64>,
    #[arg(long)]
    density: Option<f64>,
    /// auto, dense or lanczos.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    out: Option<String>,
}

fn modes(s: &mut Settings, a: ModesArgs) -> Result<Results> {
    let tet = s.required("tet", a.tet)?;
    let ele = s.optional("ele", a.ele)?;
    let m = s.get("m", a.m, 128)?;
    let young = s.get("young", a.young, 1e5)?;
    let poisson = s.get("poisson", a.poisson, 0.49)?;
    let density = s.get("density", a.density, 1000.0)?;
    let method = parse_method(&s.get("method", a.method, "auto".to_string())?)?;
    let out = s.get("out", a.out, "basis.bin".to_string())?;
    s.finish()?;
    let mesh = load_tets(&tet, ele)?;
    let t = Instant::now();
    let sys = assemble_fem_system(&mesh, &MaterialParams::new(young, poisson, density)?)?;
    let solve = compute_linear_modes_with(&sys, m, method)?;
    solve.basis.save(Path::new(&out))?;
    let mut r = Results::new();
    result(&mut r, "basis", &out);
    result(&mut r, "nodes", mesh.vertices().len());
    result(&mut r, "modes", solve.basis.mode_count());
    result(&mut r, "lambda7", format!("{:e}", solve.lambda7));
    result(&mut r, "max_residual", format!("{:e}", solve.max_residual));
    result(&mut r, "seconds", format!("{:.3}", t.elapsed().as_secs_f64()));
    Ok(r)
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    /// fem or skin.
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    tet: Option<String>,
    #[arg(long)]
    ele: Option<String>,
    #[arg(long)]
    basis: Option<String>,
    /// Rest surface OBJ of the skinned character.
    #[arg(long)]
    mesh: Option<String>,
    /// Skeleton, weights and clips file.
    #[arg(long)]
    skin: Option<String>,
    #[arg(long)]
    poses: Option<usize>,
    #[arg(long)]
    per_pose: Option<usize>,
    /// surface:near:uniform.
    #[arg(long)]
    ratio: Option<String>,
    /// Expected RMS vertex displacement as a fraction of the bbox diagonal.
    #[arg(long)]
    displacement: Option<f64>,
    #[arg(long)]
    noise: Option<f64>,
    /// Near-sample standard deviation as a fraction of the pose bbox diagonal.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    padding: Option<f64>,
    /// Every k-th frame is held out of skinning datasets (0 keeps all).
    #[arg(long)]
    holdout_every: Option<usize>,
    /// Comma-separated joints left out of the skinning code.
    #[arg(long)]
    exclude: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<String>,
}

fn sampling_config(s: &mut Settings, a: &mut SampleArgs) -> Result<SamplingConfig> {
    let ratio = s.get("ratio", a.ratio.take(), "2:2:1".to_string())?;
    let parts: Vec<u32> = ratio
        .split(':')
        .map(|p| p.trim().parse().map_err(|_| usage(format!("bad ratio `{ratio}`"))))
        .collect::<Result<_>>()?;
    if parts.len() != 3 {
        bail!(usage(format!("ratio `{ratio}` needs three parts")));
    }
    Ok(SamplingConfig {
        samples_per_pose: s.get("per-pose", a.per_pose, 10_000)?,
        ratio: SampleRatio::new(parts[0], parts[1], parts[2])?,
        sigma_near: s.get("sigma", a.sigma, 0.01)?,
        bbox_padding: s.get("padding", a.padding, 0.05)?,
        seed: s.get("seed", a.seed, 0)?,
    })
}

fn sample(s: &mut Settings, mut a: SampleArgs) -> Result<Results> {
    let kind = s.get("kind", a.kind.take(), "fem".to_string())?;
    let cfg = sampling_config(s, &mut a)?;
    let out = s.get("out", a.out.take(), "dataset.bin".to_string())?;
    let t = Instant::now();
    let mut r = Results::new();
    let ds = match kind.as_str() {
        "fem" => {
            let tet = s.required("tet", a.tet)?;
            let ele = s.optional("ele", a.ele)?;
            let basis_path = s.get("basis", a.basis, "basis.bin".to_string())?;
            let count = s.get("poses", a.poses, 1000)?;
            let disp = s.get("displacement", a.displacement, 0.02)?;
            let noise = s.get("noise", a.noise, 0.0)?;
            s.finish()?;
            let mesh = load_tets(&tet, ele)?;
            let basis = ModalBasis::load(Path::new(&basis_path))?;
            let amplitude = amplitude_for_displacement(mesh.vertices(), &basis, disp);
            let poses = generate_fem_poses(
                &mesh,
                &basis,
                &PoseConfig {
                    count,
                    amplitude,
                    noise,
                    max_inverted_fraction: 0.01,
                    seed: cfg.seed,
                },
            )?;
            result(&mut r, "amplitude", format!("{amplitude:e}"));
            result(&mut r, "inverted_elements", poses.iter().map(|p| p.inverted).sum::<usize>());
            let x: Vec<Vec<Vec3>> = poses.into_iter().map(|p| p.vertices).collect();
            let samples = fem_training_poses(&mesh, &surface_of(&mesh)?, &basis, &x)?;
            let enc = EncoderInfo::Fem {
                vertex_count: mesh.vertices().len(),
                mode_count: basis.mode_count(),
                basis_path,
            };
            build_dataset(&samples, CodeKind::Affine, enc, &cfg)?
        }
        "skin" => {
            let mesh = load_obj(Path::new(&s.required::<String>("mesh", a.mesh)?))?;
            let asset = load_skin_file(Path::new(&s.required::<String>("skin", a.skin)?))?;
            let every = s.get("holdout-every", a.holdout_every, 4)?;
            let exclude = s.get("exclude", a.exclude, EXCLUDED_JOINTS.join(","))?;
            s.finish()?;
            let excluded: Vec<&str> = exclude.split(',').map(str::trim).filter(|j| !j.is_empty()).collect();
            let map = build_angle_code_map(&asset.skeleton, &asset.clips, &excluded, 1e-9)?;
            let (frames, held) = split_frames(&asset, every);
            result(&mut r, "training_frames", frames.len());
            result(&mut r, "held_out_frames", held.len());
            result(&mut r, "code_dim", map.code_dim());
            let samples = skin_training_poses(&mesh, &asset.skeleton, &asset.weights, &map, &frames)?;
            build_dataset(&samples, CodeKind::AngleScaled, EncoderInfo::Skin(map), &cfg)?
        }
        other => bail!(usage(format!("unknown sample kind `{other}` (fem, skin)"))),
    };
    write_dataset(&ds, Path::new(&out))?;
    result(&mut r, "dataset", &out);
    result(&mut r, "samples", ds.len());
    result(&mut r, "kind_counts", format!("{:?}", ds.meta.kind_counts));
    result(&mut r, "seconds", format!("{:.3}", t.elapsed().as_secs_f64()));
    Ok(r)
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    data: Option<String>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Hidden layers.
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    /// Validation fraction.
    #[arg(long)]
    val: Option<f64>,
    /// Learning-rate multiplier reached by the last epoch.
    #[arg(long)]
    final_lr: Option<f64>,
    /// Initial gain on first-layer code weights.
    #[arg(long)]
    code_gain: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<String>,
}

fn train(s: &mut Settings, a: TrainArgs) -> Result<Results> {
    let d = TrainConfig::default();
    let data = s.get("data", a.data, "dataset.bin".to_string())?;
    let cfg = TrainConfig {
        learning_rate: s.get("lr", a.lr, d.learning_rate)?,
        delta: s.get("delta", a.delta, d.delta)?,
        hidden_layers: s.get("layers", a.layers, d.hidden_layers)?,
        hidden_width: s.get("width", a.width, d.hidden_width)?,
        epochs: s.get("epochs", a.epochs, d.epochs)?,
        batch_size: s.get("batch", a.batch, d.batch_size)?,
        validation_fraction: s.get("val", a.val, d.validation_fraction)?,
        final_lr_fraction: s.get("final-lr", a.final_lr, d.final_lr_fraction)?,
        code_init_gain: s.get("code-gain", a.code_gain, d.code_init_gain)?,
        seed: s.get("seed", a.seed, d.seed)?,
    };
    let out = s.get("out", a.out, "net.ckpt".to_string())?;
    s.finish()?;
    cfg.validate()?;
    let ds = read_dataset(Path::new(&data))?;
    let t = Instant::now();
    let (net, report) = net::train(&ds, &cfg)?;
    let ck = Checkpoint::new(net, ds.normalization.clone(), ds.meta.encoder.clone(), cfg.delta)?;
    ck.save(Path::new(&out))?;
    let mut csv = String::from("epoch,train_loss,val_loss\n");
    for (e, (tl, vl)) in report.train_loss.iter().zip(&report.val_loss).enumerate() {
        let _ = writeln!(csv, "{e},{tl},{vl}");
    }
    let loss_path = format!("{out}.loss.csv");
    write_text(Path::new(&loss_path), &csv)?;
    let mut r = Results::new();
    result(&mut r, "checkpoint", &out);
    result(&mut r, "loss_csv", loss_path);
    result(&mut r, "final_train_loss", report.train_loss.last().copied().unwrap_or(f64::NAN));
    result(&mut r, "final_val_loss", report.val_loss.last().copied().unwrap_or(f64::NAN));
    result(&mut r, "seconds", format!("{:.3}", t.elapsed().as_secs_f64()));
    Ok(r)
}

/// Checkpoint plus the assets its encoder needs.
#[derive(Args, Debug, Default)]
pub struct ModelArgs {
    #[arg(long)]
    net: Option<String>,
    /// Rest TetGen `.node` file (FEM checkpoints).
    #[arg(long)]
    tet: Option<String>,
    #[arg(long)]
    ele: Option<String>,
    /// Overrides the basis path stored in the checkpoint.
    #[arg(long)]
    basis: Option<String>,
    /// Rest character OBJ (skinning checkpoints).
    #[arg(long)]
    mesh: Option<String>,
    #[arg(long)]
    skin: Option<String>,
}

enum Assets {
    Fem { tets: TetMesh, surface: TriMesh, basis: ModalBasis },
    Skin { mesh: Option<TriMesh>, asset: SkinAsset },
    Generic,
}

struct Model {
    collider: NeuralCollider,
    assets: Assets,
}

fn load_model(s: &mut Settings, a: ModelArgs) -> Result<Model> {
    let ck = Checkpoint::load(Path::new(&s.get("net", a.net, "net.ckpt".to_string())?))?;
    match ck.encoder.clone() {
        EncoderInfo::Fem { basis_path, .. } => {
            let tets = load_tets(&s.required::<String>("tet", a.tet)?, s.optional("ele", a.ele)?)?;
            let basis = ModalBasis::load(Path::new(&s.get("basis", a.basis, basis_path)?))?;
            let surface = surface_of(&tets)?;
            let enc = ColliderEncoder::Fem {
                basis: basis.clone(),
                rest: tets.vertices().to_vec(),
                surface: surface.clone(),
            };
            Ok(Model {
                collider: NeuralCollider::new(ck, enc)?,
                assets: Assets::Fem { tets, surface, basis },
            })
        }
        EncoderInfo::Skin(map) => {
            let asset = load_skin_file(Path::new(&s.required::<String>("skin", a.skin)?))?;
            let mesh = s.optional::<String>("mesh", a.mesh)?.map(|p| load_obj(Path::new(&p))).transpose()?;
            let enc = ColliderEncoder::Skin {
                map,
                skeleton: asset.skeleton.clone(),
            };
            Ok(Model {
                collider: NeuralCollider::new(ck, enc)?,
                assets: Assets::Skin { mesh, asset },
            })
        }
        EncoderInfo::Generic => Ok(Model {
            collider: NeuralCollider::new(ck, ColliderEncoder::Generic)?,
            assets: Assets::Generic,
        }),
    }
}

/// The pose to query: FEM vertex file, skinning angles plus root, or a raw
/// code. Defaults to the rest pose.
#[derive(Args, Debug, Default)]
pub struct PoseArgs {
    /// Deformed vertex positions, `x y z` per line.
    #[arg(long)]
    pose: Option<String>,
    /// Joint angles file (radians, one value per DOF).
    #[arg(long)]
    angles: Option<String>,
    /// Root transform file: 9 rotation entries row-major then 3 translation.
    #[arg(long)]
    root: Option<String>,
    /// Raw code file for generic checkpoints.
    #[arg(long)]
    code: Option<String>,
}

enum Pose {
    Fem(Vec<Vec3>),
    Skin(Vec<f64>, RigidTransform),
    Code(Vec<f64>),
}

impl Pose {
    fn as_ref(&self) -> PoseRef<'_> {
        match self {
            Pose::Fem(x) => PoseRef::Fem(x),
            Pose::Skin(a, r) => PoseRef::Skin {
                angles: a,
                root_world: *r,
            },
            Pose::Code(z) => PoseRef::Code(z),
        }
    }
}

fn load_pose(s: &mut Settings, a: PoseArgs, model: &Model) -> Result<Pose> {
    match &model.assets {
        Assets::Fem { tets, .. } => Ok(Pose::Fem(match s.optional::<String>("pose", a.pose)? {
            Some(p) => read_points(&p)?,
            None => tets.vertices().to_vec(),
        })),
        Assets::Skin { asset, .. } => {
            let angles = match s.optional::<String>("angles", a.angles)? {
                Some(p) => read_numbers(&p)?,
                None => vec![0.0; asset.skeleton.dof_count()],
            };
            let root = match s.optional::<String>("root", a.root)? {
                Some(p) => {
                    let v = read_numbers(&p)?;
                    if v.len() != 12 {
                        bail!(ncd_core::Error::Format(format!("{p}: root transform needs 12 numbers")));
                    }
                    let rot = ncd_core::geom::Mat3::from_row_slice(&v[..9]);
                    RigidTransform::new(rot, Vec3::new(v[9], v[10], v[11]))?
                }
                None => RigidTransform::identity(),
            };
            Ok(Pose::Skin(angles, root))
        }
        Assets::Generic => Ok(Pose::Code(read_numbers(&s.required::<String>("code", a.code)?)?)),
    }
}

#[derive(Args, Debug)]
pub struct QueryArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    pose: PoseArgs,
    /// Query points, `x y z` per line.
    #[arg(long)]
    points: Option<String>,
    /// Resolve colliding triangle IDs (FEM only).
    #[arg(long)]
    triangles: bool,
    /// Nearest triangle when the normal ray misses.
    #[arg(long)]
    fallback: bool,
    #[arg(long)]
    out: Option<String>,
}

fn query(s: &mut Settings, a: QueryArgs) -> Result<Results> {
    let mut model = load_model(s, a.model)?;
    let pose = load_pose(s, a.pose, &model)?;
    let points = read_points(&s.required::<String>("points", a.points)?)?;
    let triangles = s.flag("triangles", a.triangles)?;
    model.collider.triangle_fallback = s.flag("fallback", a.fallback)?;
    let out = s.get("out", a.out, "query.csv".to_string())?;
    s.finish()?;
    let res = model.collider.query(pose.as_ref(), &points, triangles)?;
    let mut csv = String::from("x,y,z,distance,nx,ny,nz,triangle,colliding,degenerate_normal,no_triangle_hit\n");
    for (p, r) in points.iter().zip(&res) {
        let n = r.normal.map_or(",,".to_string(), |n| format!("{},{},{}", n.x, n.y, n.z));
        let tri = r.triangle.map_or(String::new(), |t| t.to_string());
        let f = r.flags;
        let _ = writeln!(
            csv,
            "{},{},{},{},{n},{tri},{},{},{}",
            p.x, p.y, p.z, r.distance, f.colliding as u8, f.degenerate_normal as u8, f.no_triangle_hit as u8
        );
    }
    write_text(Path::new(&out), &csv)?;
    let mut r = Results::new();
    result(&mut r, "output", &out);
    result(&mut r, "points", points.len());
    result(&mut r, "colliding", res.iter().filter(|r| r.flags.colliding).count());
    Ok(r)
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Comma-separated query counts.
    #[arg(long)]
    ns: Option<String>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    warmup: Option<usize>,
    /// Threads inside the timed region.
    #[arg(long)]
    bench_threads: Option<usize>,
    /// Also time the full query (normals and triangle scan).
    #[arg(long)]
    full: bool,
    /// RMS displacement fraction of the random FEM poses.
    #[arg(long)]
    displacement: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<String>,
}

fn bench(s: &mut Settings, a: BenchArgs) -> Result<Results> {
    let model = load_model(s, a.model)?;
    let default_ns = (0..=16).map(|e| (1usize << e).to_string()).collect::<Vec<_>>().join(",");
    let ns_text = s.get("ns", a.ns, default_ns)?;
    let ns: Vec<usize> = ns_text
        .split(',')
        .map(|v| v.trim().parse().map_err(|_| usage(format!("bad query count `{v}`"))))
        .collect::<Result<_>>()?;
    let mut methods = vec![BenchMethod::Bvh, BenchMethod::Neural];
    let cfg_partial = (
        s.get("reps", a.reps, 9)?,
        s.get("warmup", a.warmup, 1)?,
        s.get("bench-threads", a.bench_threads, 1)?,
        s.get("seed", a.seed, 0)?,
    );
    if s.flag("full", a.full)? {
        methods.push(BenchMethod::NeuralFull);
    }
    let displacement = s.get("displacement", a.displacement, 0.02)?;
    let out = s.get("out", a.out, "bench.csv".to_string())?;
    s.finish()?;
    let cfg = BenchConfig {
        ns,
        reps: cfg_partial.0,
        warmup: cfg_partial.1,
        methods,
        threads: cfg_partial.2,
        seed: cfg_partial.3,
    };
    let source: Box<dyn PoseSource> = match model.assets {
        Assets::Fem { tets, surface, basis } => Box::new(FemPoseSource {
            amplitude: amplitude_for_displacement(tets.vertices(), &basis, displacement),
            surface,
            rest: tets.vertices().to_vec(),
            basis,
            seed: cfg.seed,
        }),
        Assets::Skin { mesh, asset } => Box::new(SkinPoseSource {
            rest: mesh.ok_or_else(|| usage("skinning benchmarks need --mesh"))?,
            frames: asset.clips.iter().flat_map(|c| c.frames().to_vec()).collect(),
            skeleton: asset.skeleton,
            weights: asset.weights,
        }),
        Assets::Generic => bail!(usage("benchmarks need an FEM or skinning checkpoint")),
    };
    let report = run_benchmark(source.as_ref(), &model.collider, &cfg)?;
    write_text(Path::new(&out), &records_to_csv(&report.records))?;
    let mut r = Results::new();
    result(&mut r, "csv", &out);
    result(
        &mut r,
        "crossover_n",
        crossover(&report.records)?.map_or("none".to_string(), |x| format!("{x:.1}")),
    );
    for m in &cfg.methods {
        if let Some(k) = loglog_slope(&report.records, *m) {
            result(&mut r, &format!("slope.{}", m.name()), format!("{k:.3}"));
        }
    }
    if let Some(a) = report.sign_agreement {
        result(&mut r, "sign_agreement", format!("{a:.4}"));
    }
    Ok(r)
}

#[derive(Args, Debug)]
pub struct SliceArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    pose: PoseArgs,
    /// Plane normal axis: 0, 1 or 2.
    #[arg(long)]
    axis: Option<usize>,
    #[arg(long)]
    offset: Option<f64>,
    #[arg(long)]
    res: Option<usize>,
    /// Half-width of the square window (default: the training box).
    #[arg(long)]
    half: Option<f64>,
    /// Distance mapped to full black/white in the PGM.
    #[arg(long)]
    pgm_scale: Option<f64>,
    /// Output prefix; writes `<prefix>.csv` and `<prefix>.pgm`.
    #[arg(long)]
    out: Option<String>,
}

fn slice(s: &mut Settings, a: SliceArgs) -> Result<Results> {
    let model = load_model(s, a.model)?;
    let pose = load_pose(s, a.pose, &model)?;
    let norm = model.collider.normalization();
    let center = norm.translation;
    let axis = s.get("axis", a.axis, 2)?;
    if axis > 2 {
        bail!(usage("axis must be 0, 1 or 2"));
    }
    let offset = s.get("offset", a.offset, center[axis])?;
    let res = s.get("res", a.res, 128)?;
    let half = s.get("half", a.half, 1.0 / norm.scale)?;
    let pgm_scale = s.get("pgm-scale", a.pgm_scale, 0.25 * half)?;
    let out = s.get("out", a.out, "slice".to_string())?;
    s.finish()?;
    let others: Vec<usize> = (0..3).filter(|&k| k != axis).collect();
    let plane = SlicePlane {
        axis,
        offset,
        lo: [center[others[0]] - half, center[others[1]] - half],
        hi: [center[others[0]] + half, center[others[1]] + half],
    };
    let grid = levelset_slice(&model.collider, pose.as_ref(), plane, res)?;
    let csv = format!("{out}.csv");
    let pgm = format!("{out}.pgm");
    write_text(Path::new(&csv), &grid.to_csv())?;
    let bytes = grid.to_pgm(pgm_scale)?;
    std::fs::write(&pgm, bytes).with_context(|| format!("writing {pgm}"))?;
    let mut r = Results::new();
    result(&mut r, "csv", csv);
    result(&mut r, "pgm", pgm);
    result(&mut r, "extrapolated_points", grid.extrapolated);
    Ok(r)
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Held-out FEM poses to generate.
    #[arg(long)]
    poses: Option<usize>,
    #[arg(long)]
    displacement: Option<f64>,
    /// Seed of the held-out FEM poses; keep it different from the sampling seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Skinning frames held out at sampling time: every k-th.
    #[arg(long)]
    holdout_every: Option<usize>,
    /// Near-surface band as a fraction of the bbox diagonal.
    #[arg(long)]
    band: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
}

fn eval(s: &mut Settings, a: EvalArgs) -> Result<Results> {
    let model = load_model(s, a.model)?;
    let band_frac = s.get("band", a.band, 0.05)?;
    let per_pose = s.get("points", a.points, 2000)?;
    let seed = s.get("seed", a.seed, 1000)?;
    let (surfaces, poses): (Vec<TriMesh>, Vec<Pose>) = match &model.assets {
        Assets::Fem { tets, surface, basis } => {
            let count = s.get("poses", a.poses, 20)?;
            let disp = s.get("displacement", a.displacement, 0.02)?;
            s.finish()?;
            let cfg = PoseConfig {
                count,
                amplitude: amplitude_for_displacement(tets.vertices(), basis, disp),
                noise: 0.0,
                max_inverted_fraction: 0.01,
                seed,
            };
            let poses = generate_fem_poses(tets, basis, &cfg)?;
            let mut surf = Vec::new();
            let mut ps = Vec::new();
            for p in poses {
                surf.push(surface.with_vertices(p.vertices.clone())?);
                ps.push(Pose::Fem(p.vertices));
            }
            (surf, ps)
        }
        Assets::Skin { mesh, asset } => {
            let every = s.get("holdout-every", a.holdout_every, 4)?;
            s.finish()?;
            let mesh = mesh.as_ref().ok_or_else(|| usage("skinning evaluation needs --mesh"))?;
            let (_, held) = split_frames(asset, every);
            if held.is_empty() {
                bail!(usage("no held-out frames (holdout-every = 0)"));
            }
            let mut surf = Vec::new();
            let mut ps = Vec::new();
            for angles in held {
                surf.push(ncd_core::skin::lbs_deform(mesh, &asset.weights, &asset.skeleton, &angles)?);
                let root = asset.skeleton.world_transforms(&angles)?[0];
                ps.push(Pose::Skin(angles, root));
            }
            (surf, ps)
        }
        Assets::Generic => bail!(usage("evaluation needs an FEM or skinning checkpoint")),
    };
    let diag = surfaces
        .iter()
        .fold(Aabb::empty(), |b, m| b.union(&m.bounds()))
        .diagonal();
    let report = evaluate_accuracy(
        &surfaces,
        |i, q| {
            Ok(model
                .collider
                .query(poses[i].as_ref(), q, false)?
                .iter()
                .map(|c| (c.distance, c.normal))
                .collect())
        },
        band_frac * diag,
        per_pose,
        seed,
    )?;
    let mut r = Results::new();
    result(&mut r, "poses", surfaces.len());
    result(&mut r, "points", report.count);
    result(&mut r, "bbox_diagonal", format!("{diag:.6}"));
    result(&mut r, "mae", format!("{:.6}", report.mae));
    result(&mut r, "mae_over_diagonal", format!("{:.6}", report.mae / diag));
    result(&mut r, "sign_agreement", format!("{:.4}", report.sign_agreement));
    result(&mut r, "mean_normal_angle_deg", format!("{:.3}", report.mean_angle));
    result(&mut r, "p95_normal_angle_deg", format!("{:.3}", report.p95_angle));
    Ok(r)
}
