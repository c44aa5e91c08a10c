//! `NCDS` dataset files: magic, `u32` version, metadata, packed `f32`
//! rows, CRC-32 trailer, all little-endian.

use std::path::Path;

use super::{CodeNormalization, Dataset, DatasetMeta, EncoderInfo, Normalization, SampleRatio};
use crate::binio::{self, Reader};
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::skin::AngleCodeMap;

const MAGIC: &[u8; 4] = b"NCDS";
pub const DATASET_FORMAT_VERSION: u32 = 1;

pub(crate) fn write_normalization(out: &mut Vec<u8>, n: &Normalization) {
    binio::put_f64(out, n.scale);
    binio::put_f64s(out, n.translation.as_slice());
    match &n.code {
        CodeNormalization::Affine { lo, hi } => {
            out.push(0);
            binio::put_u32(out, lo.len() as u32);
            binio::put_f64s(out, lo);
            binio::put_f64s(out, hi);
        }
        CodeNormalization::AngleScaled { dim } => {
            out.push(1);
            binio::put_u32(out, *dim as u32);
        }
    }
}

pub(crate) fn read_normalization(r: &mut Reader<'_>) -> Result<Normalization> {
    let scale = r.f64()?;
    let t = r.f64s(3)?;
    let code = match r.u8()? {
        0 => {
            let m = r.u32()? as usize;
            CodeNormalization::Affine {
                lo: r.f64s(m)?,
                hi: r.f64s(m)?,
            }
        }
        1 => CodeNormalization::AngleScaled { dim: r.u32()? as usize },
        tag => return Err(Error::Format(format!("unknown code normalization tag {tag}"))),
    };
    if !(scale > 0.0) {
        return Err(Error::Format(format!("normalization scale {scale} is not positive")));
    }
    Ok(Normalization {
        scale,
        translation: Vec3::new(t[0], t[1], t[2]),
        code,
    })
}

pub(crate) fn write_encoder(out: &mut Vec<u8>, e: &EncoderInfo) {
    match e {
        EncoderInfo::Generic => out.push(0),
        EncoderInfo::Fem {
            vertex_count,
            mode_count,
            basis_path,
        } => {
            out.push(1);
            binio::put_u64(out, *vertex_count as u64);
            binio::put_u64(out, *mode_count as u64);
            binio::put_string(out, basis_path);
        }
        EncoderInfo::Skin(map) => {
            out.push(2);
            binio::put_u64(out, map.dof_count as u64);
            binio::put_u32(out, map.kept.len() as u32);
            for (&dof, &(joint, slot)) in map.kept.iter().zip(&map.kept_dofs) {
                binio::put_u64(out, dof as u64);
                binio::put_u32(out, joint as u32);
                binio::put_u32(out, slot as u32);
            }
            binio::put_u32(out, map.excluded_joints.len() as u32);
            map.excluded_joints.iter().for_each(|s| binio::put_string(out, s));
            binio::put_u32(out, map.constant_values.len() as u32);
            for &(dof, v) in &map.constant_values {
                binio::put_u64(out, dof as u64);
                binio::put_f64(out, v);
            }
        }
    }
}

pub(crate) fn read_encoder(r: &mut Reader<'_>) -> Result<EncoderInfo> {
    Ok(match r.u8()? {
        0 => EncoderInfo::Generic,
        1 => EncoderInfo::Fem {
            vertex_count: r.usize()?,
            mode_count: r.usize()?,
            basis_path: r.string()?,
        },
        2 => {
            let dof_count = r.usize()?;
            let nk = r.u32()? as usize;
            let mut kept = Vec::with_capacity(nk.min(1 << 16));
            let mut kept_dofs = Vec::with_capacity(nk.min(1 << 16));
            for _ in 0..nk {
                kept.push(r.usize()?);
                kept_dofs.push((r.u32()? as usize, r.u32()? as usize));
            }
            let ne = r.u32()? as usize;
            let excluded_joints = (0..ne).map(|_| r.string()).collect::<Result<_>>()?;
            let nc = r.u32()? as usize;
            let constant_values = (0..nc).map(|_| Ok((r.usize()?, r.f64()?))).collect::<Result<_>>()?;
            EncoderInfo::Skin(AngleCodeMap {
                kept,
                kept_dofs,
                excluded_joints,
                constant_values,
                dof_count,
            })
        }
        tag => return Err(Error::Format(format!("unknown encoder tag {tag}"))),
    })
}

pub fn dataset_to_bytes(ds: &Dataset) -> Vec<u8> {
    let mut out = Vec::with_capacity(256 + 4 * ds.raw().len());
    out.extend_from_slice(MAGIC);
    binio::put_u32(&mut out, DATASET_FORMAT_VERSION);
    let m = &ds.meta;
    binio::put_u64(&mut out, m.pose_count as u64);
    binio::put_u64(&mut out, m.samples_per_pose as u64);
    binio::put_u32(&mut out, m.code_dim as u32);
    for w in [m.ratio.surface, m.ratio.near, m.ratio.uniform] {
        binio::put_u32(&mut out, w);
    }
    m.kind_counts.iter().for_each(|&c| binio::put_u64(&mut out, c));
    binio::put_u64(&mut out, m.seed);
    write_normalization(&mut out, &ds.normalization);
    write_encoder(&mut out, &m.encoder);
    binio::put_u64(&mut out, ds.raw().len() as u64);
    binio::put_f32s(&mut out, ds.raw());
    binio::seal(&mut out);
    out
}

pub fn dataset_from_bytes(bytes: &[u8]) -> Result<Dataset> {
    if bytes.len() >= 4 && &bytes[..4] != MAGIC {
        return Err(Error::Format("dataset: bad magic".into()));
    }
    let body = binio::unseal(bytes, "dataset")?;
    let mut r = Reader::new(body, "dataset");
    r.magic(MAGIC)?;
    let version = r.u32()?;
    if version != DATASET_FORMAT_VERSION {
        return Err(Error::Format(format!("dataset: unsupported version {version}")));
    }
    let pose_count = r.usize()?;
    let samples_per_pose = r.usize()?;
    let code_dim = r.u32()? as usize;
    let ratio = SampleRatio::new(r.u32()?, r.u32()?, r.u32()?)?;
    let kind_counts = [r.u64()?, r.u64()?, r.u64()?];
    let seed = r.u64()?;
    let normalization = read_normalization(&mut r)?;
    let encoder = read_encoder(&mut r)?;
    let len = r.usize()?;
    let samples = r.f32s(len)?;
    r.finish()?;
    Dataset::new(
        normalization,
        DatasetMeta {
            pose_count,
            samples_per_pose,
            code_dim,
            ratio,
            kind_counts,
            seed,
            encoder,
        },
        samples,
    )
}

pub fn write_dataset(ds: &Dataset, path: &Path) -> Result<()> {
    binio::write_file(path, &dataset_to_bytes(ds))
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    dataset_from_bytes(&binio::read_file(path)?)
}
