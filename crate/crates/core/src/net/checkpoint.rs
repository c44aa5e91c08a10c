//! `NCNN` checkpoints: magic, `u32` version, layer dims, activation tag,
//! clamp δ, normalization, encoder metadata, `f32` parameters, CRC-32.

use std::path::Path;

use super::mlp::Mlp;
use crate::binio::{self, Reader};
use crate::dataset::{read_encoder, read_normalization, write_encoder, write_normalization, EncoderInfo, Normalization};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"NCNN";
pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;
const RELU_TANH: u8 = 0;

/// A trained network with everything needed to query it.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub net: Mlp<f32>,
    pub normalization: Normalization,
    pub encoder: EncoderInfo,
    pub delta: f64,
}

impl Checkpoint {
    pub fn new(net: Mlp<f32>, normalization: Normalization, encoder: EncoderInfo, delta: f64) -> Result<Self> {
        if net.input_dim() != normalization.code_dim() + 3 {
            return Err(Error::DimensionMismatch {
                what: "network input vs code dimension + 3",
                expected: normalization.code_dim() + 3,
                found: net.input_dim(),
            });
        }
        Ok(Self {
            net,
            normalization,
            encoder,
            delta,
        })
    }

    pub fn code_dim(&self) -> usize {
        self.normalization.code_dim()
    }

    /// Fails unless the checkpoint was trained on `m`-dimensional codes.
    pub fn expect_code_dim(&self, m: usize) -> Result<()> {
        if self.code_dim() != m {
            return Err(Error::DimensionMismatch {
                what: "checkpoint code dimension",
                expected: m,
                found: self.code_dim(),
            });
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(256 + 4 * self.net.param_count());
        out.extend_from_slice(MAGIC);
        binio::put_u32(&mut out, CHECKPOINT_FORMAT_VERSION);
        binio::put_u32(&mut out, self.net.dims().len() as u32);
        self.net.dims().iter().for_each(|&d| binio::put_u32(&mut out, d as u32));
        out.push(RELU_TANH);
        binio::put_f64(&mut out, self.delta);
        write_normalization(&mut out, &self.normalization);
        write_encoder(&mut out, &self.encoder);
        binio::put_u64(&mut out, self.net.param_count() as u64);
        binio::put_f32s(&mut out, self.net.params());
        binio::seal(&mut out);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() >= 4 && &bytes[..4] != MAGIC {
            return Err(Error::Format("checkpoint: bad magic".into()));
        }
        let body = binio::unseal(bytes, "checkpoint")?;
        let mut r = Reader::new(body, "checkpoint");
        r.magic(MAGIC)?;
        let version = r.u32()?;
        if version != CHECKPOINT_FORMAT_VERSION {
            return Err(Error::Format(format!("checkpoint: unsupported version {version}")));
        }
        let layers = r.u32()? as usize;
        if layers > 4096 {
            return Err(Error::Format(format!("checkpoint: implausible layer count {layers}")));
        }
        let dims = (0..layers).map(|_| Ok(r.u32()? as usize)).collect::<Result<Vec<_>>>()?;
        let act = r.u8()?;
        if act != RELU_TANH {
            return Err(Error::Format(format!("checkpoint: unknown activation tag {act}")));
        }
        let delta = r.f64()?;
        let normalization = read_normalization(&mut r)?;
        let encoder = read_encoder(&mut r)?;
        let count = r.usize()?;
        let params = r.f32s(count)?;
        r.finish()?;
        Self::new(Mlp::from_parts(dims, params)?, normalization, encoder, delta)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        binio::write_file(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&binio::read_file(path)?)
    }
}
