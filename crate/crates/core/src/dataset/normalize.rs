use crate::error::{Error, Result};
use crate::geom::{Aabb, Vec3};

/// How raw codes map to network inputs.
#[derive(Clone, Debug, PartialEq)]
pub enum CodeNormalization {
    /// Per-element `[lo, hi] → [-1, 1]`; elements with `lo == hi` map to 0.
    Affine { lo: Vec<f64>, hi: Vec<f64> },
    /// Joint-angle codes, already divided by π during encoding.
    AngleScaled { dim: usize },
}

impl CodeNormalization {
    pub fn dim(&self) -> usize {
        match self {
            CodeNormalization::Affine { lo, .. } => lo.len(),
            CodeNormalization::AngleScaled { dim } => *dim,
        }
    }

    /// Indices of affine elements that were constant over the fit set.
    pub fn constant_elements(&self) -> Vec<usize> {
        match self {
            CodeNormalization::Affine { lo, hi } => (0..lo.len()).filter(|&i| hi[i] <= lo[i]).collect(),
            CodeNormalization::AngleScaled { .. } => Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CodeKind {
    Affine,
    AngleScaled,
}

/// `q_norm = s·(q − t)`, `d_norm = s·d`, codes per [`CodeNormalization`].
#[derive(Clone, Debug, PartialEq)]
pub struct Normalization {
    pub scale: f64,
    pub translation: Vec3,
    pub code: CodeNormalization,
}

impl Normalization {
    pub fn normalize_point(&self, q: &Vec3) -> Vec3 {
        (q - self.translation) * self.scale
    }

    pub fn denormalize_point(&self, q: &Vec3) -> Vec3 {
        q / self.scale + self.translation
    }

    pub fn normalize_distance(&self, d: f64) -> f64 {
        d * self.scale
    }

    pub fn denormalize_distance(&self, d: f64) -> f64 {
        d / self.scale
    }

    pub fn code_dim(&self) -> usize {
        self.code.dim()
    }

    pub fn normalize_code(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(z.len())?;
        Ok(match &self.code {
            CodeNormalization::Affine { lo, hi } => z
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(v, (l, h))| if h > l { 2.0 * (v - l) / (h - l) - 1.0 } else { 0.0 })
                .collect(),
            CodeNormalization::AngleScaled { .. } => z.to_vec(),
        })
    }

    /// Constant elements come back as their fitted value.
    pub fn denormalize_code(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(z.len())?;
        Ok(match &self.code {
            CodeNormalization::Affine { lo, hi } => z
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(v, (l, h))| if h > l { l + (v + 1.0) * 0.5 * (h - l) } else { *l })
                .collect(),
            CodeNormalization::AngleScaled { .. } => z.to_vec(),
        })
    }

    fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.code_dim() {
            return Err(Error::DimensionMismatch {
                what: "code dimension",
                expected: self.code_dim(),
                found,
            });
        }
        Ok(())
    }
}

/// Uniform scale taking the longest axis of `bbox` to span 2, centered on
/// the box, plus the code map fitted to `codes`.
pub fn fit_normalization(bbox: &Aabb, codes: &[Vec<f64>], kind: CodeKind) -> Result<Normalization> {
    if bbox.is_empty() {
        return Err(Error::Empty("bounding box"));
    }
    let longest = bbox.extent().max();
    if !(longest > 0.0) {
        return Err(Error::InvalidArgument("bounding box has zero extent".into()));
    }
    let first = codes.first().ok_or(Error::Empty("codes"))?;
    let dim = first.len();
    if let Some(bad) = codes.iter().find(|c| c.len() != dim) {
        return Err(Error::DimensionMismatch {
            what: "code dimension",
            expected: dim,
            found: bad.len(),
        });
    }
    let code = match kind {
        CodeKind::Affine => {
            let mut lo = vec![f64::INFINITY; dim];
            let mut hi = vec![f64::NEG_INFINITY; dim];
            for c in codes {
                for (i, v) in c.iter().enumerate() {
                    lo[i] = lo[i].min(*v);
                    hi[i] = hi[i].max(*v);
                }
            }
            let constant = (0..dim).filter(|&i| hi[i] <= lo[i]).count();
            if constant > 0 {
                log::info!("{constant} constant code elements map to 0");
            }
            CodeNormalization::Affine { lo, hi }
        }
        CodeKind::AngleScaled => CodeNormalization::AngleScaled { dim },
    };
    Ok(Normalization {
        scale: 2.0 / longest,
        translation: bbox.center(),
        code,
    })
}
