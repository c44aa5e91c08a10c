use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::binio::{self, Reader};
use crate::error::{Error, Result};
use crate::geom::{kabsch_align_weighted, RigidTransform, Vec3};

const MAGIC: &[u8; 4] = b"NCMB";
pub const BASIS_FORMAT_VERSION: u8 = 1;

/// Euclidean-orthonormal displacement modes `U` (3n × m) with their
/// generalized eigenvalues, ascending, and the lumped vertex masses used to
/// strip rigid motion before projecting.
#[derive(Clone, Debug, PartialEq)]
pub struct ModalBasis {
    u: DMatrix<f64>,
    eigenvalues: Vec<f64>,
    vertex_mass: Vec<f64>,
}

impl ModalBasis {
    pub fn new(u: DMatrix<f64>, eigenvalues: Vec<f64>, vertex_mass: Vec<f64>) -> Result<Self> {
        if u.nrows() % 3 != 0 || u.ncols() != eigenvalues.len() {
            return Err(Error::DimensionMismatch {
                what: "modal basis columns",
                expected: u.ncols(),
                found: eigenvalues.len(),
            });
        }
        if vertex_mass.len() * 3 != u.nrows() {
            return Err(Error::DimensionMismatch {
                what: "vertex mass count",
                expected: u.nrows() / 3,
                found: vertex_mass.len(),
            });
        }
        if vertex_mass.iter().any(|m| !(*m > 0.0)) {
            return Err(Error::Format("vertex masses must be positive".into()));
        }
        Ok(Self {
            u,
            eigenvalues,
            vertex_mass,
        })
    }

    pub fn vertex_mass(&self) -> &[f64] {
        &self.vertex_mass
    }

    pub fn u(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn vertex_count(&self) -> usize {
        self.u.nrows() / 3
    }

    pub fn mode_count(&self) -> usize {
        self.u.ncols()
    }

    /// Keeps the first `m` modes.
    pub fn truncated(&self, m: usize) -> Result<Self> {
        if m == 0 || m > self.mode_count() {
            return Err(Error::InvalidArgument(format!("cannot truncate {} modes to {m}", self.mode_count())));
        }
        Self::new(
            self.u.columns(0, m).into_owned(),
            self.eigenvalues[..m].to_vec(),
            self.vertex_mass.clone(),
        )
    }

    /// `Uᵀ d` for a per-vertex displacement field.
    pub fn project(&self, displacement: &[Vec3]) -> Result<Vec<f64>> {
        self.check_len(displacement.len())?;
        let d = DVector::from_iterator(3 * displacement.len(), displacement.iter().flat_map(|v| [v.x, v.y, v.z]));
        Ok(self.u.tr_mul(&d).iter().copied().collect())
    }

    /// `U z` as a per-vertex displacement field.
    pub fn reconstruct(&self, z: &[f64]) -> Result<Vec<Vec3>> {
        if z.len() != self.mode_count() {
            return Err(Error::DimensionMismatch {
                what: "modal code",
                expected: self.mode_count(),
                found: z.len(),
            });
        }
        let d = &self.u * DVector::from_column_slice(z);
        Ok(d.as_slice().chunks_exact(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect())
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n != self.vertex_count() {
            return Err(Error::DimensionMismatch {
                what: "vertex count",
                expected: self.vertex_count(),
                found: n,
            });
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(13 + 8 * (self.eigenvalues.len() + self.vertex_mass.len() + self.u.len()));
        out.extend_from_slice(MAGIC);
        out.push(BASIS_FORMAT_VERSION);
        binio::put_u32(&mut out, self.vertex_count() as u32);
        binio::put_u32(&mut out, self.mode_count() as u32);
        binio::put_f64s(&mut out, &self.eigenvalues);
        binio::put_f64s(&mut out, &self.vertex_mass);
        binio::put_f64s(&mut out, self.u.as_slice());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes, "modal basis");
        r.magic(MAGIC)?;
        let version = r.u8()?;
        if version != BASIS_FORMAT_VERSION {
            return Err(Error::Format(format!("modal basis: unsupported version {version}")));
        }
        let n = r.u32()? as usize;
        let m = r.u32()? as usize;
        let eigenvalues = r.f64s(m)?;
        let vertex_mass = r.f64s(n)?;
        let u = r.f64s(3 * n * m)?;
        r.finish()?;
        Self::new(DMatrix::from_vec(3 * n, m, u), eigenvalues, vertex_mass)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        binio::write_file(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&binio::read_file(path)?)
    }
}

/// Removes the rigid part of `x` relative to `rest` and projects what is
/// left onto the modes: `z = Uᵀ(x̄ − X)` where `x̄ = align(x)`.
///
/// The alignment is mass-weighted. Elastic modes are mass-orthogonal to the
/// rigid ones, so a pure modal displacement aligns to the identity and
/// `encode_fem(X + U c) = c` holds exactly.
pub fn encode_fem(x: &[Vec3], rest: &[Vec3], basis: &ModalBasis) -> Result<(Vec<f64>, RigidTransform)> {
    if x.len() != rest.len() {
        return Err(Error::DimensionMismatch {
            what: "pose vertex count",
            expected: rest.len(),
            found: x.len(),
        });
    }
    let align = kabsch_align_weighted(x, rest, &basis.vertex_mass)?;
    let disp: Vec<Vec3> = x.iter().zip(rest).map(|(p, r)| align.apply_point(p) - r).collect();
    Ok((basis.project(&disp)?, align))
}
