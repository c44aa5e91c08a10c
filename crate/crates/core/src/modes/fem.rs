use nalgebra::Matrix3;

use super::sparse::CsrMatrix;
use crate::error::{Error, Result};
use crate::geom::{TetMesh, Vec3};

/// Isotropic linear elastic material.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaterialParams {
    youngs_modulus: f64,
    poisson_ratio: f64,
    density: f64,
}

impl MaterialParams {
    pub fn new(youngs_modulus: f64, poisson_ratio: f64, density: f64) -> Result<Self> {
        if !(youngs_modulus > 0.0) || !(poisson_ratio > 0.0 && poisson_ratio < 0.5) || !(density > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "material needs E > 0, 0 < nu < 0.5, rho > 0 (got {youngs_modulus}, {poisson_ratio}, {density})"
            )));
        }
        Ok(Self {
            youngs_modulus,
            poisson_ratio,
            density,
        })
    }

    pub fn youngs_modulus(&self) -> f64 {
        self.youngs_modulus
    }

    pub fn poisson_ratio(&self) -> f64 {
        self.poisson_ratio
    }

    pub fn density(&self) -> f64 {
        self.density
    }

    /// `(lambda, mu)`.
    pub fn lame(&self) -> (f64, f64) {
        let (e, nu) = (self.youngs_modulus, self.poisson_ratio);
        (e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)), e / (2.0 * (1.0 + nu)))
    }
}

impl Default for MaterialParams {
    fn default() -> Self {
        Self {
            youngs_modulus: 1.0e5,
            poisson_ratio: 0.49,
            density: 1000.0,
        }
    }
}

/// Stiffness and lumped mass, both indexed `[x0, y0, z0, x1, ...]`.
#[derive(Clone, Debug)]
pub struct FemSystem {
    pub stiffness: CsrMatrix,
    pub mass: Vec<f64>,
}

impl FemSystem {
    pub fn dof_count(&self) -> usize {
        self.mass.len()
    }
}

/// Shape function gradients of a linear tet and its volume.
fn shape_gradients(x: [Vec3; 4]) -> Result<([Vec3; 4], f64)> {
    let dm = Matrix3::from_columns(&[x[1] - x[0], x[2] - x[0], x[3] - x[0]]);
    let vol = dm.determinant() / 6.0;
    if !(vol > 0.0) {
        return Err(Error::Numeric(format!("tet volume {vol} is not positive")));
    }
    let inv = dm.try_inverse().ok_or_else(|| Error::Numeric("singular tet".into()))?;
    let g1 = inv.row(0).transpose();
    let g2 = inv.row(1).transpose();
    let g3 = inv.row(2).transpose();
    Ok(([-(g1 + g2 + g3), g1, g2, g3], vol))
}

/// 12×12 constant-strain stiffness as 3×3 blocks `k[a][b]`.
pub fn element_stiffness(x: [Vec3; 4], mat: &MaterialParams) -> Result<[[Matrix3<f64>; 4]; 4]> {
    let (g, vol) = shape_gradients(x)?;
    let (lambda, mu) = mat.lame();
    let mut k = [[Matrix3::zeros(); 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            k[a][b] = vol
                * (lambda * g[a] * g[b].transpose()
                    + mu * g[b] * g[a].transpose()
                    + Matrix3::identity() * (mu * g[a].dot(&g[b])));
        }
    }
    Ok(k)
}

pub fn assemble_fem_system(mesh: &TetMesh, mat: &MaterialParams) -> Result<FemSystem> {
    let n = mesh.vertices().len();
    let verts = mesh.vertices();
    let mut triplets = Vec::with_capacity(mesh.tets().len() * 144);
    let mut mass = vec![0.0; 3 * n];
    for (ti, tet) in mesh.tets().iter().enumerate() {
        let x = tet.map(|i| verts[i as usize]);
        let k = element_stiffness(x, mat).map_err(|_| Error::DegenerateTet { index: ti })?;
        let share = mat.density() * mesh.volume(ti) / 4.0;
        for a in 0..4 {
            let ia = tet[a] as usize;
            for d in 0..3 {
                mass[3 * ia + d] += share;
            }
            for b in 0..4 {
                let ib = tet[b] as usize;
                for r in 0..3 {
                    for c in 0..3 {
                        triplets.push((3 * ia + r, 3 * ib + c, k[a][b][(r, c)]));
                    }
                }
            }
        }
    }
    Ok(FemSystem {
        stiffness: CsrMatrix::from_triplets(3 * n, triplets),
        mass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assets::{five_tet_cube, tet_ball, BumpProfile};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Strain energy from the deformation gradient of the edge matrices.
    fn tet_energy(x: [Vec3; 4], u: &[f64], mat: &MaterialParams) -> f64 {
        let dm = Matrix3::from_columns(&[x[1] - x[0], x[2] - x[0], x[3] - x[0]]);
        let disp = |a: usize| Vec3::new(u[3 * a], u[3 * a + 1], u[3 * a + 2]);
        let du = Matrix3::from_columns(&[disp(1) - disp(0), disp(2) - disp(0), disp(3) - disp(0)]);
        let grad = du * dm.try_inverse().unwrap();
        let eps = 0.5 * (grad + grad.transpose());
        let (lambda, mu) = mat.lame();
        let vol = dm.determinant() / 6.0;
        vol * (mu * eps.component_mul(&eps).sum() + 0.5 * lambda * eps.trace().powi(2))
    }

    #[test]
    fn single_tet_matches_energy_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mat = MaterialParams::new(2.0e3, 0.3, 1.0).unwrap();
        let x = [
            Vec3::new(0.1, 0.0, 0.0),
            Vec3::new(1.0, 0.2, 0.1),
            Vec3::new(0.0, 0.9, 0.2),
            Vec3::new(0.2, 0.1, 1.1),
        ];
        let k = element_stiffness(x, &mat).unwrap();
        for _ in 0..10 {
            let u: Vec<f64> = (0..12).map(|_| rng.random_range(-0.1..0.1)).collect();
            // gradient of the energy equals K u
            let h = 1e-6;
            for i in 0..12 {
                let mut up = u.clone();
                let mut um = u.clone();
                up[i] += h;
                um[i] -= h;
                let fd = (tet_energy(x, &up, &mat) - tet_energy(x, &um, &mat)) / (2.0 * h);
                let (a, r) = (i / 3, i % 3);
                let ku: f64 = (0..4).map(|b| (0..3).map(|c| k[a][b][(r, c)] * u[3 * b + c]).sum::<f64>()).sum();
                assert!((fd - ku).abs() <= 1e-6 * ku.abs().max(1.0), "{fd} vs {ku}");
            }
        }
    }

    #[test]
    fn translations_are_in_the_kernel() {
        let mesh = tet_ball(&BumpProfile::new(1.0, 6, 0.15), 1, 2);
        let sys = assemble_fem_system(&mesh, &MaterialParams::default()).unwrap();
        let norm = sys.stiffness.to_dense().norm();
        for axis in 0..3 {
            let t: Vec<f64> = (0..sys.dof_count()).map(|i| if i % 3 == axis { 1.0 } else { 0.0 }).collect();
            let r = sys.stiffness.mul_vec(&t);
            let rn = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(rn <= 1e-8 * norm);
        }
        assert!(sys.stiffness.asymmetry() <= 1e-10);
    }

    #[test]
    fn lumped_mass_conserves_total() {
        let mesh = five_tet_cube();
        let mat = MaterialParams::new(1.0, 0.4, 2.5).unwrap();
        let sys = assemble_fem_system(&mesh, &mat).unwrap();
        let total: f64 = sys.mass.iter().sum::<f64>() / 3.0;
        let want = 2.5 * mesh.total_volume();
        assert!((total - want).abs() <= 1e-10 * want);
        assert!(sys.mass.iter().all(|&m| m > 0.0));
    }

    #[test]
    fn material_validation() {
        assert!(MaterialParams::new(1.0, 0.5, 1.0).is_err());
        assert!(MaterialParams::new(0.0, 0.3, 1.0).is_err());
        assert!(MaterialParams::new(1.0, 0.3, -1.0).is_err());
    }
}
