use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::basis::ModalBasis;
use super::fem::FemSystem;
use super::sparse::{CsrMatrix, SkylineCholesky};
use crate::error::{Error, Result};

/// Eigenvalues below `RIGID_EPS * lambda_7` count as rigid modes.
pub const RIGID_EPS: f64 = 1e-6;
/// Acceptance threshold on `‖Kφ − λMφ‖ / ‖Kφ‖`.
pub const RESIDUAL_TOL: f64 = 1e-6;
const RIGID_COUNT: usize = 6;
const DENSE_LIMIT: usize = 1500;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EigenMethod {
    /// Dense below 1500 degrees of freedom, Lanczos above.
    #[default]
    Auto,
    Dense,
    /// Shift-invert Lanczos with full reorthogonalization.
    Lanczos,
}

/// Everything the eigensolve produced, before and after orthonormalization.
#[derive(Clone, Debug)]
pub struct ModalSolve {
    pub basis: ModalBasis,
    /// Mass-orthonormal generalized eigenvectors of the retained modes.
    pub phi: DMatrix<f64>,
    /// The smallest six eigenvalues, discarded as rigid.
    pub rigid_eigenvalues: Vec<f64>,
    pub lambda7: f64,
    pub max_residual: f64,
    pub krylov_dim: usize,
}

pub fn compute_linear_modes(sys: &FemSystem, m: usize) -> Result<ModalBasis> {
    compute_linear_modes_with(sys, m, EigenMethod::Auto).map(|s| s.basis)
}

pub fn compute_linear_modes_with(sys: &FemSystem, m: usize, method: EigenMethod) -> Result<ModalSolve> {
    let dofs = sys.dof_count();
    if m == 0 || m + RIGID_COUNT > dofs {
        return Err(Error::InvalidArgument(format!(
            "mode count {m} must be in 1..={}",
            dofs.saturating_sub(RIGID_COUNT)
        )));
    }
    let inv_sqrt_m: Vec<f64> = sys.mass.iter().map(|&w| 1.0 / w.sqrt()).collect();
    let a = sys.stiffness.scaled_symmetric(&inv_sqrt_m);
    let want = m + RIGID_COUNT;
    let dense = match method {
        EigenMethod::Dense => true,
        EigenMethod::Lanczos => false,
        EigenMethod::Auto => dofs <= DENSE_LIMIT,
    };
    let (vals, vecs, krylov_dim) = if dense {
        let (v, y) = dense_smallest(&a, want);
        (v, y, dofs)
    } else {
        lanczos_smallest(sys, &a, &inv_sqrt_m, want)?
    };

    let lambda7 = vals[RIGID_COUNT];
    let scale = a.diagonal().iter().sum::<f64>() / dofs as f64;
    let rigid = vals.iter().filter(|&&v| v < RIGID_EPS * lambda7).count();
    if rigid != RIGID_COUNT || lambda7 <= 1e-9 * scale {
        return Err(Error::Numeric(format!(
            "expected exactly 6 rigid modes below {RIGID_EPS:e} * lambda_7, found {rigid} (lambda_7 = {lambda7:e})"
        )));
    }

    let mut phi = DMatrix::zeros(dofs, m);
    for j in 0..m {
        let mut col: Vec<f64> = vecs[RIGID_COUNT + j].iter().zip(&inv_sqrt_m).map(|(y, s)| y * s).collect();
        canonical_sign(&mut col);
        phi.set_column(j, &DVector::from_vec(col));
    }
    let eigenvalues = vals[RIGID_COUNT..want].to_vec();
    let max_residual = (0..m)
        .map(|j| generalized_residual(sys, phi.column(j).as_slice(), eigenvalues[j]))
        .fold(0.0f64, f64::max);
    if max_residual > RESIDUAL_TOL {
        return Err(Error::Numeric(format!("eigen residual {max_residual:e} above {RESIDUAL_TOL:e}")));
    }
    let u = orthonormalize(&phi);
    Ok(ModalSolve {
        basis: ModalBasis::new(u, eigenvalues, sys.mass.iter().step_by(3).copied().collect())?,
        phi,
        rigid_eigenvalues: vals[..RIGID_COUNT].to_vec(),
        lambda7,
        max_residual,
        krylov_dim,
    })
}

/// `‖Kφ − λMφ‖ / ‖Kφ‖`.
pub fn generalized_residual(sys: &FemSystem, phi: &[f64], lambda: f64) -> f64 {
    let kphi = sys.stiffness.mul_vec(phi);
    let r: f64 = kphi
        .iter()
        .zip(phi.iter().zip(&sys.mass))
        .map(|(k, (p, w))| (k - lambda * w * p).powi(2))
        .sum();
    let k: f64 = kphi.iter().map(|v| v * v).sum();
    (r / k).sqrt()
}

fn canonical_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() * (1.0 + 1e-9) {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Modified Gram–Schmidt, two passes.
fn orthonormalize(phi: &DMatrix<f64>) -> DMatrix<f64> {
    let mut q = phi.clone();
    for j in 0..q.ncols() {
        for _ in 0..2 {
            for i in 0..j {
                let d = q.column(i).dot(&q.column(j));
                let qi = q.column(i).into_owned();
                q.column_mut(j).axpy(-d, &qi, 1.0);
            }
        }
        let n = q.column(j).norm();
        q.column_mut(j).scale_mut(1.0 / n);
    }
    q
}

fn rayleigh(a: &CsrMatrix, y: &[f64]) -> f64 {
    let ay = a.mul_vec(y);
    let num: f64 = ay.iter().zip(y).map(|(p, q)| p * q).sum();
    num / y.iter().map(|v| v * v).sum::<f64>()
}

fn dense_smallest(a: &CsrMatrix, want: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let eig = SymmetricEigen::new(a.to_dense());
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    idx.truncate(want);
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = idx.iter().map(|&i| eig.eigenvectors.column(i).iter().copied().collect()).collect();
    (vals, vecs)
}

fn lanczos_smallest(
    sys: &FemSystem,
    a: &CsrMatrix,
    inv_sqrt_m: &[f64],
    want: usize,
) -> Result<(Vec<f64>, Vec<Vec<f64>>, usize)> {
    let n = a.n();
    let tau = 1e-6 * a.diagonal().iter().sum::<f64>() / n as f64;
    let mut t = Vec::with_capacity(a.nnz() + n);
    for i in 0..n {
        t.extend(a.row(i).map(|(j, v)| (i, j, v)));
        t.push((i, i, tau));
    }
    let shifted = CsrMatrix::from_triplets(n, t);
    let chol = SkylineCholesky::factor(&shifted)?;
    log::debug!("envelope size {} for {} dofs", chol.envelope_size(), n);

    let mut k = (2 * want + 20).min(n);
    loop {
        let (vals, vecs) = lanczos_run(&chol, a, n, k, want);
        let worst = (RIGID_COUNT..want)
            .map(|j| {
                let phi: Vec<f64> = vecs[j].iter().zip(inv_sqrt_m).map(|(y, s)| y * s).collect();
                generalized_residual(sys, &phi, vals[j])
            })
            .fold(0.0f64, f64::max);
        // margin below the acceptance tolerance
        if worst <= 1e-2 * RESIDUAL_TOL || k == n {
            return Ok((vals, vecs, k));
        }
        log::debug!("lanczos k={k} residual {worst:e}, growing");
        k = (k + (k / 2).max(20)).min(n);
    }
}

fn lanczos_run(chol: &SkylineCholesky, a: &CsrMatrix, n: usize, k: usize, want: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6d6f646573);
    let mut random_unit = |basis: &[Vec<f64>]| {
        let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        reorthogonalize(&mut v, basis);
        let nv = norm(&v);
        v.iter_mut().for_each(|x| *x /= nv);
        v
    };
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut alpha = Vec::with_capacity(k);
    let mut beta: Vec<f64> = Vec::with_capacity(k);
    basis.push(random_unit(&basis));
    for j in 0..k {
        let mut w = chol.solve(&basis[j]);
        let aj: f64 = w.iter().zip(&basis[j]).map(|(p, q)| p * q).sum();
        alpha.push(aj);
        reorthogonalize(&mut w, &basis);
        if j + 1 == k {
            break;
        }
        let b = norm(&w);
        if b <= 1e-12 * aj.abs() {
            // invariant subspace; continue in a fresh direction
            beta.push(0.0);
            basis.push(random_unit(&basis));
        } else {
            beta.push(b);
            w.iter_mut().for_each(|x| *x /= b);
            basis.push(w);
        }
    }
    let kk = alpha.len();
    let mut t = DMatrix::zeros(kk, kk);
    for i in 0..kk {
        t[(i, i)] = alpha[i];
        if i + 1 < kk {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let mut idx: Vec<usize> = (0..kk).collect();
    // largest theta of the inverse are the smallest eigenvalues
    idx.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let mut pairs: Vec<(f64, Vec<f64>)> = idx[..want.min(kk)]
        .iter()
        .map(|&c| {
            let s = eig.eigenvectors.column(c);
            let mut y = vec![0.0; n];
            for (v, &coef) in basis.iter().zip(s.iter()) {
                y.iter_mut().zip(v).for_each(|(yi, vi)| *yi += coef * vi);
            }
            let ny = norm(&y);
            y.iter_mut().for_each(|x| *x /= ny);
            (rayleigh(a, &y), y)
        })
        .collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    pairs.into_iter().unzip()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn reorthogonalize(w: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for v in basis {
            let d: f64 = w.iter().zip(v).map(|(p, q)| p * q).sum();
            w.iter_mut().zip(v).for_each(|(wi, vi)| *wi -= d * vi);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assets::{tet_ball, BumpProfile};
    use crate::modes::{assemble_fem_system, MaterialParams};

    fn small_system() -> FemSystem {
        let mesh = tet_ball(&BumpProfile::new(1.0, 5, 0.2), 1, 2);
        assemble_fem_system(&mesh, &MaterialParams::new(1.0e4, 0.45, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn lanczos_agrees_with_dense() {
        let sys = small_system();
        let d = compute_linear_modes_with(&sys, 12, EigenMethod::Dense).unwrap();
        let l = compute_linear_modes_with(&sys, 12, EigenMethod::Lanczos).unwrap();
        for (x, y) in d.basis.eigenvalues().iter().zip(l.basis.eigenvalues()) {
            assert!((x - y).abs() <= 1e-8 * x, "{x} vs {y}");
        }
        // same spanned subspace
        let overlap = d.basis.u().transpose() * l.basis.u();
        let sv = overlap.singular_values();
        assert!(sv.iter().all(|s| (s - 1.0).abs() < 1e-6), "{sv}");
    }

    #[test]
    fn six_rigid_modes_and_small_residuals() {
        let sys = small_system();
        let s = compute_linear_modes_with(&sys, 20, EigenMethod::Lanczos).unwrap();
        assert_eq!(s.rigid_eigenvalues.len(), 6);
        assert!(s.rigid_eigenvalues.iter().all(|&v| v < RIGID_EPS * s.lambda7));
        let vals = s.basis.eigenvalues();
        assert!(vals.windows(2).all(|w| w[0] <= w[1]) && vals[0] > 0.0);
        for j in 0..20 {
            assert!(generalized_residual(&sys, s.phi.column(j).as_slice(), vals[j]) <= RESIDUAL_TOL);
        }
        let gram = s.basis.u().transpose() * s.basis.u();
        assert!((gram - DMatrix::identity(20, 20)).abs().max() <= 1e-8);
    }

    #[test]
    fn too_many_modes_rejected() {
        let sys = small_system();
        assert!(compute_linear_modes(&sys, sys.dof_count() - 5).is_err());
        assert!(compute_linear_modes(&sys, 0).is_err());
    }
}
