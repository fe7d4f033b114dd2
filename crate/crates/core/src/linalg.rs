//! Small dense linear-algebra helpers shared by the posterior code.

use nalgebra::{DMatrix, DVector};

use crate::error::{BanditError, Result};
use crate::rng::RandomStream;

pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

pub fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub fn is_finite_matrix(m: &DMatrix<f64>) -> bool {
    m.iter().all(|v| v.is_finite())
}

/// Inverse of a symmetric positive-definite matrix via Cholesky; the result
/// is symmetrized.
pub fn spd_inverse(m: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    let chol = m.clone().cholesky().ok_or(BanditError::Singular(what))?;
    let mut inv = chol.inverse();
    symmetrize(&mut inv);
    Ok(inv)
}

/// General inverse (LU), for matrices that are invertible but not
/// necessarily symmetric.
pub fn inverse(m: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    let inv = m.clone().try_inverse().ok_or(BanditError::Singular(what))?;
    if !is_finite_matrix(&inv) {
        return Err(BanditError::Singular(what));
    }
    Ok(inv)
}

/// `xᵀ M x`.
pub fn quad_form(m: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    x.dot(&(m * x))
}

/// A square-root factor `L` with `L Lᵀ = cov` for a symmetric PSD matrix.
///
/// Cholesky is tried first; singular or near-singular PSD matrices fall back
/// to a symmetric eigendecomposition with tiny negative eigenvalues clamped.
pub fn psd_sqrt(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if let Some(chol) = cov.clone().cholesky() {
        return Ok(chol.l());
    }
    let mut sym = cov.clone();
    symmetrize(&mut sym);
    let eig = sym.symmetric_eigen();
    let scale = eig.eigenvalues.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    if eig
        .eigenvalues
        .iter()
        .any(|&v| !v.is_finite() || v < -1e-9 * scale)
    {
        return Err(BanditError::NotPsd);
    }
    let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&roots))
}

/// `mean + L z` for a standard normal `z`, drawn coordinate by coordinate
/// from `rng`.
pub fn sample_with_factor(
    mean: &DVector<f64>,
    factor: &DMatrix<f64>,
    scale: f64,
    rng: &mut RandomStream,
) -> DVector<f64> {
    let z = DVector::from_fn(mean.len(), |_, _| rng.standard_normal());
    mean + (factor * z) * scale
}

pub fn sample_mvn(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    rng: &mut RandomStream,
) -> Result<DVector<f64>> {
    let factor = psd_sqrt(cov)?;
    Ok(sample_with_factor(mean, &factor, 1.0, rng))
}
