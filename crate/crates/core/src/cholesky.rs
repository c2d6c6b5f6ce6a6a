//! Real-vector parametrisation of density matrices through a lower-triangular
//! factor: `ρ = L L† / Tr(L L†)`.
//!
//! Layout of ν (length d²): real parts of the lower triangle including the
//! diagonal, row-major, followed by imaginary parts of the strict lower
//! triangle, row-major.

use nalgebra::linalg::Cholesky;

use crate::error::{QstError, Result};
use crate::linalg::{CMatrix, C64};
use crate::state::DensityMatrix;

/// Added to ρ before factorisation so rank-deficient (e.g. pure) states have a factor.
pub const CHOLESKY_JITTER: f64 = 1e-10;

pub fn lower_to_vector(l: &CMatrix) -> Vec<f64> {
    let d = l.nrows();
    let mut nu = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..=i {
            nu.push(l[(i, j)].re);
        }
    }
    for i in 0..d {
        for j in 0..i {
            nu.push(l[(i, j)].im);
        }
    }
    nu
}

pub fn vector_to_lower(nu: &[f64]) -> Result<CMatrix> {
    let d = (nu.len() as f64).sqrt().round() as usize;
    if d * d != nu.len() || d < 2 || !d.is_power_of_two() {
        return Err(QstError::Shape(format!("ν has length {}, expected d² with d = 2^n", nu.len())));
    }
    let mut l = CMatrix::zeros(d, d);
    let mut it = nu.iter();
    for i in 0..d {
        for j in 0..=i {
            l[(i, j)].re = *it.next().unwrap();
        }
    }
    for i in 0..d {
        for j in 0..i {
            l[(i, j)].im = *it.next().unwrap();
        }
    }
    Ok(l)
}

/// ν for the Cholesky factor of `ρ + εI` (positive real diagonal).
pub fn cholesky_vector(rho: &DensityMatrix) -> Result<Vec<f64>> {
    let d = rho.dim();
    let shifted = rho.matrix() + CMatrix::from_diagonal_element(d, d, C64::new(CHOLESKY_JITTER, 0.0));
    let chol = Cholesky::new(shifted)
        .ok_or_else(|| QstError::Degenerate("Cholesky factorisation failed".into()))?;
    let mut l = chol.unpack();
    for i in 0..d {
        l[(i, i)] = C64::new(l[(i, i)].re.abs(), 0.0);
    }
    Ok(lower_to_vector(&l))
}

/// Always yields a valid density matrix for any non-zero ν.
pub fn vector_to_density(nu: &[f64]) -> Result<DensityMatrix> {
    if nu.iter().all(|&x| x == 0.0) {
        return Err(QstError::Degenerate("ν is all zeros".into()));
    }
    if nu.iter().any(|x| !x.is_finite()) {
        return Err(QstError::Validation("ν has non-finite entries".into()));
    }
    let l = vector_to_lower(nu)?;
    DensityMatrix::from_psd(&(&l * l.adjoint()))
}
