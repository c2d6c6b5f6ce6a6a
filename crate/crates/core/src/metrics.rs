use crate::error::{QstError, Result};
use crate::linalg;
use crate::state::DensityMatrix;

/// Floor applied to `1 − F` before taking logarithms.
pub const INFIDELITY_FLOOR: f64 = 1e-16;

/// Uhlmann fidelity `F = Tr √(√ρ σ √ρ)` (root convention, F ∈ [0, 1]).
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(QstError::Shape(format!("fidelity of {}-dim and {}-dim states", rho.dim(), sigma.dim())));
    }
    let s = linalg::psd_sqrt(rho.matrix());
    let m = linalg::hermitize(&(&s * sigma.matrix() * &s));
    let f: f64 = linalg::sqrt_spectrum(&linalg::hermitian_eigenvalues(&m)).iter().sum();
    Ok(f.min(1.0))
}

pub fn infidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    Ok((1.0 - fidelity(rho, sigma)?).max(INFIDELITY_FLOOR))
}

/// `log₁₀(1 − F)`.
pub fn log_infidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    Ok(infidelity(rho, sigma)?.log10())
}

/// `1 − F²`, the squared-fidelity convention used by some toolkits.
pub fn squared_infidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    let f = fidelity(rho, sigma)?;
    Ok((1.0 - f * f).max(INFIDELITY_FLOOR))
}

pub fn mse(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(QstError::Shape(format!("mse of lengths {} and {}", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(QstError::EmptyInput("mse of empty vectors".into()));
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C64;
    use crate::state::ginibre_mixed_state;

    fn ket(a: [f64; 2]) -> DensityMatrix {
        DensityMatrix::from_pure(&[C64::new(a[0], 0.0), C64::new(a[1], 0.0)]).unwrap()
    }

    #[test]
    fn fidelity_identities() {
        let rho = ginibre_mixed_state(2, 3).unwrap();
        assert!((fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-10);
        assert!(fidelity(&ket([1.0, 0.0]), &ket([0.0, 1.0])).unwrap().abs() < 1e-12);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((fidelity(&ket([1.0, 0.0]), &ket([s, s])).unwrap() - s).abs() < 1e-10);
        assert!(fidelity(&rho, &ket([1.0, 0.0])).is_err());
        assert!((log_infidelity(&rho, &rho).unwrap() + 16.0).abs() < 1e-6 || log_infidelity(&rho, &rho).unwrap() < -9.0);
    }

    #[test]
    fn mse_values() {
        assert_eq!(mse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mse(&[0.0, 1.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert!(mse(&[1.0], &[1.0, 2.0]).is_err());
    }
}
