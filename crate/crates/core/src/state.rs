//! Density matrices and the random/structured state families used for
//! training and evaluation data.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{QstError, Result};
use crate::linalg::{self, CMatrix, C64, ZERO};
use crate::seed::rng_from_seed;

pub const MAX_QUBITS: usize = 12;
const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const PSD_TOL: f64 = -1e-10;

/// A d×d Hermitian, positive semidefinite, unit-trace matrix with d = 2^n.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    mat: CMatrix,
}

impl DensityMatrix {
    /// Validates all three invariants.
    pub fn new(mat: CMatrix) -> Result<Self> {
        let n_qubits = qubits_for_dim(mat.nrows())?;
        if !mat.is_square() {
            return Err(QstError::Shape(format!("density matrix must be square, got {}x{}", mat.nrows(), mat.ncols())));
        }
        let herm = linalg::max_abs_diff(&mat, &mat.adjoint());
        if herm > HERMITIAN_TOL {
            return Err(QstError::Validation(format!("not Hermitian (max |ρ-ρ†| = {herm:e})")));
        }
        let tr = linalg::trace(&mat);
        if (tr - C64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(QstError::Validation(format!("trace {tr} is not 1")));
        }
        let min_eig = linalg::hermitian_eigenvalues(&mat)[0];
        if min_eig < PSD_TOL {
            return Err(QstError::Validation(format!("not PSD (min eigenvalue {min_eig:e})")));
        }
        Ok(Self { n_qubits, mat })
    }

    /// Builds `A / Tr(A)` from a PSD matrix `A`, symmetrizing away rounding noise.
    pub fn from_psd(a: &CMatrix) -> Result<Self> {
        let n_qubits = qubits_for_dim(a.nrows())?;
        let h = linalg::hermitize(a);
        let tr = linalg::trace(&h).re;
        if !tr.is_finite() || tr <= 0.0 {
            return Err(QstError::Degenerate(format!("PSD matrix has trace {tr}")));
        }
        Ok(Self { n_qubits, mat: h.unscale(tr) })
    }

    pub fn from_pure(psi: &[C64]) -> Result<Self> {
        let v = DVector::from_column_slice(psi);
        let outer = &v * v.adjoint();
        Self::from_psd(&outer)
    }

    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let d = 1usize << n_qubits;
        Self { n_qubits, mat: CMatrix::from_diagonal_element(d, d, C64::new(1.0 / d as f64, 0.0)) }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigenvalues(&self.mat)
    }

    /// Checks the invariants again; used on reconstructed outputs.
    pub fn validate(&self) -> Result<()> {
        Self::new(self.mat.clone()).map(|_| ())
    }

    /// Unitary conjugation `U ρ U†`.
    pub fn conjugate(&self, u: &CMatrix) -> Result<Self> {
        Self::from_psd(&(u * &self.mat * u.adjoint()))
    }
}

fn qubits_for_dim(d: usize) -> Result<usize> {
    if d < 2 || !d.is_power_of_two() {
        return Err(QstError::Size(format!("dimension {d} is not 2^n with n >= 1")));
    }
    Ok(d.trailing_zeros() as usize)
}

fn check_qubits(n_qubits: usize, min: usize, max: usize) -> Result<()> {
    if n_qubits < min || n_qubits > max {
        return Err(QstError::Size(format!("n_qubits = {n_qubits} outside [{min}, {max}]")));
    }
    Ok(())
}

/// d×d matrix of i.i.d. standard complex normals `N(0,1) + i N(0,1)`.
pub fn ginibre_matrix<R: Rng>(d: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(d, d, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im)
    })
}

/// Haar-distributed unitary: QR of a Ginibre matrix with the phases of
/// R's diagonal pushed into Q.
pub fn haar_unitary<R: Rng>(d: usize, rng: &mut R) -> CMatrix {
    let qr = ginibre_matrix(d, rng).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// `U|0…0⟩⟨0…0|U†` with `U` Haar-random.
pub fn haar_pure_state(n_qubits: usize, seed: u64) -> Result<DensityMatrix> {
    check_qubits(n_qubits, 1, MAX_QUBITS)?;
    let d = 1usize << n_qubits;
    let mut rng = rng_from_seed(seed);
    let u = haar_unitary(d, &mut rng);
    let psi: Vec<C64> = u.column(0).iter().copied().collect();
    DensityMatrix::from_pure(&psi)
}

/// Hilbert–Schmidt random mixed state `G G† / Tr(G G†)`.
pub fn ginibre_mixed_state(n_qubits: usize, seed: u64) -> Result<DensityMatrix> {
    check_qubits(n_qubits, 1, MAX_QUBITS)?;
    let d = 1usize << n_qubits;
    let mut rng = rng_from_seed(seed);
    let g = ginibre_matrix(d, &mut rng);
    DensityMatrix::from_psd(&(&g * g.adjoint()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EntangledKind {
    Ghz,
    W,
}

/// `(⊗U_i)|ψ⟩` for the GHZ or W state `|ψ⟩`.
pub fn ghz_w_vector(kind: EntangledKind, n_qubits: usize, rotations: &[CMatrix]) -> Result<Vec<C64>> {
    check_qubits(n_qubits, 2, MAX_QUBITS)?;
    if rotations.len() != n_qubits {
        return Err(QstError::Shape(format!("expected {n_qubits} local rotations, got {}", rotations.len())));
    }
    for (q, u) in rotations.iter().enumerate() {
        if u.nrows() != 2 || !linalg::is_unitary(u, 1e-12) {
            return Err(QstError::Validation(format!("rotation on qubit {q} is not a 2x2 unitary")));
        }
    }
    let d = 1usize << n_qubits;
    let mut psi = vec![ZERO; d];
    match kind {
        EntangledKind::Ghz => {
            let a = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            psi[0] = a;
            psi[d - 1] = a;
        }
        EntangledKind::W => {
            let a = C64::new(1.0 / (n_qubits as f64).sqrt(), 0.0);
            for q in 0..n_qubits {
                psi[1 << q] = a;
            }
        }
    }
    for (q, u) in rotations.iter().enumerate() {
        linalg::apply_single_qubit(&mut psi, n_qubits, q, u);
    }
    Ok(psi)
}

pub fn ghz_w_state(kind: EntangledKind, n_qubits: usize, rotations: &[CMatrix]) -> Result<DensityMatrix> {
    DensityMatrix::from_pure(&ghz_w_vector(kind, n_qubits, rotations)?)
}

/// GHZ/W state with Haar-random single-qubit rotations drawn from `seed`.
pub fn random_ghz_w_state(kind: EntangledKind, n_qubits: usize, seed: u64) -> Result<DensityMatrix> {
    check_qubits(n_qubits, 2, MAX_QUBITS)?;
    let mut rng = rng_from_seed(seed);
    let rotations: Vec<CMatrix> = (0..n_qubits).map(|_| haar_unitary(2, &mut rng)).collect();
    ghz_w_state(kind, n_qubits, &rotations)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn haar_pure_is_pure_and_deterministic() {
        let a = haar_pure_state(1, 5).unwrap();
        let purity = (a.matrix() * a.matrix()).trace().re;
        assert!((purity - 1.0).abs() < 1e-12);
        let b = haar_pure_state(2, 1).unwrap();
        let c = haar_pure_state(2, 1).unwrap();
        assert_eq!(b, c);
        assert!(haar_pure_state(0, 1).is_err());
        assert!(haar_pure_state(13, 1).is_err());
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = rng_from_seed(3);
        let u = haar_unitary(8, &mut rng);
        assert!(linalg::is_unitary(&u, 1e-12));
    }

    #[test]
    fn ginibre_state_is_valid_and_deterministic() {
        let a = ginibre_mixed_state(2, 7).unwrap();
        a.validate().unwrap();
        assert_eq!(a, ginibre_mixed_state(2, 7).unwrap());
        assert!(a.eigenvalues()[0] > 0.0);
    }

    #[test]
    fn w_state_diagonal() {
        let id = CMatrix::identity(2, 2);
        let w = ghz_w_state(EntangledKind::W, 3, &[id.clone(), id.clone(), id]).unwrap();
        for i in 0..8usize {
            let expect = if i.count_ones() == 1 { 1.0 / 3.0 } else { 0.0 };
            assert!((w.matrix()[(i, i)].re - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn non_unitary_rotation_is_rejected() {
        let bad = CMatrix::from_diagonal_element(2, 2, C64::new(2.0, 0.0));
        let id = CMatrix::identity(2, 2);
        assert!(matches!(ghz_w_state(EntangledKind::Ghz, 2, &[bad, id]), Err(QstError::Validation(_))));
    }

    #[test]
    fn invalid_matrices_are_rejected() {
        let mut m = CMatrix::identity(2, 2);
        assert!(DensityMatrix::new(m.clone()).is_err()); // trace 2
        m[(0, 0)] = C64::new(1.5, 0.0);
        m[(1, 1)] = C64::new(-0.5, 0.0);
        assert!(DensityMatrix::new(m).is_err()); // negative eigenvalue
        assert!(DensityMatrix::new(CMatrix::identity(3, 3).unscale(3.0)).is_err());
    }
}
