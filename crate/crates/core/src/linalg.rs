//! Small dense complex linear-algebra helpers shared by the state, property
//! and baseline modules. Qubit 0 is the most significant bit of a basis index.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Eigen-decomposition of a Hermitian matrix, eigenvalues in ascending order.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = m.clone().symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// `V diag(f(λ)) V†` for Hermitian `m`.
pub fn hermitian_map(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (values, vectors) = hermitian_eigen(m);
    let mut scaled = vectors.clone();
    for (j, &lam) in values.iter().enumerate() {
        let s = f(lam);
        scaled.column_mut(j).scale_mut(s);
    }
    scaled * vectors.adjoint()
}

/// Relative size below which a PSD eigenvalue is indistinguishable from zero.
/// Square roots amplify that round-off (1e-17 becomes 3e-9), so such values are dropped.
pub const SPECTRUM_ROUNDOFF: f64 = 1e-13;

/// Square roots of a PSD spectrum, with round-off-sized entries set to zero.
pub fn sqrt_spectrum(values: &[f64]) -> Vec<f64> {
    let cut = SPECTRUM_ROUNDOFF * values.iter().cloned().fold(0.0, f64::max);
    values.iter().map(|&x| if x > cut { x.sqrt() } else { 0.0 }).collect()
}

/// Principal square root of a PSD matrix, see [`sqrt_spectrum`].
pub fn psd_sqrt(m: &CMatrix) -> CMatrix {
    let (values, vectors) = hermitian_eigen(m);
    let mut scaled = vectors.clone();
    for (j, s) in sqrt_spectrum(&values).into_iter().enumerate() {
        scaled.column_mut(j).scale_mut(s);
    }
    scaled * vectors.adjoint()
}

pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Shannon/von Neumann entropy (natural log) of a spectrum; entries below
/// `1e-12` contribute nothing.
pub fn spectrum_entropy(values: &[f64]) -> f64 {
    values
        .iter()
        .filter(|&&x| x > 1e-12)
        .map(|&x| -x * x.ln())
        .sum()
}

fn bit_masks(n_qubits: usize, qubits: &[usize]) -> Vec<usize> {
    // full-index contribution for every assignment of `qubits` (first listed = most significant)
    let k = qubits.len();
    (0..1usize << k)
        .map(|a| {
            let mut full = 0;
            for (pos, &q) in qubits.iter().enumerate() {
                if a >> (k - 1 - pos) & 1 == 1 {
                    full |= 1 << (n_qubits - 1 - q);
                }
            }
            full
        })
        .collect()
}

/// Reduced density matrix on `keep` (ascending qubit indices).
pub fn reduced_state(rho: &CMatrix, n_qubits: usize, keep: &[usize]) -> CMatrix {
    let traced: Vec<usize> = (0..n_qubits).filter(|q| !keep.contains(q)).collect();
    let ka = bit_masks(n_qubits, keep);
    let kt = bit_masks(n_qubits, &traced);
    let da = ka.len();
    let mut out = CMatrix::zeros(da, da);
    for a in 0..da {
        for b in 0..da {
            let mut acc = ZERO;
            for &t in &kt {
                acc += rho[(ka[a] | t, ka[b] | t)];
            }
            out[(a, b)] = acc;
        }
    }
    out
}

/// Partial transpose on the first `k_first` qubits.
pub fn partial_transpose_first(rho: &CMatrix, n_qubits: usize, k_first: usize) -> CMatrix {
    let db = 1usize << (n_qubits - k_first);
    let d = rho.nrows();
    CMatrix::from_fn(d, d, |i, j| {
        let (a, b) = (i / db, i % db);
        let (a2, b2) = (j / db, j % db);
        rho[(a2 * db + b, a * db + b2)]
    })
}

/// Apply a 2×2 unitary to `qubit` of a state vector in place.
pub fn apply_single_qubit(psi: &mut [C64], n_qubits: usize, qubit: usize, u: &CMatrix) {
    let stride = 1usize << (n_qubits - 1 - qubit);
    for i in 0..psi.len() {
        if i & stride == 0 {
            let (a, b) = (psi[i], psi[i | stride]);
            psi[i] = u[(0, 0)] * a + u[(0, 1)] * b;
            psi[i | stride] = u[(1, 0)] * a + u[(1, 1)] * b;
        }
    }
}

pub fn is_unitary(u: &CMatrix, tol: f64) -> bool {
    if !u.is_square() {
        return false;
    }
    let prod = u.adjoint() * u;
    max_abs_diff(&prod, &CMatrix::identity(u.nrows(), u.ncols())) <= tol
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduced_state_of_product_is_factor() {
        let a = CMatrix::from_row_slice(2, 2, &[C64::new(0.7, 0.0), C64::new(0.1, 0.2), C64::new(0.1, -0.2), C64::new(0.3, 0.0)]);
        let b = CMatrix::from_diagonal_element(2, 2, C64::new(0.5, 0.0));
        let ab = kron(&a, &b);
        assert!(max_abs_diff(&reduced_state(&ab, 2, &[0]), &a) < 1e-15);
        assert!(max_abs_diff(&reduced_state(&ab, 2, &[1]), &b) < 1e-15);
        assert!(max_abs_diff(&reduced_state(&ab, 2, &[0, 1]), &ab) < 1e-15);
    }

    #[test]
    fn eigen_is_sorted_and_reconstructs() {
        let m = CMatrix::from_row_slice(2, 2, &[C64::new(2.0, 0.0), C64::new(0.0, 1.0), C64::new(0.0, -1.0), C64::new(1.0, 0.0)]);
        let (vals, vecs) = hermitian_eigen(&m);
        assert!(vals[0] <= vals[1]);
        let diag = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(2, vals.iter().map(|&x| C64::new(x, 0.0))));
        assert!(max_abs_diff(&(&vecs * diag * vecs.adjoint()), &m) < 1e-13);
    }
}
