//! Reference computations that avoid the library's own linear algebra, and
//! the verdict lines printed by the acceptance suite.

use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use qst_core::linalg::{CMatrix, C64};
use qst_core::DensityMatrix;

/// Eigenvalues (ascending) of a Hermitian matrix from its real symmetric
/// 2d×2d embedding, in which every eigenvalue appears twice.
pub fn hermitian_spectrum(h: &CMatrix) -> Vec<f64> {
    let d = h.nrows();
    let emb = DMatrix::from_fn(2 * d, 2 * d, |i, j| {
        let z = h[(i % d, j % d)];
        match (i < d, j < d) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let mut ev: Vec<f64> = SymmetricEigen::new(emb).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev.chunks(2).map(|c| 0.5 * (c[0] + c[1])).collect()
}

/// `−Σ x ln x`, ignoring entries at round-off level.
pub fn shannon(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 1e-14).map(|&x| -x * x.ln()).sum()
}

/// Tr_A ρ for A the `d_a`-dimensional leading tensor factor.
pub fn trace_out_leading(rho: &CMatrix, d_a: usize) -> CMatrix {
    let d_b = rho.nrows() / d_a;
    CMatrix::from_fn(d_b, d_b, |b, bp| (0..d_a).map(|a| rho[(a * d_b + b, a * d_b + bp)]).sum())
}

/// Partial transpose on the leading `d_a`-dimensional factor.
pub fn transpose_leading(rho: &CMatrix, d_a: usize) -> CMatrix {
    let d_b = rho.nrows() / d_a;
    CMatrix::from_fn(rho.nrows(), rho.nrows(), |i, j| {
        let (a, b) = (i / d_b, i % d_b);
        let (ap, bp) = (j / d_b, j % d_b);
        rho[(ap * d_b + b, a * d_b + bp)]
    })
}

/// Wootters concurrence from the (non-Hermitian) eigenvalues of ρ ρ̃.
pub fn wootters_concurrence(rho: &CMatrix) -> f64 {
    // the three vanishing λ of a pure state are square roots of round-off
    if 1.0 - (rho * rho).trace().re < 1e-12 {
        return spin_flip_overlap(rho);
    }
    let flip = |i: usize| 3 - i;
    let sign = |i: usize| if i == 0 || i == 3 { -1.0 } else { 1.0 };
    // (σy⊗σy) ρ* (σy⊗σy) has entries s_i s_j ρ*[3−i, 3−j]
    let tilde = CMatrix::from_fn(4, 4, |i, j| rho[(flip(i), flip(j))].conj() * (sign(i) * sign(j)));
    let prod = rho * tilde;
    let eig = prod.eigenvalues().expect("complex Schur form always yields eigenvalues");
    let mut lam: Vec<f64> = eig.iter().map(|z: &C64| z.re.max(0.0).sqrt()).collect();
    lam.sort_by(|a, b| b.total_cmp(a));
    (lam[0] - lam[1] - lam[2] - lam[3]).max(0.0)
}

/// |⟨ψ|σy⊗σy|ψ*⟩| for ρ = ψψ†, with ψ read off the column of largest weight.
fn spin_flip_overlap(rho: &CMatrix) -> f64 {
    let j = (0..4).max_by(|&a, &b| rho[(a, a)].re.total_cmp(&rho[(b, b)].re)).unwrap_or(0);
    let scale = rho[(j, j)].re.sqrt();
    let psi: Vec<C64> = (0..4).map(|i| rho[(i, j)] / scale).collect();
    let flipped = [-psi[3].conj(), psi[2].conj(), psi[1].conj(), -psi[0].conj()];
    psi.iter().zip(&flipped).map(|(a, b)| a.conj() * b).sum::<C64>().norm()
}

/// Purity, entropy, coherence, entanglement entropy, negativity and (two
/// qubits only) concurrence, with A the first ⌊n/2⌋ qubits.
pub fn reference_properties(rho: &DensityMatrix) -> Vec<f64> {
    let m = rho.matrix();
    let ev = hermitian_spectrum(m);
    let diag: Vec<f64> = (0..rho.dim()).map(|i| m[(i, i)].re).collect();
    let d_a = 1 << (rho.n_qubits() / 2);
    let mut out = vec![
        (m * m).trace().re,
        shannon(&ev),
        shannon(&diag) - shannon(&ev),
        shannon(&hermitian_spectrum(&trace_out_leading(m, d_a))),
        hermitian_spectrum(&transpose_leading(m, d_a)).iter().filter(|&&x| x < 0.0).map(|x| -x).sum(),
    ];
    if rho.n_qubits() == 2 {
        out.push(wootters_concurrence(m));
    }
    out
}

/// One pass/fail line of the acceptance report.
#[derive(Clone, Debug)]
pub struct Verdict {
    pub id: String,
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(id: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self { id: id.into(), pass, detail: detail.into() }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] criterion {:<3} {}", if self.pass { "PASS" } else { "FAIL" }, self.id, self.detail)
    }
}
