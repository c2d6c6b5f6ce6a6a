//! Scalar quantum properties of a density matrix. Bipartite quantities use
//! A = the first ⌊n/2⌋ qubits and B = the rest.

use crate::error::{QstError, Result};
use crate::linalg::{self, CMatrix, C64};
use crate::state::DensityMatrix;

/// Purity above which the pure-state shortcuts for large registers apply.
const PURE_SHORTCUT: f64 = 1.0 - 1e-12;
/// Dimension above which negativity of a pure state is computed from the Schmidt spectrum.
const SCHMIDT_MIN_DIM: usize = 64;

pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.matrix().iter().map(|z| z.norm_sqr()).sum()
}

/// `S(ρ) = −Tr ρ ln ρ`.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    linalg::spectrum_entropy(&rho.eigenvalues())
}

/// Relative entropy of coherence `S(ρ_diag) − S(ρ)`.
pub fn coherence(rho: &DensityMatrix) -> f64 {
    let diag: Vec<f64> = rho.matrix().diagonal().iter().map(|z| z.re).collect();
    (linalg::spectrum_entropy(&diag) - von_neumann_entropy(rho)).max(0.0)
}

fn split(rho: &DensityMatrix) -> Result<(usize, Vec<usize>, Vec<usize>)> {
    let n = rho.n_qubits();
    if n < 2 {
        return Err(QstError::Unsupported("bipartite property needs at least 2 qubits".into()));
    }
    let k = n / 2;
    Ok((k, (0..k).collect(), (k..n).collect()))
}

/// `S(Tr_A ρ)`.
pub fn entanglement_entropy(rho: &DensityMatrix) -> Result<f64> {
    let (_, _, b) = split(rho)?;
    let reduced = linalg::reduced_state(rho.matrix(), rho.n_qubits(), &b);
    Ok(linalg::spectrum_entropy(&linalg::hermitian_eigenvalues(&reduced)))
}

/// `(‖ρ^{Γ_A}‖₁ − 1) / 2`.
pub fn negativity(rho: &DensityMatrix) -> Result<f64> {
    let (k, a, _) = split(rho)?;
    if rho.dim() > SCHMIDT_MIN_DIM && purity(rho) > PURE_SHORTCUT {
        // pure state: ‖ρ^Γ‖₁ = (Σ √λ_i)² over the Schmidt spectrum
        let reduced = linalg::reduced_state(rho.matrix(), rho.n_qubits(), &a);
        let s: f64 = linalg::sqrt_spectrum(&linalg::hermitian_eigenvalues(&reduced)).iter().sum();
        return Ok(((s * s - 1.0) / 2.0).max(0.0));
    }
    let pt = linalg::partial_transpose_first(rho.matrix(), rho.n_qubits(), k);
    let trace_norm: f64 = linalg::hermitian_eigenvalues(&pt).iter().map(|x| x.abs()).sum();
    Ok(((trace_norm - 1.0) / 2.0).max(0.0))
}

fn sigma_y_y() -> CMatrix {
    let sy = CMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(0.0, -1.0), C64::new(0.0, 1.0), C64::new(0.0, 0.0)]);
    linalg::kron(&sy, &sy)
}

/// Wootters concurrence for two qubits; the generalised pure-state form
/// `√(2(1 − Tr ρ_B²))` for more qubits.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    match rho.n_qubits() {
        1 => Err(QstError::Unsupported("concurrence needs at least 2 qubits".into())),
        2 => {
            let yy = sigma_y_y();
            let spin_flipped = &yy * rho.matrix().map(|z| z.conj()) * &yy;
            let s = linalg::psd_sqrt(rho.matrix());
            let m = linalg::hermitize(&(&s * spin_flipped * &s));
            let mut lam = linalg::sqrt_spectrum(&linalg::hermitian_eigenvalues(&m));
            lam.sort_by(|a, b| b.total_cmp(a));
            Ok((lam[0] - lam[1] - lam[2] - lam[3]).max(0.0))
        }
        _ => {
            if purity(rho) <= 1.0 - 1e-6 {
                return Err(QstError::Unsupported("concurrence of mixed states is only defined for 2 qubits".into()));
            }
            let (_, _, b) = split(rho)?;
            let reduced = linalg::reduced_state(rho.matrix(), rho.n_qubits(), &b);
            let p: f64 = reduced.iter().map(|z| z.norm_sqr()).sum();
            Ok((2.0 * (1.0 - p)).max(0.0).sqrt())
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Property {
    Purity,
    Entropy,
    Coherence,
    EntanglementEntropy,
    Negativity,
    Concurrence,
}

impl Property {
    pub fn name(self) -> &'static str {
        match self {
            Property::Purity => "purity",
            Property::Entropy => "entropy",
            Property::Coherence => "coherence",
            Property::EntanglementEntropy => "entanglement_entropy",
            Property::Negativity => "negativity",
            Property::Concurrence => "concurrence",
        }
    }

    pub fn evaluate(self, rho: &DensityMatrix) -> Result<f64> {
        match self {
            Property::Purity => Ok(purity(rho)),
            Property::Entropy => Ok(von_neumann_entropy(rho)),
            Property::Coherence => Ok(coherence(rho)),
            Property::EntanglementEntropy => entanglement_entropy(rho),
            Property::Negativity => negativity(rho),
            Property::Concurrence => concurrence(rho),
        }
    }
}

/// Ordered property selection forming μ.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PropertySet {
    /// (coherence, entanglement entropy, negativity); purity and entropy are constant on pure states.
    Pure,
    /// All six, in table order.
    Mixed,
}

impl PropertySet {
    pub fn properties(self) -> &'static [Property] {
        use Property::*;
        match self {
            PropertySet::Pure => &[Coherence, EntanglementEntropy, Negativity],
            PropertySet::Mixed => &[Purity, Entropy, Coherence, EntanglementEntropy, Negativity, Concurrence],
        }
    }

    pub fn len(self) -> usize {
        self.properties().len()
    }

    pub fn is_empty(self) -> bool {
        false
    }

    pub fn for_len(k: usize) -> Option<Self> {
        match k {
            3 => Some(PropertySet::Pure),
            6 => Some(PropertySet::Mixed),
            _ => None,
        }
    }

    pub fn compute(self, rho: &DensityMatrix) -> Result<Vec<f64>> {
        self.properties().iter().map(|p| p.evaluate(rho)).collect()
    }
}

/// All six properties of one state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PropertyVector {
    pub purity: f64,
    pub entropy: f64,
    pub coherence: f64,
    pub entanglement_entropy: f64,
    pub negativity: f64,
    pub concurrence: f64,
}

impl PropertyVector {
    pub fn compute(rho: &DensityMatrix) -> Result<Self> {
        Ok(Self {
            purity: purity(rho),
            entropy: von_neumann_entropy(rho),
            coherence: coherence(rho),
            entanglement_entropy: entanglement_entropy(rho)?,
            negativity: negativity(rho)?,
            concurrence: concurrence(rho)?,
        })
    }

    pub fn to_vec(&self) -> Vec<f64> {
        vec![self.purity, self.entropy, self.coherence, self.entanglement_entropy, self.negativity, self.concurrence]
    }
}
