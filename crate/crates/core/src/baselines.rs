//! Classical reconstruction: linear regression estimation (least squares
//! in the Pauli basis followed by a projection onto physical states) and an
//! iterative maximum-likelihood estimator with RρR steps.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};

use crate::error::{QstError, Result};
use crate::linalg::{self, CMatrix, C64};
use crate::measure::MeasurementSet;
use crate::state::DensityMatrix;

pub const DEFAULT_MLE_TOL: f64 = 1e-13;
pub const DEFAULT_MLE_MAX_ITERS: usize = 5000;
const PROB_FLOOR: f64 = 1e-15;
const MONOTONE_SLACK: f64 = 1e-12;

fn pauli(i: usize) -> CMatrix {
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    let im = C64::new(0.0, 1.0);
    match i {
        0 => CMatrix::from_row_slice(2, 2, &[o, z, z, o]),
        1 => CMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        2 => CMatrix::from_row_slice(2, 2, &[z, -im, im, z]),
        _ => CMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
    }
}

/// Orthonormal Hermitian basis `σ_{i₁}⊗…⊗σ_{iₙ}/√d`, indexed in base 4 (I, X, Y, Z).
pub fn pauli_basis(n_qubits: usize) -> Vec<CMatrix> {
    let d = 1usize << n_qubits;
    let norm = 1.0 / (d as f64).sqrt();
    (0..d * d)
        .map(|idx| {
            let mut m = CMatrix::identity(1, 1);
            for q in 0..n_qubits {
                let digit = idx / 4usize.pow((n_qubits - 1 - q) as u32) % 4;
                m = linalg::kron(&m, &pauli(digit));
            }
            m.scale(norm)
        })
        .collect()
}

/// `Tr(A B)` for Hermitian `A`, `B`, as a real number.
fn trace_product(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.transpose().iter()).map(|(x, y)| (x * y).re).sum()
}

/// Design matrix `A[i][j] = Tr(O_i B_j)` with cached explicit operators.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    pub basis: Vec<CMatrix>,
    pub design: DMatrix<f64>,
    pub operators: Vec<CMatrix>,
    group_size: usize,
}

impl LinearSystem {
    pub fn new(ms: &MeasurementSet) -> Self {
        let basis = pauli_basis(ms.n_qubits());
        let operators = ms.operators();
        let design = DMatrix::from_fn(operators.len(), basis.len(), |i, j| trace_product(&operators[i], &basis[j]));
        Self { basis, design, operators, group_size: ms.group_size() }
    }

    fn kept_rows(&self, mask: &BTreeSet<usize>) -> Vec<usize> {
        (0..self.operators.len()).filter(|j| !mask.contains(&(j / self.group_size))).collect()
    }
}

/// Euclidean projection of `v` onto the probability simplex.
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cumsum += ui;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Closest physical state sharing the eigenvectors of Hermitian `m`.
pub fn project_to_physical(m: &CMatrix) -> Result<DensityMatrix> {
    let (values, vectors) = linalg::hermitian_eigen(&linalg::hermitize(m));
    let projected = project_to_simplex(&values);
    let mut scaled = vectors.clone();
    for (j, &w) in projected.iter().enumerate() {
        scaled.column_mut(j).scale_mut(w);
    }
    DensityMatrix::from_psd(&(scaled * vectors.adjoint()))
}

#[derive(Clone, Debug)]
pub struct LreEstimate {
    pub state: DensityMatrix,
    /// Fewer than d² independent unmasked rows; the minimum-norm solution was used.
    pub underdetermined: bool,
}

pub fn lre_reconstruct(f: &[f64], ms: &MeasurementSet, mask: &BTreeSet<usize>) -> Result<LreEstimate> {
    lre_with(&LinearSystem::new(ms), f, mask)
}

pub fn lre_with(sys: &LinearSystem, f: &[f64], mask: &BTreeSet<usize>) -> Result<LreEstimate> {
    if f.is_empty() {
        return Err(QstError::EmptyInput("empty frequency vector".into()));
    }
    if f.len() != sys.operators.len() {
        return Err(QstError::Shape(format!("f has {} entries, expected {}", f.len(), sys.operators.len())));
    }
    let rows = sys.kept_rows(mask);
    if rows.is_empty() {
        return Err(QstError::EmptyInput("every group is masked".into()));
    }
    let a = sys.design.select_rows(&rows);
    let b = DVector::from_iterator(rows.len(), rows.iter().map(|&j| f[j]));
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let cutoff = smax * 1e-10;
    let rank = svd.singular_values.iter().filter(|&&s| s > cutoff).count();
    let theta = svd.solve(&b, cutoff).map_err(|e| QstError::Degenerate(e.to_string()))?;
    let d = sys.basis[0].nrows();
    let raw = sys.basis.iter().zip(theta.iter()).fold(CMatrix::zeros(d, d), |acc, (bj, &t)| acc + bj.scale(t));
    Ok(LreEstimate { state: project_to_physical(&raw)?, underdetermined: rank < sys.basis.len() })
}

#[derive(Clone, Debug)]
pub struct MleEstimate {
    pub state: DensityMatrix,
    pub iterations: usize,
    pub converged: bool,
    /// Log-likelihood after each accepted iterate, starting with the initial state.
    pub log_likelihood: Vec<f64>,
}

#[derive(Clone, Copy, Debug)]
pub struct MleOptions {
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self { max_iters: DEFAULT_MLE_MAX_ITERS, tol: DEFAULT_MLE_TOL }
    }
}

pub fn mle_reconstruct(
    f: &[f64],
    ms: &MeasurementSet,
    mask: &BTreeSet<usize>,
    max_iters: usize,
    tol: f64,
) -> Result<MleEstimate> {
    mle_with(&LinearSystem::new(ms), f, mask, MleOptions { max_iters, tol })
}

pub fn mle_with(sys: &LinearSystem, f: &[f64], mask: &BTreeSet<usize>, opts: MleOptions) -> Result<MleEstimate> {
    if f.len() != sys.operators.len() {
        return Err(QstError::Shape(format!("f has {} entries, expected {}", f.len(), sys.operators.len())));
    }
    let rows = sys.kept_rows(mask);
    if rows.is_empty() {
        return Err(QstError::EmptyInput("every group is masked".into()));
    }
    let ops: Vec<&CMatrix> = rows.iter().map(|&j| &sys.operators[j]).collect();
    let freqs: Vec<f64> = rows.iter().map(|&j| f[j]).collect();
    let d = sys.basis[0].nrows();
    let identity = CMatrix::identity(d, d);

    let probs = |rho: &CMatrix| -> Vec<f64> { ops.iter().map(|o| trace_product(o, rho).max(PROB_FLOOR)).collect() };
    let loglik = |p: &[f64]| -> f64 { freqs.iter().zip(p).filter(|(fi, _)| **fi > 0.0).map(|(fi, pi)| fi * pi.ln()).sum() };

    let mut rho = identity.unscale(d as f64);
    let mut p = probs(&rho);
    let mut ll = loglik(&p);
    let mut history = vec![ll];
    let mut converged = false;
    let mut iterations = 0;
    // Step length of the projected-gradient candidate, adapted across iterations.
    let mut step = 1.0_f64;
    let evaluate = |cand: CMatrix| {
        let cp = probs(&cand);
        let cl = loglik(&cp);
        (cand, cp, cl)
    };
    let rrr = |m: &CMatrix, rho: &CMatrix| {
        let cand = linalg::hermitize(&(m * rho * m));
        let tr = linalg::trace(&cand).re;
        evaluate(cand.unscale(tr))
    };
    while iterations < opts.max_iters {
        iterations += 1;
        let r = ops
            .iter()
            .zip(freqs.iter().zip(&p))
            .fold(CMatrix::zeros(d, d), |acc, (o, (fi, pi))| acc + o.scale(fi / pi));
        // diluted RρR: (I + εR)ρ(I + εR) ascends for small enough ε
        let mut eps = 1.0;
        let mut accepted = loop {
            let c = rrr(&(&identity + r.scale(eps)), &rho);
            if c.2 >= ll - MONOTONE_SLACK {
                break Some(c);
            }
            eps *= 0.5;
            if eps < 1e-12 {
                break None;
            }
        };
        // RρR only rescales eigenvalues, so it approaches rank-deficient optima
        // like 1/k. A projected gradient step can zero them exactly; it is taken
        // whenever it beats the RρR candidate.
        let mut t = step;
        for _ in 0..20 {
            let c = evaluate(project_to_physical(&(&rho + r.scale(t)))?.matrix().clone());
            if c.2.is_finite() && c.2 > accepted.as_ref().map_or(ll - MONOTONE_SLACK, |a| a.2) {
                accepted = Some(c);
                step = (2.0 * t).min(1e6);
                break;
            }
            t *= 0.5;
        }
        let Some((cand, cp, cl)) = accepted else {
            converged = true;
            break;
        };
        let delta = cl - ll;
        rho = cand;
        p = cp;
        ll = cl;
        history.push(ll);
        if delta.abs() < opts.tol {
            converged = true;
            break;
        }
    }
    Ok(MleEstimate { state: DensityMatrix::from_psd(&rho)?, iterations, converged, log_likelihood: history })
}
