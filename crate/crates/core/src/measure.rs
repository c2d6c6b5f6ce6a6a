//! Pauli-eigenbasis measurement sets organised into detector groups.
//!
//! Every operator is a rank-1 projector on the measured qubits (identity on
//! the rest), stored in factored form so that large registers never need an
//! explicit d×d matrix per operator.

use nalgebra::DMatrix;

use crate::error::{QstError, Result};
use crate::linalg::{self, CMatrix, C64};
use crate::state::DensityMatrix;

pub const MAX_CUBE_QUBITS: usize = 6;

/// Single-qubit measurement basis. Outcome 0 is the +1 eigenvector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Basis {
    /// σ_z: |H⟩ = |0⟩, |V⟩ = |1⟩
    Z,
    /// σ_x: |D⟩ = |+⟩, |A⟩ = |−⟩
    X,
    /// σ_y: |R⟩ = (|0⟩ + i|1⟩)/√2, |L⟩ = (|0⟩ − i|1⟩)/√2
    Y,
}

impl Basis {
    pub const ALL: [Basis; 3] = [Basis::Z, Basis::X, Basis::Y];

    pub fn eigenvector(self, outcome: usize) -> [C64; 2] {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let sign = if outcome == 0 { 1.0 } else { -1.0 };
        match self {
            Basis::Z if outcome == 0 => [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            Basis::Z => [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
            Basis::X => [C64::new(s, 0.0), C64::new(sign * s, 0.0)],
            Basis::Y => [C64::new(s, 0.0), C64::new(0.0, sign * s)],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Full tensor-product Pauli ("cube") measurement: 3^n groups of 2^n.
    Cube,
    /// Two-qubit Pauli measurements on nearest-neighbour pairs: 9(n−1) groups of 4.
    NearestNeighbor,
}

impl Scheme {
    pub fn tag(self) -> u8 {
        match self {
            Scheme::Cube => 0,
            Scheme::NearestNeighbor => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(Scheme::Cube),
            1 => Ok(Scheme::NearestNeighbor),
            t => Err(QstError::Format(format!("unknown scheme tag {t}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Cube => "cube",
            Scheme::NearestNeighbor => "nn",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = QstError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cube" => Ok(Scheme::Cube),
            "nn" => Ok(Scheme::NearestNeighbor),
            other => Err(QstError::Validation(format!("unknown scheme '{other}' (expected cube|nn)"))),
        }
    }
}

/// One complete projective measurement on `qubits`: a choice of basis per
/// measured qubit, with one projector per outcome bit-string.
#[derive(Clone, Debug)]
pub struct PovmGroup {
    pub label: usize,
    pub qubits: Vec<usize>,
    pub bases: Vec<Basis>,
}

impl PovmGroup {
    pub fn size(&self) -> usize {
        1 << self.qubits.len()
    }

    /// Local state vector (over the measured qubits) of outcome `k`.
    pub fn local_vector(&self, outcome: usize) -> Vec<C64> {
        let k = self.qubits.len();
        let mut v = vec![C64::new(1.0, 0.0)];
        for (pos, basis) in self.bases.iter().enumerate() {
            let bit = outcome >> (k - 1 - pos) & 1;
            let e = basis.eigenvector(bit);
            v = v.iter().flat_map(|&a| [a * e[0], a * e[1]]).collect();
        }
        v
    }

    /// Local projector |v⟩⟨v| on the measured qubits.
    pub fn local_projector(&self, outcome: usize) -> CMatrix {
        let v = nalgebra::DVector::from_vec(self.local_vector(outcome));
        &v * v.adjoint()
    }

    /// Full d×d projector (identity on unmeasured qubits).
    pub fn projector(&self, outcome: usize, n_qubits: usize) -> CMatrix {
        let local = self.local_projector(outcome);
        let d = 1usize << n_qubits;
        let k = self.qubits.len();
        // map full index -> (local index, rest index)
        let split = |i: usize| {
            let mut loc = 0;
            let mut rest = i;
            for (pos, &q) in self.qubits.iter().enumerate() {
                let bit = i >> (n_qubits - 1 - q) & 1;
                loc |= bit << (k - 1 - pos);
                rest &= !(1 << (n_qubits - 1 - q));
            }
            (loc, rest)
        };
        CMatrix::from_fn(d, d, |i, j| {
            let (li, ri) = split(i);
            let (lj, rj) = split(j);
            if ri == rj {
                local[(li, lj)]
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }
}

#[derive(Clone, Debug)]
pub struct MeasurementSet {
    n_qubits: usize,
    scheme: Scheme,
    groups: Vec<PovmGroup>,
}

fn base3_bases(index: usize, len: usize) -> Vec<Basis> {
    (0..len).map(|pos| Basis::ALL[index / 3usize.pow((len - 1 - pos) as u32) % 3]).collect()
}

/// All 6^n tensor-product Pauli projectors, one group per basis choice.
pub fn cube_measurement(n_qubits: usize) -> Result<MeasurementSet> {
    if n_qubits == 0 || n_qubits > MAX_CUBE_QUBITS {
        return Err(QstError::Size(format!("cube measurement supports 1..={MAX_CUBE_QUBITS} qubits, got {n_qubits}")));
    }
    let n_groups = 3usize.pow(n_qubits as u32);
    let groups = (0..n_groups)
        .map(|g| PovmGroup { label: g, qubits: (0..n_qubits).collect(), bases: base3_bases(g, n_qubits) })
        .collect();
    Ok(MeasurementSet { n_qubits, scheme: Scheme::Cube, groups })
}

/// Two-qubit Pauli measurements on every adjacent pair `(i, i+1)`.
pub fn nn_pauli_measurement(n_qubits: usize) -> Result<MeasurementSet> {
    if !(2..=crate::state::MAX_QUBITS).contains(&n_qubits) {
        return Err(QstError::Size(format!("nearest-neighbour scheme needs 2..=12 qubits, got {n_qubits}")));
    }
    let mut groups = Vec::with_capacity(9 * (n_qubits - 1));
    for pair in 0..n_qubits - 1 {
        for b in 0..9 {
            groups.push(PovmGroup { label: groups.len(), qubits: vec![pair, pair + 1], bases: base3_bases(b, 2) });
        }
    }
    Ok(MeasurementSet { n_qubits, scheme: Scheme::NearestNeighbor, groups })
}

impl MeasurementSet {
    pub fn new(scheme: Scheme, n_qubits: usize) -> Result<Self> {
        match scheme {
            Scheme::Cube => cube_measurement(n_qubits),
            Scheme::NearestNeighbor => nn_pauli_measurement(n_qubits),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn groups(&self) -> &[PovmGroup] {
        &self.groups
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    /// Operators per group (2^n for cube, 4 for nearest-neighbour).
    pub fn group_size(&self) -> usize {
        self.groups[0].size()
    }

    /// Total operator count M.
    pub fn len(&self) -> usize {
        self.n_groups() * self.group_size()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// (group, outcome) of operator `j`.
    pub fn locate(&self, j: usize) -> (usize, usize) {
        (j / self.group_size(), j % self.group_size())
    }

    /// Explicit d×d matrix of operator `j`.
    pub fn operator(&self, j: usize) -> CMatrix {
        let (g, k) = self.locate(j);
        self.groups[g].projector(k, self.n_qubits)
    }

    pub fn operators(&self) -> Vec<CMatrix> {
        (0..self.len()).map(|j| self.operator(j)).collect()
    }

    /// Remark-1 flattening of one operator: real parts (row-major) then imaginary parts.
    pub fn flatten_operator(op: &CMatrix) -> Vec<f64> {
        let d = op.nrows();
        let mut out = Vec::with_capacity(2 * d * d);
        for i in 0..d {
            for j in 0..d {
                out.push(op[(i, j)].re);
            }
        }
        for i in 0..d {
            for j in 0..d {
                out.push(op[(i, j)].im);
            }
        }
        out
    }

    /// The real operator matrix O (M × 2d²); row j reconstructs operator j.
    pub fn flattened_operators(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut o = DMatrix::zeros(self.len(), 2 * d * d);
        for j in 0..self.len() {
            let row = Self::flatten_operator(&self.operator(j));
            for (c, v) in row.into_iter().enumerate() {
                o[(j, c)] = v;
            }
        }
        o
    }

    /// Inverse of [`Self::flatten_operator`].
    pub fn unflatten_operator(row: &[f64], d: usize) -> Result<CMatrix> {
        if row.len() != 2 * d * d {
            return Err(QstError::Shape(format!("flattened operator has {} entries, expected {}", row.len(), 2 * d * d)));
        }
        Ok(CMatrix::from_fn(d, d, |i, j| C64::new(row[i * d + j], row[d * d + i * d + j])))
    }

    /// Width of one operator's feature row used by the learned embedding.
    ///
    /// Cube sets use the full flattening (2d²). Nearest-neighbour sets use the
    /// flattened local two-qubit projector (32 values) followed by a one-hot of
    /// the pair position, since a full flattening grows as 4^n.
    pub fn feature_width(&self) -> usize {
        match self.scheme {
            Scheme::Cube => 2 * self.dim() * self.dim(),
            Scheme::NearestNeighbor => 32 + (self.n_qubits - 1),
        }
    }

    pub fn operator_features(&self, j: usize) -> Vec<f64> {
        match self.scheme {
            Scheme::Cube => Self::flatten_operator(&self.operator(j)),
            Scheme::NearestNeighbor => {
                let (g, k) = self.locate(j);
                let group = &self.groups[g];
                let mut out = Self::flatten_operator(&group.local_projector(k));
                let mut onehot = vec![0.0; self.n_qubits - 1];
                onehot[group.qubits[0]] = 1.0;
                out.extend(onehot);
                out
            }
        }
    }

    /// Concatenated features of every operator in group `g` (group_size × feature_width).
    pub fn group_features(&self, g: usize) -> Vec<f64> {
        let gs = self.group_size();
        (g * gs..(g + 1) * gs).flat_map(|j| self.operator_features(j)).collect()
    }

    /// Born probabilities `p_j = Tr(O_j ρ)`, clamped to [0, 1].
    pub fn born_probabilities(&self, rho: &DensityMatrix) -> Result<Vec<f64>> {
        born_probabilities(rho, self)
    }
}

/// Born probabilities `p_j = Tr(O_j ρ)`, clamped to [0, 1].
pub fn born_probabilities(rho: &DensityMatrix, ms: &MeasurementSet) -> Result<Vec<f64>> {
    if rho.n_qubits() != ms.n_qubits() {
        return Err(QstError::Shape(format!(
            "state has {} qubits but measurement set has {}",
            rho.n_qubits(),
            ms.n_qubits()
        )));
    }
    let mut p = Vec::with_capacity(ms.len());
    for group in ms.groups() {
        let reduced;
        let local = if group.qubits.len() == ms.n_qubits() {
            rho.matrix()
        } else {
            reduced = linalg::reduced_state(rho.matrix(), ms.n_qubits(), &group.qubits);
            &reduced
        };
        for k in 0..group.size() {
            let v = nalgebra::DVector::from_vec(group.local_vector(k));
            let val = (v.adjoint() * local * &v)[(0, 0)].re;
            p.push(val.clamp(0.0, 1.0));
        }
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::haar_pure_state;

    #[test]
    fn cube_counts() {
        let ms = cube_measurement(2).unwrap();
        assert_eq!(ms.len(), 36);
        assert_eq!(ms.n_groups(), 9);
        assert_eq!(ms.group_size(), 4);
        assert!(cube_measurement(0).is_err());
        assert!(cube_measurement(7).is_err());
    }

    #[test]
    fn one_qubit_groups_resolve_identity() {
        let ms = cube_measurement(1).unwrap();
        for g in 0..ms.n_groups() {
            let s = ms.operator(2 * g) + ms.operator(2 * g + 1);
            assert!(linalg::max_abs_diff(&s, &CMatrix::identity(2, 2)) < 1e-15);
        }
    }

    #[test]
    fn cube_two_qubit_sum_is_nine_identity() {
        let ms = cube_measurement(2).unwrap();
        let sum = ms.operators().into_iter().fold(CMatrix::zeros(4, 4), |acc, o| acc + o);
        let target = CMatrix::identity(4, 4).scale(9.0);
        assert!(linalg::max_abs_diff(&sum, &target) < 1e-12);
    }

    #[test]
    fn every_cube_projector_is_rank_one_trace_one() {
        for n in 1..=3 {
            let ms = cube_measurement(n).unwrap();
            for op in ms.operators() {
                assert!((linalg::trace(&op) - C64::new(1.0, 0.0)).norm() < 1e-12);
                assert!(linalg::max_abs_diff(&(&op * &op), &op) < 1e-12);
            }
        }
    }

    #[test]
    fn nn_counts_match_table_captions() {
        let ms8 = nn_pauli_measurement(8).unwrap();
        assert_eq!(ms8.n_groups(), 63);
        assert_eq!(ms8.len(), 252);
        assert_eq!(nn_pauli_measurement(12).unwrap().n_groups(), 99);
        assert!(nn_pauli_measurement(1).is_err());
    }

    #[test]
    fn nn_two_qubits_equals_cube() {
        let nn = nn_pauli_measurement(2).unwrap();
        let cube = cube_measurement(2).unwrap();
        assert_eq!(nn.len(), cube.len());
        for j in 0..nn.len() {
            assert!(linalg::max_abs_diff(&nn.operator(j), &cube.operator(j)) < 1e-15);
        }
    }

    #[test]
    fn nn_projectors_resolve_identity_per_group() {
        let ms = nn_pauli_measurement(3).unwrap();
        for g in 0..ms.n_groups() {
            let s = (0..4).fold(CMatrix::zeros(8, 8), |acc, k| acc + ms.groups()[g].projector(k, 3));
            assert!(linalg::max_abs_diff(&s, &CMatrix::identity(8, 8)) < 1e-12);
        }
    }

    #[test]
    fn flatten_round_trip() {
        let ms = cube_measurement(2).unwrap();
        let o = ms.flattened_operators();
        for j in 0..ms.len() {
            let row: Vec<f64> = o.row(j).iter().copied().collect();
            let back = MeasurementSet::unflatten_operator(&row, 4).unwrap();
            assert_eq!(back, ms.operator(j));
        }
    }

    #[test]
    fn born_examples() {
        let ms = cube_measurement(1).unwrap();
        let zero = DensityMatrix::from_pure(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]).unwrap();
        let p = born_probabilities(&zero, &ms).unwrap();
        assert_eq!(&p[0..2], &[1.0, 0.0]);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = DensityMatrix::from_pure(&[C64::new(s, 0.0), C64::new(s, 0.0)]).unwrap();
        let p = born_probabilities(&plus, &ms).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
        let mixed = DensityMatrix::maximally_mixed(2);
        let p = born_probabilities(&mixed, &cube_measurement(2).unwrap()).unwrap();
        assert!(p.iter().all(|&x| (x - 0.25).abs() < 1e-15));
        assert!(born_probabilities(&mixed, &ms).is_err());
    }

    #[test]
    fn nn_born_matches_explicit_trace() {
        let rho = haar_pure_state(3, 11).unwrap();
        let ms = nn_pauli_measurement(3).unwrap();
        let p = born_probabilities(&rho, &ms).unwrap();
        for (j, pj) in p.iter().enumerate() {
            let explicit = linalg::trace(&(ms.operator(j) * rho.matrix())).re;
            assert!((pj - explicit).abs() < 1e-13);
        }
    }
}
