//! Monte-Carlo checks of the random state ensembles against known moments.

use qst_core::linalg;
use qst_core::props::purity;
use qst_core::state::{random_ghz_w_state, EntangledKind};
use qst_core::{ginibre_mixed_state, haar_pure_state};

const SAMPLES: u64 = 4000;

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

fn reduced_purity(rho: &qst_core::DensityMatrix) -> f64 {
    let r = linalg::reduced_state(rho.matrix(), rho.n_qubits(), &[0]);
    r.iter().map(|z| z.norm_sqr()).sum()
}

#[test]
fn haar_reduced_purity_matches_page_average() {
    // E Tr ρ_A² = (d_A + d_B) / (d_A d_B + 1) for Haar-random pure states
    let xs: Vec<f64> = (0..SAMPLES).map(|s| reduced_purity(&haar_pure_state(2, s).unwrap())).collect();
    let (m, se) = mean_and_stderr(&xs);
    assert!((m - 0.8).abs() < 5.0 * se, "mean {m} ± {se}");
}

#[test]
fn hilbert_schmidt_purity_average() {
    // Ginibre ensemble with square d×d matrices: E Tr ρ² = 2d / (d² + 1)
    for (n, d) in [(1usize, 2.0f64), (2, 4.0)] {
        let xs: Vec<f64> = (0..SAMPLES).map(|s| purity(&ginibre_mixed_state(n, s).unwrap())).collect();
        let (m, se) = mean_and_stderr(&xs);
        let expected = 2.0 * d / (d * d + 1.0);
        assert!((m - expected).abs() < 5.0 * se, "n={n}: mean {m} ± {se}, expected {expected}");
        assert!(xs.iter().all(|&x| x < 1.0));
    }
}

#[test]
fn haar_diagonal_is_flat_on_average() {
    // E |⟨i|ψ⟩|² = 1/d
    let mut acc = [0.0; 4];
    for s in 0..SAMPLES {
        let rho = haar_pure_state(2, s).unwrap();
        for (i, a) in acc.iter_mut().enumerate() {
            *a += rho.matrix()[(i, i)].re;
        }
    }
    for a in acc {
        assert!((a / SAMPLES as f64 - 0.25).abs() < 0.01);
    }
}

#[test]
fn local_rotations_preserve_entanglement() {
    // local unitaries leave the reduced spectrum of GHZ (½, ½) unchanged
    for s in 0..200 {
        let rho = random_ghz_w_state(EntangledKind::Ghz, 3, s).unwrap();
        assert!((reduced_purity(&rho) - 0.5).abs() < 1e-10);
        let w = random_ghz_w_state(EntangledKind::W, 3, s).unwrap();
        assert!((reduced_purity(&w) - 5.0 / 9.0).abs() < 1e-10);
    }
}
