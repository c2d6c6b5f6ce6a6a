use std::collections::BTreeSet;

use proptest::prelude::*;
use qst_core::baselines::project_to_simplex;
use qst_core::linalg::{self, CMatrix};
use qst_core::seed::derive_seed;
use qst_core::{apply_mask, born_probabilities, cube_measurement, fidelity, ginibre_mixed_state, haar_pure_state, nn_pauli_measurement, sample_frequencies, vector_to_density};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_states_are_density_matrices(n in 1usize..=3, seed in any::<u64>(), mixed in any::<bool>()) {
        let rho = if mixed { ginibre_mixed_state(n, seed).unwrap() } else { haar_pure_state(n, seed).unwrap() };
        rho.validate().unwrap();
        prop_assert!((linalg::trace(rho.matrix()).re - 1.0).abs() < 1e-12);
        prop_assert!(rho.eigenvalues().iter().all(|&x| x > -1e-12));
    }

    #[test]
    fn born_probabilities_form_distributions_per_group(n in 1usize..=3, seed in any::<u64>()) {
        let ms = cube_measurement(n).unwrap();
        let p = born_probabilities(&ginibre_mixed_state(n, seed).unwrap(), &ms).unwrap();
        prop_assert_eq!(p.len(), 6usize.pow(n as u32));
        for g in p.chunks(ms.group_size()) {
            prop_assert!(g.iter().all(|&x| x >= -1e-14));
            prop_assert!((g.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn frequencies_are_shot_fractions(seed in any::<u64>(), n_t in 1u64..2000) {
        let ms = nn_pauli_measurement(3).unwrap();
        let p = born_probabilities(&haar_pure_state(3, seed).unwrap(), &ms).unwrap();
        let f = sample_frequencies(&p, &ms, n_t, seed ^ 1).unwrap();
        for g in f.chunks(4) {
            prop_assert!((g.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for &x in g {
                let shots = x * n_t as f64;
                prop_assert!((shots - shots.round()).abs() < 1e-9);
            }
        }
        prop_assert_eq!(&f, &sample_frequencies(&p, &ms, n_t, seed ^ 1).unwrap());
    }

    #[test]
    fn masking_removes_whole_groups(seed in any::<u64>(), masked in proptest::collection::btree_set(0usize..9, 0..8)) {
        let ms = cube_measurement(2).unwrap();
        let p = born_probabilities(&haar_pure_state(2, seed).unwrap(), &ms).unwrap();
        let input = apply_mask(&p, &ms, &masked).unwrap();
        prop_assert_eq!(input.f_tilde.len(), p.len() - 4 * masked.len());
        prop_assert_eq!(input.o_tilde.nrows() + input.missing_o.nrows(), p.len());
        prop_assert_eq!(input.masked_count, 4 * masked.len());
    }

    #[test]
    fn simplex_projection_is_a_distribution(v in proptest::collection::vec(-3.0f64..3.0, 1..20)) {
        let p = project_to_simplex(&v);
        prop_assert!(p.iter().all(|&x| x >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // projection is idempotent
        let q = project_to_simplex(&p);
        prop_assert!(p.iter().zip(&q).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn any_cholesky_vector_gives_a_state(nu in proptest::collection::vec(-2.0f64..2.0, 16)) {
        prop_assume!(nu.iter().any(|x| x.abs() > 1e-3));
        let rho = vector_to_density(&nu).unwrap();
        rho.validate().unwrap();
    }

    #[test]
    fn fidelity_is_bounded_and_symmetric(a in any::<u64>(), b in any::<u64>()) {
        let r = ginibre_mixed_state(2, a).unwrap();
        let s = haar_pure_state(2, b).unwrap();
        let f = fidelity(&r, &s).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!((f - fidelity(&s, &r).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn seed_derivation_is_stable_and_role_sensitive(master in any::<u64>(), index in any::<u64>()) {
        prop_assert_eq!(derive_seed(master, "state", index), derive_seed(master, "state", index));
        prop_assert_ne!(derive_seed(master, "state", index), derive_seed(master, "noise", index));
    }
}

#[test]
fn measurement_groups_resolve_the_identity() {
    for ms in [cube_measurement(1).unwrap(), cube_measurement(2).unwrap(), nn_pauli_measurement(2).unwrap(), nn_pauli_measurement(4).unwrap()] {
        let d = ms.dim();
        let ops = ms.operators();
        for g in ops.chunks(ms.group_size()) {
            let sum = g.iter().fold(CMatrix::zeros(d, d), |acc, o| acc + o);
            assert!(linalg::max_abs_diff(&sum, &CMatrix::identity(d, d)) < 1e-12);
        }
    }
    assert_eq!(cube_measurement(3).unwrap().n_groups(), 27);
    assert_eq!(cube_measurement(3).unwrap().len(), 216);
    let nn = nn_pauli_measurement(5).unwrap();
    assert_eq!((nn.n_groups(), nn.group_size()), (36, 4));
}

#[test]
fn mask_of_everything_is_rejected() {
    let ms = cube_measurement(1).unwrap();
    let p = vec![0.5; 6];
    let all: BTreeSet<usize> = (0..3).collect();
    assert!(apply_mask(&p, &ms, &all).is_err());
}
