use qst_core::dataset::{generate, Dataset, Family, GenerateSpec};
use qst_core::{infidelity, Scheme};

fn spec(family: Family, seed: u64) -> GenerateSpec {
    GenerateSpec { n_qubits: 2, family, scheme: Scheme::Cube, count: 40, seed }
}

#[test]
fn save_and_load_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for family in [Family::Pure, Family::Mixed, Family::Ghz, Family::W] {
        let ds = generate(&spec(family, 9)).unwrap();
        let path = dir.path().join(format!("{}.qstd", family.name()));
        ds.save(&path).unwrap();
        assert_eq!(Dataset::load(&path).unwrap(), ds);
    }
}

#[test]
fn generation_is_deterministic_and_seed_sensitive() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    generate(&spec(Family::Mixed, 5)).unwrap().save(&a).unwrap();
    generate(&spec(Family::Mixed, 5)).unwrap().save(&b).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_ne!(generate(&spec(Family::Mixed, 6)).unwrap(), generate(&spec(Family::Mixed, 5)).unwrap());
}

#[test]
fn stored_vectors_reproduce_the_states() {
    let s = spec(Family::Pure, 2);
    let ds = generate(&s).unwrap();
    for (i, sample) in ds.samples.iter().enumerate() {
        assert!(infidelity(&s.state(i).unwrap(), &sample.state().unwrap()).unwrap() < 1e-7);
    }
}

#[test]
fn truncated_file_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.qstd");
    generate(&spec(Family::Pure, 1)).unwrap().save(&path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 5]).unwrap();
    assert!(Dataset::load(&path).is_err());
}

#[test]
fn split_is_a_prefix_partition() {
    let ds = generate(&spec(Family::Pure, 1)).unwrap();
    let (train, test) = ds.split(0.9);
    assert_eq!((train.len(), test.len()), (36, 4));
    assert_eq!(train.samples[..], ds.samples[..36]);
}
