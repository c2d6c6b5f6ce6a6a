//! Quantum-state tomography primitives: random and structured state
//! families, Pauli measurement sets, finite-shot simulation with group
//! masking, quantum properties, fidelity metrics, and the classical LRE and
//! MLE reconstruction baselines.

pub mod baselines;
pub mod cholesky;
pub mod dataset;
pub mod error;
pub mod io;
pub mod linalg;
pub mod measure;
pub mod metrics;
pub mod props;
pub mod record;
pub mod seed;
pub mod state;

pub use cholesky::{cholesky_vector, vector_to_density};
pub use error::{QstError, Result};
pub use measure::{born_probabilities, cube_measurement, nn_pauli_measurement, MeasurementSet, Scheme};
pub use metrics::{fidelity, infidelity, log_infidelity, mse};
pub use record::{apply_mask, sample_frequencies, MeasurementRecord};
pub use state::{ghz_w_state, ginibre_mixed_state, haar_pure_state, DensityMatrix, EntangledKind};
