//! Generated state datasets and their little-endian `QSTD` file format.
//!
//! Only ν, p and μ are stored; shot-noise frequencies are regenerated from p
//! with a seed whenever they are needed.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::cholesky::cholesky_vector;
use crate::error::{QstError, Result};
use crate::measure::{born_probabilities, MeasurementSet, Scheme};
use crate::props::PropertySet;
use crate::seed::derive_seed;
use crate::state::{self, DensityMatrix, EntangledKind};

pub const MAGIC: &[u8; 4] = b"QSTD";
pub const VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Pure,
    Mixed,
    Ghz,
    W,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Pure => "pure",
            Family::Mixed => "mixed",
            Family::Ghz => "ghz",
            Family::W => "w",
        }
    }

    pub fn property_set(self) -> PropertySet {
        match self {
            Family::Mixed => PropertySet::Mixed,
            _ => PropertySet::Pure,
        }
    }

    pub fn sample(self, n_qubits: usize, seed: u64) -> Result<DensityMatrix> {
        match self {
            Family::Pure => state::haar_pure_state(n_qubits, seed),
            Family::Mixed => state::ginibre_mixed_state(n_qubits, seed),
            Family::Ghz => state::random_ghz_w_state(EntangledKind::Ghz, n_qubits, seed),
            Family::W => state::random_ghz_w_state(EntangledKind::W, n_qubits, seed),
        }
    }
}

impl std::str::FromStr for Family {
    type Err = QstError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pure" => Ok(Family::Pure),
            "mixed" => Ok(Family::Mixed),
            "ghz" => Ok(Family::Ghz),
            "w" => Ok(Family::W),
            other => Err(QstError::Validation(format!("unknown family '{other}' (expected pure|mixed|ghz|w)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub nu: Vec<f64>,
    pub p: Vec<f64>,
    pub mu: Vec<f64>,
}

impl Sample {
    pub fn state(&self) -> Result<DensityMatrix> {
        crate::cholesky::vector_to_density(&self.nu)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub n_qubits: usize,
    pub scheme: Scheme,
    pub n_ops: usize,
    pub k: usize,
    pub samples: Vec<Sample>,
}

#[derive(Clone, Copy, Debug)]
pub struct GenerateSpec {
    pub n_qubits: usize,
    pub family: Family,
    pub scheme: Scheme,
    pub count: usize,
    pub seed: u64,
}

impl GenerateSpec {
    pub fn state_seed(&self, index: usize) -> u64 {
        derive_seed(self.seed, "state", index as u64)
    }

    /// Reproduces the state behind sample `index` exactly.
    pub fn state(&self, index: usize) -> Result<DensityMatrix> {
        self.family.sample(self.n_qubits, self.state_seed(index))
    }
}

pub fn generate(spec: &GenerateSpec) -> Result<Dataset> {
    let ms = MeasurementSet::new(spec.scheme, spec.n_qubits)?;
    let props = spec.family.property_set();
    let samples = (0..spec.count)
        .into_par_iter()
        .map(|i| {
            let rho = spec.state(i)?;
            Ok(Sample { nu: cholesky_vector(&rho)?, p: born_probabilities(&rho, &ms)?, mu: props.compute(&rho)? })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset { n_qubits: spec.n_qubits, scheme: spec.scheme, n_ops: ms.len(), k: props.len(), samples })
}

impl Dataset {
    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn measurement_set(&self) -> Result<MeasurementSet> {
        MeasurementSet::new(self.scheme, self.n_qubits)
    }

    /// First `ceil(ratio·len)` samples for training, the rest for testing.
    pub fn split(&self, train_ratio: f64) -> (Dataset, Dataset) {
        let n_train = ((self.len() as f64) * train_ratio).round() as usize;
        let n_train = n_train.min(self.len());
        let mk = |s: &[Sample]| Dataset { samples: s.to_vec(), ..self.header_only() };
        (mk(&self.samples[..n_train]), mk(&self.samples[n_train..]))
    }

    fn header_only(&self) -> Dataset {
        Dataset { n_qubits: self.n_qubits, scheme: self.scheme, n_ops: self.n_ops, k: self.k, samples: Vec::new() }
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.n_qubits as u32).to_le_bytes())?;
        w.write_all(&[self.scheme.tag()])?;
        w.write_all(&(self.n_ops as u32).to_le_bytes())?;
        w.write_all(&(self.k as u32).to_le_bytes())?;
        w.write_all(&(self.samples.len() as u64).to_le_bytes())?;
        let d2 = self.dim() * self.dim();
        for (i, s) in self.samples.iter().enumerate() {
            if s.nu.len() != d2 || s.p.len() != self.n_ops || s.mu.len() != self.k {
                return Err(QstError::Shape(format!("sample {i} does not match the dataset header")));
            }
            for v in s.nu.iter().chain(&s.p).chain(&s.mu) {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(QstError::Format("not a QSTD dataset (bad magic)".into()));
        }
        let version = read_u32(r)?;
        if version != VERSION {
            return Err(QstError::Format(format!("unsupported dataset version {version}")));
        }
        let n_qubits = read_u32(r)? as usize;
        let mut tag = [0u8; 1];
        r.read_exact(&mut tag)?;
        let scheme = Scheme::from_tag(tag[0])?;
        let n_ops = read_u32(r)? as usize;
        let k = read_u32(r)? as usize;
        let mut count = [0u8; 8];
        r.read_exact(&mut count)?;
        let count = u64::from_le_bytes(count) as usize;
        if !(1..=state::MAX_QUBITS).contains(&n_qubits) {
            return Err(QstError::Format(format!("implausible qubit count {n_qubits}")));
        }
        let d2 = 1usize << (2 * n_qubits);
        let mut samples = Vec::with_capacity(count.min(1 << 20));
        for _ in 0..count {
            samples.push(Sample { nu: read_f64s(r, d2)?, p: read_f64s(r, n_ops)?, mu: read_f64s(r, k)? });
        }
        Ok(Self { n_qubits, scheme, n_ops, k, samples })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        crate::io::atomic_write(path, &buf)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        Self::read_from(&mut r)
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; 8 * n];
    r.read_exact(&mut buf)?;
    Ok(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

/// Companion text file recording how a dataset was generated.
pub fn metadata_path(dataset: &Path) -> PathBuf {
    let mut s = dataset.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

pub fn metadata_text(spec: &GenerateSpec) -> String {
    format!(
        "family={}\nn_qubits={}\nscheme={}\ncount={}\nseed={}\nstate_seed=derive(seed, \"state\", index)\nproperties={}\n",
        spec.family.name(),
        spec.n_qubits,
        spec.scheme.name(),
        spec.count,
        spec.seed,
        spec.family.property_set().properties().iter().map(|p| p.name()).collect::<Vec<_>>().join(",")
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generate_dimensions() {
        let spec = GenerateSpec { n_qubits: 2, family: Family::Pure, scheme: Scheme::Cube, count: 5, seed: 1 };
        let ds = generate(&spec).unwrap();
        assert_eq!(ds.len(), 5);
        assert!(ds.samples.iter().all(|s| s.nu.len() == 16 && s.p.len() == 36 && s.mu.len() == 3));
    }

    #[test]
    fn bad_magic_is_rejected() {
        let bytes = b"NOPE0000000000000000000000000".to_vec();
        assert!(matches!(Dataset::read_from(&mut bytes.as_slice()), Err(QstError::Format(_))));
    }

    #[test]
    fn family_parse() {
        assert_eq!("ghz".parse::<Family>().unwrap(), Family::Ghz);
        assert!("foo".parse::<Family>().is_err());
    }
}
