use qst_core::{MeasurementSet, Scheme};

use crate::error::{IlrError, Result};

/// Architecture and data dimensions of an ILR model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelConfig {
    pub n_qubits: usize,
    pub scheme: Scheme,
    /// Token width L.
    pub embed: usize,
    pub encoder_layers: usize,
    pub heads: usize,
    pub head_dim: usize,
    pub ffn_hidden: usize,
    pub freq_decoder_layers: usize,
    pub nu_layers: usize,
    pub mu_layers: usize,
    /// Operators per detector group.
    pub group_size: usize,
    pub total_groups: usize,
    /// Feature width of a single operator.
    pub op_width: usize,
    /// Length of the property vector.
    pub n_props: usize,
    /// When false, operator features are replaced by zeros (ablation).
    pub operator_embedding: bool,
}

/// Which state-decoder head to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Head {
    Nu,
    Mu,
}

impl Head {
    pub fn name(self) -> &'static str {
        match self {
            Head::Nu => "nu",
            Head::Mu => "mu",
        }
    }
}

impl std::str::FromStr for Head {
    type Err = IlrError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nu" => Ok(Head::Nu),
            "mu" => Ok(Head::Mu),
            other => Err(IlrError::Config(format!("unknown head '{other}' (expected nu or mu)"))),
        }
    }
}

impl ModelConfig {
    /// Full-size architecture (L = 256, 8 encoder layers, 16 heads of width 32).
    pub fn full(ms: &MeasurementSet, n_props: usize) -> Self {
        ModelConfig {
            n_qubits: ms.n_qubits(),
            scheme: ms.scheme(),
            embed: 256,
            encoder_layers: 8,
            heads: 16,
            head_dim: 32,
            ffn_hidden: 256,
            freq_decoder_layers: 1,
            nu_layers: 4,
            mu_layers: 1,
            group_size: ms.group_size(),
            total_groups: ms.n_groups(),
            op_width: ms.feature_width(),
            n_props,
            operator_embedding: true,
        }
    }

    /// Reduced architecture that trains in minutes on one core.
    pub fn desk(ms: &MeasurementSet, n_props: usize) -> Self {
        ModelConfig {
            embed: 64,
            encoder_layers: 3,
            heads: 4,
            head_dim: 16,
            ffn_hidden: 128,
            nu_layers: 2,
            ..Self::full(ms, n_props)
        }
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn nu_len(&self) -> usize {
        self.dim() * self.dim()
    }

    pub fn n_operators(&self) -> usize {
        self.group_size * self.total_groups
    }

    pub fn attn_width(&self) -> usize {
        self.heads * self.head_dim
    }

    pub fn head_width(&self, head: Head) -> usize {
        match head {
            Head::Nu => self.nu_len(),
            Head::Mu => self.n_props,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("embed", self.embed),
            ("heads", self.heads),
            ("head_dim", self.head_dim),
            ("ffn_hidden", self.ffn_hidden),
            ("group_size", self.group_size),
            ("total_groups", self.total_groups),
            ("op_width", self.op_width),
            ("n_props", self.n_props),
            ("n_qubits", self.n_qubits),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(IlrError::Config(format!("{name} must be positive")));
        }
        let ms = MeasurementSet::new(self.scheme, self.n_qubits)?;
        if ms.group_size() != self.group_size || ms.n_groups() != self.total_groups || ms.feature_width() != self.op_width {
            return Err(IlrError::Config(format!(
                "group layout {}x{} (width {}) does not match the {} scheme on {} qubits",
                self.total_groups, self.group_size, self.op_width, self.scheme.name(), self.n_qubits
            )));
        }
        Ok(())
    }

    /// Fields in checkpoint order.
    pub fn to_words(&self) -> Vec<u32> {
        [
            self.n_qubits,
            self.scheme.tag() as usize,
            self.embed,
            self.encoder_layers,
            self.heads,
            self.head_dim,
            self.ffn_hidden,
            self.freq_decoder_layers,
            self.nu_layers,
            self.mu_layers,
            self.group_size,
            self.total_groups,
            self.op_width,
            self.n_props,
            self.operator_embedding as usize,
        ]
        .iter()
        .map(|&v| v as u32)
        .collect()
    }

    pub const N_WORDS: usize = 15;

    pub fn from_words(w: &[u32]) -> Result<Self> {
        if w.len() != Self::N_WORDS {
            return Err(IlrError::Checkpoint(format!("expected {} config words, got {}", Self::N_WORDS, w.len())));
        }
        let u = |i: usize| w[i] as usize;
        let cfg = ModelConfig {
            n_qubits: u(0),
            scheme: Scheme::from_tag(w[1] as u8)?,
            embed: u(2),
            encoder_layers: u(3),
            heads: u(4),
            head_dim: u(5),
            ffn_hidden: u(6),
            freq_decoder_layers: u(7),
            nu_layers: u(8),
            mu_layers: u(9),
            group_size: u(10),
            total_groups: u(11),
            op_width: u(12),
            n_props: u(13),
            operator_embedding: match w[14] {
                0 => false,
                1 => true,
                v => return Err(IlrError::Checkpoint(format!("operator_embedding flag {v}"))),
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
