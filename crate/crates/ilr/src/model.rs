//! ILR network: group tokenization, encoder, remedy tokens and decoders.

use std::collections::BTreeSet;

use qst_adiff::{no_grad, ParamStore, Tensor};
use qst_core::seed::rng_from_seed;
use qst_core::MeasurementSet;

use crate::config::{Head, ModelConfig};
use crate::error::{IlrError, Result};
use crate::layers::{Linear, Stack};

/// Parameter-name prefixes of the four sub-networks.
pub const ENCODER: &str = "enc.";
pub const FREQ_DECODER: &str = "fdec.";
pub const NU_DECODER: &str = "nu.";
pub const MU_DECODER: &str = "mu.";

/// Masked frequencies for a batch; every sample has the same number of masked groups.
#[derive(Clone, Debug, PartialEq)]
pub struct MaskedBatch {
    pub batch: usize,
    /// Unmasked groups per sample.
    pub present: usize,
    /// `batch * present` group indices, ascending within each sample.
    pub groups: Vec<usize>,
    /// `batch * present * group_size` frequencies, in the order of `groups`.
    pub freqs: Vec<f64>,
}

impl MaskedBatch {
    /// Builds a batch from full frequency vectors and masked group sets.
    pub fn new(cfg: &ModelConfig, f: &[&[f64]], masks: &[&BTreeSet<usize>]) -> Result<Self> {
        let (g_total, d) = (cfg.total_groups, cfg.group_size);
        if f.len() != masks.len() || f.is_empty() {
            return Err(IlrError::Input(format!("{} frequency vectors vs {} masks", f.len(), masks.len())));
        }
        let n_masked = masks[0].len();
        if n_masked >= g_total {
            return Err(IlrError::Input("every group is masked".into()));
        }
        let present = g_total - n_masked;
        let mut groups = Vec::with_capacity(f.len() * present);
        let mut freqs = Vec::with_capacity(f.len() * present * d);
        for (fv, mask) in f.iter().zip(masks) {
            if fv.len() != cfg.n_operators() {
                return Err(IlrError::Input(format!("frequency vector of length {}, expected {}", fv.len(), cfg.n_operators())));
            }
            if mask.len() != n_masked || mask.iter().any(|&g| g >= g_total) {
                return Err(IlrError::Input("masks in a batch must have equal size and valid groups".into()));
            }
            for g in (0..g_total).filter(|g| !mask.contains(g)) {
                groups.push(g);
                freqs.extend_from_slice(&fv[g * d..(g + 1) * d]);
            }
        }
        Ok(MaskedBatch { batch: f.len(), present, groups, freqs })
    }

    pub fn masked(&self, total_groups: usize) -> usize {
        total_groups - self.present
    }
}

pub struct IlrModel {
    pub config: ModelConfig,
    pub params: ParamStore,
    embed_f: Linear,
    embed_o: Option<Linear>,
    encoder: Stack,
    fdec: Stack,
    fdec_head: Linear,
    nu: Stack,
    nu_head: Linear,
    mu: Stack,
    mu_head: Linear,
    /// `[G, d * op_width]` concatenated operator features per group.
    group_feats: Tensor,
}

impl IlrModel {
    /// Initialises every parameter deterministically from `seed`.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let c = &config;
        let ms = MeasurementSet::new(c.scheme, c.n_qubits)?;
        let mut rng = rng_from_seed(seed);
        let mut ps = ParamStore::new();
        let (l, d) = (c.embed, c.group_size);
        let stack = |ps: &mut ParamStore, name: &str, layers: usize, rng: &mut _| {
            Stack::new(ps, name, layers, l, c.heads, c.head_dim, c.ffn_hidden, rng)
        };

        let embed_f = Linear::new(&mut ps, "enc.embed_f", d, l, &mut rng)?;
        let embed_o = if c.operator_embedding {
            Some(Linear::new(&mut ps, "enc.embed_o", d * c.op_width, l, &mut rng)?)
        } else {
            None
        };
        let encoder = stack(&mut ps, "enc", c.encoder_layers, &mut rng)?;
        let fdec = stack(&mut ps, "fdec", c.freq_decoder_layers, &mut rng)?;
        let fdec_head = Linear::new(&mut ps, "fdec.head", l, d, &mut rng)?;
        let flat = c.total_groups * l;
        let nu = stack(&mut ps, "nu", c.nu_layers, &mut rng)?;
        let nu_head = Linear::new(&mut ps, "nu.head", flat, c.nu_len(), &mut rng)?;
        let mu = stack(&mut ps, "mu", c.mu_layers, &mut rng)?;
        let mu_head = Linear::new(&mut ps, "mu.head", flat, c.n_props, &mut rng)?;

        let mut feats = Vec::with_capacity(c.total_groups * d * c.op_width);
        for g in 0..c.total_groups {
            feats.extend(ms.group_features(g));
        }
        let group_feats = Tensor::new(&[c.total_groups, d * c.op_width], feats)?;

        Ok(IlrModel { config, params: ps, embed_f, embed_o, encoder, fdec, fdec_head, nu, nu_head, mu, mu_head, group_feats })
    }

    /// Per-group operator embeddings `[G, L]` (zeros when operator embedding is off).
    fn operator_tokens(&self) -> Result<Tensor> {
        match &self.embed_o {
            Some(lin) => lin.forward(&self.group_feats),
            None => Ok(Tensor::zeros(&[self.config.total_groups, self.config.embed])),
        }
    }

    /// Token per present group: `LinearF(freqs) + LinearO(operators)`, shape `[B, G - m/d, L]`.
    pub fn embed_tokens(&self, batch: &MaskedBatch) -> Result<Tensor> {
        let (d, l) = (self.config.group_size, self.config.embed);
        let rows = batch.batch * batch.present;
        if batch.groups.len() != rows || batch.freqs.len() != rows * d {
            return Err(IlrError::Input("batch groups and frequencies are misaligned".into()));
        }
        let f = Tensor::new(&[rows, d], batch.freqs.clone())?;
        let ops = self.operator_tokens()?.index_select(&batch.groups)?;
        let tok = self.embed_f.forward(&f)?.add(&ops)?;
        Ok(tok.reshape(&[batch.batch, batch.present, l])?)
    }

    pub fn encode(&self, tokens: &Tensor) -> Result<Tensor> {
        self.encoder.forward(tokens)
    }

    /// Restores the canonical `[B, G, L]` layout, filling masked groups with operator-only tokens.
    pub fn insert_remedy_tokens(&self, latent: &Tensor, batch: &MaskedBatch) -> Result<Tensor> {
        let (g_total, l) = (self.config.total_groups, self.config.embed);
        if batch.present == g_total {
            return Ok(latent.clone());
        }
        let enc_rows = batch.batch * batch.present;
        let pool = Tensor::concat(&[latent.reshape(&[enc_rows, l])?, self.operator_tokens()?], 0)?;
        let mut index = Vec::with_capacity(batch.batch * g_total);
        for b in 0..batch.batch {
            let present = &batch.groups[b * batch.present..(b + 1) * batch.present];
            let mut next = 0;
            for g in 0..g_total {
                if next < present.len() && present[next] == g {
                    index.push(b * batch.present + next);
                    next += 1;
                } else {
                    index.push(enc_rows + g);
                }
            }
        }
        Ok(pool.index_select(&index)?.reshape(&[batch.batch, g_total, l])?)
    }

    /// Full latent representation `[B, G, L]` for a masked batch.
    pub fn latent(&self, batch: &MaskedBatch) -> Result<Tensor> {
        let enc = self.encode(&self.embed_tokens(batch)?)?;
        self.insert_remedy_tokens(&enc, batch)
    }

    /// Estimated probabilities `[B, M]`, normalised within each group.
    pub fn decode_frequencies(&self, latent: &Tensor) -> Result<Tensor> {
        let (b, g) = (latent.shape()[0], latent.shape()[1]);
        let h = self.fdec.forward(latent)?;
        let logits = self.fdec_head.forward(&h)?;
        Ok(logits.softmax(2)?.reshape(&[b, g * self.config.group_size])?)
    }

    /// Flatten-then-linear state head, `[B, d^2]` for ν or `[B, k]` for μ.
    pub fn decode_state(&self, latent: &Tensor, head: Head) -> Result<Tensor> {
        let (stack, lin) = match head {
            Head::Nu => (&self.nu, &self.nu_head),
            Head::Mu => (&self.mu, &self.mu_head),
        };
        let b = latent.shape()[0];
        let h = stack.forward(latent)?;
        let flat = h.reshape(&[b, self.config.total_groups * self.config.embed])?;
        lin.forward(&flat)
    }

    /// Inference without graph recording; one output row per sample.
    pub fn predict(&self, batch: &MaskedBatch, head: Option<Head>) -> Result<Vec<Vec<f64>>> {
        let out = no_grad(|| -> Result<Tensor> {
            let lat = self.latent(batch)?;
            match head {
                Some(h) => self.decode_state(&lat, h),
                None => self.decode_frequencies(&lat),
            }
        })?;
        let width = out.shape()[1];
        let rows = out.data().chunks(width).map(<[f64]>::to_vec).collect();
        Ok(rows)
    }

    /// Number of scalar parameters whose name starts with `prefix`.
    pub fn count_params(&self, prefix: &str) -> usize {
        self.params.iter().filter(|(n, _)| n.starts_with(prefix)).map(|(_, t)| t.numel()).sum()
    }
}

impl std::fmt::Debug for IlrModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("IlrModel").field("config", &self.config).field("scalars", &self.params.n_scalars()).finish()
    }
}
