//! Linear maps, layer norm and pre-norm transformer blocks.

use qst_adiff::{kaiming_uniform, ones_param, zeros_param, ParamStore, Tensor};
use rand::Rng;

use crate::error::Result;

pub struct Linear {
    pub w: Tensor,
    pub b: Tensor,
}

impl Linear {
    pub fn new<R: Rng>(ps: &mut ParamStore, name: &str, fan_in: usize, fan_out: usize, rng: &mut R) -> Result<Self> {
        let w = ps.add(format!("{name}.w"), kaiming_uniform(&[fan_in, fan_out], fan_in, rng))?;
        let b = ps.add(format!("{name}.b"), zeros_param(&[fan_out]))?;
        Ok(Linear { w, b })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        Ok(x.linear(&self.w, Some(&self.b))?)
    }
}

pub struct Norm {
    pub gain: Tensor,
    pub shift: Tensor,
}

impl Norm {
    pub fn new(ps: &mut ParamStore, name: &str, width: usize) -> Result<Self> {
        let gain = ps.add(format!("{name}.g"), ones_param(&[width]))?;
        let shift = ps.add(format!("{name}.b"), zeros_param(&[width]))?;
        Ok(Norm { gain, shift })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let last = x.shape().len() - 1;
        Ok(x.layer_norm(last)?.affine(&self.gain, &self.shift)?)
    }
}

/// Pre-norm block: `x + Attn(LN(x))`, then `x + FFN(LN(x))`.
pub struct Block {
    heads: usize,
    head_dim: usize,
    ln1: Norm,
    qkv: Linear,
    out: Linear,
    ln2: Norm,
    ff1: Linear,
    ff2: Linear,
}

impl Block {
    pub fn new<R: Rng>(ps: &mut ParamStore, name: &str, embed: usize, heads: usize, head_dim: usize, hidden: usize, rng: &mut R) -> Result<Self> {
        let inner = heads * head_dim;
        Ok(Block {
            heads,
            head_dim,
            ln1: Norm::new(ps, &format!("{name}.ln1"), embed)?,
            qkv: Linear::new(ps, &format!("{name}.attn.qkv"), embed, 3 * inner, rng)?,
            out: Linear::new(ps, &format!("{name}.attn.out"), inner, embed, rng)?,
            ln2: Norm::new(ps, &format!("{name}.ln2"), embed)?,
            ff1: Linear::new(ps, &format!("{name}.ffn.1"), embed, hidden, rng)?,
            ff2: Linear::new(ps, &format!("{name}.ffn.2"), hidden, embed, rng)?,
        })
    }

    /// `x` has shape `[B, T, L]`.
    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let (b, t) = (x.shape()[0], x.shape()[1]);
        let (h, dh) = (self.heads, self.head_dim);
        let qkv = self.qkv.forward(&self.ln1.forward(x)?)?;
        // [B, T, 3, H, Dh] -> [3, B, H, T, Dh]
        let qkv = qkv.reshape(&[b, t, 3, h, dh])?.permute(&[2, 0, 3, 1, 4])?;
        let part = |i: usize| -> Result<Tensor> { Ok(qkv.slice(0, i, 1)?.reshape(&[b * h, t, dh])?) };
        let (q, k, v) = (part(0)?, part(1)?, part(2)?);
        let scores = q.matmul(&k.transpose(1, 2)?)?.scale(1.0 / (dh as f64).sqrt());
        let ctx = scores.softmax(2)?.matmul(&v)?;
        let ctx = ctx.reshape(&[b, h, t, dh])?.permute(&[0, 2, 1, 3])?.reshape(&[b, t, h * dh])?;
        let x = x.add(&self.out.forward(&ctx)?)?;
        let ff = self.ff2.forward(&self.ff1.forward(&self.ln2.forward(&x)?)?.gelu())?;
        Ok(x.add(&ff)?)
    }
}

/// Stack of blocks followed by a final norm.
pub struct Stack {
    pub blocks: Vec<Block>,
    pub norm: Norm,
}

impl Stack {
    #[allow(clippy::too_many_arguments)]
    pub fn new<R: Rng>(
        ps: &mut ParamStore,
        name: &str,
        layers: usize,
        embed: usize,
        heads: usize,
        head_dim: usize,
        hidden: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let blocks = (0..layers)
            .map(|i| Block::new(ps, &format!("{name}.blocks.{i}"), embed, heads, head_dim, hidden, rng))
            .collect::<Result<_>>()?;
        Ok(Stack { blocks, norm: Norm::new(ps, &format!("{name}.ln_f"), embed)? })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let mut h = x.clone();
        for blk in &self.blocks {
            h = blk.forward(&h)?;
        }
        self.norm.forward(&h)
    }
}
