//! Differentiable primitives.

use crate::error::{shape_err, Result};
use crate::tensor::{grad_enabled, numel, GradSink, Tensor};

pub const LAYER_NORM_EPS: f64 = 1e-5;
const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_A: f64 = 0.044_715;

pub(crate) enum Op {
    Leaf,
    Add(Tensor, Tensor),
    Sub(Tensor, Tensor),
    Mul(Tensor, Tensor),
    Scale(Tensor, f64),
    AddBias(Tensor, Tensor),
    MulBias(Tensor, Tensor),
    MatMul { a: Tensor, b: Tensor, batch: usize, m: usize, k: usize, n: usize, shared_rhs: bool },
    Permute { a: Tensor, axes: Vec<usize> },
    Reshape(Tensor),
    Concat { parts: Vec<Tensor>, axis: usize },
    Slice { a: Tensor, axis: usize, start: usize },
    Sum(Tensor),
    Mean(Tensor),
    Softmax { a: Tensor, axis: usize },
    LayerNorm { a: Tensor, axis: usize, inv_std: Vec<f64> },
    Gelu { a: Tensor, tanh: Vec<f64> },
    IndexSelect { a: Tensor, indices: Vec<usize> },
}

impl Op {
    pub(crate) fn parents(&self) -> Vec<&Tensor> {
        match self {
            Op::Leaf => vec![],
            Op::Add(a, b) | Op::Sub(a, b) | Op::Mul(a, b) | Op::AddBias(a, b) | Op::MulBias(a, b) => vec![a, b],
            Op::MatMul { a, b, .. } => vec![a, b],
            Op::Concat { parts, .. } => parts.iter().collect(),
            Op::Scale(a, _)
            | Op::Reshape(a)
            | Op::Sum(a)
            | Op::Mean(a)
            | Op::Gelu { a, .. }
            | Op::Permute { a, .. }
            | Op::Slice { a, .. }
            | Op::Softmax { a, .. }
            | Op::LayerNorm { a, .. }
            | Op::IndexSelect { a, .. } => vec![a],
        }
    }

    pub(crate) fn backward(&self, out: &Tensor, g: &[f64], sink: &mut GradSink<'_>) {
        match self {
            Op::Leaf => {}
            Op::Add(a, b) => {
                sink.add_slice(a, g);
                sink.add_slice(b, g);
            }
            Op::Sub(a, b) => {
                sink.add_slice(a, g);
                if sink.wants(b) {
                    sink.add_owned(b, g.iter().map(|x| -x).collect());
                }
            }
            Op::Mul(a, b) => {
                if sink.wants(a) {
                    let v = g.iter().zip(b.data().iter()).map(|(gi, bi)| gi * bi).collect();
                    sink.add_owned(a, v);
                }
                if sink.wants(b) {
                    let v = g.iter().zip(a.data().iter()).map(|(gi, ai)| gi * ai).collect();
                    sink.add_owned(b, v);
                }
            }
            Op::Scale(a, c) => {
                if sink.wants(a) {
                    sink.add_owned(a, g.iter().map(|x| c * x).collect());
                }
            }
            Op::AddBias(x, b) => {
                sink.add_slice(x, g);
                if sink.wants(b) {
                    let mut v = vec![0.0; b.numel()];
                    for row in g.chunks_exact(v.len()) {
                        add_into(&mut v, row);
                    }
                    sink.add_owned(b, v);
                }
            }
            Op::MulBias(x, w) => {
                let width = w.numel();
                if sink.wants(x) {
                    let wd = w.data();
                    let v = g.iter().enumerate().map(|(i, gi)| gi * wd[i % width]).collect();
                    drop(wd);
                    sink.add_owned(x, v);
                }
                if sink.wants(w) {
                    let xd = x.data();
                    let mut v = vec![0.0; width];
                    for (xrow, grow) in xd.chunks_exact(width).zip(g.chunks_exact(width)) {
                        for i in 0..width {
                            v[i] += grow[i] * xrow[i];
                        }
                    }
                    drop(xd);
                    sink.add_owned(w, v);
                }
            }
            Op::MatMul { a, b, batch, m, k, n, shared_rhs } => {
                let (batch, m, k, n) = (*batch, *m, *k, *n);
                if sink.wants(a) {
                    // dA = dC B^T
                    let bd = b.data();
                    let b_step = if *shared_rhs { 0 } else { k * n };
                    let v = gemm_batched(batch, m, n, k, g, m * n, n, 1, &bd, b_step, 1, n);
                    drop(bd);
                    sink.add_owned(a, v);
                }
                if sink.wants(b) {
                    // dB = A^T dC
                    let ad = a.data();
                    let v = if *shared_rhs {
                        gemm_batched(1, k, batch * m, n, &ad, 0, 1, k, g, 0, n, 1)
                    } else {
                        gemm_batched(batch, k, m, n, &ad, m * k, 1, k, g, m * n, n, 1)
                    };
                    drop(ad);
                    sink.add_owned(b, v);
                }
            }
            Op::Permute { a, axes } => {
                if sink.wants(a) {
                    let mut inv = vec![0; axes.len()];
                    for (i, &ax) in axes.iter().enumerate() {
                        inv[ax] = i;
                    }
                    sink.add_owned(a, permute_data(g, out.shape(), &inv));
                }
            }
            Op::Reshape(a) => sink.add_slice(a, g),
            Op::Concat { parts, axis } => {
                let (outer, _, inner) = split_axis(out.shape(), *axis);
                let total = out.shape()[*axis] * inner;
                let mut offset = 0;
                for p in parts {
                    let len = p.shape()[*axis] * inner;
                    if sink.wants(p) {
                        let mut v = Vec::with_capacity(outer * len);
                        for o in 0..outer {
                            v.extend_from_slice(&g[o * total + offset..o * total + offset + len]);
                        }
                        sink.add_owned(p, v);
                    }
                    offset += len;
                }
            }
            Op::Slice { a, axis, start } => {
                if let Some(s) = sink.slot(a) {
                    let (outer, n_in, inner) = split_axis(a.shape(), *axis);
                    let len = out.shape()[*axis] * inner;
                    let stride = n_in * inner;
                    for o in 0..outer {
                        let base = o * stride + start * inner;
                        add_into(&mut s[base..base + len], &g[o * len..(o + 1) * len]);
                    }
                }
            }
            Op::Sum(a) => {
                if sink.wants(a) {
                    sink.add_owned(a, vec![g[0]; a.numel()]);
                }
            }
            Op::Mean(a) => {
                if sink.wants(a) {
                    sink.add_owned(a, vec![g[0] / a.numel() as f64; a.numel()]);
                }
            }
            Op::Softmax { a, axis } => {
                if sink.wants(a) {
                    let y = out.data();
                    let (outer, n, inner) = split_axis(out.shape(), *axis);
                    let mut v = vec![0.0; y.len()];
                    for o in 0..outer {
                        for j in 0..inner {
                            let idx = |i: usize| (o * n + i) * inner + j;
                            let dot: f64 = (0..n).map(|i| g[idx(i)] * y[idx(i)]).sum();
                            for i in 0..n {
                                v[idx(i)] = y[idx(i)] * (g[idx(i)] - dot);
                            }
                        }
                    }
                    drop(y);
                    sink.add_owned(a, v);
                }
            }
            Op::LayerNorm { a, axis, inv_std } => {
                if sink.wants(a) {
                    let xh = out.data();
                    let (outer, n, inner) = split_axis(out.shape(), *axis);
                    let nf = n as f64;
                    let mut v = vec![0.0; xh.len()];
                    for o in 0..outer {
                        for j in 0..inner {
                            let idx = |i: usize| (o * n + i) * inner + j;
                            let mut mg = 0.0;
                            let mut mgx = 0.0;
                            for i in 0..n {
                                mg += g[idx(i)];
                                mgx += g[idx(i)] * xh[idx(i)];
                            }
                            mg /= nf;
                            mgx /= nf;
                            let r = inv_std[o * inner + j];
                            for i in 0..n {
                                v[idx(i)] = r * (g[idx(i)] - mg - xh[idx(i)] * mgx);
                            }
                        }
                    }
                    drop(xh);
                    sink.add_owned(a, v);
                }
            }
            Op::Gelu { a, tanh } => {
                if sink.wants(a) {
                    let x = a.data();
                    let v = g.iter().zip(x.iter().zip(tanh)).map(|(gi, (&xi, &t))| gi * gelu_grad(xi, t)).collect();
                    drop(x);
                    sink.add_owned(a, v);
                }
            }
            Op::IndexSelect { a, indices } => {
                if let Some(s) = sink.slot(a) {
                    let row = numel(&a.shape()[1..]);
                    for (r, &src) in indices.iter().enumerate() {
                        add_into(&mut s[src * row..(src + 1) * row], &g[r * row..(r + 1) * row]);
                    }
                }
            }
        }
    }
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    dst.iter_mut().zip(src).for_each(|(d, s)| *d += s);
}

/// (product of dims before axis, dim at axis, product after).
pub(crate) fn split_axis(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    (numel(&shape[..axis]), shape[axis], numel(&shape[axis + 1..]))
}

/// Returns `batch` stacked row-major products `A_i B_i` (each m x n) with arbitrary
/// operand strides; `a_step`/`b_step` are the offsets between consecutive batch operands.
#[allow(clippy::too_many_arguments)]
fn gemm_batched(
    batch: usize,
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    a_step: usize,
    rsa: usize,
    csa: usize,
    b: &[f64],
    b_step: usize,
    rsb: usize,
    csb: usize,
) -> Vec<f64> {
    let total = batch * m * n;
    if total == 0 || k == 0 {
        return vec![0.0; total];
    }
    let span = |rows: usize, cols: usize, rs: usize, cs: usize| (rows - 1) * rs + (cols - 1) * cs + 1;
    assert!(a.len() >= (batch - 1) * a_step + span(m, k, rsa, csa));
    assert!(b.len() >= (batch - 1) * b_step + span(k, n, rsb, csb));
    let mut c: Vec<f64> = Vec::with_capacity(total);
    // SAFETY: operand extents are checked above; with beta = 0 the kernel writes every
    // element of each m x n output block without reading it, so the buffer is fully
    // initialised before set_len.
    unsafe {
        for i in 0..batch {
            matrixmultiply::dgemm(
                m,
                k,
                n,
                1.0,
                a.as_ptr().add(i * a_step),
                rsa as isize,
                csa as isize,
                b.as_ptr().add(i * b_step),
                rsb as isize,
                csb as isize,
                0.0,
                c.as_mut_ptr().add(i * m * n),
                n as isize,
                1,
            );
        }
        c.set_len(total);
    }
    c
}

fn permute_data(data: &[f64], shape: &[usize], axes: &[usize]) -> Vec<f64> {
    let rank = shape.len();
    let mut in_strides = vec![1usize; rank];
    for i in (0..rank.saturating_sub(1)).rev() {
        in_strides[i] = in_strides[i + 1] * shape[i + 1];
    }
    let out_shape: Vec<usize> = axes.iter().map(|&a| shape[a]).collect();
    let strides: Vec<usize> = axes.iter().map(|&a| in_strides[a]).collect();
    let total = data.len();
    let mut out = Vec::with_capacity(total);
    if total == 0 {
        return out;
    }
    // innermost output axis is copied in a tight loop
    let last = rank - 1;
    let (n_last, s_last) = (out_shape[last], strides[last]);
    let mut idx = vec![0usize; rank];
    let mut base = 0usize;
    loop {
        for i in 0..n_last {
            out.push(data[base + i * s_last]);
        }
        let mut ax = last;
        loop {
            if ax == 0 {
                return out;
            }
            ax -= 1;
            idx[ax] += 1;
            base += strides[ax];
            if idx[ax] < out_shape[ax] {
                break;
            }
            base -= strides[ax] * idx[ax];
            idx[ax] = 0;
        }
    }
}

fn gelu_tanh(x: f64) -> f64 {
    (GELU_C * (x + GELU_A * x * x * x)).tanh()
}

/// Derivative given the cached inner tanh `t`.
fn gelu_grad(x: f64, t: f64) -> f64 {
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_A * x * x)
}

fn same_shape(op: &'static str, a: &Tensor, b: &Tensor) -> Result<()> {
    if a.shape() != b.shape() {
        return shape_err(op, format!("{:?} vs {:?}", a.shape(), b.shape()));
    }
    Ok(())
}

fn check_axis(op: &'static str, t: &Tensor, axis: usize) -> Result<()> {
    if axis >= t.shape().len() {
        return shape_err(op, format!("axis {axis} out of range for shape {:?}", t.shape()));
    }
    Ok(())
}

fn zip_map(a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    a.data().iter().zip(b.data().iter()).map(|(&x, &y)| f(x, y)).collect()
}

impl Tensor {
    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        same_shape("add", self, other)?;
        Ok(Tensor::from_op(self.shape().to_vec(), zip_map(self, other, |x, y| x + y), Op::Add(self.clone(), other.clone())))
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        same_shape("sub", self, other)?;
        Ok(Tensor::from_op(self.shape().to_vec(), zip_map(self, other, |x, y| x - y), Op::Sub(self.clone(), other.clone())))
    }

    /// Elementwise product.
    pub fn mul(&self, other: &Tensor) -> Result<Tensor> {
        same_shape("mul", self, other)?;
        Ok(Tensor::from_op(self.shape().to_vec(), zip_map(self, other, |x, y| x * y), Op::Mul(self.clone(), other.clone())))
    }

    pub fn scale(&self, c: f64) -> Tensor {
        let data = self.data().iter().map(|x| x * c).collect();
        Tensor::from_op(self.shape().to_vec(), data, Op::Scale(self.clone(), c))
    }

    fn last_dim(&self, op: &'static str, v: &Tensor) -> Result<usize> {
        let w = *self.shape().last().unwrap_or(&1);
        if v.shape() != [w] {
            return shape_err(op, format!("vector {:?} does not match last axis of {:?}", v.shape(), self.shape()));
        }
        Ok(w)
    }

    /// Adds a vector along the last axis.
    pub fn add_bias(&self, bias: &Tensor) -> Result<Tensor> {
        let w = self.last_dim("add_bias", bias)?;
        let b = bias.data();
        let mut data = self.to_vec();
        for row in data.chunks_exact_mut(w) {
            add_into(row, &b);
        }
        drop(b);
        Ok(Tensor::from_op(self.shape().to_vec(), data, Op::AddBias(self.clone(), bias.clone())))
    }

    /// Multiplies by a vector along the last axis.
    pub fn mul_bias(&self, gain: &Tensor) -> Result<Tensor> {
        let w = self.last_dim("mul_bias", gain)?;
        let b = gain.data();
        let mut data = self.to_vec();
        for row in data.chunks_exact_mut(w) {
            row.iter_mut().zip(b.iter()).for_each(|(x, g)| *x *= g);
        }
        drop(b);
        Ok(Tensor::from_op(self.shape().to_vec(), data, Op::MulBias(self.clone(), gain.clone())))
    }

    /// x * gain + shift along the last axis.
    pub fn affine(&self, gain: &Tensor, shift: &Tensor) -> Result<Tensor> {
        self.mul_bias(gain)?.add_bias(shift)
    }

    /// Batched matrix product `[.., m, k] x [.., k, n]`; a rank-2 rhs is shared by every batch.
    pub fn matmul(&self, rhs: &Tensor) -> Result<Tensor> {
        let (sa, sb) = (self.shape(), rhs.shape());
        if sa.len() < 2 || sb.len() < 2 {
            return shape_err("matmul", format!("operands must be at least rank 2, got {sa:?} and {sb:?}"));
        }
        let (m, k) = (sa[sa.len() - 2], sa[sa.len() - 1]);
        let (k2, n) = (sb[sb.len() - 2], sb[sb.len() - 1]);
        let lead = &sa[..sa.len() - 2];
        let shared = sb.len() == 2;
        if k != k2 || (!shared && &sb[..sb.len() - 2] != lead) {
            return shape_err("matmul", format!("incompatible shapes {sa:?} and {sb:?}"));
        }
        let batch = numel(lead);
        let out = {
            let (ad, bd) = (self.data(), rhs.data());
            if shared {
                gemm_batched(1, batch * m, k, n, &ad, 0, k, 1, &bd, 0, n, 1)
            } else {
                gemm_batched(batch, m, k, n, &ad, m * k, k, 1, &bd, k * n, n, 1)
            }
        };
        let mut shape = lead.to_vec();
        shape.extend([m, n]);
        Ok(Tensor::from_op(shape, out, Op::MatMul { a: self.clone(), b: rhs.clone(), batch, m, k, n, shared_rhs: shared }))
    }

    /// `x W + b` with `W` of shape `[in, out]`.
    pub fn linear(&self, weight: &Tensor, bias: Option<&Tensor>) -> Result<Tensor> {
        let y = self.matmul(weight)?;
        match bias {
            Some(b) => y.add_bias(b),
            None => Ok(y),
        }
    }

    pub fn permute(&self, axes: &[usize]) -> Result<Tensor> {
        let rank = self.shape().len();
        let mut seen = vec![false; rank];
        if axes.len() != rank || axes.iter().any(|&a| a >= rank || std::mem::replace(&mut seen[a], true)) {
            return shape_err("permute", format!("{axes:?} is not a permutation of rank {rank}"));
        }
        let shape: Vec<usize> = axes.iter().map(|&a| self.shape()[a]).collect();
        let data = permute_data(&self.data(), self.shape(), axes);
        Ok(Tensor::from_op(shape, data, Op::Permute { a: self.clone(), axes: axes.to_vec() }))
    }

    pub fn transpose(&self, i: usize, j: usize) -> Result<Tensor> {
        let rank = self.shape().len();
        if i >= rank || j >= rank {
            return shape_err("transpose", format!("axes ({i}, {j}) out of range for rank {rank}"));
        }
        let mut axes: Vec<usize> = (0..rank).collect();
        axes.swap(i, j);
        self.permute(&axes)
    }

    pub fn reshape(&self, shape: &[usize]) -> Result<Tensor> {
        if numel(shape) != self.numel() {
            return shape_err("reshape", format!("{:?} -> {shape:?}", self.shape()));
        }
        Ok(Tensor::from_op(shape.to_vec(), self.to_vec(), Op::Reshape(self.clone())))
    }

    pub fn concat(parts: &[Tensor], axis: usize) -> Result<Tensor> {
        let Some(first) = parts.first() else { return shape_err("concat", "no inputs") };
        check_axis("concat", first, axis)?;
        let mut shape = first.shape().to_vec();
        shape[axis] = 0;
        for p in parts {
            let s = p.shape();
            if s.len() != shape.len() || s.iter().enumerate().any(|(i, &d)| i != axis && d != first.shape()[i]) {
                return shape_err("concat", format!("{:?} vs {s:?} along axis {axis}", first.shape()));
            }
            shape[axis] += s[axis];
        }
        let (outer, _, inner) = split_axis(&shape, axis);
        let mut data = Vec::with_capacity(numel(&shape));
        for o in 0..outer {
            for p in parts {
                let len = p.shape()[axis] * inner;
                data.extend_from_slice(&p.data()[o * len..(o + 1) * len]);
            }
        }
        Ok(Tensor::from_op(shape, data, Op::Concat { parts: parts.to_vec(), axis }))
    }

    pub fn slice(&self, axis: usize, start: usize, len: usize) -> Result<Tensor> {
        check_axis("slice", self, axis)?;
        if start + len > self.shape()[axis] {
            return shape_err("slice", format!("{start}..{} exceeds axis {axis} of {:?}", start + len, self.shape()));
        }
        let (outer, n, inner) = split_axis(self.shape(), axis);
        let d = self.data();
        let mut data = Vec::with_capacity(outer * len * inner);
        for o in 0..outer {
            let base = (o * n + start) * inner;
            data.extend_from_slice(&d[base..base + len * inner]);
        }
        drop(d);
        let mut shape = self.shape().to_vec();
        shape[axis] = len;
        Ok(Tensor::from_op(shape, data, Op::Slice { a: self.clone(), axis, start }))
    }

    pub fn sum(&self) -> Tensor {
        let s = self.data().iter().sum();
        Tensor::from_op(vec![], vec![s], Op::Sum(self.clone()))
    }

    pub fn mean(&self) -> Tensor {
        let s: f64 = self.data().iter().sum();
        Tensor::from_op(vec![], vec![s / self.numel().max(1) as f64], Op::Mean(self.clone()))
    }

    pub fn softmax(&self, axis: usize) -> Result<Tensor> {
        check_axis("softmax", self, axis)?;
        let (outer, n, inner) = split_axis(self.shape(), axis);
        let mut y = self.to_vec();
        for o in 0..outer {
            for j in 0..inner {
                let idx = |i: usize| (o * n + i) * inner + j;
                let mx = (0..n).map(|i| y[idx(i)]).fold(f64::NEG_INFINITY, f64::max);
                let mut z = 0.0;
                for i in 0..n {
                    let e = (y[idx(i)] - mx).exp();
                    y[idx(i)] = e;
                    z += e;
                }
                for i in 0..n {
                    y[idx(i)] /= z;
                }
            }
        }
        Ok(Tensor::from_op(self.shape().to_vec(), y, Op::Softmax { a: self.clone(), axis }))
    }

    /// Normalises to zero mean and unit variance along `axis` (no affine part).
    pub fn layer_norm(&self, axis: usize) -> Result<Tensor> {
        check_axis("layer_norm", self, axis)?;
        let (outer, n, inner) = split_axis(self.shape(), axis);
        let mut y = self.to_vec();
        let mut inv_std = vec![0.0; outer * inner];
        for o in 0..outer {
            for j in 0..inner {
                let idx = |i: usize| (o * n + i) * inner + j;
                let mean = (0..n).map(|i| y[idx(i)]).sum::<f64>() / n as f64;
                let var = (0..n).map(|i| (y[idx(i)] - mean).powi(2)).sum::<f64>() / n as f64;
                let r = 1.0 / (var + LAYER_NORM_EPS).sqrt();
                for i in 0..n {
                    y[idx(i)] = (y[idx(i)] - mean) * r;
                }
                inv_std[o * inner + j] = r;
            }
        }
        Ok(Tensor::from_op(self.shape().to_vec(), y, Op::LayerNorm { a: self.clone(), axis, inv_std }))
    }

    /// GELU, tanh approximation.
    pub fn gelu(&self) -> Tensor {
        let x = self.data();
        let tanh: Vec<f64> = x.iter().map(|&v| gelu_tanh(v)).collect();
        let data = x.iter().zip(&tanh).map(|(&v, t)| 0.5 * v * (1.0 + t)).collect();
        drop(x);
        let op = if grad_enabled() && self.requires_grad() { Op::Gelu { a: self.clone(), tanh } } else { Op::Leaf };
        Tensor::from_op(self.shape().to_vec(), data, op)
    }

    /// Gathers slices along axis 0 (an embedding lookup when the rows are vectors).
    pub fn index_select(&self, indices: &[usize]) -> Result<Tensor> {
        let Some(&rows) = self.shape().first() else { return shape_err("index_select", "scalar input") };
        if let Some(bad) = indices.iter().find(|&&i| i >= rows) {
            return shape_err("index_select", format!("index {bad} out of range for {rows} rows"));
        }
        let row = numel(&self.shape()[1..]);
        let d = self.data();
        let mut data = Vec::with_capacity(indices.len() * row);
        for &i in indices {
            data.extend_from_slice(&d[i * row..(i + 1) * row]);
        }
        drop(d);
        let mut shape = self.shape().to_vec();
        shape[0] = indices.len();
        Ok(Tensor::from_op(shape, data, Op::IndexSelect { a: self.clone(), indices: indices.to_vec() }))
    }
}
