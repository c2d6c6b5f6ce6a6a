//! Central finite-difference checks of backpropagated gradients.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::error::Result;
use crate::tensor::{no_grad, Tensor};

/// Central-difference step.
pub const STEP: f64 = 1e-5;
/// Smallest denominator of the relative error, so entries that are zero
/// analytically and numerically compare by absolute difference.
pub const DENOM_FLOOR: f64 = 1e-5;

#[derive(Clone, Debug, Default)]
pub struct GradReport {
    pub entries: usize,
    pub worst: f64,
    /// (parameter index, entry) of the worst error.
    pub worst_at: (usize, usize),
    pub analytic: f64,
    pub numeric: f64,
}

impl GradReport {
    fn merge(&mut self, other: GradReport) {
        if other.worst > self.worst || self.entries == 0 {
            let entries = self.entries;
            *self = other.clone();
            self.entries += entries;
        } else {
            self.entries += other.entries;
        }
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(DENOM_FLOOR)
}

/// Compares the gradient of the scalar `loss` with respect to every entry of
/// `params` against central differences. The values of `params` are restored.
pub fn check_params(params: &[Tensor], loss: impl Fn() -> Result<Tensor>) -> Result<GradReport> {
    for p in params {
        p.zero_grad();
    }
    loss()?.backward()?;
    let mut report = GradReport::default();
    for (pi, p) in params.iter().enumerate() {
        let g = p.grad().unwrap_or_else(|| vec![0.0; p.numel()]);
        let base = p.to_vec();
        let mut v = base.clone();
        for i in 0..p.numel() {
            v[i] = base[i] + STEP;
            p.set_data(&v);
            let up = no_grad(|| loss().map(|t| t.item()));
            v[i] = base[i] - STEP;
            p.set_data(&v);
            let down = no_grad(|| loss().map(|t| t.item()));
            v[i] = base[i];
            p.set_data(&base);
            let numeric = (up? - down?) / (2.0 * STEP);
            let err = relative_error(g[i], numeric);
            report.entries += 1;
            if err > report.worst || report.entries == 1 {
                report = GradReport { worst: err, worst_at: (pi, i), analytic: g[i], numeric, entries: report.entries };
            }
        }
    }
    Ok(report)
}

/// One primitive under test: random input shapes and the function applied to them.
pub struct Case {
    pub name: &'static str,
    pub shapes: fn(&mut StdRng) -> Vec<Vec<usize>>,
    pub apply: fn(&[Tensor]) -> Result<Tensor>,
}

fn dims(rng: &mut StdRng, rank: usize) -> Vec<usize> {
    (0..rank).map(|_| rng.random_range(1..5)).collect()
}

fn same2(r: &mut StdRng, rank: usize) -> Vec<Vec<usize>> {
    let s = dims(r, rank);
    vec![s.clone(), s]
}

fn with_bias(r: &mut StdRng) -> Vec<Vec<usize>> {
    let s = dims(r, 3);
    let w = s[2];
    vec![s, vec![w], vec![w]]
}

fn widened(r: &mut StdRng, axis: usize, by: usize) -> Vec<Vec<usize>> {
    let mut s = dims(r, 3);
    s[axis] += by;
    vec![s]
}

/// Every differentiable primitive, plus the attention pattern composed from them.
pub fn primitive_cases() -> Vec<Case> {
    vec![
        Case { name: "add", shapes: |r| same2(r, 3), apply: |t| t[0].add(&t[1]) },
        Case { name: "sub", shapes: |r| same2(r, 2), apply: |t| t[0].sub(&t[1]) },
        Case { name: "mul", shapes: |r| same2(r, 3), apply: |t| t[0].mul(&t[1]) },
        Case { name: "scale", shapes: |r| vec![dims(r, 2)], apply: |t| Ok(t[0].scale(-0.7)) },
        Case { name: "add_bias", shapes: with_bias, apply: |t| t[0].add_bias(&t[1]) },
        Case { name: "mul_bias", shapes: with_bias, apply: |t| t[0].mul_bias(&t[1]) },
        Case { name: "affine", shapes: with_bias, apply: |t| t[0].affine(&t[1], &t[2]) },
        Case {
            name: "matmul",
            shapes: |r| {
                let b = dims(r, 2);
                let (m, k, n) = (r.random_range(1..5), r.random_range(1..5), r.random_range(1..5));
                vec![[b.clone(), vec![m, k]].concat(), [b, vec![k, n]].concat()]
            },
            apply: |t| t[0].matmul(&t[1]),
        },
        Case {
            name: "linear",
            shapes: |r| {
                let (b, m, k, n) = (r.random_range(1..4), r.random_range(1..5), r.random_range(1..5), r.random_range(1..5));
                vec![vec![b, m, k], vec![k, n], vec![n]]
            },
            apply: |t| t[0].linear(&t[1], Some(&t[2])),
        },
        Case { name: "permute", shapes: |r| vec![dims(r, 4)], apply: |t| t[0].permute(&[2, 0, 3, 1]) },
        Case { name: "transpose", shapes: |r| vec![dims(r, 3)], apply: |t| t[0].transpose(1, 2) },
        Case { name: "reshape", shapes: |r| vec![dims(r, 3)], apply: |t| t[0].reshape(&[t[0].numel()]) },
        Case {
            name: "concat",
            shapes: |r| {
                let mut a = dims(r, 3);
                let mut b = a.clone();
                a[1] = r.random_range(1..4);
                b[1] = r.random_range(1..4);
                vec![a.clone(), b, a]
            },
            apply: |t| Tensor::concat(t, 1),
        },
        Case { name: "slice", shapes: |r| widened(r, 2, 2), apply: |t| t[0].slice(2, 1, t[0].shape()[2] - 2) },
        Case {
            name: "index_select",
            shapes: |r| vec![vec![r.random_range(2..6), r.random_range(1..4)]],
            apply: |t| {
                let rows = t[0].shape()[0];
                t[0].index_select(&[rows - 1, 0, rows - 1, 1 % rows])
            },
        },
        Case { name: "sum", shapes: |r| vec![dims(r, 3)], apply: |t| Ok(t[0].sum()) },
        Case { name: "mean", shapes: |r| vec![dims(r, 2)], apply: |t| Ok(t[0].mean()) },
        Case { name: "softmax_last", shapes: |r| vec![dims(r, 3)], apply: |t| t[0].softmax(2) },
        Case { name: "softmax_mid", shapes: |r| vec![dims(r, 3)], apply: |t| t[0].softmax(1) },
        Case { name: "layer_norm_last", shapes: |r| widened(r, 2, 1), apply: |t| t[0].layer_norm(2) },
        Case { name: "layer_norm_mid", shapes: |r| widened(r, 1, 1), apply: |t| t[0].layer_norm(1) },
        Case { name: "gelu", shapes: |r| vec![dims(r, 3)], apply: |t| Ok(t[0].gelu()) },
        Case {
            name: "attention",
            shapes: |r| {
                let (b, t, d) = (r.random_range(1..3), r.random_range(1..5), r.random_range(1..4));
                vec![vec![b, t, d]; 3]
            },
            apply: |x| {
                let s = x[0].matmul(&x[1].transpose(1, 2)?)?.scale(0.5).softmax(2)?;
                s.matmul(&x[2])?.layer_norm(2)?.gelu().mean().reshape(&[1])
            },
        },
    ]
}

/// Checks `instances` random instances of `case`. Outputs are reduced to a
/// scalar through fixed random weights so every output entry matters.
pub fn run_case(case: &Case, instances: usize, seed: u64) -> Result<GradReport> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut total = GradReport::default();
    for _ in 0..instances {
        let params = (case.shapes)(&mut rng)
            .into_iter()
            .map(|s| {
                let n = s.iter().product();
                Tensor::parameter(&s, (0..n).map(|_| rng.random_range(-1.5..1.5)).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        let out_shape = (case.apply)(&params)?.shape().to_vec();
        let n_out = out_shape.iter().product();
        let weights = Tensor::new(&out_shape, (0..n_out).map(|_| rng.random_range(-1.5..1.5)).collect())?;
        let report = check_params(&params, || Ok((case.apply)(&params)?.mul(&weights)?.sum()))?;
        total.merge(report);
    }
    Ok(total)
}
