//! Reference-counted tensor graph nodes and the reverse sweep.

use std::cell::{Cell, Ref, RefCell};
use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;

use crate::error::{AdError, Result};
use crate::ops::Op;

thread_local! {
    static NEXT_ID: Cell<u64> = const { Cell::new(0) };
    static GRAD_ENABLED: Cell<bool> = const { Cell::new(true) };
}

fn next_id() -> u64 {
    NEXT_ID.with(|c| {
        let id = c.get();
        c.set(id + 1);
        id
    })
}

pub(crate) fn grad_enabled() -> bool {
    GRAD_ENABLED.with(|c| c.get())
}

/// Runs `f` without recording the graph; results never require gradients.
pub fn no_grad<T>(f: impl FnOnce() -> T) -> T {
    let prev = GRAD_ENABLED.with(|c| c.replace(false));
    let out = f();
    GRAD_ENABLED.with(|c| c.set(prev));
    out
}

pub(crate) struct Node {
    pub(crate) id: u64,
    pub(crate) shape: Vec<usize>,
    pub(crate) data: RefCell<Vec<f64>>,
    pub(crate) grad: RefCell<Option<Vec<f64>>>,
    pub(crate) requires_grad: Cell<bool>,
    pub(crate) op: Op,
}

/// Dense row-major f64 tensor; cloning shares the node.
#[derive(Clone)]
pub struct Tensor(pub(crate) Rc<Node>);

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tensor").field("shape", &self.0.shape).field("requires_grad", &self.requires_grad()).finish()
    }
}

pub fn numel(shape: &[usize]) -> usize {
    shape.iter().product()
}

impl Tensor {
    pub(crate) fn from_op(shape: Vec<usize>, data: Vec<f64>, op: Op) -> Tensor {
        debug_assert_eq!(numel(&shape), data.len());
        let requires = grad_enabled() && op.parents().iter().any(|p| p.requires_grad());
        let op = if requires { op } else { Op::Leaf };
        Tensor(Rc::new(Node {
            id: next_id(),
            shape,
            data: RefCell::new(data),
            grad: RefCell::new(None),
            requires_grad: Cell::new(requires),
            op,
        }))
    }

    /// Constant input (no gradient).
    pub fn new(shape: &[usize], data: Vec<f64>) -> Result<Tensor> {
        if numel(shape) != data.len() {
            return crate::error::shape_err("new", format!("shape {shape:?} needs {} values, got {}", numel(shape), data.len()));
        }
        Ok(Tensor::from_op(shape.to_vec(), data, Op::Leaf))
    }

    /// Trainable leaf.
    pub fn parameter(shape: &[usize], data: Vec<f64>) -> Result<Tensor> {
        let t = Tensor::new(shape, data)?;
        t.0.requires_grad.set(true);
        Ok(t)
    }

    pub fn zeros(shape: &[usize]) -> Tensor {
        Tensor::from_op(shape.to_vec(), vec![0.0; numel(shape)], Op::Leaf)
    }

    pub fn scalar(v: f64) -> Tensor {
        Tensor::from_op(vec![], vec![v], Op::Leaf)
    }

    pub fn shape(&self) -> &[usize] {
        &self.0.shape
    }

    pub fn numel(&self) -> usize {
        numel(&self.0.shape)
    }

    pub fn data(&self) -> Ref<'_, Vec<f64>> {
        self.0.data.borrow()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.data.borrow().clone()
    }

    pub fn item(&self) -> f64 {
        self.0.data.borrow()[0]
    }

    /// Overwrites the values of a leaf (used by optimisers and checkpoint loading).
    pub fn set_data(&self, values: &[f64]) {
        let mut d = self.0.data.borrow_mut();
        assert_eq!(d.len(), values.len(), "set_data length mismatch");
        d.copy_from_slice(values);
    }

    pub fn update_data(&self, f: impl FnOnce(&mut [f64])) {
        f(&mut self.0.data.borrow_mut());
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self.0.op, Op::Leaf)
    }

    pub fn requires_grad(&self) -> bool {
        self.0.requires_grad.get()
    }

    /// Freezes or unfreezes a leaf; has no effect on already-built graphs.
    pub fn set_requires_grad(&self, on: bool) {
        assert!(self.is_leaf(), "only leaves can be frozen");
        self.0.requires_grad.set(on);
    }

    pub fn grad(&self) -> Option<Vec<f64>> {
        self.0.grad.borrow().clone()
    }

    pub fn zero_grad(&self) {
        *self.0.grad.borrow_mut() = None;
    }

    pub fn ptr_eq(&self, other: &Tensor) -> bool {
        Rc::ptr_eq(&self.0, &other.0)
    }

    /// Reverse sweep from a scalar loss. Leaf gradients accumulate across calls.
    pub fn backward(&self) -> Result<()> {
        if self.numel() != 1 {
            return Err(AdError::NonScalarLoss(self.shape().to_vec()));
        }
        if !self.requires_grad() {
            return Ok(());
        }
        let mut order: Vec<Tensor> = Vec::new();
        let mut seen: HashMap<u64, ()> = HashMap::new();
        let mut stack = vec![self.clone()];
        while let Some(t) = stack.pop() {
            if seen.insert(t.0.id, ()).is_some() {
                continue;
            }
            for p in t.0.op.parents() {
                if p.requires_grad() && !seen.contains_key(&p.0.id) {
                    stack.push(p.clone());
                }
            }
            order.push(t);
        }
        // parents are always created before their children
        order.sort_by_key(|t| std::cmp::Reverse(t.0.id));

        let mut grads: HashMap<u64, Vec<f64>> = HashMap::new();
        grads.insert(self.0.id, vec![1.0]);
        for node in &order {
            let Some(g) = grads.remove(&node.0.id) else { continue };
            if node.is_leaf() {
                let mut slot = node.0.grad.borrow_mut();
                match slot.as_mut() {
                    Some(acc) => acc.iter_mut().zip(&g).for_each(|(a, b)| *a += b),
                    None => *slot = Some(g),
                }
            } else {
                let mut sink = GradSink { grads: &mut grads };
                node.0.op.backward(node, &g, &mut sink);
            }
        }
        Ok(())
    }
}

/// Collects gradient contributions for the parents of the node being processed.
pub(crate) struct GradSink<'a> {
    grads: &'a mut HashMap<u64, Vec<f64>>,
}

impl GradSink<'_> {
    pub(crate) fn wants(&self, t: &Tensor) -> bool {
        t.requires_grad()
    }

    /// Accumulation buffer of `t`, zero-filled on first use.
    pub(crate) fn slot(&mut self, t: &Tensor) -> Option<&mut Vec<f64>> {
        if !t.requires_grad() {
            return None;
        }
        Some(self.grads.entry(t.0.id).or_insert_with(|| vec![0.0; t.numel()]))
    }

    /// Adds an owned contribution, moving it in when it is the first one.
    pub(crate) fn add_owned(&mut self, t: &Tensor, v: Vec<f64>) {
        if !t.requires_grad() {
            return;
        }
        debug_assert_eq!(v.len(), t.numel());
        match self.grads.entry(t.0.id) {
            std::collections::hash_map::Entry::Occupied(mut e) => {
                e.get_mut().iter_mut().zip(&v).for_each(|(a, b)| *a += b);
            }
            std::collections::hash_map::Entry::Vacant(e) => {
                e.insert(v);
            }
        }
    }

    pub(crate) fn add_slice(&mut self, t: &Tensor, v: &[f64]) {
        if !t.requires_grad() {
            return;
        }
        match self.grads.entry(t.0.id) {
            std::collections::hash_map::Entry::Occupied(mut e) => {
                e.get_mut().iter_mut().zip(v).for_each(|(a, b)| *a += b);
            }
            std::collections::hash_map::Entry::Vacant(e) => {
                e.insert(v.to_vec());
            }
        }
    }
}
