//! Reverse-mode differentiation over matrix-valued nodes.
//!
//! A [`Tape`] records every operation of one forward pass. Nodes hold their
//! forward value; [`Tape::backward`] walks the record in reverse and adds the
//! gradient of a scalar loss into the owning [`ParamStore`]. Constants
//! (instance features, selection results) never receive gradients, and nodes
//! that only depend on constants are skipped during the reverse sweep.

use alloc::vec;
use alloc::vec::Vec;

use super::ops::{bce, bce_grad, relu, sigmoid, tanh};
use super::{affine, Matrix, ParamId, ParamStore};
use crate::{Error, Result};

/// Node handle on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug, Clone)]
enum Op {
    Constant,
    Param(ParamId),
    Affine { x: Var, w: Var, b: Var },
    MatMul { a: Var, b: Var },
    Relu(Var),
    Tanh(Var),
    Sigmoid(Var),
    Hadamard(Var, Var),
    /// Softmax over the entries of a column vector.
    Softmax(Var),
    /// `weightsᵀ · x` for a `K×1` weight column and `K×n` rows.
    WeightedRows { weights: Var, x: Var },
    GatherRows { src: Var, indices: Vec<usize> },
    ConcatRows(Vec<Var>),
    /// Mean binary cross-entropy of every entry against one label.
    BceMean { p: Var, label: f64 },
    /// Weighted sum of scalar nodes.
    LinComb(Vec<(Var, f64)>),
}

#[derive(Debug, Clone)]
struct Node {
    value: Matrix,
    op: Op,
    needs_grad: bool,
}

#[derive(Debug, Clone, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    /// The value of a 1x1 node.
    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value.as_slice()[0]
    }

    fn push(&mut self, value: Matrix, op: Op, needs_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    pub fn constant(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Constant, false)
    }

    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Var {
        self.push(store.value(id).clone(), Op::Param(id), true)
    }

    pub fn affine(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let value = affine(self.value(x), self.value(w), self.value(b))?;
        let needs = self.needs(x) || self.needs(w) || self.needs(b);
        Ok(self.push(value, Op::Affine { x, w, b }, needs))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).matmul(self.value(b))?;
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(value, Op::MatMul { a, b }, needs))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let value = self.value(a).map(relu);
        let needs = self.needs(a);
        self.push(value, Op::Relu(a), needs)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let value = self.value(a).map(tanh);
        let needs = self.needs(a);
        self.push(value, Op::Tanh(a), needs)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let value = self.value(a).map(sigmoid);
        let needs = self.needs(a);
        self.push(value, Op::Sigmoid(a), needs)
    }

    pub fn hadamard(&mut self, a: Var, b: Var) -> Result<Var> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.shape() != vb.shape() {
            return Err(Error::Dimension {
                op: "hadamard",
                left: va.shape(),
                right: vb.shape(),
            });
        }
        let data = va
            .as_slice()
            .iter()
            .zip(vb.as_slice())
            .map(|(x, y)| x * y)
            .collect();
        let value = Matrix::from_vec(va.rows(), va.cols(), data)?;
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(value, Op::Hadamard(a, b), needs))
    }

    pub fn softmax(&mut self, scores: Var) -> Result<Var> {
        let v = self.value(scores);
        if v.cols() != 1 {
            return Err(Error::Dimension {
                op: "softmax(column)",
                left: v.shape(),
                right: (v.rows(), 1),
            });
        }
        let value = Matrix::column(&super::softmax(v.as_slice())?);
        let needs = self.needs(scores);
        Ok(self.push(value, Op::Softmax(scores), needs))
    }

    pub fn weighted_rows(&mut self, weights: Var, x: Var) -> Result<Var> {
        let (w, xv) = (self.value(weights), self.value(x));
        if w.cols() != 1 || w.rows() != xv.rows() {
            return Err(Error::Dimension {
                op: "weighted_rows",
                left: w.shape(),
                right: xv.shape(),
            });
        }
        let value = w.t_matmul(xv)?;
        let needs = self.needs(weights) || self.needs(x);
        Ok(self.push(value, Op::WeightedRows { weights, x }, needs))
    }

    pub fn gather_rows(&mut self, src: Var, indices: &[usize]) -> Result<Var> {
        let s = self.value(src);
        if let Some(&bad) = indices.iter().find(|&&i| i >= s.rows()) {
            return Err(Error::Dimension {
                op: "gather_rows",
                left: s.shape(),
                right: (bad, 0),
            });
        }
        let value = s.gather_rows(indices);
        let needs = self.needs(src);
        Ok(self.push(
            value,
            Op::GatherRows {
                src,
                indices: indices.to_vec(),
            },
            needs,
        ))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let mats: Vec<&Matrix> = parts.iter().map(|&p| self.value(p)).collect();
        let value = Matrix::vstack(&mats)?;
        let needs = parts.iter().any(|&p| self.needs(p));
        Ok(self.push(value, Op::ConcatRows(parts.to_vec()), needs))
    }

    pub fn bce_mean(&mut self, p: Var, label: f64) -> Result<Var> {
        let pv = self.value(p);
        if pv.is_empty() {
            return Err(Error::EmptyInput("bce over zero probabilities"));
        }
        let total: f64 = pv.as_slice().iter().map(|&q| bce(q, label)).sum();
        let value = Matrix::scalar(total / pv.len() as f64);
        let needs = self.needs(p);
        Ok(self.push(value, Op::BceMean { p, label }, needs))
    }

    pub fn lin_comb(&mut self, terms: &[(Var, f64)]) -> Result<Var> {
        let mut total = 0.0;
        for &(v, c) in terms {
            total += c * self.value(v).item()?;
        }
        let needs = terms.iter().any(|&(v, _)| self.needs(v));
        Ok(self.push(Matrix::scalar(total), Op::LinComb(terms.to_vec()), needs))
    }

    /// Accumulates `d loss / d θ` into `store` for every parameter recorded on
    /// this tape.
    pub fn backward(&self, loss: Var, store: &mut ParamStore) -> Result<()> {
        if self.nodes.is_empty() || loss.0 >= self.nodes.len() {
            return Err(Error::State("backward called before a forward pass"));
        }
        if self.value(loss).shape() != (1, 1) {
            return Err(Error::State("backward needs a scalar loss node"));
        }
        let mut grads: Vec<Option<Matrix>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(Matrix::scalar(1.0));

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.needs_grad {
                continue;
            }
            let Some(g) = grads[idx].take() else { continue };
            match &node.op {
                Op::Constant => {}
                Op::Param(id) => store.accumulate_grad(*id, &g)?,
                Op::Affine { x, w, b } => {
                    if self.needs(*x) {
                        let dx = g.matmul_t(self.value(*w))?;
                        add_grad(&mut grads, *x, dx)?;
                    }
                    if self.needs(*w) {
                        let dw = self.value(*x).t_matmul(&g)?;
                        add_grad(&mut grads, *w, dw)?;
                    }
                    if self.needs(*b) {
                        let mut db = Matrix::zeros(1, g.cols());
                        for r in 0..g.rows() {
                            for (d, v) in db.as_mut_slice().iter_mut().zip(g.row(r)) {
                                *d += v;
                            }
                        }
                        add_grad(&mut grads, *b, db)?;
                    }
                }
                Op::MatMul { a, b } => {
                    if self.needs(*a) {
                        let da = g.matmul_t(self.value(*b))?;
                        add_grad(&mut grads, *a, da)?;
                    }
                    if self.needs(*b) {
                        let db = self.value(*a).t_matmul(&g)?;
                        add_grad(&mut grads, *b, db)?;
                    }
                }
                Op::Relu(a) => {
                    let input = self.value(*a);
                    let d = zip_map(&g, input, |g, x| if x > 0.0 { g } else { 0.0 });
                    add_grad(&mut grads, *a, d)?;
                }
                Op::Tanh(a) => {
                    let d = zip_map(&g, &node.value, |g, t| g * (1.0 - t * t));
                    add_grad(&mut grads, *a, d)?;
                }
                Op::Sigmoid(a) => {
                    let d = zip_map(&g, &node.value, |g, s| g * s * (1.0 - s));
                    add_grad(&mut grads, *a, d)?;
                }
                Op::Hadamard(a, b) => {
                    if self.needs(*a) {
                        let d = zip_map(&g, self.value(*b), |g, y| g * y);
                        add_grad(&mut grads, *a, d)?;
                    }
                    if self.needs(*b) {
                        let d = zip_map(&g, self.value(*a), |g, x| g * x);
                        add_grad(&mut grads, *b, d)?;
                    }
                }
                Op::Softmax(a) => {
                    // ds_i = a_i (g_i - Σ_j g_j a_j)
                    let s = node.value.as_slice();
                    let dot: f64 = s.iter().zip(g.as_slice()).map(|(s, g)| s * g).sum();
                    let d = zip_map(&g, &node.value, |g, s| s * (g - dot));
                    add_grad(&mut grads, *a, d)?;
                }
                Op::WeightedRows { weights, x } => {
                    // out = wᵀ X; d w = X gᵀ, d X = w g
                    if self.needs(*weights) {
                        let dw = self.value(*x).matmul_t(&g)?;
                        add_grad(&mut grads, *weights, dw)?;
                    }
                    if self.needs(*x) {
                        let dx = self.value(*weights).matmul(&g)?;
                        add_grad(&mut grads, *x, dx)?;
                    }
                }
                Op::GatherRows { src, indices } => {
                    let sv = self.value(*src);
                    let mut d = Matrix::zeros(sv.rows(), sv.cols());
                    for (r, &i) in indices.iter().enumerate() {
                        for (dst, v) in d.row_mut(i).iter_mut().zip(g.row(r)) {
                            *dst += v;
                        }
                    }
                    add_grad(&mut grads, *src, d)?;
                }
                Op::ConcatRows(parts) => {
                    let mut offset = 0;
                    for &p in parts {
                        let rows = self.value(p).rows();
                        if self.needs(p) {
                            let idx: Vec<usize> = (offset..offset + rows).collect();
                            add_grad(&mut grads, p, g.gather_rows(&idx))?;
                        }
                        offset += rows;
                    }
                }
                Op::BceMean { p, label } => {
                    let pv = self.value(*p);
                    let scale = g.item()? / pv.len() as f64;
                    let d = pv.map(|q| scale * bce_grad(q, *label));
                    add_grad(&mut grads, *p, d)?;
                }
                Op::LinComb(terms) => {
                    let gs = g.item()?;
                    for &(v, c) in terms {
                        if self.needs(v) {
                            add_grad(&mut grads, v, Matrix::scalar(gs * c))?;
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

fn zip_map(g: &Matrix, other: &Matrix, f: impl Fn(f64, f64) -> f64) -> Matrix {
    let data = g
        .as_slice()
        .iter()
        .zip(other.as_slice())
        .map(|(&a, &b)| f(a, b))
        .collect();
    // shapes are equal by construction of the recorded op
    Matrix::from_vec(g.rows(), g.cols(), data).expect("gradient shape")
}

fn add_grad(grads: &mut [Option<Matrix>], v: Var, g: Matrix) -> Result<()> {
    match &mut grads[v.0] {
        Some(acc) => acc.add_scaled(&g, 1.0),
        slot @ None => {
            *slot = Some(g);
            Ok(())
        }
    }
}
