//! The distillation network and its global loss.
//!
//! One forward pass over a bag `X` (K×n):
//!
//! 1. instance channel: `ŷ = σ(mlp1(X))`, top-k rows by `ŷ` (or the top and
//!    bottom k/2 in max-pn mode), `loss1` = mean BCE of the positive half;
//! 2. attention channel: `α = softmax(mlp2(X))`, `X_wsi = Σ αᵢ xᵢ`,
//!    `Ŷ = σ(mlp3(X_wsi))`, `loss2 = BCE(Ŷ)`, top-k rows by `α`;
//! 3. fusion of the 2k selected rows (instance channel first), final
//!    classifier `mlp4`, `loss3 = BCE(Ŷ_final)`;
//! 4. `loss = (loss1 + loss2)·exp(-|loss3|) + loss3`, the factor held constant
//!    for the backward pass.
//!
//! Selected indices are constants of the step, so gradients reach mlp1 and
//! mlp2 only through their own losses.

use alloc::vec::Vec;

use super::distill::{select_instances, top_k};
use super::{FusionBackend, ForwardOptions, ModelDims};
use crate::data::Bag;
use crate::numerics::{grad_check, GradCheckReport, Matrix, ParamId, ParamStore, Rng, Tape, Var};
use crate::{Error, Result};

use rand::Rng as _;

/// `(loss1 + loss2)·exp(-|loss3|) + loss3`.
pub fn global_loss(loss1: f64, loss2: f64, loss3: f64) -> f64 {
    (loss1 + loss2) * libm::exp(-libm::fabs(loss3)) + loss3
}

/// Everything one forward pass computed for one bag.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardTrace {
    /// `ŷᵢ` per instance; empty when feature distillation is off.
    pub instance_probs: Vec<f64>,
    /// `αᵢ` per instance; empty when the attention channel is off.
    pub attention_weights: Vec<f64>,
    /// Instance-channel rows: positive half, then negative half.
    pub channel1_indices: Vec<usize>,
    /// Length of the positive half within `channel1_indices`.
    pub channel1_positive: usize,
    pub channel2_indices: Vec<usize>,
    /// Pooling weights over the fusion input rows.
    pub fusion_weights: Vec<f64>,
    /// Attention-branch bag probability (training signal only).
    pub attention_branch_prob: Option<f64>,
    pub final_prob: f64,
    pub loss1: f64,
    pub loss2: f64,
    pub loss3: f64,
    pub total_loss: f64,
}

impl ForwardTrace {
    /// Bag prediction at the 0.5 decision threshold.
    pub fn prediction(&self) -> u8 {
        u8::from(self.final_prob >= 0.5)
    }

    pub fn channel1_positive_indices(&self) -> &[usize] {
        &self.channel1_indices[..self.channel1_positive]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Mlp2Ids {
    w1: ParamId,
    b1: ParamId,
    w2: ParamId,
    b2: ParamId,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct GateIds {
    v: ParamId,
    v_b: ParamId,
    u: ParamId,
    u_b: ParamId,
    w: ParamId,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Ids {
    ins: Mlp2Ids,
    att_w1: ParamId,
    att_b1: ParamId,
    att_w2: ParamId,
    branch_w: ParamId,
    branch_b: ParamId,
    gate: Option<GateIds>,
    head: Mlp2Ids,
}

/// Architecture and parameter handles, separate from the values so the
/// parameter store can be borrowed mutably while the network is read.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Network {
    dims: ModelDims,
    ids: Ids,
}

/// All trainable parameters of the distillation model.
#[derive(Clone, Debug, PartialEq)]
pub struct AfdModel {
    pub net: Network,
    pub params: ParamStore,
}

/// Tensor names and shapes for the given widths, in store order.
pub fn param_layout(dims: &ModelDims) -> Vec<(&'static str, (usize, usize))> {
    let ModelDims { n, h1, h2, d, .. } = *dims;
    let mut out = alloc::vec![
        ("mlp1.w1", (n, h1)),
        ("mlp1.b1", (1, h1)),
        ("mlp1.w2", (h1, 1)),
        ("mlp1.b2", (1, 1)),
        ("mlp2.w1", (n, h2)),
        ("mlp2.b1", (1, h2)),
        ("mlp2.w2", (h2, 1)),
        ("mlp3.w", (n, 1)),
        ("mlp3.b", (1, 1)),
    ];
    if dims.fusion == FusionBackend::Gated {
        out.extend([
            ("fusion.v", (n, d)),
            ("fusion.v_b", (1, d)),
            ("fusion.u", (n, d)),
            ("fusion.u_b", (1, d)),
            ("fusion.w", (d, 1)),
        ]);
    }
    out.extend([
        ("mlp4.w1", (n, h1)),
        ("mlp4.b1", (1, h1)),
        ("mlp4.w2", (h1, 1)),
        ("mlp4.b2", (1, 1)),
    ]);
    out
}

impl AfdModel {
    /// Glorot-uniform weights and zero biases.
    pub fn new(dims: ModelDims, rng: &mut Rng) -> Result<Self> {
        dims.validate()?;
        let mut params = ParamStore::new();
        for (name, (r, c)) in param_layout(&dims) {
            let value = if r == 1 && name.contains(".b") {
                Matrix::zeros(r, c)
            } else {
                let limit = libm::sqrt(6.0 / (r + c) as f64);
                let data = (0..r * c)
                    .map(|_| rng.random_range(-limit..limit))
                    .collect();
                Matrix::from_vec(r, c, data)?
            };
            params.add(name, value)?;
        }
        let model = Self::from_params(dims, params)?;
        log::info!(
            "afd model n={} h1={} h2={} d={} fusion={}: {} parameters",
            dims.n,
            dims.h1,
            dims.h2,
            dims.d,
            dims.fusion.as_str(),
            model.params.scalar_count()
        );
        Ok(model)
    }

    /// Wraps an existing store after checking names and shapes.
    pub fn from_params(dims: ModelDims, params: ParamStore) -> Result<Self> {
        dims.validate()?;
        let layout = param_layout(&dims);
        if layout.len() != params.len() {
            return Err(Error::Config(alloc::format!(
                "expected {} parameter tensors, found {}",
                layout.len(),
                params.len()
            )));
        }
        for (name, shape) in &layout {
            let id = params.id(name)?;
            if params.value(id).shape() != *shape {
                return Err(Error::Dimension {
                    op: name,
                    left: *shape,
                    right: params.value(id).shape(),
                });
            }
        }
        let id = |name: &str| params.id(name);
        let gate = match dims.fusion {
            FusionBackend::Gated => Some(GateIds {
                v: id("fusion.v")?,
                v_b: id("fusion.v_b")?,
                u: id("fusion.u")?,
                u_b: id("fusion.u_b")?,
                w: id("fusion.w")?,
            }),
            FusionBackend::Mean => None,
        };
        let ids = Ids {
            ins: Mlp2Ids {
                w1: id("mlp1.w1")?,
                b1: id("mlp1.b1")?,
                w2: id("mlp1.w2")?,
                b2: id("mlp1.b2")?,
            },
            att_w1: id("mlp2.w1")?,
            att_b1: id("mlp2.b1")?,
            att_w2: id("mlp2.w2")?,
            branch_w: id("mlp3.w")?,
            branch_b: id("mlp3.b")?,
            gate,
            head: Mlp2Ids {
                w1: id("mlp4.w1")?,
                b1: id("mlp4.b1")?,
                w2: id("mlp4.w2")?,
                b2: id("mlp4.b2")?,
            },
        };
        Ok(Self {
            net: Network { dims, ids },
            params,
        })
    }

    pub fn dims(&self) -> &ModelDims {
        &self.net.dims
    }

    /// Inference-style forward pass (nothing is written to the parameters).
    pub fn forward_bag(&self, bag: &Bag, opts: &ForwardOptions) -> Result<ForwardTrace> {
        let mut tape = Tape::new();
        let (trace, _) = self.net.record(&self.params, bag, opts, &mut tape)?;
        Ok(trace)
    }

    /// Forward pass plus backward: gradients are added into `self.params`.
    pub fn forward_backward(&mut self, bag: &Bag, opts: &ForwardOptions) -> Result<ForwardTrace> {
        let mut tape = Tape::new();
        let (trace, loss) = self.net.record(&self.params, bag, opts, &mut tape)?;
        tape.backward(loss, &mut self.params)?;
        Ok(trace)
    }

    pub fn instance_forward(&self, features: &Matrix) -> Result<Vec<f64>> {
        let mut tape = Tape::new();
        let x = self.net.input(&mut tape, features)?;
        let p = self.net.instance_probs(&self.params, &mut tape, x)?;
        Ok(tape.value(p).as_slice().to_vec())
    }

    /// Attention weights, pooled bag feature, branch probability and branch
    /// loss for one bag.
    pub fn attention_forward(&self, bag: &Bag) -> Result<AttentionOutput> {
        let mut tape = Tape::new();
        let x = self.net.input(&mut tape, &bag.features)?;
        let out = self.net.attention(&self.params, &mut tape, x, bag.target())?;
        Ok(AttentionOutput {
            weights: tape.value(out.alpha).as_slice().to_vec(),
            pooled: tape.value(out.pooled).as_slice().to_vec(),
            prob: tape.scalar(out.prob),
            loss: tape.scalar(out.loss),
        })
    }

    /// Compares backpropagated gradients of the total loss on `bag` with
    /// central differences. The global-loss weight is pinned to its value at
    /// the current parameters, matching the detached factor of the backward
    /// pass.
    pub fn grad_check(&mut self, bag: &Bag, opts: &ForwardOptions, eps: f64) -> Result<GradCheckReport> {
        let t = self.forward_bag(bag, opts)?;
        let opts = ForwardOptions {
            fixed_global_weight: Some(libm::exp(-libm::fabs(t.loss3))),
            ..*opts
        };
        let Self { net, params } = self;
        params.zero_grad();
        let report = grad_check(
            params,
            |p| net.surrogate_loss(p, bag, &opts),
            |p| {
                let mut tape = Tape::new();
                let (_, loss) = net.record(p, bag, &opts, &mut tape)?;
                tape.backward(loss, p)
            },
            eps,
        );
        params.zero_grad();
        report
    }

    /// Fusion and final classifier over already distilled rows. Returns the
    /// final probability and the fused bag feature.
    pub fn fuse_and_classify(&self, features: &Matrix) -> Result<(f64, Vec<f64>)> {
        if features.rows() == 0 {
            return Err(Error::EmptyInput("fusion over zero distilled features"));
        }
        let mut tape = Tape::new();
        let f = self.net.input(&mut tape, features)?;
        let (_, fused) = self.net.fuse(&self.params, &mut tape, f)?;
        let p = self.net.classify(&self.params, &mut tape, fused)?;
        Ok((tape.scalar(p), tape.value(fused).as_slice().to_vec()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttentionOutput {
    pub weights: Vec<f64>,
    pub pooled: Vec<f64>,
    pub prob: f64,
    pub loss: f64,
}

struct AttentionVars {
    alpha: Var,
    pooled: Var,
    prob: Var,
    loss: Var,
}

impl Network {
    pub fn dims(&self) -> &ModelDims {
        &self.dims
    }

    fn input(&self, tape: &mut Tape, features: &Matrix) -> Result<Var> {
        if features.rows() == 0 {
            return Err(Error::EmptyBag("bag has no instances"));
        }
        if features.cols() != self.dims.n {
            return Err(Error::Dimension {
                op: "bag features vs model n",
                left: features.shape(),
                right: (features.rows(), self.dims.n),
            });
        }
        Ok(tape.constant(features.clone()))
    }

    fn mlp(&self, p: &ParamStore, tape: &mut Tape, x: Var, ids: &Mlp2Ids) -> Result<Var> {
        let w1 = tape.param(p, ids.w1);
        let b1 = tape.param(p, ids.b1);
        let w2 = tape.param(p, ids.w2);
        let b2 = tape.param(p, ids.b2);
        let h = tape.affine(x, w1, b1)?;
        let h = tape.relu(h);
        let logit = tape.affine(h, w2, b2)?;
        Ok(tape.sigmoid(logit))
    }

    fn instance_probs(&self, p: &ParamStore, tape: &mut Tape, x: Var) -> Result<Var> {
        self.mlp(p, tape, x, &self.ids.ins)
    }

    fn attention(&self, p: &ParamStore, tape: &mut Tape, x: Var, y: f64) -> Result<AttentionVars> {
        let w1 = tape.param(p, self.ids.att_w1);
        let b1 = tape.param(p, self.ids.att_b1);
        let w2 = tape.param(p, self.ids.att_w2);
        let h = tape.affine(x, w1, b1)?;
        let h = tape.tanh(h);
        let scores = tape.matmul(h, w2)?;
        let alpha = tape.softmax(scores)?;
        let pooled = tape.weighted_rows(alpha, x)?;
        let bw = tape.param(p, self.ids.branch_w);
        let bb = tape.param(p, self.ids.branch_b);
        let logit = tape.affine(pooled, bw, bb)?;
        let prob = tape.sigmoid(logit);
        let loss = tape.bce_mean(prob, y)?;
        Ok(AttentionVars {
            alpha,
            pooled,
            prob,
            loss,
        })
    }

    /// Returns `(pooling weights, fused 1×n feature)`.
    fn fuse(&self, p: &ParamStore, tape: &mut Tape, f: Var) -> Result<(Var, Var)> {
        let weights = match &self.ids.gate {
            Some(g) => {
                let v = tape.param(p, g.v);
                let vb = tape.param(p, g.v_b);
                let u = tape.param(p, g.u);
                let ub = tape.param(p, g.u_b);
                let w = tape.param(p, g.w);
                let a = tape.affine(f, v, vb)?;
                let a = tape.tanh(a);
                let b = tape.affine(f, u, ub)?;
                let b = tape.sigmoid(b);
                let gated = tape.hadamard(a, b)?;
                let scores = tape.matmul(gated, w)?;
                tape.softmax(scores)?
            }
            None => {
                let m = tape.value(f).rows();
                tape.constant(Matrix::filled(m, 1, 1.0 / m as f64))
            }
        };
        let fused = tape.weighted_rows(weights, f)?;
        Ok((weights, fused))
    }

    fn classify(&self, p: &ParamStore, tape: &mut Tape, fused: Var) -> Result<Var> {
        self.mlp(p, tape, fused, &self.ids.head)
    }

    /// Records one full forward pass on `tape` and returns the trace with the
    /// scalar node to differentiate.
    pub fn record(
        &self,
        p: &ParamStore,
        bag: &Bag,
        opts: &ForwardOptions,
        tape: &mut Tape,
    ) -> Result<(ForwardTrace, Var)> {
        let features = &bag.features;
        let x = self.input(tape, features)?;
        let y = bag.target();

        let mut trace = ForwardTrace {
            instance_probs: Vec::new(),
            attention_weights: Vec::new(),
            channel1_indices: Vec::new(),
            channel1_positive: 0,
            channel2_indices: Vec::new(),
            fusion_weights: Vec::new(),
            attention_branch_prob: None,
            final_prob: 0.0,
            loss1: 0.0,
            loss2: 0.0,
            loss3: 0.0,
            total_loss: 0.0,
        };
        let mut distill_losses: Vec<Var> = Vec::new();

        let fusion_input = if opts.feature_distillation {
            let probs = self.instance_probs(p, tape, x)?;
            trace.instance_probs = tape.value(probs).as_slice().to_vec();
            let sel = select_instances(&trace.instance_probs, &opts.distill)?;
            let picked = tape.gather_rows(probs, &sel.positive)?;
            let loss1 = tape.bce_mean(picked, y)?;
            trace.loss1 = tape.scalar(loss1);
            distill_losses.push(loss1);
            trace.channel1_positive = sel.positive.len();
            trace.channel1_indices = sel.indices();

            if opts.attention_channel {
                let att = self.attention(p, tape, x, y)?;
                trace.attention_weights = tape.value(att.alpha).as_slice().to_vec();
                trace.attention_branch_prob = Some(tape.scalar(att.prob));
                trace.loss2 = tape.scalar(att.loss);
                distill_losses.push(att.loss);
                trace.channel2_indices = top_k(&trace.attention_weights, opts.distill.k());
            }

            let mut rows = trace.channel1_indices.clone();
            rows.extend_from_slice(&trace.channel2_indices);
            tape.constant(features.gather_rows(&rows))
        } else {
            x
        };

        let (weights, fused) = self.fuse(p, tape, fusion_input)?;
        trace.fusion_weights = tape.value(weights).as_slice().to_vec();
        let final_prob = self.classify(p, tape, fused)?;
        trace.final_prob = tape.scalar(final_prob);
        let loss3 = tape.bce_mean(final_prob, y)?;
        trace.loss3 = tape.scalar(loss3);

        let scale = if opts.global_loss {
            opts.fixed_global_weight
                .unwrap_or_else(|| libm::exp(-libm::fabs(trace.loss3)))
        } else {
            1.0
        };
        let mut terms: Vec<(Var, f64)> = distill_losses.iter().map(|&l| (l, scale)).collect();
        terms.push((loss3, 1.0));
        let total = tape.lin_comb(&terms)?;
        trace.total_loss = match (opts.global_loss, opts.fixed_global_weight) {
            (true, None) => global_loss(trace.loss1, trace.loss2, trace.loss3),
            (true, Some(c)) => (trace.loss1 + trace.loss2) * c + trace.loss3,
            (false, _) => trace.loss1 + trace.loss2 + trace.loss3,
        };
        Ok((trace, total))
    }

    /// Total loss with the global weight pinned, for finite differences.
    pub fn surrogate_loss(
        &self,
        p: &ParamStore,
        bag: &Bag,
        opts: &ForwardOptions,
    ) -> Result<f64> {
        let mut tape = Tape::new();
        let (_, total) = self.record(p, bag, opts, &mut tape)?;
        Ok(tape.scalar(total))
    }
}
