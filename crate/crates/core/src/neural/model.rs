use rayon::prelude::*;

use super::input::{InputFrame, Standardizer};
use super::layers::{lrelu, lrelu_grad, maxpool_halve, BatchNorm, Conv1d, Dense, NormCache};
use super::loss;
use super::tensor::Batch;
use super::Architecture;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
struct ConvBlock {
    conv: Conv1d,
    bn: BatchNorm,
}

#[derive(Debug, Clone, PartialEq)]
struct DenseBlock {
    dense: Dense,
    bn: BatchNorm,
}

#[derive(Debug, Clone, PartialEq)]
struct Chain {
    hidden: Vec<DenseBlock>,
    head: Dense,
}

/// The receiver network plus its frozen input standardizer.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverModel {
    arch: Architecture,
    conv3: Vec<ConvBlock>,
    conv1: Vec<ConvBlock>,
    chains: Vec<Chain>,
    standardizer: Option<Standardizer>,
}

struct ConvCache {
    input: Batch,
    norm: NormCache,
    /// Batch-norm output, the argument of the activation.
    pre_act: Batch,
}

struct DenseCache {
    input: Batch,
    /// Dense output, the argument of the activation.
    pre_act: Batch,
    norm: NormCache,
}

struct PoolCache {
    len: usize,
    channels: usize,
    arg: Vec<Vec<usize>>,
}

struct ChainCache {
    hidden: Vec<DenseCache>,
    head_input: Batch,
}

/// Activations recorded by a forward pass for use by [`ReceiverModel::backward`].
pub struct Tape {
    conv3: Vec<ConvCache>,
    pool1: PoolCache,
    conv1: Vec<ConvCache>,
    pool2: PoolCache,
    chains: Vec<ChainCache>,
    examples: usize,
}

/// Parameter gradients in [`ReceiverModel::params`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub Vec<Vec<f64>>);

fn map(x: &Batch, f: impl Fn(f64) -> f64 + Sync) -> Batch {
    Batch {
        data: x.data.par_iter().map(|&v| f(v)).collect(),
        ..x.clone_shape()
    }
}

fn scale_by_lrelu_grad(grad: &Batch, pre_act: &Batch) -> Batch {
    Batch {
        data: grad
            .data
            .par_iter()
            .zip(&pre_act.data)
            .map(|(&g, &a)| g * lrelu_grad(a))
            .collect(),
        ..grad.clone_shape()
    }
}

fn pool(x: &Batch) -> Result<(Batch, PoolCache)> {
    let per = x.features();
    let results: Vec<(Vec<f64>, Vec<usize>)> = x
        .data
        .par_chunks(per)
        .map(|ex| maxpool_halve(ex, x.length, x.channels))
        .collect::<Result<_>>()?;
    let mut data = Vec::with_capacity(x.data.len() / 2);
    let mut arg = Vec::with_capacity(x.examples);
    for (d, a) in results {
        data.extend(d);
        arg.push(a);
    }
    Ok((
        Batch::from_vec(x.examples, x.length / 2, x.channels, data),
        PoolCache {
            len: x.length,
            channels: x.channels,
            arg,
        },
    ))
}

fn unpool(grad: &Batch, cache: &PoolCache) -> Batch {
    let mut out = Batch::zeros(grad.examples, cache.len, cache.channels);
    let per = cache.len * cache.channels;
    out.data
        .par_chunks_mut(per)
        .zip(grad.data.par_chunks(grad.features()))
        .zip(&cache.arg)
        .for_each(|((o, g), arg)| {
            for (&src, &gv) in arg.iter().zip(g) {
                o[src] += gv;
            }
        });
    out
}

fn add_into(acc: &mut Batch, x: &Batch) {
    acc.data.iter_mut().zip(&x.data).for_each(|(a, b)| *a += b);
}

impl ReceiverModel {
    /// Glorot-initialized model; the same seed gives the same weights.
    pub fn new(arch: Architecture, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut rng = rng::root(seed);
        let mut depth = arch.input_channels();
        let mut conv3 = Vec::new();
        for _ in 0..arch.conv3_layers {
            conv3.push(ConvBlock {
                conv: Conv1d::new(depth, arch.conv3_filters, arch.kernel, &mut rng),
                bn: BatchNorm::new(arch.conv3_filters),
            });
            depth = arch.conv3_filters;
        }
        let mut conv1 = Vec::new();
        for _ in 0..arch.conv1_layers {
            conv1.push(ConvBlock {
                conv: Conv1d::new(depth, arch.conv1_filters, 1, &mut rng),
                bn: BatchNorm::new(arch.conv1_filters),
            });
            depth = arch.conv1_filters;
        }
        let chains = (0..arch.users)
            .map(|_| {
                let mut inputs = arch.feature_len();
                let mut hidden = Vec::new();
                for _ in 0..arch.dense_layers {
                    hidden.push(DenseBlock {
                        dense: Dense::new(inputs, arch.dense_units, &mut rng),
                        bn: BatchNorm::new(arch.dense_units),
                    });
                    inputs = arch.dense_units;
                }
                Chain {
                    hidden,
                    head: Dense::new(inputs, arch.bits, &mut rng),
                }
            })
            .collect();
        Ok(ReceiverModel {
            arch,
            conv3,
            conv1,
            chains,
            standardizer: None,
        })
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn standardizer(&self) -> Option<&Standardizer> {
        self.standardizer.as_ref()
    }

    pub fn set_standardizer(&mut self, s: Standardizer) -> Result<()> {
        if s.channels() != self.arch.input_channels() {
            return Err(Error::Shape(format!(
                "standardizer has {} channels, model expects {}",
                s.channels(),
                self.arch.input_channels()
            )));
        }
        self.standardizer = Some(s);
        Ok(())
    }

    /// Names of the trainable tensors, in [`ReceiverModel::params`] order.
    pub fn param_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        let block = |names: &mut Vec<String>, prefix: String| {
            for t in ["weight", "bias", "bn.gamma", "bn.beta"] {
                names.push(format!("{prefix}.{t}"));
            }
        };
        (0..self.conv3.len()).for_each(|i| block(&mut names, format!("conv3.{i}")));
        (0..self.conv1.len()).for_each(|i| block(&mut names, format!("conv1.{i}")));
        for (u, chain) in self.chains.iter().enumerate() {
            (0..chain.hidden.len()).for_each(|d| block(&mut names, format!("chain.{u}.dense.{d}")));
            names.push(format!("chain.{u}.head.weight"));
            names.push(format!("chain.{u}.head.bias"));
        }
        names
    }

    pub fn params(&self) -> Vec<&Vec<f64>> {
        let mut out = Vec::new();
        for b in self.conv3.iter().chain(&self.conv1) {
            out.extend([&b.conv.weight, &b.conv.bias, &b.bn.gamma, &b.bn.beta]);
        }
        for chain in &self.chains {
            for b in &chain.hidden {
                out.extend([&b.dense.weight, &b.dense.bias, &b.bn.gamma, &b.bn.beta]);
            }
            out.extend([&chain.head.weight, &chain.head.bias]);
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut out = Vec::new();
        for b in self.conv3.iter_mut().chain(self.conv1.iter_mut()) {
            out.extend([&mut b.conv.weight, &mut b.conv.bias, &mut b.bn.gamma, &mut b.bn.beta]);
        }
        for chain in &mut self.chains {
            for b in &mut chain.hidden {
                out.extend([&mut b.dense.weight, &mut b.dense.bias, &mut b.bn.gamma, &mut b.bn.beta]);
            }
            out.extend([&mut chain.head.weight, &mut chain.head.bias]);
        }
        out
    }

    /// Names of the batch-norm layers, in [`ReceiverModel::norms`] order.
    pub fn norm_names(&self) -> Vec<String> {
        let mut names: Vec<String> = (0..self.conv3.len()).map(|i| format!("conv3.{i}.bn")).collect();
        names.extend((0..self.conv1.len()).map(|i| format!("conv1.{i}.bn")));
        for (u, chain) in self.chains.iter().enumerate() {
            names.extend((0..chain.hidden.len()).map(|d| format!("chain.{u}.dense.{d}.bn")));
        }
        names
    }

    pub fn norms(&self) -> Vec<&BatchNorm> {
        let mut out: Vec<&BatchNorm> = self.conv3.iter().chain(&self.conv1).map(|b| &b.bn).collect();
        for chain in &self.chains {
            out.extend(chain.hidden.iter().map(|b| &b.bn));
        }
        out
    }

    pub fn norms_mut(&mut self) -> Vec<&mut BatchNorm> {
        let mut out: Vec<&mut BatchNorm> = self
            .conv3
            .iter_mut()
            .chain(self.conv1.iter_mut())
            .map(|b| &mut b.bn)
            .collect();
        for chain in &mut self.chains {
            out.extend(chain.hidden.iter_mut().map(|b| &mut b.bn));
        }
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    fn conv_block(block: &ConvBlock, x: Batch, training: bool) -> Result<(Batch, ConvCache)> {
        let z = block.conv.forward(&x);
        let (pre_act, norm) = block.bn.forward(&z, training)?;
        let out = map(&pre_act, lrelu);
        Ok((
            out,
            ConvCache {
                input: x,
                norm,
                pre_act,
            },
        ))
    }

    fn dense_block(block: &DenseBlock, x: Batch, training: bool) -> Result<(Batch, DenseCache)> {
        let pre_act = block.dense.forward(&x);
        let (out, norm) = block.bn.forward(&map(&pre_act, lrelu), training)?;
        Ok((
            out,
            DenseCache {
                input: x,
                pre_act,
                norm,
            },
        ))
    }

    /// Forward pass on a standardized `(N, K, 2(J+1))` batch. Returns the
    /// `(N, 1, m J)` logits and the tape for backpropagation. In training
    /// mode batch norm uses minibatch statistics; otherwise the running
    /// estimates.
    pub fn forward(&self, x: &Batch, training: bool) -> Result<(Batch, Tape)> {
        if x.length != self.arch.resources || x.channels != self.arch.input_channels() {
            return Err(Error::Shape(format!(
                "model expects ({}, {}) frames, got ({}, {})",
                self.arch.resources,
                self.arch.input_channels(),
                x.length,
                x.channels
            )));
        }
        let mut h = x.clone();
        let mut conv3 = Vec::with_capacity(self.conv3.len());
        for b in &self.conv3 {
            let (out, cache) = Self::conv_block(b, h, training)?;
            conv3.push(cache);
            h = out;
        }
        let (mut h, pool1) = pool(&h)?;
        let mut conv1 = Vec::with_capacity(self.conv1.len());
        for b in &self.conv1 {
            let (out, cache) = Self::conv_block(b, h, training)?;
            conv1.push(cache);
            h = out;
        }
        let (h, pool2) = pool(&h)?;
        let features = h.flatten();

        let chain_out: Vec<(Batch, ChainCache)> = self
            .chains
            .par_iter()
            .map(|chain| {
                let mut h = features.clone();
                let mut hidden = Vec::with_capacity(chain.hidden.len());
                for b in &chain.hidden {
                    let (out, cache) = Self::dense_block(b, h, training)?;
                    hidden.push(cache);
                    h = out;
                }
                let logits = chain.head.forward(&h);
                Ok((logits, ChainCache { hidden, head_input: h }))
            })
            .collect::<Result<_>>()?;

        let n = x.examples;
        let (m, outputs) = (self.arch.bits, self.arch.outputs());
        let mut logits = Batch::zeros(n, 1, outputs);
        let mut chains = Vec::with_capacity(chain_out.len());
        for (u, (l, cache)) in chain_out.into_iter().enumerate() {
            for e in 0..n {
                logits.data[e * outputs + u * m..e * outputs + (u + 1) * m].copy_from_slice(l.example(e));
            }
            chains.push(cache);
        }
        Ok((
            logits,
            Tape {
                conv3,
                pool1,
                conv1,
                pool2,
                chains,
                examples: n,
            },
        ))
    }

    /// Gradients of a scalar objective given its gradient w.r.t. the logits.
    pub fn backward(&self, tape: &Tape, grad_logits: &Batch) -> Gradients {
        let (m, outputs) = (self.arch.bits, self.arch.outputs());
        let n = tape.examples;
        let per_block = 4;
        let trunk_params = per_block * (self.conv3.len() + self.conv1.len());
        let per_chain = per_block * self.arch.dense_layers + 2;
        let mut grads: Vec<Vec<f64>> = vec![Vec::new(); trunk_params + per_chain * self.chains.len()];

        let chain_grads: Vec<(Vec<Vec<f64>>, Batch)> = self
            .chains
            .par_iter()
            .zip(&tape.chains)
            .enumerate()
            .map(|(u, (chain, cache))| {
                let mut g = Batch::zeros(n, 1, m);
                for e in 0..n {
                    g.data[e * m..(e + 1) * m]
                        .copy_from_slice(&grad_logits.data[e * outputs + u * m..e * outputs + (u + 1) * m]);
                }
                let mut out = vec![Vec::new(); per_chain];
                let (mut g, head) = chain.head.backward(&cache.head_input, &g);
                let [hw, hb]: [Vec<f64>; 2] = head.try_into().expect("dense has two tensors");
                out[per_chain - 2] = hw;
                out[per_chain - 1] = hb;
                for (d, (b, c)) in chain.hidden.iter().zip(&cache.hidden).enumerate().rev() {
                    let (ga, bn) = b.bn.backward(&c.norm, &g);
                    let gz = scale_by_lrelu_grad(&ga, &c.pre_act);
                    let (gx, dense) = b.dense.backward(&c.input, &gz);
                    let [w, bias] = <[Vec<f64>; 2]>::try_from(dense).expect("dense tensors");
                    let [gamma, beta] = <[Vec<f64>; 2]>::try_from(bn).expect("bn tensors");
                    out[per_block * d] = w;
                    out[per_block * d + 1] = bias;
                    out[per_block * d + 2] = gamma;
                    out[per_block * d + 3] = beta;
                    g = gx;
                }
                (out, g)
            })
            .collect();

        let features = self.arch.feature_len();
        let mut g = Batch::zeros(n, 1, features);
        for (u, (cg, gf)) in chain_grads.into_iter().enumerate() {
            add_into(&mut g, &gf);
            for (i, t) in cg.into_iter().enumerate() {
                grads[trunk_params + u * per_chain + i] = t;
            }
        }

        let mut g = Batch {
            length: tape.pool2.len / 2,
            channels: tape.pool2.channels,
            ..g
        };
        g = unpool(&g, &tape.pool2);
        let base1 = per_block * self.conv3.len();
        for (i, (b, c)) in self.conv1.iter().zip(&tape.conv1).enumerate().rev() {
            g = Self::conv_block_backward(b, c, &g, &mut grads[base1 + per_block * i..base1 + per_block * (i + 1)]);
        }
        g = unpool(&g, &tape.pool1);
        for (i, (b, c)) in self.conv3.iter().zip(&tape.conv3).enumerate().rev() {
            g = Self::conv_block_backward(b, c, &g, &mut grads[per_block * i..per_block * (i + 1)]);
        }
        Gradients(grads)
    }

    fn conv_block_backward(block: &ConvBlock, cache: &ConvCache, grad: &Batch, out: &mut [Vec<f64>]) -> Batch {
        let ga = scale_by_lrelu_grad(grad, &cache.pre_act);
        let (gz, bn) = block.bn.backward(&cache.norm, &ga);
        let (gx, conv) = block.conv.backward(&cache.input, &gz);
        let [w, b] = <[Vec<f64>; 2]>::try_from(conv).expect("conv tensors");
        let [gamma, beta] = <[Vec<f64>; 2]>::try_from(bn).expect("bn tensors");
        out[0] = w;
        out[1] = b;
        out[2] = gamma;
        out[3] = beta;
        gx
    }

    /// Folds the minibatch statistics recorded on `tape` into every batch
    /// norm's running estimates.
    pub fn update_running_stats(&mut self, tape: &Tape) {
        let mut caches: Vec<&NormCache> = tape.conv3.iter().chain(&tape.conv1).map(|c| &c.norm).collect();
        for chain in &tape.chains {
            caches.extend(chain.hidden.iter().map(|c| &c.norm));
        }
        for (bn, cache) in self.norms_mut().into_iter().zip(caches) {
            bn.update_running(cache);
        }
    }

    /// Training-mode loss and gradients for a standardized batch and
    /// `N x mJ` labels.
    pub fn loss_and_gradients(&self, x: &Batch, labels: &[u8]) -> Result<(f64, Gradients, Tape)> {
        let (logits, tape) = self.forward(x, true)?;
        if labels.len() != logits.data.len() {
            return Err(Error::LengthMismatch {
                expected: logits.data.len(),
                actual: labels.len(),
            });
        }
        let value = loss::lbce(&logits.data, labels);
        let grad = Batch {
            data: loss::lbce_grad(&logits.data, labels),
            ..logits.clone_shape()
        };
        Ok((value, self.backward(&tape, &grad), tape))
    }

    /// Inference-mode logits (= LLRs) for raw frames, one `mJ` vector each.
    pub fn predict(&self, frames: &[InputFrame]) -> Result<Vec<Vec<f64>>> {
        if frames.is_empty() {
            return Ok(Vec::new());
        }
        let s = self.standardizer.as_ref().ok_or(Error::Uncalibrated)?;
        let (logits, _) = self.forward(&s.batch(frames)?, false)?;
        Ok(logits.data.chunks(self.arch.outputs()).map(<[f64]>::to_vec).collect())
    }
}
