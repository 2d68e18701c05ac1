//! Layer kernels with hand-written backward passes.

use rand::Rng;
use rayon::prelude::*;

use super::tensor::{Batch, CHUNK};
use crate::error::{Error, Result};
use crate::rng::SimRng;

/// Negative-side slope of the leaky ReLU.
pub const LRELU_SLOPE: f64 = 0.3;

pub fn lrelu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        LRELU_SLOPE * x
    }
}

/// Derivative of [`lrelu`]; the slope at 0 is taken from the negative side.
pub fn lrelu_grad(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        LRELU_SLOPE
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// One example of a "same"-padded cross-correlation: `input` is `len x
/// depth`, `weight` is `filters x width x depth`, `out` is `len x filters`.
fn conv_example(
    input: &[f64],
    len: usize,
    depth: usize,
    weight: &[f64],
    filters: usize,
    width: usize,
    bias: impl Fn(usize, usize) -> f64,
    out: &mut [f64],
) {
    let pad = width / 2;
    for p in 0..len {
        for f in 0..filters {
            let mut acc = bias(p, f);
            for k in 0..width {
                let Some(src) = (p + k).checked_sub(pad).filter(|&s| s < len) else {
                    continue;
                };
                acc += dot(
                    &input[src * depth..(src + 1) * depth],
                    &weight[(f * width + k) * depth..(f * width + k + 1) * depth],
                );
            }
            out[p * filters + f] = acc;
        }
    }
}

/// Conv1D with zero "same" padding on a single `len x depth` input, bias
/// given per output position and filter (`len x filters`).
pub fn conv1d_same(
    input: &[f64],
    len: usize,
    depth: usize,
    weight: &[f64],
    filters: usize,
    width: usize,
    bias: &[f64],
) -> Result<Vec<f64>> {
    if width % 2 == 0 {
        return Err(Error::InvalidArgument(format!("kernel length {width} must be odd")));
    }
    if input.len() != len * depth || weight.len() != filters * width * depth || bias.len() != len * filters {
        return Err(Error::Shape("conv1d operand sizes disagree".into()));
    }
    let mut out = vec![0.0; len * filters];
    conv_example(input, len, depth, weight, filters, width, |p, f| bias[p * filters + f], &mut out);
    Ok(out)
}

/// Halves the length by taking the max of each pair of positions. Ties go
/// to the lower position. Returns the output and, per output element, the
/// input index that won.
pub fn maxpool_halve(input: &[f64], len: usize, channels: usize) -> Result<(Vec<f64>, Vec<usize>)> {
    if len % 2 != 0 {
        return Err(Error::Shape(format!("max pooling needs an even length, got {len}")));
    }
    let half = len / 2;
    let mut out = Vec::with_capacity(half * channels);
    let mut arg = Vec::with_capacity(half * channels);
    for p in 0..half {
        for c in 0..channels {
            let a = (2 * p) * channels + c;
            let b = (2 * p + 1) * channels + c;
            let win = if input[a] >= input[b] { a } else { b };
            out.push(input[win]);
            arg.push(win);
        }
    }
    Ok((out, arg))
}

fn glorot(rng: &mut SimRng, fan_in: usize, fan_out: usize, count: usize) -> Vec<f64> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    (0..count).map(|_| rng.random_range(-limit..limit)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Conv1d {
    pub depth: usize,
    pub filters: usize,
    pub width: usize,
    /// `filters x width x depth`
    pub weight: Vec<f64>,
    /// One bias per filter, shared by all positions.
    pub bias: Vec<f64>,
}

impl Conv1d {
    pub fn new(depth: usize, filters: usize, width: usize, rng: &mut SimRng) -> Self {
        Conv1d {
            depth,
            filters,
            width,
            weight: glorot(rng, width * depth, width * filters, filters * width * depth),
            bias: vec![0.0; filters],
        }
    }

    pub fn forward(&self, x: &Batch) -> Batch {
        let (len, depth, filters, width) = (x.length, self.depth, self.filters, self.width);
        let mut out = Batch::zeros(x.examples, len, filters);
        out.data
            .par_chunks_mut(len * filters)
            .zip(x.data.par_chunks(len * depth))
            .for_each(|(o, xi)| conv_example(xi, len, depth, &self.weight, filters, width, |_, f| self.bias[f], o));
        out
    }

    /// Returns the input gradient and `[weight, bias]` gradients.
    pub fn backward(&self, x: &Batch, grad: &Batch) -> (Batch, Vec<Vec<f64>>) {
        let (len, depth, filters, width) = (x.length, self.depth, self.filters, self.width);
        let pad = width / 2;
        let mut gx = Batch::zeros(x.examples, len, depth);
        gx.data
            .par_chunks_mut(len * depth)
            .zip(grad.data.par_chunks(len * filters))
            .for_each(|(gxi, gi)| {
                for p in 0..len {
                    for f in 0..filters {
                        let g = gi[p * filters + f];
                        if g == 0.0 {
                            continue;
                        }
                        for k in 0..width {
                            let Some(src) = (p + k).checked_sub(pad).filter(|&s| s < len) else {
                                continue;
                            };
                            let w = &self.weight[(f * width + k) * depth..(f * width + k + 1) * depth];
                            axpy(g, w, &mut gxi[src * depth..(src + 1) * depth]);
                        }
                    }
                }
            });
        let partials: Vec<(Vec<f64>, Vec<f64>)> = x
            .data
            .par_chunks(CHUNK * len * depth)
            .zip(grad.data.par_chunks(CHUNK * len * filters))
            .map(|(xc, gc)| {
                let mut gw = vec![0.0; self.weight.len()];
                let mut gb = vec![0.0; filters];
                for (xi, gi) in xc.chunks(len * depth).zip(gc.chunks(len * filters)) {
                    for p in 0..len {
                        for f in 0..filters {
                            let g = gi[p * filters + f];
                            gb[f] += g;
                            if g == 0.0 {
                                continue;
                            }
                            for k in 0..width {
                                let Some(src) = (p + k).checked_sub(pad).filter(|&s| s < len) else {
                                    continue;
                                };
                                let off = (f * width + k) * depth;
                                axpy(g, &xi[src * depth..(src + 1) * depth], &mut gw[off..off + depth]);
                            }
                        }
                    }
                }
                (gw, gb)
            })
            .collect();
        let (gw, gb) = sum_partials(partials, self.weight.len(), filters);
        (gx, vec![gw, gb])
    }

    pub fn macs(&self, len: usize) -> u64 {
        (len * self.depth * self.width * self.filters) as u64
    }
}

fn sum_partials(partials: Vec<(Vec<f64>, Vec<f64>)>, wlen: usize, blen: usize) -> (Vec<f64>, Vec<f64>) {
    let mut gw = vec![0.0; wlen];
    let mut gb = vec![0.0; blen];
    for (w, b) in partials {
        axpy(1.0, &w, &mut gw);
        axpy(1.0, &b, &mut gb);
    }
    (gw, gb)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    /// `outputs x inputs`
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn new(inputs: usize, outputs: usize, rng: &mut SimRng) -> Self {
        Dense {
            inputs,
            outputs,
            weight: glorot(rng, inputs, outputs, inputs * outputs),
            bias: vec![0.0; outputs],
        }
    }

    pub fn forward(&self, x: &Batch) -> Batch {
        debug_assert_eq!(x.features(), self.inputs);
        let (ni, no) = (self.inputs, self.outputs);
        let mut out = Batch::zeros(x.examples, 1, no);
        out.data
            .par_chunks_mut(no)
            .zip(x.data.par_chunks(ni))
            .for_each(|(o, xi)| {
                for (j, oj) in o.iter_mut().enumerate() {
                    *oj = self.bias[j] + dot(&self.weight[j * ni..(j + 1) * ni], xi);
                }
            });
        out
    }

    pub fn backward(&self, x: &Batch, grad: &Batch) -> (Batch, Vec<Vec<f64>>) {
        let (ni, no) = (self.inputs, self.outputs);
        let mut gx = Batch::zeros(x.examples, x.length, x.channels);
        gx.data
            .par_chunks_mut(ni)
            .zip(grad.data.par_chunks(no))
            .for_each(|(gxi, gi)| {
                for (j, &g) in gi.iter().enumerate() {
                    if g != 0.0 {
                        axpy(g, &self.weight[j * ni..(j + 1) * ni], gxi);
                    }
                }
            });
        let partials: Vec<(Vec<f64>, Vec<f64>)> = x
            .data
            .par_chunks(CHUNK * ni)
            .zip(grad.data.par_chunks(CHUNK * no))
            .map(|(xc, gc)| {
                let mut gw = vec![0.0; ni * no];
                let mut gb = vec![0.0; no];
                for (xi, gi) in xc.chunks(ni).zip(gc.chunks(no)) {
                    for (j, &g) in gi.iter().enumerate() {
                        gb[j] += g;
                        if g != 0.0 {
                            axpy(g, xi, &mut gw[j * ni..(j + 1) * ni]);
                        }
                    }
                }
                (gw, gb)
            })
            .collect();
        let (gw, gb) = sum_partials(partials, ni * no, no);
        (gx, vec![gw, gb])
    }

    pub fn macs(&self) -> u64 {
        (self.inputs * self.outputs) as u64
    }
}

/// Batch normalization over examples and positions, per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm {
    pub channels: usize,
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    /// Training steps folded into the running statistics.
    pub updates: u64,
}

pub const BN_MOMENTUM: f64 = 0.99;
pub const BN_EPSILON: f64 = 1e-5;

/// Per-call batch statistics needed for backward and running updates.
#[derive(Debug, Clone)]
pub struct NormCache {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub inv_std: Vec<f64>,
    /// Normalized input before scale and shift.
    pub xhat: Batch,
    pub training: bool,
}

impl BatchNorm {
    pub fn new(channels: usize) -> Self {
        BatchNorm {
            channels,
            gamma: vec![1.0; channels],
            beta: vec![0.0; channels],
            running_mean: vec![0.0; channels],
            running_var: vec![1.0; channels],
            updates: 0,
        }
    }

    pub fn forward(&self, x: &Batch, training: bool) -> Result<(Batch, NormCache)> {
        let c = self.channels;
        debug_assert_eq!(x.channels, c);
        let samples = x.examples * x.length;
        let (mean, var) = if training {
            if x.examples < 2 {
                return Err(Error::InvalidArgument("batch norm training needs at least 2 examples".into()));
            }
            let mut mean = vec![0.0; c];
            for row in x.data.chunks(c) {
                axpy(1.0, row, &mut mean);
            }
            mean.iter_mut().for_each(|m| *m /= samples as f64);
            let mut var = vec![0.0; c];
            for row in x.data.chunks(c) {
                for ch in 0..c {
                    let d = row[ch] - mean[ch];
                    var[ch] += d * d;
                }
            }
            var.iter_mut().for_each(|v| *v /= samples as f64);
            (mean, var)
        } else {
            if self.updates == 0 {
                return Err(Error::Uninitialized);
            }
            (self.running_mean.clone(), self.running_var.clone())
        };
        let inv_std: Vec<f64> = var.iter().map(|v| (v + BN_EPSILON).sqrt().recip()).collect();
        let mut xhat = Batch::zeros(x.examples, x.length, c);
        let mut out = Batch::zeros(x.examples, x.length, c);
        for ((row, hrow), orow) in x.data.chunks(c).zip(xhat.data.chunks_mut(c)).zip(out.data.chunks_mut(c)) {
            for ch in 0..c {
                let h = (row[ch] - mean[ch]) * inv_std[ch];
                hrow[ch] = h;
                orow[ch] = self.gamma[ch] * h + self.beta[ch];
            }
        }
        Ok((
            out,
            NormCache {
                mean,
                var,
                inv_std,
                xhat,
                training,
            },
        ))
    }

    /// Folds batch statistics into the running estimates.
    pub fn update_running(&mut self, cache: &NormCache) {
        for ch in 0..self.channels {
            self.running_mean[ch] = BN_MOMENTUM * self.running_mean[ch] + (1.0 - BN_MOMENTUM) * cache.mean[ch];
            self.running_var[ch] = BN_MOMENTUM * self.running_var[ch] + (1.0 - BN_MOMENTUM) * cache.var[ch];
        }
        self.updates += 1;
    }

    pub fn backward(&self, cache: &NormCache, grad: &Batch) -> (Batch, Vec<Vec<f64>>) {
        let c = self.channels;
        let samples = (grad.examples * grad.length) as f64;
        let mut dgamma = vec![0.0; c];
        let mut dbeta = vec![0.0; c];
        for (grow, hrow) in grad.data.chunks(c).zip(cache.xhat.data.chunks(c)) {
            for ch in 0..c {
                dgamma[ch] += grow[ch] * hrow[ch];
                dbeta[ch] += grow[ch];
            }
        }
        let mut gx = Batch::zeros(grad.examples, grad.length, c);
        for ((grow, hrow), xrow) in grad
            .data
            .chunks(c)
            .zip(cache.xhat.data.chunks(c))
            .zip(gx.data.chunks_mut(c))
        {
            for ch in 0..c {
                let scale = self.gamma[ch] * cache.inv_std[ch];
                xrow[ch] = if cache.training {
                    scale * (grow[ch] - dbeta[ch] / samples - hrow[ch] * dgamma[ch] / samples)
                } else {
                    scale * grow[ch]
                };
            }
        }
        (gx, vec![dgamma, dbeta])
    }
}
