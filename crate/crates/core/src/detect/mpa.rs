//! Message passing on the SCMA factor graph.
//!
//! Both detectors use a flooding schedule: every iteration updates all
//! factor-to-variable messages, then all variable-to-factor messages.
//! Beliefs are formed from the factor messages of the last iteration, so
//! zero iterations yield uniform beliefs and all-zero LLRs.

use super::{clamp_llr, DetectorInput, LlrFrame, NoCount, OpCounter, OpCounts};
use crate::error::Result;
use crate::Complex;

/// Marginalization rule of the log-domain detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LogMpaVariant {
    /// `log(sum exp)` replaced by `max`.
    #[default]
    MaxLog,
    /// Exact `log(sum exp)` via the Jacobian logarithm.
    Jacobian,
}

/// Edge bookkeeping shared by both detectors. Edge `e` joins user
/// `edge_user[e]` to a resource; the edges of resource `k` are contiguous.
struct Edges {
    size: usize,
    resource_edges: Vec<Vec<usize>>,
    user_edges: Vec<Vec<usize>>,
    edge_user: Vec<usize>,
    /// `h_i x_{i,c}[k]` per edge and codeword.
    products: Vec<Vec<Complex>>,
}

impl Edges {
    fn build<C: OpCounter>(input: &DetectorInput<'_>, counter: &mut C) -> Self {
        let cb = input.codebooks;
        let graph = cb.graph();
        let size = cb.size();
        let mut resource_edges = vec![Vec::new(); graph.resources()];
        let mut user_edges = vec![Vec::new(); graph.users()];
        let mut edge_user = Vec::new();
        let mut products = Vec::new();
        for (k, edges) in resource_edges.iter_mut().enumerate() {
            for i in graph.resource_users(k) {
                let e = edge_user.len();
                edges.push(e);
                user_edges[i].push(e);
                edge_user.push(i);
                let book = cb.book(i);
                products.push((0..size).map(|c| input.h[i] * book.codeword(c)[k]).collect());
                counter.mul(4 * size as u64);
                counter.add(2 * size as u64);
            }
        }
        Edges {
            size,
            resource_edges,
            user_edges,
            edge_user,
            products,
        }
    }

    fn len(&self) -> usize {
        self.edge_user.len()
    }
}

/// Calls `visit(combo, others_sum)` for every assignment of codewords to
/// the edges in `others`, with `combo[j]` the codeword on `others[j]` and
/// `others_sum` the sum of their channel-codeword products.
fn for_each_combo<F: FnMut(&[usize], Complex)>(edges: &Edges, others: &[usize], combo: &mut [usize], mut visit: F) {
    let size = edges.size;
    let total = size.pow(others.len() as u32);
    for idx in 0..total {
        let mut rest = idx;
        let mut sum = Complex::new(0.0, 0.0);
        for (j, &e) in others.iter().enumerate() {
            combo[j] = rest % size;
            rest /= size;
            sum += edges.products[e][combo[j]];
        }
        visit(combo, sum);
    }
}

fn bit_of(index: usize, bit: usize, bits: usize) -> bool {
    (index >> (bits - 1 - bit)) & 1 == 1
}

fn max_star<C: OpCounter>(a: f64, b: f64, variant: LogMpaVariant, counter: &mut C) -> f64 {
    counter.cmp(1);
    let m = a.max(b);
    match variant {
        LogMpaVariant::MaxLog => m,
        LogMpaVariant::Jacobian => {
            if m == f64::NEG_INFINITY {
                return m;
            }
            counter.exp(2);
            counter.add(3);
            m + (-(a - b).abs()).exp().ln_1p()
        }
    }
}

/// Log-MPA with the max-log approximation (or its Jacobian-corrected
/// variant).
pub fn log_mpa(input: &DetectorInput<'_>, iterations: usize, variant: LogMpaVariant) -> Result<LlrFrame> {
    log_mpa_impl(input, iterations, variant, &mut NoCount)
}

/// [`log_mpa`] with an operation tally.
pub fn log_mpa_counted(
    input: &DetectorInput<'_>,
    iterations: usize,
    variant: LogMpaVariant,
) -> Result<(LlrFrame, OpCounts)> {
    let mut counts = OpCounts::default();
    let frame = log_mpa_impl(input, iterations, variant, &mut counts)?;
    Ok((frame, counts))
}

fn log_mpa_impl<C: OpCounter>(
    input: &DetectorInput<'_>,
    iterations: usize,
    variant: LogMpaVariant,
    counter: &mut C,
) -> Result<LlrFrame> {
    input.require_noise()?;
    let cb = input.codebooks;
    let (users, bits) = (cb.users(), cb.bits());
    let edges = Edges::build(input, counter);
    let size = edges.size;
    let inv_sigma2 = input.sigma2.recip();
    counter.mul(1);

    let mut f2v = vec![vec![0.0f64; size]; edges.len()];
    let mut v2f = vec![vec![0.0f64; size]; edges.len()];
    let df_max = edges.resource_edges.iter().map(Vec::len).max().unwrap_or(0);
    let mut combo = vec![0usize; df_max];
    let mut others = Vec::with_capacity(df_max);

    for _ in 0..iterations {
        for (k, redges) in edges.resource_edges.iter().enumerate() {
            let yk = input.y[k];
            for &target in redges {
                others.clear();
                others.extend(redges.iter().copied().filter(|&e| e != target));
                for c in 0..size {
                    let base = yk - edges.products[target][c];
                    counter.add(2);
                    let mut acc = f64::NEG_INFINITY;
                    for_each_combo(&edges, &others, &mut combo, |combo, sum| {
                        let r = base - sum;
                        let metric = -(r.norm_sqr() * inv_sigma2);
                        let prior: f64 = others.iter().zip(combo).map(|(&e, &cj)| v2f[e][cj]).sum();
                        counter.add(2 * others.len() as u64);
                        counter.mul(3);
                        counter.add(1 + others.len() as u64);
                        acc = max_star(acc, metric + prior, variant, counter);
                    });
                    f2v[target][c] = acc;
                }
            }
        }
        for uedges in &edges.user_edges {
            for &e in uedges {
                let msg = &mut v2f[e];
                for c in 0..size {
                    msg[c] = uedges.iter().filter(|&&o| o != e).map(|&o| f2v[o][c]).sum();
                    counter.add(uedges.len().saturating_sub(2) as u64);
                }
                let top = msg.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                counter.cmp(size as u64 - 1);
                if top.is_finite() {
                    msg.iter_mut().for_each(|m| *m -= top);
                    counter.add(size as u64);
                }
            }
        }
    }

    let mut values = Vec::with_capacity(users * bits);
    for uedges in &edges.user_edges {
        let belief: Vec<f64> = (0..size)
            .map(|c| uedges.iter().map(|&e| f2v[e][c]).sum())
            .collect();
        counter.add((size * uedges.len().saturating_sub(1)) as u64);
        for b in 0..bits {
            let (mut one, mut zero) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
            for (c, &v) in belief.iter().enumerate() {
                if bit_of(c, b, bits) {
                    one = max_star(one, v, variant, counter);
                } else {
                    zero = max_star(zero, v, variant, counter);
                }
            }
            counter.add(1);
            values.push(clamp_llr(one - zero));
        }
    }
    LlrFrame::from_values(users, bits, values)
}

/// Probability-domain sum-product MPA.
pub fn mpa_exact(input: &DetectorInput<'_>, iterations: usize) -> Result<LlrFrame> {
    mpa_exact_impl(input, iterations, &mut NoCount)
}

/// [`mpa_exact`] with an operation tally.
pub fn mpa_exact_counted(input: &DetectorInput<'_>, iterations: usize) -> Result<(LlrFrame, OpCounts)> {
    let mut counts = OpCounts::default();
    let frame = mpa_exact_impl(input, iterations, &mut counts)?;
    Ok((frame, counts))
}

fn normalize_or_uniform(msg: &mut [f64]) {
    let s: f64 = msg.iter().sum();
    if s > 0.0 && s.is_finite() {
        msg.iter_mut().for_each(|m| *m /= s);
    } else {
        let u = 1.0 / msg.len() as f64;
        msg.iter_mut().for_each(|m| *m = u);
    }
}

fn mpa_exact_impl<C: OpCounter>(input: &DetectorInput<'_>, iterations: usize, counter: &mut C) -> Result<LlrFrame> {
    input.require_noise()?;
    let cb = input.codebooks;
    let (users, bits) = (cb.users(), cb.bits());
    let edges = Edges::build(input, counter);
    let size = edges.size;
    let inv_sigma2 = input.sigma2.recip();
    counter.mul(1);

    let df_max = edges.resource_edges.iter().map(Vec::len).max().unwrap_or(0);
    let mut combo = vec![0usize; df_max];

    // Smallest joint distance per resource; subtracting it rescales every
    // likelihood of that factor by the same constant, which normalization
    // removes, and keeps the best hypothesis at exp(0) = 1.
    let floor: Vec<f64> = edges
        .resource_edges
        .iter()
        .enumerate()
        .map(|(k, redges)| {
            let mut best = f64::INFINITY;
            for_each_combo(&edges, redges, &mut combo, |_, sum| {
                best = best.min((input.y[k] - sum).norm_sqr());
            });
            best * inv_sigma2
        })
        .collect();

    let uniform = 1.0 / size as f64;
    let mut f2v = vec![vec![uniform; size]; edges.len()];
    let mut v2f = vec![vec![uniform; size]; edges.len()];
    let mut others = Vec::with_capacity(df_max);

    for _ in 0..iterations {
        for (k, redges) in edges.resource_edges.iter().enumerate() {
            let yk = input.y[k];
            for &target in redges {
                others.clear();
                others.extend(redges.iter().copied().filter(|&e| e != target));
                for c in 0..size {
                    let base = yk - edges.products[target][c];
                    counter.add(2);
                    let mut acc = 0.0;
                    for_each_combo(&edges, &others, &mut combo, |combo, sum| {
                        let r = base - sum;
                        let like = (floor[k] - r.norm_sqr() * inv_sigma2).exp();
                        let prior: f64 = others.iter().zip(combo).map(|(&e, &cj)| v2f[e][cj]).product();
                        counter.add(2 * others.len() as u64 + 2);
                        counter.mul(3 + others.len() as u64);
                        counter.exp(1);
                        acc += like * prior;
                    });
                    f2v[target][c] = acc;
                }
                normalize_or_uniform(&mut f2v[target]);
            }
        }
        for uedges in &edges.user_edges {
            for &e in uedges {
                let msg = &mut v2f[e];
                for c in 0..size {
                    msg[c] = uedges.iter().filter(|&&o| o != e).map(|&o| f2v[o][c]).product();
                }
                normalize_or_uniform(msg);
            }
        }
    }

    let mut values = Vec::with_capacity(users * bits);
    for uedges in &edges.user_edges {
        let belief: Vec<f64> = (0..size)
            .map(|c| uedges.iter().map(|&e| f2v[e][c]).product())
            .collect();
        for b in 0..bits {
            let (mut one, mut zero) = (0.0, 0.0);
            for (c, &v) in belief.iter().enumerate() {
                if bit_of(c, b, bits) {
                    one += v;
                } else {
                    zero += v;
                }
            }
            counter.exp(2);
            values.push(clamp_llr(one.ln() - zero.ln()));
        }
    }
    LlrFrame::from_values(users, bits, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::scma::CodebookSet;

    fn slot() -> (Vec<Complex>, Vec<Complex>) {
        let y = vec![
            Complex::new(0.3, -0.2),
            Complex::new(-1.1, 0.4),
            Complex::new(0.05, 0.9),
            Complex::new(0.7, 0.7),
        ];
        let h = (0..6).map(|i| Complex::from_polar(1.0, 0.4 * i as f64)).collect();
        (y, h)
    }

    #[test]
    fn zero_iterations_give_zero_llrs() {
        let cb = CodebookSet::default_set();
        let (y, h) = slot();
        let input = DetectorInput::new(&y, &h, 0.3, &cb).unwrap();
        assert!(mpa_exact(&input, 0).unwrap().values().iter().all(|&l| l == 0.0));
        assert!(log_mpa(&input, 0, LogMpaVariant::MaxLog).unwrap().values().iter().all(|&l| l == 0.0));
    }

    #[test]
    fn zero_noise_rejected() {
        let cb = CodebookSet::default_set();
        let (y, h) = slot();
        let input = DetectorInput::new(&y, &h, 0.0, &cb).unwrap();
        assert!(matches!(mpa_exact(&input, 3), Err(Error::ZeroNoise)));
        assert!(matches!(log_mpa(&input, 3, LogMpaVariant::MaxLog), Err(Error::ZeroNoise)));
    }

    #[test]
    fn jacobian_log_mpa_matches_exact_mpa() {
        let cb = CodebookSet::default_set();
        let (y, h) = slot();
        let input = DetectorInput::new(&y, &h, 0.5, &cb).unwrap();
        let a = mpa_exact(&input, 6).unwrap();
        let b = log_mpa(&input, 6, LogMpaVariant::Jacobian).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-9, "{x} vs {y}");
        }
    }

    #[test]
    fn log_mpa_multiplication_count() {
        let cb = CodebookSet::default_set();
        let (y, h) = slot();
        let input = DetectorInput::new(&y, &h, 0.5, &cb).unwrap();
        let (_, c0) = log_mpa_counted(&input, 0, LogMpaVariant::MaxLog).unwrap();
        let (_, c10) = log_mpa_counted(&input, 10, LogMpaVariant::MaxLog).unwrap();
        // 48 channel-codeword products plus the 1/sigma^2 reciprocal
        assert_eq!(c0.multiplications, 48 * 4 + 1);
        // 4 resources x 3 targets x 4 codewords x 16 combinations x 3
        assert_eq!(c10.multiplications - c0.multiplications, 10 * 4 * 3 * 4 * 16 * 3);
    }
}
