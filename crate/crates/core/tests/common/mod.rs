#![allow(dead_code)]

use rand::Rng;
use scma_ntn::channel::complex_gaussian;
use scma_ntn::detect::LLR_CLAMP;
use scma_ntn::rng::SimRng;
use scma_ntn::scma::{index_to_bits, CodebookSet, LoadOptions};
use scma_ntn::Complex;

/// Three users sharing one resource, built from the resource-0 entries of
/// the shipped codebook: the cycle-free single-factor case.
pub fn single_resource() -> CodebookSet {
    let full = CodebookSet::default_set();
    let raw: Vec<Vec<Vec<Complex>>> = (0..3)
        .map(|i| full.book(i).codewords().iter().map(|cw| vec![cw[0]]).collect())
        .collect();
    CodebookSet::new(raw, 2, LoadOptions { auto_normalize: true }).unwrap()
}

pub fn random_slot(cb: &CodebookSet, sigma2: f64, r: &mut SimRng) -> (Vec<Complex>, Vec<Complex>, Vec<usize>) {
    let h: Vec<Complex> = (0..cb.users()).map(|_| Complex::from_polar(1.0, r.random_range(0.0..std::f64::consts::TAU))).collect();
    let sent: Vec<usize> = (0..cb.users()).map(|_| r.random_range(0..cb.size())).collect();
    let y = (0..cb.resources())
        .map(|k| {
            let s: Complex = (0..cb.users()).map(|i| h[i] * cb.book(i).codeword(sent[i])[k]).sum();
            s + complex_gaussian(r, sigma2)
        })
        .collect();
    (y, h, sent)
}

/// Log-likelihood of every joint hypothesis, enumerated directly.
pub fn joint_metrics(cb: &CodebookSet, y: &[Complex], h: &[Complex], sigma2: f64) -> Vec<(Vec<usize>, f64)> {
    let (j, m) = (cb.users(), cb.size());
    (0..m.pow(j as u32))
        .map(|mut code| {
            let idx: Vec<usize> = (0..j)
                .map(|_| {
                    let c = code % m;
                    code /= m;
                    c
                })
                .collect();
            let d: f64 = (0..cb.resources())
                .map(|k| {
                    let s: Complex = (0..j).map(|i| h[i] * cb.book(i).codeword(idx[i])[k]).sum();
                    (y[k] - s).norm_sqr()
                })
                .sum();
            (idx, -d / sigma2)
        })
        .collect()
}

/// Bit LLRs by exact marginalization (`max_log = false`) or by the max-log
/// rule over the joint hypotheses.
pub fn brute_llrs(cb: &CodebookSet, y: &[Complex], h: &[Complex], sigma2: f64, max_log: bool) -> Vec<f64> {
    let metrics = joint_metrics(cb, y, h, sigma2);
    let top = metrics.iter().map(|(_, l)| *l).fold(f64::NEG_INFINITY, f64::max);
    let mut out = Vec::new();
    for i in 0..cb.users() {
        for b in 0..cb.bits() {
            let mut acc = [f64::NEG_INFINITY; 2];
            let mut sum = [0.0; 2];
            for (idx, l) in &metrics {
                let bit = index_to_bits(idx[i], cb.bits())[b] as usize;
                acc[bit] = acc[bit].max(*l);
                sum[bit] += (l - top).exp();
            }
            let llr = if max_log { acc[1] - acc[0] } else { sum[1].ln() - sum[0].ln() };
            out.push(llr.clamp(-LLR_CLAMP, LLR_CLAMP));
        }
    }
    out
}
