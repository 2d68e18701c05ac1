//! Exhaustive joint detection over all `M^J` codeword combinations.

use super::{clamp_llr, DetectorInput, LlrFrame, LLR_CLAMP};
use crate::error::{Error, Result};
use crate::Complex;

/// Largest joint hypothesis count the oracle will enumerate.
pub const MAX_HYPOTHESES: u64 = 1 << 20;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleOutput {
    /// Jointly most likely codeword index per user.
    pub indices: Vec<usize>,
    /// Exact marginal bit log-odds under uniform priors.
    pub llrs: LlrFrame,
}

/// Enumerates every joint hypothesis with likelihood
/// `exp(-||y - sum_i h_i x_i(c_i)||^2 / sigma^2)`.
///
/// With `sigma2 = 0` the hard decision is the minimum-distance hypothesis
/// and each LLR saturates at the clamp with the sign of the bit in the best
/// hypothesis on either side (zero on exact ties).
pub fn ml_oracle(input: &DetectorInput<'_>) -> Result<OracleOutput> {
    let cb = input.codebooks;
    let (users, bits, size, resources) = (cb.users(), cb.bits(), cb.size(), cb.resources());
    let total = (size as u64)
        .checked_pow(users as u32)
        .filter(|&t| t <= MAX_HYPOTHESES)
        .ok_or(Error::SearchSpaceTooLarge((size as f64).powi(users as i32) as u64))?;
    let total = total as usize;

    let graph = cb.graph();
    let per_resource: Vec<Vec<usize>> = (0..resources).map(|k| graph.resource_users(k)).collect();
    let products: Vec<Vec<Vec<Complex>>> = (0..users)
        .map(|i| {
            (0..size)
                .map(|c| cb.book(i).codeword(c).iter().map(|&x| input.h[i] * x).collect())
                .collect()
        })
        .collect();

    let mut combo = vec![0usize; users];
    let mut distance = Vec::with_capacity(total);
    for idx in 0..total {
        decode(idx, size, &mut combo);
        let mut d = 0.0;
        for (k, on) in per_resource.iter().enumerate() {
            let mut r = input.y[k];
            for &i in on {
                r -= products[i][combo[i]][k];
            }
            d += r.norm_sqr();
        }
        distance.push(d);
    }

    let best = distance
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    decode(best, size, &mut combo);
    let indices = combo.clone();

    let values = if input.sigma2 > 0.0 {
        // log-sum-exp per (user, bit, value), shifted by the best metric
        let dmin = distance[best];
        let mut mass = vec![[0.0f64; 2]; users * bits];
        for (idx, &d) in distance.iter().enumerate() {
            let w = ((dmin - d) / input.sigma2).exp();
            decode(idx, size, &mut combo);
            for i in 0..users {
                for b in 0..bits {
                    let v = (combo[i] >> (bits - 1 - b)) & 1;
                    mass[i * bits + b][v] += w;
                }
            }
        }
        mass.iter().map(|m| clamp_llr(m[1].ln() - m[0].ln())).collect()
    } else {
        let mut closest = vec![[f64::INFINITY; 2]; users * bits];
        for (idx, &d) in distance.iter().enumerate() {
            decode(idx, size, &mut combo);
            for i in 0..users {
                for b in 0..bits {
                    let v = (combo[i] >> (bits - 1 - b)) & 1;
                    let slot = &mut closest[i * bits + b][v];
                    *slot = slot.min(d);
                }
            }
        }
        closest
            .iter()
            .map(|c| match c[0].total_cmp(&c[1]) {
                std::cmp::Ordering::Greater => LLR_CLAMP,
                std::cmp::Ordering::Less => -LLR_CLAMP,
                std::cmp::Ordering::Equal => 0.0,
            })
            .collect()
    };
    Ok(OracleOutput {
        indices,
        llrs: LlrFrame::from_values(users, bits, values)?,
    })
}

/// Mixed-radix digits of `idx`, user 0 least significant.
fn decode(mut idx: usize, size: usize, combo: &mut [usize]) {
    for c in combo.iter_mut() {
        *c = idx % size;
        idx /= size;
    }
}
