//! Binary cross-entropy on logits.

/// `ln(1 + e^a)` without overflow.
pub fn softplus(a: f64) -> f64 {
    a.max(0.0) + (-a.abs()).exp().ln_1p()
}

pub fn sigmoid(a: f64) -> f64 {
    if a >= 0.0 {
        1.0 / (1.0 + (-a).exp())
    } else {
        let e = a.exp();
        e / (1.0 + e)
    }
}

/// Loss of one logit: `softplus(-l)` for a 1 label, `softplus(l)` for a 0.
pub fn lbce_term(logit: f64, label: u8) -> f64 {
    if label == 1 {
        softplus(-logit)
    } else {
        softplus(logit)
    }
}

/// Mean binary cross-entropy over all logits.
pub fn lbce(logits: &[f64], labels: &[u8]) -> f64 {
    debug_assert_eq!(logits.len(), labels.len());
    logits.iter().zip(labels).map(|(&l, &b)| lbce_term(l, b)).sum::<f64>() / logits.len() as f64
}

/// The same loss from the probabilities `sigmoid(l)` directly; `1 - sigmoid(l)`
/// is evaluated as `sigmoid(-l)` so it keeps full precision for large `l`.
pub fn lbce_naive(logits: &[f64], labels: &[u8]) -> f64 {
    let total: f64 = logits
        .iter()
        .zip(labels)
        .map(|(&l, &b)| {
            let (p, q) = (sigmoid(l), sigmoid(-l));
            let b = f64::from(b);
            -b * p.ln() - (1.0 - b) * q.ln()
        })
        .sum();
    total / logits.len() as f64
}

/// Gradient of [`lbce`] w.r.t. each logit: `(sigmoid(l) - b) / count`.
pub fn lbce_grad(logits: &[f64], labels: &[u8]) -> Vec<f64> {
    let n = logits.len() as f64;
    logits
        .iter()
        .zip(labels)
        .map(|(&l, &b)| (sigmoid(l) - f64::from(b)) / n)
        .collect()
}
