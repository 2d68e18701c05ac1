//! Classical SCMA multiuser detectors.
//!
//! All detectors work on one codeword slot: the `K` received samples of a
//! group of subcarriers and the `J` channel coefficients of that symbol
//! time. They return bit LLRs in the `ln(P{b=1} / P{b=0})` convention,
//! user-major with the codeword index bits MSB first.

mod mpa;
mod oracle;

pub use mpa::{log_mpa, log_mpa_counted, mpa_exact, mpa_exact_counted, LogMpaVariant};
pub use oracle::{ml_oracle, OracleOutput, MAX_HYPOTHESES};

use crate::error::{Error, Result};
use crate::scma::CodebookSet;
use crate::Complex;

/// Saturation magnitude for every LLR leaving a detector.
pub const LLR_CLAMP: f64 = 38.0;

pub(crate) fn clamp_llr(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(-LLR_CLAMP, LLR_CLAMP)
    }
}

/// Bit LLRs of all users for one codeword slot.
#[derive(Debug, Clone, PartialEq)]
pub struct LlrFrame {
    users: usize,
    bits: usize,
    values: Vec<f64>,
}

impl LlrFrame {
    pub fn zeros(users: usize, bits: usize) -> Self {
        LlrFrame {
            users,
            bits,
            values: vec![0.0; users * bits],
        }
    }

    /// Wraps user-major values, clamping each to `[-38, 38]`.
    pub fn from_values(users: usize, bits: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != users * bits {
            return Err(Error::LengthMismatch {
                expected: users * bits,
                actual: values.len(),
            });
        }
        Ok(LlrFrame {
            users,
            bits,
            values: values.into_iter().map(clamp_llr).collect(),
        })
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn get(&self, user: usize, bit: usize) -> f64 {
        self.values[user * self.bits + bit]
    }

    pub fn user(&self, user: usize) -> &[f64] {
        &self.values[user * self.bits..(user + 1) * self.bits]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Hard codeword index per user from the LLR signs (positive means 1).
    pub fn hard_indices(&self) -> Vec<usize> {
        (0..self.users)
            .map(|i| self.user(i).iter().fold(0, |acc, &l| (acc << 1) | usize::from(l > 0.0)))
            .collect()
    }
}

/// One codeword slot as seen by a detector.
#[derive(Debug, Clone, Copy)]
pub struct DetectorInput<'a> {
    pub y: &'a [Complex],
    pub h: &'a [Complex],
    pub sigma2: f64,
    pub codebooks: &'a CodebookSet,
}

impl<'a> DetectorInput<'a> {
    pub fn new(y: &'a [Complex], h: &'a [Complex], sigma2: f64, codebooks: &'a CodebookSet) -> Result<Self> {
        if y.len() != codebooks.resources() {
            return Err(Error::LengthMismatch {
                expected: codebooks.resources(),
                actual: y.len(),
            });
        }
        if h.len() != codebooks.users() {
            return Err(Error::LengthMismatch {
                expected: codebooks.users(),
                actual: h.len(),
            });
        }
        if !(sigma2 >= 0.0) {
            return Err(Error::InvalidArgument(format!("noise variance {sigma2} is negative")));
        }
        Ok(DetectorInput { y, h, sigma2, codebooks })
    }

    fn require_noise(&self) -> Result<()> {
        if self.sigma2 > 0.0 {
            Ok(())
        } else {
            Err(Error::ZeroNoise)
        }
    }
}

/// Tallies arithmetic performed by an instrumented detector run.
///
/// Counting convention: real-valued operations. A complex product is four
/// real multiplications and two additions; a squared magnitude is two
/// multiplications and one addition; scaling by `1/sigma^2` is one
/// multiplication. `max` operations are comparisons. Exponentials and
/// logarithms are tallied separately and not folded into the other counts.
pub trait OpCounter {
    fn mul(&mut self, _n: u64) {}
    fn add(&mut self, _n: u64) {}
    fn cmp(&mut self, _n: u64) {}
    fn exp(&mut self, _n: u64) {}
}

/// Counter that discards everything.
pub struct NoCount;

impl OpCounter for NoCount {}

/// Totals for one instrumented run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct OpCounts {
    pub multiplications: u64,
    pub additions: u64,
    pub comparisons: u64,
    pub exponentials: u64,
}

impl OpCounter for OpCounts {
    fn mul(&mut self, n: u64) {
        self.multiplications += n;
    }
    fn add(&mut self, n: u64) {
        self.additions += n;
    }
    fn cmp(&mut self, n: u64) {
        self.comparisons += n;
    }
    fn exp(&mut self, n: u64) {
        self.exponentials += n;
    }
}

impl OpCounts {
    /// Human-readable statement of the counting convention.
    pub const CONVENTION: &'static str = "real-valued operations per codeword slot: complex product = 4 mul + 2 add, \
|z|^2 = 2 mul + 1 add, 1/sigma^2 scaling = 1 mul; the per-resource channel-codeword products are \
formed once, the Euclidean metric is re-evaluated for every factor-to-variable message entry; \
max = 1 comparison; exp/log counted separately";
}

/// Detector usable by the Monte Carlo harness.
pub trait SlotDetector: Sync {
    fn name(&self) -> &str;

    fn detect(&self, y: &[Complex], h: &[Complex], sigma2: f64) -> Result<LlrFrame>;

    /// Detects many slots; the default maps [`SlotDetector::detect`].
    fn detect_batch(&self, slots: &[(Vec<Complex>, Vec<Complex>)], sigma2: f64) -> Result<Vec<LlrFrame>> {
        slots.iter().map(|(y, h)| self.detect(y, h, sigma2)).collect()
    }
}

/// Probability-domain sum-product detector.
#[derive(Debug, Clone)]
pub struct MpaDetector {
    pub codebooks: CodebookSet,
    pub iterations: usize,
}

impl SlotDetector for MpaDetector {
    fn name(&self) -> &str {
        "mpa"
    }

    fn detect(&self, y: &[Complex], h: &[Complex], sigma2: f64) -> Result<LlrFrame> {
        mpa_exact(&DetectorInput::new(y, h, sigma2, &self.codebooks)?, self.iterations)
    }
}

/// Log-domain max-log (optionally Jacobian-corrected) detector.
#[derive(Debug, Clone)]
pub struct LogMpaDetector {
    pub codebooks: CodebookSet,
    pub iterations: usize,
    pub variant: LogMpaVariant,
}

impl SlotDetector for LogMpaDetector {
    fn name(&self) -> &str {
        "logmpa"
    }

    fn detect(&self, y: &[Complex], h: &[Complex], sigma2: f64) -> Result<LlrFrame> {
        log_mpa(&DetectorInput::new(y, h, sigma2, &self.codebooks)?, self.iterations, self.variant)
    }
}

/// Exhaustive joint maximum-a-posteriori detector.
#[derive(Debug, Clone)]
pub struct OracleDetector {
    pub codebooks: CodebookSet,
}

impl SlotDetector for OracleDetector {
    fn name(&self) -> &str {
        "oracle"
    }

    fn detect(&self, y: &[Complex], h: &[Complex], sigma2: f64) -> Result<LlrFrame> {
        Ok(ml_oracle(&DetectorInput::new(y, h, sigma2, &self.codebooks)?)?.llrs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_clamps_and_hard_decides() {
        let f = LlrFrame::from_values(2, 2, vec![100.0, -3.0, -0.5, f64::NAN]).unwrap();
        assert_eq!(f.values(), &[38.0, -3.0, -0.5, 0.0]);
        assert_eq!(f.hard_indices(), vec![2, 0]);
        assert!(LlrFrame::from_values(2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn input_shapes_checked() {
        let cb = CodebookSet::default_set();
        let y = vec![Complex::new(0.0, 0.0); 4];
        let h = vec![Complex::new(1.0, 0.0); 6];
        assert!(DetectorInput::new(&y, &h, 0.1, &cb).is_ok());
        assert!(DetectorInput::new(&y[..3], &h, 0.1, &cb).is_err());
        assert!(DetectorInput::new(&y, &h[..5], 0.1, &cb).is_err());
        assert!(DetectorInput::new(&y, &h, -1.0, &cb).is_err());
    }
}
