//! LDPC channel coding at the two transport-block operating points.
//!
//! Both operating points transmit 288 coded bits per transport block. The
//! high-rate point uses a (288, 168) code directly; the low-rate point
//! shortens a (336, 96) mother code by 48 information bits, giving an
//! effective (288, 48) code. Parity-check matrices ship as alist files and
//! are regenerated bit-exactly by [`peg::construct`] with the seeds below.

pub mod alist;
pub mod gf2;
mod ldpc;
pub mod peg;

use serde::{Deserialize, Serialize};

pub use ldpc::{DecodeOutput, LdpcCode, MinSumOptions};

use crate::error::{Error, Result};

/// Coded bits per transport block at both operating points.
pub const CODED_BITS: usize = 288;

static HIGH_ALIST: &str = include_str!("../../data/ldpc_288_168.alist");
static LOW_ALIST: &str = include_str!("../../data/ldpc_336_96.alist");

/// PEG parameters of a shipped mother code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MotherCode {
    pub n: usize,
    pub k: usize,
    pub info_degree: usize,
    pub seed: u64,
    pub shortened: usize,
}

pub const HIGH_MOTHER: MotherCode = MotherCode {
    n: 288,
    k: 168,
    info_degree: 4,
    seed: 0x5C4A_0168,
    shortened: 0,
};

pub const LOW_MOTHER: MotherCode = MotherCode {
    n: 336,
    k: 96,
    info_degree: 6,
    seed: 0x5C4A_0048,
    shortened: 48,
};

impl MotherCode {
    /// Rebuilds the parity-check matrix from the construction parameters.
    pub fn construct(&self) -> alist::SparseMatrix {
        peg::construct(self.n, self.k, self.info_degree, self.seed)
    }
}

/// Information bits of one transport block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportBlock(pub Vec<u8>);

impl TransportBlock {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }
}

/// Operating point label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RatePoint {
    High,
    Low,
}

impl RatePoint {
    pub fn as_str(self) -> &'static str {
        match self {
            RatePoint::High => "high",
            RatePoint::Low => "low",
        }
    }
}

impl std::str::FromStr for RatePoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "high" => Ok(RatePoint::High),
            "low" => Ok(RatePoint::Low),
            other => Err(Error::UnknownOperatingPoint(other.to_string())),
        }
    }
}

/// A code together with its transport-block size and nominal rate label.
#[derive(Debug, Clone)]
pub struct OperatingPoint {
    pub point: RatePoint,
    pub code: LdpcCode,
    pub tb_bits: usize,
    /// Rate as labelled in the simulation parameter table; the true rate
    /// is `code.rate()`.
    pub nominal_rate: f64,
}

impl OperatingPoint {
    pub fn encode_tb(&self, tb: &TransportBlock) -> Result<Vec<u8>> {
        self.code.encode(tb.bits())
    }

    pub fn decode_llr(&self, llrs: &[f64], opts: &MinSumOptions) -> Result<(TransportBlock, bool)> {
        let out = self.code.decode(llrs, opts)?;
        Ok((TransportBlock(out.info), out.converged))
    }
}

/// Raw alist text of a shipped mother code.
pub fn shipped_alist(point: RatePoint) -> &'static str {
    match point {
        RatePoint::High => HIGH_ALIST,
        RatePoint::Low => LOW_ALIST,
    }
}

/// Loads the shipped code for `point`.
pub fn operating_point(point: RatePoint) -> Result<OperatingPoint> {
    operating_point_from_alist(point, shipped_alist(point))
}

/// Builds `point` from a replacement mother code, which must have the
/// dimensions of the shipped one.
pub fn operating_point_from_alist(point: RatePoint, alist: &str) -> Result<OperatingPoint> {
    let (mother, tb_bits, nominal_rate) = match point {
        RatePoint::High => (HIGH_MOTHER, 168, 0.588),
        RatePoint::Low => (LOW_MOTHER, 48, 0.188),
    };
    let code = LdpcCode::from_alist(alist, Some((mother.n, mother.k)))?.shorten(mother.shortened)?;
    debug_assert_eq!((code.n(), code.k()), (CODED_BITS, tb_bits));
    Ok(OperatingPoint {
        point,
        code,
        tb_bits,
        nominal_rate,
    })
}

/// [`operating_point`] from a `"high"` / `"low"` label.
pub fn build_operating_point(label: &str) -> Result<OperatingPoint> {
    operating_point(label.parse()?)
}
