//! Link-level simulation of uplink SCMA over a LEO satellite channel.
//!
//! The crate covers the whole chain: SCMA codebooks and resource mapping
//! ([`scma`]), the line-of-sight satellite channel ([`channel`]),
//! message-passing and brute-force detectors ([`detect`]), LDPC coding
//! ([`coding`]), the multi-task CNN receiver ([`neural`]) and Monte Carlo
//! BLER / throughput / complexity evaluation ([`harness`]).

pub mod channel;
pub mod coding;
pub mod detect;
pub mod error;
pub mod harness;
pub mod neural;
pub mod rng;
pub mod scma;

pub use error::{Error, Result};

/// Complex baseband sample.
pub type Complex = num_complex::Complex64;

// the guide's code blocks run as doctests
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/codebooks.md")]
    mod codebooks {}
    #[doc = include_str!("../../../book/src/channel.md")]
    mod channel {}
    #[doc = include_str!("../../../book/src/detection.md")]
    mod detection {}
    #[doc = include_str!("../../../book/src/coding.md")]
    mod coding {}
    #[doc = include_str!("../../../book/src/neural.md")]
    mod neural {}
    #[doc = include_str!("../../../book/src/harness.md")]
    mod harness {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
