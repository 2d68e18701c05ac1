//! Synthetic training data: superimposed SCMA codeword slots over channel
//! coefficients drawn from a stored dataset.

use rand::Rng;

use super::input::{preprocess, InputFrame};
use crate::channel::{complex_gaussian, ChannelRealization, EbN0Reference};
use crate::error::{Error, Result};
use crate::rng;
use crate::scma::{index_to_bits, CodebookSet};
use crate::Complex;

/// Frames with their `mJ` bit labels (user-major, MSB first).
#[derive(Debug, Clone)]
pub struct Minibatch {
    pub frames: Vec<InputFrame>,
    pub labels: Vec<u8>,
    /// Raw received samples and channel per example, for classical detectors.
    pub slots: Vec<(Vec<Complex>, Vec<Complex>)>,
    pub ebn0_db: f64,
    pub sigma2: f64,
}

/// Infinite, seekable source of labelled slots: minibatch `i` is always
/// generated from random stream `i` of the seed.
#[derive(Debug, Clone)]
pub struct SampleGenerator {
    pub codebooks: CodebookSet,
    pub channel: ChannelRealization,
    /// Eb/N0 is drawn uniformly in dB from this range, once per minibatch.
    pub ebn0_range_db: (f64, f64),
    /// Code rate used to convert Eb/N0 into a noise variance.
    pub code_rate: f64,
    pub reference: EbN0Reference,
    pub seed: u64,
}

impl SampleGenerator {
    pub fn new(
        codebooks: CodebookSet,
        channel: ChannelRealization,
        ebn0_range_db: (f64, f64),
        code_rate: f64,
        seed: u64,
    ) -> Result<Self> {
        if channel.users() != codebooks.users() {
            return Err(Error::Shape(format!(
                "channel has {} users, codebooks {}",
                channel.users(),
                codebooks.users()
            )));
        }
        if !(ebn0_range_db.0 <= ebn0_range_db.1) {
            return Err(Error::InvalidArgument(format!("empty Eb/N0 range {ebn0_range_db:?}")));
        }
        Ok(SampleGenerator {
            codebooks,
            channel,
            ebn0_range_db,
            code_rate,
            reference: EbN0Reference::default(),
            seed,
        })
    }

    fn sigma2(&self, ebn0_db: f64) -> Result<f64> {
        let energy = self.codebooks.books().iter().map(|b| b.mean_energy()).sum::<f64>() / self.codebooks.users() as f64;
        self.reference.sigma2(
            ebn0_db,
            self.codebooks.bits(),
            self.code_rate,
            energy,
            self.channel.mean_power_all(),
            self.codebooks.users(),
        )
    }

    /// Minibatch `index` at a random Eb/N0 from the configured range.
    pub fn minibatch(&self, index: u64, size: usize) -> Result<Minibatch> {
        let mut r = rng::task_stream(self.seed, index);
        let (lo, hi) = self.ebn0_range_db;
        let ebn0 = if lo == hi { lo } else { r.random_range(lo..hi) };
        self.draw(&mut r, ebn0, size)
    }

    /// Minibatch `index` at a fixed Eb/N0.
    pub fn minibatch_at(&self, index: u64, size: usize, ebn0_db: f64) -> Result<Minibatch> {
        let mut r = rng::task_stream(self.seed, index);
        self.draw(&mut r, ebn0_db, size)
    }

    fn draw(&self, r: &mut rng::SimRng, ebn0_db: f64, size: usize) -> Result<Minibatch> {
        let sigma2 = self.sigma2(ebn0_db)?;
        let (k, j, m) = (self.codebooks.resources(), self.codebooks.users(), self.codebooks.bits());
        let fg = self.codebooks.graph();
        let mut frames = Vec::with_capacity(size);
        let mut labels = Vec::with_capacity(size * m * j);
        let mut slots = Vec::with_capacity(size);
        for _ in 0..size {
            let t = r.random_range(0..self.channel.symbols());
            let h = self.channel.column(t);
            let mut y = vec![Complex::new(0.0, 0.0); k];
            for (u, book) in self.codebooks.books().iter().enumerate() {
                let idx = r.random_range(0..book.size());
                labels.extend(index_to_bits(idx, m));
                for (yk, x) in y.iter_mut().zip(book.codeword(idx)) {
                    *yk += h[u] * x;
                }
            }
            for yk in &mut y {
                *yk += complex_gaussian(r, sigma2);
            }
            frames.push(preprocess(&y, &h, fg)?);
            slots.push((y, h));
        }
        Ok(Minibatch {
            frames,
            labels,
            slots,
            ebn0_db,
            sigma2,
        })
    }
}
