//! Slot preprocessing and input standardization.

use serde::{Deserialize, Serialize};

use super::tensor::Batch;
use crate::error::{Error, Result};
use crate::scma::FactorGraph;
use crate::Complex;

/// Std values below this are treated as a constant channel.
const STD_FLOOR: f64 = 1e-8;

/// `K x 2(J+1)` real frame, row-major.
///
/// Columns 0 and 1 carry Re/Im of the received samples. Columns `2(i+1)`
/// and `2(i+1)+1` carry Re/Im of user `i`'s channel coefficient on the
/// resources user `i` occupies and zero elsewhere, which embeds the
/// factor-graph sparsity pattern in the input.
#[derive(Debug, Clone, PartialEq)]
pub struct InputFrame {
    pub resources: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl InputFrame {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.channels + col]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.resources, self.channels)
    }
}

pub fn preprocess(y: &[Complex], h: &[Complex], fg: &FactorGraph) -> Result<InputFrame> {
    let (k, j) = (fg.resources(), fg.users());
    if y.len() != k || h.len() != j {
        return Err(Error::Shape(format!(
            "frame needs {k} samples and {j} coefficients, got {} and {}",
            y.len(),
            h.len()
        )));
    }
    let channels = 2 * (j + 1);
    let mut data = vec![0.0; k * channels];
    for (r, row) in data.chunks_mut(channels).enumerate() {
        row[0] = y[r].re;
        row[1] = y[r].im;
        for (i, hi) in h.iter().enumerate() {
            if fg.occupies(r, i) {
                row[2 * (i + 1)] = hi.re;
                row[2 * (i + 1) + 1] = hi.im;
            }
        }
    }
    Ok(InputFrame {
        resources: k,
        channels,
        data,
    })
}

/// Per-column mean and standard deviation, estimated once and then frozen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Estimates statistics over all rows of all frames.
    pub fn calibrate(frames: &[InputFrame]) -> Result<Self> {
        let first = frames.first().ok_or_else(|| Error::InvalidArgument("no calibration frames".into()))?;
        let c = first.channels;
        if frames.iter().any(|f| f.shape() != first.shape()) {
            return Err(Error::Shape("calibration frames differ in shape".into()));
        }
        let count = (frames.len() * first.resources) as f64;
        let mut mean = vec![0.0; c];
        for row in frames.iter().flat_map(|f| f.data.chunks(c)) {
            mean.iter_mut().zip(row).for_each(|(m, x)| *m += x);
        }
        mean.iter_mut().for_each(|m| *m /= count);
        let mut var = vec![0.0; c];
        for row in frames.iter().flat_map(|f| f.data.chunks(c)) {
            for ch in 0..c {
                var[ch] += (row[ch] - mean[ch]).powi(2);
            }
        }
        let std = var
            .iter()
            .map(|v| {
                let s = (v / count).sqrt();
                if s < STD_FLOOR {
                    1.0
                } else {
                    s
                }
            })
            .collect();
        Ok(Standardizer { mean, std })
    }

    pub fn channels(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, frame: &InputFrame) -> Result<InputFrame> {
        if frame.channels != self.channels() {
            return Err(Error::Shape(format!(
                "standardizer has {} channels, frame has {}",
                self.channels(),
                frame.channels
            )));
        }
        let mut out = frame.clone();
        for row in out.data.chunks_mut(frame.channels) {
            for (ch, x) in row.iter_mut().enumerate() {
                *x = (*x - self.mean[ch]) / self.std[ch];
            }
        }
        Ok(out)
    }

    /// Standardizes and stacks frames into an `(N, K, C)` batch.
    pub fn batch(&self, frames: &[InputFrame]) -> Result<Batch> {
        let first = frames.first().ok_or_else(|| Error::InvalidArgument("empty batch".into()))?;
        let (k, c) = first.shape();
        let mut data = Vec::with_capacity(frames.len() * k * c);
        for f in frames {
            if f.shape() != (k, c) {
                return Err(Error::Shape("frames differ in shape".into()));
            }
            data.extend(self.apply(f)?.data);
        }
        Ok(Batch::from_vec(frames.len(), k, c, data))
    }
}
