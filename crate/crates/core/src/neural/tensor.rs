/// Batch of `(length, channels)` feature maps, row-major as
/// `[example][position][channel]`. Dense activations use `length = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub examples: usize,
    pub length: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl Batch {
    pub fn zeros(examples: usize, length: usize, channels: usize) -> Self {
        Batch {
            examples,
            length,
            channels,
            data: vec![0.0; examples * length * channels],
        }
    }

    pub fn from_vec(examples: usize, length: usize, channels: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), examples * length * channels, "batch data length");
        Batch {
            examples,
            length,
            channels,
            data,
        }
    }

    /// Values per example.
    pub fn features(&self) -> usize {
        self.length * self.channels
    }

    pub fn example(&self, n: usize) -> &[f64] {
        let f = self.features();
        &self.data[n * f..(n + 1) * f]
    }

    /// Same shape with empty data, for struct-update construction.
    pub(crate) fn clone_shape(&self) -> Batch {
        Batch {
            examples: self.examples,
            length: self.length,
            channels: self.channels,
            data: Vec::new(),
        }
    }

    /// Reinterprets each example as a flat feature vector.
    pub fn flatten(self) -> Batch {
        let features = self.features();
        Batch {
            examples: self.examples,
            length: 1,
            channels: features,
            data: self.data,
        }
    }
}

/// Examples per work chunk. Parallel reductions sum chunk partials in chunk
/// order, so results do not depend on the thread count.
pub(crate) const CHUNK: usize = 16;
