//! Multi-task CNN receiver.
//!
//! A shared convolutional trunk reads one preprocessed slot (received
//! samples plus the channel coefficients embedded at each user's codebook
//! support) and feeds one dense chain per user. Each chain emits that
//! user's bit logits, which are used directly as LLRs `ln(P1 / P0)`.
//!
//! Everything runs in `f64` on the CPU with explicit backward passes.

pub mod adam;
pub mod data;
pub mod detector;
pub mod input;
pub mod io;
pub mod layers;
pub mod loss;
mod model;
pub mod tensor;
pub mod train;

use serde::{Deserialize, Serialize};

pub use adam::Adam;
pub use data::SampleGenerator;
pub use detector::CnnDetector;
pub use input::{preprocess, InputFrame, Standardizer};
pub use model::{Gradients, ReceiverModel, Tape};
pub use tensor::Batch;
pub use train::{train, PlateauSchedule, ScheduleEvent, TrainConfig, TrainOutcome};

use crate::error::{Error, Result};

/// Layer sizes of a receiver model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Architecture {
    pub resources: usize,
    pub users: usize,
    pub bits: usize,
    /// Width-`kernel` conv blocks before the first pooling.
    pub conv3_layers: usize,
    pub conv3_filters: usize,
    pub kernel: usize,
    /// 1x1 conv blocks before the second pooling.
    pub conv1_layers: usize,
    pub conv1_filters: usize,
    /// Hidden dense blocks per user chain.
    pub dense_layers: usize,
    pub dense_units: usize,
}

/// Named model size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Full,
    Small,
}

impl std::str::FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Profile::Full),
            "small" => Ok(Profile::Small),
            other => Err(Error::InvalidArgument(format!("unknown model profile {other:?}"))),
        }
    }
}

/// One MAC-bearing layer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum LayerShape {
    Conv1d { len: usize, depth: usize, width: usize, filters: usize },
    Dense { inputs: usize, outputs: usize },
}

impl LayerShape {
    /// Multiply-accumulates for one forward pass of one example.
    pub fn macs(&self) -> u64 {
        match *self {
            LayerShape::Conv1d {
                len,
                depth,
                width,
                filters,
            } => (len * depth * width * filters) as u64,
            LayerShape::Dense { inputs, outputs } => (inputs * outputs) as u64,
        }
    }
}

impl Architecture {
    /// The 8 x 256 / 2 x 512 / 3 x 256 network for a 4 x 6 system.
    pub fn full(resources: usize, users: usize, bits: usize) -> Self {
        Architecture {
            resources,
            users,
            bits,
            conv3_layers: 8,
            conv3_filters: 256,
            kernel: 3,
            conv1_layers: 2,
            conv1_filters: 512,
            dense_layers: 3,
            dense_units: 256,
        }
    }

    /// Reduced widths for quick training: two 32-filter conv blocks in each
    /// trunk stage and 32-unit chains.
    pub fn small(resources: usize, users: usize, bits: usize) -> Self {
        Architecture {
            conv3_layers: 2,
            conv3_filters: 32,
            conv1_layers: 2,
            conv1_filters: 32,
            dense_units: 32,
            ..Architecture::full(resources, users, bits)
        }
    }

    pub fn profile(profile: Profile, resources: usize, users: usize, bits: usize) -> Self {
        match profile {
            Profile::Full => Architecture::full(resources, users, bits),
            Profile::Small => Architecture::small(resources, users, bits),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.resources == 0 || self.resources % 4 != 0 {
            return Err(Error::InvalidArgument(format!(
                "{} resources cannot be pooled twice down to a vector",
                self.resources
            )));
        }
        if self.kernel % 2 == 0 {
            return Err(Error::InvalidArgument(format!("kernel length {} must be odd", self.kernel)));
        }
        let counts = [
            self.users,
            self.bits,
            self.conv3_layers,
            self.conv3_filters,
            self.conv1_filters,
            self.dense_units,
        ];
        if counts.contains(&0) {
            return Err(Error::InvalidArgument("architecture sizes must be positive".into()));
        }
        Ok(())
    }

    /// Channels of the preprocessed input frame: Re/Im of y and of each h.
    pub fn input_channels(&self) -> usize {
        2 * (self.users + 1)
    }

    pub fn outputs(&self) -> usize {
        self.bits * self.users
    }

    /// Length of the flattened trunk output.
    pub fn feature_len(&self) -> usize {
        self.resources / 4 * self.trunk_channels()
    }

    fn trunk_channels(&self) -> usize {
        if self.conv1_layers > 0 {
            self.conv1_filters
        } else {
            self.conv3_filters
        }
    }

    /// MAC-bearing layers in forward order, each with a name.
    pub fn layers(&self) -> Vec<(String, LayerShape)> {
        let mut out = Vec::new();
        let mut depth = self.input_channels();
        for i in 0..self.conv3_layers {
            out.push((
                format!("conv3.{i}"),
                LayerShape::Conv1d {
                    len: self.resources,
                    depth,
                    width: self.kernel,
                    filters: self.conv3_filters,
                },
            ));
            depth = self.conv3_filters;
        }
        for i in 0..self.conv1_layers {
            out.push((
                format!("conv1.{i}"),
                LayerShape::Conv1d {
                    len: self.resources / 2,
                    depth,
                    width: 1,
                    filters: self.conv1_filters,
                },
            ));
            depth = self.conv1_filters;
        }
        for u in 0..self.users {
            let mut inputs = self.feature_len();
            for d in 0..self.dense_layers {
                out.push((
                    format!("chain.{u}.dense.{d}"),
                    LayerShape::Dense {
                        inputs,
                        outputs: self.dense_units,
                    },
                ));
                inputs = self.dense_units;
            }
            out.push((
                format!("chain.{u}.head"),
                LayerShape::Dense {
                    inputs,
                    outputs: self.bits,
                },
            ));
        }
        out
    }
}
