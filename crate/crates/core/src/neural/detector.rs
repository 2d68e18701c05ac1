//! The trained network as a slot detector.

use super::input::preprocess;
use super::model::ReceiverModel;
use crate::detect::{LlrFrame, SlotDetector};
use crate::error::{Error, Result};
use crate::scma::FactorGraph;
use crate::Complex;

#[derive(Debug, Clone)]
pub struct CnnDetector {
    pub model: ReceiverModel,
    pub graph: FactorGraph,
}

impl CnnDetector {
    pub fn new(model: ReceiverModel, graph: FactorGraph) -> Result<Self> {
        let arch = model.architecture();
        if (arch.resources, arch.users) != (graph.resources(), graph.users()) {
            return Err(Error::ArchitectureMismatch(format!(
                "model is built for {}x{}, factor graph is {}x{}",
                arch.resources,
                arch.users,
                graph.resources(),
                graph.users()
            )));
        }
        if model.standardizer().is_none() {
            return Err(Error::Uncalibrated);
        }
        Ok(CnnDetector { model, graph })
    }
}

impl SlotDetector for CnnDetector {
    fn name(&self) -> &str {
        "cnn"
    }

    /// The logits are the LLRs; the noise level is implicit in the input.
    fn detect(&self, y: &[Complex], h: &[Complex], sigma2: f64) -> Result<LlrFrame> {
        self.detect_batch(&[(y.to_vec(), h.to_vec())], sigma2)
            .map(|mut v| v.pop().expect("one frame"))
    }

    fn detect_batch(&self, slots: &[(Vec<Complex>, Vec<Complex>)], _sigma2: f64) -> Result<Vec<LlrFrame>> {
        let frames = slots
            .iter()
            .map(|(y, h)| preprocess(y, h, &self.graph))
            .collect::<Result<Vec<_>>>()?;
        let arch = self.model.architecture();
        self.model
            .predict(&frames)?
            .into_iter()
            .map(|l| LlrFrame::from_values(arch.users, arch.bits, l))
            .collect()
    }
}
