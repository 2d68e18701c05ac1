//! Multiply-accumulate accounting for the CNN receiver and operation counts
//! for Log-MPA.

use serde::Serialize;

use crate::detect::{log_mpa_counted, DetectorInput, LogMpaVariant, OpCounts};
use crate::error::Result;
use crate::neural::{Architecture, LayerShape};
use crate::scma::CodebookSet;
use crate::Complex;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerMacs {
    pub name: String,
    pub shape: LayerShape,
    pub macs: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MacReport {
    pub layers: Vec<LayerMacs>,
    pub total: u64,
}

/// MACs per forward pass: `L * D * W * N` per conv layer and `N_in * N_out`
/// per dense layer. Normalization, activations and pooling are not counted.
pub fn count_macs(arch: &Architecture) -> MacReport {
    let layers: Vec<LayerMacs> = arch
        .layers()
        .into_iter()
        .map(|(name, shape)| LayerMacs {
            macs: shape.macs(),
            name,
            shape,
        })
        .collect();
    MacReport {
        total: layers.iter().map(|l| l.macs).sum(),
        layers,
    }
}

/// Operation counts of one Log-MPA run on an arbitrary slot. The counts do
/// not depend on the received values.
pub fn log_mpa_ops(codebooks: &CodebookSet, iterations: usize, variant: LogMpaVariant) -> Result<OpCounts> {
    let y: Vec<Complex> = (0..codebooks.resources()).map(|k| Complex::new(0.1 * k as f64, -0.2)).collect();
    let h = vec![Complex::new(1.0, 0.0); codebooks.users()];
    let input = DetectorInput::new(&y, &h, 0.5, codebooks)?;
    Ok(log_mpa_counted(&input, iterations, variant)?.1)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplexityReport {
    pub cnn: MacReport,
    pub log_mpa: OpCounts,
    pub log_mpa_iterations: usize,
    pub convention: &'static str,
    /// CNN MACs over Log-MPA multiplications.
    pub ratio: f64,
}

pub fn complexity_report(arch: &Architecture, codebooks: &CodebookSet, iterations: usize) -> Result<ComplexityReport> {
    let cnn = count_macs(arch);
    let log_mpa = log_mpa_ops(codebooks, iterations, LogMpaVariant::MaxLog)?;
    Ok(ComplexityReport {
        ratio: cnn.total as f64 / log_mpa.multiplications as f64,
        cnn,
        log_mpa,
        log_mpa_iterations: iterations,
        convention: OpCounts::CONVENTION,
    })
}

impl ComplexityReport {
    /// Plain-text table.
    pub fn render(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        let _ = writeln!(s, "{:<20} {:>12}", "layer", "MACs");
        for l in &self.cnn.layers {
            let _ = writeln!(s, "{:<20} {:>12}", l.name, l.macs);
        }
        let _ = writeln!(s, "{:<20} {:>12}", "total", self.cnn.total);
        let _ = writeln!(
            s,
            "\nLog-MPA, {} iterations: {} multiplications, {} additions, {} comparisons, {} exp/log",
            self.log_mpa_iterations,
            self.log_mpa.multiplications,
            self.log_mpa.additions,
            self.log_mpa.comparisons,
            self.log_mpa.exponentials
        );
        let _ = writeln!(s, "counting convention: {}", self.convention);
        let _ = writeln!(s, "CNN MACs / Log-MPA multiplications: {:.1}", self.ratio);
        s
    }
}
