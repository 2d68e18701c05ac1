//! Small Log-MPA BLER sweep at the high-rate operating point.
//!
//! `cargo run --release -p scma-ntn --example logmpa_sweep -- [trials]`

use scma_ntn::channel::{generate_realizations, ChannelMode, Geometry, PassModel};
use scma_ntn::coding::{operating_point, RatePoint};
use scma_ntn::detect::{LogMpaDetector, LogMpaVariant};
use scma_ntn::harness::{run_bler_sweep_with, Link, SweepConfig};
use scma_ntn::scma::CodebookSet;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let trials = std::env::args().nth(1).map_or(Ok(200), |s| s.parse())?;
    let point: RatePoint = std::env::args().nth(3).map_or(Ok(RatePoint::High), |s| s.parse())?;
    let codebooks = CodebookSet::default_set();
    let channel = generate_realizations(&Geometry::default(), &PassModel::default(), 6, 2000, ChannelMode::Normalized, 7)?;
    let config = SweepConfig {
        ebn0_grid_db: std::env::args().nth(2).map_or(vec![-6.0, -3.0, 0.0, 3.0], |g| g.split(',').map(|x| x.parse().unwrap()).collect()),
        trials,
        point,
        ..SweepConfig::default()
    };
    let link = Link::new(codebooks.clone(), operating_point(point)?, channel, config.min_sum())?;
    let detector = LogMpaDetector {
        codebooks,
        iterations: config.detector_iterations,
        variant: LogMpaVariant::MaxLog,
    };
    run_bler_sweep_with(&link, &detector, &config, |p| {
        println!(
            "{:>6.1} dB  BLER {:.4} [{:.4}, {:.4}]  ATT {:.0} bit/s  ({:.1} s)",
            p.ebn0_db, p.bler, p.ci_lo, p.ci_hi, p.att_bps, p.elapsed_s
        )
    })?;
    Ok(())
}
