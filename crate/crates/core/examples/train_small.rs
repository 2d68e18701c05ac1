//! Trains the small receiver profile and reports its uncoded bit error
//! rate on a held-out channel dataset.
//!
//! `cargo run --release -p scma-ntn --example train_small -- [epochs] [batches] [batch_size]`
//!
//! `LR` sets the Adam learning rate and `LO` the low end of the training
//! Eb/N0 range (the high end is 10 dB).

use scma_ntn::channel::{generate_realizations, ChannelMode, Geometry, PassModel};
use scma_ntn::neural::train::train_with;
use scma_ntn::neural::{Architecture, ReceiverModel, SampleGenerator, TrainConfig};
use scma_ntn::scma::CodebookSet;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let arg = |i: usize, d: usize| std::env::args().nth(i).map_or(Ok(d), |s| s.parse());
    let config = TrainConfig {
        epochs_max: arg(1, 30)?,
        minibatches_per_epoch: arg(2, 32)?,
        minibatch_size: arg(3, 256)?,
        calibration_size: 3000,
        seed: 1,
        learning_rate: std::env::var("LR").map_or(1e-3, |v| v.parse().unwrap()),
        ebn0_range_db: (std::env::var("LO").map_or(-15.0, |v| v.parse().unwrap()), 10.0),
        ..TrainConfig::default()
    };
    let codebooks = CodebookSet::default_set();
    let geometry = Geometry::default();
    let train_ch = generate_realizations(&geometry, &PassModel::default(), 6, 20_000, ChannelMode::Normalized, 101)?;
    let test_ch = generate_realizations(&geometry, &PassModel::default(), 6, 20_000, ChannelMode::Normalized, 202)?;
    let rate = 168.0 / 288.0;
    let data = SampleGenerator::new(codebooks.clone(), train_ch, config.ebn0_range_db, rate, config.seed)?;
    let mut model = ReceiverModel::new(Architecture::small(4, 6, 2), config.seed)?;
    let started = std::time::Instant::now();
    let out = train_with(&mut model, &config, &data, |r| {
        println!("epoch {:>3}  loss {:.5}  lr {:.0e}  ({:.0} s)", r.epoch, r.loss, r.lr, started.elapsed().as_secs_f64())
    })?;

    let test = SampleGenerator::new(codebooks, test_ch, (10.0, 10.0), rate, 99)?;
    for ebn0 in [-5.0, 0.0, 5.0, 10.0] {
        let mb = test.minibatch_at(0, 5000, ebn0)?;
        let logits: Vec<f64> = out.best.predict(&mb.frames)?.into_iter().flatten().collect();
        let errors = logits
            .iter()
            .zip(&mb.labels)
            .filter(|(&l, &b)| u8::from(l > 0.0) != b)
            .count();
        let width = logits.len() / mb.frames.len();
        let per_user: Vec<String> = (0..width / 2)
            .map(|u| {
                let e = logits
                    .iter()
                    .zip(&mb.labels)
                    .enumerate()
                    .filter(|(i, (&l, &b))| (i % width) / 2 == u && u8::from(l > 0.0) != b)
                    .count();
                format!("{:.3}", e as f64 / (2 * mb.frames.len()) as f64)
            })
            .collect();
        println!(
            "Eb/N0 {ebn0:>5.1} dB: uncoded BER {:.4}  per user [{}]",
            errors as f64 / logits.len() as f64,
            per_user.join(" ")
        );
    }
    Ok(())
}
