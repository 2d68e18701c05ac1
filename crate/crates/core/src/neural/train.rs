//! Minibatch training with a plateau learning-rate schedule and early stop.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::data::{Minibatch, SampleGenerator};
use super::input::Standardizer;
use super::model::ReceiverModel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs_max: usize,
    pub minibatches_per_epoch: usize,
    pub minibatch_size: usize,
    /// Non-improving epochs before the learning rate is cut.
    pub plateau_patience: usize,
    pub plateau_factor: f64,
    /// Non-improving epochs before training stops.
    pub early_stop_patience: usize,
    /// Examples used to estimate the input standardizer.
    pub calibration_size: usize,
    pub ebn0_range_db: (f64, f64),
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            epochs_max: 2000,
            minibatches_per_epoch: 256,
            minibatch_size: 3000,
            plateau_patience: 50,
            plateau_factor: 0.1,
            early_stop_patience: 200,
            calibration_size: 3000,
            ebn0_range_db: (-15.0, 10.0),
            seed: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            self.epochs_max,
            self.minibatches_per_epoch,
            self.plateau_patience,
            self.early_stop_patience,
        ];
        if counts.contains(&0) {
            return Err(Error::InvalidArgument("training counts must be positive".into()));
        }
        if self.minibatch_size < 2 || self.calibration_size == 0 {
            return Err(Error::InvalidArgument("minibatches need at least 2 examples".into()));
        }
        if !(self.learning_rate > 0.0) || !(self.plateau_factor > 0.0 && self.plateau_factor < 1.0) {
            return Err(Error::InvalidArgument("learning rate and plateau factor out of range".into()));
        }
        if !(self.ebn0_range_db.0 <= self.ebn0_range_db.1) {
            return Err(Error::InvalidArgument("empty Eb/N0 range".into()));
        }
        Ok(())
    }
}

/// What the schedule decided after an epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScheduleEvent {
    Improved,
    NoImprovement,
    /// The learning rate was cut to the contained value.
    Reduced(f64),
    Stop,
}

/// Tracks the best epoch loss. A strictly lower loss counts as an
/// improvement. After `patience` non-improving epochs since the last
/// improvement or cut, the rate is multiplied by `factor`; after
/// `stop_patience` non-improving epochs in a row, training stops.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateauSchedule {
    pub lr: f64,
    pub factor: f64,
    pub patience: usize,
    pub stop_patience: usize,
    pub best: f64,
    since_cut: usize,
    since_best: usize,
}

impl PlateauSchedule {
    pub fn new(lr: f64, factor: f64, patience: usize, stop_patience: usize) -> Self {
        PlateauSchedule {
            lr,
            factor,
            patience,
            stop_patience,
            best: f64::INFINITY,
            since_cut: 0,
            since_best: 0,
        }
    }

    pub fn observe(&mut self, loss: f64) -> ScheduleEvent {
        if loss < self.best {
            self.best = loss;
            self.since_cut = 0;
            self.since_best = 0;
            return ScheduleEvent::Improved;
        }
        self.since_cut += 1;
        self.since_best += 1;
        if self.since_best >= self.stop_patience {
            ScheduleEvent::Stop
        } else if self.since_cut >= self.patience {
            self.since_cut = 0;
            self.lr *= self.factor;
            ScheduleEvent::Reduced(self.lr)
        } else {
            ScheduleEvent::NoImprovement
        }
    }

    /// Consecutive epochs without improvement.
    pub fn stale_epochs(&self) -> usize {
        self.since_best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    /// Rate used during this epoch.
    pub lr: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Snapshot taken after the lowest-loss epoch.
    pub best: ReceiverModel,
    pub best_epoch: usize,
    pub history: Vec<EpochRecord>,
    pub stopped_early: bool,
}

/// Stream index reserved for the standardizer calibration batch.
const CALIBRATION_STREAM: u64 = u64::MAX;

/// Trains `model` in place (its final state is the last epoch) and returns
/// the best snapshot. A model without a standardizer is calibrated first.
pub fn train(model: &mut ReceiverModel, config: &TrainConfig, data: &SampleGenerator) -> Result<TrainOutcome> {
    train_with(model, config, data, |_| {})
}

/// [`train`] with a callback after every epoch.
pub fn train_with(
    model: &mut ReceiverModel,
    config: &TrainConfig,
    data: &SampleGenerator,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome> {
    config.validate()?;
    if model.standardizer().is_none() {
        let calib = data.minibatch(CALIBRATION_STREAM, config.calibration_size)?;
        model.set_standardizer(Standardizer::calibrate(&calib.frames)?)?;
    }
    let sizes: Vec<usize> = model.params().iter().map(|p| p.len()).collect();
    let mut adam = Adam::new(&sizes);
    let mut schedule = PlateauSchedule::new(
        config.learning_rate,
        config.plateau_factor,
        config.plateau_patience,
        config.early_stop_patience,
    );
    let mut history = Vec::new();
    let mut best = model.clone();
    let mut best_epoch = 0;
    let mut stopped_early = false;
    let total = (config.epochs_max * config.minibatches_per_epoch) as u64;
    let fetch = |i: u64| -> Result<Minibatch> { data.minibatch(i, config.minibatch_size) };
    let mut next = fetch(0)?;

    'epochs: for epoch in 1..=config.epochs_max {
        let lr = schedule.lr;
        let mut sum = 0.0;
        for b in 0..config.minibatches_per_epoch {
            let index = ((epoch - 1) * config.minibatches_per_epoch + b) as u64;
            let current = next;
            let (prefetched, step) = rayon::join(
                || (index + 1 < total).then(|| fetch(index + 1)).transpose(),
                || -> Result<f64> {
                    let s = model.standardizer().ok_or(Error::Uncalibrated)?;
                    let x = s.batch(&current.frames)?;
                    let (loss, grads, tape) = model.loss_and_gradients(&x, &current.labels)?;
                    model.update_running_stats(&tape);
                    adam.update(model.params_mut(), &grads.0, lr);
                    Ok(loss)
                },
            );
            let loss = step?;
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!("loss at epoch {epoch} is {loss}")));
            }
            sum += loss;
            next = match prefetched? {
                Some(mb) => mb,
                None => current,
            };
        }
        let record = EpochRecord {
            epoch,
            loss: sum / config.minibatches_per_epoch as f64,
            lr,
        };
        history.push(record);
        on_epoch(&record);
        match schedule.observe(record.loss) {
            ScheduleEvent::Improved => {
                best = model.clone();
                best_epoch = epoch;
            }
            ScheduleEvent::Stop => {
                stopped_early = true;
                break 'epochs;
            }
            ScheduleEvent::Reduced(_) | ScheduleEvent::NoImprovement => {}
        }
    }
    Ok(TrainOutcome {
        best,
        best_epoch,
        history,
        stopped_early,
    })
}

/// Writes `epoch,loss,lr` rows.
pub fn write_history(path: impl AsRef<Path>, history: &[EpochRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    for r in history {
        w.serialize(r).map_err(|e| Error::Parse(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_history(path: impl AsRef<Path>) -> Result<Vec<EpochRecord>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    r.deserialize()
        .map(|row| row.map_err(|e| Error::Parse(e.to_string())))
        .collect()
}
