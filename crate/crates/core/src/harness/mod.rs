//! End-to-end Monte Carlo evaluation: transport-block trials, BLER sweeps
//! with confidence intervals, throughput and complexity accounting.
//!
//! Trial `t` of a sweep always draws from random stream `t` of the sweep
//! seed, at every Eb/N0 and for every receiver. Curves of different
//! receivers run with the same seed are therefore paired: they see the same
//! transport blocks, channel windows and (scaled) noise.

pub mod complexity;
pub mod stats;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use complexity::{complexity_report, count_macs, log_mpa_ops, ComplexityReport, MacReport};
pub use stats::{att, delta_at, ebn0_at, wilson, CurvePoint, DeltaReport, T_TB_S, Z95};

use crate::channel::{superimpose, ChannelRealization, EbN0Reference, NoiseConfig};
use crate::coding::{MinSumOptions, OperatingPoint, RatePoint, TransportBlock};
use crate::detect::SlotDetector;
use crate::error::{Error, Result};
use crate::rng::{self, SimRng};
use crate::scma::{extract_slots, map_to_grid, symbols_per_tb, CodebookSet, SUBCARRIERS_PER_PRB};

/// Receiver selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReceiverKind {
    Cnn,
    Logmpa,
    Mpa,
    Oracle,
}

impl ReceiverKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ReceiverKind::Cnn => "cnn",
            ReceiverKind::Logmpa => "logmpa",
            ReceiverKind::Mpa => "mpa",
            ReceiverKind::Oracle => "oracle",
        }
    }
}

impl std::str::FromStr for ReceiverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cnn" => Ok(ReceiverKind::Cnn),
            "logmpa" => Ok(ReceiverKind::Logmpa),
            "mpa" => Ok(ReceiverKind::Mpa),
            "oracle" => Ok(ReceiverKind::Oracle),
            other => Err(Error::InvalidArgument(format!("unknown receiver {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub ebn0_grid_db: Vec<f64>,
    /// Monte Carlo trials per grid point; each carries one block per user.
    pub trials: usize,
    pub point: RatePoint,
    pub receiver: ReceiverKind,
    pub seed: u64,
    /// Message-passing iterations of the classical detectors.
    pub detector_iterations: usize,
    pub decoder_iterations: usize,
    pub decoder_scale: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            ebn0_grid_db: (-15..=10).map(f64::from).collect(),
            trials: 10_000,
            point: RatePoint::High,
            receiver: ReceiverKind::Logmpa,
            seed: 2024,
            detector_iterations: 10,
            decoder_iterations: 25,
            decoder_scale: 0.75,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidArgument("at least one Monte Carlo trial is needed".into()));
        }
        if self.ebn0_grid_db.is_empty() || self.ebn0_grid_db.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("Eb/N0 grid must be nonempty and finite".into()));
        }
        Ok(())
    }

    pub fn min_sum(&self) -> MinSumOptions {
        MinSumOptions {
            scale: self.decoder_scale,
            max_iterations: self.decoder_iterations,
        }
    }
}

/// Everything a trial needs apart from the detector.
#[derive(Debug, Clone)]
pub struct Link {
    pub codebooks: CodebookSet,
    pub op: OperatingPoint,
    /// Channel dataset; each trial uses a random window of it.
    pub channel: ChannelRealization,
    pub decoder: MinSumOptions,
    pub reference: EbN0Reference,
    symbols: usize,
}

impl Link {
    pub fn new(
        codebooks: CodebookSet,
        op: OperatingPoint,
        channel: ChannelRealization,
        decoder: MinSumOptions,
    ) -> Result<Self> {
        let symbols = symbols_per_tb(op.code.n(), codebooks.bits(), SUBCARRIERS_PER_PRB)?;
        if channel.users() != codebooks.users() {
            return Err(Error::Shape(format!(
                "channel dataset has {} users, codebooks {}",
                channel.users(),
                codebooks.users()
            )));
        }
        if channel.symbols() < symbols {
            return Err(Error::Shape(format!(
                "channel dataset has {} symbols, a block needs {symbols}",
                channel.symbols()
            )));
        }
        Ok(Link {
            codebooks,
            op,
            channel,
            decoder,
            reference: EbN0Reference::default(),
            symbols,
        })
    }

    /// Symbol times per transport block.
    pub fn symbols(&self) -> usize {
        self.symbols
    }

    pub fn sigma2(&self, ebn0_db: f64) -> Result<f64> {
        let energy =
            self.codebooks.books().iter().map(|b| b.mean_energy()).sum::<f64>() / self.codebooks.users() as f64;
        self.reference.sigma2(
            ebn0_db,
            self.codebooks.bits(),
            self.op.code.rate(),
            energy,
            self.channel.mean_power_all(),
            self.codebooks.users(),
        )
    }
}

/// One transport block per user through the full chain. Returns whether
/// each user's decoded block differs from the transmitted one.
pub fn run_tb_trial(link: &Link, detector: &dyn SlotDetector, ebn0_db: f64, rng: &mut SimRng) -> Result<Vec<bool>> {
    let sigma2 = link.sigma2(ebn0_db)?;
    run_tb_trial_sigma2(link, detector, sigma2, rng)
}

/// [`run_tb_trial`] at an explicit noise variance.
pub fn run_tb_trial_sigma2(
    link: &Link,
    detector: &dyn SlotDetector,
    sigma2: f64,
    rng: &mut SimRng,
) -> Result<Vec<bool>> {
    let (k, m, users) = (link.codebooks.resources(), link.codebooks.bits(), link.codebooks.users());
    let mut blocks = Vec::with_capacity(users);
    let mut grids = Vec::with_capacity(users);
    for book in link.codebooks.books() {
        let tb = TransportBlock((0..link.op.tb_bits).map(|_| rng.random_range(0..2u8)).collect());
        let coded = link.op.encode_tb(&tb)?;
        let codewords = coded.chunks(m).map(|bits| book.encode(bits)).collect::<Result<Vec<_>>>()?;
        grids.push(map_to_grid(&codewords, k, link.symbols)?);
        blocks.push(tb);
    }
    let start = rng.random_range(0..=link.channel.symbols() - link.symbols);
    let window = link.channel.window(start, link.symbols)?;
    let y = superimpose(&grids, &window, NoiseConfig::new(sigma2)?, rng)?;

    let slots: Vec<_> = extract_slots(&y, k)
        .into_iter()
        .enumerate()
        .map(|(q, ys)| (ys, window.column(q / SUBCARRIERS_PER_PRB)))
        .collect();
    let frames = detector.detect_batch(&slots, sigma2)?;
    let mut errors = Vec::with_capacity(users);
    for (u, tb) in blocks.iter().enumerate() {
        let llrs: Vec<f64> = frames.iter().flat_map(|f| f.user(u).iter().copied()).collect();
        let (decoded, _) = link.op.decode_llr(&llrs, &link.decoder)?;
        errors.push(decoded != *tb);
    }
    Ok(errors)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub ebn0_db: f64,
    pub bler: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub att_bps: f64,
    pub n_trials: usize,
    pub block_errors: u64,
    pub per_user_bler: Vec<f64>,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub receiver: String,
    pub point: RatePoint,
    pub tb_bits: usize,
    pub users: usize,
    pub seed: u64,
    pub points: Vec<SweepPoint>,
}

/// Row of the results CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub ebn0_db: f64,
    pub bler: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub att_bps: f64,
    pub n_trials: usize,
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Parse(format!("{}: {e}", path.display()))
}

impl SweepResult {
    pub fn curve(&self) -> Vec<CurvePoint> {
        self.points
            .iter()
            .map(|p| CurvePoint {
                ebn0_db: p.ebn0_db,
                bler: p.bler,
                ci_lo: p.ci_lo,
                ci_hi: p.ci_hi,
            })
            .collect()
    }

    pub fn rows(&self) -> Vec<CsvRow> {
        self.points
            .iter()
            .map(|p| CsvRow {
                ebn0_db: p.ebn0_db,
                bler: p.bler,
                ci_lo: p.ci_lo,
                ci_hi: p.ci_hi,
                att_bps: p.att_bps,
                n_trials: p.n_trials,
            })
            .collect()
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_rows(path, &self.rows())
    }
}

pub fn write_rows(path: impl AsRef<Path>, rows: &[CsvRow]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_rows(path: impl AsRef<Path>) -> Result<Vec<CsvRow>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    r.deserialize().map(|row| row.map_err(|e| csv_err(path, e))).collect()
}

/// BLER versus Eb/N0 over the configured grid.
pub fn run_bler_sweep(link: &Link, detector: &dyn SlotDetector, config: &SweepConfig) -> Result<SweepResult> {
    run_bler_sweep_with(link, detector, config, |_| {})
}

/// [`run_bler_sweep`] with a callback after every grid point.
pub fn run_bler_sweep_with(
    link: &Link,
    detector: &dyn SlotDetector,
    config: &SweepConfig,
    mut on_point: impl FnMut(&SweepPoint),
) -> Result<SweepResult> {
    config.validate()?;
    if link.op.point != config.point {
        return Err(Error::InvalidArgument(format!(
            "link is built for the {} operating point, sweep asks for {}",
            link.op.point.as_str(),
            config.point.as_str()
        )));
    }
    let users = link.codebooks.users();
    let mut points = Vec::with_capacity(config.ebn0_grid_db.len());
    for &ebn0 in &config.ebn0_grid_db {
        let started = Instant::now();
        let outcomes: Vec<Vec<bool>> = (0..config.trials)
            .into_par_iter()
            .map(|t| {
                let mut r = rng::task_stream(config.seed, t as u64);
                run_tb_trial(link, detector, ebn0, &mut r)
            })
            .collect::<Result<_>>()?;
        let mut per_user = vec![0u64; users];
        for o in &outcomes {
            for (u, &e) in o.iter().enumerate() {
                per_user[u] += u64::from(e);
            }
        }
        let errors: u64 = per_user.iter().sum();
        let blocks = (config.trials * users) as u64;
        let bler = errors as f64 / blocks as f64;
        let (ci_lo, ci_hi) = wilson(errors, blocks, Z95);
        let point = SweepPoint {
            ebn0_db: ebn0,
            bler,
            ci_lo,
            ci_hi,
            att_bps: att(bler, link.op.tb_bits, T_TB_S, users)?,
            n_trials: config.trials,
            block_errors: errors,
            per_user_bler: per_user.iter().map(|&e| e as f64 / config.trials as f64).collect(),
            elapsed_s: started.elapsed().as_secs_f64(),
        };
        on_point(&point);
        points.push(point);
    }
    Ok(SweepResult {
        receiver: detector.name().to_string(),
        point: config.point,
        tb_bits: link.op.tb_bits,
        users,
        seed: config.seed,
        points,
    })
}

/// Reproducibility record written next to every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub crate_version: String,
    pub config: serde_json::Value,
    /// SHA-256 of every input artifact, keyed by a short label.
    pub checksums: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    #[serde(default)]
    pub extra: serde_json::Value,
}

impl Manifest {
    pub fn new(command: &str, config: &impl Serialize) -> Result<Self> {
        Ok(Manifest {
            command: command.to_string(),
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            config: serde_json::to_value(config).map_err(|e| Error::Parse(e.to_string()))?,
            checksums: BTreeMap::new(),
            outputs: Vec::new(),
            extra: serde_json::Value::Null,
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

/// Checksums of the codebooks, code and channel dataset of a link.
pub fn link_checksums(link: &Link) -> BTreeMap<String, String> {
    use crate::neural::io::sha256_hex;
    let codebook_text = serde_json::to_string(
        &link
            .codebooks
            .books()
            .iter()
            .map(|b| b.codewords().iter().map(|c| c.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>()).collect::<Vec<_>>())
            .collect::<Vec<_>>(),
    )
    .unwrap_or_default();
    BTreeMap::from([
        ("codebooks".to_string(), sha256_hex(codebook_text.as_bytes())),
        (
            "ldpc".to_string(),
            sha256_hex(crate::coding::shipped_alist(link.op.point).as_bytes()),
        ),
        ("channel".to_string(), sha256_hex(link.channel.to_csv().as_bytes())),
    ])
}
