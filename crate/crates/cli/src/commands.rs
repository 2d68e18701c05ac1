use std::path::{Path, PathBuf};

use scma_ntn::channel::{generate_realizations, ChannelRealization};
use scma_ntn::coding::{operating_point, operating_point_from_alist, OperatingPoint, RatePoint};
use scma_ntn::detect::{LogMpaDetector, MpaDetector, OracleDetector, SlotDetector};
use scma_ntn::harness::{
    att, complexity_report, delta_at, link_checksums, read_rows, run_bler_sweep_with, write_rows, CsvRow,
    CurvePoint, Link, Manifest, ReceiverKind, T_TB_S,
};
use scma_ntn::neural::io::{load_weights, save_weights, sha256_hex};
use scma_ntn::neural::train::{read_history, EpochRecord, train_with, write_history};
use scma_ntn::neural::{Architecture, CnnDetector, ReceiverModel, SampleGenerator};
use scma_ntn::scma::{CodebookSet, LoadOptions};

use crate::config::RunConfig;
use crate::error::CliError;

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))
}

fn file_checksum(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::missing(path, e))?;
    Ok(sha256_hex(&bytes))
}

fn require(path: &Path, what: &str) -> Result<(), CliError> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::Missing {
            path: path.to_path_buf(),
            reason: format!("{what} not found"),
        })
    }
}

fn codebooks(config: &RunConfig) -> Result<CodebookSet, CliError> {
    match &config.codebook {
        Some(path) => {
            require(path, "codebook file")?;
            Ok(CodebookSet::load(path, LoadOptions::default())?)
        }
        None => Ok(CodebookSet::default_set()),
    }
}

fn operating(config: &RunConfig, point: RatePoint) -> Result<OperatingPoint, CliError> {
    let custom = match point {
        RatePoint::High => &config.code_high,
        RatePoint::Low => &config.code_low,
    };
    match custom {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::missing(path, e))?;
            Ok(operating_point_from_alist(point, &text)?)
        }
        None => Ok(operating_point(point)?),
    }
}

fn load_channel(path: &Path, what: &str) -> Result<ChannelRealization, CliError> {
    require(path, what)?;
    Ok(ChannelRealization::load(path)?)
}

fn architecture(config: &RunConfig, cb: &CodebookSet) -> Result<Architecture, CliError> {
    let arch = Architecture::profile(config.model.profile, cb.resources(), cb.users(), cb.bits());
    arch.validate()?;
    Ok(arch)
}

fn manifest_path(config: &RunConfig, name: &str) -> PathBuf {
    config.output_dir.join(format!("{name}.manifest.json"))
}

fn finish(mut manifest: Manifest, config: &RunConfig, name: &str, outputs: &[&Path]) -> Result<(), CliError> {
    for o in outputs {
        manifest.checksums.insert(format!("output:{}", o.display()), file_checksum(o)?);
    }
    manifest.outputs = outputs.iter().map(|p| p.display().to_string()).collect();
    let path = manifest_path(config, name);
    manifest.write(&path)?;
    eprintln!("manifest: {}", path.display());
    Ok(())
}

pub fn gen_channel(config: &RunConfig, command: &str) -> Result<(), CliError> {
    create_dir(&config.output_dir)?;
    let c = &config.channel;
    let mut outputs = Vec::new();
    for (path, seed) in [(config.train_file(), c.train_seed), (config.test_file(), c.test_seed)] {
        let h = generate_realizations(&config.geometry, &config.pass, c.users, c.symbols, c.mode, seed)?;
        if let Some(dir) = path.parent() {
            create_dir(dir)?;
        }
        h.save(&path)?;
        println!("wrote {} ({} users x {} symbols, seed {seed})", path.display(), c.users, c.symbols);
        outputs.push(path);
    }
    let refs: Vec<&Path> = outputs.iter().map(PathBuf::as_path).collect();
    finish(Manifest::new(command, config)?, config, "gen-channel", &refs)
}

pub fn train(config: &RunConfig, resume: bool, command: &str) -> Result<(), CliError> {
    create_dir(&config.output_dir)?;
    let cb = codebooks(config)?;
    let arch = architecture(config, &cb)?;
    let channel = load_channel(&config.train_file(), "train channel dataset")?;
    // noise levels are calibrated against the code rate of the configured
    // operating point
    let rate = operating(config, config.sweep.point)?.code.rate();
    let mut data = SampleGenerator::new(cb, channel.clone(), config.train.ebn0_range_db, rate, config.train.seed)?;
    data.reference = config.ebn0_reference;

    let weights = config.weights_file();
    let mut model = if resume {
        require(&weights, "weights file to resume from")?;
        load_weights(&weights, Some(&arch))?
    } else {
        ReceiverModel::new(arch, config.model.seed)?
    };
    let started = std::time::Instant::now();
    let outcome = train_with(&mut model, &config.train, &data, |r| {
        eprintln!(
            "epoch {:>5}  loss {:.6}  lr {:.1e}  {:.0} s",
            r.epoch,
            r.loss,
            r.lr,
            started.elapsed().as_secs_f64()
        )
    })?;
    if outcome.history.iter().any(|r| !r.loss.is_finite()) {
        return Err(CliError::Numerical("training produced a non-finite loss".into()));
    }
    if let Some(dir) = weights.parent() {
        create_dir(dir)?;
    }
    save_weights(&outcome.best, &weights)?;
    let history = config.output_dir.join("loss_history.csv");
    // a resumed run extends the earlier history rather than replacing it
    let mut rows = if resume && history.exists() { read_history(&history)? } else { Vec::new() };
    let offset = rows.last().map_or(0, |r| r.epoch);
    rows.extend(outcome.history.iter().map(|r| EpochRecord { epoch: r.epoch + offset, ..*r }));
    write_history(&history, &rows)?;
    println!(
        "best epoch {} (loss {:.6}), {} epochs{}; weights {}",
        outcome.best_epoch,
        outcome.history.get(outcome.best_epoch.saturating_sub(1)).map_or(f64::NAN, |r| r.loss),
        outcome.history.len(),
        if outcome.stopped_early { ", stopped early" } else { "" },
        weights.display()
    );

    let mut manifest = Manifest::new(command, config)?;
    manifest.checksums.insert("channel".into(), sha256_hex(channel.to_csv().as_bytes()));
    manifest.extra = serde_json::json!({
        "resumed": resume,
        "best_epoch": outcome.best_epoch,
        "stopped_early": outcome.stopped_early,
        "parameters": outcome.best.parameter_count(),
    });
    finish(manifest, config, "train", &[&weights, &history])
}

fn detector(config: &RunConfig, cb: &CodebookSet) -> Result<(Box<dyn SlotDetector>, Option<String>), CliError> {
    let iterations = config.sweep.detector_iterations;
    Ok(match config.sweep.receiver {
        ReceiverKind::Cnn => {
            let weights = config.weights_file();
            require(&weights, "weights file (required by the cnn receiver)")?;
            let model = load_weights(&weights, Some(&architecture(config, cb)?))?;
            let checksum = file_checksum(&weights)?;
            (Box::new(CnnDetector::new(model, cb.graph().clone())?), Some(checksum))
        }
        ReceiverKind::Logmpa => (
            Box::new(LogMpaDetector {
                codebooks: cb.clone(),
                iterations,
                variant: config.log_mpa_variant,
            }),
            None,
        ),
        ReceiverKind::Mpa => (
            Box::new(MpaDetector {
                codebooks: cb.clone(),
                iterations,
            }),
            None,
        ),
        ReceiverKind::Oracle => (Box::new(OracleDetector { codebooks: cb.clone() }), None),
    })
}

pub fn evaluate(config: &RunConfig, command: &str) -> Result<(), CliError> {
    create_dir(&config.output_dir)?;
    let cb = codebooks(config)?;
    let channel = load_channel(&config.test_file(), "test channel dataset")?;
    let (detector, model_checksum) = detector(config, &cb)?;
    let point = config.sweep.point;
    let mut link = Link::new(cb, operating(config, point)?, channel, config.sweep.min_sum())?;
    link.reference = config.ebn0_reference;

    let result = run_bler_sweep_with(&link, detector.as_ref(), &config.sweep, |p| {
        println!(
            "{:>7.2} dB  BLER {:.5} [{:.5}, {:.5}]  ATT {:>9.0} bit/s  {:.1} s",
            p.ebn0_db, p.bler, p.ci_lo, p.ci_hi, p.att_bps, p.elapsed_s
        )
    })?;
    let stem = format!("bler_{}_{}", config.sweep.receiver.as_str(), point.as_str());
    let csv = config.output_dir.join(format!("{stem}.csv"));
    result.write_csv(&csv)?;
    let json = config.output_dir.join(format!("{stem}.json"));
    let text = serde_json::to_string_pretty(&result).map_err(|e| CliError::Config(e.to_string()))?;
    std::fs::write(&json, text + "\n").map_err(|e| CliError::missing(&json, e))?;

    let mut manifest = Manifest::new(command, config)?;
    manifest.checksums.extend(link_checksums(&link));
    if let Some(c) = model_checksum {
        manifest.checksums.insert("model".into(), c);
    }
    finish(manifest, config, &stem, &[&csv, &json])
}

pub fn throughput(config: &RunConfig, input: &Path, command: &str) -> Result<(), CliError> {
    create_dir(&config.output_dir)?;
    require(input, "BLER results file")?;
    let rows = read_rows(input)?;
    let tb_bits = operating(config, config.sweep.point)?.tb_bits;
    let users = config.channel.users;
    let mut out = Vec::with_capacity(rows.len());
    println!("{:>8} {:>10} {:>14}", "Eb/N0", "BLER", "ATT [bit/s]");
    for r in &rows {
        let att_bps = att(r.bler, tb_bits, T_TB_S, users)?;
        println!("{:>8.2} {:>10.5} {:>14.0}", r.ebn0_db, r.bler, att_bps);
        out.push(CsvRow { att_bps, ..*r });
    }
    let stem = input.file_stem().map_or("bler".into(), |s| s.to_string_lossy().into_owned());
    let path = config.output_dir.join(format!("att_{stem}.csv"));
    write_rows(&path, &out)?;
    let mut manifest = Manifest::new(command, config)?;
    manifest.checksums.insert("input".into(), file_checksum(input)?);
    finish(manifest, config, &format!("att_{stem}"), &[&path])
}

fn curve(path: &Path) -> Result<Vec<CurvePoint>, CliError> {
    require(path, "BLER results file")?;
    Ok(read_rows(path)?
        .into_iter()
        .map(|r| CurvePoint {
            ebn0_db: r.ebn0_db,
            bler: r.bler,
            ci_lo: r.ci_lo,
            ci_hi: r.ci_hi,
        })
        .collect())
}

pub fn compare(config: &RunConfig, a: &Path, b: &Path, target: f64, command: &str) -> Result<(), CliError> {
    create_dir(&config.output_dir)?;
    let report = delta_at(&curve(a)?, &curve(b)?, target);
    let show = |x: Option<f64>| x.map_or("not reached".to_string(), |v| format!("{v:.2} dB"));
    println!("target BLER {target}");
    println!("  {}: {}", a.display(), show(report.a.ebn0_db));
    println!("  {}: {}", b.display(), show(report.b.ebn0_db));
    println!(
        "  gap {} (CI range {} .. {})",
        show(report.delta_db),
        show(report.delta_lo_db),
        show(report.delta_hi_db)
    );
    let path = config.output_dir.join("delta.json");
    let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Config(e.to_string()))?;
    std::fs::write(&path, text + "\n").map_err(|e| CliError::missing(&path, e))?;
    let mut manifest = Manifest::new(command, &serde_json::json!({ "a": a, "b": b, "target": target }))?;
    manifest.checksums.insert("a".into(), file_checksum(a)?);
    manifest.checksums.insert("b".into(), file_checksum(b)?);
    finish(manifest, config, "delta", &[&path])
}

pub fn complexity(config: &RunConfig, command: &str) -> Result<(), CliError> {
    create_dir(&config.output_dir)?;
    let cb = codebooks(config)?;
    let arch = architecture(config, &cb)?;
    let report = complexity_report(&arch, &cb, config.sweep.detector_iterations)?;
    print!("{}", report.render());
    let path = config.output_dir.join("complexity.json");
    let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Config(e.to_string()))?;
    std::fs::write(&path, text + "\n").map_err(|e| CliError::missing(&path, e))?;
    finish(Manifest::new(command, config)?, config, "complexity", &[&path])
}
